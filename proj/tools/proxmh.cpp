// proxmh: run, compare and tune proximal Metropolis-Hastings experiments.
//
//   proxmh run <config.json> [--seed N] [--out-dir DIR] [--threads N]
//   proxmh compare <a.json> <b.json> ... [--out-dir DIR]
//   proxmh tune <config.json>
//   proxmh selftest
//
// Exit codes: 0 success, 1 config error, 2 numeric failure, 3 I/O error.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "proxmh/experiment.hpp"
#include "proxmh/selftest.hpp"

namespace {

enum ExitCode { kOk = 0, kConfig = 1, kNumeric = 2, kIo = 3 };

struct GlobalFlags {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    int threads = 0;

    proxmh::RunOptions options() const {
        proxmh::RunOptions o;
        o.seed = seed;
        if (out_dir) o.out_dir = *out_dir;
        o.threads = threads;
        return o;
    }
};

int report(const char* kind, const std::exception& e, int code) {
    std::cerr << "proxmh: " << kind << ": " << e.what() << '\n';
    return code;
}

template <class F>
int guarded(F&& body) {
    try {
        return body();
    } catch (const proxmh::ConfigError& e) {
        return report("config error", e, kConfig);
    } catch (const proxmh::IoError& e) {
        return report("i/o error", e, kIo);
    } catch (const std::filesystem::filesystem_error& e) {
        return report("i/o error", e, kIo);
    } catch (const proxmh::NumericError& e) {
        return report("numeric failure", e, kNumeric);
    } catch (const proxmh::Error& e) {
        // Dimension, precondition, coverage and capability errors all trace
        // back to the configuration.
        return report("config error", e, kConfig);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Proximal Metropolis-Hastings sampler experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(proxmh::library_version()));

    GlobalFlags flags;
    const auto add_common = [&flags](CLI::App* cmd) {
        cmd->add_option("--seed", flags.seed, "Override sampler.seed");
        cmd->add_option("--out-dir", flags.out_dir, "Override output.directory");
        cmd->add_option("--threads", flags.threads, "Worker threads (default: PROXMH_THREADS or all cores)")
            ->check(CLI::NonNegativeNumber);
    };

    std::string run_config;
    auto* run = app.add_subcommand("run", "Run one experiment");
    run->add_option("config", run_config, "Experiment config (JSON)")->required();
    add_common(run);

    std::vector<std::string> compare_configs;
    auto* compare = app.add_subcommand("compare", "Run several samplers on one target and write comparison.csv");
    compare->add_option("configs", compare_configs, "Experiment configs (JSON)")->required();
    add_common(compare);

    std::string tune_config;
    auto* tune = app.add_subcommand("tune", "Print the tuning report for a config");
    tune->add_option("config", tune_config, "Experiment config (JSON)")->required();

    auto* selftest = app.add_subcommand("selftest", "Run the built-in invariant checks");
    selftest->add_option("--threads", flags.threads, "Worker threads")->check(CLI::NonNegativeNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    if (run->parsed()) {
        return guarded([&] {
            const auto config = proxmh::load_config(run_config);
            const auto result = proxmh::run_experiment(config, flags.options());
            for (const auto& f : result.files) std::cout << f.string() << '\n';
            return static_cast<int>(kOk);
        });
    }
    if (compare->parsed()) {
        return guarded([&] {
            std::vector<proxmh::ExperimentConfig> configs;
            for (const auto& path : compare_configs) configs.push_back(proxmh::load_config(path));
            const auto rows = proxmh::compare_experiments(configs, flags.options());
            std::cout << "algorithm,eta,iterations_to_tv,acceptance_rate,ess_per_sec\n";
            for (const auto& r : rows)
                std::cout << r.algorithm << ',' << proxmh::format_double(r.eta) << ','
                          << (r.iterations_to_tv ? proxmh::format_double(*r.iterations_to_tv) : "") << ','
                          << proxmh::format_double(r.acceptance_rate) << ',' << proxmh::format_double(r.ess_per_sec)
                          << '\n';
            return static_cast<int>(kOk);
        });
    }
    if (tune->parsed()) {
        return guarded([&] {
            std::cout << proxmh::tune_command(proxmh::load_config(tune_config)).dump(2) << '\n';
            return static_cast<int>(kOk);
        });
    }
    return guarded([&] {
        const auto results = proxmh::run_selftest(std::cout, flags.threads);
        std::size_t failed = 0;
        for (const auto& r : results) failed += r.passed ? 0 : 1;
        std::cout << (results.size() - failed) << "/" << results.size() << " checks passed\n";
        return failed == 0 ? static_cast<int>(kOk) : static_cast<int>(kNumeric);
    });
}
