#include "proxmh/parallel.hpp"

#include <cstdlib>
#include <exception>
#include <string>

#include <omp.h>

namespace proxmh {

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("PROXMH_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0) return n;
        } catch (const std::exception&) {
        }
    }
    return omp_get_max_threads();
}

std::vector<ChainRun> run_chains_serial(const TransitionKernel& kernel, const SamplerConfig& config,
                                        std::uint64_t n_chains, std::uint64_t first_chain) {
    std::vector<ChainRun> runs;
    runs.reserve(n_chains);
    for (std::uint64_t c = 0; c < n_chains; ++c) runs.push_back(run_chain(kernel, config, first_chain + c));
    return runs;
}

std::vector<ChainRun> run_chains(const TransitionKernel& kernel, const SamplerConfig& config,
                                 std::uint64_t n_chains, std::uint64_t first_chain, int threads) {
    config.validate();
    std::vector<ChainRun> runs(n_chains);
    std::vector<std::exception_ptr> errors(n_chains);
    const auto n = static_cast<std::int64_t>(n_chains);

#pragma omp parallel for schedule(dynamic, 1) num_threads(resolve_threads(threads))
    for (std::int64_t c = 0; c < n; ++c) {
        try {
            runs[c] = run_chain(kernel, config, first_chain + static_cast<std::uint64_t>(c));
        } catch (...) {
            errors[c] = std::current_exception();
        }
    }

    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return runs;
}

}  // namespace proxmh
