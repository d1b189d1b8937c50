// Serial reference vs OpenMP runners for the three parallel kernels:
// independent chains, ground-truth grid cells and the mixing estimator.

#include <benchmark/benchmark.h>

#include "proxmh/diagnostics.hpp"
#include "proxmh/parallel.hpp"

namespace {

using namespace proxmh;

const BundledTarget& target(const std::string& name) {
    static const std::vector<BundledTarget> all = bundled_targets();
    for (const auto& b : all)
        if (b.name == name) return b;
    throw PreconditionError("unknown bundled target " + name);
}

void BM_Chains(benchmark::State& state, bool parallel) {
    const auto& b = target("l1_product_5d");
    const auto oracle = make_oracle(b.target);
    SamplerConfig cfg;
    cfg.eta = 0.5 * bounded_step_cap(b.target.smoothness());
    cfg.n_steps = 2000;
    const ProxMHKernel kernel(b.target, *oracle, cfg.eta, false);
    const auto n = static_cast<std::uint64_t>(state.range(0));
    for (auto _ : state) {
        auto runs = parallel ? run_chains(kernel, cfg, n) : run_chains_serial(kernel, cfg, n);
        benchmark::DoNotOptimize(runs);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * cfg.n_steps));
}

void BM_Grid(benchmark::State& state, Execution execution) {
    const auto& b = target("logcosh_2d");
    for (auto _ : state) {
        auto grid = build_ground_truth(b.target, b.axes, {}, execution);
        benchmark::DoNotOptimize(grid);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(b.axes[0].bins * b.axes[1].bins));
}

void BM_Mixing(benchmark::State& state, Execution execution) {
    const auto& b = target("l1_product_2d");
    const auto oracle = make_oracle(b.target);
    SamplerConfig cfg;
    cfg.eta = 0.03;
    cfg.n_steps = 300;
    cfg.lazy = true;
    cfg.init = ExplicitPoint{{3.0, 3.0}};
    const ProxMHKernel kernel(b.target, *oracle, cfg.eta, true);
    const auto marginal = build_ground_truth(b.target, b.axes).marginal(0);
    MixingOptions opt;
    opt.n_chains = 200;
    for (auto _ : state) {
        auto m = estimate_mixing(kernel, cfg, marginal, opt, execution);
        benchmark::DoNotOptimize(m);
    }
}

}  // namespace

BENCHMARK_CAPTURE(BM_Chains, serial, false)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Chains, parallel, true)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Grid, serial, proxmh::Execution::Serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Grid, parallel, proxmh::Execution::Parallel)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Mixing, serial, proxmh::Execution::Serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Mixing, parallel, proxmh::Execution::Parallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
