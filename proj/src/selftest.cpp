#include "proxmh/selftest.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "proxmh/diagnostics.hpp"
#include "proxmh/parallel.hpp"
#include "proxmh/quadrature.hpp"
#include "proxmh/sampler.hpp"
#include "proxmh/univariate.hpp"

namespace proxmh {

namespace {

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

SelftestResult check_l1_partition() {
    RandomStream rng(2024);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        const double u = -4.0 + 8.0 * rng.uniform();
        const double eta = 0.01 + rng.uniform();
        const double lambda = 0.1 + 3.0 * rng.uniform();
        const auto log_density = [=](double y) { return -(y - u) * (y - u) / (4.0 * eta) - lambda * std::abs(y); };
        Quadrature1DConfig cfg = prox_window(u, eta, lambda);
        cfg.breakpoints = {0.0};
        worst = std::max(worst, rel_err(laplace_log_partition(u, eta, lambda), quadrature_1d(log_density, cfg).log_integral));
    }
    return {"l1_log_partition", worst <= 1e-8, "max relative error " + num(worst)};
}

SelftestResult check_identity_and_balance() {
    const CompositeTarget target = make_isotropic_gaussian_target({1.0}, ScaledL1{1.0});
    const auto oracle = make_oracle(target);
    const double eta = 0.05;
    RandomStream rng(7);
    double worst = 0.0;
    double identity = 0.0;
    for (int i = 0; i < 50; ++i) {
        const Vector x{-2.0 + 4.0 * rng.uniform()};
        const Vector z{-2.0 + 4.0 * rng.uniform()};
        const ChainState sx = make_state(target, *oracle, x, eta);
        const ChainState sz = make_state(target, *oracle, z, eta);
        identity = std::max(identity, std::abs(log_accept_ratio(sx, sx, eta)));
        const double lhs = -eval_U(target, x) + proposal_log_density(target, *oracle, x, z, eta) + log_accept_ratio(sx, sz, eta);
        const double rhs = -eval_U(target, z) + proposal_log_density(target, *oracle, z, x, eta) + log_accept_ratio(sz, sx, eta);
        worst = std::max(worst, -std::expm1(-std::abs(lhs - rhs)));
    }
    return {"detailed_balance", worst <= 1e-8 && identity == 0.0,
            "max relative gap " + num(worst) + ", |log alpha(x, x)| " + num(identity)};
}

SelftestResult check_smooth_reduction() {
    const CompositeTarget target = make_isotropic_gaussian_target({0.5, -1.0}, ZeroRegularizer{});
    const auto oracle = make_oracle(target);
    SamplerConfig cfg;
    cfg.eta = 0.2;
    cfg.n_steps = 500;
    cfg.seed = 11;
    const ProxMHKernel prox(target, *oracle, cfg.eta, false);
    const LangevinKernel mala(smooth_potential(target), target.smoothness(), Vector(target.dissip_center().begin(), target.dissip_center().end()),
                              cfg.eta, false, LangevinKernel::Kind::Adjusted);
    const ChainRun a = run_chain(prox, cfg);
    const ChainRun b = run_chain(mala, cfg);
    return {"smooth_reduction", a.samples == b.samples && a.steps.size() == b.steps.size(),
            a.samples == b.samples ? "trajectories identical" : "trajectories differ"};
}

SelftestResult check_laziness() {
    const CompositeTarget target = make_isotropic_gaussian_target({0.0}, ScaledL1{1.0});
    const auto oracle = make_oracle(target);
    SamplerConfig cfg;
    cfg.eta = 0.05;
    cfg.n_steps = 100000;
    cfg.lazy = true;
    cfg.seed = 5;
    const ChainRun run = run_chain(ProxMHKernel(target, *oracle, cfg.eta, true), cfg);
    const double holds = 1.0 - static_cast<double>(run.non_lazy()) / static_cast<double>(cfg.n_steps);
    const double slack = 3.0 * std::sqrt(0.25 / static_cast<double>(cfg.n_steps));
    return {"lazy_hold_fraction", holds >= 0.49 - slack && holds <= 0.51 + slack, "hold fraction " + num(holds)};
}

SelftestResult check_grids(int threads) {
    double worst = 0.0;
    double shift = 0.0;
    for (const auto& b : bundled_targets()) {
        if (b.axes.empty()) continue;
        GroundTruthOptions opt;
        opt.threads = threads;
        const auto grid = build_ground_truth(b.target, b.axes, opt);
        double total = 0.0;
        for (double m : grid.masses()) total += m;
        worst = std::max(worst, std::abs(total - 1.0));

        const CompositeTarget& t = b.target;
        const CompositeTarget shifted(t.dim(), [&t](ConstVec x) { return t.f(x) + 3.5; },
                                      [&t](ConstVec x) { return t.grad_f(x); }, t.regularizer(), t.constants());
        const auto grid2 = build_ground_truth(shifted, b.axes, opt);
        for (std::size_t c = 0; c < grid.cells(); ++c) shift = std::max(shift, std::abs(grid.masses()[c] - grid2.masses()[c]));
    }
    return {"grid_normalisation", worst <= 1e-10 && shift <= 1e-12,
            "mass error " + num(worst) + ", shift sensitivity " + num(shift)};
}

std::vector<SelftestResult> check_proposal_bounds() {
    std::vector<SelftestResult> out;
    for (const auto& b : bundled_targets()) {
        const auto oracle = make_oracle(b.target);
        Vector x(b.target.dissip_center().begin(), b.target.dissip_center().end());
        const double eta = 0.5 * bounded_step_cap(b.target.smoothness());
        const LemmaReport report = lemma_bound_checks(b.target, *oracle, x, eta, 100000, RandomStream(99));
        std::ostringstream detail;
        for (const auto& c : report.checks)
            if (c.applicable && !c.passed) detail << c.name << " estimate " << c.estimate << " > bound " << c.bound << "; ";
        out.push_back({"proposal_bounds/" + b.name, report.all_passed(),
                       report.all_passed() ? "all bounds hold" : detail.str()});
    }
    return out;
}

SelftestResult check_stationarity(int threads) {
    const auto targets = bundled_targets();
    const BundledTarget& lasso = targets.front();
    const auto oracle = make_oracle(lasso.target);
    SamplerConfig cfg;
    cfg.eta = 0.5 * bounded_step_cap(lasso.target.smoothness());
    cfg.n_steps = 200000;
    cfg.seed = 3;
    const ChainRun run = run_chain(ProxMHKernel(lasso.target, *oracle, cfg.eta, false), cfg);
    GroundTruthOptions opt;
    opt.threads = threads;
    const auto grid = build_ground_truth(lasso.target, lasso.axes, opt);
    const double tv = empirical_tv(std::span<const ChainRun>(&run, 1), 1000, grid).tv;
    return {"stationarity/lasso_1d", tv <= 0.05, "histogram TV " + num(tv)};
}

}  // namespace

std::vector<SelftestResult> run_selftest(std::ostream& out, int threads) {
    std::vector<std::function<std::vector<SelftestResult>()>> checks = {
        [] { return std::vector{check_l1_partition()}; },
        [] { return std::vector{check_identity_and_balance()}; },
        [] { return std::vector{check_smooth_reduction()}; },
        [] { return std::vector{check_laziness()}; },
        [threads] { return std::vector{check_grids(threads)}; },
        [] { return check_proposal_bounds(); },
        [threads] { return std::vector{check_stationarity(threads)}; },
    };
    std::vector<SelftestResult> results;
    for (const auto& check : checks) {
        std::vector<SelftestResult> batch;
        try {
            batch = check();
        } catch (const std::exception& e) {
            batch = {{"error", false, e.what()}};
        }
        for (auto& r : batch) {
            out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
            results.push_back(std::move(r));
        }
    }
    return results;
}

}  // namespace proxmh
