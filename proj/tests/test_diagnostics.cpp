#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "proxmh/diagnostics.hpp"
#include "proxmh/parallel.hpp"
#include "test_support.hpp"

using namespace proxmh;

namespace {

CompositeTarget lasso_1d() { return make_isotropic_gaussian_target({1.0}, ScaledL1{1.0}); }

GroundTruthOptions no_coverage() {
    GroundTruthOptions o;
    o.check_coverage = false;
    return o;
}

}  // namespace

TEST(GridAxis, Locate) {
    const GridAxis a{-1.0, 1.0, 4};
    EXPECT_EQ(a.locate(-1.0), 0u);
    EXPECT_EQ(a.locate(0.99), 3u);
    EXPECT_FALSE(a.locate(1.0).has_value());
    EXPECT_FALSE(a.locate(-1.5).has_value());
    EXPECT_DOUBLE_EQ(a.center(1), -0.25);
    EXPECT_THROW((GridAxis{1.0, 0.0, 3}.validate()), PreconditionError);
    EXPECT_THROW((GridAxis{0.0, 1.0, 0}.validate()), PreconditionError);
}

TEST(GroundTruth, StandardNormalMoments) {
    const CompositeTarget t = make_isotropic_gaussian_target({0.0}, ZeroRegularizer{});
    const auto g = build_ground_truth(t, {GridAxis{-10.0, 10.0, 2000}});
    double total = 0.0;
    for (double m : g.masses()) total += m;
    EXPECT_NEAR(total, 1.0, 1e-10);
    EXPECT_LE(std::abs(g.mean()[0]), 1e-6);
    EXPECT_NEAR(g.covariance()[0], 1.0, 1e-6);
    EXPECT_NEAR(g.normalizer(), 0.5 * std::log(2.0 * std::numbers::pi), 1e-9);
}

TEST(GroundTruth, LassoKinkSlopes) {
    const auto g = build_ground_truth(lasso_1d(), {GridAxis{-8.0, 10.0, 1800}});
    const auto ld = g.log_density();
    const GridAxis& a = g.axis(0);
    const std::size_t zero = *a.locate(0.0);  // first cell right of the kink
    const double h = a.width();
    // One-sided slopes of the cell-averaged log density, two cells from the kink.
    const double right = (ld[zero + 3] - ld[zero + 2]) / h;
    const double left = (ld[zero - 2] - ld[zero - 3]) / h;
    EXPECT_NEAR(left - right, 2.0, 0.05);
    for (double v : ld) EXPECT_TRUE(std::isfinite(v));
}

TEST(GroundTruth, ProductMarginalsMatchOneDimensional) {
    const CompositeTarget t2 = make_isotropic_gaussian_target({0.0, 0.0}, ScaledL1{1.0});
    const CompositeTarget t1 = make_isotropic_gaussian_target({0.0}, ScaledL1{1.0});
    const GridAxis a{-8.0, 8.0, 80};
    const auto g2 = build_ground_truth(t2, {a, a});
    const auto g1 = build_ground_truth(t1, {a});
    for (std::size_t k = 0; k < 2; ++k) {
        const auto m = g2.marginal(k);
        for (std::size_t c = 0; c < a.bins; ++c) EXPECT_NEAR(m.masses()[c], g1.masses()[c], 1e-8);
    }
    EXPECT_NEAR(g2.covariance()[1], 0.0, 1e-12);
}

TEST(GroundTruth, InvariantToConstantShift) {
    const CompositeTarget t = lasso_1d();
    const CompositeTarget shifted(1, [&t](ConstVec x) { return t.f(x) + 123.0; }, [&t](ConstVec x) { return t.grad_f(x); },
                                  t.regularizer(), t.constants());
    const std::vector<GridAxis> axes{GridAxis{-6.0, 8.0, 200}};
    const auto a = build_ground_truth(t, axes), b = build_ground_truth(shifted, axes);
    for (std::size_t c = 0; c < a.cells(); ++c) EXPECT_NEAR(a.masses()[c], b.masses()[c], 1e-12);
}

TEST(GroundTruth, CoverageAndDimensionErrors) {
    const CompositeTarget t = lasso_1d();
    try {
        build_ground_truth(t, {GridAxis{-1.0, 3.0, 50}});
        FAIL() << "expected RangeCoverageError";
    } catch (const RangeCoverageError& e) {
        EXPECT_NEAR(e.required_radius(), tail_radius(t, 1e-10), 1e-12);
    }
    EXPECT_NO_THROW(build_ground_truth(t, {GridAxis{-1.0, 3.0, 50}}, no_coverage()));
    const CompositeTarget t3 = make_isotropic_gaussian_target({0, 0, 0}, ZeroRegularizer{});
    const GridAxis a{-10, 10, 4};
    EXPECT_THROW(build_ground_truth(t3, {a, a, a}), PreconditionError);
    EXPECT_THROW(build_ground_truth(t3, {a, a}), DimensionError);
}

TEST(GroundTruth, SerialAndParallelAgree) {
    const auto targets = bundled_targets();
    for (const auto& b : targets) {
        if (b.axes.empty()) continue;
        const auto s = build_ground_truth(b.target, b.axes, {}, Execution::Serial);
        const auto p = build_ground_truth(b.target, b.axes, {}, Execution::Parallel);
        EXPECT_EQ(s.masses(), p.masses()) << b.name;
    }
}

TEST(EmpiricalTv, SamplesFromGridItself) {
    const auto g = build_ground_truth(lasso_1d(), {GridAxis{-6.0, 8.0, 200}});
    RandomStream rng(1);
    std::vector<double> pts(1000000);
    for (auto& p : pts) p = g.sample(rng)[0];
    const TvResult r = empirical_tv(pts, g);
    EXPECT_LE(r.tv, 0.01);
    EXPECT_EQ(r.in_range, pts.size());
    EXPECT_FALSE(r.warning.has_value());
}

TEST(EmpiricalTv, OneBinAgainstUniform) {
    const std::size_t k = 20;
    const GroundTruthGrid uniform({GridAxis{0.0, 1.0, k}}, std::vector<double>(k, 0.0));
    const std::vector<double> pts(5000, 0.51);
    EXPECT_NEAR(empirical_tv(pts, uniform).tv, 1.0 - 1.0 / k, 1e-12);
}

TEST(EmpiricalTv, GuardsAndWarnings) {
    const GroundTruthGrid uniform({GridAxis{0.0, 1.0, 10}}, std::vector<double>(10, 0.0));
    EXPECT_THROW(empirical_tv(std::vector<double>{}, uniform), PreconditionError);
    EXPECT_THROW(empirical_tv(std::vector<double>(999, 0.5), uniform), PreconditionError);
    std::vector<double> pts(2000, 0.55);
    for (int i = 0; i < 100; ++i) pts.push_back(3.0);
    const TvResult r = empirical_tv(pts, uniform);
    EXPECT_TRUE(r.warning.has_value());
    EXPECT_NEAR(r.off_grid_fraction, 100.0 / 2100.0, 1e-15);
    EXPECT_LE(r.tv, 1.0);
}

TEST(HistogramTv, SymmetricAndBounded) {
    const std::vector<double> p{0.1, 0.2, 0.7}, q{0.5, 0.5, 0.0};
    EXPECT_DOUBLE_EQ(histogram_tv(p, q), histogram_tv(q, p));
    EXPECT_NEAR(histogram_tv(p, q), 0.7, 1e-15);
    EXPECT_EQ(histogram_tv(p, p), 0.0);
    EXPECT_THROW(histogram_tv(p, std::vector<double>{1.0}), DimensionError);
}

TEST(Ks, UniformSamples) {
    std::vector<double> xs;
    for (int i = 0; i < 1000; ++i) xs.push_back((i + 0.5) / 1000.0);
    EXPECT_NEAR(ks_statistic(xs, [](double x) { return x; }), 0.0005, 1e-12);
}

TEST(Ess, IidNormal) {
    RandomStream rng(2);
    std::vector<double> xs(100000);
    for (auto& x : xs) x = rng.normal();
    const double ess = effective_sample_size(xs);
    EXPECT_GE(ess, 0.9 * xs.size());
    EXPECT_LE(ess, 1.1 * xs.size());
}

TEST(Ess, Ar1) {
    RandomStream rng(3);
    const double rho = 0.9;
    std::vector<double> xs(100000);
    double x = 0.0;
    for (auto& v : xs) {
        x = rho * x + std::sqrt(1 - rho * rho) * rng.normal();
        v = x;
    }
    const double expect = xs.size() * (1 - rho) / (1 + rho);
    EXPECT_NEAR(effective_sample_size(xs), expect, 0.2 * expect);
}

TEST(Ess, Guards) {
    EXPECT_THROW(effective_sample_size(std::vector<double>(1000, 2.0)), DegenerateSeriesError);
    EXPECT_THROW(effective_sample_size(std::vector<double>(99, 1.0)), PreconditionError);
}

TEST(LemmaChecks, CenteredGaussianHasNoBias) {
    const CompositeTarget t = make_isotropic_gaussian_target({0.0, 0.0}, ZeroRegularizer{});
    const auto o = make_oracle(t);
    const LemmaReport r = lemma_bound_checks(t, *o, t.dissip_center(), 0.01, 100000, RandomStream(4));
    ASSERT_FALSE(r.checks.empty());
    EXPECT_EQ(r.checks.front().name, "bias");
    EXPECT_DOUBLE_EQ(r.checks.front().bound, 0.0);
    EXPECT_LE(r.checks.front().estimate, 3.0 * r.checks.front().std_error);
    EXPECT_TRUE(r.all_passed());
}

TEST(LemmaChecks, LassoAtOrigin) {
    const CompositeTarget t = lasso_1d();
    const auto o = make_oracle(t);
    const LemmaReport r = lemma_bound_checks(t, *o, Vector{0.0}, 0.01, 1000000, RandomStream(5));
    EXPECT_DOUBLE_EQ(r.checks.front().bound, 0.02);
    EXPECT_TRUE(r.checks.front().passed) << r.checks.front().estimate;
    EXPECT_TRUE(r.all_passed());
}

TEST(LemmaChecks, DirectionalVarianceFiveDim) {
    const CompositeTarget t = make_isotropic_gaussian_target({0.3, -0.2, 1.0, 0.0, -2.0}, ScaledL1{1.0});
    const auto o = make_oracle(t);
    const LemmaReport r = lemma_bound_checks(t, *o, Vector{0.5, 0.5, 0.5, 0.5, 0.5}, 0.05, 100000, RandomStream(6));
    int directional = 0;
    for (const auto& c : r.checks)
        if (c.name.rfind("directional_variance", 0) == 0) {
            ++directional;
            EXPECT_DOUBLE_EQ(c.bound, 0.1);
            EXPECT_TRUE(c.passed) << c.name << " " << c.estimate;
        }
    EXPECT_EQ(directional, 10);
}

TEST(LemmaChecks, SecondMomentApplicabilityAndExecutionModes) {
    const CompositeTarget t = lasso_1d();
    const auto o = make_oracle(t);
    const auto find = [](const LemmaReport& r) {
        for (const auto& c : r.checks)
            if (c.name == "second_moment") return c;
        return BoundCheck{};
    };
    const LemmaReport big = lemma_bound_checks(t, *o, Vector{0.0}, 0.5, 2000, RandomStream(7));
    EXPECT_FALSE(find(big).applicable);
    const LemmaReport s = lemma_bound_checks(t, *o, Vector{0.0}, 0.01, 5000, RandomStream(7), 3, Execution::Serial);
    const LemmaReport p = lemma_bound_checks(t, *o, Vector{0.0}, 0.01, 5000, RandomStream(7), 3, Execution::Parallel);
    EXPECT_TRUE(find(s).applicable);
    ASSERT_EQ(s.checks.size(), p.checks.size());
    for (std::size_t i = 0; i < s.checks.size(); ++i) EXPECT_EQ(s.checks[i].estimate, p.checks[i].estimate);
}

TEST(Chains, SerialAndParallelIdentical) {
    const CompositeTarget t = make_isotropic_gaussian_target({0.0, 1.0}, ScaledL1{1.0});
    const auto o = make_oracle(t);
    SamplerConfig cfg;
    cfg.eta = 0.03;
    cfg.n_steps = 300;
    cfg.seed = 8;
    const ProxMHKernel k(t, *o, cfg.eta, false);
    const auto a = run_chains_serial(k, cfg, 12, 5);
    const auto b = run_chains(k, cfg, 12, 5, 4);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.front().chain_index, 5u);
    EXPECT_EQ(a.front(), run_chain(k, cfg, 5));
}

TEST(Chains, SummaryMetrics) {
    const CompositeTarget t = lasso_1d();
    const auto o = make_oracle(t);
    SamplerConfig cfg;
    cfg.eta = 0.05;
    cfg.n_steps = 20000;
    cfg.seed = 9;
    const auto runs = run_chains(ProxMHKernel(t, *o, cfg.eta, false), cfg, 3);
    const auto grid = build_ground_truth(t, {GridAxis{-6.0, 8.0, 200}});
    const ChainMetrics m = summarize_chains(runs, 1000, &grid);
    std::size_t acc = 0, nl = 0;
    for (const auto& r : runs) {
        acc += r.accepted();
        nl += r.non_lazy();
    }
    EXPECT_EQ(m.accepted, acc);
    EXPECT_EQ(m.non_lazy, nl);
    EXPECT_DOUBLE_EQ(m.acceptance_rate, static_cast<double>(acc) / nl);
    ASSERT_EQ(m.ess_per_coordinate.size(), 1u);
    EXPECT_GT(m.ess_per_coordinate[0], 0.0);
    ASSERT_TRUE(m.tv_to_truth.has_value());
    EXPECT_LE(*m.tv_to_truth, 0.1);
}

TEST(Mixing, ReachesThresholdAndIsDeterministic) {
    const CompositeTarget t = make_isotropic_gaussian_target({0.0, 0.0}, ScaledL1{1.0});
    const auto o = make_oracle(t);
    SamplerConfig cfg;
    cfg.eta = 0.05;
    cfg.n_steps = 400;
    cfg.lazy = true;
    cfg.init = ExplicitPoint{{3.0, 3.0}};
    const ProxMHKernel k(t, *o, cfg.eta, true);
    const auto truth = build_ground_truth(make_isotropic_gaussian_target({0.0}, ScaledL1{1.0}), {GridAxis{-8.0, 8.0, 10}});
    MixingOptions opt;
    opt.n_chains = 100;
    const MixingEstimate a = estimate_mixing(k, cfg, truth, opt, Execution::Serial);
    const MixingEstimate b = estimate_mixing(k, cfg, truth, opt, Execution::Parallel);
    EXPECT_EQ(a.tv_curve, b.tv_curve);
    ASSERT_EQ(a.tv_curve.size(), cfg.n_steps + 1);
    EXPECT_GT(a.tv_curve.front(), 0.5);
    ASSERT_TRUE(a.iterations_to_tv.has_value());
    EXPECT_LE(a.tv_curve[*a.iterations_to_tv], 0.1);
}

TEST(Bundled, TargetsAreWellFormed) {
    const auto targets = bundled_targets();
    ASSERT_EQ(targets.size(), 5u);
    for (const auto& b : targets) {
        EXPECT_EQ(b.axes.empty(), b.target.dim() > 2) << b.name;
        EXPECT_NO_THROW(make_oracle(b.target));
    }
}

TEST(Bundled, ProxChainIsStationaryOnGriddedTargets) {
    for (const auto& b : bundled_targets()) {
        if (b.axes.empty()) continue;
        const auto o = make_oracle(b.target);
        SamplerConfig cfg;
        cfg.eta = 0.5 * bounded_step_cap(b.target.smoothness());
        cfg.n_steps = 200000;
        cfg.seed = 10;
        const ChainRun run = run_chain(b.target, *o, cfg);
        const auto grid = build_ground_truth(b.target, b.axes);
        EXPECT_LE(empirical_tv(std::span<const ChainRun>(&run, 1), 2000, grid).tv, 0.05) << b.name;
    }
}
