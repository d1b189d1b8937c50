#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "proxmh/diagnostics.hpp"
#include "proxmh/sampler.hpp"
#include "test_support.hpp"

using namespace proxmh;

namespace {

CompositeTarget lasso_1d() { return make_isotropic_gaussian_target({1.0}, ScaledL1{1.0}); }

double sample_variance(const std::vector<double>& xs) {
    double m = 0.0, v = 0.0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    for (double x : xs) v += (x - m) * (x - m);
    return v / static_cast<double>(xs.size() - 1);
}

class FailingOracle final : public ProxOracle {
public:
    std::size_t dim() const noexcept override { return 1; }

protected:
    Vector do_sample(ConstVec, double, RandomStream&) const override { throw OracleFailureError("test oracle", 7); }
    double do_log_partition(ConstVec, double) const override { return 0.0; }
};

}  // namespace

TEST(ProposalDensity, GaussianReduction) {
    const CompositeTarget t = make_isotropic_gaussian_target({0.5, -1.0, 2.0}, ZeroRegularizer{});
    const auto o = make_oracle(t);
    RandomStream rng(1);
    for (int i = 0; i < 20; ++i) {
        const Vector x{rng.normal(), rng.normal(), rng.normal()};
        const Vector y{rng.normal(), rng.normal(), rng.normal()};
        const double eta = 0.05 + rng.uniform();
        const Vector g = t.grad_f(x);
        const Vector mean{x[0] - eta * g[0], x[1] - eta * g[1], x[2] - eta * g[2]};
        EXPECT_NEAR(proposal_log_density(t, *o, x, y, eta), ref::gaussian_log_density(y, mean, 2 * eta), 1e-12);
    }
}

TEST(ProposalDensity, StandardNormalPeak) {
    const CompositeTarget t = make_isotropic_gaussian_target({0.0}, ZeroRegularizer{});
    const auto o = make_oracle(t);
    const Vector x{0.0};
    EXPECT_NEAR(proposal_log_density(t, *o, x, x, 0.5), -0.5 * std::log(2.0 * std::numbers::pi), 1e-15);
}

TEST(ProposalDensity, L1AgainstQuadratureNormalisation) {
    const CompositeTarget t = lasso_1d();
    const auto o = make_oracle(t);
    RandomStream rng(2);
    for (int i = 0; i < 10; ++i) {
        const double x = -3.0 + 6.0 * rng.uniform(), y = -3.0 + 6.0 * rng.uniform(), eta = 0.02 + 0.5 * rng.uniform();
        const double u = x - eta * (x - 1.0);
        const auto h = [&](double s) { return -(s - u) * (s - u) / (4 * eta) - std::abs(s); };
        const double ref = h(y) - ref::trapezoid_log_integral(h, u - 40 * std::sqrt(eta) - 2, u + 40 * std::sqrt(eta) + 2,
                                                                  1'000'000);
        EXPECT_NEAR(proposal_log_density(t, *o, Vector{x}, Vector{y}, eta), ref, 1e-8 * std::max(1.0, std::abs(ref)));
    }
}

TEST(AcceptRatio, IdentityIsZero) {
    const CompositeTarget t = make_isotropic_gaussian_target({1.0, -2.0}, GroupLasso{{{0, 1}}, {1.0}});
    const auto o = make_oracle(t);
    RandomStream rng(3);
    for (int i = 0; i < 10; ++i) {
        const ChainState s = make_state(t, *o, {rng.normal(), rng.normal()}, 0.05);
        EXPECT_EQ(log_accept_ratio(s, s, 0.05), 0.0);
    }
}

TEST(AcceptRatio, MatchesReferenceMala) {
    RandomStream rng(4);
    for (int i = 0; i < 100; ++i) {
        const std::size_t d = 1 + i % 3;
        Vector mean(d), x(d), z(d);
        for (std::size_t k = 0; k < d; ++k) {
            mean[k] = rng.normal();
            x[k] = 2.0 * rng.normal();
            z[k] = 2.0 * rng.normal();
        }
        const double eta = 0.01 + 0.5 * rng.uniform();
        const CompositeTarget t = make_isotropic_gaussian_target(mean, ZeroRegularizer{});
        const auto o = make_oracle(t);
        const auto pot = [&](const Vector& v) { return 0.5 * squared_distance(v, mean); };
        const auto grad = [&](const Vector& v) {
            Vector g(v.size());
            for (std::size_t k = 0; k < v.size(); ++k) g[k] = v[k] - mean[k];
            return g;
        };
        const double ref = std::min(0.0, ref::reference_mala_log_ratio(x, z, eta, pot, grad));
        const ChainState sx = make_state(t, *o, x, eta), sz = make_state(t, *o, z, eta);
        EXPECT_NEAR(log_accept_ratio(sx, sz, eta), ref, 1e-10);
        EXPECT_NEAR(log_accept_ratio(t, *o, sx, z, eta), ref, 1e-10);
        const double forward = proposal_log_density(t, *o, x, z, eta);
        Vector mx(d);
        for (std::size_t k = 0; k < d; ++k) mx[k] = x[k] - eta * (x[k] - mean[k]);
        EXPECT_NEAR(forward, ref::gaussian_log_density(z, mx, 2 * eta), 1e-10);
    }
}

TEST(AcceptRatio, DetailedBalanceOnLasso) {
    const CompositeTarget t = lasso_1d();
    const auto o = make_oracle(t);
    RandomStream rng(5);
    for (int i = 0; i < 50; ++i) {
        const Vector x{-3.0 + 6.0 * rng.uniform()}, z{-3.0 + 6.0 * rng.uniform()};
        const double eta = 0.01 + 0.3 * rng.uniform();
        const ChainState sx = make_state(t, *o, x, eta), sz = make_state(t, *o, z, eta);
        const double lhs = -eval_U(t, x) + proposal_log_density(t, *o, x, z, eta) + log_accept_ratio(sx, sz, eta);
        const double rhs = -eval_U(t, z) + proposal_log_density(t, *o, z, x, eta) + log_accept_ratio(sz, sx, eta);
        // |a - b| / max(a, b) = 1 - exp(-|log a - log b|)
        EXPECT_LE(-std::expm1(-std::abs(lhs - rhs)), 1e-8);
    }
}

TEST(Step, OutcomeInvariants) {
    const CompositeTarget t = lasso_1d();
    const auto o = make_oracle(t);
    SamplerConfig cfg;
    cfg.eta = 0.3;
    ChainState s = make_state(t, *o, {0.2}, cfg.eta);
    const RandomStream root(6);
    int accepted = 0;
    for (std::uint64_t k = 0; k < 500; ++k) {
        const StepOutcome out = step(t, *o, s, cfg, root.split(k));
        EXPECT_LE(out.log_accept_prob, 0.0);
        EXPECT_FALSE(out.was_lazy_hold);
        if (out.accepted) {
            EXPECT_EQ(out.next.x, out.proposed);
            const ChainState fresh = make_state(t, *o, out.proposed, cfg.eta);
            EXPECT_EQ(out.next.log_z_shift, fresh.log_z_shift);
            EXPECT_EQ(out.next.grad_fx, fresh.grad_fx);
            ++accepted;
        } else {
            EXPECT_EQ(out.next.x, s.x);
        }
        s = out.next;
    }
    EXPECT_GT(accepted, 0);
    EXPECT_LT(accepted, 500);
}

TEST(Step, OracleFailureCarriesStepIndex) {
    const FailingOracle oracle;
    CustomRegularizer c;
    c.value = [](ConstVec) { return 0.0; };
    c.oracle = std::make_shared<const FailingOracle>();
    RegularityConstants k;
    k.smoothness_L = 1.0;
    const CompositeTarget t(1, [](ConstVec x) { return 0.5 * x[0] * x[0]; }, [](ConstVec x) { return Vector{x[0]}; }, c, k);
    SamplerConfig cfg;
    const ChainState s = make_state(t, oracle, {0.0}, cfg.eta, 42);
    try {
        step(t, oracle, s, cfg, RandomStream(1));
        FAIL() << "expected StepFailure";
    } catch (const StepFailure& e) {
        EXPECT_EQ(e.step_index(), 42u);
    }
}

TEST(Step, AcceptanceRateWithTunedStep) {
    const CompositeTarget t = lasso_1d();
    const auto o = make_oracle(t);
    const TuningReport r = tune(t, t.dissip_center(), 0.1, 0.01);
    SamplerConfig cfg;
    cfg.eta = std::min(r.recommended_eta, bounded_step_cap(t.smoothness()));
    cfg.n_steps = 10000;
    cfg.seed = 8;
    const ChainRun run = run_chain(t, *o, cfg);
    EXPECT_GE(run.acceptance_rate(), 1.0 / 3.0);
}

TEST(Step, SmoothReductionIsStateForState) {
    const CompositeTarget t = make_isotropic_gaussian_target({0.3, -0.7}, ZeroRegularizer{});
    const auto o = make_oracle(t);
    const SmoothPotential pot = smooth_potential(t);
    const double eta = 0.4;
    ChainState a = make_state(t, *o, {1.0, 1.0}, eta);
    ChainState b = make_smooth_state(pot, {1.0, 1.0}, eta);
    SamplerConfig cfg;
    cfg.eta = eta;
    cfg.lazy = true;
    const RandomStream root(9);
    for (std::uint64_t k = 0; k < 2000; ++k) {
        const StepOutcome sa = step(t, *o, a, cfg, root.split(k));
        const StepOutcome sb = mala_step(pot, b, eta, true, root.split(k));
        ASSERT_EQ(sa.proposed, sb.proposed) << k;
        ASSERT_EQ(sa.accepted, sb.accepted) << k;
        ASSERT_EQ(sa.was_lazy_hold, sb.was_lazy_hold) << k;
        ASSERT_NEAR(sa.log_accept_prob, sb.log_accept_prob, 1e-12) << k;
        ASSERT_EQ(sa.next.x, sb.next.x) << k;
        a = sa.next;
        b = sb.next;
    }
}

TEST(Step, SmoothPotentialRequiresZeroRegularizer) {
    EXPECT_THROW(smooth_potential(lasso_1d()), PreconditionError);
}

TEST(RunChain, DeterministicAndShaped) {
    const CompositeTarget t = lasso_1d();
    const auto o = make_oracle(t);
    SamplerConfig cfg;
    cfg.eta = 0.05;
    cfg.n_steps = 1;
    const ChainRun one = run_chain(t, *o, cfg);
    EXPECT_EQ(one.samples.rows(), 2u);
    EXPECT_EQ(one.steps.size(), 1u);
    cfg.n_steps = 0;
    EXPECT_THROW(run_chain(t, *o, cfg), PreconditionError);
    cfg.n_steps = 3000;
    cfg.seed = 99;
    EXPECT_EQ(run_chain(t, *o, cfg), run_chain(t, *o, cfg));
    cfg.init = ExplicitPoint{{2.5}};
    EXPECT_EQ(run_chain(t, *o, cfg).samples(0, 0), 2.5);
    cfg.init = ExplicitPoint{{2.5, 1.0}};
    EXPECT_THROW(run_chain(t, *o, cfg), DimensionError);
}

TEST(RunChain, GaussianInitialisationSpread) {
    RandomStream rng(10);
    const Vector center{3.0};
    std::vector<double> xs(100000);
    for (auto& x : xs) x = initial_point(GaussianAtCenter{}, 1, 3.0, center, rng)[0];
    EXPECT_NEAR(sample_variance(xs), 0.25, 4.0 * 0.25 * std::sqrt(2.0 / xs.size()));
}

TEST(RunChain, StandardNormalVariance) {
    const CompositeTarget t = make_isotropic_gaussian_target({0.0}, ZeroRegularizer{});
    const auto o = make_oracle(t);
    SamplerConfig cfg;
    cfg.eta = 0.1;
    cfg.n_steps = 200000;
    cfg.seed = 12;
    const ChainRun run = run_chain(t, *o, cfg);
    const double v = sample_variance(run.samples.column(0, 1000));
    EXPECT_GE(v, 0.97);
    EXPECT_LE(v, 1.03);
}

TEST(RunChain, LazyHoldFraction) {
    const CompositeTarget t = lasso_1d();
    const auto o = make_oracle(t);
    SamplerConfig cfg;
    cfg.eta = 0.05;
    cfg.n_steps = 100000;
    cfg.lazy = true;
    cfg.seed = 13;
    const ChainRun run = run_chain(t, *o, cfg);
    const double holds = 1.0 - static_cast<double>(run.non_lazy()) / cfg.n_steps;
    const double se = std::sqrt(0.25 / cfg.n_steps);
    EXPECT_GE(holds, 0.49 - 3 * se);
    EXPECT_LE(holds, 0.51 + 3 * se);
}

TEST(Langevin, UlaVarianceBand) {
    const CompositeTarget t = make_isotropic_gaussian_target({0.0}, ZeroRegularizer{});
    const LangevinKernel k(smooth_potential(t), 1.0, {0.0}, 0.01, false, LangevinKernel::Kind::Unadjusted);
    SamplerConfig cfg;
    cfg.eta = 0.01;
    cfg.n_steps = 400000;
    cfg.seed = 14;
    const ChainRun run = run_chain(k, cfg);
    EXPECT_EQ(run.accepted(), cfg.n_steps);
    const double v = sample_variance(run.samples.column(0, 1000));
    EXPECT_GE(v, 0.9);
    EXPECT_LE(v, 1.1);
}

TEST(Langevin, MalaStationaryHistogram) {
    const CompositeTarget t = make_isotropic_gaussian_target({0.0}, ZeroRegularizer{});
    const LangevinKernel k(smooth_potential(t), 1.0, {0.0}, 0.1, false, LangevinKernel::Kind::Adjusted);
    SamplerConfig cfg;
    cfg.eta = 0.1;
    cfg.n_steps = 200000;
    cfg.seed = 15;
    const ChainRun run = run_chain(k, cfg);
    const auto grid = build_ground_truth(t, {GridAxis{-7.0, 7.0, 200}});
    EXPECT_LE(empirical_tv(std::span<const ChainRun>(&run, 1), 1000, grid).tv, 0.05);
}

TEST(Langevin, MalaSmallStepAcceptance) {
    const CompositeTarget t = make_isotropic_gaussian_target({0.0}, ZeroRegularizer{});
    const LangevinKernel k(smooth_potential(t), 1.0, {0.0}, 1e-4, false, LangevinKernel::Kind::Adjusted);
    SamplerConfig cfg;
    cfg.eta = 1e-4;
    cfg.n_steps = 10000;
    cfg.seed = 16;
    EXPECT_GE(run_chain(k, cfg).acceptance_rate(), 0.9);
}

TEST(Langevin, MoreauGradientMatchesFiniteDifference) {
    const CompositeTarget t = make_isotropic_gaussian_target({0.5, -0.5}, ScaledL1{1.5});
    const SmoothPotential p = moreau_smoothed_potential(t, 0.2);
    for (const Vector x : {Vector{1.3, -0.05}, Vector{-2.0, 0.7}, Vector{0.1, 0.2}}) {
        const Vector g = p.grad(x);
        for (std::size_t k = 0; k < 2; ++k) {
            Vector a = x, b = x;
            a[k] += 1e-6;
            b[k] -= 1e-6;
            EXPECT_NEAR(g[k], (p.value(a) - p.value(b)) / 2e-6, 1e-6);
        }
    }
    // The envelope lies below g and approaches it as gamma shrinks.
    const Vector x{2.0, -3.0};
    const SmoothPotential fine = moreau_smoothed_potential(t, 1e-6);
    EXPECT_LE(p.value(x), eval_U(t, x));
    EXPECT_NEAR(fine.value(x), eval_U(t, x), 1e-5);
}

TEST(Kernels, ProxKernelMatchesDirectRun) {
    const CompositeTarget t = lasso_1d();
    const auto o = make_oracle(t);
    SamplerConfig cfg;
    cfg.eta = 0.02;
    cfg.n_steps = 500;
    cfg.seed = 17;
    EXPECT_EQ(run_chain(ProxMHKernel(t, *o, cfg.eta, false), cfg), run_chain(t, *o, cfg));
    EXPECT_NE(run_chain(ProxMHKernel(t, *o, cfg.eta, false), cfg, 1), run_chain(t, *o, cfg));
}

TEST(Tune, EtaFormulaSubstitution) {
    // mu = 4, L = 2, d = 4, A0 = M = 0, eps = 1 and beta chosen so that R = 3.
    RegularityConstants c;
    c.smoothness_L = 2.0;
    c.dissip_mu = 4.0;
    c.dissip_beta = 36.0 - 4.0 * std::log(3.0);
    c.dissip_center = {0, 0, 0, 0};
    const CompositeTarget t(
        4, [](ConstVec x) { return dot(x, x); }, [](ConstVec x) { return Vector{2 * x[0], 2 * x[1], 2 * x[2], 2 * x[3]}; },
        ZeroRegularizer{}, c);
    const TuningReport r = tune(t, c.dissip_center, 1.0, 0.5);
    EXPECT_NEAR(r.radius_R, 3.0, 1e-14);
    EXPECT_NEAR(r.recommended_eta, 1.0 / 80.0, 1e-16);
    EXPECT_EQ(r.recommended_eta, 1.0 / (2.0 * 4.0 * r.radius_R * r.radius_R + 2.0 * 4.0));
}

TEST(Tune, RadiusAndWarmness) {
    const CompositeTarget t = make_isotropic_gaussian_target({0.0, 0.0}, ZeroRegularizer{});
    const TuningReport r = tune(t, t.dissip_center(), 1.0, 0.1);
    EXPECT_NEAR(r.a0, 0.0, 0.0);
    EXPECT_NEAR(r.radius_R, std::sqrt(2.0 * std::log(8.0)), 1e-14);
    EXPECT_NEAR(r.warmness_log_M0, std::log(8.0), 1e-14);
    EXPECT_NEAR(r.tail_radius_Rs, std::sqrt(2.0 + std::log(10.0)), 1e-14);
}

TEST(Tune, SecondImplementation) {
    RandomStream rng(18);
    for (int i = 0; i < 20; ++i) {
        const std::size_t d = 1 + i % 5;
        Vector mean(d), x0(d);
        for (std::size_t k = 0; k < d; ++k) {
            mean[k] = rng.normal();
            x0[k] = rng.normal();
        }
        const double lambda = 0.1 + rng.uniform(), eps = 0.01 + 0.9 * rng.uniform(), s = 0.01 + 0.9 * rng.uniform();
        const double C = 0.5 + rng.uniform();
        const CompositeTarget t = make_isotropic_gaussian_target(mean, ScaledL1{lambda});
        const TuningReport r = tune(t, x0, eps, s, C);
        double a0sq = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double sg = x0[k] > 0 ? lambda : (x0[k] < 0 ? -lambda : 0.0);
            a0sq += (x0[k] - mean[k] + sg) * (x0[k] - mean[k] + sg);
        }
        const double dd = static_cast<double>(d), M2 = lambda * lambda * dd;
        const double R = C * std::sqrt(2.0 * a0sq + M2 + dd * std::log(8.0) + std::log(1.0 / eps));
        EXPECT_NEAR(r.a0, std::sqrt(a0sq), 1e-12);
        EXPECT_NEAR(r.radius_R, R, 1e-12 * R);
        EXPECT_NEAR(r.recommended_eta, 1.0 / (2.0 * R * R + dd), 1e-15);
        EXPECT_NEAR(r.warmness_log_M0, 0.5 * dd * std::log(8.0) + 2.0 * a0sq + M2 / 4.0, 1e-12);
        EXPECT_NEAR(r.tail_radius_Rs, C * std::sqrt(dd + M2 + std::log(1.0 / s)), 1e-12);
    }
}
