#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "proxmh/group_lasso.hpp"
#include "proxmh/univariate.hpp"
#include "test_support.hpp"

using namespace proxmh;

namespace {

struct Moments {
    double mean = 0.0;
    double stderr_ = 0.0;
};

Moments moments(const std::vector<double>& xs) {
    double m = 0.0, s = 0.0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    for (double x : xs) s += (x - m) * (x - m);
    s /= static_cast<double>(xs.size() - 1);
    return {m, std::sqrt(s / static_cast<double>(xs.size()))};
}

// log Z for d = 3 after integrating the angle in closed form:
// Z = ∫_0^inf (4 pi eta rho / a) e^{-w rho} [e^{-(rho-a)^2/(4 eta)} - e^{-(rho+a)^2/(4 eta)}] d rho.
double reference_log_z3(double a, double eta, double w) {
    const auto h = [=](double rho) {
        if (rho <= 0.0) return -HUGE_VAL;
        const double lead = std::log(4.0 * std::numbers::pi * eta * rho / a) - w * rho - (rho - a) * (rho - a) / (4 * eta);
        return lead + std::log1p(-std::exp(-rho * a / eta));
    };
    return ref::trapezoid_log_integral(h, 0.0, a + 40.0 * std::sqrt(eta) + 4.0, 400000);
}

// d = 2: Z = ∫_0^inf 2 pi rho I0(rho a / (2 eta)) e^{-w rho - (rho^2 + a^2)/(4 eta)} d rho.
double reference_log_z2(double a, double eta, double w) {
    const auto h = [=](double rho) {
        if (rho <= 0.0) return -HUGE_VAL;
        const double x = rho * a / (2 * eta);
        return std::log(2.0 * std::numbers::pi * rho) + std::log(std::cyl_bessel_i(0.0, x)) - w * rho -
               (rho * rho + a * a) / (4 * eta);
    };
    return ref::trapezoid_log_integral(h, 0.0, a + 40.0 * std::sqrt(eta) + 4.0, 400000);
}

}  // namespace

TEST(GroupLassoPartition, FrozenValues) {
    // 40-digit mpmath quadrature in spherical coordinates.
    EXPECT_NEAR(group_lasso_log_partition(1.0, 3, 0.25, 1.0), 0.40139617780946473707, 1e-8);
    EXPECT_NEAR(group_lasso_log_partition(2.0, 3, 0.1, 1.0), -1.6627013096971458128, 1e-8);
    EXPECT_NEAR(group_lasso_log_partition(0.0, 3, 0.3, 2.0), -0.022304689058022471495, 1e-8);
    EXPECT_NEAR(group_lasso_log_partition(1.5, 2, 0.25, 1.0), -0.33138247445152998549, 1e-8);
    EXPECT_NEAR(group_lasso_log_partition(0.7, 2, 0.05, 0.5), -0.84229967982233415466, 1e-8);
}

TEST(GroupLassoPartition, RandomConfigurationsAgainstRadialReference) {
    RandomStream rng(31);
    for (int i = 0; i < 20; ++i) {
        const double a = 0.05 + 3.0 * rng.uniform();
        const double eta = 0.05 + 0.5 * rng.uniform();
        const double w = 0.1 + 2.0 * rng.uniform();
        const std::size_t d = (i % 2 == 0) ? 2 : 3;
        const double ref = d == 2 ? reference_log_z2(a, eta, w) : reference_log_z3(a, eta, w);
        const double got = group_lasso_log_partition(a, d, eta, w);
        EXPECT_LE(std::abs(got - ref) / std::max(1.0, std::abs(ref)), 1e-6) << "a=" << a << " eta=" << eta << " w=" << w;
    }
}

TEST(GroupLassoPartition, SingletonIsLaplace) {
    EXPECT_DOUBLE_EQ(group_lasso_log_partition(0.7, 1, 0.2, 1.3), laplace_log_partition(0.7, 0.2, 1.3));
}

TEST(GroupLassoSampler, TwoDimensionalMeanMatchesGrid) {
    const double eta = 0.25, w = 1.0;
    const std::vector<double> c{1.0, 0.0};
    // Midpoint grid reference for E[Y].
    const std::size_t n = 1200;
    const double lo = -5.0, hi = 6.0, dx = (hi - lo) / n;
    double z = 0.0, m0 = 0.0, m1 = 0.0, top = 0.0;
    for (std::size_t pass = 0; pass < 2; ++pass)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const double y0 = lo + (i + 0.5) * dx, y1 = lo + (j + 0.5) * dx;
                const double h = -((y0 - 1) * (y0 - 1) + y1 * y1) / (4 * eta) - w * std::hypot(y0, y1);
                if (pass == 0) {
                    top = std::max(top, h);
                    continue;
                }
                const double e = std::exp(h - top);
                z += e;
                m0 += e * y0;
                m1 += e * y1;
            }
    const double ref0 = m0 / z, ref1 = m1 / z;

    RandomStream rng(3);
    std::vector<double> a(100000), b(100000);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Vector y = group_lasso_oracle_sample(c, eta, w, rng);
        a[i] = y[0];
        b[i] = y[1];
    }
    const Moments ma = moments(a), mb = moments(b);
    EXPECT_LE(std::abs(ma.mean - ref0), 3.0 * ma.stderr_);
    EXPECT_LE(std::abs(mb.mean - ref1), 3.0 * mb.stderr_);
}

TEST(GroupLassoSampler, ZeroWeightAtOriginIsGaussian) {
    const double eta = 0.2;
    const std::vector<double> c{0.0, 0.0, 0.0};
    RandomStream rng(4);
    std::vector<double> r2(100000);
    for (auto& v : r2) {
        const Vector y = group_lasso_oracle_sample(c, eta, 0.0, rng);
        v = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
    }
    const Moments m = moments(r2);
    EXPECT_LE(std::abs(m.mean - 3.0 * 2.0 * eta), 3.0 * m.stderr_);
}

TEST(GroupLassoSampler, AxialMarginalKs) {
    const double eta = 0.1, w = 1.0;
    const std::vector<double> c{2.0, 0.0, 0.0};
    // Marginal of t = <y, c/|c|>: ∫ r exp(-((t-2)^2 + r^2)/(4 eta) - w sqrt(t^2 + r^2)) dr.
    const auto marginal = [=](double t) {
        return ref::trapezoid_log_integral(
            [=](double r) {
                return (r > 0 ? std::log(r) : -HUGE_VAL) - ((t - 2) * (t - 2) + r * r) / (4 * eta) - w * std::hypot(t, r);
            },
            0.0, 4.0, 4000);
    };
    const ref::TabulatedCdf cdf(marginal, -1.0, 4.5, 4000);
    RandomStream rng(5);
    std::vector<double> t(100000);
    for (auto& v : t) v = group_lasso_oracle_sample(c, eta, w, rng)[0];
    EXPECT_LE(ref::ks_distance(t, cdf), 0.02);
}

TEST(GroupLassoSampler, RejectsBadArguments) {
    const std::vector<double> one{1.0};
    EXPECT_THROW(GroupLassoSampler(one, 0.1, 1.0), PreconditionError);
    const std::vector<double> two{1.0, 0.0};
    EXPECT_THROW(GroupLassoSampler(two, -0.1, 1.0), PreconditionError);
    EXPECT_THROW(GroupLassoSampler(two, 0.1, 1.0, GroupLassoGridConfig{1}), PreconditionError);
}

TEST(GroupLassoSampler, ResolutionDoesNotChangeTheLaw) {
    const std::vector<double> c{0.5, -0.5, 0.2};
    const double eta = 0.15, w = 2.0;
    RandomStream r1(6), r2(7);
    std::vector<double> a(50000), b(50000);
    for (auto& v : a) v = group_lasso_oracle_sample(c, eta, w, r1, {8})[1];
    for (auto& v : b) v = group_lasso_oracle_sample(c, eta, w, r2, {96})[1];
    std::sort(b.begin(), b.end());
    const auto ecdf_b = [&b](double x) {
        return static_cast<double>(std::upper_bound(b.begin(), b.end(), x) - b.begin()) / static_cast<double>(b.size());
    };
    EXPECT_LE(ref::ks_distance(a, ecdf_b), 0.015);
}
