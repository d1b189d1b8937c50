#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "proxmh/errors.hpp"
#include "proxmh/quadrature.hpp"
#include "test_support.hpp"

using namespace proxmh;

namespace {
double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }
}  // namespace

TEST(Quadrature, Gaussian) {
    const auto r = quadrature_1d([](double y) { return -0.5 * y * y; }, {});
    EXPECT_LE(rel(r.log_integral, 0.5 * std::log(2.0 * std::numbers::pi)), 1e-10);
}

TEST(Quadrature, LaplaceWithKink) {
    Quadrature1DConfig cfg;
    cfg.breakpoints = {0.0};
    const auto r = quadrature_1d([](double y) { return -std::abs(y); }, cfg);
    EXPECT_LE(rel(r.log_integral, std::log(2.0)), 1e-10);
}

TEST(Quadrature, QuarticAgainstTrapezoid) {
    const auto h = [](double y) { return -y * y * y * y; };
    const auto r = quadrature_1d(h, {});
    const double trap = ref::trapezoid_log_integral(h, -10.0, 10.0, 1'000'000);
    EXPECT_NEAR(r.log_integral, 0.59487534413813215, 1e-12);
    EXPECT_NEAR(r.log_integral, trap, 1e-9);
}

TEST(Quadrature, LargeOffsetsStayFinite) {
    const auto r = quadrature_1d([](double y) { return 5000.0 - 0.5 * y * y; }, {});
    EXPECT_NEAR(r.log_integral, 5000.0 + 0.5 * std::log(2.0 * std::numbers::pi), 1e-9);
}

TEST(Quadrature, SubdivisionBudgetRaises) {
    Quadrature1DConfig cfg;
    cfg.max_subdivisions = 1;
    cfg.rel_tol = 1e-15;
    cfg.abs_tol = 1e-300;
    const auto h = [](double y) { return std::log(1.0 + std::sin(40.0 * y) * std::sin(40.0 * y)) - std::abs(y); };
    try {
        quadrature_1d(h, cfg);
        FAIL() << "expected QuadratureError";
    } catch (const QuadratureError& e) {
        EXPECT_TRUE(std::isfinite(e.best_estimate()));
    }
}

TEST(Quadrature, ConfigValidation) {
    Quadrature1DConfig cfg;
    cfg.lower = 1.0;
    cfg.upper = 0.0;
    EXPECT_THROW(cfg.validate(), PreconditionError);
}

TEST(Quadrature, ProxWindow) {
    const auto w = prox_window(1.0, 0.5, 2.0);
    EXPECT_NEAR(w.lower, 1.0 - 12.0 - 2.0, 1e-12);
    EXPECT_NEAR(w.upper, 1.0 + 12.0 + 2.0, 1e-12);
}
