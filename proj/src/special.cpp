#include "proxmh/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace proxmh {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.91893853320467274178032973640562;
}  // namespace

double log_sum_exp(double a, double b) noexcept {
    if (a == -kInf) return b;
    if (b == -kInf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

double log_sum_exp(std::span<const double> values) noexcept {
    double m = -kInf;
    for (double v : values) m = std::max(m, v);
    if (m == -kInf || m == kInf) return m;
    double s = 0.0;
    for (double v : values) s += std::exp(v - m);
    return m + std::log(s);
}

double log_diff_exp(double a, double b) noexcept {
    if (b == -kInf) return a;
    if (b >= a) return -kInf;
    const double d = b - a;
    return a + (d > -std::numbers::ln2 ? std::log(-std::expm1(d)) : std::log1p(-std::exp(d)));
}

double normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double log_normal_cdf(double z) noexcept {
    if (std::isnan(z)) return z;
    if (z == kInf) return 0.0;
    if (z == -kInf) return -kInf;
    if (z > 0.0) return std::log1p(-0.5 * std::erfc(z / std::numbers::sqrt2));
    if (z > -20.0) return std::log(0.5 * std::erfc(-z / std::numbers::sqrt2));
    // Phi(z) = phi(z) / m(x), x = -z, with the Laplace continued fraction
    // m(x) = x + 1/(x + 2/(x + 3/(x + ...))), evaluated bottom-up.
    const double x = -z;
    double tail = x;
    for (int k = 60; k >= 1; --k) tail = x + k / tail;
    return -0.5 * z * z - kLogSqrt2Pi - std::log(tail);
}

double normal_quantile(double p) {
    if (p <= 0.0) return -kInf;
    if (p >= 1.0) return kInf;
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double log_unit_sphere_area(int k) noexcept {
    // |S^{k-1}| = 2 pi^{k/2} / Gamma(k/2)
    const double h = 0.5 * k;
    return std::numbers::ln2 + h * std::log(std::numbers::pi) - boost::math::lgamma(h);
}

}  // namespace proxmh
