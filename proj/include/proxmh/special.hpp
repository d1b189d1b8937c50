#pragma once

#include <span>

namespace proxmh {

/// log(exp(a) + exp(b)) without overflow; -inf inputs are handled.
double log_sum_exp(double a, double b) noexcept;
double log_sum_exp(std::span<const double> values) noexcept;

/// log(exp(a) - exp(b)) for a >= b.
double log_diff_exp(double a, double b) noexcept;

/// Standard normal CDF.
double normal_cdf(double z) noexcept;

/// log Phi(z), accurate in both tails. Uses erfc for moderate arguments and
/// a continued fraction for the Mills ratio deep in the lower tail.
double log_normal_cdf(double z) noexcept;

/// Phi^{-1}(p) for p in (0, 1).
double normal_quantile(double p);

/// log of the surface area of the unit sphere S^{k-1} in R^k.
double log_unit_sphere_area(int k) noexcept;

}  // namespace proxmh
