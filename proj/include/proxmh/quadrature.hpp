#pragma once

// Adaptive Gauss-Kronrod (7/15) quadrature of exp(log_integrand) over a
// finite window, accumulated relative to the integrand's peak so that the
// result is returned as a log-integral without overflow or underflow.

#include <vector>

#include "proxmh/core.hpp"

namespace proxmh {

struct Quadrature1DConfig {
    double abs_tol = 1e-15;   ///< on the peak-normalised integral
    double rel_tol = 1e-12;
    int max_subdivisions = 4000;
    double lower = -40.0;
    double upper = 40.0;
    /// Interior points where the integrand may have a kink.
    std::vector<double> breakpoints;

    void validate() const;
};

/// Window for densities of the form exp(-|y-u|^2/(4 eta) - g(y)) with g
/// M-Lipschitz, centred at the proximal point c:
/// [c - 12 sqrt(2 eta) - 2 eta M, c + 12 sqrt(2 eta) + 2 eta M].
Quadrature1DConfig prox_window(double center, double eta, double lipschitz);

struct QuadratureResult {
    double log_integral;
    double achieved_tol;  ///< estimated relative error of the integral
    int subdivisions;
};

/// Throws QuadratureError (carrying the best estimate) when the tolerance
/// is not met within max_subdivisions.
QuadratureResult quadrature_1d(const Function1D& log_integrand, const Quadrature1DConfig& config);

}  // namespace proxmh
