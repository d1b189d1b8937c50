#pragma once

// One-dimensional exact samplers used by the proximal oracles.

#include <cstdint>
#include <limits>

#include "proxmh/core.hpp"
#include "proxmh/rng.hpp"

namespace proxmh {

/// Rejection samplers give up (OracleFailureError) after this many attempts.
inline constexpr std::uint64_t kMaxRejectionAttempts = 1'000'000;

struct TruncatedNormalParams {
    double mean = 0.0;
    double variance = 1.0;
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();

    void validate() const;
};

/// Boundaries within this many standard deviations of the mean use
/// inverse-CDF sampling; farther tails use exponential-envelope rejection.
inline constexpr double kTruncatedNormalTailSwitch = 5.0;

double sample_truncated_normal(const TruncatedNormalParams& params, RandomStream& rng);

/// Exact two-branch decomposition of the density ∝ exp(-(y-u)^2/(4 eta) - lambda |y|).
///
/// Completing the square on each half-line gives
///   y >= 0:  N(u - 2 eta lambda, 2 eta) on [0, inf),  log-mass  eta lambda^2 - lambda u + log sqrt(4 pi eta) + log Phi((u - 2 eta lambda)/sqrt(2 eta))
///   y <  0:  N(u + 2 eta lambda, 2 eta) on (-inf, 0], log-mass  eta lambda^2 + lambda u + log sqrt(4 pi eta) + log Phi(-(u + 2 eta lambda)/sqrt(2 eta))
/// and the weights are the branch masses over their sum.
struct LaplaceMixture {
    double weight_plus;
    double weight_minus;
    TruncatedNormalParams tn_plus;
    TruncatedNormalParams tn_minus;
    double log_mass_plus;
    double log_mass_minus;
    double log_partition;
};

LaplaceMixture laplace_oracle_mixture(double u, double eta, double lambda);

/// log of ∫ exp(-(y-u)^2/(4 eta) - lambda |y|) dy in closed form.
double laplace_log_partition(double u, double eta, double lambda);

double sample_laplace_oracle(double u, double eta, double lambda, RandomStream& rng);

/// Maximiser of a concave function: bracket outward from `hint`, then
/// golden-section search until the bracket is below `tol * max(1, |x|)`.
double locate_mode(const Function1D& log_density, double hint, double tol = 1e-12);

/// Rejection sampler for a log-concave density with a three-piece envelope:
/// a flat cap at the mode on [x_l, x_r] and exponential tails beyond,
/// following the chords from the mode to x_l = mode - s_l and
/// x_r = mode + s_r, where s_l, s_r are where the log-density has dropped
/// by about one unit. For a concave log-density each chord extension lies
/// above the function outside its endpoint, so the envelope dominates.
class LogConcaveSampler {
public:
    LogConcaveSampler(Function1D log_density, double mode_hint);

    /// Throws NotLogConcaveError when a proposal lands above the envelope,
    /// OracleFailureError after kMaxRejectionAttempts.
    double sample(RandomStream& rng, std::uint64_t* attempts = nullptr) const;

    double mode() const noexcept { return mode_; }
    double left() const noexcept { return xl_; }
    double right() const noexcept { return xr_; }
    /// log of the envelope's total mass.
    double log_envelope_mass() const noexcept { return log_envelope_mass_; }

private:
    double envelope(double x) const noexcept;

    Function1D log_density_;
    double mode_;
    double peak_;
    double xl_, xr_;
    double hl_, hr_;          ///< log-density at x_l, x_r
    double slope_l_, slope_r_;
    double mass_l_, mass_c_, mass_r_;  ///< relative to exp(peak)
    double log_envelope_mass_;
};

double sample_logconcave_1d(const Function1D& log_density, double mode_hint, RandomStream& rng);

}  // namespace proxmh
