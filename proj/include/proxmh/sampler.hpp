#pragma once

// Metropolis-adjusted proximal chain, Langevin baselines and step-size tuning.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "proxmh/core.hpp"
#include "proxmh/oracles.hpp"
#include "proxmh/rng.hpp"

namespace proxmh {

struct StepOutcome {
    ChainState next;
    Vector proposed;
    bool accepted = false;
    double log_accept_prob = 0.0;  ///< in (-inf, 0]
    bool was_lazy_hold = false;
};

// ---------------------------------------------------------------------------
// Proximal Metropolis-Hastings
// ---------------------------------------------------------------------------

/// State at x with every cache filled: grad f(x), f(x), U(x) and
/// log Z(x - eta grad f(x)).
ChainState make_state(const CompositeTarget& target, const ProxOracle& oracle, Vector x, double eta,
                      std::uint64_t step_index = 0);

/// log p(x, y) = -||y - (x - eta grad f(x))||^2/(4 eta) - g(y) - log Z(x - eta grad f(x)).
double proposal_log_density(const CompositeTarget& target, const ProxOracle& oracle, ConstVec x,
                            ConstVec y, double eta);

/// min(0, log Z(x') - log Z(z') + f(x) - f(z) - ||x - z + eta grad f(z)||^2/(4 eta)
///                                            + ||z - x + eta grad f(x)||^2/(4 eta))
/// with x' = x - eta grad f(x), z' = z - eta grad f(z). g cancels and is never
/// evaluated.
double log_accept_ratio(const ChainState& x, const ChainState& z, double eta);
double log_accept_ratio(const CompositeTarget& target, const ProxOracle& oracle, const ChainState& x,
                        ConstVec z, double eta);

/// One transition. `step_stream` is the per-step stream; the lazy coin, the
/// oracle draw and the acceptance uniform each use their own child
/// (StreamSite). Caches are refreshed only on acceptance.
StepOutcome step(const CompositeTarget& target, const ProxOracle& oracle, const ChainState& state,
                 const SamplerConfig& config, const RandomStream& step_stream);

// ---------------------------------------------------------------------------
// Langevin baselines on a smooth potential
// ---------------------------------------------------------------------------

struct SmoothPotential {
    std::size_t dim = 0;
    ScalarField value;
    VectorField grad;
};

/// U = f; requires a Zero regularizer.
SmoothPotential smooth_potential(const CompositeTarget& target);

/// U = f + g^gamma with the Moreau envelope
/// g^gamma(x) = g(p) + ||x - p||^2/(2 gamma), p = prox_map(g, x, gamma),
/// whose gradient is (x - p)/gamma.
SmoothPotential moreau_smoothed_potential(const CompositeTarget& target, double gamma);

/// State for the Langevin kernels: f_x = u_x = U(x), grad_fx = grad U(x),
/// log_z_shift = (d/2) log(4 pi eta) (the Gaussian proposal normaliser).
ChainState make_smooth_state(const SmoothPotential& potential, Vector x, double eta,
                             std::uint64_t step_index = 0);

/// Gaussian proposal N(x - eta grad U(x), 2 eta I) with a Metropolis filter.
StepOutcome mala_step(const SmoothPotential& potential, const ChainState& state, double eta, bool lazy,
                      const RandomStream& step_stream);

/// Euler step of dX = -grad U dt + sqrt(2) dB without a filter.
StepOutcome ula_step(const SmoothPotential& potential, const ChainState& state, double eta, bool lazy,
                     const RandomStream& step_stream);

// ---------------------------------------------------------------------------
// Kernels and chain runner
// ---------------------------------------------------------------------------

class TransitionKernel {
public:
    virtual ~TransitionKernel() = default;
    virtual std::size_t dim() const noexcept = 0;
    /// L, used for the N(x0, I/(L+1)) initialisation.
    virtual double smoothness() const noexcept = 0;
    /// x0 used when GaussianAtCenter carries no explicit centre.
    virtual Vector default_center() const = 0;
    virtual ChainState initial_state(Vector x) const = 0;
    virtual StepOutcome transition(const ChainState& state, const RandomStream& step_stream) const = 0;
};

/// Borrowed target and oracle must outlive the kernel.
class ProxMHKernel final : public TransitionKernel {
public:
    ProxMHKernel(const CompositeTarget& target, const ProxOracle& oracle, double eta, bool lazy);

    std::size_t dim() const noexcept override { return target_.dim(); }
    double smoothness() const noexcept override { return target_.smoothness(); }
    Vector default_center() const override;
    ChainState initial_state(Vector x) const override;
    StepOutcome transition(const ChainState& state, const RandomStream& step_stream) const override;

private:
    const CompositeTarget& target_;
    const ProxOracle& oracle_;
    SamplerConfig config_;
};

class LangevinKernel final : public TransitionKernel {
public:
    enum class Kind { Adjusted, Unadjusted };

    LangevinKernel(SmoothPotential potential, double smoothness, Vector center, double eta, bool lazy,
                   Kind kind);

    std::size_t dim() const noexcept override { return potential_.dim; }
    double smoothness() const noexcept override { return smoothness_; }
    Vector default_center() const override { return center_; }
    ChainState initial_state(Vector x) const override;
    StepOutcome transition(const ChainState& state, const RandomStream& step_stream) const override;

private:
    SmoothPotential potential_;
    double smoothness_;
    Vector center_;
    double eta_;
    bool lazy_;
    Kind kind_;
};

/// Row-major (rows x dim) sample storage.
class SampleMatrix {
public:
    SampleMatrix() = default;
    SampleMatrix(std::size_t rows, std::size_t dim) : rows_(rows), dim_(dim), data_(rows * dim) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t dim() const noexcept { return dim_; }
    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * dim_, dim_}; }
    std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * dim_, dim_}; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * dim_ + j]; }
    const std::vector<double>& data() const noexcept { return data_; }

    /// Column j from row `first` onwards.
    std::vector<double> column(std::size_t j, std::size_t first = 0) const;

    friend bool operator==(const SampleMatrix&, const SampleMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t dim_ = 0;
    std::vector<double> data_;
};

struct StepSummary {
    bool accepted = false;
    bool lazy_hold = false;
    double log_accept_prob = 0.0;

    friend bool operator==(const StepSummary&, const StepSummary&) = default;
};

struct ChainRun {
    std::uint64_t chain_index = 0;
    SampleMatrix samples;            ///< n_steps + 1 rows; row 0 is X_0
    std::vector<StepSummary> steps;  ///< one per transition

    std::size_t accepted() const noexcept;
    std::size_t non_lazy() const noexcept;
    /// accepted / non-lazy steps (0 when every step was a lazy hold).
    double acceptance_rate() const noexcept;

    friend bool operator==(const ChainRun&, const ChainRun&) = default;
};

/// Stream owned by chain `chain_index`: RandomStream(seed).split(chain_index).
RandomStream chain_stream(std::uint64_t seed, std::uint64_t chain_index);

/// X_0 per the init spec: the explicit point, or N(center, I/(L+1)).
Vector initial_point(const InitSpec& init, std::size_t dim, double smoothness, ConstVec default_center,
                     RandomStream& rng);

/// Runs config.n_steps transitions from the configured start. Step t uses
/// chain_stream(seed, chain_index).split(t).
ChainRun run_chain(const TransitionKernel& kernel, const SamplerConfig& config,
                   std::uint64_t chain_index = 0);
ChainRun run_chain(const CompositeTarget& target, const ProxOracle& oracle, const SamplerConfig& config);

// ---------------------------------------------------------------------------
// Tuning
// ---------------------------------------------------------------------------

/// Step-size and radius heuristics. The universal constant C is unspecified
/// in the analysis; recommended_eta is a scale, not a certified bound.
struct TuningReport {
    double a0 = 0.0;            ///< ||grad f(x0) + v||, v in the subdifferential of g at x0
    double radius_R = 0.0;
    double recommended_eta = 0.0;
    double warmness_log_M0 = 0.0;
    double tail_radius_Rs = 0.0;
    double universal_constant = 1.0;
};

/// R = (C/sqrt(mu)) sqrt((L + 1/mu) A0^2 + M^2 + beta + d log(4(L+1)/mu) + log(1/eps))
/// eta = 1 / (2 L^2 R^2 + L d)
/// log M0 = (d/2) log(4(L+1)/mu) + (L + 1/mu) A0^2 + M^2/4 + beta
/// R_s = C sqrt((beta + d + M^2 + log(1/s)) / mu)
TuningReport tune(const CompositeTarget& target, ConstVec x0, double epsilon, double s,
                  double universal_constant = 1.0);

/// Upper end of the step-size range under which the proposal moment and
/// rejection bounds hold: eta < 1/(16 (L + 1)).
inline double bounded_step_cap(double smoothness) { return 1.0 / (16.0 * (smoothness + 1.0)); }

}  // namespace proxmh
