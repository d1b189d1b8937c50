#pragma once

// Ground-truth grids, histogram TV, KS, effective sample size, proposal
// moment checks and the many-chain mixing estimator.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "proxmh/core.hpp"
#include "proxmh/oracles.hpp"
#include "proxmh/rng.hpp"
#include "proxmh/sampler.hpp"

namespace proxmh {

enum class Execution { Serial, Parallel };

struct GridAxis {
    double lower = 0.0;
    double upper = 1.0;
    std::size_t bins = 1;

    double width() const noexcept { return (upper - lower) / static_cast<double>(bins); }
    double center(std::size_t i) const noexcept { return lower + (static_cast<double>(i) + 0.5) * width(); }
    /// Bin holding v, or nullopt outside [lower, upper).
    std::optional<std::size_t> locate(double v) const noexcept;
    void validate() const;
};

/// Histogram density on a 1D or 2D box. Cells are row-major with the last
/// axis fastest. Invariant: sum_c exp(log_density[c] - normalizer) * volume = 1.
class GroundTruthGrid {
public:
    /// Cell moments default to the uniform-within-cell values.
    GroundTruthGrid(std::vector<GridAxis> axes, std::vector<double> log_density);
    /// `cell_mean` holds dims values per cell and `cell_second` dims*dims
    /// values per cell (E[x_i x_j | cell]).
    GroundTruthGrid(std::vector<GridAxis> axes, std::vector<double> log_density, std::vector<double> cell_mean,
                    std::vector<double> cell_second);

    std::size_t dims() const noexcept { return axes_.size(); }
    const GridAxis& axis(std::size_t k) const { return axes_.at(k); }
    std::size_t cells() const noexcept { return log_density_.size(); }
    double cell_volume() const noexcept;

    std::span<const double> log_density() const noexcept { return log_density_; }
    double normalizer() const noexcept { return normalizer_; }
    /// Normalised probability of each cell.
    const std::vector<double>& masses() const noexcept { return mass_; }

    std::optional<std::size_t> locate(ConstVec point) const;

    Vector mean() const;
    /// dims x dims, row-major.
    Vector covariance() const;

    GroundTruthGrid marginal(std::size_t axis) const;

    /// Exact draw from the piecewise-uniform histogram.
    Vector sample(RandomStream& rng) const;

private:
    std::vector<GridAxis> axes_;
    std::vector<double> log_density_;
    std::vector<double> cell_mean_;
    std::vector<double> cell_second_;
    std::vector<double> mass_;
    std::vector<double> cumulative_;
    double normalizer_ = 0.0;
};

/// C sqrt((beta + d + M^2 + log(1/s)) / mu) with C = 1.
double tail_radius(const CompositeTarget& target, double s);

struct GroundTruthOptions {
    bool check_coverage = true;
    double coverage_s = 1e-10;
    int threads = 0;
};

/// pi ∝ exp(-f - g) integrated over each cell with an 8x8 (or 8-point)
/// Gauss-Legendre rule in log space. Throws RangeCoverageError when an axis
/// misses [x0_k - R_s, x0_k + R_s].
GroundTruthGrid build_ground_truth(const CompositeTarget& target, std::vector<GridAxis> axes,
                                   const GroundTruthOptions& options = {},
                                   Execution execution = Execution::Parallel);

// ---------------------------------------------------------------------------
// Distances
// ---------------------------------------------------------------------------

struct TvResult {
    double tv = 0.0;
    double off_grid_fraction = 0.0;
    std::size_t in_range = 0;
    std::optional<std::string> warning;
};

/// Points are row-major with grid.dims() values each. Samples outside the
/// grid form their own cell with zero reference mass.
TvResult empirical_tv(std::span<const double> points, const GroundTruthGrid& grid);
/// Rows `first_row` onward of every chain, pooled.
TvResult empirical_tv(std::span<const ChainRun> runs, std::size_t first_row, const GroundTruthGrid& grid);

/// 1/2 sum |p_i - q_i| over two probability vectors of equal length.
double histogram_tv(std::span<const double> p, std::span<const double> q);

/// sup_x |F_n(x) - F(x)|.
double ks_statistic(std::vector<double> samples, const Function1D& cdf);

/// n / (1 + 2 sum rho_k), truncated at the first non-positive pair sum.
double effective_sample_size(std::span<const double> series);

// ---------------------------------------------------------------------------
// Chain summaries
// ---------------------------------------------------------------------------

struct ChainMetrics {
    double acceptance_rate = 0.0;
    std::size_t accepted = 0;
    std::size_t non_lazy = 0;
    /// Summed over chains; 0 for a coordinate whose every chain is constant.
    std::vector<double> ess_per_coordinate;
    std::optional<double> tv_to_truth;
    std::optional<std::uint64_t> iterations_to_tv;
};

ChainMetrics summarize_chains(std::span<const ChainRun> runs, std::size_t burn_in_rows,
                              const GroundTruthGrid* grid = nullptr);

// ---------------------------------------------------------------------------
// Proposal moment checks
// ---------------------------------------------------------------------------

struct BoundCheck {
    std::string name;
    double estimate = 0.0;
    double bound = 0.0;
    double std_error = 0.0;
    /// bound + 3 std_error - estimate
    double margin = 0.0;
    bool applicable = true;
    bool passed = true;
};

struct LemmaReport {
    std::vector<BoundCheck> checks;
    bool all_passed() const noexcept;
};

/// Monte Carlo draws Y from the proposal at x and checks
///   ||E Y - x|| <= eta (M + ||grad f(x)||)
///   Var <v, Y> <= 2 eta for `n_directions` random unit v
///   E ||Y - x||^2 <= 12 eta d + 36 eta^2 (||grad f(x)||^2 + M^2)
/// each with 3 standard errors of slack. The last is marked not applicable
/// unless eta < 1/(16 (L + 1)).
LemmaReport lemma_bound_checks(const CompositeTarget& target, const ProxOracle& oracle, ConstVec x, double eta,
                               std::size_t n_samples, const RandomStream& rng, std::size_t n_directions = 10,
                               Execution execution = Execution::Parallel);

// ---------------------------------------------------------------------------
// Mixing
// ---------------------------------------------------------------------------

struct MixingEstimate {
    std::optional<std::uint64_t> iterations_to_tv;
    /// TV of the pooled marginal histogram at each iteration (0 = start).
    std::vector<double> tv_curve;
};

struct MixingOptions {
    std::uint64_t n_chains = 200;
    std::uint64_t first_chain = 0;
    double threshold = 0.1;
    /// Coordinates pooled into the histogram; empty means all.
    std::vector<std::size_t> coordinates;
    int threads = 0;
};

/// Runs independent chains and compares the across-chain histogram of the
/// pooled coordinates at every iteration with a 1D marginal grid.
MixingEstimate estimate_mixing(const TransitionKernel& kernel, const SamplerConfig& config,
                               const GroundTruthGrid& marginal, const MixingOptions& options,
                               Execution execution = Execution::Parallel);

// ---------------------------------------------------------------------------
// Bundled targets
// ---------------------------------------------------------------------------

struct BundledTarget {
    std::string name;
    CompositeTarget target;
    /// Ground-truth axes for targets of dimension <= 2; empty otherwise.
    std::vector<GridAxis> axes;
};

/// Small reference targets shared by tests, selftest and the benchmarks:
/// lasso_1d, l1_product_2d, l1_product_5d, group_lasso_3d, logcosh_2d.
std::vector<BundledTarget> bundled_targets();

}  // namespace proxmh
