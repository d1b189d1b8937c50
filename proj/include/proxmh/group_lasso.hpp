#pragma once

// Proximal sampling for one group-lasso block: the density
//   p(y) ∝ exp(-||y - x||^2 / (4 eta) - w ||y||),   y in R^k, k >= 2.
//
// Writing y = t * x/||x|| + r * v with v a unit vector orthogonal to x, the
// pair (t, r) has density
//   q(t, r) ∝ r^{k-2} exp(-((t - ||x||)^2 + r^2) / (4 eta) - w sqrt(t^2 + r^2))
// on r > 0 and v is uniform on the unit sphere of the orthogonal complement.
// log q is jointly concave in (t, r), so the tangent plane at any cell centre
// bounds it over the whole cell. A grid of such bounds forms a piecewise
// constant envelope that is sampled exactly by rejection; the grid
// resolution only affects the acceptance rate.

#include <cstddef>
#include <optional>
#include <vector>

#include "proxmh/core.hpp"
#include "proxmh/rng.hpp"
#include "proxmh/univariate.hpp"

namespace proxmh {

struct GroupLassoGridConfig {
    int resolution = 48;  ///< cells per axis
};

class GroupLassoSampler {
public:
    GroupLassoSampler(ConstVec center, double eta, double weight, GroupLassoGridConfig config = {});

    Vector sample(RandomStream& rng, std::uint64_t* attempts = nullptr) const;

    std::size_t dim() const noexcept { return dim_; }
    /// (t, r) integration window used by both the grid and the partition function.
    double t_lower() const noexcept { return t_lo_; }
    double t_upper() const noexcept { return t_hi_; }
    double r_upper() const noexcept { return r_hi_; }

private:
    double log_q(double t, double r) const noexcept;
    Vector assemble(double t, double r, RandomStream& rng) const;

    std::size_t dim_;
    double eta_, weight_;
    double norm_;          ///< ||x||
    Vector axis_;          ///< x / ||x|| (unused when ||x|| = 0)
    double t_lo_, t_hi_, r_hi_;
    int n_;
    double dt_, dr_;
    std::vector<double> log_bound_;
    std::vector<double> cumulative_;
    std::optional<LogConcaveSampler> radial_;  ///< used when ||x|| = 0
};

/// One exact draw from the block density. Groups of size 1 reduce to the
/// one-dimensional log-concave sampler.
Vector group_lasso_oracle_sample(ConstVec x_center, double eta, double weight, RandomStream& rng,
                                 const GroupLassoGridConfig& config = {});

/// log ∫_{R^k} exp(-||y - u||^2/(4 eta) - w ||y||) dy. Depends on u only
/// through ||u||; computed by nested adaptive quadrature over (t, r).
double group_lasso_log_partition(double norm_u, std::size_t dim, double eta, double weight);

/// Half-width of the (t, r) window: sqrt(2 eta)(sqrt(k) + 12) + 2 eta w.
double group_lasso_window(std::size_t dim, double eta, double weight);

}  // namespace proxmh
