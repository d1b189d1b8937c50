#pragma once

// Proximal sampling oracles: given u and eta, draw Y with density
// ∝ exp(-||y - u||^2 / (4 eta) - g(y)) and evaluate log Z(u), the log of
// that density's normaliser.

#include <cstddef>
#include <memory>

#include "proxmh/core.hpp"
#include "proxmh/group_lasso.hpp"
#include "proxmh/rng.hpp"

namespace proxmh {

/// Oracles are immutable; all randomness comes from the stream passed in,
/// so one oracle can serve many concurrent chains.
class ProxOracle {
public:
    virtual ~ProxOracle() = default;

    virtual std::size_t dim() const noexcept = 0;

    /// Checks dimensions and eta, then forwards to the implementation.
    Vector sample(ConstVec u, double eta, RandomStream& rng) const;
    double log_partition(ConstVec u, double eta) const;

protected:
    virtual Vector do_sample(ConstVec u, double eta, RandomStream& rng) const = 0;
    virtual double do_log_partition(ConstVec u, double eta) const = 0;

private:
    void check(ConstVec u, double eta) const;
};

/// g = 0: N(u, 2 eta I).
class GaussianOracle final : public ProxOracle {
public:
    explicit GaussianOracle(std::size_t dim) : dim_(dim) {}
    std::size_t dim() const noexcept override { return dim_; }

protected:
    Vector do_sample(ConstVec u, double eta, RandomStream& rng) const override;
    double do_log_partition(ConstVec u, double eta) const override;

private:
    std::size_t dim_;
};

/// g = lambda ||.||_1: per-coordinate truncated-normal mixtures.
class LaplaceOracle final : public ProxOracle {
public:
    LaplaceOracle(std::size_t dim, double lambda);
    std::size_t dim() const noexcept override { return dim_; }
    double lambda() const noexcept { return lambda_; }

protected:
    Vector do_sample(ConstVec u, double eta, RandomStream& rng) const override;
    double do_log_partition(ConstVec u, double eta) const override;

private:
    std::size_t dim_;
    double lambda_;
};

/// Generic separable g: per-coordinate log-concave rejection sampling and
/// adaptive quadrature for the partition function.
class SeparableOracle final : public ProxOracle {
public:
    explicit SeparableOracle(SeparableGeneric spec);
    std::size_t dim() const noexcept override { return spec_.terms.size(); }

protected:
    Vector do_sample(ConstVec u, double eta, RandomStream& rng) const override;
    double do_log_partition(ConstVec u, double eta) const override;

private:
    SeparableGeneric spec_;
};

/// Group lasso: independent blocks, each handled by GroupLassoSampler
/// (singleton groups use the closed-form Laplace mixture).
class GroupLassoOracle final : public ProxOracle {
public:
    GroupLassoOracle(std::size_t dim, GroupLasso spec, GroupLassoGridConfig grid = {});
    std::size_t dim() const noexcept override { return dim_; }

protected:
    Vector do_sample(ConstVec u, double eta, RandomStream& rng) const override;
    double do_log_partition(ConstVec u, double eta) const override;

private:
    std::size_t dim_;
    GroupLasso spec_;
    GroupLassoGridConfig grid_;
};

/// Oracle matching a regularizer description. Custom regularizers return
/// the oracle they carry.
std::shared_ptr<const ProxOracle> make_oracle(const RegularizerSpec& spec, std::size_t dim,
                                              GroupLassoGridConfig grid = {});
std::shared_ptr<const ProxOracle> make_oracle(const CompositeTarget& target,
                                              GroupLassoGridConfig grid = {});

inline Vector sample_prox(const ProxOracle& oracle, ConstVec u, double eta, RandomStream& rng) {
    return oracle.sample(u, eta, rng);
}

inline double log_partition(const ProxOracle& oracle, ConstVec u, double eta) {
    return oracle.log_partition(u, eta);
}

/// argmin_y ||y - x||^2 / (2 eta) + g(y). Soft-thresholding for ScaledL1,
/// block shrinkage for GroupLasso, golden-section search per coordinate for
/// SeparableGeneric.
Vector prox_map(const RegularizerSpec& spec, ConstVec x, double eta);

/// Proximal point of a single convex 1D term.
double prox_1d(const Function1D& g, double x, double eta);

}  // namespace proxmh
