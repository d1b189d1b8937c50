#pragma once

// Composite targets pi ∝ exp(-f - g), chain state and sampler configuration.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "proxmh/errors.hpp"

namespace proxmh {

using Vector = std::vector<double>;
using ConstVec = std::span<const double>;

using ScalarField = std::function<double(ConstVec)>;
using VectorField = std::function<Vector(ConstVec)>;
using Function1D = std::function<double(double)>;

class ProxOracle;

// ---------------------------------------------------------------------------
// Regularizer descriptions
// ---------------------------------------------------------------------------

struct ZeroRegularizer {};

/// g(x) = lambda * ||x||_1
struct ScaledL1 {
    double lambda = 1.0;
};

/// One coordinate of a separable regularizer. `value` must be convex and
/// `lipschitz`-Lipschitz. `subgradient` is optional; without it subgrad_g
/// reports an unsupported operation.
struct SeparableTerm {
    Function1D value;
    double lipschitz = 0.0;
    Function1D subgradient;
};

/// g(x) = sum_i g_i(x_i)
struct SeparableGeneric {
    std::vector<SeparableTerm> terms;
};

/// g(x) = sum_j w_j ||x_{G_j}||_2 over a partition {G_j} of the coordinates.
struct GroupLasso {
    std::vector<std::vector<std::size_t>> groups;
    std::vector<double> weights;
};

/// Caller-supplied g. The oracle is mandatory; subgradient and prox are
/// optional capabilities.
struct CustomRegularizer {
    ScalarField value;
    VectorField subgradient;
    std::function<Vector(ConstVec, double)> prox;
    std::shared_ptr<const ProxOracle> oracle;
};

using RegularizerSpec =
    std::variant<ZeroRegularizer, ScaledL1, SeparableGeneric, GroupLasso, CustomRegularizer>;

/// Throws PreconditionError when the spec is malformed for dimension `dim`
/// (non-positive weights, groups that do not partition {0..dim-1}, ...).
void validate_regularizer(const RegularizerSpec& spec, std::size_t dim);

/// Standard Lipschitz constant of g: lambda*sqrt(d) for ScaledL1,
/// sqrt(#groups)*max_j w_j for GroupLasso, sqrt(sum L_i^2) for separable
/// terms. Custom regularizers have no derivable constant and throw.
double regularizer_lipschitz(const RegularizerSpec& spec, std::size_t dim);

double eval_g(const RegularizerSpec& spec, ConstVec x);

// ---------------------------------------------------------------------------
// Target
// ---------------------------------------------------------------------------

/// Regularity constants, supplied by the caller and never estimated.
struct RegularityConstants {
    double smoothness_L = 0.0;   ///< Lipschitz constant of grad f
    double dissip_mu = 1.0;      ///< <grad f(x), x - x0> >= mu/2 ||x - x0||^2 - beta
    double dissip_beta = 0.0;
    Vector dissip_center;        ///< x0; empty means the origin
    double lipschitz_Md = 0.0;   ///< Lipschitz constant of g
};

/// Immutable after construction; safe to share between concurrent chains.
class CompositeTarget {
public:
    CompositeTarget(std::size_t dim, ScalarField f_value, VectorField f_grad, RegularizerSpec g,
                    RegularityConstants constants);

    std::size_t dim() const noexcept { return dim_; }
    const RegularizerSpec& regularizer() const noexcept { return g_; }
    const RegularityConstants& constants() const noexcept { return constants_; }

    double smoothness() const noexcept { return constants_.smoothness_L; }
    double lipschitz_g() const noexcept { return constants_.lipschitz_Md; }
    ConstVec dissip_center() const noexcept { return constants_.dissip_center; }

    /// f(x). Dimension-checked.
    double f(ConstVec x) const;
    Vector grad_f(ConstVec x) const;
    double g(ConstVec x) const;

private:
    void check_dim(ConstVec x, const char* what) const;

    std::size_t dim_;
    ScalarField f_value_;
    VectorField f_grad_;
    RegularizerSpec g_;
    RegularityConstants constants_;
};

/// U(x) = f(x) + g(x). Throws DimensionError or NonFinitePotentialError.
double eval_U(const CompositeTarget& target, ConstVec x);

/// One element of the subdifferential of g at x. At kinks the minimal-norm
/// element is returned: 0 for |.| at 0 and the zero block for a group norm
/// at the group origin.
Vector subgrad_g(const CompositeTarget& target, ConstVec x);
Vector subgrad_g(const RegularizerSpec& spec, ConstVec x);

/// f(x) = 1/2 ||x - mean||^2 with the matching constants (L = mu = 1,
/// beta = 0, x0 = mean) and M_d from regularizer_lipschitz.
CompositeTarget make_isotropic_gaussian_target(Vector mean, RegularizerSpec g);

// ---------------------------------------------------------------------------
// Chain state and configuration
// ---------------------------------------------------------------------------

/// Current iterate with caches that are pure functions of (x, eta).
struct ChainState {
    Vector x;
    Vector grad_fx;
    double f_x = 0.0;
    double u_x = 0.0;
    double log_z_shift = 0.0;   ///< log Z(x - eta grad f(x))
    std::uint64_t step_index = 0;
};

struct ExplicitPoint {
    Vector x;
};

/// X_0 ~ N(center, I/(L+1))
struct GaussianAtCenter {
    Vector center;
};

using InitSpec = std::variant<ExplicitPoint, GaussianAtCenter>;

struct SamplerConfig {
    double eta = 0.01;
    std::uint64_t n_steps = 1000;
    std::uint64_t seed = 0;
    bool lazy = false;
    InitSpec init = GaussianAtCenter{};

    /// Throws PreconditionError unless eta > 0 and n_steps >= 1.
    void validate() const;
};

// Small vector helpers shared across modules.
double dot(ConstVec a, ConstVec b);
double norm2(ConstVec a);
double squared_distance(ConstVec a, ConstVec b);

}  // namespace proxmh
