#include "proxmh/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace proxmh {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double group_norm(ConstVec x, const std::vector<std::size_t>& group) {
    double s = 0.0;
    for (std::size_t i : group) s += x[i] * x[i];
    return std::sqrt(s);
}

}  // namespace

double dot(ConstVec a, ConstVec b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(ConstVec a) { return std::sqrt(dot(a, a)); }

double squared_distance(ConstVec a, ConstVec b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void validate_regularizer(const RegularizerSpec& spec, std::size_t dim) {
    std::visit(overloaded{
                   [](const ZeroRegularizer&) {},
                   [](const ScaledL1& l1) {
                       if (!(l1.lambda > 0.0) || !std::isfinite(l1.lambda))
                           throw PreconditionError("ScaledL1: lambda must be positive and finite");
                   },
                   [dim](const SeparableGeneric& sep) {
                       if (sep.terms.size() != dim)
                           throw DimensionError("SeparableGeneric terms", dim, sep.terms.size());
                       for (const auto& t : sep.terms) {
                           if (!t.value) throw PreconditionError("SeparableGeneric: missing g_i oracle");
                           if (!(t.lipschitz >= 0.0))
                               throw PreconditionError("SeparableGeneric: negative Lipschitz bound");
                       }
                   },
                   [dim](const GroupLasso& gl) {
                       if (gl.groups.empty()) throw PreconditionError("GroupLasso: no groups");
                       if (gl.weights.size() != gl.groups.size())
                           throw PreconditionError("GroupLasso: one weight per group required");
                       std::vector<int> seen(dim, 0);
                       for (std::size_t j = 0; j < gl.groups.size(); ++j) {
                           if (gl.groups[j].empty())
                               throw PreconditionError("GroupLasso: group " + std::to_string(j) +
                                                       " is empty");
                           if (!(gl.weights[j] > 0.0) || !std::isfinite(gl.weights[j]))
                               throw PreconditionError("GroupLasso: weights must be positive");
                           for (std::size_t i : gl.groups[j]) {
                               if (i >= dim)
                                   throw PreconditionError("GroupLasso: index " + std::to_string(i) +
                                                           " out of range");
                               if (seen[i]++)
                                   throw PreconditionError("GroupLasso: index " + std::to_string(i) +
                                                           " appears in more than one group");
                           }
                       }
                       if (std::find(seen.begin(), seen.end(), 0) != seen.end())
                           throw PreconditionError("GroupLasso: groups do not cover every coordinate");
                   },
                   [](const CustomRegularizer& c) {
                       if (!c.value) throw PreconditionError("CustomRegularizer: missing g oracle");
                       if (!c.oracle)
                           throw PreconditionError("CustomRegularizer: missing proximal sampling oracle");
                   },
               },
               spec);
}

double regularizer_lipschitz(const RegularizerSpec& spec, std::size_t dim) {
    return std::visit(
        overloaded{
            [](const ZeroRegularizer&) { return 0.0; },
            [dim](const ScaledL1& l1) { return l1.lambda * std::sqrt(static_cast<double>(dim)); },
            [](const SeparableGeneric& sep) {
                double s = 0.0;
                for (const auto& t : sep.terms) s += t.lipschitz * t.lipschitz;
                return std::sqrt(s);
            },
            [](const GroupLasso& gl) {
                const double wmax = *std::max_element(gl.weights.begin(), gl.weights.end());
                return std::sqrt(static_cast<double>(gl.groups.size())) * wmax;
            },
            [](const CustomRegularizer&) -> double {
                throw UnsupportedOperationError(
                    "CustomRegularizer: Lipschitz constant must be supplied by the caller");
            },
        },
        spec);
}

double eval_g(const RegularizerSpec& spec, ConstVec x) {
    return std::visit(overloaded{
                          [](const ZeroRegularizer&) { return 0.0; },
                          [x](const ScaledL1& l1) {
                              double s = 0.0;
                              for (double v : x) s += std::abs(v);
                              return l1.lambda * s;
                          },
                          [x](const SeparableGeneric& sep) {
                              double s = 0.0;
                              for (std::size_t i = 0; i < x.size(); ++i) s += sep.terms[i].value(x[i]);
                              return s;
                          },
                          [x](const GroupLasso& gl) {
                              double s = 0.0;
                              for (std::size_t j = 0; j < gl.groups.size(); ++j)
                                  s += gl.weights[j] * group_norm(x, gl.groups[j]);
                              return s;
                          },
                          [x](const CustomRegularizer& c) { return c.value(x); },
                      },
                      spec);
}

Vector subgrad_g(const RegularizerSpec& spec, ConstVec x) {
    return std::visit(
        overloaded{
            [x](const ZeroRegularizer&) { return Vector(x.size(), 0.0); },
            [x](const ScaledL1& l1) {
                Vector v(x.size());
                for (std::size_t i = 0; i < x.size(); ++i)
                    v[i] = x[i] > 0.0 ? l1.lambda : (x[i] < 0.0 ? -l1.lambda : 0.0);
                return v;
            },
            [x](const SeparableGeneric& sep) {
                Vector v(x.size());
                for (std::size_t i = 0; i < x.size(); ++i) {
                    if (!sep.terms[i].subgradient)
                        throw UnsupportedOperationError("SeparableGeneric: term " + std::to_string(i) +
                                                        " has no subgradient oracle");
                    v[i] = sep.terms[i].subgradient(x[i]);
                }
                return v;
            },
            [x](const GroupLasso& gl) {
                Vector v(x.size(), 0.0);
                for (std::size_t j = 0; j < gl.groups.size(); ++j) {
                    const double n = group_norm(x, gl.groups[j]);
                    if (n == 0.0) continue;
                    for (std::size_t i : gl.groups[j]) v[i] = gl.weights[j] * x[i] / n;
                }
                return v;
            },
            [x](const CustomRegularizer& c) {
                if (!c.subgradient)
                    throw UnsupportedOperationError("CustomRegularizer: no subgradient oracle");
                return c.subgradient(x);
            },
        },
        spec);
}

CompositeTarget::CompositeTarget(std::size_t dim, ScalarField f_value, VectorField f_grad,
                                 RegularizerSpec g, RegularityConstants constants)
    : dim_(dim), f_value_(std::move(f_value)), f_grad_(std::move(f_grad)), g_(std::move(g)),
      constants_(std::move(constants)) {
    if (dim_ == 0) throw PreconditionError("CompositeTarget: dim must be >= 1");
    if (!f_value_ || !f_grad_) throw PreconditionError("CompositeTarget: f and grad f are required");
    if (!(constants_.smoothness_L >= 0.0)) throw PreconditionError("CompositeTarget: L must be >= 0");
    if (!(constants_.dissip_mu > 0.0)) throw PreconditionError("CompositeTarget: mu must be > 0");
    if (!(constants_.dissip_beta >= 0.0)) throw PreconditionError("CompositeTarget: beta must be >= 0");
    if (!(constants_.lipschitz_Md >= 0.0)) throw PreconditionError("CompositeTarget: M_d must be >= 0");
    if (constants_.dissip_center.empty()) constants_.dissip_center.assign(dim_, 0.0);
    if (constants_.dissip_center.size() != dim_)
        throw DimensionError("CompositeTarget dissip_center", dim_, constants_.dissip_center.size());
    validate_regularizer(g_, dim_);
}

void CompositeTarget::check_dim(ConstVec x, const char* what) const {
    if (x.size() != dim_) throw DimensionError(what, dim_, x.size());
}

double CompositeTarget::f(ConstVec x) const {
    check_dim(x, "f");
    return f_value_(x);
}

Vector CompositeTarget::grad_f(ConstVec x) const {
    check_dim(x, "grad f");
    Vector g = f_grad_(x);
    if (g.size() != dim_) throw DimensionError("grad f result", dim_, g.size());
    return g;
}

double CompositeTarget::g(ConstVec x) const {
    check_dim(x, "g");
    return eval_g(g_, x);
}

double eval_U(const CompositeTarget& target, ConstVec x) {
    const double u = target.f(x) + target.g(x);
    if (!std::isfinite(u)) throw NonFinitePotentialError(u);
    return u;
}

Vector subgrad_g(const CompositeTarget& target, ConstVec x) {
    if (x.size() != target.dim()) throw DimensionError("subgrad_g", target.dim(), x.size());
    return subgrad_g(target.regularizer(), x);
}

CompositeTarget make_isotropic_gaussian_target(Vector mean, RegularizerSpec g) {
    const std::size_t d = mean.size();
    if (d == 0) throw PreconditionError("make_isotropic_gaussian_target: empty mean");
    validate_regularizer(g, d);
    RegularityConstants c;
    c.smoothness_L = 1.0;
    c.dissip_mu = 1.0;
    c.dissip_beta = 0.0;
    c.dissip_center = mean;
    c.lipschitz_Md = regularizer_lipschitz(g, d);
    auto f = [mean](ConstVec x) { return 0.5 * squared_distance(x, mean); };
    auto grad = [mean](ConstVec x) {
        Vector v(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) v[i] = x[i] - mean[i];
        return v;
    };
    return CompositeTarget(d, f, grad, std::move(g), std::move(c));
}

void SamplerConfig::validate() const {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw PreconditionError("SamplerConfig: eta must be > 0");
    if (n_steps < 1) throw PreconditionError("SamplerConfig: n_steps must be >= 1");
}

}  // namespace proxmh
