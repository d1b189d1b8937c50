#include "proxmh/oracles.hpp"

#include <cmath>
#include <numbers>

#include "proxmh/quadrature.hpp"
#include "proxmh/univariate.hpp"

namespace proxmh {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double log_gaussian_normaliser(double eta) { return 0.5 * std::log(4.0 * std::numbers::pi * eta); }

}  // namespace

void ProxOracle::check(ConstVec u, double eta) const {
    if (u.size() != dim()) throw DimensionError("proximal oracle", dim(), u.size());
    if (!(eta > 0.0) || !std::isfinite(eta)) throw PreconditionError("proximal oracle: eta must be > 0");
}

Vector ProxOracle::sample(ConstVec u, double eta, RandomStream& rng) const {
    check(u, eta);
    return do_sample(u, eta, rng);
}

double ProxOracle::log_partition(ConstVec u, double eta) const {
    check(u, eta);
    return do_log_partition(u, eta);
}

// --- Gaussian ---------------------------------------------------------------

Vector GaussianOracle::do_sample(ConstVec u, double eta, RandomStream& rng) const {
    const double sd = std::sqrt(2.0 * eta);
    Vector y(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) y[i] = u[i] + sd * rng.normal();
    return y;
}

double GaussianOracle::do_log_partition(ConstVec u, double eta) const {
    return static_cast<double>(u.size()) * log_gaussian_normaliser(eta);
}

// --- Laplace ----------------------------------------------------------------

LaplaceOracle::LaplaceOracle(std::size_t dim, double lambda) : dim_(dim), lambda_(lambda) {
    if (!(lambda > 0.0)) throw PreconditionError("LaplaceOracle: lambda must be > 0");
}

Vector LaplaceOracle::do_sample(ConstVec u, double eta, RandomStream& rng) const {
    Vector y(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) y[i] = sample_laplace_oracle(u[i], eta, lambda_, rng);
    return y;
}

double LaplaceOracle::do_log_partition(ConstVec u, double eta) const {
    double s = 0.0;
    for (double ui : u) s += laplace_log_partition(ui, eta, lambda_);
    return s;
}

// --- Separable --------------------------------------------------------------

SeparableOracle::SeparableOracle(SeparableGeneric spec) : spec_(std::move(spec)) {
    validate_regularizer(spec_, spec_.terms.size());
}

Vector SeparableOracle::do_sample(ConstVec u, double eta, RandomStream& rng) const {
    Vector y(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double ui = u[i];
        const Function1D& gi = spec_.terms[i].value;
        const auto log_density = [&](double v) { return -(v - ui) * (v - ui) / (4.0 * eta) - gi(v); };
        y[i] = LogConcaveSampler(log_density, ui).sample(rng);
    }
    return y;
}

double SeparableOracle::do_log_partition(ConstVec u, double eta) const {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double ui = u[i];
        const SeparableTerm& term = spec_.terms[i];
        const auto log_density = [&](double v) {
            return -(v - ui) * (v - ui) / (4.0 * eta) - term.value(v);
        };
        const double c = prox_1d(term.value, ui, eta);
        s += quadrature_1d(log_density, prox_window(c, eta, term.lipschitz)).log_integral;
    }
    return s;
}

// --- Group lasso ------------------------------------------------------------

GroupLassoOracle::GroupLassoOracle(std::size_t dim, GroupLasso spec, GroupLassoGridConfig grid)
    : dim_(dim), spec_(std::move(spec)), grid_(grid) {
    validate_regularizer(spec_, dim_);
}

Vector GroupLassoOracle::do_sample(ConstVec u, double eta, RandomStream& rng) const {
    Vector y(u.size());
    Vector block;
    for (std::size_t j = 0; j < spec_.groups.size(); ++j) {
        const auto& group = spec_.groups[j];
        const double w = spec_.weights[j];
        if (group.size() == 1) {
            y[group[0]] = sample_laplace_oracle(u[group[0]], eta, w, rng);
            continue;
        }
        block.resize(group.size());
        for (std::size_t k = 0; k < group.size(); ++k) block[k] = u[group[k]];
        const Vector draw = GroupLassoSampler(block, eta, w, grid_).sample(rng);
        for (std::size_t k = 0; k < group.size(); ++k) y[group[k]] = draw[k];
    }
    return y;
}

double GroupLassoOracle::do_log_partition(ConstVec u, double eta) const {
    double s = 0.0;
    for (std::size_t j = 0; j < spec_.groups.size(); ++j) {
        const auto& group = spec_.groups[j];
        double sq = 0.0;
        for (std::size_t i : group) sq += u[i] * u[i];
        s += group.size() == 1 ? laplace_log_partition(u[group[0]], eta, spec_.weights[j])
                               : group_lasso_log_partition(std::sqrt(sq), group.size(), eta,
                                                           spec_.weights[j]);
    }
    return s;
}

// --- Factory and prox -------------------------------------------------------

std::shared_ptr<const ProxOracle> make_oracle(const RegularizerSpec& spec, std::size_t dim,
                                              GroupLassoGridConfig grid) {
    validate_regularizer(spec, dim);
    return std::visit(
        overloaded{
            [dim](const ZeroRegularizer&) -> std::shared_ptr<const ProxOracle> {
                return std::make_shared<GaussianOracle>(dim);
            },
            [dim](const ScaledL1& l1) -> std::shared_ptr<const ProxOracle> {
                return std::make_shared<LaplaceOracle>(dim, l1.lambda);
            },
            [](const SeparableGeneric& sep) -> std::shared_ptr<const ProxOracle> {
                return std::make_shared<SeparableOracle>(sep);
            },
            [dim, grid](const GroupLasso& gl) -> std::shared_ptr<const ProxOracle> {
                return std::make_shared<GroupLassoOracle>(dim, gl, grid);
            },
            [dim](const CustomRegularizer& c) -> std::shared_ptr<const ProxOracle> {
                if (c.oracle->dim() != dim) throw DimensionError("custom oracle", dim, c.oracle->dim());
                return c.oracle;
            },
        },
        spec);
}

std::shared_ptr<const ProxOracle> make_oracle(const CompositeTarget& target, GroupLassoGridConfig grid) {
    return make_oracle(target.regularizer(), target.dim(), grid);
}

double prox_1d(const Function1D& g, double x, double eta) {
    const auto objective = [&](double y) { return -((y - x) * (y - x) / (2.0 * eta) + g(y)); };
    return locate_mode(objective, x, 1e-13);
}

namespace {

// With a subgradient, the optimality map y -> (y - x)/eta + g'(y) is
// nondecreasing and changes sign inside [x - eta L, x + eta L]; bisection
// reaches machine precision where golden-section search on the objective
// stalls near sqrt(epsilon).
double prox_term(const SeparableTerm& term, double x, double eta) {
    if (!term.subgradient || !(term.lipschitz > 0.0) || !std::isfinite(term.lipschitz))
        return prox_1d(term.value, x, eta);
    double lo = x - eta * term.lipschitz, hi = x + eta * term.lipschitz;
    for (int it = 0; it < 200 && lo < hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if ((mid - x) / eta + term.subgradient(mid) < 0.0) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

Vector prox_map(const RegularizerSpec& spec, ConstVec x, double eta) {
    if (!(eta > 0.0)) throw PreconditionError("prox_map: eta must be > 0");
    return std::visit(
        overloaded{
            [x](const ZeroRegularizer&) { return Vector(x.begin(), x.end()); },
            [x, eta](const ScaledL1& l1) {
                const double thr = eta * l1.lambda;
                Vector y(x.size());
                for (std::size_t i = 0; i < x.size(); ++i)
                    y[i] = x[i] > thr ? x[i] - thr : (x[i] < -thr ? x[i] + thr : 0.0);
                return y;
            },
            [x, eta](const SeparableGeneric& sep) {
                if (sep.terms.size() != x.size())
                    throw DimensionError("prox_map", sep.terms.size(), x.size());
                Vector y(x.size());
                for (std::size_t i = 0; i < x.size(); ++i) y[i] = prox_term(sep.terms[i], x[i], eta);
                return y;
            },
            [x, eta](const GroupLasso& gl) {
                Vector y(x.begin(), x.end());
                for (std::size_t j = 0; j < gl.groups.size(); ++j) {
                    double sq = 0.0;
                    for (std::size_t i : gl.groups[j]) sq += x[i] * x[i];
                    const double n = std::sqrt(sq);
                    const double scale = n > eta * gl.weights[j] ? 1.0 - eta * gl.weights[j] / n : 0.0;
                    for (std::size_t i : gl.groups[j]) y[i] = scale * x[i];
                }
                return y;
            },
            [x, eta](const CustomRegularizer& c) {
                if (!c.prox) throw UnsupportedOperationError("CustomRegularizer: no prox oracle");
                return c.prox(x, eta);
            },
        },
        spec);
}

}  // namespace proxmh
