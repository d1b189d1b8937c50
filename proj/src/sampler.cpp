#include "proxmh/sampler.hpp"

#include <cmath>
#include <numbers>

namespace proxmh {

namespace {

Vector shifted(ConstVec x, ConstVec grad, double eta) {
    Vector u(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) u[i] = x[i] - eta * grad[i];
    return u;
}

// ||a - b + eta * c||^2
double drift_residual(ConstVec a, ConstVec b, ConstVec c, double eta) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i] + eta * c[i];
        s += d * d;
    }
    return s;
}

StepOutcome lazy_hold(const ChainState& state) {
    StepOutcome out;
    out.next = state;
    out.next.step_index = state.step_index + 1;
    out.proposed = state.x;
    out.accepted = false;
    out.log_accept_prob = 0.0;
    out.was_lazy_hold = true;
    return out;
}

bool accept_draw(double log_alpha, const RandomStream& step_stream) {
    RandomStream rng = step_stream.split(StreamSite::Acceptance);
    return std::log(rng.uniform()) < log_alpha;
}

StepOutcome finish(const ChainState& state, ChainState candidate, double log_alpha,
                   const RandomStream& step_stream) {
    StepOutcome out;
    out.proposed = candidate.x;
    out.log_accept_prob = log_alpha;
    out.accepted = accept_draw(log_alpha, step_stream);
    out.next = out.accepted ? std::move(candidate) : state;
    out.next.step_index = state.step_index + 1;
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------

ChainState make_state(const CompositeTarget& target, const ProxOracle& oracle, Vector x, double eta,
                      std::uint64_t step_index) {
    if (x.size() != target.dim()) throw DimensionError("make_state", target.dim(), x.size());
    ChainState s;
    s.grad_fx = target.grad_f(x);
    s.f_x = target.f(x);
    s.u_x = s.f_x + target.g(x);
    if (!std::isfinite(s.u_x)) throw NonFinitePotentialError(s.u_x);
    s.log_z_shift = oracle.log_partition(shifted(x, s.grad_fx, eta), eta);
    s.x = std::move(x);
    s.step_index = step_index;
    return s;
}

double proposal_log_density(const CompositeTarget& target, const ProxOracle& oracle, ConstVec x,
                            ConstVec y, double eta) {
    if (x.size() != target.dim()) throw DimensionError("proposal_log_density x", target.dim(), x.size());
    if (y.size() != target.dim()) throw DimensionError("proposal_log_density y", target.dim(), y.size());
    const Vector grad = target.grad_f(x);
    const Vector u = shifted(x, grad, eta);
    return -squared_distance(y, u) / (4.0 * eta) - target.g(y) - oracle.log_partition(u, eta);
}

double log_accept_ratio(const ChainState& x, const ChainState& z, double eta) {
    const double forward = drift_residual(z.x, x.x, x.grad_fx, eta);   // ||z - x + eta grad f(x)||^2
    const double backward = drift_residual(x.x, z.x, z.grad_fx, eta);  // ||x - z + eta grad f(z)||^2
    const double log_ratio = x.log_z_shift - z.log_z_shift + x.f_x - z.f_x +
                             (forward - backward) / (4.0 * eta);
    if (std::isnan(log_ratio)) return -std::numeric_limits<double>::infinity();
    return std::min(0.0, log_ratio);
}

double log_accept_ratio(const CompositeTarget& target, const ProxOracle& oracle, const ChainState& x,
                        ConstVec z, double eta) {
    const ChainState candidate = make_state(target, oracle, Vector(z.begin(), z.end()), eta);
    return log_accept_ratio(x, candidate, eta);
}

StepOutcome step(const CompositeTarget& target, const ProxOracle& oracle, const ChainState& state,
                 const SamplerConfig& config, const RandomStream& step_stream) {
    try {
        if (config.lazy && step_stream.split(StreamSite::LazyCoin).coin()) return lazy_hold(state);
        RandomStream proposal_rng = step_stream.split(StreamSite::Proposal);
        const Vector u = shifted(state.x, state.grad_fx, config.eta);
        Vector z = oracle.sample(u, config.eta, proposal_rng);
        ChainState candidate = make_state(target, oracle, std::move(z), config.eta, state.step_index + 1);
        const double log_alpha = log_accept_ratio(state, candidate, config.eta);
        return finish(state, std::move(candidate), log_alpha, step_stream);
    } catch (const StepFailure&) {
        throw;
    } catch (const NumericError& e) {
        throw StepFailure(e.what(), state.step_index);
    }
}

// ---------------------------------------------------------------------------

SmoothPotential smooth_potential(const CompositeTarget& target) {
    if (!std::holds_alternative<ZeroRegularizer>(target.regularizer()))
        throw PreconditionError("smooth_potential: target has a non-smooth regularizer; use the Moreau surrogate");
    return {target.dim(), [&target](ConstVec x) { return target.f(x); },
            [&target](ConstVec x) { return target.grad_f(x); }};
}

SmoothPotential moreau_smoothed_potential(const CompositeTarget& target, double gamma) {
    if (!(gamma > 0.0)) throw PreconditionError("moreau_smoothed_potential: gamma must be > 0");
    auto value = [&target, gamma](ConstVec x) {
        const Vector p = prox_map(target.regularizer(), x, gamma);
        return target.f(x) + eval_g(target.regularizer(), p) + squared_distance(x, p) / (2.0 * gamma);
    };
    auto grad = [&target, gamma](ConstVec x) {
        const Vector p = prox_map(target.regularizer(), x, gamma);
        Vector g = target.grad_f(x);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += (x[i] - p[i]) / gamma;
        return g;
    };
    return {target.dim(), value, grad};
}

ChainState make_smooth_state(const SmoothPotential& potential, Vector x, double eta,
                             std::uint64_t step_index) {
    if (x.size() != potential.dim) throw DimensionError("make_smooth_state", potential.dim, x.size());
    ChainState s;
    s.grad_fx = potential.grad(x);
    s.f_x = potential.value(x);
    s.u_x = s.f_x;
    if (!std::isfinite(s.u_x)) throw NonFinitePotentialError(s.u_x);
    s.log_z_shift = 0.5 * static_cast<double>(potential.dim) * std::log(4.0 * std::numbers::pi * eta);
    s.x = std::move(x);
    s.step_index = step_index;
    return s;
}

namespace {

Vector langevin_proposal(const ChainState& state, double eta, const RandomStream& step_stream) {
    RandomStream rng = step_stream.split(StreamSite::Proposal);
    const Vector u = shifted(state.x, state.grad_fx, eta);
    const double sd = std::sqrt(2.0 * eta);
    Vector y(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) y[i] = u[i] + sd * rng.normal();
    return y;
}

}  // namespace

StepOutcome mala_step(const SmoothPotential& potential, const ChainState& state, double eta, bool lazy,
                      const RandomStream& step_stream) {
    if (lazy && step_stream.split(StreamSite::LazyCoin).coin()) return lazy_hold(state);
    ChainState candidate =
        make_smooth_state(potential, langevin_proposal(state, eta, step_stream), eta, state.step_index + 1);
    // log pi(z) q(z, x) - log pi(x) q(x, z) with Gaussian q; normalisers cancel.
    const double log_q_forward = -drift_residual(candidate.x, state.x, state.grad_fx, eta) / (4.0 * eta);
    const double log_q_backward = -drift_residual(state.x, candidate.x, candidate.grad_fx, eta) / (4.0 * eta);
    double log_alpha = (-candidate.u_x + log_q_backward) - (-state.u_x + log_q_forward);
    log_alpha = std::isnan(log_alpha) ? -std::numeric_limits<double>::infinity() : std::min(0.0, log_alpha);
    return finish(state, std::move(candidate), log_alpha, step_stream);
}

StepOutcome ula_step(const SmoothPotential& potential, const ChainState& state, double eta, bool lazy,
                     const RandomStream& step_stream) {
    if (lazy && step_stream.split(StreamSite::LazyCoin).coin()) return lazy_hold(state);
    StepOutcome out;
    out.next = make_smooth_state(potential, langevin_proposal(state, eta, step_stream), eta,
                                 state.step_index + 1);
    out.proposed = out.next.x;
    out.accepted = true;
    out.log_accept_prob = 0.0;
    return out;
}

// ---------------------------------------------------------------------------

ProxMHKernel::ProxMHKernel(const CompositeTarget& target, const ProxOracle& oracle, double eta, bool lazy)
    : target_(target), oracle_(oracle) {
    if (oracle.dim() != target.dim()) throw DimensionError("ProxMHKernel oracle", target.dim(), oracle.dim());
    config_.eta = eta;
    config_.lazy = lazy;
    config_.validate();
}

Vector ProxMHKernel::default_center() const {
    const ConstVec c = target_.dissip_center();
    return Vector(c.begin(), c.end());
}

ChainState ProxMHKernel::initial_state(Vector x) const {
    return make_state(target_, oracle_, std::move(x), config_.eta);
}

StepOutcome ProxMHKernel::transition(const ChainState& state, const RandomStream& step_stream) const {
    return step(target_, oracle_, state, config_, step_stream);
}

LangevinKernel::LangevinKernel(SmoothPotential potential, double smoothness, Vector center, double eta,
                               bool lazy, Kind kind)
    : potential_(std::move(potential)), smoothness_(smoothness), center_(std::move(center)), eta_(eta),
      lazy_(lazy), kind_(kind) {
    if (!(eta > 0.0)) throw PreconditionError("LangevinKernel: eta must be > 0");
    if (center_.empty()) center_.assign(potential_.dim, 0.0);
    if (center_.size() != potential_.dim) throw DimensionError("LangevinKernel center", potential_.dim, center_.size());
}

ChainState LangevinKernel::initial_state(Vector x) const {
    return make_smooth_state(potential_, std::move(x), eta_);
}

StepOutcome LangevinKernel::transition(const ChainState& state, const RandomStream& step_stream) const {
    try {
        return kind_ == Kind::Adjusted ? mala_step(potential_, state, eta_, lazy_, step_stream)
                                       : ula_step(potential_, state, eta_, lazy_, step_stream);
    } catch (const StepFailure&) {
        throw;
    } catch (const NumericError& e) {
        throw StepFailure(e.what(), state.step_index);
    }
}

// ---------------------------------------------------------------------------

std::vector<double> SampleMatrix::column(std::size_t j, std::size_t first) const {
    std::vector<double> c;
    if (first >= rows_) return c;
    c.reserve(rows_ - first);
    for (std::size_t i = first; i < rows_; ++i) c.push_back(data_[i * dim_ + j]);
    return c;
}

std::size_t ChainRun::accepted() const noexcept {
    std::size_t n = 0;
    for (const auto& s : steps) n += s.accepted ? 1 : 0;
    return n;
}

std::size_t ChainRun::non_lazy() const noexcept {
    std::size_t n = 0;
    for (const auto& s : steps) n += s.lazy_hold ? 0 : 1;
    return n;
}

double ChainRun::acceptance_rate() const noexcept {
    const std::size_t n = non_lazy();
    return n == 0 ? 0.0 : static_cast<double>(accepted()) / static_cast<double>(n);
}

RandomStream chain_stream(std::uint64_t seed, std::uint64_t chain_index) {
    return RandomStream(seed).split(chain_index);
}

Vector initial_point(const InitSpec& init, std::size_t dim, double smoothness, ConstVec default_center,
                     RandomStream& rng) {
    if (const auto* p = std::get_if<ExplicitPoint>(&init)) {
        if (p->x.size() != dim) throw DimensionError("initial point", dim, p->x.size());
        return p->x;
    }
    const auto& g = std::get<GaussianAtCenter>(init);
    const ConstVec center = g.center.empty() ? default_center : ConstVec(g.center);
    if (center.size() != dim) throw DimensionError("initialisation centre", dim, center.size());
    const double sd = 1.0 / std::sqrt(smoothness + 1.0);
    Vector x(dim);
    for (std::size_t i = 0; i < dim; ++i) x[i] = center[i] + sd * rng.normal();
    return x;
}

ChainRun run_chain(const TransitionKernel& kernel, const SamplerConfig& config, std::uint64_t chain_index) {
    config.validate();
    const RandomStream stream = chain_stream(config.seed, chain_index);
    RandomStream init_rng = stream.split(StreamSite::Initialization);
    const Vector center = kernel.default_center();

    ChainRun run;
    run.chain_index = chain_index;
    run.samples = SampleMatrix(config.n_steps + 1, kernel.dim());
    run.steps.reserve(config.n_steps);

    ChainState state = kernel.initial_state(
        initial_point(config.init, kernel.dim(), kernel.smoothness(), center, init_rng));
    std::copy(state.x.begin(), state.x.end(), run.samples.row(0).begin());
    for (std::uint64_t t = 0; t < config.n_steps; ++t) {
        StepOutcome out = kernel.transition(state, stream.split(t));
        run.steps.push_back({out.accepted, out.was_lazy_hold, out.log_accept_prob});
        state = std::move(out.next);
        std::copy(state.x.begin(), state.x.end(), run.samples.row(t + 1).begin());
    }
    return run;
}

ChainRun run_chain(const CompositeTarget& target, const ProxOracle& oracle, const SamplerConfig& config) {
    return run_chain(ProxMHKernel(target, oracle, config.eta, config.lazy), config, 0);
}

// ---------------------------------------------------------------------------

TuningReport tune(const CompositeTarget& target, ConstVec x0, double epsilon, double s,
                  double universal_constant) {
    if (x0.size() != target.dim()) throw DimensionError("tune x0", target.dim(), x0.size());
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw PreconditionError("tune: epsilon must lie in (0, 1]");
    if (!(s > 0.0 && s < 1.0)) throw PreconditionError("tune: s must lie in (0, 1)");
    if (!(universal_constant > 0.0)) throw PreconditionError("tune: universal constant must be > 0");

    const auto& c = target.constants();
    const double L = c.smoothness_L;
    const double mu = c.dissip_mu;
    const double beta = c.dissip_beta;
    const double M = c.lipschitz_Md;
    const double d = static_cast<double>(target.dim());

    Vector grad_u = target.grad_f(x0);
    const Vector v = subgrad_g(target, x0);
    for (std::size_t i = 0; i < grad_u.size(); ++i) grad_u[i] += v[i];

    TuningReport r;
    r.universal_constant = universal_constant;
    r.a0 = norm2(grad_u);
    const double a0sq = r.a0 * r.a0;
    const double log_warm_base = std::log(4.0 * (L + 1.0) / mu);
    r.radius_R = universal_constant / std::sqrt(mu) *
                 std::sqrt((L + 1.0 / mu) * a0sq + M * M + beta + d * log_warm_base + std::log(1.0 / epsilon));
    r.recommended_eta = 1.0 / (2.0 * L * L * r.radius_R * r.radius_R + L * d);
    r.warmness_log_M0 = 0.5 * d * log_warm_base + (L + 1.0 / mu) * a0sq + 0.25 * M * M + beta;
    r.tail_radius_Rs = universal_constant * std::sqrt((beta + d + M * M + std::log(1.0 / s)) / mu);
    return r;
}

}  // namespace proxmh
