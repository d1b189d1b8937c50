#include "proxmh/group_lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "proxmh/quadrature.hpp"
#include "proxmh/special.hpp"

namespace proxmh {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Uniform unit vector orthogonal to `axis` (or on the whole sphere when
// `axis` is empty).
Vector orthogonal_direction(std::size_t dim, const Vector& axis, RandomStream& rng) {
    for (;;) {
        Vector v(dim);
        for (double& c : v) c = rng.normal();
        if (!axis.empty()) {
            const double p = dot(v, axis);
            for (std::size_t i = 0; i < dim; ++i) v[i] -= p * axis[i];
        }
        const double n = norm2(v);
        if (n > 1e-300) {
            for (double& c : v) c /= n;
            return v;
        }
    }
}

double radial_mode(std::size_t dim, double eta, double weight) {
    const double k1 = static_cast<double>(dim) - 1.0;
    return -eta * weight + std::sqrt(eta * eta * weight * weight + 2.0 * eta * k1);
}


// log(exp(-x) I_nu(x)) for nu >= 0 and x > 0, finite where I_nu itself
// under- or overflows.
double log_scaled_bessel_i(double nu, double x) {
    if (x >= 600.0 && nu * nu <= 0.25 * x) {
        // Large-argument expansion; terms shrink by at least 1/8 from the start.
        const double mu = 4.0 * nu * nu;
        double term = 1.0;
        double sum = 1.0;
        for (int k = 1; k < 200; ++k) {
            const double odd = 2.0 * k - 1.0;
            term *= -(mu - odd * odd) / (8.0 * k * x);
            sum += term;
            if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
        }
        return std::log(sum) - 0.5 * std::log(2.0 * std::numbers::pi * x);
    }
    if (x >= 50.0 && x < 600.0) {
        const double v = boost::math::cyl_bessel_i(nu, x);
        if (v > 0.0 && std::isfinite(v)) return std::log(v) - x;
    }
    // Power series with positive terms, rescaled to stay in range.
    const double q = 0.25 * x * x;
    double log_scale = nu * std::log(0.5 * x) - boost::math::lgamma(nu + 1.0) - x;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 1000000; ++k) {
        term *= q / (k * (nu + k));
        sum += term;
        if (sum > 1e280) {
            sum *= 1e-280;
            term *= 1e-280;
            log_scale += 280.0 * std::numbers::ln10;
        }
        if (k > 0.5 * x && term <= 1e-17 * sum) break;
    }
    return log_scale + std::log(sum);
}

}  // namespace

double group_lasso_window(std::size_t dim, double eta, double weight) {
    return std::sqrt(2.0 * eta) * (std::sqrt(static_cast<double>(dim)) + 12.0) + 2.0 * eta * weight;
}

GroupLassoSampler::GroupLassoSampler(ConstVec center, double eta, double weight,
                                     GroupLassoGridConfig config)
    : dim_(center.size()), eta_(eta), weight_(weight), n_(config.resolution) {
    if (dim_ < 2) throw PreconditionError("GroupLassoSampler: group dimension must be >= 2");
    if (!(eta > 0.0)) throw PreconditionError("GroupLassoSampler: eta must be > 0");
    if (!(weight >= 0.0)) throw PreconditionError("GroupLassoSampler: weight must be >= 0");
    if (n_ < 2) throw PreconditionError("GroupLassoSampler: grid resolution must be >= 2");

    norm_ = norm2(center);
    const double half = group_lasso_window(dim_, eta, weight);
    r_hi_ = half;

    if (norm_ == 0.0) {
        const double k1 = static_cast<double>(dim_) - 1.0;
        radial_.emplace(
            [=](double r) {
                if (!(r > 0.0)) return -kInf;
                return k1 * std::log(r) - r * r / (4.0 * eta) - weight * r;
            },
            radial_mode(dim_, eta, weight));
        t_lo_ = -half;
        t_hi_ = half;
        dt_ = dr_ = 0.0;
        return;
    }

    axis_.assign(center.begin(), center.end());
    for (double& c : axis_) c /= norm_;

    const double t_mode = std::max(norm_ - 2.0 * eta * weight, 0.0);
    t_lo_ = t_mode - half;
    t_hi_ = t_mode + half;
    dt_ = (t_hi_ - t_lo_) / n_;
    dr_ = r_hi_ / n_;

    const double k = static_cast<double>(dim_) - 2.0;
    log_bound_.resize(static_cast<std::size_t>(n_) * n_);
    for (int i = 0; i < n_; ++i) {
        const double t = t_lo_ + (i + 0.5) * dt_;
        for (int j = 0; j < n_; ++j) {
            const double r = (j + 0.5) * dr_;
            const double rho = std::hypot(t, r);
            const double d_t = -(t - norm_) / (2.0 * eta) - weight * t / rho;
            const double d_r = (k > 0.0 ? k / r : 0.0) - r / (2.0 * eta) - weight * r / rho;
            log_bound_[static_cast<std::size_t>(i) * n_ + j] =
                log_q(t, r) + 0.5 * (std::abs(d_t) * dt_ + std::abs(d_r) * dr_);
        }
    }
    const double top = *std::max_element(log_bound_.begin(), log_bound_.end());
    cumulative_.resize(log_bound_.size());
    double acc = 0.0;
    for (std::size_t c = 0; c < log_bound_.size(); ++c) {
        acc += std::exp(log_bound_[c] - top);
        cumulative_[c] = acc;
    }
}

double GroupLassoSampler::log_q(double t, double r) const noexcept {
    const double k = static_cast<double>(dim_) - 2.0;
    const double dt = t - norm_;
    double v = -(dt * dt + r * r) / (4.0 * eta_) - weight_ * std::hypot(t, r);
    if (k > 0.0) v += k * std::log(r);
    return v;
}

Vector GroupLassoSampler::assemble(double t, double r, RandomStream& rng) const {
    const Vector v = orthogonal_direction(dim_, axis_, rng);
    Vector y(dim_);
    for (std::size_t i = 0; i < dim_; ++i) y[i] = t * axis_[i] + r * v[i];
    return y;
}

Vector GroupLassoSampler::sample(RandomStream& rng, std::uint64_t* attempts) const {
    if (radial_) {
        const double r = radial_->sample(rng, attempts);
        Vector v = orthogonal_direction(dim_, {}, rng);
        for (double& c : v) c *= r;
        return v;
    }
    const double total = cumulative_.back();
    for (std::uint64_t n = 1; n <= kMaxRejectionAttempts; ++n) {
        const double pick = rng.uniform() * total;
        const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), pick);
        const std::size_t cell =
            std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
        const int i = static_cast<int>(cell / n_);
        const int j = static_cast<int>(cell % n_);
        const double t = t_lo_ + (i + rng.uniform()) * dt_;
        const double r = (j + rng.uniform()) * dr_;
        if (std::log(rng.uniform()) < log_q(t, r) - log_bound_[cell]) {
            if (attempts) *attempts = n;
            return assemble(t, r, rng);
        }
    }
    throw OracleFailureError("group lasso grid sampler", kMaxRejectionAttempts);
}

Vector group_lasso_oracle_sample(ConstVec x_center, double eta, double weight, RandomStream& rng,
                                 const GroupLassoGridConfig& config) {
    if (x_center.empty()) throw PreconditionError("group_lasso_oracle_sample: empty group");
    if (x_center.size() == 1) {
        const double u = x_center[0];
        const auto log_density = [=](double y) {
            return -(y - u) * (y - u) / (4.0 * eta) - weight * std::abs(y);
        };
        const double hint = u > 0 ? std::max(u - 2.0 * eta * weight, 0.0)
                                  : std::min(u + 2.0 * eta * weight, 0.0);
        return {sample_logconcave_1d(log_density, hint, rng)};
    }
    return GroupLassoSampler(x_center, eta, weight, config).sample(rng);
}

double group_lasso_log_partition(double norm_u, std::size_t dim, double eta, double weight) {
    if (dim == 0) throw PreconditionError("group_lasso_log_partition: empty group");
    if (!(eta > 0.0)) throw PreconditionError("group_lasso_log_partition: eta must be > 0");
    if (dim == 1) return laplace_log_partition(norm_u, eta, weight);

    const double half = group_lasso_window(dim, eta, weight);
    if (norm_u == 0.0) {
        const double k1 = static_cast<double>(dim) - 1.0;
        Quadrature1DConfig cfg;
        cfg.lower = 0.0;
        cfg.upper = half;
        cfg.rel_tol = 1e-12;
        const auto radial = [=](double r) {
            if (!(r > 0.0)) return k1 > 0.0 ? -kInf : 0.0;
            return k1 * std::log(r) - r * r / (4.0 * eta) - weight * r;
        };
        return log_unit_sphere_area(static_cast<int>(dim)) + quadrature_1d(radial, cfg).log_integral;
    }

    // Integrate the angle out in closed form: over the sphere of radius rho,
    // exp(<y, u>/(2 eta)) averages to a Bessel I_{dim/2-1} term.
    const double d = static_cast<double>(dim);
    const double nu = 0.5 * d - 1.0;
    const double log_const = 0.5 * d * std::log(2.0 * std::numbers::pi);
    const double centre = std::max(norm_u - 2.0 * eta * weight, 0.0);

    Quadrature1DConfig cfg;
    cfg.lower = std::max(centre - half, 0.0);
    cfg.upper = centre + half;
    cfg.rel_tol = 1e-12;
    const auto radial = [=](double rho) {
        if (!(rho > 0.0)) return -kInf;
        const double kappa = rho * norm_u / (2.0 * eta);
        return (d - 1.0) * std::log(rho) - (rho - norm_u) * (rho - norm_u) / (4.0 * eta) - weight * rho -
               nu * std::log(kappa) + log_scaled_bessel_i(nu, kappa);
    };
    return log_const + quadrature_1d(radial, cfg).log_integral;
}

}  // namespace proxmh
