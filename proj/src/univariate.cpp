#include "proxmh/univariate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "proxmh/special.hpp"

namespace proxmh {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Standard normal restricted to [a, b] with a > kTruncatedNormalTailSwitch.
double sample_upper_tail(double a, double b, RandomStream& rng) {
    if (b - a < 2.0 / a) {
        // Narrow slab far in the tail: uniform proposal, ratio exp((a^2 - z^2)/2).
        for (std::uint64_t n = 0; n < kMaxRejectionAttempts; ++n) {
            const double z = a + (b - a) * rng.uniform();
            if (std::log(rng.uniform()) < 0.5 * (a * a - z * z)) return z;
        }
    } else {
        // Exponential envelope with the optimal rate for the lower bound a.
        const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
        for (std::uint64_t n = 0; n < kMaxRejectionAttempts; ++n) {
            const double z = a + rng.exponential() / rate;
            if (z > b) continue;
            const double d = z - rate;
            if (std::log(rng.uniform()) < -0.5 * d * d) return z;
        }
    }
    throw OracleFailureError("truncated normal tail sampler", kMaxRejectionAttempts);
}

double sample_standard_truncated(double a, double b, RandomStream& rng) {
    if (a == -kInf && b == kInf) return rng.normal();
    if (a > kTruncatedNormalTailSwitch) return sample_upper_tail(a, b, rng);
    if (b < -kTruncatedNormalTailSwitch) return -sample_upper_tail(-b, -a, rng);

    double z;
    if (a > 0.0) {
        // Work with survival probabilities so the upper region keeps precision.
        const double qa = normal_cdf(-a);
        const double qb = normal_cdf(-b);
        z = -normal_quantile(qb + rng.uniform() * (qa - qb));
    } else {
        const double pa = normal_cdf(a);
        const double pb = normal_cdf(b);
        z = normal_quantile(pa + rng.uniform() * (pb - pa));
    }
    return std::clamp(z, a, b);
}

}  // namespace

void TruncatedNormalParams::validate() const {
    if (!(variance > 0.0) || !std::isfinite(variance))
        throw PreconditionError("TruncatedNormalParams: variance must be positive");
    if (!std::isfinite(mean)) throw PreconditionError("TruncatedNormalParams: mean must be finite");
    if (!(lower < upper)) throw PreconditionError("TruncatedNormalParams: lower must be < upper");
}

double sample_truncated_normal(const TruncatedNormalParams& params, RandomStream& rng) {
    params.validate();
    const double sd = std::sqrt(params.variance);
    const double a = (params.lower - params.mean) / sd;
    const double b = (params.upper - params.mean) / sd;
    const double y = params.mean + sd * sample_standard_truncated(a, b, rng);
    return std::clamp(y, params.lower, params.upper);
}

LaplaceMixture laplace_oracle_mixture(double u, double eta, double lambda) {
    if (!(eta > 0.0)) throw PreconditionError("laplace_oracle_mixture: eta must be > 0");
    if (!(lambda > 0.0)) throw PreconditionError("laplace_oracle_mixture: lambda must be > 0");
    const double var = 2.0 * eta;
    const double sd = std::sqrt(var);
    const double log_gauss = 0.5 * std::log(4.0 * std::numbers::pi * eta);
    const double mean_plus = u - 2.0 * eta * lambda;
    const double mean_minus = u + 2.0 * eta * lambda;

    LaplaceMixture m;
    m.log_mass_plus = eta * lambda * lambda - lambda * u + log_gauss + log_normal_cdf(mean_plus / sd);
    m.log_mass_minus = eta * lambda * lambda + lambda * u + log_gauss + log_normal_cdf(-mean_minus / sd);
    m.log_partition = log_sum_exp(m.log_mass_plus, m.log_mass_minus);
    m.weight_plus = std::exp(m.log_mass_plus - m.log_partition);
    m.weight_minus = std::exp(m.log_mass_minus - m.log_partition);
    m.tn_plus = {mean_plus, var, 0.0, kInf};
    m.tn_minus = {mean_minus, var, -kInf, 0.0};
    return m;
}

double laplace_log_partition(double u, double eta, double lambda) {
    return laplace_oracle_mixture(u, eta, lambda).log_partition;
}

double sample_laplace_oracle(double u, double eta, double lambda, RandomStream& rng) {
    const LaplaceMixture m = laplace_oracle_mixture(u, eta, lambda);
    return rng.uniform() < m.weight_plus ? sample_truncated_normal(m.tn_plus, rng)
                                         : sample_truncated_normal(m.tn_minus, rng);
}

double locate_mode(const Function1D& h, double hint, double tol) {
    const double f0 = h(hint);
    if (!(f0 > -kInf) || std::isnan(f0))
        throw NotLogConcaveError("locate_mode: log-density is not finite at the mode hint");

    double step = 1e-3 * std::max(1.0, std::abs(hint));
    double lo, hi;
    const double fr = h(hint + step);
    const double fl = h(hint - step);
    if (fr > f0) {
        double a = hint, b = hint + step, fb = fr;
        for (;;) {
            step *= 2.0;
            const double c = b + step;
            const double fc = h(c);
            if (fc <= fb) {
                lo = a;
                hi = c;
                break;
            }
            if (step > 1e15) throw NotLogConcaveError("locate_mode: log-density increases without bound");
            a = b;
            b = c;
            fb = fc;
        }
    } else if (fl > f0) {
        double a = hint, b = hint - step, fb = fl;
        for (;;) {
            step *= 2.0;
            const double c = b - step;
            const double fc = h(c);
            if (fc <= fb) {
                lo = c;
                hi = a;
                break;
            }
            if (step > 1e15) throw NotLogConcaveError("locate_mode: log-density increases without bound");
            a = b;
            b = c;
            fb = fc;
        }
    } else {
        lo = hint - step;
        hi = hint + step;
    }

    constexpr double kInvPhi = 0.61803398874989484820;
    double x1 = hi - kInvPhi * (hi - lo);
    double x2 = lo + kInvPhi * (hi - lo);
    double f1 = h(x1), f2 = h(x2);
    for (int it = 0; it < 500; ++it) {
        if (hi - lo <= tol * std::max(1.0, std::abs(0.5 * (lo + hi)))) break;
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + kInvPhi * (hi - lo);
            f2 = h(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - kInvPhi * (hi - lo);
            f1 = h(x1);
        }
    }
    // Return the best point seen at the end of the search.
    const double mid = 0.5 * (lo + hi);
    const double fm = h(mid);
    if (fm >= f1 && fm >= f2) return mid;
    return f1 >= f2 ? x1 : x2;
}

namespace {

// Distance s > 0 from the mode at which the log-density has dropped by about
// one unit in direction `dir`. Returns the point and its log-density.
std::pair<double, double> unit_drop_point(const Function1D& h, double mode, double peak, double dir) {
    double s = 1e-9 * std::max(1.0, std::abs(mode));
    double hs = h(mode + dir * s);
    int doublings = 0;
    while (peak - hs < 1.0) {
        s *= 2.0;
        hs = h(mode + dir * s);
        if (++doublings > 200) throw NotLogConcaveError("log-concave sampler: density does not decay");
    }
    if (doublings > 0 && std::isfinite(hs)) {
        double a = 0.5 * s, b = s;
        for (int it = 0; it < 30; ++it) {
            const double m = 0.5 * (a + b);
            const double hm = h(mode + dir * m);
            if (peak - hm < 1.0) {
                a = m;
            } else {
                b = m;
                hs = hm;
            }
            if (peak - hs < 1.5) break;
        }
        s = b;
    }
    return {mode + dir * s, hs};
}

}  // namespace

LogConcaveSampler::LogConcaveSampler(Function1D log_density, double mode_hint)
    : log_density_(std::move(log_density)) {
    mode_ = locate_mode(log_density_, mode_hint);
    peak_ = log_density_(mode_);
    if (!std::isfinite(peak_)) throw NotLogConcaveError("log-concave sampler: non-finite peak");

    std::tie(xl_, hl_) = unit_drop_point(log_density_, mode_, peak_, -1.0);
    std::tie(xr_, hr_) = unit_drop_point(log_density_, mode_, peak_, +1.0);

    slope_l_ = hl_ == -kInf ? kInf : (peak_ - hl_) / (mode_ - xl_);
    slope_r_ = hr_ == -kInf ? kInf : (peak_ - hr_) / (xr_ - mode_);
    mass_l_ = hl_ == -kInf ? 0.0 : std::exp(hl_ - peak_) / slope_l_;
    mass_r_ = hr_ == -kInf ? 0.0 : std::exp(hr_ - peak_) / slope_r_;
    mass_c_ = xr_ - xl_;
    log_envelope_mass_ = peak_ + std::log(mass_l_ + mass_c_ + mass_r_);
}

double LogConcaveSampler::envelope(double x) const noexcept {
    if (x < xl_) return hl_ + slope_l_ * (x - xl_);
    if (x > xr_) return hr_ - slope_r_ * (x - xr_);
    return peak_ + 1e-9 * (1.0 + std::abs(peak_));
}

double LogConcaveSampler::sample(RandomStream& rng, std::uint64_t* attempts) const {
    const double total = mass_l_ + mass_c_ + mass_r_;
    for (std::uint64_t n = 1; n <= kMaxRejectionAttempts; ++n) {
        const double pick = rng.uniform() * total;
        double x;
        if (pick < mass_l_) {
            x = xl_ - rng.exponential() / slope_l_;
        } else if (pick < mass_l_ + mass_c_) {
            x = xl_ + rng.uniform() * mass_c_;
        } else {
            x = xr_ + rng.exponential() / slope_r_;
        }
        const double env = envelope(x);
        const double hx = log_density_(x);
        if (hx > env + 1e-7 * (1.0 + std::abs(env)))
            throw NotLogConcaveError("log-concave sampler: density exceeds its chord envelope at x = " +
                                     std::to_string(x));
        if (std::log(rng.uniform()) < hx - env) {
            if (attempts) *attempts = n;
            return x;
        }
    }
    throw OracleFailureError("log-concave sampler", kMaxRejectionAttempts);
}

double sample_logconcave_1d(const Function1D& log_density, double mode_hint, RandomStream& rng) {
    return LogConcaveSampler(log_density, mode_hint).sample(rng);
}

}  // namespace proxmh
