#include "proxmh/diagnostics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <exception>
#include <numbers>
#include <numeric>

#include <boost/math/quadrature/gauss.hpp>
#include <unsupported/Eigen/FFT>

#include "proxmh/parallel.hpp"
#include "proxmh/special.hpp"

namespace proxmh {

namespace {

constexpr std::size_t kNodes = 8;

struct GaussRule {
    std::array<double, kNodes> x;
    std::array<double, kNodes> log_w;
};

const GaussRule& gauss_rule() {
    static const GaussRule rule = [] {
        using Gauss = boost::math::quadrature::gauss<double, kNodes>;
        GaussRule r{};
        const auto& a = Gauss::abscissa();
        const auto& w = Gauss::weights();
        for (std::size_t i = 0; i < a.size(); ++i) {
            r.x[2 * i] = -a[i];
            r.x[2 * i + 1] = a[i];
            r.log_w[2 * i] = r.log_w[2 * i + 1] = std::log(w[i]);
        }
        return r;
    }();
    return rule;
}

// Runs body(i) for i in [0, n), serially or with OpenMP, and rethrows the
// exception of the lowest failing index.
template <class Body>
void for_each_index(std::size_t n, Execution execution, int threads, Body&& body) {
    if (execution == Execution::Serial) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(n);
    const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 64) num_threads(resolve_threads(threads))
    for (std::int64_t i = 0; i < count; ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace

// ---------------------------------------------------------------------------
// Grid
// ---------------------------------------------------------------------------

std::optional<std::size_t> GridAxis::locate(double v) const noexcept {
    if (!(v >= lower && v < upper)) return std::nullopt;
    const auto i = static_cast<std::size_t>((v - lower) / width());
    return std::min(i, bins - 1);
}

void GridAxis::validate() const {
    if (!(std::isfinite(lower) && std::isfinite(upper) && upper > lower))
        throw PreconditionError("grid axis: need finite lower < upper");
    if (bins == 0) throw PreconditionError("grid axis: bins must be >= 1");
}

namespace {

std::size_t cell_count(const std::vector<GridAxis>& axes) {
    std::size_t n = 1;
    for (const auto& a : axes) n *= a.bins;
    return n;
}

// Moments of the uniform law on each cell: {means, second moments}.
std::pair<std::vector<double>, std::vector<double>> uniform_cell_moments(const std::vector<GridAxis>& axes) {
    const std::size_t d = axes.size();
    const std::size_t n = cell_count(axes);
    const std::size_t inner = d == 2 ? axes[1].bins : 1;
    std::vector<double> mean(n * d), second(n * d * d);
    for (std::size_t c = 0; c < n; ++c) {
        const std::array<std::size_t, 2> idx{c / inner, c % inner};
        for (std::size_t a = 0; a < d; ++a) mean[c * d + a] = axes[a].center(idx[a]);
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b) {
                double v = mean[c * d + a] * mean[c * d + b];
                if (a == b) v += axes[a].width() * axes[a].width() / 12.0;
                second[(c * d + a) * d + b] = v;
            }
    }
    return {std::move(mean), std::move(second)};
}

}  // namespace

GroundTruthGrid::GroundTruthGrid(std::vector<GridAxis> axes, std::vector<double> log_density) {
    if (axes.empty() || axes.size() > 2) throw PreconditionError("GroundTruthGrid: 1 or 2 axes required");
    auto [mean, second] = uniform_cell_moments(axes);
    *this = GroundTruthGrid(std::move(axes), std::move(log_density), std::move(mean), std::move(second));
}

GroundTruthGrid::GroundTruthGrid(std::vector<GridAxis> axes, std::vector<double> log_density,
                                 std::vector<double> cell_mean, std::vector<double> cell_second)
    : axes_(std::move(axes)), log_density_(std::move(log_density)), cell_mean_(std::move(cell_mean)),
      cell_second_(std::move(cell_second)) {
    if (axes_.empty() || axes_.size() > 2) throw PreconditionError("GroundTruthGrid: 1 or 2 axes required");
    std::size_t expected = 1;
    for (const auto& a : axes_) {
        a.validate();
        expected *= a.bins;
    }
    const std::size_t d = axes_.size();
    if (log_density_.size() != expected) throw DimensionError("GroundTruthGrid cells", expected, log_density_.size());
    if (cell_mean_.size() != expected * d) throw DimensionError("GroundTruthGrid cell means", expected * d, cell_mean_.size());
    if (cell_second_.size() != expected * d * d)
        throw DimensionError("GroundTruthGrid cell second moments", expected * d * d, cell_second_.size());
    for (double v : log_density_)
        if (!std::isfinite(v)) throw NumericError("GroundTruthGrid: non-finite cell log-density");

    const double log_volume = std::log(cell_volume());
    normalizer_ = log_sum_exp(log_density_) + log_volume;
    mass_.resize(expected);
    cumulative_.resize(expected);
    double acc = 0.0;
    for (std::size_t c = 0; c < expected; ++c) {
        mass_[c] = std::exp(log_density_[c] + log_volume - normalizer_);
        acc += mass_[c];
        cumulative_[c] = acc;
    }
}

double GroundTruthGrid::cell_volume() const noexcept {
    double v = 1.0;
    for (const auto& a : axes_) v *= a.width();
    return v;
}

std::optional<std::size_t> GroundTruthGrid::locate(ConstVec point) const {
    if (point.size() != dims()) throw DimensionError("GroundTruthGrid::locate", dims(), point.size());
    std::size_t cell = 0;
    for (std::size_t a = 0; a < dims(); ++a) {
        const auto i = axes_[a].locate(point[a]);
        if (!i) return std::nullopt;
        cell = cell * axes_[a].bins + *i;
    }
    return cell;
}

Vector GroundTruthGrid::mean() const {
    const std::size_t d = dims();
    Vector m(d, 0.0);
    for (std::size_t c = 0; c < cells(); ++c)
        for (std::size_t a = 0; a < d; ++a) m[a] += mass_[c] * cell_mean_[c * d + a];
    return m;
}

Vector GroundTruthGrid::covariance() const {
    const std::size_t d = dims();
    const Vector m = mean();
    Vector cov(d * d, 0.0);
    for (std::size_t c = 0; c < cells(); ++c)
        for (std::size_t k = 0; k < d * d; ++k) cov[k] += mass_[c] * cell_second_[c * d * d + k];
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) cov[a * d + b] -= m[a] * m[b];
    return cov;
}

GroundTruthGrid GroundTruthGrid::marginal(std::size_t axis) const {
    if (axis >= dims()) throw PreconditionError("GroundTruthGrid::marginal: axis out of range");
    if (dims() == 1) return *this;

    const std::size_t keep_bins = axes_[axis].bins;
    const std::size_t other = 1 - axis;
    const std::size_t inner = axes_[1].bins;
    const double log_other_width = std::log(axes_[other].width());

    std::vector<double> ld(keep_bins), cm(keep_bins), cs(keep_bins);
    std::vector<double> terms;
    for (std::size_t i = 0; i < keep_bins; ++i) {
        terms.clear();
        double w = 0.0, m1 = 0.0, m2 = 0.0;
        for (std::size_t j = 0; j < axes_[other].bins; ++j) {
            const std::size_t c = axis == 0 ? i * inner + j : j * inner + i;
            terms.push_back(log_density_[c]);
            w += mass_[c];
            m1 += mass_[c] * cell_mean_[c * 2 + axis];
            m2 += mass_[c] * cell_second_[c * 4 + axis * 2 + axis];
        }
        ld[i] = log_sum_exp(terms) + log_other_width;
        if (w > 0.0) {
            cm[i] = m1 / w;
            cs[i] = m2 / w;
        } else {
            const double ctr = axes_[axis].center(i);
            const double width = axes_[axis].width();
            cm[i] = ctr;
            cs[i] = ctr * ctr + width * width / 12.0;
        }
    }
    return GroundTruthGrid({axes_[axis]}, std::move(ld), std::move(cm), std::move(cs));
}

Vector GroundTruthGrid::sample(RandomStream& rng) const {
    const double pick = rng.uniform() * cumulative_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), pick);
    std::size_t cell = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), cells() - 1);
    Vector x(dims());
    for (std::size_t a = dims(); a-- > 0;) {
        const std::size_t i = cell % axes_[a].bins;
        cell /= axes_[a].bins;
        x[a] = axes_[a].lower + (static_cast<double>(i) + rng.uniform()) * axes_[a].width();
    }
    return x;
}

double tail_radius(const CompositeTarget& target, double s) {
    if (!(s > 0.0 && s < 1.0)) throw PreconditionError("tail_radius: s must lie in (0, 1)");
    const auto& c = target.constants();
    const double d = static_cast<double>(target.dim());
    return std::sqrt((c.dissip_beta + d + c.lipschitz_Md * c.lipschitz_Md + std::log(1.0 / s)) / c.dissip_mu);
}

GroundTruthGrid build_ground_truth(const CompositeTarget& target, std::vector<GridAxis> axes,
                                   const GroundTruthOptions& options, Execution execution) {
    const std::size_t d = axes.size();
    if (d == 0 || d > 2) throw PreconditionError("build_ground_truth: 1 or 2 axes required");
    if (d != target.dim()) throw DimensionError("build_ground_truth axes", target.dim(), d);
    for (const auto& a : axes) a.validate();

    if (options.check_coverage) {
        const double radius = tail_radius(target, options.coverage_s);
        const ConstVec x0 = target.dissip_center();
        for (std::size_t a = 0; a < d; ++a) {
            const double c = x0.empty() ? 0.0 : x0[a];
            if (axes[a].lower > c - radius || axes[a].upper < c + radius)
                throw RangeCoverageError("build_ground_truth: axis " + std::to_string(a) + " range [" +
                                             std::to_string(axes[a].lower) + ", " + std::to_string(axes[a].upper) +
                                             "] misses the tail ball around x0",
                                         radius);
        }
    }

    std::size_t n = 1;
    for (const auto& a : axes) n *= a.bins;
    const std::size_t inner = d == 2 ? axes[1].bins : 1;
    const GaussRule& rule = gauss_rule();
    const std::size_t nodes = d == 1 ? kNodes : kNodes * kNodes;

    std::vector<double> ld(n), cm(n * d), cs(n * d * d);
    for_each_index(n, execution, options.threads, [&](std::size_t c) {
        const std::array<std::size_t, 2> idx{c / inner, c % inner};
        std::array<double, kNodes * kNodes> lv{};
        std::array<std::array<double, 2>, kNodes * kNodes> pts{};
        Vector x(d);
        for (std::size_t k = 0; k < nodes; ++k) {
            const std::array<std::size_t, 2> node{d == 1 ? k : k / kNodes, k % kNodes};
            double lw = 0.0;
            for (std::size_t a = 0; a < d; ++a) {
                x[a] = axes[a].center(idx[a]) + 0.5 * axes[a].width() * rule.x[node[a]];
                pts[k][a] = x[a];
                lw += rule.log_w[node[a]];
            }
            lv[k] = lw - eval_U(target, x);
        }
        const double top = *std::max_element(lv.begin(), lv.begin() + static_cast<std::ptrdiff_t>(nodes));
        double z = 0.0;
        std::array<double, 2> m1{};
        std::array<double, 4> m2{};
        for (std::size_t k = 0; k < nodes; ++k) {
            const double p = std::exp(lv[k] - top);
            z += p;
            for (std::size_t a = 0; a < d; ++a) {
                m1[a] += p * pts[k][a];
                for (std::size_t b = 0; b < d; ++b) m2[a * d + b] += p * pts[k][a] * pts[k][b];
            }
        }
        // Cell integral over cell volume; the half-width Jacobian cancels
        // against the volume up to 2^-d.
        ld[c] = top + std::log(z) - static_cast<double>(d) * std::numbers::ln2;
        for (std::size_t a = 0; a < d; ++a) cm[c * d + a] = m1[a] / z;
        for (std::size_t k = 0; k < d * d; ++k) cs[c * d * d + k] = m2[k] / z;
    });
    return GroundTruthGrid(std::move(axes), std::move(ld), std::move(cm), std::move(cs));
}

// ---------------------------------------------------------------------------
// Distances
// ---------------------------------------------------------------------------

TvResult empirical_tv(std::span<const double> points, const GroundTruthGrid& grid) {
    const std::size_t d = grid.dims();
    if (points.size() % d != 0) throw PreconditionError("empirical_tv: point buffer is not a multiple of the grid dimension");
    const std::size_t n = points.size() / d;
    std::vector<std::size_t> counts(grid.cells(), 0);
    std::size_t off = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto cell = grid.locate(points.subspan(i * d, d));
        if (cell) ++counts[*cell];
        else ++off;
    }
    TvResult r;
    r.in_range = n - off;
    if (r.in_range < 1000) throw PreconditionError("empirical_tv: need at least 1000 samples inside the grid");
    const double inv_n = 1.0 / static_cast<double>(n);
    double sum = static_cast<double>(off) * inv_n;
    for (std::size_t c = 0; c < counts.size(); ++c) sum += std::abs(static_cast<double>(counts[c]) * inv_n - grid.masses()[c]);
    r.tv = std::clamp(0.5 * sum, 0.0, 1.0);
    r.off_grid_fraction = static_cast<double>(off) * inv_n;
    if (r.off_grid_fraction > 0.01)
        r.warning = "off-grid fraction " + std::to_string(r.off_grid_fraction) + " exceeds 1%";
    return r;
}

TvResult empirical_tv(std::span<const ChainRun> runs, std::size_t first_row, const GroundTruthGrid& grid) {
    std::vector<double> points;
    for (const auto& run : runs) {
        if (run.samples.dim() != grid.dims()) throw DimensionError("empirical_tv chain", grid.dims(), run.samples.dim());
        for (std::size_t i = first_row; i < run.samples.rows(); ++i) {
            const auto row = run.samples.row(i);
            points.insert(points.end(), row.begin(), row.end());
        }
    }
    return empirical_tv(points, grid);
}

double histogram_tv(std::span<const double> p, std::span<const double> q) {
    if (p.empty()) throw PreconditionError("histogram_tv: empty histogram");
    if (p.size() != q.size()) throw DimensionError("histogram_tv", p.size(), q.size());
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
    return std::clamp(0.5 * s, 0.0, 1.0);
}

double ks_statistic(std::vector<double> samples, const Function1D& cdf) {
    if (samples.empty()) throw PreconditionError("ks_statistic: no samples");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

double effective_sample_size(std::span<const double> series) {
    const std::size_t n = series.size();
    if (n < 100) throw PreconditionError("effective_sample_size: need at least 100 values");
    const double mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);

    std::size_t padded = 1;
    while (padded < 2 * n) padded <<= 1;
    std::vector<double> centred(padded, 0.0);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        centred[i] = series[i] - mean;
        var += centred[i] * centred[i];
    }
    if (!(var > 1e-300 * static_cast<double>(n)) || !std::isfinite(var))
        throw DegenerateSeriesError("effective_sample_size: series has zero variance");

    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spectrum;
    fft.fwd(spectrum, centred);
    for (auto& s : spectrum) s = std::norm(s);
    std::vector<double> acov;
    fft.inv(acov, spectrum);

    const double c0 = acov[0];
    double pair_sum = 0.0;
    for (std::size_t k = 0; k + 1 < n; k += 2) {
        const double gamma = (acov[k] + acov[k + 1]) / c0;
        if (gamma <= 0.0) break;
        pair_sum += gamma;
    }
    const double tau = std::max(2.0 * pair_sum - 1.0, 1.0 / static_cast<double>(n));
    return static_cast<double>(n) / tau;
}

// ---------------------------------------------------------------------------
// Chain summaries
// ---------------------------------------------------------------------------

ChainMetrics summarize_chains(std::span<const ChainRun> runs, std::size_t burn_in_rows, const GroundTruthGrid* grid) {
    ChainMetrics m;
    if (runs.empty()) return m;
    for (const auto& run : runs) {
        m.accepted += run.accepted();
        m.non_lazy += run.non_lazy();
    }
    m.acceptance_rate = m.non_lazy == 0 ? 0.0 : static_cast<double>(m.accepted) / static_cast<double>(m.non_lazy);

    const std::size_t d = runs.front().samples.dim();
    m.ess_per_coordinate.assign(d, 0.0);
    for (const auto& run : runs)
        for (std::size_t j = 0; j < d; ++j) {
            const auto col = run.samples.column(j, burn_in_rows);
            if (col.size() < 100) continue;
            try {
                m.ess_per_coordinate[j] += effective_sample_size(col);
            } catch (const DegenerateSeriesError&) {
            }
        }

    if (grid && grid->dims() == d) {
        try {
            m.tv_to_truth = empirical_tv(runs, burn_in_rows, *grid).tv;
        } catch (const PreconditionError&) {
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// Proposal moment checks
// ---------------------------------------------------------------------------

bool LemmaReport::all_passed() const noexcept {
    return std::all_of(checks.begin(), checks.end(), [](const BoundCheck& c) { return !c.applicable || c.passed; });
}

namespace {

BoundCheck make_check(std::string name, double estimate, double bound, double se, bool applicable = true) {
    BoundCheck c;
    c.name = std::move(name);
    c.estimate = estimate;
    c.bound = bound;
    c.std_error = se;
    c.margin = bound + 3.0 * se - estimate;
    c.applicable = applicable;
    c.passed = c.margin >= 0.0;
    return c;
}

}  // namespace

LemmaReport lemma_bound_checks(const CompositeTarget& target, const ProxOracle& oracle, ConstVec x, double eta,
                               std::size_t n_samples, const RandomStream& rng, std::size_t n_directions,
                               Execution execution) {
    const std::size_t d = target.dim();
    if (x.size() != d) throw DimensionError("lemma_bound_checks x", d, x.size());
    if (oracle.dim() != d) throw DimensionError("lemma_bound_checks oracle", d, oracle.dim());
    if (n_samples < 2) throw PreconditionError("lemma_bound_checks: need at least 2 samples");
    if (!(eta > 0.0)) throw PreconditionError("lemma_bound_checks: eta must be > 0");

    const Vector grad = target.grad_f(x);
    Vector u(d);
    for (std::size_t i = 0; i < d; ++i) u[i] = x[i] - eta * grad[i];

    const RandomStream draws = rng.split(0);
    std::vector<double> diff(n_samples * d);
    for_each_index(n_samples, execution, 0, [&](std::size_t s) {
        RandomStream r = draws.split(s);
        const Vector y = oracle.sample(u, eta, r);
        for (std::size_t i = 0; i < d; ++i) diff[s * d + i] = y[i] - x[i];
    });

    const double n = static_cast<double>(n_samples);
    const double grad_norm = norm2(grad);
    const double M = target.lipschitz_g();
    LemmaReport report;

    // Bias.
    Vector mean(d, 0.0), var(d, 0.0);
    for (std::size_t s = 0; s < n_samples; ++s)
        for (std::size_t i = 0; i < d; ++i) mean[i] += diff[s * d + i];
    for (double& m : mean) m /= n;
    for (std::size_t s = 0; s < n_samples; ++s)
        for (std::size_t i = 0; i < d; ++i) {
            const double e = diff[s * d + i] - mean[i];
            var[i] += e * e;
        }
    double total_var = 0.0;
    for (double& v : var) total_var += v / (n - 1.0);
    report.checks.push_back(make_check("bias", norm2(mean), eta * (M + grad_norm), std::sqrt(total_var / n)));

    // Directional variance.
    RandomStream dir_rng = rng.split(1);
    std::vector<double> proj(n_samples);
    for (std::size_t k = 0; k < n_directions; ++k) {
        Vector v(d);
        for (double& c : v) c = dir_rng.normal();
        const double vn = norm2(v);
        for (double& c : v) c /= vn;
        double pm = 0.0;
        for (std::size_t s = 0; s < n_samples; ++s) {
            proj[s] = dot(v, ConstVec(diff).subspan(s * d, d));
            pm += proj[s];
        }
        pm /= n;
        double m2 = 0.0, m4 = 0.0;
        for (double p : proj) {
            const double e = (p - pm) * (p - pm);
            m2 += e;
            m4 += e * e;
        }
        m2 /= n;
        m4 /= n;
        const double sample_var = m2 * n / (n - 1.0);
        report.checks.push_back(make_check("directional_variance[" + std::to_string(k) + "]", sample_var, 2.0 * eta,
                                           std::sqrt(std::max(m4 - m2 * m2, 0.0) / n)));
    }

    // Second moment.
    double q1 = 0.0, q2 = 0.0;
    for (std::size_t s = 0; s < n_samples; ++s) {
        const double q = dot(ConstVec(diff).subspan(s * d, d), ConstVec(diff).subspan(s * d, d));
        q1 += q;
        q2 += q * q;
    }
    q1 /= n;
    const double q_var = std::max(q2 / n - q1 * q1, 0.0) * n / (n - 1.0);
    const double bound = 12.0 * eta * static_cast<double>(d) + 36.0 * eta * eta * (grad_norm * grad_norm + M * M);
    report.checks.push_back(make_check("second_moment", q1, bound, std::sqrt(q_var / n),
                                       eta < bounded_step_cap(target.smoothness())));
    return report;
}

// ---------------------------------------------------------------------------
// Mixing
// ---------------------------------------------------------------------------

MixingEstimate estimate_mixing(const TransitionKernel& kernel, const SamplerConfig& config,
                               const GroundTruthGrid& marginal, const MixingOptions& options, Execution execution) {
    if (marginal.dims() != 1) throw PreconditionError("estimate_mixing: marginal grid must be 1D");
    if (options.n_chains == 0) throw PreconditionError("estimate_mixing: n_chains must be >= 1");
    config.validate();

    std::vector<std::size_t> coords = options.coordinates;
    if (coords.empty()) {
        coords.resize(kernel.dim());
        std::iota(coords.begin(), coords.end(), std::size_t{0});
    }
    for (std::size_t c : coords)
        if (c >= kernel.dim()) throw PreconditionError("estimate_mixing: coordinate out of range");

    const GridAxis& axis = marginal.axis(0);
    const std::size_t bins = axis.bins;
    const std::size_t rows = config.n_steps + 1;
    const std::size_t stride = bins + 1;  // last slot counts off-grid values

    // Integer counts merge identically in any order.
    std::vector<std::uint64_t> totals(rows * stride, 0);
    const auto bin_chain = [&](const ChainRun& run, std::vector<std::uint64_t>& into) {
        for (std::size_t t = 0; t < rows; ++t)
            for (std::size_t c : coords) {
                const auto b = axis.locate(run.samples(t, c));
                ++into[t * stride + (b ? *b : bins)];
            }
    };

    if (execution == Execution::Serial) {
        for (std::uint64_t k = 0; k < options.n_chains; ++k)
            bin_chain(run_chain(kernel, config, options.first_chain + k), totals);
    } else {
        std::vector<std::exception_ptr> errors(options.n_chains);
        const auto count = static_cast<std::int64_t>(options.n_chains);
#pragma omp parallel num_threads(resolve_threads(options.threads))
        {
            std::vector<std::uint64_t> local(rows * stride, 0);
#pragma omp for schedule(dynamic, 1)
            for (std::int64_t k = 0; k < count; ++k) {
                try {
                    bin_chain(run_chain(kernel, config, options.first_chain + static_cast<std::uint64_t>(k)), local);
                } catch (...) {
                    errors[k] = std::current_exception();
                }
            }
#pragma omp critical
            for (std::size_t i = 0; i < totals.size(); ++i) totals[i] += local[i];
        }
        for (const auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    MixingEstimate est;
    est.tv_curve.resize(rows);
    const double inv = 1.0 / static_cast<double>(options.n_chains * coords.size());
    const auto& mass = marginal.masses();
    for (std::size_t t = 0; t < rows; ++t) {
        double s = static_cast<double>(totals[t * stride + bins]) * inv;
        for (std::size_t b = 0; b < bins; ++b) s += std::abs(static_cast<double>(totals[t * stride + b]) * inv - mass[b]);
        est.tv_curve[t] = std::clamp(0.5 * s, 0.0, 1.0);
        if (!est.iterations_to_tv && est.tv_curve[t] <= options.threshold) est.iterations_to_tv = t;
    }
    return est;
}

// ---------------------------------------------------------------------------
// Bundled targets
// ---------------------------------------------------------------------------

std::vector<BundledTarget> bundled_targets() {
    std::vector<BundledTarget> out;

    out.push_back({"lasso_1d", make_isotropic_gaussian_target({1.0}, ScaledL1{1.0}), {{-5.0, 7.0, 200}}});
    out.push_back({"l1_product_2d", make_isotropic_gaussian_target({0.0, 0.0}, ScaledL1{1.0}),
                   {{-6.0, 6.0, 48}, {-6.0, 6.0, 48}}});
    out.push_back({"l1_product_5d", make_isotropic_gaussian_target(Vector(5, 0.0), ScaledL1{1.0}), {}});
    out.push_back({"group_lasso_3d", make_isotropic_gaussian_target({1.0, 0.5, 0.0}, GroupLasso{{{0, 1, 2}}, {1.0}}), {}});

    SeparableTerm logcosh;
    logcosh.value = [](double v) {
        const double a = std::abs(v);
        return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
    };
    logcosh.lipschitz = 1.0;
    logcosh.subgradient = [](double v) { return std::tanh(v); };
    out.push_back({"logcosh_2d", make_isotropic_gaussian_target({0.5, -0.5}, SeparableGeneric{{logcosh, logcosh}}),
                   {{-6.5, 6.5, 52}, {-6.5, 6.5, 52}}});
    return out;
}

}  // namespace proxmh
