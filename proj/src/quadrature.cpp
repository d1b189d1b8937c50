#include "proxmh/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>

namespace proxmh {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Kronrod abscissae (positive half, descending) and weights; the Gauss
// 7-point rule uses every odd-indexed node.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a, b, value, error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

Segment gk15(const Function1D& h, double a, double b) {
    const double c = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = h(c);
    double kronrod = fc * kWgk[7];
    double gauss = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kXgk[j];
        const double f1 = h(c - dx);
        const double f2 = h(c + dx);
        kronrod += kWgk[j] * (f1 + f2);
        if (j % 2 == 1) gauss += kWg[j / 2] * (f1 + f2);
    }
    kronrod *= half;
    gauss *= half;
    return {a, b, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace

void Quadrature1DConfig::validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0))
        throw PreconditionError("Quadrature1DConfig: tolerances must be positive");
    if (max_subdivisions < 1) throw PreconditionError("Quadrature1DConfig: max_subdivisions < 1");
    if (!(lower < upper) || !std::isfinite(lower) || !std::isfinite(upper))
        throw PreconditionError("Quadrature1DConfig: window must be finite with lower < upper");
}

Quadrature1DConfig prox_window(double center, double eta, double lipschitz) {
    Quadrature1DConfig cfg;
    const double half = 12.0 * std::sqrt(2.0 * eta) + 2.0 * eta * lipschitz;
    cfg.lower = center - half;
    cfg.upper = center + half;
    return cfg;
}

QuadratureResult quadrature_1d(const Function1D& log_integrand, const Quadrature1DConfig& config) {
    config.validate();

    std::vector<double> cuts = {config.lower};
    for (double b : config.breakpoints)
        if (b > config.lower && b < config.upper) cuts.push_back(b);
    cuts.push_back(config.upper);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    // Peak estimate from a coarse scan; the integrand is evaluated as
    // exp(log f - peak) so the normalised integral is O(window width) at most.
    constexpr int kScan = 256;
    double peak = -kInf;
    for (int i = 0; i <= kScan; ++i) {
        const double y = config.lower + (config.upper - config.lower) * i / kScan;
        peak = std::max(peak, log_integrand(y));
    }
    for (double c : cuts) peak = std::max(peak, log_integrand(c));
    if (peak == -kInf) return {-kInf, 0.0, 0};
    if (!std::isfinite(peak))
        throw QuadratureError("quadrature_1d: non-finite log-integrand", peak, kInf);

    const Function1D h = [&](double y) {
        const double v = log_integrand(y);
        return v == -kInf ? 0.0 : std::exp(v - peak);
    };

    std::priority_queue<Segment> heap;
    double total = 0.0;
    double total_err = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        Segment s = gk15(h, cuts[i], cuts[i + 1]);
        total += s.value;
        total_err += s.error;
        heap.push(s);
    }

    int subdivisions = static_cast<int>(heap.size());
    auto converged = [&] {
        return total_err <= std::max(config.abs_tol, config.rel_tol * std::abs(total));
    };
    while (!converged() && subdivisions < config.max_subdivisions) {
        const Segment worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            // Interval cannot be split further in double precision.
            heap.push({worst.a, worst.b, worst.value, 0.0});
            total_err -= worst.error;
            continue;
        }
        const Segment left = gk15(h, worst.a, mid);
        const Segment right = gk15(h, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++subdivisions;
    }
    // Recompute the sums to shed accumulated cancellation from the updates.
    total = 0.0;
    total_err = 0.0;
    for (auto copy = heap; !copy.empty(); copy.pop()) {
        total += copy.top().value;
        total_err += copy.top().error;
    }

    const double log_integral = total > 0.0 ? peak + std::log(total) : -kInf;
    const double achieved = total > 0.0 ? total_err / total : kInf;
    if (!converged())
        throw QuadratureError("quadrature_1d: max_subdivisions exceeded", log_integral, achieved);
    return {log_integral, achieved, subdivisions};
}

}  // namespace proxmh
