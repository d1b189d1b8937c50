#include "proxmh/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <Eigen/Dense>

#include "proxmh/parallel.hpp"

#ifndef PROXMH_VERSION
#define PROXMH_VERSION "0.0.0"
#endif

namespace proxmh {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view library_version() noexcept { return PROXMH_VERSION; }

std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::ProxMH: return "prox_mh";
        case Algorithm::Mala: return "mala";
        case Algorithm::SmoothedMala: return "smoothed_mala";
        case Algorithm::Ula: return "ula";
    }
    return "unknown";
}

std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Typed access to one JSON object with unknown-key detection.
class Fields {
public:
    Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(path_, "expected an object");
    }

    [[noreturn]] static void fail(const std::string& where, const std::string& msg) {
        throw ConfigError(where.empty() ? "/" : where, msg);
    }

    std::string at(const std::string& key) const { return path_ + "/" + key; }

    bool has(const std::string& key) {
        used_.insert(key);
        return j_.contains(key);
    }

    const json& raw(const std::string& key) {
        if (!has(key)) fail(at(key), "required field is missing");
        return j_.at(key);
    }

    double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
        if (!has(key)) {
            if (!fallback) fail(at(key), "required field is missing");
            return *fallback;
        }
        const json& v = j_.at(key);
        if (!v.is_number()) fail(at(key), "expected a number");
        return v.get<double>();
    }

    std::uint64_t count(const std::string& key, std::optional<std::uint64_t> fallback = std::nullopt) {
        if (!has(key)) {
            if (!fallback) fail(at(key), "required field is missing");
            return *fallback;
        }
        const json& v = j_.at(key);
        if (!v.is_number_unsigned()) fail(at(key), "expected a non-negative integer");
        return v.get<std::uint64_t>();
    }

    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_boolean()) fail(at(key), "expected true or false");
        return v.get<bool>();
    }

    std::string string(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
        if (!has(key)) {
            if (!fallback) fail(at(key), "required field is missing");
            return *fallback;
        }
        const json& v = j_.at(key);
        if (!v.is_string()) fail(at(key), "expected a string");
        return v.get<std::string>();
    }

    /// Array of numbers, or a single number broadcast to `n` entries.
    Vector vector(const std::string& key, std::size_t n) {
        if (!has(key)) return Vector(n, 0.0);
        const json& v = j_.at(key);
        if (v.is_number()) return Vector(n, v.get<double>());
        if (!v.is_array()) fail(at(key), "expected a number or an array of numbers");
        Vector out;
        for (const auto& e : v) {
            if (!e.is_number()) fail(at(key), "expected an array of numbers");
            out.push_back(e.get<double>());
        }
        if (out.size() != n)
            fail(at(key), "expected " + std::to_string(n) + " entries, got " + std::to_string(out.size()));
        return out;
    }

    void finish() const {
        for (const auto& [key, value] : j_.items())
            if (!used_.count(key)) fail(at(key), "unknown field");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

void require(bool ok, const std::string& where, const std::string& msg) {
    if (!ok) Fields::fail(where, msg);
}

TargetSpec parse_target(const json& j, const fs::path& base_dir) {
    Fields f(j, "/target");
    const std::string family = f.string("family");
    if (family == "gaussian_l1") {
        GaussianL1Spec s;
        s.dim = f.count("dim");
        require(s.dim >= 1, f.at("dim"), "must be >= 1");
        s.lambda = f.number("lambda", 1.0);
        require(s.lambda >= 0.0 && std::isfinite(s.lambda), f.at("lambda"), "must be finite and >= 0");
        s.mean = f.vector("mean", s.dim);
        f.finish();
        return s;
    }
    if (family == "lasso_posterior") {
        LassoPosteriorSpec s;
        s.design = f.string("design");
        s.response = f.string("response");
        for (const auto& [key, p] : {std::pair{"design", s.design}, std::pair{"response", s.response}}) {
            const fs::path full = p.is_absolute() ? p : base_dir / p;
            require(fs::is_regular_file(full), f.at(key), "file not found: " + full.string());
        }
        s.lambda = f.number("lambda", 1.0);
        require(s.lambda >= 0.0 && std::isfinite(s.lambda), f.at("lambda"), "must be finite and >= 0");
        s.noise_variance = f.number("noise_variance", 1.0);
        require(s.noise_variance > 0.0, f.at("noise_variance"), "must be > 0");
        s.prior_precision = f.number("prior_precision", 0.0);
        require(s.prior_precision >= 0.0, f.at("prior_precision"), "must be >= 0");
        f.finish();
        return s;
    }
    if (family == "group_lasso") {
        GroupLassoTargetSpec s;
        s.dim = f.count("dim");
        require(s.dim >= 1, f.at("dim"), "must be >= 1");
        const json& groups = f.raw("groups");
        require(groups.is_array(), f.at("groups"), "expected an array of index arrays");
        for (const auto& g : groups) {
            require(g.is_array(), f.at("groups"), "expected an array of index arrays");
            std::vector<std::size_t> idx;
            for (const auto& i : g) {
                require(i.is_number_unsigned(), f.at("groups"), "group members must be non-negative integers");
                idx.push_back(i.get<std::size_t>());
            }
            s.groups.push_back(std::move(idx));
        }
        s.weights = f.vector("weights", s.groups.size());
        s.mean = f.vector("mean", s.dim);
        s.grid_resolution = f.count("grid_resolution", 48);
        f.finish();
        try {
            validate_regularizer(GroupLasso{s.groups, s.weights}, s.dim);
        } catch (const PreconditionError& e) {
            Fields::fail("/target/groups", e.what());
        }
        require(s.grid_resolution >= 2, "/target/grid_resolution", "must be >= 2");
        return s;
    }
    Fields::fail("/target/family", "unknown family '" + family + "' (expected gaussian_l1, lasso_posterior or group_lasso)");
}

bool target_is_smooth(const TargetSpec& t) {
    return std::visit(overloaded{
                          [](const GaussianL1Spec& s) { return s.lambda == 0.0; },
                          [](const LassoPosteriorSpec& s) { return s.lambda == 0.0; },
                          [](const GroupLassoTargetSpec&) { return false; },
                      },
                      t);
}

std::optional<std::size_t> target_dim(const TargetSpec& t) {
    return std::visit(overloaded{
                          [](const GaussianL1Spec& s) -> std::optional<std::size_t> { return s.dim; },
                          [](const LassoPosteriorSpec&) -> std::optional<std::size_t> { return std::nullopt; },
                          [](const GroupLassoTargetSpec& s) -> std::optional<std::size_t> { return s.dim; },
                      },
                      t);
}

Algorithm parse_algorithm(const std::string& name, const std::string& where) {
    if (name == "prox_mh") return Algorithm::ProxMH;
    if (name == "mala") return Algorithm::Mala;
    if (name == "smoothed_mala") return Algorithm::SmoothedMala;
    if (name == "ula") return Algorithm::Ula;
    Fields::fail(where, "unknown algorithm '" + name + "' (expected prox_mh, mala, smoothed_mala or ula)");
}

Vector number_array(const json& v, const std::string& where) {
    require(v.is_array(), where, "expected an array of numbers");
    Vector out;
    for (const auto& e : v) {
        require(e.is_number(), where, "expected an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

SamplerSpec parse_sampler(const json& j) {
    Fields f(j, "/sampler");
    SamplerSpec s;
    s.algorithm = parse_algorithm(f.string("algorithm", "prox_mh"), f.at("algorithm"));
    if (f.has("eta")) {
        const json& e = j.at("eta");
        if (e.is_string()) {
            require(e.get<std::string>() == "auto", f.at("eta"), "expected a positive number or \"auto\"");
        } else {
            require(e.is_number() && e.get<double>() > 0.0 && std::isfinite(e.get<double>()), f.at("eta"),
                    "expected a positive number or \"auto\"");
            s.eta = e.get<double>();
        }
    }
    s.n_steps = f.count("n_steps", 1000);
    require(s.n_steps >= 1, f.at("n_steps"), "must be >= 1");
    s.n_chains = f.count("n_chains", 1);
    require(s.n_chains >= 1, f.at("n_chains"), "must be >= 1");
    s.seed = f.count("seed", 0);
    s.lazy = f.boolean("lazy", false);
    s.burn_in = f.number("burn_in", 0.1);
    require(s.burn_in >= 0.0 && s.burn_in < 1.0, f.at("burn_in"), "must lie in [0, 1)");

    if (f.has("init")) {
        Fields init(j.at("init"), "/sampler/init");
        const std::string type = init.string("type", "gaussian_at_center");
        if (type == "gaussian_at_center") {
            GaussianAtCenter g;
            if (init.has("center")) g.center = number_array(j.at("init").at("center"), init.at("center"));
            s.init = g;
        } else if (type == "point") {
            s.init = ExplicitPoint{number_array(init.raw("x"), init.at("x"))};
        } else {
            Fields::fail(init.at("type"), "expected gaussian_at_center or point");
        }
        init.finish();
    }
    if (f.has("tune")) {
        Fields t(j.at("tune"), "/sampler/tune");
        s.tune.epsilon = t.number("epsilon", 0.1);
        require(s.tune.epsilon > 0.0 && s.tune.epsilon <= 1.0, t.at("epsilon"), "must lie in (0, 1]");
        s.tune.s = t.number("s", 0.01);
        require(s.tune.s > 0.0 && s.tune.s < 1.0, t.at("s"), "must lie in (0, 1)");
        s.tune.constant = t.number("constant", 1.0);
        require(s.tune.constant > 0.0, t.at("constant"), "must be > 0");
        t.finish();
    }
    f.finish();
    return s;
}

DiagnosticsSpec parse_diagnostics(const json& j) {
    Fields f(j, "/diagnostics");
    DiagnosticsSpec d;
    if (f.has("grid")) {
        const json& g = j.at("grid");
        require(g.is_array() && g.size() <= 2, f.at("grid"), "expected an array of at most two axis objects");
        for (std::size_t k = 0; k < g.size(); ++k) {
            Fields a(g[k], "/diagnostics/grid/" + std::to_string(k));
            GridAxis axis{a.number("lower"), a.number("upper"), static_cast<std::size_t>(a.count("bins", 200))};
            require(axis.upper > axis.lower && axis.bins >= 1, a.at("bins"), "need lower < upper and bins >= 1");
            a.finish();
            d.grid.push_back(axis);
        }
    }
    d.tv_threshold = f.number("tv_threshold", 0.1);
    require(d.tv_threshold > 0.0 && d.tv_threshold < 1.0, f.at("tv_threshold"), "must lie in (0, 1)");
    d.lemma_checks = f.boolean("lemma_checks", false);
    d.lemma_samples = f.count("lemma_samples", 10000);
    require(d.lemma_samples >= 2, f.at("lemma_samples"), "must be >= 2");
    if (f.has("mixing")) {
        Fields m(j.at("mixing"), "/diagnostics/mixing");
        d.mixing.chains = m.count("chains", 200);
        d.mixing.groups = m.count("groups", 5);
        d.mixing.bins = m.count("bins", 10);
        require(d.mixing.chains >= 1 && d.mixing.groups >= 1 && d.mixing.bins >= 1, "/diagnostics/mixing",
                "chains, groups and bins must be >= 1");
        m.finish();
    }
    f.finish();
    return d;
}

OutputSpec parse_output(const json& j) {
    Fields f(j, "/output");
    OutputSpec o;
    o.directory = f.string("directory", "out");
    if (f.has("formats")) {
        const json& formats = j.at("formats");
        require(formats.is_array(), f.at("formats"), "expected an array drawn from \"csv\", \"json\"");
        o.csv = o.json = false;
        for (const auto& e : formats) {
            const std::string v = e.is_string() ? e.get<std::string>() : "";
            if (v == "csv") o.csv = true;
            else if (v == "json") o.json = true;
            else Fields::fail(f.at("formats"), "unknown format (expected \"csv\" or \"json\")");
        }
    }
    f.finish();
    return o;
}

std::string line_column(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const fs::path& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        std::string msg = e.what();
        if (const auto pos = msg.find("syntax error"); pos != std::string::npos) msg = msg.substr(pos);
        throw ConfigError(line_column(text, e.byte), msg);
    }

    ExperimentConfig c;
    c.base_dir = base_dir;
    Fields top(j, "");
    c.target = parse_target(top.raw("target"), base_dir);
    if (top.has("sampler")) c.sampler = parse_sampler(j.at("sampler"));
    if (top.has("diagnostics")) c.diagnostics = parse_diagnostics(j.at("diagnostics"));
    if (top.has("output")) c.output = parse_output(j.at("output"));
    top.finish();

    if (c.sampler.algorithm == Algorithm::Mala && !target_is_smooth(c.target))
        Fields::fail("/sampler/algorithm",
                     "mala requires a smooth target (g = 0); select smoothed_mala to sample the Moreau-smoothed surrogate");

    if (const auto d = target_dim(c.target)) {
        std::visit(overloaded{
                       [&](const ExplicitPoint& p) {
                           require(p.x.size() == *d, "/sampler/init/x", "length must equal the target dimension");
                       },
                       [&](const GaussianAtCenter& g) {
                           require(g.center.empty() || g.center.size() == *d, "/sampler/init/center",
                                   "length must equal the target dimension");
                       },
                   },
                   c.sampler.init);
        if (!c.diagnostics.grid.empty())
            require(c.diagnostics.grid.size() == *d, "/diagnostics/grid", "needs one axis per target dimension");
    }
    return c;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    fs::path base = path.parent_path();
    if (base.empty()) base = ".";
    return parse_config(ss.str(), base);
}

// ---------------------------------------------------------------------------
// Canonical form
// ---------------------------------------------------------------------------

json to_json(const TargetSpec& target) {
    return std::visit(overloaded{
                          [](const GaussianL1Spec& s) {
                              return json{{"family", "gaussian_l1"}, {"dim", s.dim}, {"lambda", s.lambda},
                                          {"mean", s.mean.empty() ? Vector(s.dim, 0.0) : s.mean}};
                          },
                          [](const LassoPosteriorSpec& s) {
                              return json{{"family", "lasso_posterior"},
                                          {"design", s.design.generic_string()},
                                          {"response", s.response.generic_string()},
                                          {"lambda", s.lambda},
                                          {"noise_variance", s.noise_variance},
                                          {"prior_precision", s.prior_precision}};
                          },
                          [](const GroupLassoTargetSpec& s) {
                              return json{{"family", "group_lasso"},     {"dim", s.dim},
                                          {"groups", s.groups},          {"weights", s.weights},
                                          {"mean", s.mean.empty() ? Vector(s.dim, 0.0) : s.mean},
                                          {"grid_resolution", s.grid_resolution}};
                          },
                      },
                      target);
}

json to_json(const ExperimentConfig& c) {
    json init = std::visit(overloaded{
                               [](const ExplicitPoint& p) { return json{{"type", "point"}, {"x", p.x}}; },
                               [](const GaussianAtCenter& g) {
                                   return json{{"type", "gaussian_at_center"}, {"center", g.center}};
                               },
                           },
                           c.sampler.init);
    json sampler{{"algorithm", to_string(c.sampler.algorithm)},
                 {"eta", c.sampler.eta ? json(*c.sampler.eta) : json("auto")},
                 {"n_steps", c.sampler.n_steps},
                 {"n_chains", c.sampler.n_chains},
                 {"seed", c.sampler.seed},
                 {"lazy", c.sampler.lazy},
                 {"init", init},
                 {"burn_in", c.sampler.burn_in},
                 {"tune", {{"epsilon", c.sampler.tune.epsilon}, {"s", c.sampler.tune.s}, {"constant", c.sampler.tune.constant}}}};
    json grid = json::array();
    for (const auto& a : c.diagnostics.grid) grid.push_back({{"lower", a.lower}, {"upper", a.upper}, {"bins", a.bins}});
    json diagnostics{{"grid", grid},
                     {"tv_threshold", c.diagnostics.tv_threshold},
                     {"lemma_checks", c.diagnostics.lemma_checks},
                     {"lemma_samples", c.diagnostics.lemma_samples},
                     {"mixing",
                      {{"chains", c.diagnostics.mixing.chains},
                       {"groups", c.diagnostics.mixing.groups},
                       {"bins", c.diagnostics.mixing.bins}}}};
    json formats = json::array();
    if (c.output.csv) formats.push_back("csv");
    if (c.output.json) formats.push_back("json");
    return json{{"target", to_json(c.target)},
                {"sampler", sampler},
                {"diagnostics", diagnostics},
                {"output", {{"directory", c.output.directory.generic_string()}, {"formats", formats}}}};
}

std::uint64_t config_hash(const ExperimentConfig& config) {
    json j = to_json(config);
    // Where results land does not change them.
    j["output"].erase("directory");
    return fnv1a64(j.dump());
}

// ---------------------------------------------------------------------------
// Targets
// ---------------------------------------------------------------------------

std::vector<std::vector<double>> read_csv_matrix(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::vector<double> row;
        const char* p = line.data();
        const char* end = p + line.size();
        while (p < end) {
            while (p < end && (*p == ',' || *p == ' ' || *p == '\t' || *p == '\r')) ++p;
            if (p == end) break;
            double v = 0.0;
            const auto res = std::from_chars(p, end, v);
            if (res.ec != std::errc())
                throw ConfigError(path.string() + " line " + std::to_string(line_no), "expected a number");
            row.push_back(v);
            p = res.ptr;
        }
        if (!row.empty()) rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

struct QuadraticForm {
    Eigen::MatrixXd hessian;
    Eigen::VectorXd linear;
    double constant = 0.0;
};

BuiltTarget build_lasso(const LassoPosteriorSpec& s, const fs::path& base_dir) {
    const auto resolve = [&](const fs::path& p) { return p.is_absolute() ? p : base_dir / p; };
    const auto design = read_csv_matrix(resolve(s.design));
    const auto response = read_csv_matrix(resolve(s.response));
    if (design.empty()) throw ConfigError("/target/design", "design matrix is empty");
    const std::size_t n = design.size();
    const std::size_t d = design.front().size();
    for (const auto& row : design)
        if (row.size() != d) throw ConfigError("/target/design", "rows have different lengths");

    Eigen::VectorXd y;
    if (response.size() == n && std::all_of(response.begin(), response.end(), [](const auto& r) { return r.size() == 1; })) {
        y.resize(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) y[static_cast<Eigen::Index>(i)] = response[i][0];
    } else if (response.size() == 1 && response[0].size() == n) {
        y = Eigen::Map<const Eigen::VectorXd>(response[0].data(), static_cast<Eigen::Index>(n));
    } else {
        throw ConfigError("/target/response", "expected " + std::to_string(n) + " values, one per design row");
    }

    Eigen::MatrixXd A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < d; ++k) A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = design[i][k];

    auto q = std::make_shared<QuadraticForm>();
    const double inv_var = 1.0 / s.noise_variance;
    q->hessian = inv_var * A.transpose() * A;
    q->hessian.diagonal().array() += s.prior_precision;
    q->linear = inv_var * A.transpose() * y;
    q->constant = 0.5 * inv_var * y.squaredNorm();

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q->hessian);
    const double lmax = eig.eigenvalues().maxCoeff();
    const double lmin = eig.eigenvalues().minCoeff();
    if (!(lmin > 1e-12 * std::max(lmax, 1.0)))
        throw ConfigError("/target/design",
                          "A^T A / noise_variance + prior_precision I is singular; add prior_precision > 0");
    const Eigen::VectorXd x0 = q->hessian.ldlt().solve(q->linear);

    RegularityConstants k;
    k.smoothness_L = lmax;
    k.dissip_mu = 2.0 * lmin;
    k.dissip_beta = 0.0;
    k.dissip_center.assign(x0.data(), x0.data() + x0.size());
    const RegularizerSpec g = s.lambda > 0.0 ? RegularizerSpec{ScaledL1{s.lambda}} : RegularizerSpec{ZeroRegularizer{}};
    k.lipschitz_Md = regularizer_lipschitz(g, d);

    auto value = [q](ConstVec x) {
        const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
        return 0.5 * v.dot(q->hessian * v) - q->linear.dot(v) + q->constant;
    };
    auto grad = [q](ConstVec x) {
        const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
        const Eigen::VectorXd gv = q->hessian * v - q->linear;
        return Vector(gv.data(), gv.data() + gv.size());
    };

    BuiltTarget b;
    b.target = std::make_shared<CompositeTarget>(d, value, grad, g, k);
    b.oracle = make_oracle(*b.target);
    b.exchangeable_marginals = d == 1;
    return b;
}

}  // namespace

BuiltTarget build_target(const TargetSpec& spec, const fs::path& base_dir) {
    return std::visit(
        overloaded{
            [](const GaussianL1Spec& s) {
                Vector mean = s.mean.empty() ? Vector(s.dim, 0.0) : s.mean;
                const RegularizerSpec g = s.lambda > 0.0 ? RegularizerSpec{ScaledL1{s.lambda}} : RegularizerSpec{ZeroRegularizer{}};
                BuiltTarget b;
                b.exchangeable_marginals =
                    std::all_of(mean.begin(), mean.end(), [&](double m) { return m == mean.front(); });
                b.target = std::make_shared<CompositeTarget>(make_isotropic_gaussian_target(std::move(mean), g));
                b.oracle = make_oracle(*b.target);
                return b;
            },
            [&](const LassoPosteriorSpec& s) { return build_lasso(s, base_dir); },
            [](const GroupLassoTargetSpec& s) {
                Vector mean = s.mean.empty() ? Vector(s.dim, 0.0) : s.mean;
                BuiltTarget b;
                b.target = std::make_shared<CompositeTarget>(
                    make_isotropic_gaussian_target(std::move(mean), GroupLasso{s.groups, s.weights}));
                b.oracle = make_oracle(*b.target, GroupLassoGridConfig{static_cast<int>(s.grid_resolution)});
                b.exchangeable_marginals = s.dim == 1;
                return b;
            },
        },
        spec);
}

StepSizeChoice resolve_step_size(const SamplerSpec& sampler, const CompositeTarget& target) {
    StepSizeChoice c;
    c.cap = bounded_step_cap(target.smoothness());
    if (sampler.eta) {
        c.eta = *sampler.eta;
        return c;
    }
    Vector x0(target.dissip_center().begin(), target.dissip_center().end());
    if (x0.empty()) x0.assign(target.dim(), 0.0);
    c.tuning = tune(target, x0, sampler.tune.epsilon, sampler.tune.s, sampler.tune.constant);
    c.eta = std::min(std::max(c.tuning->recommended_eta, 1e-8), std::nextafter(c.cap, 0.0));
    return c;
}

namespace {

// Keeps the target and oracle alive for kernels that borrow them.
class OwningKernel final : public TransitionKernel {
public:
    OwningKernel(BuiltTarget built, std::function<std::unique_ptr<TransitionKernel>(const BuiltTarget&)> make)
        : built_(std::move(built)), inner_(make(built_)) {}

    std::size_t dim() const noexcept override { return inner_->dim(); }
    double smoothness() const noexcept override { return inner_->smoothness(); }
    Vector default_center() const override { return inner_->default_center(); }
    ChainState initial_state(Vector x) const override { return inner_->initial_state(std::move(x)); }
    StepOutcome transition(const ChainState& s, const RandomStream& r) const override {
        return inner_->transition(s, r);
    }

private:
    BuiltTarget built_;
    std::unique_ptr<TransitionKernel> inner_;
};

}  // namespace

std::shared_ptr<const TransitionKernel> make_kernel(Algorithm algorithm, const BuiltTarget& built, double eta,
                                                    bool lazy) {
    return std::make_shared<OwningKernel>(built, [=](const BuiltTarget& b) -> std::unique_ptr<TransitionKernel> {
        const CompositeTarget& t = *b.target;
        if (algorithm == Algorithm::ProxMH) return std::make_unique<ProxMHKernel>(t, *b.oracle, eta, lazy);

        const bool smooth = std::holds_alternative<ZeroRegularizer>(t.regularizer());
        if (algorithm == Algorithm::Mala && !smooth)
            throw PreconditionError("mala requires a smooth target; use smoothed_mala");
        SmoothPotential potential = smooth ? smooth_potential(t) : moreau_smoothed_potential(t, eta);
        Vector center(t.dissip_center().begin(), t.dissip_center().end());
        const auto kind = algorithm == Algorithm::Ula ? LangevinKernel::Kind::Unadjusted : LangevinKernel::Kind::Adjusted;
        return std::make_unique<LangevinKernel>(std::move(potential), t.smoothness(), std::move(center), eta, lazy, kind);
    });
}

std::vector<GridAxis> truth_axes(const ExperimentConfig& config, const CompositeTarget& target) {
    if (target.dim() > 2) return {};
    if (!config.diagnostics.grid.empty()) {
        if (config.diagnostics.grid.size() != target.dim())
            throw ConfigError("/diagnostics/grid", "needs one axis per target dimension");
        return config.diagnostics.grid;
    }
    const double half = tail_radius(target, 1e-10) + 0.5;
    std::vector<GridAxis> axes;
    for (std::size_t k = 0; k < target.dim(); ++k) {
        const double c = target.dissip_center().empty() ? 0.0 : target.dissip_center()[k];
        axes.push_back({c - half, c + half, 200});
    }
    return axes;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

ExperimentConfig apply_overrides(ExperimentConfig config, const RunOptions& options) {
    if (options.seed) config.sampler.seed = *options.seed;
    if (options.out_dir) config.output.directory = *options.out_dir;
    return config;
}

void write_samples_csv(const fs::path& path, std::span<const ChainRun> runs) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    const std::size_t d = runs.empty() ? 0 : runs.front().samples.dim();
    std::string line = "chain,step,accepted";
    for (std::size_t j = 0; j < d; ++j) line += ",x_" + std::to_string(j + 1);
    line += '\n';
    out << line;
    for (const auto& run : runs) {
        for (std::size_t t = 0; t < run.samples.rows(); ++t) {
            line.clear();
            line += std::to_string(run.chain_index);
            line += ',';
            line += std::to_string(t);
            line += t > 0 && run.steps[t - 1].accepted ? ",1" : ",0";
            for (double v : run.samples.row(t)) {
                line += ',';
                line += format_double(v);
            }
            line += '\n';
            out << line;
        }
    }
    if (!out) throw IoError("write failed for " + path.string());
}

namespace {

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

void make_directory(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

json tuning_json(const TuningReport& r) {
    return json{{"a0", r.a0},
                {"radius_R", r.radius_R},
                {"recommended_eta", r.recommended_eta},
                {"warmness_log_M0", r.warmness_log_M0},
                {"tail_radius_Rs", r.tail_radius_Rs},
                {"universal_constant", r.universal_constant}};
}

json lemma_json(const LemmaReport& report, ConstVec x) {
    json checks = json::array();
    for (const auto& c : report.checks)
        checks.push_back({{"name", c.name},
                          {"estimate", c.estimate},
                          {"bound", c.bound},
                          {"std_error", c.std_error},
                          {"margin", c.margin},
                          {"applicable", c.applicable},
                          {"passed", c.passed}});
    return json{{"x", Vector(x.begin(), x.end())}, {"all_passed", report.all_passed()}, {"checks", checks}};
}

Vector evaluation_point(const CompositeTarget& t) {
    Vector x(t.dissip_center().begin(), t.dissip_center().end());
    if (x.empty()) x.assign(t.dim(), 0.0);
    return x;
}

void check_init_dim(const InitSpec& init, std::size_t dim) {
    std::visit(overloaded{
                   [&](const ExplicitPoint& p) {
                       if (p.x.size() != dim) throw ConfigError("/sampler/init/x", "length must equal the target dimension");
                   },
                   [&](const GaussianAtCenter& g) {
                       if (!g.center.empty() && g.center.size() != dim)
                           throw ConfigError("/sampler/init/center", "length must equal the target dimension");
                   },
               },
               init);
}

SamplerConfig sampler_config(const SamplerSpec& s, double eta) {
    SamplerConfig c;
    c.eta = eta;
    c.n_steps = s.n_steps;
    c.seed = s.seed;
    c.lazy = s.lazy;
    c.init = s.init;
    return c;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double min_ess(const ChainMetrics& m) {
    if (m.ess_per_coordinate.empty()) return 0.0;
    return *std::min_element(m.ess_per_coordinate.begin(), m.ess_per_coordinate.end());
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& input, const RunOptions& options) {
    const auto t_start = std::chrono::steady_clock::now();
    const ExperimentConfig config = apply_overrides(input, options);
    const BuiltTarget built = build_target(config.target, config.base_dir);
    const CompositeTarget& target = *built.target;
    check_init_dim(config.sampler.init, target.dim());

    const StepSizeChoice step = resolve_step_size(config.sampler, target);
    const auto kernel = make_kernel(config.sampler.algorithm, built, step.eta, config.sampler.lazy);
    const SamplerConfig sc = sampler_config(config.sampler, step.eta);

    ExperimentResult result;
    const auto t_sampling = std::chrono::steady_clock::now();
    result.runs = run_chains(*kernel, sc, config.sampler.n_chains, 0, options.threads);
    const double sampling_seconds = seconds_since(t_sampling);

    const auto burn_in_rows =
        static_cast<std::size_t>(std::floor(config.sampler.burn_in * static_cast<double>(config.sampler.n_steps + 1)));
    const ChainMetrics metrics = summarize_chains(result.runs, burn_in_rows);

    json& m = result.metrics;
    m["algorithm"] = to_string(config.sampler.algorithm);
    m["eta"] = step.eta;
    m["eta_source"] = config.sampler.eta ? "config" : "auto";
    m["step_cap"] = step.cap;
    m["n_chains"] = config.sampler.n_chains;
    m["n_steps"] = config.sampler.n_steps;
    m["burn_in_rows"] = burn_in_rows;
    m["acceptance_rate"] = metrics.acceptance_rate;
    m["accepted"] = metrics.accepted;
    m["non_lazy_steps"] = metrics.non_lazy;
    m["ess_per_coordinate"] = metrics.ess_per_coordinate;
    m["ess_per_sec"] = sampling_seconds > 0.0 ? min_ess(metrics) / sampling_seconds : 0.0;
    m["tuning"] = step.tuning ? tuning_json(*step.tuning) : json(nullptr);

    m["tv_to_truth"] = nullptr;
    const auto axes = truth_axes(config, target);
    if (!axes.empty()) {
        GroundTruthOptions gopt;
        gopt.threads = options.threads;
        const GroundTruthGrid grid = build_ground_truth(target, axes, gopt);
        try {
            const TvResult tv = empirical_tv(result.runs, burn_in_rows, grid);
            m["tv_to_truth"] = tv.tv;
            m["tv_off_grid_fraction"] = tv.off_grid_fraction;
            m["tv_warning"] = tv.warning ? json(*tv.warning) : json(nullptr);
        } catch (const PreconditionError& e) {
            m["tv_warning"] = e.what();
        }
        json bins = json::array();
        for (const auto& a : axes) bins.push_back({{"lower", a.lower}, {"upper", a.upper}, {"bins", a.bins}});
        m["tv_grid"] = bins;
    }

    m["lemma_checks"] = nullptr;
    if (config.diagnostics.lemma_checks) {
        const Vector x = evaluation_point(target);
        const LemmaReport report = lemma_bound_checks(target, *built.oracle, x, step.eta, config.diagnostics.lemma_samples,
                                                      RandomStream(config.sampler.seed, 1));
        m["lemma_checks"] = lemma_json(report, x);
    }

    const fs::path dir = config.output.directory;
    make_directory(dir);
    if (config.output.csv) {
        write_samples_csv(dir / "samples.csv", result.runs);
        result.files.push_back(dir / "samples.csv");
    }
    m["wall_clock_seconds"] = {{"sampling", sampling_seconds}, {"total", seconds_since(t_start)}};
    if (config.output.json) {
        write_json(dir / "metrics.json", m);
        result.files.push_back(dir / "metrics.json");
    }

    char hash[19];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(config)));
    json files = json::array();
    for (const auto& f : result.files) files.push_back(f.filename().string());
    files.push_back("manifest.json");
    result.manifest = {{"version", std::string(library_version())},
                       {"seed", config.sampler.seed},
                       {"config_hash", hash},
                       {"config", to_json(config)},
                       {"files", files}};
    write_json(dir / "manifest.json", result.manifest);
    result.files.push_back(dir / "manifest.json");
    return result;
}

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

namespace {

json target_identity(const ExperimentConfig& c) {
    json j = to_json(c.target);
    if (const auto* s = std::get_if<LassoPosteriorSpec>(&c.target)) {
        const auto resolve = [&](const fs::path& p) {
            return fs::weakly_canonical(p.is_absolute() ? p : c.base_dir / p).generic_string();
        };
        j["design"] = resolve(s->design);
        j["response"] = resolve(s->response);
    }
    return j;
}

struct MarginalTruth {
    std::optional<GroundTruthGrid> grid;
    std::vector<std::size_t> coordinates;
};

MarginalTruth marginal_truth(const BuiltTarget& built, const ExperimentConfig& config, int threads) {
    const CompositeTarget& t = *built.target;
    const std::size_t bins = config.diagnostics.mixing.bins;
    GroundTruthOptions gopt;
    gopt.threads = threads;
    MarginalTruth out;

    if (built.exchangeable_marginals && t.dim() > 2) {
        // Product of identical 1D factors: the coordinate law is itself a
        // gaussian_l1 target in one dimension.
        const auto& s = std::get<GaussianL1Spec>(config.target);
        GaussianL1Spec one{1, s.lambda, {s.mean.empty() ? 0.0 : s.mean.front()}};
        const BuiltTarget b = build_target(one, config.base_dir);
        const double half = tail_radius(*b.target, 1e-10) + 0.5;
        const double c = b.target->dissip_center()[0];
        out.grid = build_ground_truth(*b.target, {{c - half, c + half, bins}}, gopt);
        out.coordinates.resize(t.dim());
        for (std::size_t k = 0; k < t.dim(); ++k) out.coordinates[k] = k;
        return out;
    }
    if (t.dim() <= 2) {
        std::vector<GridAxis> axes;
        const double half = tail_radius(t, 1e-10) + 0.5;
        for (std::size_t k = 0; k < t.dim(); ++k) {
            const double c = t.dissip_center().empty() ? 0.0 : t.dissip_center()[k];
            axes.push_back({c - half, c + half, bins});
        }
        out.grid = build_ground_truth(t, axes, gopt).marginal(0);
        out.coordinates = {0};
        if (built.exchangeable_marginals && t.dim() == 2) out.coordinates = {0, 1};
    }
    return out;
}

std::optional<double> median(std::vector<double> v) {
    if (v.empty()) return std::nullopt;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    const double m = n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    if (!std::isfinite(m)) return std::nullopt;
    return m;
}

}  // namespace

std::vector<ComparisonRow> compare_experiments(const std::vector<ExperimentConfig>& inputs, const RunOptions& options) {
    if (inputs.size() < 2) throw ConfigError("compare", "at least two configs are required");
    std::vector<ExperimentConfig> configs;
    for (const auto& c : inputs) configs.push_back(apply_overrides(c, options));
    const json identity = target_identity(configs.front());
    for (std::size_t i = 1; i < configs.size(); ++i)
        if (target_identity(configs[i]) != identity)
            throw ConfigError("compare", "config " + std::to_string(i + 1) + " describes a different target");

    const BuiltTarget built = build_target(configs.front().target, configs.front().base_dir);
    const MarginalTruth truth = marginal_truth(built, configs.front(), options.threads);

    std::vector<ComparisonRow> rows;
    for (const auto& config : configs) {
        check_init_dim(config.sampler.init, built.target->dim());
        const StepSizeChoice step = resolve_step_size(config.sampler, *built.target);
        const auto kernel = make_kernel(config.sampler.algorithm, built, step.eta, config.sampler.lazy);
        const SamplerConfig sc = sampler_config(config.sampler, step.eta);

        ComparisonRow row;
        row.algorithm = to_string(config.sampler.algorithm);
        row.eta = step.eta;

        const auto t0 = std::chrono::steady_clock::now();
        const auto runs = run_chains(*kernel, sc, config.sampler.n_chains, 0, options.threads);
        const double secs = seconds_since(t0);
        const auto burn = static_cast<std::size_t>(
            std::floor(config.sampler.burn_in * static_cast<double>(config.sampler.n_steps + 1)));
        const ChainMetrics metrics = summarize_chains(runs, burn);
        row.acceptance_rate = metrics.acceptance_rate;
        row.ess_per_sec = secs > 0.0 ? min_ess(metrics) / secs : 0.0;

        if (truth.grid) {
            std::vector<double> hits;
            const auto& mix = config.diagnostics.mixing;
            for (std::uint64_t g = 0; g < mix.groups; ++g) {
                MixingOptions mo;
                mo.n_chains = mix.chains;
                mo.first_chain = config.sampler.n_chains + g * mix.chains;
                mo.threshold = config.diagnostics.tv_threshold;
                mo.coordinates = truth.coordinates;
                mo.threads = options.threads;
                const MixingEstimate est = estimate_mixing(*kernel, sc, *truth.grid, mo);
                hits.push_back(est.iterations_to_tv ? static_cast<double>(*est.iterations_to_tv)
                                                    : std::numeric_limits<double>::infinity());
            }
            row.iterations_to_tv = median(hits);
        }
        rows.push_back(row);
    }

    const fs::path dir = configs.front().output.directory;
    make_directory(dir);
    std::ofstream out(dir / "comparison.csv", std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / "comparison.csv").string());
    out << "algorithm,eta,iterations_to_tv,acceptance_rate,ess_per_sec\n";
    for (const auto& r : rows)
        out << r.algorithm << ',' << format_double(r.eta) << ','
            << (r.iterations_to_tv ? format_double(*r.iterations_to_tv) : std::string()) << ','
            << format_double(r.acceptance_rate) << ',' << format_double(r.ess_per_sec) << '\n';
    if (!out) throw IoError("write failed for comparison.csv");
    return rows;
}

json tune_command(const ExperimentConfig& config) {
    const BuiltTarget built = build_target(config.target, config.base_dir);
    const CompositeTarget& t = *built.target;
    SamplerSpec auto_spec = config.sampler;
    auto_spec.eta.reset();
    const StepSizeChoice step = resolve_step_size(auto_spec, t);
    json j = tuning_json(*step.tuning);
    j["epsilon"] = config.sampler.tune.epsilon;
    j["s"] = config.sampler.tune.s;
    j["step_cap"] = step.cap;
    j["auto_eta"] = step.eta;
    j["x0"] = evaluation_point(t);
    return j;
}

}  // namespace proxmh
