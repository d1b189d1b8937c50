#pragma once

// Batch experiments driven by a JSON config: target construction, sampler
// selection, diagnostics and the on-disk result files. The command-line
// front end in tools/ is a thin layer over this header.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "proxmh/core.hpp"
#include "proxmh/diagnostics.hpp"
#include "proxmh/oracles.hpp"
#include "proxmh/sampler.hpp"

namespace proxmh {

/// Malformed or inconsistent config. `location` is "line L, column C" for
/// syntax errors and a JSON pointer ("/sampler/eta") for field errors.
class ConfigError : public Error {
public:
    ConfigError(const std::string& location, const std::string& message)
        : Error(location + ": " + message), location_(location) {}
    const std::string& location() const noexcept { return location_; }

private:
    std::string location_;
};

class IoError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

/// f = 1/2 ||x - mean||^2, g = lambda ||x||_1 (g = 0 when lambda = 0).
struct GaussianL1Spec {
    std::size_t dim = 1;
    double lambda = 1.0;
    Vector mean;  ///< empty means the origin
};

/// f = ||y - A x||^2 / (2 sigma^2) + (prior_precision / 2) ||x||^2,
/// g = lambda ||x||_1. A and y are headerless numeric CSV files.
struct LassoPosteriorSpec {
    std::filesystem::path design;
    std::filesystem::path response;
    double lambda = 1.0;
    double noise_variance = 1.0;
    double prior_precision = 0.0;
};

/// f = 1/2 ||x - mean||^2, g = sum_j w_j ||x_{G_j}||.
struct GroupLassoTargetSpec {
    std::size_t dim = 2;
    std::vector<std::vector<std::size_t>> groups;
    std::vector<double> weights;
    Vector mean;
    std::size_t grid_resolution = 48;
};

using TargetSpec = std::variant<GaussianL1Spec, LassoPosteriorSpec, GroupLassoTargetSpec>;

enum class Algorithm { ProxMH, Mala, SmoothedMala, Ula };

std::string to_string(Algorithm a);

struct TuneSpec {
    double epsilon = 0.1;
    double s = 0.01;
    double constant = 1.0;
};

struct SamplerSpec {
    Algorithm algorithm = Algorithm::ProxMH;
    std::optional<double> eta;  ///< nullopt selects the tuned step size
    std::uint64_t n_steps = 1000;
    std::uint64_t n_chains = 1;
    std::uint64_t seed = 0;
    bool lazy = false;
    InitSpec init = GaussianAtCenter{};
    double burn_in = 0.1;  ///< fraction of each chain discarded by the metrics
    TuneSpec tune;
};

struct MixingSpec {
    std::uint64_t chains = 200;
    std::uint64_t groups = 5;
    std::size_t bins = 10;
};

struct DiagnosticsSpec {
    std::vector<GridAxis> grid;  ///< empty: derived from the tail radius, 200 bins per axis
    double tv_threshold = 0.1;
    bool lemma_checks = false;
    std::size_t lemma_samples = 10000;
    MixingSpec mixing;
};

struct OutputSpec {
    std::filesystem::path directory = "out";
    bool csv = true;
    bool json = true;
};

struct ExperimentConfig {
    TargetSpec target;
    SamplerSpec sampler;
    DiagnosticsSpec diagnostics;
    OutputSpec output;
    /// Relative data paths resolve against this directory.
    std::filesystem::path base_dir = ".";
};

/// Throws ConfigError. Unknown keys are rejected.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".");
/// Reads and parses a file; unreadable files raise IoError.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every field with defaults filled in. Dumped with sorted keys this is the
/// canonical form hashed into the manifest.
nlohmann::json to_json(const ExperimentConfig& config);
nlohmann::json to_json(const TargetSpec& target);

/// FNV-1a, 64-bit.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;
std::uint64_t config_hash(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

struct BuiltTarget {
    std::shared_ptr<const CompositeTarget> target;
    std::shared_ptr<const ProxOracle> oracle;
    /// True when every coordinate shares one 1D marginal law.
    bool exchangeable_marginals = false;
};

BuiltTarget build_target(const TargetSpec& spec, const std::filesystem::path& base_dir);

/// Headerless numeric CSV, one row per line.
std::vector<std::vector<double>> read_csv_matrix(const std::filesystem::path& path);

struct StepSizeChoice {
    double eta = 0.0;
    std::optional<TuningReport> tuning;
    double cap = 0.0;  ///< 1/(16 (L + 1))
};

/// Explicit eta, or the tuned value floored at 1e-8 and held strictly below
/// the cap.
StepSizeChoice resolve_step_size(const SamplerSpec& sampler, const CompositeTarget& target);

/// Kernel for the configured algorithm. The returned object keeps `built`
/// alive.
std::shared_ptr<const TransitionKernel> make_kernel(Algorithm algorithm, const BuiltTarget& built, double eta,
                                                    bool lazy);

/// Axes used for the TV-to-truth metric (dims <= 2), or empty.
std::vector<GridAxis> truth_axes(const ExperimentConfig& config, const CompositeTarget& target);

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out_dir;
    int threads = 0;
};

/// Applies --seed / --out-dir overrides.
ExperimentConfig apply_overrides(ExperimentConfig config, const RunOptions& options);

struct ExperimentResult {
    std::vector<ChainRun> runs;
    nlohmann::json metrics;
    nlohmann::json manifest;
    std::vector<std::filesystem::path> files;
};

/// Runs every chain, computes metrics and writes samples.csv,
/// metrics.json and manifest.json into the output directory.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// Header `chain,step,accepted,x_1,...,x_d`; values with 17 significant
/// digits, locale independent.
void write_samples_csv(const std::filesystem::path& path, std::span<const ChainRun> runs);

struct ComparisonRow {
    std::string algorithm;
    double eta = 0.0;
    std::optional<double> iterations_to_tv;  ///< median over chain groups
    double acceptance_rate = 0.0;
    double ess_per_sec = 0.0;
};

/// At least two configs sharing one target. Writes comparison.csv into the
/// output directory (the first config's unless overridden).
std::vector<ComparisonRow> compare_experiments(const std::vector<ExperimentConfig>& configs,
                                               const RunOptions& options = {});

/// Tuning report and resolved step size as JSON.
nlohmann::json tune_command(const ExperimentConfig& config);

/// Formats a double with 17 significant digits ("%.17g" without locale).
std::string format_double(double v);

std::string_view library_version() noexcept;

}  // namespace proxmh
