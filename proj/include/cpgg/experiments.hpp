#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cpgg/bounds.hpp"
#include "cpgg/kernels.hpp"
#include "cpgg/structure.hpp"

namespace cpgg {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kWorkersEnvVar = "CPGG_WORKERS";

// Flat key=value configuration, '#' comments, namespaced keys. Preserves the
// original order for the manifest echo.
class Config {
  public:
    static Config parse_file(const std::filesystem::path& path);
    static Config parse_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::string require_string(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::vector<double> get_double_list(const std::string& key) const;

    // Throws naming the first key outside `allowed`.
    void validate_keys(std::span<const std::string> allowed) const;

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  private:
    std::vector<std::pair<std::string, std::string>> entries_;
    std::string origin_;
};

KernelSpec kernel_from_config(const Config& cfg);

// Runs fn(0..count-1) on up to `workers` threads; any replica's work must
// depend only on its index.
void parallel_replicas(std::uint64_t count, int workers,
                       const std::function<void(std::uint64_t)>& fn);
int default_workers();

// ---------------------------------------------------------------------------
// Pipelines.
// ---------------------------------------------------------------------------

struct GammaEstimateRecord {
    double lambda = 0.0;
    double volume = 0.0;
    std::uint64_t replicas = 0;
    std::uint64_t survivals = 0;
    double gamma_hat = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

// Finite-size rule for the non-extinction probability runs: torus volume
// min(volume_max, ceil(lambda^-4)), fixed horizon, survival proxy by
// ever-infected cap. All three are config defaults echoed in the manifest.
struct GammaRules {
    double horizon = 50.0;
    std::uint64_t infected_cap = 200;
    double volume_max = 1e6;
    int dim = 1;

    double volume_for(double lambda) const;
};

std::vector<GammaEstimateRecord> estimate_gamma(const KernelSpec& spec,
                                                std::span<const double> lambdas,
                                                const GammaRules& rules,
                                                std::uint64_t replicas,
                                                std::uint64_t master_seed, int workers);

struct ExtinctionRecord {
    double n = 0.0;
    double lambda = 0.0;
    std::uint64_t replica = 0;
    double tau = 0.0;
    bool capped = false;
    std::uint64_t vertices = 0;
};

std::vector<ExtinctionRecord> extinction_scaling(const KernelSpec& spec, int dim,
                                                 double lambda,
                                                 std::span<const double> volumes,
                                                 std::uint64_t replicas, double horizon,
                                                 std::uint64_t events_budget,
                                                 std::uint64_t master_seed, int workers);

// Median extinction time of the records at volume n, treating capped values
// as right-censored at the horizon.
double median_extinction_time(std::span<const ExtinctionRecord> records, double n);

// OLS slope of log y against log x; rejects nonpositive coordinates.
std::pair<double, double> fit_loglog_slope(
    std::span<const std::pair<double, double>> points);

// ---------------------------------------------------------------------------
// Config-driven execution.
// ---------------------------------------------------------------------------

struct RunResult {
    std::vector<std::filesystem::path> outputs;
};

// Executes the pipeline named in the config and writes its CSVs plus a
// manifest into out_dir. Deterministic given (config, seed).
RunResult run_config(const std::filesystem::path& config_path,
                     const std::filesystem::path& out_dir,
                     std::optional<std::uint64_t> seed_override = std::nullopt,
                     std::optional<int> workers_override = std::nullopt);

// Same, with the pipeline name supplied by the caller (CLI subcommands).
RunResult run_pipeline(const Config& cfg, const std::string& pipeline,
                       const std::filesystem::path& out_dir, std::uint64_t seed,
                       int workers);

// CSV float formatting: shortest round-trip decimal.
std::string format_double(double x);

}  // namespace cpgg
