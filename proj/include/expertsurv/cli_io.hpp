#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "expertsurv/assessment.hpp"
#include "expertsurv/dataset.hpp"
#include "expertsurv/elicitation.hpp"
#include "expertsurv/inference.hpp"
#include "expertsurv/mcmc.hpp"
#include "expertsurv/pooling.hpp"

namespace expertsurv::io {

std::string software_version();

/// Shortest round-trip decimal form with 17 significant digits ("%.17g").
std::string format_number(double x);

// ---------------------------------------------------------------------------
// Datasets

/// CSV with header `time,status` or `time,status,arm`. Errors name the
/// source and line number.
SurvivalDataset parse_dataset(std::istream& in, const std::string& source = "<input>");
SurvivalDataset load_dataset(const std::filesystem::path& path);
void write_dataset(const std::filesystem::path& path, const SurvivalDataset& d);

// ---------------------------------------------------------------------------
// Expert opinion

struct ExpertEntry {
  std::string id;
  std::optional<ExpertJudgment> judgment;  // raw limits, fitted with best_fit
  ElicitedDistribution distribution;       // fitted or given directly
};

struct PenaltyDefinition {
  TargetQuantity quantity;
  std::vector<ExpertEntry> experts;
  PoolMethod pool = PoolMethod::Linear;
  std::vector<double> weights;  // empty: equal
  double penalty_weight = 1.0;

  ExpertPenalty to_penalty() const;
};

/// JSON array of
///   {"quantity": "survival"|"mean"|"median"|"mean_difference"|"survival_difference",
///    "timepoint": t, "arm": 0|1, "pool": "linear"|"log", "weights": [...],
///    "experts": [{"id", "lpl", "mlv", "upl", "coverage"?} | {"id"?, "family", "params"}]}
/// Errors carry the JSON pointer of the offending value.
std::vector<PenaltyDefinition> parse_expert_config(const nlohmann::json& j,
                                                   const std::vector<ElicitedFamily>& candidates = default_candidates());
std::vector<PenaltyDefinition> load_expert_config(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Analysis

struct AnalysisConfig {
  std::filesystem::path dataset;
  std::vector<ModelSpec> models;
  std::vector<PenaltyDefinition> penalties;
  mcmc::Config mcmc;
  std::filesystem::path output_dir = "results";
  std::uint64_t seed = 1;
  double grid_max = 0.0;  // 0: twice the largest observed time
  std::size_t grid_points = 50;
  bool ml_only = false;
  /// Effective configuration as JSON (paths resolved, overrides applied); hashed into the manifest.
  nlohmann::json canonical;
};

/// Keys: dataset (path, relative to the config file), models (list of family
/// keys), expert_opinion (inline array or path), mcmc {chains, iterations,
/// burnin, thin}, seed, output_dir, time_grid {max, points}.
AnalysisConfig parse_analysis_config(const nlohmann::json& j, const std::filesystem::path& base_dir = ".");
AnalysisConfig load_analysis_config(const std::filesystem::path& path);

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> chains, iterations, burnin;
  std::optional<std::filesystem::path> output_dir;
  bool ml_only = false;
};

void apply_overrides(AnalysisConfig& c, const Overrides& o);

struct ModelStatus {
  std::string model;
  bool ok = false;
  std::string message;
  double seconds = 0.0;
};

struct RunResult {
  ModelComparison comparison;
  std::vector<ModelStatus> status;
  std::filesystem::path output_dir;
  int exit_code = 0;  // 0 if any model succeeded, 1 otherwise
};

/// Fits every model, writes comparison.csv, curves.csv, priors.csv and
/// manifest.json into the output directory.
RunResult run_analysis(const AnalysisConfig& c, std::ostream* log = nullptr);

/// SHA-256 hex digest.
std::string sha256_hex(const std::string& data);

/// Writes via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// ---------------------------------------------------------------------------
// Standalone elicitation

/// Judgments file: {"sample_size"?: n, "candidates"?: [...], "judgments": [{id, timepoint, lpl, mlv, upl, coverage?}]}
/// or a bare array of judgments. Returns a report with the best fit per
/// judgment and the beta ESS where applicable.
std::string elicitation_report(const std::filesystem::path& path);

}  // namespace expertsurv::io
