#pragma once

// End-to-end runs. Seeds derived from the run seed s:
//   training data mix(s, 1), test data mix(s, 2), fit mix(s, 3), estimator mix(s, 4).
// Sweep cell (m, r) uses seed mix(mix(s, m), r) for subsampling and, through the
// same derivation, for its fit and estimator.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gcvae/harness/run_config.hpp"

namespace gcvae {

/// A failure attributed to one stage of a run: "config parse", "data load",
/// "training", "evaluation" or "output".
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, int exit_code, const std::string& detail);
  const std::string& stage() const { return stage_; }
  int exit_code() const { return exit_code_; }

 private:
  std::string stage_;
  int exit_code_;
};

struct ModelFile {
  Objective objective = Objective::two_tower;
  ClassPriors priors;
  TrainedModel model;
};

nlohmann::json to_json(const ModelFile& file);
ModelFile model_file_from_json(const nlohmann::json& j);
void save_model_file(const ModelFile& file, const std::filesystem::path& path);
ModelFile load_model_file(const std::filesystem::path& path);

/// ModelConfig (n_max, d) of whatever the file holds.
const ModelConfig& model_config(const TrainedModel& model);

struct RunData {
  Dataset train;
  std::optional<Dataset> test;
};

/// Scenario data or the configured files. Throws StageError("data load", 2, ...).
RunData load_run_data(const RunConfig& cfg);

/// Report document: the metrics fields plus the resolved "config".
nlohmann::json report_json(const MetricsReport& report, const nlohmann::json& config);
/// Pretty-printed JSON with a trailing newline.
std::string dump_document(const nlohmann::json& j);
void write_text(const std::filesystem::path& path, const std::string& text);

struct ExperimentResult {
  ModelFile model;
  FitResult fit;
  std::optional<MetricsReport> report;
};

/// Loads data, trains per cfg.objective, evaluates on the test split when there
/// is one, and writes output.model / output.report when set. Failures surface
/// as StageError.
ExperimentResult run_experiment(const RunConfig& cfg);

struct SweepRow {
  Objective objective = Objective::two_tower;
  std::size_t m = 0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double logloss = 0.0;
  double auc = 0.0;
};

inline constexpr const char* kSweepHeader = "objective,m,seed,accuracy,logloss,auc";

std::uint64_t sweep_cell_seed(std::uint64_t master, std::size_t m, std::size_t replicate);

/// One row per (objective, m, replicate), sorted by (objective name, m, seed).
/// The training data is the subsampling pool; the test split is required.
std::vector<SweepRow> sweep(const RunConfig& cfg);
std::vector<SweepRow> sweep(const RunConfig& cfg, const RunData& data);
std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace gcvae
