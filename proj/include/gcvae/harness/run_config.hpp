#pragma once

// One JSON document drives a run:
//
//   {
//     "objective": "two-tower",
//     "seed": 0,
//     "model":     {"latent_dim": 8, ...},
//     "training":  {"epochs": 300, "learning_rate": 1e-3, "clip_norm": 5.0, "patience": 20, "val_fraction": 0.2},
//     "inference": {"method": "is", "samples": 64},
//     "data":      {"train": "train.jsonl", "test": "test.jsonl", "n_max": 0},
//     "scenario":  {"scenario": "er-split", "n": 12, ..., "train_per_class": 50, "test_per_class": 50},
//     "output":    {"model": "model.json", "report": "report.json", "csv": "sweep.csv"},
//     "sweep":     {"sizes": [10, 25], "replicates": 3, "objectives": ["two-tower", "discriminative"]}
//   }
//
// Every section is optional; "data" and "scenario" are mutually exclusive.
// Unknown keys are rejected.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gcvae/datagen/scenarios.hpp"
#include "gcvae/inference/inference.hpp"
#include "gcvae/model/gcvae.hpp"
#include "gcvae/model/training.hpp"

namespace gcvae {

struct TrainingSettings {
  std::size_t epochs = 300;
  double learning_rate = 1e-3;
  double clip_norm = 5.0;
  std::size_t patience = 20;
  double val_fraction = 0.2;
};

struct ScenarioSource {
  ScenarioConfig scenario;
  std::size_t train_per_class = 50;
  /// 0 generates no test set.
  std::size_t test_per_class = 50;
};

struct FileSource {
  std::optional<std::filesystem::path> train;
  std::optional<std::filesystem::path> test;
  /// Pad target for loaded graphs; 0 means the largest training graph.
  std::size_t n_max = 0;
};

struct SweepSettings {
  std::vector<std::size_t> sizes = {10, 25, 50, 100, 200};
  std::size_t replicates = 3;
  std::vector<Objective> objectives = {Objective::two_tower, Objective::celbo, Objective::discriminative,
                                       Objective::discriminative_logistic};
  /// 0 uses the hardware concurrency.
  std::size_t threads = 0;
};

struct OutputPaths {
  std::optional<std::filesystem::path> model;
  std::optional<std::filesystem::path> report;
  std::optional<std::filesystem::path> csv;
};

struct RunConfig {
  Objective objective = Objective::two_tower;
  std::uint64_t seed = 0;
  /// n_max and d are ignored here; they come from the data.
  ModelConfig model;
  TrainingSettings training;
  /// Unset: `is` for generative objectives, `celbo` for discriminative ones.
  std::optional<Estimator> inference;
  std::size_t samples = 64;
  /// Overrides the label-frequency class prior P(y=+1).
  std::optional<double> prior_pos;
  std::optional<ScenarioSource> scenario;
  FileSource data;
  OutputPaths output;
  SweepSettings sweep;

  /// Throws std::invalid_argument on out-of-range values.
  void check() const;
};

Estimator default_estimator(Objective objective);
/// cfg.inference if set, else the objective's default.
Estimator resolved_estimator(const RunConfig& cfg);

TrainConfig train_config(const RunConfig& cfg, Objective objective);

/// Throws std::invalid_argument naming the offending key.
RunConfig run_config_from_json(const nlohmann::json& j);
/// The fully resolved configuration (the estimator is written out explicitly).
nlohmann::json to_json(const RunConfig& cfg);
/// Throws std::runtime_error naming the path if unreadable, std::invalid_argument on bad JSON.
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace gcvae
