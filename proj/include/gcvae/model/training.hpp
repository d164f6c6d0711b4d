#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gcvae/graph/graph.hpp"
#include "gcvae/model/gcvae.hpp"

namespace gcvae {

enum class Objective {
  two_tower,                // one GCVAE per class, each fit by its c-ELBO
  celbo,                    // one GCVAE fit by the c-ELBO of (A, X, y)
  discriminative,           // maximize sum_j -y_j [L(y=+1) - L(y=-1)]
  discriminative_logistic,  // minimize sum_j softplus(-y_j [L(y=-1) - L(y=+1)])
};

std::string_view objective_name(Objective objective);
/// Throws std::invalid_argument on an unknown name.
Objective parse_objective(std::string_view name);
bool is_discriminative(Objective objective);

/// Adam with bias correction.
struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam(const ad::ParamSet& params, AdamConfig config);
  void step(ad::ParamSet& params, const ad::Gradients& grads);
  std::size_t steps() const { return t_; }

 private:
  AdamConfig config_;
  std::vector<std::vector<double>> m_, v_;
  std::size_t t_ = 0;
};

/// Rescales grads in place so their joint L2 norm is at most max_norm; returns
/// the norm before clipping. max_norm <= 0 disables clipping.
double clip_gradients(ad::Gradients& grads, double max_norm);

struct TrainConfig {
  Objective objective = Objective::two_tower;
  /// n_max and d are taken from the training data.
  ModelConfig model;
  AdamConfig adam;
  std::size_t epochs = 300;
  double clip_norm = 5.0;
  /// Early stopping on validation accuracy (discriminative objectives only).
  std::size_t patience = 20;
  double val_fraction = 0.2;
  /// Called for every graph a training step reads; tests use it to audit which
  /// graphs reach each tower.
  std::function<void(Objective, std::optional<Label> tower, const Graph&)> on_graph_access;
};

/// Non-finite loss or parameters during training.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t epoch, const std::string& detail);
  std::size_t epoch() const { return epoch_; }

 private:
  std::size_t epoch_;
};

using TrainedModel = std::variant<GcvaeParams, TwoTowerModel>;

struct FitResult {
  TrainedModel model;
  /// Training objective (mean per graph, as minimized) per epoch; for
  /// two-tower runs, the sum of both towers' losses.
  std::vector<double> history;
  std::size_t epochs_run = 0;
  /// Epoch whose parameters were returned (early stopping), else epochs_run.
  std::size_t best_epoch = 0;
};

/// Trains per config.objective. Deterministic in (dataset, config, seed).
/// Throws std::invalid_argument for an empty training set, a missing class,
/// or unlabeled graphs; DivergenceError on a non-finite loss.
FitResult fit(const Dataset& dataset, const TrainConfig& config, std::uint64_t seed);

/// Mean training loss the given objective minimizes, for one batch and fixed noise.
/// Exposed for the descent checks.
double objective_loss(const GcvaeParams& params, Objective objective, const Dataset& batch,
                      std::span<const Tensor> noise, ad::Gradients* grads = nullptr);

/// splitmix64 finalizer, for deriving independent seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace gcvae
