#pragma once

// Graph conditional VAE: a label-conditioned prior p(z|y), a recognition
// network q(z|A,X,y) and a decoder p(A,X|z,y) over padded graphs, with one
// graph-level latent vector z.
//
// Recognition: two rounds of H <- tanh(Ahat H W) over node inputs [X | deg/(n_max-1)],
// mask-aware sum pooling, [pooled | onehot(y)] -> affine mean / logvar heads.
// Prior: onehot(y) -> tanh hidden layer -> mean / logvar heads.
// Decoder: [z | onehot(y)] -> tanh -> tanh -> edge (upper triangle, mirrored),
// node-existence and feature-mean heads.
// Every emitted logvar is clamped to [-10, 10].

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gcvae/graph/graph.hpp"
#include "gcvae/numerics/autodiff.hpp"
#include "gcvae/numerics/distributions.hpp"

namespace gcvae {

struct ModelConfig {
  std::size_t n_max = 0;
  std::size_t d = 0;
  std::size_t latent_dim = 8;
  std::size_t encoder_hidden = 32;
  std::size_t encoder_layers = 2;
  std::size_t prior_hidden = 16;
  std::size_t decoder_hidden = 64;
  double feature_variance = 1.0;
  bool model_features = true;

  std::size_t edge_slots() const { return n_max * (n_max - (n_max > 0 ? 1 : 0)) / 2; }
  /// Throws std::invalid_argument on out-of-range values.
  void check() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Positions of the named weight tensors inside GcvaeParams::weights.
struct ParamLayout {
  std::vector<ad::ParamId> encoder_layers;
  ad::ParamId enc_mean_w, enc_mean_b, enc_logvar_w, enc_logvar_b;
  ad::ParamId prior_w, prior_b, prior_mean_w, prior_mean_b, prior_logvar_w, prior_logvar_b;
  ad::ParamId dec_w1, dec_b1, dec_w2, dec_b2;
  ad::ParamId edge_w, edge_b, exist_w, exist_b, feat_w, feat_b;
};

/// All trainable weights of one GCVAE plus its hyperparameters.
class GcvaeParams {
 public:
  GcvaeParams() = default;
  /// Zero-valued weights of the shapes implied by config.
  explicit GcvaeParams(const ModelConfig& config);
  /// Uses the given tensors; throws ShapeError if names or shapes disagree with config.
  GcvaeParams(const ModelConfig& config, ad::ParamSet weights);

  const ModelConfig& config() const { return config_; }
  const ad::ParamSet& weights() const { return weights_; }
  ad::ParamSet& weights() { return weights_; }
  const ParamLayout& layout() const { return layout_; }

  bool all_finite() const;

  friend bool operator==(const GcvaeParams& a, const GcvaeParams& b) {
    return a.config_ == b.config_ && a.weights_ == b.weights_;
  }

 private:
  ModelConfig config_;
  ad::ParamSet weights_;
  ParamLayout layout_;
};

/// Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))) and zero biases.
GcvaeParams init_params(const ModelConfig& config, std::uint64_t seed);

/// One GCVAE per class, trained independently.
struct TwoTowerModel {
  GcvaeParams model_pos;
  GcvaeParams model_neg;

  const GcvaeParams& tower(Label y) const { return y == Label::positive ? model_pos : model_neg; }
  friend bool operator==(const TwoTowerModel&, const TwoTowerModel&) = default;
};

/// Decoder output for one latent sample.
struct DecodedGraph {
  Tensor edge_logits;    // n_max x n_max, symmetric, zero diagonal
  Tensor exist_logits;   // 1 x n_max
  Tensor feature_means;  // n_max x d
  double feature_variance = 1.0;
  bool score_features = true;
};

/// Per-graph constants the networks consume, computed once.
struct PreparedGraph {
  const Graph* graph = nullptr;
  Tensor adjacency_norm;  // n_max x n_max
  Tensor node_inputs;     // n_max x (d + 1)
  Tensor mask_row;        // 1 x n_max
  Tensor edge_targets;    // 1 x edge_slots
  Tensor edge_mask;       // 1 x edge_slots
  Tensor feature_targets; // 1 x n_max*d
  Tensor feature_mask;    // 1 x n_max*d
};

/// Throws ShapeError if the graph does not fit the model's n_max / d.
PreparedGraph prepare(const Graph& graph, const ModelConfig& config);

struct GaussianVars {
  ad::Var mean;
  ad::Var logvar;
};

struct DecodedVars {
  ad::Var edge_logits;    // 1 x edge_slots (upper triangle, row-major over i<j)
  ad::Var exist_logits;   // 1 x n_max
  ad::Var feature_means;  // 1 x n_max*d
};

/// The networks of one GcvaeParams bound to a tape. With trainable=false the
/// weights enter as constants and nothing is differentiated. The label
/// one-hots and both priors are recorded by the constructor, so the tape may
/// be truncated back to any size taken after construction.
class TapeModel {
 public:
  TapeModel(ad::Tape& tape, const GcvaeParams& params, bool trainable = true);

  ad::Tape& tape() { return tape_; }
  const GcvaeParams& params() const { return params_; }

  GaussianVars encode(const PreparedGraph& graph, Label y);
  GaussianVars prior(Label y) const { return y == Label::positive ? prior_pos_ : prior_neg_; }
  DecodedVars decode(ad::Var z, Label y);
  ad::Var log_likelihood(const PreparedGraph& graph, const DecodedVars& decoded);
  /// -E_q[ln p(A,X|y,z)] + KL(q || p) with one reparameterized sample.
  ad::Var celbo_loss(const PreparedGraph& graph, Label y, const Tensor& noise);

 private:
  ad::Var w(ad::ParamId id) const { return vars_[id]; }
  ad::Var onehot(Label y) const { return y == Label::positive ? onehot_pos_ : onehot_neg_; }
  GaussianVars compute_prior(Label y);

  ad::Tape& tape_;
  const GcvaeParams& params_;
  std::vector<ad::Var> vars_;
  ad::Var onehot_pos_, onehot_neg_;
  GaussianVars prior_pos_, prior_neg_;
};

/// Sum over graphs of -y [L(y=+1) - L(y=-1)], to be maximized. Both label
/// branches of a graph share the same weights and the same noise tensor.
/// Throws std::invalid_argument on an unlabeled graph.
ad::Var discriminative_objective(TapeModel& model, std::span<const PreparedGraph> graphs,
                                 std::span<const Tensor> noise);

// Value-level versions of the forward pass.
GaussianParams encode(const Graph& graph, Label y, const GcvaeParams& params);
GaussianParams prior(Label y, const GcvaeParams& params);
DecodedGraph decode(std::span<const double> z, Label y, std::span<const double> graph_mask,
                    const GcvaeParams& params);
/// Edge term over real-node pairs, existence term over every slot, Gaussian
/// feature term over real nodes.
double graph_log_likelihood(const Graph& graph, const DecodedGraph& decoded);
double celbo_loss(const Graph& graph, Label y, const GcvaeParams& params, std::span<const double> noise);

}  // namespace gcvae
