#include "gcvae/model/gcvae.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace gcvae {

namespace {

struct TensorSpec {
  std::string name;
  std::size_t rows;
  std::size_t cols;
  bool bias;
};

std::vector<TensorSpec> tensor_specs(const ModelConfig& c) {
  std::vector<TensorSpec> specs;
  const std::size_t in = c.d + 1;
  std::size_t width = in;
  for (std::size_t l = 0; l < c.encoder_layers; ++l) {
    specs.push_back({"enc.mp" + std::to_string(l) + ".w", width, c.encoder_hidden, false});
    width = c.encoder_hidden;
  }
  const std::size_t head_in = width + 2;
  const std::size_t dz = c.latent_dim;
  specs.push_back({"enc.mean.w", head_in, dz, false});
  specs.push_back({"enc.mean.b", 1, dz, true});
  specs.push_back({"enc.logvar.w", head_in, dz, false});
  specs.push_back({"enc.logvar.b", 1, dz, true});

  specs.push_back({"prior.hidden.w", 2, c.prior_hidden, false});
  specs.push_back({"prior.hidden.b", 1, c.prior_hidden, true});
  specs.push_back({"prior.mean.w", c.prior_hidden, dz, false});
  specs.push_back({"prior.mean.b", 1, dz, true});
  specs.push_back({"prior.logvar.w", c.prior_hidden, dz, false});
  specs.push_back({"prior.logvar.b", 1, dz, true});

  const std::size_t h = c.decoder_hidden;
  specs.push_back({"dec.hidden1.w", dz + 2, h, false});
  specs.push_back({"dec.hidden1.b", 1, h, true});
  specs.push_back({"dec.hidden2.w", h, h, false});
  specs.push_back({"dec.hidden2.b", 1, h, true});
  specs.push_back({"dec.edge.w", h, c.edge_slots(), false});
  specs.push_back({"dec.edge.b", 1, c.edge_slots(), true});
  specs.push_back({"dec.exist.w", h, c.n_max, false});
  specs.push_back({"dec.exist.b", 1, c.n_max, true});
  specs.push_back({"dec.feat.w", h, c.n_max * c.d, false});
  specs.push_back({"dec.feat.b", 1, c.n_max * c.d, true});
  return specs;
}

ParamLayout layout_for(const ModelConfig& c) {
  ParamLayout l{};
  ad::ParamId id = 0;
  for (std::size_t i = 0; i < c.encoder_layers; ++i) l.encoder_layers.push_back(id++);
  for (ad::ParamId* p : {&l.enc_mean_w, &l.enc_mean_b, &l.enc_logvar_w, &l.enc_logvar_b, &l.prior_w, &l.prior_b,
                         &l.prior_mean_w, &l.prior_mean_b, &l.prior_logvar_w, &l.prior_logvar_b, &l.dec_w1,
                         &l.dec_b1, &l.dec_w2, &l.dec_b2, &l.edge_w, &l.edge_b, &l.exist_w, &l.exist_b,
                         &l.feat_w, &l.feat_b}) {
    *p = id++;
  }
  return l;
}

Tensor one_hot(Label y) {
  return Tensor::row({y == Label::positive ? 1.0 : 0.0, y == Label::negative ? 1.0 : 0.0});
}

}  // namespace

void ModelConfig::check() const {
  if (latent_dim < 1) throw std::invalid_argument("latent_dim must be >= 1");
  if (n_max < 1) throw std::invalid_argument("n_max must be >= 1");
  if (encoder_layers > 0 && encoder_hidden < 1) throw std::invalid_argument("encoder_hidden must be >= 1");
  if (prior_hidden < 1) throw std::invalid_argument("prior_hidden must be >= 1");
  if (decoder_hidden < 1) throw std::invalid_argument("decoder_hidden must be >= 1");
  if (!(feature_variance > 0.0) || !std::isfinite(feature_variance)) {
    throw std::invalid_argument("feature_variance must be positive");
  }
}

GcvaeParams::GcvaeParams(const ModelConfig& config) : config_(config), layout_(layout_for(config)) {
  config_.check();
  for (const TensorSpec& s : tensor_specs(config_)) weights_.add(s.name, Tensor::zeros(s.rows, s.cols));
}

GcvaeParams::GcvaeParams(const ModelConfig& config, ad::ParamSet weights)
    : config_(config), weights_(std::move(weights)), layout_(layout_for(config)) {
  config_.check();
  const auto specs = tensor_specs(config_);
  if (specs.size() != weights_.size()) {
    throw ShapeError("expected " + std::to_string(specs.size()) + " weight tensors, got " +
                     std::to_string(weights_.size()));
  }
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const Tensor& t = weights_[i];
    if (weights_.name(i) != specs[i].name || t.rank() != 2 || t.rows() != specs[i].rows ||
        t.cols() != specs[i].cols) {
      throw ShapeError("weight " + std::to_string(i) + " is " + weights_.name(i) + " " + t.shape_string() +
                       ", expected " + specs[i].name + " [" + std::to_string(specs[i].rows) + "x" +
                       std::to_string(specs[i].cols) + "]");
    }
  }
}

bool GcvaeParams::all_finite() const {
  for (const Tensor& t : weights_.tensors()) {
    if (!t.all_finite()) return false;
  }
  return true;
}

GcvaeParams init_params(const ModelConfig& config, std::uint64_t seed) {
  GcvaeParams params(config);
  std::mt19937_64 rng(seed);
  const auto specs = tensor_specs(config);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].bias) continue;
    const double fan = static_cast<double>(specs[i].rows + specs[i].cols);
    const double limit = fan > 0 ? std::sqrt(6.0 / fan) : 0.0;
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& v : params.weights()[i].values()) v = dist(rng);
  }
  return params;
}

PreparedGraph prepare(const Graph& g, const ModelConfig& c) {
  if (g.n_max() != c.n_max || g.d() != c.d) {
    throw ShapeError("graph has " + std::to_string(g.n_max()) + " slots and feature width " +
                     std::to_string(g.d()) + "; model expects " + std::to_string(c.n_max) + " and " +
                     std::to_string(c.d));
  }
  const std::size_t n = c.n_max, d = c.d;
  PreparedGraph p;
  p.graph = &g;
  p.adjacency_norm = normalized_adjacency(g);
  p.node_inputs = Tensor::zeros(n, d + 1);
  const double deg_scale = n > 1 ? 1.0 / static_cast<double>(n - 1) : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) deg += g.adj.at(i, j);
    for (std::size_t k = 0; k < d; ++k) p.node_inputs.at(i, k) = g.features.at(i, k);
    p.node_inputs.at(i, d) = deg * deg_scale;
  }
  p.mask_row = Tensor::row(g.mask);
  p.edge_targets = Tensor::zeros(1, c.edge_slots());
  p.edge_mask = Tensor::zeros(1, c.edge_slots());
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j, ++k) {
      p.edge_targets[k] = g.adj.at(i, j);
      p.edge_mask[k] = g.mask[i] * g.mask[j];
    }
  p.feature_targets = Tensor::zeros(1, n * d);
  p.feature_mask = Tensor::zeros(1, n * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t f = 0; f < d; ++f) {
      p.feature_targets[i * d + f] = g.features.at(i, f);
      p.feature_mask[i * d + f] = g.mask[i];
    }
  return p;
}

TapeModel::TapeModel(ad::Tape& tape, const GcvaeParams& params, bool trainable)
    : tape_(tape), params_(params) {
  if (trainable) {
    vars_ = tape.bind(params.weights());
  } else {
    vars_.reserve(params.weights().size());
    for (const Tensor& t : params.weights().tensors()) vars_.push_back(tape.constant(t));
  }
  onehot_pos_ = tape.constant(one_hot(Label::positive));
  onehot_neg_ = tape.constant(one_hot(Label::negative));
  prior_pos_ = compute_prior(Label::positive);
  prior_neg_ = compute_prior(Label::negative);
}

GaussianVars TapeModel::compute_prior(Label y) {
  const ParamLayout& l = params_.layout();
  const ad::Var h = ad::tanh(ad::affine(onehot(y), w(l.prior_w), w(l.prior_b)));
  const ad::Var mean = ad::affine(h, w(l.prior_mean_w), w(l.prior_mean_b));
  const ad::Var logvar = ad::clamp(ad::affine(h, w(l.prior_logvar_w), w(l.prior_logvar_b)), kLogvarMin, kLogvarMax);
  return {mean, logvar};
}

GaussianVars TapeModel::encode(const PreparedGraph& graph, Label y) {
  const ParamLayout& l = params_.layout();
  const ad::Var adj = tape_.constant(graph.adjacency_norm);
  ad::Var h = tape_.constant(graph.node_inputs);
  for (ad::ParamId id : l.encoder_layers) h = ad::tanh(ad::matmul(ad::matmul(adj, h), w(id)));
  const ad::Var pooled = ad::matmul(tape_.constant(graph.mask_row), h);
  const ad::Var in = ad::concat_cols(pooled, onehot(y));
  const ad::Var mean = ad::affine(in, w(l.enc_mean_w), w(l.enc_mean_b));
  const ad::Var logvar = ad::clamp(ad::affine(in, w(l.enc_logvar_w), w(l.enc_logvar_b)), kLogvarMin, kLogvarMax);
  return {mean, logvar};
}

DecodedVars TapeModel::decode(ad::Var z, Label y) {
  const ParamLayout& l = params_.layout();
  if (z.value().size() != params_.config().latent_dim) {
    throw ShapeError("latent has " + std::to_string(z.value().size()) + " entries, model expects " +
                     std::to_string(params_.config().latent_dim));
  }
  const ad::Var in = ad::concat_cols(z, onehot(y));
  const ad::Var h1 = ad::tanh(ad::affine(in, w(l.dec_w1), w(l.dec_b1)));
  const ad::Var h2 = ad::tanh(ad::affine(h1, w(l.dec_w2), w(l.dec_b2)));
  return {ad::affine(h2, w(l.edge_w), w(l.edge_b)), ad::affine(h2, w(l.exist_w), w(l.exist_b)),
          ad::affine(h2, w(l.feat_w), w(l.feat_b))};
}

ad::Var TapeModel::log_likelihood(const PreparedGraph& graph, const DecodedVars& decoded) {
  const ModelConfig& c = params_.config();
  static const auto ones = [](std::size_t n) { return Tensor(std::vector<std::size_t>{1, n}, 1.0); };
  ad::Var ll = ad::add(ad::bernoulli_log_likelihood(decoded.edge_logits, graph.edge_targets, graph.edge_mask),
                       ad::bernoulli_log_likelihood(decoded.exist_logits, graph.mask_row, ones(c.n_max)));
  if (c.model_features && c.d > 0) {
    ll = ad::add(ll, ad::gaussian_log_likelihood(decoded.feature_means, graph.feature_targets,
                                                 graph.feature_mask, c.feature_variance));
  }
  return ll;
}

ad::Var TapeModel::celbo_loss(const PreparedGraph& graph, Label y, const Tensor& noise) {
  const GaussianVars q = encode(graph, y);
  const ad::Var z = ad::reparameterize(q.mean, q.logvar, noise);
  const ad::Var recon = log_likelihood(graph, decode(z, y));
  const GaussianVars p = prior(y);
  return ad::sub(ad::gaussian_kld(q.mean, q.logvar, p.mean, p.logvar), recon);
}

ad::Var discriminative_objective(TapeModel& model, std::span<const PreparedGraph> graphs,
                                 std::span<const Tensor> noise) {
  if (graphs.size() != noise.size()) {
    throw ShapeError("discriminative_objective: " + std::to_string(graphs.size()) + " graphs but " +
                     std::to_string(noise.size()) + " noise tensors");
  }
  ad::Tape& tape = model.tape();
  ad::Var total = tape.constant(Tensor::scalar(0.0));
  for (std::size_t j = 0; j < graphs.size(); ++j) {
    const auto& label = graphs[j].graph->label;
    if (!label) throw std::invalid_argument("graph " + std::to_string(j) + " has no label");
    const ad::Var loss_pos = model.celbo_loss(graphs[j], Label::positive, noise[j]);
    const ad::Var loss_neg = model.celbo_loss(graphs[j], Label::negative, noise[j]);
    total = ad::add(total, ad::scale(ad::sub(loss_pos, loss_neg), -static_cast<double>(to_int(*label))));
  }
  return total;
}

GaussianParams encode(const Graph& graph, Label y, const GcvaeParams& params) {
  const PreparedGraph p = prepare(graph, params.config());
  ad::Tape tape;
  TapeModel model(tape, params, false);
  const GaussianVars q = model.encode(p, y);
  const auto& m = q.mean.value().values();
  const auto& lv = q.logvar.value().values();
  return GaussianParams({m.begin(), m.end()}, {lv.begin(), lv.end()});
}

GaussianParams prior(Label y, const GcvaeParams& params) {
  ad::Tape tape;
  TapeModel model(tape, params, false);
  const GaussianVars p = model.prior(y);
  const auto& m = p.mean.value().values();
  const auto& lv = p.logvar.value().values();
  return GaussianParams({m.begin(), m.end()}, {lv.begin(), lv.end()});
}

DecodedGraph decode(std::span<const double> z, Label y, std::span<const double> graph_mask,
                    const GcvaeParams& params) {
  const ModelConfig& c = params.config();
  if (graph_mask.size() != c.n_max) {
    throw ShapeError("mask has " + std::to_string(graph_mask.size()) + " slots, model expects " +
                     std::to_string(c.n_max));
  }
  ad::Tape tape;
  TapeModel model(tape, params, false);
  const DecodedVars out = model.decode(tape.constant(Tensor::row({z.begin(), z.end()})), y);

  DecodedGraph g;
  g.edge_logits = Tensor::zeros(c.n_max, c.n_max);
  const Tensor& e = out.edge_logits.value();
  std::size_t k = 0;
  for (std::size_t i = 0; i < c.n_max; ++i)
    for (std::size_t j = i + 1; j < c.n_max; ++j, ++k) {
      g.edge_logits.at(i, j) = e[k];
      g.edge_logits.at(j, i) = e[k];
    }
  g.exist_logits = out.exist_logits.value();
  g.feature_means = Tensor::zeros(c.n_max, c.d);
  const Tensor& f = out.feature_means.value();
  for (std::size_t i = 0; i < c.n_max; ++i) {
    if (graph_mask[i] == 0.0) continue;
    for (std::size_t q = 0; q < c.d; ++q) g.feature_means.at(i, q) = f[i * c.d + q];
  }
  g.feature_variance = c.feature_variance;
  g.score_features = c.model_features;
  return g;
}

double graph_log_likelihood(const Graph& graph, const DecodedGraph& decoded) {
  const std::size_t n = graph.n_max();
  const std::size_t d = graph.d();
  if (decoded.edge_logits.rows() != n || decoded.edge_logits.cols() != n || decoded.exist_logits.size() != n ||
      decoded.feature_means.rows() != n || decoded.feature_means.cols() != d) {
    throw ShapeError("decoded graph shape does not match graph with " + std::to_string(n) + " slots and " +
                     std::to_string(d) + " features");
  }
  double ll = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (graph.mask[i] == 0.0) continue;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (graph.mask[j] == 0.0) continue;
      const double l = decoded.edge_logits.at(i, j);
      ll -= graph.has_edge(i, j) ? softplus(-l) : softplus(l);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double l = decoded.exist_logits[i];
    ll -= graph.mask[i] != 0.0 ? softplus(-l) : softplus(l);
  }
  if (decoded.score_features && d > 0) {
    const double var = decoded.feature_variance;
    const double log_norm = std::log(2.0 * std::numbers::pi * var);
    for (std::size_t i = 0; i < n; ++i) {
      if (graph.mask[i] == 0.0) continue;
      for (std::size_t k = 0; k < d; ++k) {
        const double r = graph.features.at(i, k) - decoded.feature_means.at(i, k);
        ll += -0.5 * (log_norm + r * r / var);
      }
    }
  }
  return ll;
}

double celbo_loss(const Graph& graph, Label y, const GcvaeParams& params, std::span<const double> noise) {
  const PreparedGraph p = prepare(graph, params.config());
  ad::Tape tape;
  TapeModel model(tape, params, false);
  const Tensor eps = Tensor::row({noise.begin(), noise.end()});
  return model.celbo_loss(p, y, eps).scalar();
}

}  // namespace gcvae
