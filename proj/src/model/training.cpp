#include "gcvae/model/training.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace gcvae {

std::string_view objective_name(Objective objective) {
  switch (objective) {
    case Objective::two_tower: return "two-tower";
    case Objective::celbo: return "celbo";
    case Objective::discriminative: return "discriminative";
    case Objective::discriminative_logistic: return "discriminative-logistic";
  }
  return "unknown";
}

Objective parse_objective(std::string_view name) {
  for (Objective o : {Objective::two_tower, Objective::celbo, Objective::discriminative,
                      Objective::discriminative_logistic}) {
    if (objective_name(o) == name) return o;
  }
  throw std::invalid_argument("unknown objective \"" + std::string(name) +
                              "\" (expected two-tower, celbo, discriminative or discriminative-logistic)");
}

bool is_discriminative(Objective objective) {
  return objective == Objective::discriminative || objective == Objective::discriminative_logistic;
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Adam::Adam(const ad::ParamSet& params, AdamConfig config) : config_(config) {
  for (const Tensor& t : params.tensors()) {
    m_.emplace_back(t.size(), 0.0);
    v_.emplace_back(t.size(), 0.0);
  }
}

void Adam::step(ad::ParamSet& params, const ad::Gradients& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& w = params[p];
    const Tensor& g = grads[p];
    auto& m = m_[p];
    auto& v = v_[p];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
      w[i] -= config_.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.epsilon);
    }
  }
}

double clip_gradients(ad::Gradients& grads, double max_norm) {
  double sq = 0.0;
  for (const Tensor& g : grads)
    for (double v : g.values()) sq += v * v;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (Tensor& g : grads)
      for (double& v : g.values()) v *= s;
  }
  return norm;
}

DivergenceError::DivergenceError(std::size_t epoch, const std::string& detail)
    : std::runtime_error("training diverged at epoch " + std::to_string(epoch) + ": " + detail), epoch_(epoch) {}

double objective_loss(const GcvaeParams& params, Objective objective, const Dataset& batch,
                      std::span<const Tensor> noise, ad::Gradients* grads) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  if (noise.size() != batch.size()) throw ShapeError("one noise tensor per graph is required");
  std::vector<PreparedGraph> prepared;
  prepared.reserve(batch.size());
  for (const Graph& g : batch) {
    if (!g.label) throw std::invalid_argument("training graphs must be labeled");
    prepared.push_back(prepare(g, params.config()));
  }

  ad::Tape tape;
  TapeModel model(tape, params, grads != nullptr);
  const double inv_m = 1.0 / static_cast<double>(batch.size());
  ad::Var loss;
  switch (objective) {
    case Objective::two_tower:
    case Objective::celbo: {
      ad::Var total = tape.constant(Tensor::scalar(0.0));
      for (std::size_t j = 0; j < prepared.size(); ++j) {
        total = ad::add(total, model.celbo_loss(prepared[j], *batch[j].label, noise[j]));
      }
      loss = ad::scale(total, inv_m);
      break;
    }
    case Objective::discriminative:
      loss = ad::scale(discriminative_objective(model, prepared, noise), -inv_m);
      break;
    case Objective::discriminative_logistic: {
      ad::Var total = tape.constant(Tensor::scalar(0.0));
      for (std::size_t j = 0; j < prepared.size(); ++j) {
        const ad::Var pos = model.celbo_loss(prepared[j], Label::positive, noise[j]);
        const ad::Var neg = model.celbo_loss(prepared[j], Label::negative, noise[j]);
        const double y = static_cast<double>(to_int(*batch[j].label));
        total = ad::add(total, ad::softplus(ad::scale(ad::sub(pos, neg), y)));
      }
      loss = ad::scale(total, inv_m);
      break;
    }
  }
  if (grads) *grads = tape.backprop(loss, params.weights());
  return loss.scalar();
}

namespace {

std::vector<Tensor> draw_noise(std::size_t count, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Tensor> out;
  out.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    std::vector<double> v(dim);
    for (double& x : v) x = normal(rng);
    out.push_back(Tensor::row(std::move(v)));
  }
  return out;
}

struct ValScore {
  double accuracy;
  double loss;
};

// Scores with the c-ELBO surrogate at the posterior mean (zero noise).
ValScore validation_score(const GcvaeParams& params, Objective objective, const Dataset& val) {
  const std::vector<Tensor> zero(val.size(), Tensor::zeros(1, params.config().latent_dim));
  std::size_t correct = 0;
  ad::Tape tape;
  TapeModel model(tape, params, false);
  const std::size_t mark = tape.size();
  for (const Graph& g : val) {
    const PreparedGraph p = prepare(g, params.config());
    const double pos = model.celbo_loss(p, Label::positive, zero.front()).scalar();
    const double neg = model.celbo_loss(p, Label::negative, zero.front()).scalar();
    tape.truncate(mark);
    const Label pred = (neg - pos) > 0.0 ? Label::positive : Label::negative;
    if (g.label == pred) ++correct;
  }
  return {static_cast<double>(correct) / static_cast<double>(val.size()),
          objective_loss(params, objective, val, zero)};
}

struct LoopResult {
  GcvaeParams params;
  std::vector<double> history;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
};

LoopResult train_loop(GcvaeParams params, const Dataset& train, const Dataset* val, Objective objective,
                      std::optional<Label> tower, const TrainConfig& config, std::uint64_t seed) {
  Adam adam(params.weights(), config.adam);
  LoopResult out{params, {}, 0, 0};
  double best_acc = -1.0;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    if (config.on_graph_access) {
      for (const Graph& g : train) config.on_graph_access(objective, tower, g);
    }
    const auto noise = draw_noise(train.size(), params.config().latent_dim, mix_seed(seed, epoch));
    ad::Gradients grads;
    double loss = 0.0;
    try {
      loss = objective_loss(params, objective, train, noise, &grads);
    } catch (const NumericError& e) {
      throw DivergenceError(epoch, e.what());
    }
    if (!std::isfinite(loss)) throw DivergenceError(epoch, "non-finite loss");
    out.history.push_back(loss);
    clip_gradients(grads, config.clip_norm);
    adam.step(params.weights(), grads);
    if (!params.all_finite()) throw DivergenceError(epoch, "non-finite parameters after update");
    out.epochs_run = epoch;

    if (val) {
      ValScore s;
      try {
        s = validation_score(params, objective, *val);
      } catch (const NumericError& e) {
        throw DivergenceError(epoch, e.what());
      }
      if (s.accuracy > best_acc || (s.accuracy == best_acc && s.loss < best_loss)) {
        best_acc = s.accuracy;
        best_loss = s.loss;
        out.params = params;
        out.best_epoch = epoch;
        since_best = 0;
      } else if (++since_best >= config.patience) {
        return out;
      }
    }
  }
  if (!val) {
    out.params = std::move(params);
    out.best_epoch = out.epochs_run;
  } else if (out.best_epoch == 0) {
    out.params = std::move(params);
  }
  return out;
}

}  // namespace

FitResult fit(const Dataset& dataset, const TrainConfig& config, std::uint64_t seed) {
  if (dataset.empty()) throw std::invalid_argument("training set is empty");
  if (!dataset.all_labeled()) throw std::invalid_argument("training graphs must all be labeled");
  const Objective objective = config.objective;
  if (objective != Objective::celbo) {
    for (Label y : {Label::positive, Label::negative}) {
      if (dataset.count(y) == 0) {
        throw std::invalid_argument(std::string("training set has no graphs labeled ") +
                                    (y == Label::positive ? "+1" : "-1"));
      }
    }
  }
  ModelConfig mc = config.model;
  mc.n_max = dataset.n_max();
  mc.d = dataset.d();
  mc.check();

  FitResult result{GcvaeParams{}, {}, 0, 0};
  if (objective == Objective::two_tower) {
    TwoTowerModel towers;
    for (Label y : {Label::positive, Label::negative}) {
      const std::uint64_t tower_seed = mix_seed(seed, y == Label::positive ? 1 : 2);
      LoopResult r = train_loop(init_params(mc, mix_seed(tower_seed, 0)), dataset.filter(y), nullptr, objective,
                                y, config, mix_seed(tower_seed, 1));
      (y == Label::positive ? towers.model_pos : towers.model_neg) = std::move(r.params);
      if (result.history.size() < r.history.size()) result.history.resize(r.history.size(), 0.0);
      for (std::size_t i = 0; i < r.history.size(); ++i) result.history[i] += r.history[i];
      result.epochs_run = std::max(result.epochs_run, r.epochs_run);
    }
    result.best_epoch = result.epochs_run;
    result.model = std::move(towers);
    return result;
  }

  GcvaeParams init = init_params(mc, mix_seed(seed, 0));
  LoopResult r;
  if (is_discriminative(objective) && config.epochs > 0) {
    Dataset train = dataset;
    Dataset val = dataset;
    try {
      auto parts = holdout(dataset, config.val_fraction, mix_seed(seed, 3));
      train = std::move(parts.first);
      val = std::move(parts.second);
    } catch (const std::invalid_argument&) {
      // Too few graphs per label to hold any out: validate on the training set.
    }
    r = train_loop(std::move(init), train, &val, objective, std::nullopt, config, mix_seed(seed, 1));
  } else {
    r = train_loop(std::move(init), dataset, nullptr, objective, std::nullopt, config, mix_seed(seed, 1));
  }
  result.model = std::move(r.params);
  result.history = std::move(r.history);
  result.epochs_run = r.epochs_run;
  result.best_epoch = r.best_epoch;
  return result;
}

}  // namespace gcvae
