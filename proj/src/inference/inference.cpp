#include "gcvae/inference/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace gcvae {

std::string_view estimator_name(Estimator e) {
  switch (e) {
    case Estimator::deterministic: return "det";
    case Estimator::monte_carlo: return "mc";
    case Estimator::importance: return "is";
    case Estimator::celbo: return "celbo";
  }
  return "unknown";
}

Estimator parse_estimator(std::string_view name) {
  if (name == "det" || name == "deterministic") return Estimator::deterministic;
  if (name == "mc" || name == "monte-carlo") return Estimator::monte_carlo;
  if (name == "is" || name == "importance") return Estimator::importance;
  if (name == "celbo") return Estimator::celbo;
  throw std::invalid_argument("unknown inference method \"" + std::string(name) + "\" (expected det, mc, is or celbo)");
}

void EstimatorConfig::check() const {
  if (method != Estimator::deterministic && samples == 0) {
    throw std::invalid_argument("sampling estimators need samples >= 1");
  }
}

ClassPriors ClassPriors::from_positive(double p_pos) {
  if (!(p_pos > 0.0 && p_pos < 1.0)) throw std::invalid_argument("class prior must lie in (0, 1)");
  return {p_pos, 1.0 - p_pos};
}

double ClassPriors::log_ratio() const { return std::log(p_pos) - std::log(p_neg); }

namespace {

// Shared machinery of the sampling estimators: one tape with constant weights,
// truncated back after each sample.
class SampleScorer {
 public:
  SampleScorer(const Graph& graph, Label y, const GcvaeParams& params)
      : prepared_(prepare(graph, params.config())), y_(y), model_(tape_, params, false), mark_(tape_.size()) {}

  TapeModel& model() { return model_; }
  ad::Tape& tape() { return tape_; }
  const PreparedGraph& prepared() const { return prepared_; }

  double log_likelihood_at(const std::vector<double>& z) {
    const ad::Var zv = tape_.constant(Tensor::row(z));
    const double ll = model_.log_likelihood(prepared_, model_.decode(zv, y_)).scalar();
    tape_.truncate(mark_);
    return ll;
  }

  void set_mark() { mark_ = tape_.size(); }

 private:
  PreparedGraph prepared_;
  Label y_;
  ad::Tape tape_;
  TapeModel model_;
  std::size_t mark_;
};

GaussianParams to_gaussian(const GaussianVars& v) {
  const auto m = v.mean.value().values();
  const auto lv = v.logvar.value().values();
  return GaussianParams({m.begin(), m.end()}, {lv.begin(), lv.end()});
}

std::vector<double> standard_normals(std::mt19937_64& rng, std::normal_distribution<double>& normal, std::size_t d) {
  std::vector<double> eps(d);
  for (double& e : eps) e = normal(rng);
  return eps;
}

}  // namespace

double log_likelihood_deterministic(const Graph& graph, Label y, const GcvaeParams& params) {
  SampleScorer scorer(graph, y, params);
  return scorer.log_likelihood_at(to_gaussian(scorer.model().prior(y)).mean());
}

double log_likelihood_monte_carlo(const Graph& graph, Label y, const GcvaeParams& params, const EstimatorConfig& cfg) {
  if (cfg.samples == 0) throw std::invalid_argument("monte-carlo estimator needs samples >= 1");
  SampleScorer scorer(graph, y, params);
  const GaussianParams p = to_gaussian(scorer.model().prior(y));
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> terms(cfg.samples);
  for (double& t : terms) {
    t = scorer.log_likelihood_at(reparameterize(p, standard_normals(rng, normal, p.dim())));
  }
  return log_mean_exp(terms);
}

double log_likelihood_importance(const Graph& graph, Label y, const GcvaeParams& params, const EstimatorConfig& cfg) {
  if (cfg.samples == 0) throw std::invalid_argument("importance estimator needs samples >= 1");
  SampleScorer scorer(graph, y, params);
  const GaussianParams p = to_gaussian(scorer.model().prior(y));
  const GaussianParams q = to_gaussian(scorer.model().encode(scorer.prepared(), y));
  scorer.set_mark();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> terms(cfg.samples);
  for (double& t : terms) {
    const std::vector<double> z = reparameterize(q, standard_normals(rng, normal, q.dim()));
    const double log_weight = gaussian_log_density(z, p) - gaussian_log_density(z, q);
    t = scorer.log_likelihood_at(z) + log_weight;
  }
  return log_mean_exp(terms);
}

double log_likelihood_celbo(const Graph& graph, Label y, const GcvaeParams& params, const EstimatorConfig& cfg) {
  if (cfg.samples == 0) throw std::invalid_argument("celbo estimator needs samples >= 1");
  SampleScorer scorer(graph, y, params);
  const GaussianParams p = to_gaussian(scorer.model().prior(y));
  const GaussianParams q = to_gaussian(scorer.model().encode(scorer.prepared(), y));
  scorer.set_mark();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double recon = 0.0;
  for (std::size_t s = 0; s < cfg.samples; ++s) {
    recon += scorer.log_likelihood_at(reparameterize(q, standard_normals(rng, normal, q.dim())));
  }
  return recon / static_cast<double>(cfg.samples) - gaussian_kld(q, p);
}

double log_likelihood(const Graph& graph, Label y, const GcvaeParams& params, const EstimatorConfig& cfg) {
  switch (cfg.method) {
    case Estimator::deterministic: return log_likelihood_deterministic(graph, y, params);
    case Estimator::monte_carlo: return log_likelihood_monte_carlo(graph, y, params, cfg);
    case Estimator::importance: return log_likelihood_importance(graph, y, params, cfg);
    case Estimator::celbo: return log_likelihood_celbo(graph, y, params, cfg);
  }
  throw std::invalid_argument("unknown estimator");
}

ClassPriors estimate_class_priors(const Dataset& dataset) {
  if (dataset.empty()) throw std::invalid_argument("cannot estimate class priors from an empty dataset");
  const double m = static_cast<double>(dataset.size());
  return {(static_cast<double>(dataset.count(Label::positive)) + 1.0) / (m + 2.0),
          (static_cast<double>(dataset.count(Label::negative)) + 1.0) / (m + 2.0)};
}

double class_probability(double log_odds) {
  if (!std::isfinite(log_odds)) throw std::invalid_argument("log-odds must be finite");
  return sigmoid(log_odds);
}

LogOddsRecord make_record(std::size_t index, double ll_pos, double ll_neg, const ClassPriors& priors,
                          std::optional<Label> label) {
  LogOddsRecord r;
  r.index = index;
  r.ll_pos = ll_pos;
  r.ll_neg = ll_neg;
  r.log_odds = ll_pos - ll_neg + priors.log_ratio();
  r.pred = r.log_odds > 0.0 ? Label::positive : Label::negative;
  r.p_pos = class_probability(r.log_odds);
  r.label = label;
  return r;
}

LogOddsRecord log_odds(const Graph& graph, const TrainedModel& model, const ClassPriors& priors,
                       const EstimatorConfig& cfg, std::size_t index) {
  cfg.check();
  const GcvaeParams& pos = std::holds_alternative<TwoTowerModel>(model) ? std::get<TwoTowerModel>(model).model_pos
                                                                        : std::get<GcvaeParams>(model);
  const GcvaeParams& neg = std::holds_alternative<TwoTowerModel>(model) ? std::get<TwoTowerModel>(model).model_neg
                                                                        : std::get<GcvaeParams>(model);
  return make_record(index, log_likelihood(graph, Label::positive, pos, cfg),
                     log_likelihood(graph, Label::negative, neg, cfg), priors, graph.label);
}

double rank_auc(const std::vector<double>& scores, const std::vector<Label>& labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("rank_auc: scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Average ranks over ties, then Mann-Whitney U.
  std::vector<double> rank(scores.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }
  double n_pos = 0.0, n_neg = 0.0, rank_sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == Label::positive) {
      n_pos += 1.0;
      rank_sum += rank[i];
    } else {
      n_neg += 1.0;
    }
  }
  if (n_pos == 0.0 || n_neg == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

MetricsReport summarize(std::vector<LogOddsRecord> records) {
  if (records.empty()) throw std::invalid_argument("cannot summarize an empty set of records");
  MetricsReport report;
  std::vector<double> scores;
  std::vector<Label> labels;
  double correct = 0.0, loss = 0.0;
  for (const LogOddsRecord& r : records) {
    if (!r.label) throw std::invalid_argument("record " + std::to_string(r.index) + " has no label");
    if (r.pred == *r.label) correct += 1.0;
    // -ln P(y|A,X) = softplus(-y L), finite even where sigmoid underflows
    loss += softplus(-static_cast<double>(to_int(*r.label)) * r.log_odds);
    scores.push_back(r.log_odds);
    labels.push_back(*r.label);
  }
  const double m = static_cast<double>(records.size());
  report.accuracy = correct / m;
  report.logloss = loss / m;
  report.auc = rank_auc(scores, labels);
  report.records = std::move(records);
  return report;
}

MetricsReport evaluate(const Dataset& dataset, const TrainedModel& model, const ClassPriors& priors,
                       const EstimatorConfig& cfg) {
  if (dataset.empty()) throw std::invalid_argument("cannot evaluate on an empty dataset");
  std::vector<LogOddsRecord> records;
  records.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) records.push_back(log_odds(dataset[i], model, priors, cfg, i));
  return summarize(std::move(records));
}

nlohmann::json to_json(const LogOddsRecord& r) {
  nlohmann::json j = {{"index", r.index},   {"ll_pos", r.ll_pos},       {"ll_neg", r.ll_neg},
                      {"log_odds", r.log_odds}, {"pred", to_int(r.pred)}, {"p_pos", r.p_pos}};
  j["label"] = r.label ? nlohmann::json(to_int(*r.label)) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(const MetricsReport& report) {
  nlohmann::json records = nlohmann::json::array();
  for (const LogOddsRecord& r : report.records) records.push_back(to_json(r));
  auto number = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  return {{"accuracy", report.accuracy}, {"logloss", number(report.logloss)}, {"auc", number(report.auc)},
          {"records", std::move(records)}};
}

}  // namespace gcvae
