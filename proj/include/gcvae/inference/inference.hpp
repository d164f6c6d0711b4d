#pragma once

// Class-conditional graph likelihoods and the log-odds classifier built on them:
//
//   L(A,X) = ln p(A,X|y=+1) - ln p(A,X|y=-1) + ln P(y=+1)/P(y=-1)
//   P(y=+1|A,X) = sigmoid(L),   predict +1 iff L > 0 (ties go to -1).
//
// Sampling estimators average in log space: ln((1/S) sum_s exp(term_s)).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gcvae/graph/graph.hpp"
#include "gcvae/model/gcvae.hpp"
#include "gcvae/model/training.hpp"

namespace gcvae {

enum class Estimator {
  deterministic,  // decoder at z* = E[z|y] under the prior
  monte_carlo,    // z ~ p(z|y)
  importance,     // z ~ q(z|A,X,y), weighted by p(z|y)/q(z|A,X,y)
  celbo,          // the c-ELBO surrogate, averaged over S posterior samples
};

std::string_view estimator_name(Estimator e);
/// Accepts det|mc|is|celbo and the long names.
Estimator parse_estimator(std::string_view name);

struct EstimatorConfig {
  Estimator method = Estimator::importance;
  std::size_t samples = 64;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument if a sampling method has samples == 0.
  void check() const;
};

struct ClassPriors {
  double p_pos = 0.5;
  double p_neg = 0.5;

  /// Throws std::invalid_argument unless both lie in (0,1) and sum to 1.
  static ClassPriors from_positive(double p_pos);
  double log_ratio() const;
};

struct LogOddsRecord {
  std::size_t index = 0;
  double ll_pos = 0.0;
  double ll_neg = 0.0;
  double log_odds = 0.0;
  Label pred = Label::negative;
  double p_pos = 0.5;
  std::optional<Label> label;
};

struct MetricsReport {
  double accuracy = 0.0;
  double logloss = 0.0;
  /// NaN when only one class is present.
  double auc = 0.0;
  std::vector<LogOddsRecord> records;
};

double log_likelihood_deterministic(const Graph& graph, Label y, const GcvaeParams& params);
/// Throws std::invalid_argument when cfg.samples == 0.
double log_likelihood_monte_carlo(const Graph& graph, Label y, const GcvaeParams& params, const EstimatorConfig& cfg);
double log_likelihood_importance(const Graph& graph, Label y, const GcvaeParams& params, const EstimatorConfig& cfg);
double log_likelihood_celbo(const Graph& graph, Label y, const GcvaeParams& params, const EstimatorConfig& cfg);
/// Dispatches on cfg.method.
double log_likelihood(const Graph& graph, Label y, const GcvaeParams& params, const EstimatorConfig& cfg);

/// Laplace-smoothed label frequencies (n+ + 1)/(m + 2), (n- + 1)/(m + 2).
/// Throws std::invalid_argument on an empty dataset.
ClassPriors estimate_class_priors(const Dataset& dataset);

/// sigmoid(L); throws std::invalid_argument on a non-finite L.
double class_probability(double log_odds);

/// Record from two class-conditional log-likelihoods.
LogOddsRecord make_record(std::size_t index, double ll_pos, double ll_neg, const ClassPriors& priors,
                          std::optional<Label> label = std::nullopt);

/// Both label branches use the same estimator seed. For a two-tower model the
/// +1 term comes from model_pos and the -1 term from model_neg.
LogOddsRecord log_odds(const Graph& graph, const TrainedModel& model, const ClassPriors& priors,
                       const EstimatorConfig& cfg, std::size_t index = 0);

/// Accuracy, mean log-loss -1/m sum ln P(y_j|A_j,X_j) and rank AUC over labeled records.
/// Throws std::invalid_argument if empty or a record is unlabeled.
MetricsReport summarize(std::vector<LogOddsRecord> records);
MetricsReport evaluate(const Dataset& dataset, const TrainedModel& model, const ClassPriors& priors,
                       const EstimatorConfig& cfg);

/// Mann-Whitney AUC of scores against +1/-1 labels, ties counted 1/2.
double rank_auc(const std::vector<double>& scores, const std::vector<Label>& labels);

nlohmann::json to_json(const LogOddsRecord& record);
nlohmann::json to_json(const MetricsReport& report);

}  // namespace gcvae
