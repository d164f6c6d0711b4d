#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gcvae/inference/inference.hpp"
#include "oracles.hpp"

using namespace gcvae;

namespace {

Tensor& tensor(GcvaeParams& p, const std::string& name) { return p.weights()[p.weights().find(name).value()]; }

// Posterior equal to the prior for every graph and label: the encoder and the
// prior both reduce to their biases, which are made identical.
GcvaeParams posterior_equals_prior(GcvaeParams p) {
  for (const char* name : {"enc.mean.w", "enc.logvar.w", "prior.hidden.w", "prior.hidden.b"})
    for (double& v : tensor(p, name).values()) v = 0.0;
  tensor(p, "prior.mean.b") = tensor(p, "enc.mean.b");
  tensor(p, "prior.logvar.b") = tensor(p, "enc.logvar.b");
  return p;
}

// Decoder that reads only the label one-hot.
GcvaeParams z_blind_decoder(GcvaeParams p) {
  Tensor& w = tensor(p, "dec.hidden1.w");
  for (std::size_t i = 0; i < p.config().latent_dim; ++i)
    for (std::size_t j = 0; j < w.cols(); ++j) w.at(i, j) = 0.0;
  return p;
}

// Every network ignores the label one-hot.
GcvaeParams label_blind(GcvaeParams p) {
  const ModelConfig& c = p.config();
  for (std::size_t k = 0; k < 2; ++k) {
    for (const char* name : {"enc.mean.w", "enc.logvar.w"}) {
      Tensor& w = tensor(p, name);
      for (std::size_t j = 0; j < w.cols(); ++j) w.at(c.encoder_hidden + k, j) = 0.0;
    }
    Tensor& d = tensor(p, "dec.hidden1.w");
    for (std::size_t j = 0; j < d.cols(); ++j) d.at(c.latent_dim + k, j) = 0.0;
    Tensor& pr = tensor(p, "prior.hidden.w");
    for (std::size_t j = 0; j < pr.cols(); ++j) pr.at(k, j) = 0.0;
  }
  return p;
}

EstimatorConfig est(Estimator m, std::size_t s, std::uint64_t seed) {
  EstimatorConfig c;
  c.method = m;
  c.samples = s;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(Estimators, NamesParse) {
  EXPECT_EQ(parse_estimator("is"), Estimator::importance);
  EXPECT_EQ(parse_estimator("monte-carlo"), Estimator::monte_carlo);
  EXPECT_EQ(parse_estimator(estimator_name(Estimator::deterministic)), Estimator::deterministic);
  EXPECT_THROW(parse_estimator("vi"), std::invalid_argument);
}

TEST(Estimators, DeterministicMatchesOracleAtPriorMean) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    const GcvaeParams p = testutil::random_params(testutil::small_config(5, 2, 2), 10 + trial);
    const Graph g = testutil::random_graph(rng, 3 + trial % 3, 5, 2, 0.5);
    for (Label y : {Label::positive, Label::negative}) {
      EXPECT_NEAR(log_likelihood_deterministic(g, y, p), oracle::log_likelihood(p, g, oracle::prior(p, y).mean, y),
                  1e-10);
    }
  }
}

TEST(Estimators, ExactWhenDecoderIgnoresLatent) {
  std::mt19937_64 rng(2);
  const GcvaeParams p =
      z_blind_decoder(posterior_equals_prior(testutil::random_params(testutil::small_config(5, 1, 3), 20)));
  const Graph g = testutil::random_graph(rng, 4, 5, 1, 0.5);
  for (Label y : {Label::positive, Label::negative}) {
    const double exact = oracle::log_likelihood(p, g, {0.0, 0.0, 0.0}, y);
    for (Estimator m : {Estimator::deterministic, Estimator::monte_carlo, Estimator::importance, Estimator::celbo})
      EXPECT_NEAR(log_likelihood(g, y, p, est(m, 17, 3)), exact, 1e-10) << estimator_name(m);
  }
}

TEST(Estimators, ImportanceEqualsMonteCarloWhenPosteriorIsPrior) {
  std::mt19937_64 rng(3);
  const GcvaeParams p = posterior_equals_prior(testutil::random_params(testutil::small_config(5, 2, 2), 30));
  for (int trial = 0; trial < 5; ++trial) {
    const Graph g = testutil::random_graph(rng, 5, 5, 2, 0.4);
    for (Label y : {Label::positive, Label::negative}) {
      const double is = log_likelihood_importance(g, y, p, est(Estimator::importance, 50, trial));
      const double mc = log_likelihood_monte_carlo(g, y, p, est(Estimator::monte_carlo, 50, trial));
      EXPECT_EQ(is, mc);
    }
  }
}

TEST(Estimators, SeededAndRejectZeroSamples) {
  std::mt19937_64 rng(4);
  const GcvaeParams p = testutil::random_params(testutil::small_config(4, 1, 2), 40);
  const Graph g = testutil::random_graph(rng, 4, 4, 1, 0.5);
  for (Estimator m : {Estimator::monte_carlo, Estimator::importance, Estimator::celbo}) {
    EXPECT_EQ(log_likelihood(g, Label::positive, p, est(m, 20, 9)), log_likelihood(g, Label::positive, p, est(m, 20, 9)));
    EXPECT_NE(log_likelihood(g, Label::positive, p, est(m, 20, 9)),
              log_likelihood(g, Label::positive, p, est(m, 20, 10)));
    EXPECT_THROW(log_likelihood(g, Label::positive, p, est(m, 0, 9)), std::invalid_argument);
  }
  EXPECT_NO_THROW(log_likelihood(g, Label::positive, p, est(Estimator::deterministic, 0, 9)));
}

TEST(Estimators, CelboSurrogateBelowImportanceEstimateOnAverage) {
  std::mt19937_64 rng(5);
  const GcvaeParams p = testutil::random_params(testutil::small_config(4, 1, 1), 50);
  const Graph g = testutil::random_graph(rng, 4, 4, 1, 0.5);
  const double exact = oracle::exact_log_marginal(p, g, Label::positive);
  EXPECT_LE(log_likelihood_celbo(g, Label::positive, p, est(Estimator::celbo, 4000, 1)), exact + 0.05);
  EXPECT_NEAR(log_likelihood_importance(g, Label::positive, p, est(Estimator::importance, 4000, 1)), exact, 0.05);
}

// A random encoder is far from the posterior and gives heavy-tailed weights, so
// the spread is measured on a briefly fitted model.
TEST(Estimators, ImportanceSpreadShrinksWithSamples) {
  std::mt19937_64 rng(6);
  Dataset train(4, 1);
  for (int i = 0; i < 20; ++i)
    train.push_back(testutil::random_graph(rng, 4, 4, 1, i % 2 ? 0.7 : 0.2, i % 2 ? Label::positive : Label::negative));
  TrainConfig tc;
  tc.objective = Objective::celbo;
  tc.model = testutil::small_config(0, 0, 1);
  tc.epochs = 150;
  tc.adam.learning_rate = 5e-3;
  const GcvaeParams p = std::get<GcvaeParams>(fit(train, tc, 61).model);
  const Graph& g = train[1];
  auto spread = [&](std::size_t s) {
    std::vector<double> v;
    for (std::uint64_t seed = 0; seed < 30; ++seed)
      v.push_back(log_likelihood_importance(g, Label::negative, p, est(Estimator::importance, s, 1000 + seed)));
    double mean = 0.0, sq = 0.0;
    for (double x : v) mean += x / v.size();
    for (double x : v) sq += (x - mean) * (x - mean);
    return std::sqrt(sq / (v.size() - 1));
  };
  EXPECT_GE(spread(10) / spread(1000), 3.0);
}

TEST(Priors, LaplaceSmoothedFrequencies) {
  std::mt19937_64 rng(7);
  Dataset ds(4, 0);
  for (int i = 0; i < 100; ++i) ds.push_back(testutil::random_graph(rng, 4, 4, 0, 0.5, i < 60 ? Label::positive : Label::negative));
  const ClassPriors pr = estimate_class_priors(ds);
  EXPECT_DOUBLE_EQ(pr.p_pos, 61.0 / 102.0);
  EXPECT_DOUBLE_EQ(pr.p_neg, 41.0 / 102.0);
  Dataset pos(4, 0);
  for (int i = 0; i < 8; ++i) pos.push_back(testutil::random_graph(rng, 4, 4, 0, 0.5, Label::positive));
  EXPECT_DOUBLE_EQ(estimate_class_priors(pos).p_pos, 0.9);
  EXPECT_DOUBLE_EQ(estimate_class_priors(pos).p_neg, 0.1);
  EXPECT_THROW(estimate_class_priors(Dataset(4, 0)), std::invalid_argument);
  EXPECT_THROW(ClassPriors::from_positive(1.0), std::invalid_argument);
  EXPECT_THROW(ClassPriors::from_positive(0.0), std::invalid_argument);
}

TEST(Records, Examples) {
  const LogOddsRecord tie = make_record(0, -3.25, -3.25, {});
  EXPECT_EQ(tie.log_odds, 0.0);
  EXPECT_EQ(tie.pred, Label::negative);
  EXPECT_EQ(tie.p_pos, 0.5);
  const LogOddsRecord r = make_record(1, -10.0, -11.0, ClassPriors::from_positive(0.75));
  EXPECT_NEAR(r.log_odds, 1.0 + std::log(3.0), 1e-12);
  EXPECT_EQ(r.pred, Label::positive);
  EXPECT_NEAR(class_probability(std::log(3.0)), 0.75, 1e-15);
  EXPECT_NEAR(class_probability(-50.0), 1.9287498479639178e-22, 1e-34);
  EXPECT_THROW(class_probability(std::nan("")), std::invalid_argument);
}

TEST(Records, CoherentOverRandomInputs) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal(-50.0, 40.0);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int i = 0; i < 1000; ++i) {
    const ClassPriors pr = ClassPriors::from_positive(u(rng));
    const LogOddsRecord r = make_record(i, normal(rng), normal(rng), pr);
    EXPECT_EQ(r.pred == Label::positive, r.log_odds > 0.0);
    EXPECT_GE(r.p_pos, 0.0);
    EXPECT_LE(r.p_pos, 1.0);
    EXPECT_NEAR(r.p_pos, 1.0 / (1.0 + std::exp(-r.log_odds)), 1e-12);
    if (r.pred == Label::positive) EXPECT_GT(r.p_pos, 0.5);
    else EXPECT_LE(r.p_pos, 0.5);
    EXPECT_NEAR(r.log_odds, r.ll_pos - r.ll_neg + std::log(pr.p_pos / pr.p_neg), 1e-9);
  }
}

TEST(LogOdds, UsesEachTowerAndSharedSeed) {
  std::mt19937_64 rng(9);
  const ModelConfig c = testutil::small_config(5, 1, 2);
  const GcvaeParams a = label_blind(testutil::random_params(c, 70)), b = label_blind(testutil::random_params(c, 71));
  const Graph g = testutil::random_graph(rng, 5, 5, 1, 0.5, Label::positive);
  const EstimatorConfig cfg = est(Estimator::importance, 30, 5);
  const LogOddsRecord ab = log_odds(g, TwoTowerModel{a, b}, {}, cfg);
  const LogOddsRecord ba = log_odds(g, TwoTowerModel{b, a}, {}, cfg);
  EXPECT_EQ(ab.ll_pos, log_likelihood(g, Label::positive, a, cfg));
  EXPECT_EQ(ab.ll_neg, log_likelihood(g, Label::negative, b, cfg));
  EXPECT_NEAR(ba.log_odds, -ab.log_odds, 1e-12);
  const LogOddsRecord single = log_odds(g, a, {}, cfg);
  EXPECT_NEAR(single.log_odds, 0.0, 1e-12);
  EXPECT_EQ(single.label, Label::positive);
}

TEST(Metrics, Examples) {
  std::vector<LogOddsRecord> perfect = {make_record(0, 0, -2, {}, Label::positive), make_record(1, -2, 0, {}, Label::negative),
                                        make_record(2, 0, -5, {}, Label::positive)};
  const MetricsReport m = summarize(perfect);
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_EQ(m.auc, 1.0);
  EXPECT_NEAR(m.logloss, (2 * std::log1p(std::exp(-2.0)) + std::log1p(std::exp(-5.0))) / 3.0, 1e-12);
  const MetricsReport flat = summarize({make_record(0, 1, 1, {}, Label::positive), make_record(1, 1, 1, {}, Label::negative)});
  EXPECT_NEAR(flat.logloss, std::log(2.0), 1e-15);
  EXPECT_EQ(flat.auc, 0.5);
  EXPECT_EQ(flat.accuracy, 0.5);
  EXPECT_TRUE(std::isnan(summarize({make_record(0, 1, 0, {}, Label::positive)}).auc));
  EXPECT_THROW(summarize({}), std::invalid_argument);
  EXPECT_THROW(summarize({make_record(0, 1, 0, {})}), std::invalid_argument);
}

TEST(Metrics, RankAucMatchesPairCounting) {
  EXPECT_DOUBLE_EQ(rank_auc({0.1, 0.4, 0.35, 0.8}, {Label::negative, Label::negative, Label::positive, Label::positive}),
                   0.75);
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<int> score(0, 5);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s;
    std::vector<Label> y;
    for (int i = 0; i < 20; ++i) {
      s.push_back(score(rng));
      y.push_back(coin(rng) ? Label::positive : Label::negative);
    }
    double wins = 0.0, pairs = 0.0;
    for (int i = 0; i < 20; ++i)
      for (int j = 0; j < 20; ++j)
        if (y[i] == Label::positive && y[j] == Label::negative) {
          pairs += 1.0;
          wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
        }
    if (pairs == 0.0) continue;
    EXPECT_NEAR(rank_auc(s, y), wins / pairs, 1e-12);
  }
}

TEST(Metrics, JsonFieldNames) {
  const MetricsReport m = summarize({make_record(0, 0, -2, {}, Label::positive), make_record(1, -2, 0, {}, Label::negative)});
  const nlohmann::json j = to_json(m);
  for (const char* k : {"accuracy", "logloss", "auc", "records"}) EXPECT_TRUE(j.contains(k)) << k;
  const nlohmann::json& r = j.at("records").at(0);
  for (const char* k : {"index", "ll_pos", "ll_neg", "log_odds", "pred", "p_pos", "label"}) EXPECT_TRUE(r.contains(k)) << k;
  EXPECT_EQ(r.at("pred"), 1);
  EXPECT_TRUE(to_json(make_record(0, 0, 0, {})).at("label").is_null());
}
