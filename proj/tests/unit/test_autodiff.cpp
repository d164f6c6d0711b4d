#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "gcvae/numerics/autodiff.hpp"
#include "oracles.hpp"

using namespace gcvae;
namespace ad = gcvae::ad;

namespace {

using Builder = std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;

double evaluate(const ad::ParamSet& ps, const Builder& build) {
  ad::Tape tape;
  return build(tape, tape.bind(ps)).scalar();
}

// Central differences over every entry, against backprop. Returns the largest relative error.
double max_gradient_error(ad::ParamSet ps, const Builder& build, double h = 1e-4) {
  ad::Tape tape;
  const ad::Gradients g = tape.backprop(build(tape, tape.bind(ps)), ps);
  double worst = 0.0;
  for (std::size_t p = 0; p < ps.size(); ++p) {
    for (std::size_t i = 0; i < ps[p].size(); ++i) {
      const double keep = ps[p][i];
      ps[p][i] = keep + h;
      const double up = evaluate(ps, build);
      ps[p][i] = keep - h;
      const double down = evaluate(ps, build);
      ps[p][i] = keep;
      worst = std::max(worst, testutil::relative_error(g[p][i], (up - down) / (2.0 * h)));
    }
  }
  return worst;
}

Tensor random_tensor(std::mt19937_64& rng, std::size_t r, std::size_t c, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Tensor t = Tensor::zeros(r, c);
  for (double& v : t.values()) v = normal(rng);
  return t;
}

}  // namespace

TEST(Autodiff, AffineExamples) {
  ad::Tape tape;
  auto out = ad::affine(tape.constant(Tensor::row({1, 0})), tape.constant(Tensor::identity(2)),
                        tape.constant(Tensor::row({0, 0})));
  EXPECT_EQ(out.value(), Tensor::row({1, 0}));
  auto seven = ad::affine(tape.constant(Tensor::row({2})), tape.constant(Tensor::matrix(1, 1, {3})),
                          tape.constant(Tensor::row({1})));
  EXPECT_EQ(seven.scalar(), 7.0);
  auto bias = ad::affine(tape.constant(Tensor::zeros(1, 3)), tape.constant(Tensor::matrix(3, 2, {1, 2, 3, 4, 5, 6})),
                         tape.constant(Tensor::row({-1.5, 2.5})));
  EXPECT_EQ(bias.value(), Tensor::row({-1.5, 2.5}));
  EXPECT_THROW(ad::affine(tape.constant(Tensor::row({1, 2, 3})), tape.constant(Tensor::identity(2)),
                          tape.constant(Tensor::row({0, 0}))),
               ShapeError);
}

TEST(Autodiff, BackpropExamples) {
  ad::ParamSet ps;
  ps.add("w", Tensor::scalar(3.0));
  ps.add("unused", Tensor::row({1.0, 2.0}));
  ad::Tape tape;
  auto v = tape.bind(ps);
  const ad::Gradients g = tape.backprop(ad::mul(v[0], v[0]), ps);
  EXPECT_EQ(g[0][0], 6.0);
  EXPECT_EQ(g[1], Tensor::zeros(1, 2));

  ad::Tape other;
  auto u = other.bind(ps);
  const ad::Gradients z = other.backprop(other.constant(Tensor::scalar(5.0)), ps);
  EXPECT_EQ(z[0][0], 0.0);
  EXPECT_THROW(other.backprop(u[1], ps), ShapeError);
}

TEST(Autodiff, NonFiniteValuesAreErrors) {
  ad::Tape tape;
  EXPECT_THROW(ad::exp(tape.constant(Tensor::scalar(1000.0))), NumericError);
  auto big = tape.constant(Tensor::scalar(1e300));
  EXPECT_THROW(ad::mul(big, big), NumericError);
}

TEST(Autodiff, TwoLayerNetworkMatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  ad::ParamSet ps;
  ps.add("w1", random_tensor(rng, 4, 6));
  ps.add("b1", random_tensor(rng, 1, 6));
  ps.add("w2", random_tensor(rng, 6, 3));
  ps.add("b2", random_tensor(rng, 1, 3));
  const Tensor x = random_tensor(rng, 5, 4);
  const Builder net = [&](ad::Tape& t, const std::vector<ad::Var>& v) {
    auto h = ad::tanh(ad::affine(t.constant(x), v[0], v[1]));
    return ad::sum(ad::softplus(ad::affine(h, v[2], v[3])));
  };
  EXPECT_LT(max_gradient_error(ps, net), 1e-3);
}

TEST(Autodiff, EveryOpMatchesFiniteDifferences) {
  std::mt19937_64 rng(8);
  ad::ParamSet ps;
  ps.add("a", random_tensor(rng, 3, 4));
  ps.add("b", random_tensor(rng, 3, 4));
  ps.add("r", random_tensor(rng, 1, 4));
  ps.add("m", random_tensor(rng, 4, 2));
  std::vector<std::pair<const char*, Builder>> cases = {
      {"matmul", [](ad::Tape&, auto& v) { return ad::sum(ad::tanh(ad::matmul(v[0], v[3]))); }},
      {"add", [](ad::Tape&, auto& v) { return ad::sum(ad::tanh(ad::add(v[0], v[1]))); }},
      {"sub", [](ad::Tape&, auto& v) { return ad::sum(ad::tanh(ad::sub(v[0], v[1]))); }},
      {"mul", [](ad::Tape&, auto& v) { return ad::sum(ad::mul(v[0], v[1])); }},
      {"scale", [](ad::Tape&, auto& v) { return ad::sum(ad::tanh(ad::scale(v[0], -1.7))); }},
      {"add_row", [](ad::Tape&, auto& v) { return ad::sum(ad::tanh(ad::add_row(v[0], v[2]))); }},
      {"exp", [](ad::Tape&, auto& v) { return ad::sum(ad::exp(ad::scale(v[0], 0.5))); }},
      {"softplus", [](ad::Tape&, auto& v) { return ad::sum(ad::softplus(v[1])); }},
      {"clamp", [](ad::Tape&, auto& v) { return ad::sum(ad::tanh(ad::clamp(v[0], -10.0, 10.0))); }},
      {"concat_cols", [](ad::Tape&, auto& v) { return ad::sum(ad::tanh(ad::concat_cols(v[0], v[1]))); }},
  };
  for (const auto& [name, build] : cases) EXPECT_LT(max_gradient_error(ps, build), 1e-3) << name;
}

TEST(Autodiff, FusedOpsMatchFiniteDifferences) {
  std::mt19937_64 rng(9);
  ad::ParamSet ps;
  ps.add("logits", random_tensor(rng, 1, 6, 2.0));
  ps.add("means", random_tensor(rng, 1, 6));
  ps.add("qm", random_tensor(rng, 1, 3));
  ps.add("qlv", random_tensor(rng, 1, 3, 0.5));
  ps.add("pm", random_tensor(rng, 1, 3));
  ps.add("plv", random_tensor(rng, 1, 3, 0.5));
  const Tensor targets = Tensor::row({1, 0, 0, 1, 1, 0});
  const Tensor mask = Tensor::row({1, 1, 0, 1, 1, 1});
  const Tensor feat = random_tensor(rng, 1, 6);
  const Tensor noise = random_tensor(rng, 1, 3);
  std::vector<std::pair<const char*, Builder>> cases = {
      {"bernoulli", [&](ad::Tape&, auto& v) { return ad::bernoulli_log_likelihood(v[0], targets, mask); }},
      {"gaussian", [&](ad::Tape&, auto& v) { return ad::gaussian_log_likelihood(v[1], feat, mask, 0.7); }},
      {"kld", [&](ad::Tape&, auto& v) { return ad::gaussian_kld(v[2], v[3], v[4], v[5]); }},
      {"reparameterize",
       [&](ad::Tape&, auto& v) { return ad::sum(ad::tanh(ad::reparameterize(v[2], v[3], noise))); }},
  };
  for (const auto& [name, build] : cases) EXPECT_LT(max_gradient_error(ps, build), 1e-3) << name;
}

TEST(Autodiff, FusedOpsAgreeWithValueLevelFunctions) {
  std::mt19937_64 rng(10);
  const Tensor logits = random_tensor(rng, 1, 5, 3.0);
  const Tensor targets = Tensor::row({1, 0, 1, 1, 0});
  const Tensor mask = Tensor::row({1, 0, 1, 1, 1});
  ad::Tape tape;
  EXPECT_NEAR(ad::bernoulli_log_likelihood(tape.constant(logits), targets, mask).scalar(),
              bernoulli_log_likelihood(targets.values(), logits.values(), mask.values()), 1e-12);
  const Tensor qm = random_tensor(rng, 1, 2), qlv = random_tensor(rng, 1, 2), pm = random_tensor(rng, 1, 2),
               plv = random_tensor(rng, 1, 2);
  const GaussianParams q({qm[0], qm[1]}, {qlv[0], qlv[1]}), p({pm[0], pm[1]}, {plv[0], plv[1]});
  EXPECT_NEAR(ad::gaussian_kld(tape.constant(qm), tape.constant(qlv), tape.constant(pm), tape.constant(plv)).scalar(),
              gaussian_kld(q, p), 1e-12);
}

TEST(Autodiff, TruncateDiscardsLaterNodes) {
  ad::Tape tape;
  auto a = tape.constant(Tensor::scalar(2.0));
  const std::size_t mark = tape.size();
  ad::exp(a);
  ad::exp(a);
  EXPECT_GT(tape.size(), mark);
  tape.truncate(mark);
  EXPECT_EQ(tape.size(), mark);
  EXPECT_EQ(a.scalar(), 2.0);
}
