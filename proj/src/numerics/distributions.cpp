#include "gcvae/numerics/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "gcvae/numerics/tensor.hpp"

namespace gcvae {

namespace {

void require_same_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": dimension mismatch (" + std::to_string(a) + " vs " +
                     std::to_string(b) + ")");
  }
}

}  // namespace

GaussianParams::GaussianParams(std::vector<double> mean, std::vector<double> logvar)
    : mean_(std::move(mean)), logvar_(std::move(logvar)) {
  require_same_dim(mean_.size(), logvar_.size(), "GaussianParams");
  for (double& lv : logvar_) lv = clamp_logvar(lv);
}

GaussianParams GaussianParams::standard(std::size_t dim) {
  return GaussianParams(std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0));
}

double clamp_logvar(double lv) { return std::clamp(lv, kLogvarMin, kLogvarMax); }

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double log_sigmoid(double x) { return -softplus(-x); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logsumexp(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("logsumexp of an empty sequence");
  const double m = *std::max_element(values.begin(), values.end());
  if (std::isinf(m)) return m;
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

double log_mean_exp(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("log_mean_exp of an empty sequence");
  const double m = *std::max_element(values.begin(), values.end());
  if (std::isinf(m)) return m;
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s / static_cast<double>(values.size()));
}

double gaussian_kld(const GaussianParams& q, const GaussianParams& p) {
  require_same_dim(q.dim(), p.dim(), "gaussian_kld");
  double kl = 0.0;
  for (std::size_t i = 0; i < q.dim(); ++i) {
    const double lq = q.logvar()[i];
    const double lp = p.logvar()[i];
    const double dm = q.mean()[i] - p.mean()[i];
    kl += 0.5 * (std::exp(lq - lp) + dm * dm * std::exp(-lp) - 1.0 + lp - lq);
  }
  return kl;
}

double gaussian_log_density(std::span<const double> x, const GaussianParams& params) {
  require_same_dim(x.size(), params.dim(), "gaussian_log_density");
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = x[i] - params.mean()[i];
    const double lv = params.logvar()[i];
    s += -0.5 * (log_2pi + lv + r * r * std::exp(-lv));
  }
  return s;
}

double bernoulli_log_likelihood(std::span<const double> targets, std::span<const double> logits,
                                std::span<const double> mask) {
  require_same_dim(targets.size(), logits.size(), "bernoulli_log_likelihood");
  require_same_dim(targets.size(), mask.size(), "bernoulli_log_likelihood");
  double s = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double t = targets[i];
    if (t != 0.0 && t != 1.0) {
      throw std::invalid_argument("bernoulli target at position " + std::to_string(i) +
                                  " is not 0 or 1");
    }
    if (mask[i] == 0.0) continue;
    s -= t == 1.0 ? softplus(-logits[i]) : softplus(logits[i]);
  }
  return s;
}

std::vector<double> reparameterize(const GaussianParams& params, std::span<const double> noise) {
  require_same_dim(noise.size(), params.dim(), "reparameterize");
  std::vector<double> z(noise.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = params.mean()[i] + std::exp(0.5 * params.logvar()[i]) * noise[i];
  }
  return z;
}

}  // namespace gcvae
