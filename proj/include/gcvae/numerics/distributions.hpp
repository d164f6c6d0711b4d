#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gcvae {

inline constexpr double kLogvarMin = -10.0;
inline constexpr double kLogvarMax = 10.0;

/// Diagonal Gaussian over the latent vector. The constructor clamps every
/// log-variance into [kLogvarMin, kLogvarMax].
class GaussianParams {
 public:
  GaussianParams() = default;
  GaussianParams(std::vector<double> mean, std::vector<double> logvar);

  static GaussianParams standard(std::size_t dim);

  std::size_t dim() const { return mean_.size(); }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& logvar() const { return logvar_; }

  friend bool operator==(const GaussianParams&, const GaussianParams&) = default;

 private:
  std::vector<double> mean_;
  std::vector<double> logvar_;
};

double clamp_logvar(double lv);

// ln(1 + e^x) without overflow or cancellation.
double softplus(double x);
double log_sigmoid(double x);
double sigmoid(double x);

/// ln sum_i exp(v_i), shifted by the maximum. Throws std::invalid_argument on
/// an empty input.
double logsumexp(std::span<const double> values);

/// ln((1/n) sum_i exp(v_i)). Exact (returns v) when every entry equals v.
double log_mean_exp(std::span<const double> values);

/// KL(q || p) for diagonal Gaussians, closed form.
double gaussian_kld(const GaussianParams& q, const GaussianParams& p);

double gaussian_log_density(std::span<const double> x, const GaussianParams& params);

/// Sum over positions with mask != 0 of t ln s(l) + (1 - t) ln(1 - s(l)),
/// evaluated as -softplus(-l) / -softplus(l). Targets must be 0 or 1.
double bernoulli_log_likelihood(std::span<const double> targets, std::span<const double> logits,
                                std::span<const double> mask);

/// mean + exp(logvar / 2) * noise.
std::vector<double> reparameterize(const GaussianParams& params, std::span<const double> noise);

}  // namespace gcvae
