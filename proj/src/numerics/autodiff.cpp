#include "gcvae/numerics/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

#include "gcvae/numerics/distributions.hpp"
#include "gcvae/numerics/kernels.hpp"

namespace gcvae::ad {

namespace {

Tensor as_matrix(Tensor t) {
  if (t.rank() == 2) return t;
  const std::size_t r = t.rows();
  const std::size_t c = t.cols();
  std::vector<double> values(t.values().begin(), t.values().end());
  return Tensor({r, c}, std::move(values));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " + b.shape_string());
  }
}

void require_size(const Tensor& a, std::size_t n, const char* op) {
  if (a.size() != n) {
    throw ShapeError(std::string(op) + ": expected " + std::to_string(n) + " values, got " +
                     std::to_string(a.size()));
  }
}

}  // namespace

ParamId ParamSet::add(std::string name, Tensor value) {
  names_.push_back(std::move(name));
  tensors_.push_back(std::move(value));
  return tensors_.size() - 1;
}

std::optional<ParamId> ParamSet::find(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const Tensor& t : tensors_) n += t.size();
  return n;
}

const Tensor& Var::value() const { return tape_->value(index_); }

double Var::scalar() const {
  const Tensor& v = value();
  if (v.size() != 1) throw ShapeError("scalar() on tensor of shape " + v.shape_string());
  return v[0];
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{as_matrix(std::move(value)), {}, nullptr, false, std::nullopt});
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(ParamId id, Tensor value) {
  nodes_.push_back(Node{as_matrix(std::move(value)), {}, nullptr, true, id});
  return Var(this, nodes_.size() - 1);
}

std::vector<Var> Tape::bind(const ParamSet& params) {
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (ParamId id = 0; id < params.size(); ++id) vars.push_back(param(id, params[id]));
  return vars;
}

void Tape::truncate(std::size_t size) {
  if (size < nodes_.size()) nodes_.erase(nodes_.begin() + static_cast<std::ptrdiff_t>(size), nodes_.end());
}

Var Tape::push(Tensor value, std::initializer_list<Var> inputs, Backward backward, const char* op) {
  if (!value.all_finite()) throw NumericError(std::string("non-finite value produced by ") + op);
  bool needs = false;
  for (const Var& v : inputs) needs = needs || nodes_[v.index()].needs_grad;
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(backward) : nullptr, needs, std::nullopt});
  return Var(this, nodes_.size() - 1);
}

Gradients Tape::backprop(Var loss, const ParamSet& params) {
  if (loss.value().size() != 1) {
    throw ShapeError("backprop needs a scalar loss, got shape " + loss.value().shape_string());
  }
  Gradients grads;
  grads.reserve(params.size());
  for (const Tensor& t : params.tensors()) grads.emplace_back(t.shape(), 0.0);

  const std::size_t top = loss.index();
  for (std::size_t i = 0; i <= top; ++i) {
    if (nodes_[i].needs_grad) nodes_[i].grad.assign(nodes_[i].value.size(), 0.0);
  }
  if (!nodes_[top].needs_grad) return grads;
  nodes_[top].grad[0] = 1.0;

  for (std::size_t i = top + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.needs_grad) continue;
    if (node.backward) node.backward(*this, i);
    if (node.param) {
      const ParamId id = *node.param;
      if (id >= grads.size()) throw ShapeError("parameter id " + std::to_string(id) + " is not in the set");
      require_size(grads[id], node.grad.size(), "backprop");
      for (std::size_t k = 0; k < node.grad.size(); ++k) grads[id][k] += node.grad[k];
    }
  }
  return grads;
}

Var matmul(Var a, Var b) {
  Tape& tape = a.tape();
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw ShapeError("matmul: inner extents differ " + av.shape_string() + " x " + bv.shape_string());
  }
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  Tensor out = Tensor::zeros(m, n);
  kernels::active().gemm_nn(av.data(), bv.data(), out.data(), m, k, n);
  const std::size_t ia = a.index(), ib = b.index();
  return tape.push(std::move(out), {a, b}, [ia, ib, m, k, n](Tape& t, std::size_t self) {
    const auto& kt = kernels::active();
    const double* g = t.grad(self).data();
    if (t.needs_grad(ia)) kt.gemm_nt(g, t.value(ib).data(), t.grad(ia).data(), m, n, k);
    if (t.needs_grad(ib)) kt.gemm_tn(t.value(ia).data(), g, t.grad(ib).data(), m, k, n);
  }, "matmul");
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  kernels::active().axpy(1.0, b.value().data(), out.data(), out.size());
  const std::size_t ia = a.index(), ib = b.index();
  return a.tape().push(std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    if (t.needs_grad(ia)) kernels::active().axpy(1.0, g.data(), t.grad(ia).data(), g.size());
    if (t.needs_grad(ib)) kernels::active().axpy(1.0, g.data(), t.grad(ib).data(), g.size());
  }, "add");
}

Var sub(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  kernels::active().axpy(-1.0, b.value().data(), out.data(), out.size());
  const std::size_t ia = a.index(), ib = b.index();
  return a.tape().push(std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    if (t.needs_grad(ia)) kernels::active().axpy(1.0, g.data(), t.grad(ia).data(), g.size());
    if (t.needs_grad(ib)) kernels::active().axpy(-1.0, g.data(), t.grad(ib).data(), g.size());
  }, "sub");
}

Var mul(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  const std::size_t ia = a.index(), ib = b.index();
  return a.tape().push(std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    if (t.needs_grad(ia)) {
      auto& ga = t.grad(ia);
      const Tensor& bv = t.value(ib);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.needs_grad(ib)) {
      auto& gb = t.grad(ib);
      const Tensor& av = t.value(ia);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  }, "mul");
}

Var scale(Var a, double c) {
  Tensor out = a.value();
  for (double& v : out.values()) v *= c;
  const std::size_t ia = a.index();
  return a.tape().push(std::move(out), {a}, [ia, c](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    kernels::active().axpy(c, g.data(), t.grad(ia).data(), g.size());
  }, "scale");
}

Var add_row(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (bv.rows() != 1 || bv.cols() != av.cols()) {
    throw ShapeError("add_row: bias " + bv.shape_string() + " does not fit " + av.shape_string());
  }
  Tensor out = av;
  const std::size_t r = av.rows(), c = av.cols();
  for (std::size_t i = 0; i < r; ++i) kernels::active().axpy(1.0, bv.data(), out.data() + i * c, c);
  const std::size_t ia = a.index(), ib = b.index();
  return a.tape().push(std::move(out), {a, b}, [ia, ib, r, c](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    if (t.needs_grad(ia)) kernels::active().axpy(1.0, g.data(), t.grad(ia).data(), g.size());
    if (t.needs_grad(ib)) {
      for (std::size_t i = 0; i < r; ++i) kernels::active().axpy(1.0, g.data() + i * c, t.grad(ib).data(), c);
    }
  }, "add_row");
}

Var affine(Var input, Var weights, Var bias) { return add_row(matmul(input, weights), bias); }

Var tanh(Var a) {
  Tensor out = a.value();
  for (double& v : out.values()) v = std::tanh(v);
  const std::size_t ia = a.index();
  return a.tape().push(std::move(out), {a}, [ia](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    const Tensor& y = t.value(self);
    auto& ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
  }, "tanh");
}

Var exp(Var a) {
  Tensor out = a.value();
  for (double& v : out.values()) v = std::exp(v);
  const std::size_t ia = a.index();
  return a.tape().push(std::move(out), {a}, [ia](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    const Tensor& y = t.value(self);
    auto& ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
  }, "exp");
}

Var softplus(Var a) {
  Tensor out = a.value();
  for (double& v : out.values()) v = gcvae::softplus(v);
  const std::size_t ia = a.index();
  return a.tape().push(std::move(out), {a}, [ia](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    const Tensor& x = t.value(ia);
    auto& ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * sigmoid(x[i]);
  }, "softplus");
}

Var clamp(Var a, double lo, double hi) {
  Tensor out = a.value();
  for (double& v : out.values()) v = std::clamp(v, lo, hi);
  const std::size_t ia = a.index();
  return a.tape().push(std::move(out), {a}, [ia, lo, hi](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    const Tensor& x = t.value(ia);
    auto& ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (x[i] > lo && x[i] < hi) ga[i] += g[i];
    }
  }, "clamp");
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  const std::size_t ia = a.index();
  return a.tape().push(Tensor::scalar(s), {a}, [ia](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    for (double& v : t.grad(ia)) v += g;
  }, "sum");
}

Var concat_cols(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rows() != bv.rows()) {
    throw ShapeError("concat_cols: row counts differ " + av.shape_string() + " vs " + bv.shape_string());
  }
  const std::size_t r = av.rows(), ca = av.cols(), cb = bv.cols();
  Tensor out = Tensor::zeros(r, ca + cb);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < ca; ++j) out.at(i, j) = av.at(i, j);
    for (std::size_t j = 0; j < cb; ++j) out.at(i, ca + j) = bv.at(i, j);
  }
  const std::size_t ia = a.index(), ib = b.index();
  return a.tape().push(std::move(out), {a, b}, [ia, ib, r, ca, cb](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    const std::size_t w = ca + cb;
    if (t.needs_grad(ia)) {
      auto& ga = t.grad(ia);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < ca; ++j) ga[i * ca + j] += g[i * w + j];
    }
    if (t.needs_grad(ib)) {
      auto& gb = t.grad(ib);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < cb; ++j) gb[i * cb + j] += g[i * w + ca + j];
    }
  }, "concat_cols");
}

Var bernoulli_log_likelihood(Var logits, const Tensor& targets, const Tensor& mask) {
  const Tensor& lv = logits.value();
  require_size(targets, lv.size(), "bernoulli_log_likelihood");
  require_size(mask, lv.size(), "bernoulli_log_likelihood");
  const double value = gcvae::bernoulli_log_likelihood(targets.values(), lv.values(), mask.values());
  const std::size_t il = logits.index();
  return logits.tape().push(Tensor::scalar(value), {logits}, [il, targets, mask](Tape& t, std::size_t self) {
    // d/dl [t ln s(l) + (1-t) ln(1-s(l))] = t - s(l)
    const double g = t.grad(self)[0];
    const Tensor& x = t.value(il);
    auto& gl = t.grad(il);
    for (std::size_t i = 0; i < gl.size(); ++i) {
      if (mask[i] != 0.0) gl[i] += g * (targets[i] - sigmoid(x[i]));
    }
  }, "bernoulli_log_likelihood");
}

Var gaussian_log_likelihood(Var means, const Tensor& targets, const Tensor& mask, double variance) {
  const Tensor& mv = means.value();
  require_size(targets, mv.size(), "gaussian_log_likelihood");
  require_size(mask, mv.size(), "gaussian_log_likelihood");
  const double log_norm = std::log(2.0 * std::numbers::pi * variance);
  double s = 0.0;
  for (std::size_t i = 0; i < mv.size(); ++i) {
    if (mask[i] == 0.0) continue;
    const double r = targets[i] - mv[i];
    s += -0.5 * (log_norm + r * r / variance);
  }
  const std::size_t im = means.index();
  return means.tape().push(Tensor::scalar(s), {means}, [im, targets, mask, variance](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    const Tensor& m = t.value(im);
    auto& gm = t.grad(im);
    for (std::size_t i = 0; i < gm.size(); ++i) {
      if (mask[i] != 0.0) gm[i] += g * (targets[i] - m[i]) / variance;
    }
  }, "gaussian_log_likelihood");
}

Var gaussian_kld(Var q_mean, Var q_logvar, Var p_mean, Var p_logvar) {
  const std::size_t d = q_mean.value().size();
  require_size(q_logvar.value(), d, "gaussian_kld");
  require_size(p_mean.value(), d, "gaussian_kld");
  require_size(p_logvar.value(), d, "gaussian_kld");
  const Tensor& qm = q_mean.value();
  const Tensor& ql = q_logvar.value();
  const Tensor& pm = p_mean.value();
  const Tensor& pl = p_logvar.value();
  double kl = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double dm = qm[i] - pm[i];
    kl += 0.5 * (std::exp(ql[i] - pl[i]) + dm * dm * std::exp(-pl[i]) - 1.0 + pl[i] - ql[i]);
  }
  const std::size_t iqm = q_mean.index(), iql = q_logvar.index(), ipm = p_mean.index(), ipl = p_logvar.index();
  return q_mean.tape().push(
      Tensor::scalar(kl), {q_mean, q_logvar, p_mean, p_logvar},
      [iqm, iql, ipm, ipl, d](Tape& t, std::size_t self) {
        const double g = t.grad(self)[0];
        const Tensor& qm = t.value(iqm);
        const Tensor& ql = t.value(iql);
        const Tensor& pm = t.value(ipm);
        const Tensor& pl = t.value(ipl);
        for (std::size_t i = 0; i < d; ++i) {
          const double dm = qm[i] - pm[i];
          const double ratio = std::exp(ql[i] - pl[i]);
          const double inv_p = std::exp(-pl[i]);
          if (t.needs_grad(iqm)) t.grad(iqm)[i] += g * dm * inv_p;
          if (t.needs_grad(ipm)) t.grad(ipm)[i] -= g * dm * inv_p;
          if (t.needs_grad(iql)) t.grad(iql)[i] += g * 0.5 * (ratio - 1.0);
          if (t.needs_grad(ipl)) t.grad(ipl)[i] += g * 0.5 * (1.0 - ratio - dm * dm * inv_p);
        }
      },
      "gaussian_kld");
}

Var reparameterize(Var mean, Var logvar, const Tensor& noise) {
  require_same_shape(mean.value(), logvar.value(), "reparameterize");
  require_size(noise, mean.value().size(), "reparameterize");
  Tensor out = mean.value();
  const Tensor& lv = logvar.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += std::exp(0.5 * lv[i]) * noise[i];
  const std::size_t im = mean.index(), il = logvar.index();
  return mean.tape().push(std::move(out), {mean, logvar}, [im, il, noise](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    if (t.needs_grad(im)) kernels::active().axpy(1.0, g.data(), t.grad(im).data(), g.size());
    if (t.needs_grad(il)) {
      const Tensor& lv = t.value(il);
      auto& gl = t.grad(il);
      for (std::size_t i = 0; i < g.size(); ++i) gl[i] += g[i] * 0.5 * std::exp(0.5 * lv[i]) * noise[i];
    }
  }, "reparameterize");
}

}  // namespace gcvae::ad
