#pragma once

// Define-by-run reverse-mode differentiation over small dense matrices.
//
// A Tape records every op of one forward pass; backprop() walks it in reverse
// and returns one gradient tensor per bound parameter. Tapes are cheap and
// meant to be thrown away after each step. A tape must stay on one thread.

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gcvae/numerics/tensor.hpp"

namespace gcvae::ad {

using ParamId = std::size_t;

/// Named, ordered collection of trainable tensors. A ParamId is the position
/// of a tensor in insertion order.
class ParamSet {
 public:
  ParamId add(std::string name, Tensor value);

  std::size_t size() const { return tensors_.size(); }
  const std::string& name(ParamId id) const { return names_.at(id); }
  const Tensor& operator[](ParamId id) const { return tensors_.at(id); }
  Tensor& operator[](ParamId id) { return tensors_.at(id); }
  std::optional<ParamId> find(const std::string& name) const;
  std::size_t scalar_count() const;

  const std::vector<Tensor>& tensors() const { return tensors_; }
  const std::vector<std::string>& names() const { return names_; }

  friend bool operator==(const ParamSet&, const ParamSet&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
};

/// Gradients aligned with a ParamSet: grads[id] has the shape of params[id].
using Gradients = std::vector<Tensor>;

class Tape;

/// Handle to a node on a tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t index) : tape_(tape), index_(index) {}

  Tape& tape() const { return *tape_; }
  std::size_t index() const { return index_; }
  const Tensor& value() const;
  double scalar() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  Tape* tape_ = nullptr;
  std::size_t index_ = 0;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t self)>;

  Var constant(Tensor value);
  Var param(ParamId id, Tensor value);
  /// One leaf per parameter, indexed by ParamId.
  std::vector<Var> bind(const ParamSet& params);

  /// Reverse sweep from a 1x1 loss. Parameters never reached get zeros.
  /// Throws ShapeError if the loss is not a scalar.
  Gradients backprop(Var loss, const ParamSet& params);

  std::size_t size() const { return nodes_.size(); }
  /// Drops every node recorded after the first `size` nodes, so one tape can
  /// evaluate many samples over the same bound weights.
  void truncate(std::size_t size);

  // Used by op implementations.
  Var push(Tensor value, std::initializer_list<Var> inputs, Backward backward, const char* op);
  const Tensor& value(std::size_t i) const { return nodes_[i].value; }
  bool needs_grad(std::size_t i) const { return nodes_[i].needs_grad; }
  std::vector<double>& grad(std::size_t i) { return nodes_[i].grad; }

 private:
  struct Node {
    Tensor value;
    std::vector<double> grad;
    Backward backward;
    bool needs_grad = false;
    std::optional<ParamId> param;
  };
  std::vector<Node> nodes_;
};

// Matrix ops. Shapes are rows x cols; row vectors are 1 x n.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
/// a (r x c) plus the row vector b (1 x c) on every row.
Var add_row(Var a, Var b);
/// input * weights + bias.
Var affine(Var input, Var weights, Var bias);
Var tanh(Var a);
Var exp(Var a);
Var softplus(Var a);
/// Elementwise clamp; the gradient is zero where the input is outside (lo, hi).
Var clamp(Var a, double lo, double hi);
Var sum(Var a);
/// [a | b] for equal row counts.
Var concat_cols(Var a, Var b);

// Fused probabilistic ops; all return 1x1.
Var bernoulli_log_likelihood(Var logits, const Tensor& targets, const Tensor& mask);
/// Sum over mask != 0 of N(target; mean, variance) log densities.
Var gaussian_log_likelihood(Var means, const Tensor& targets, const Tensor& mask, double variance);
Var gaussian_kld(Var q_mean, Var q_logvar, Var p_mean, Var p_logvar);
/// mean + exp(logvar / 2) * noise, same shape as mean.
Var reparameterize(Var mean, Var logvar, const Tensor& noise);

}  // namespace gcvae::ad
