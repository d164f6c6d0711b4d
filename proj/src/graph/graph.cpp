#include "gcvae/graph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace gcvae {

Label label_from_int(long long v) {
  if (v == 1) return Label::positive;
  if (v == -1) return Label::negative;
  throw std::invalid_argument("label must be 1 or -1, got " + std::to_string(v));
}

std::size_t Graph::edge_count() const {
  std::size_t e = 0;
  for (std::size_t i = 0; i < n_max(); ++i)
    for (std::size_t j = i + 1; j < n_max(); ++j) e += has_edge(i, j) ? 1 : 0;
  return e;
}

Graph make_graph(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges, std::size_t d,
                 std::optional<Label> label) {
  Graph g;
  g.n = n;
  g.adj = Tensor::zeros(n, n);
  g.features = Tensor::zeros(n, d);
  g.mask.assign(n, 1.0);
  g.label = label;
  for (auto [i, j] : edges) {
    if (i >= n || j >= n) throw std::invalid_argument("edge endpoint out of range");
    g.adj.at(i, j) = 1.0;
    g.adj.at(j, i) = 1.0;
  }
  return g;
}

std::string_view kind_name(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::shape: return "shape";
    case ViolationKind::non_binary: return "non-binary adjacency";
    case ViolationKind::asymmetric: return "asymmetry";
    case ViolationKind::self_loop: return "self-loop";
    case ViolationKind::edge_to_padding: return "edge to padding slot";
    case ViolationKind::mask_layout: return "mask layout";
    case ViolationKind::padding_feature: return "nonzero padding feature";
    case ViolationKind::non_finite_feature: return "non-finite feature";
  }
  return "unknown";
}

std::vector<Violation> validate(const Graph& g) {
  std::vector<Violation> out;
  auto report = [&out](ViolationKind k, std::string msg) { out.push_back({k, std::move(msg)}); };
  const std::size_t n_max = g.mask.size();
  if (g.adj.rank() != 2 || g.adj.rows() != n_max || g.adj.cols() != n_max) {
    report(ViolationKind::shape, "adjacency shape " + g.adj.shape_string() + " does not match " +
                                     std::to_string(n_max) + " mask slots");
    return out;
  }
  if (g.features.rank() != 2 || g.features.rows() != n_max) {
    report(ViolationKind::shape, "feature shape " + g.features.shape_string() + " does not match " +
                                     std::to_string(n_max) + " mask slots");
    return out;
  }

  std::size_t ones = 0;
  bool prefix = true;
  for (std::size_t i = 0; i < n_max; ++i) {
    const double m = g.mask[i];
    if (m != 0.0 && m != 1.0) {
      report(ViolationKind::mask_layout, "mask[" + std::to_string(i) + "] is not 0 or 1");
      continue;
    }
    if (m == 1.0) {
      if (i != ones) prefix = false;
      ++ones;
    }
  }
  if (ones != g.n || !prefix) {
    report(ViolationKind::mask_layout, "mask must have exactly n=" + std::to_string(g.n) +
                                           " leading ones, found " + std::to_string(ones) +
                                           (prefix ? "" : " (not leading)"));
  }

  for (std::size_t i = 0; i < n_max; ++i) {
    for (std::size_t j = 0; j < n_max; ++j) {
      const double a = g.adj.at(i, j);
      const std::string where = "adj[" + std::to_string(i) + "][" + std::to_string(j) + "]";
      if (a != 0.0 && a != 1.0) {
        report(ViolationKind::non_binary, where + " is not 0 or 1");
        continue;
      }
      if (i == j && a != 0.0) report(ViolationKind::self_loop, where + " is a self-loop");
      if (j > i && a != g.adj.at(j, i)) report(ViolationKind::asymmetric, where + " != adj[" + std::to_string(j) + "][" + std::to_string(i) + "]");
      if (a != 0.0 && (g.mask[i] == 0.0 || g.mask[j] == 0.0)) {
        report(ViolationKind::edge_to_padding, where + " touches a masked-out node");
      }
    }
  }

  const std::size_t d = g.features.cols();
  for (std::size_t i = 0; i < n_max; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      const double x = g.features.at(i, k);
      if (!std::isfinite(x)) {
        report(ViolationKind::non_finite_feature, "x[" + std::to_string(i) + "][" + std::to_string(k) + "] is not finite");
      } else if (g.mask[i] == 0.0 && x != 0.0) {
        report(ViolationKind::padding_feature, "x[" + std::to_string(i) + "][" + std::to_string(k) + "] is nonzero on a masked-out node");
      }
    }
  }
  return out;
}

namespace {

std::string describe(const std::optional<std::size_t>& index, const std::vector<Violation>& v) {
  std::string s = index ? "graph " + std::to_string(*index) + " is invalid" : std::string("invalid graph");
  for (std::size_t i = 0; i < v.size() && i < 5; ++i) s += (i ? "; " : ": ") + v[i].message;
  if (v.size() > 5) s += "; ... (" + std::to_string(v.size()) + " violations)";
  return s;
}

}  // namespace

ValidationError::ValidationError(std::optional<std::size_t> index, std::vector<Violation> violations)
    : std::invalid_argument(describe(index, violations)), index_(index), violations_(std::move(violations)) {}

Graph pad_to(const Graph& g, std::size_t n_max) {
  if (g.n > n_max) {
    throw std::invalid_argument("graph has " + std::to_string(g.n) + " nodes, more than n_max=" + std::to_string(n_max));
  }
  const std::size_t d = g.d();
  Graph out;
  out.n = g.n;
  out.label = g.label;
  out.adj = Tensor::zeros(n_max, n_max);
  out.features = Tensor::zeros(n_max, d);
  out.mask.assign(n_max, 0.0);
  for (std::size_t i = 0; i < g.n; ++i) {
    out.mask[i] = 1.0;
    for (std::size_t j = 0; j < g.n; ++j) out.adj.at(i, j) = g.adj.at(i, j);
    for (std::size_t k = 0; k < d; ++k) out.features.at(i, k) = g.features.at(i, k);
  }
  return out;
}

std::uint64_t triangle_count(const Graph& g) {
  if (auto v = validate(g); !v.empty()) throw ValidationError(std::nullopt, std::move(v));
  std::uint64_t count = 0;
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::size_t j = i + 1; j < g.n; ++j) {
      if (!g.has_edge(i, j)) continue;
      for (std::size_t k = j + 1; k < g.n; ++k) {
        if (g.has_edge(i, k) && g.has_edge(j, k)) ++count;
      }
    }
  return count;
}

Tensor normalized_adjacency(const Graph& g) {
  const std::size_t n_max = g.n_max();
  Tensor a = Tensor::zeros(n_max, n_max);
  for (std::size_t i = 0; i < n_max; ++i) {
    if (g.mask[i] == 0.0) continue;
    double deg = 1.0;
    for (std::size_t j = 0; j < n_max; ++j) deg += g.adj.at(i, j);
    a.at(i, i) = 1.0 / deg;
    for (std::size_t j = 0; j < n_max; ++j) {
      if (g.adj.at(i, j) != 0.0) a.at(i, j) = 1.0 / deg;
    }
  }
  return a;
}

Dataset::Dataset(std::vector<Graph> graphs, std::size_t n_max, std::size_t d) : n_max_(n_max), d_(d) {
  graphs_.reserve(graphs.size());
  for (Graph& g : graphs) push_back(std::move(g));
}

void Dataset::push_back(Graph graph) {
  const std::size_t index = graphs_.size();
  std::vector<Violation> v = validate(graph);
  if (v.empty() && (graph.n_max() != n_max_ || graph.d() != d_)) {
    v.push_back({ViolationKind::shape, "graph is " + std::to_string(graph.n_max()) + " slots x " +
                                           std::to_string(graph.d()) + " features, dataset expects " +
                                           std::to_string(n_max_) + " x " + std::to_string(d_)});
  }
  if (!v.empty()) throw ValidationError(index, std::move(v));
  graphs_.push_back(std::move(graph));
}

std::size_t Dataset::count(Label y) const {
  return static_cast<std::size_t>(
      std::count_if(graphs_.begin(), graphs_.end(), [y](const Graph& g) { return g.label == y; }));
}

bool Dataset::all_labeled() const {
  return std::all_of(graphs_.begin(), graphs_.end(), [](const Graph& g) { return g.label.has_value(); });
}

Dataset Dataset::filter(Label y) const {
  Dataset out(n_max_, d_);
  for (const Graph& g : graphs_) {
    if (g.label == y) out.graphs_.push_back(g);
  }
  return out;
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  Dataset out(n_max_, d_);
  out.graphs_.reserve(indices.size());
  for (std::size_t i : indices) out.graphs_.push_back(graphs_.at(i));
  return out;
}

namespace {

struct ByLabel {
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
};

ByLabel shuffled_indices(const Dataset& ds, std::uint64_t seed) {
  ByLabel out;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!ds[i].label) throw std::invalid_argument("graph " + std::to_string(i) + " has no label");
    (*ds[i].label == Label::positive ? out.pos : out.neg).push_back(i);
  }
  std::mt19937_64 rng(seed);
  std::shuffle(out.pos.begin(), out.pos.end(), rng);
  std::shuffle(out.neg.begin(), out.neg.end(), rng);
  return out;
}

std::size_t rounded(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

}  // namespace

DatasetSplit split(const Dataset& ds, SplitFractions f, std::uint64_t seed) {
  if (!(f.train > 0.0 && f.val > 0.0 && f.test > 0.0) || std::abs(f.train + f.val + f.test - 1.0) > 1e-9) {
    throw std::invalid_argument("split fractions must be positive and sum to 1");
  }
  const ByLabel idx = shuffled_indices(ds, seed);
  std::vector<std::size_t> train, val, test;
  for (const auto* group : {&idx.pos, &idx.neg}) {
    const std::size_t n = group->size();
    if (n == 0) continue;
    const std::size_t n_val = rounded(f.val, n);
    const std::size_t n_test = rounded(f.test, n);
    if (n_val == 0 || n_test == 0 || n_val + n_test >= n) {
      throw std::invalid_argument("split of " + std::to_string(n) + " graphs of one label leaves a part empty");
    }
    val.insert(val.end(), group->begin(), group->begin() + n_val);
    test.insert(test.end(), group->begin() + n_val, group->begin() + n_val + n_test);
    train.insert(train.end(), group->begin() + n_val + n_test, group->end());
  }
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());
  std::sort(test.begin(), test.end());
  return {ds.subset(train), ds.subset(val), ds.subset(test)};
}

std::pair<Dataset, Dataset> holdout(const Dataset& ds, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("holdout fraction must be in (0, 1)");
  const ByLabel idx = shuffled_indices(ds, seed);
  std::vector<std::size_t> keep, held;
  for (const auto* group : {&idx.pos, &idx.neg}) {
    const std::size_t n = group->size();
    if (n == 0) continue;
    const std::size_t n_held = rounded(fraction, n);
    if (n_held == 0 || n_held >= n) {
      throw std::invalid_argument("holdout of " + std::to_string(n) + " graphs of one label leaves a part empty");
    }
    held.insert(held.end(), group->begin(), group->begin() + n_held);
    keep.insert(keep.end(), group->begin() + n_held, group->end());
  }
  std::sort(keep.begin(), keep.end());
  std::sort(held.begin(), held.end());
  return {ds.subset(keep), ds.subset(held)};
}

Dataset stratified_sample(const Dataset& ds, std::size_t m, std::uint64_t seed) {
  const ByLabel idx = shuffled_indices(ds, seed);
  const std::size_t want_pos = (m + 1) / 2;
  const std::size_t want_neg = m / 2;
  if (want_pos > idx.pos.size() || want_neg > idx.neg.size()) {
    throw std::invalid_argument("cannot sample m=" + std::to_string(m) + " from a pool with " +
                                std::to_string(idx.pos.size()) + " positive and " +
                                std::to_string(idx.neg.size()) + " negative graphs");
  }
  std::vector<std::size_t> picked(idx.pos.begin(), idx.pos.begin() + want_pos);
  picked.insert(picked.end(), idx.neg.begin(), idx.neg.begin() + want_neg);
  std::sort(picked.begin(), picked.end());
  return ds.subset(picked);
}

}  // namespace gcvae
