#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gcvae/numerics/tensor.hpp"

namespace gcvae {

/// Binary class label, stored as +1 / -1.
enum class Label : int { negative = -1, positive = 1 };

inline int to_int(Label y) { return static_cast<int>(y); }
/// Throws std::invalid_argument unless v is +1 or -1.
Label label_from_int(long long v);
inline Label flip(Label y) { return y == Label::positive ? Label::negative : Label::positive; }

/// Attributed undirected graph padded to n_max node slots.
///
/// The first n slots hold real nodes; mask marks them with 1. Padding slots
/// carry no edges and zero features.
struct Graph {
  std::size_t n = 0;
  Tensor adj;                 // n_max x n_max, entries 0/1
  Tensor features;            // n_max x d
  std::vector<double> mask;   // n_max
  std::optional<Label> label;

  std::size_t n_max() const { return mask.size(); }
  std::size_t d() const { return features.rank() == 2 ? features.cols() : 0; }
  bool has_edge(std::size_t i, std::size_t j) const { return adj.at(i, j) != 0.0; }
  std::size_t edge_count() const;

  friend bool operator==(const Graph&, const Graph&) = default;
};

/// Unpadded graph (n_max = n) from an edge list. Features default to n x d zeros.
Graph make_graph(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                 std::size_t d = 0, std::optional<Label> label = std::nullopt);

enum class ViolationKind {
  shape,
  non_binary,
  asymmetric,
  self_loop,
  edge_to_padding,
  mask_layout,
  padding_feature,
  non_finite_feature,
};

struct Violation {
  ViolationKind kind;
  std::string message;
};

/// Every broken representation invariant; empty means the graph is valid.
std::vector<Violation> validate(const Graph& graph);
std::string_view kind_name(ViolationKind kind);

/// Raised for a graph that fails validate(), naming its dataset index when known.
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::optional<std::size_t> index, std::vector<Violation> violations);
  const std::optional<std::size_t>& index() const { return index_; }
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::optional<std::size_t> index_;
  std::vector<Violation> violations_;
};

/// Embeds the graph in the leading block of an n_max-slot graph.
/// Throws std::invalid_argument if graph.n > n_max.
Graph pad_to(const Graph& graph, std::size_t n_max);

/// Unordered triples of real nodes that are pairwise adjacent.
/// Throws ValidationError on an invalid graph.
std::uint64_t triangle_count(const Graph& graph);

/// D^-1 (A + diag(mask)): row-normalized adjacency with self loops on real
/// nodes; padding rows are zero.
Tensor normalized_adjacency(const Graph& graph);

/// Ordered, validated graphs sharing n_max and feature width d.
class Dataset {
 public:
  Dataset(std::size_t n_max, std::size_t d) : n_max_(n_max), d_(d) {}
  /// Throws ValidationError (with index) if any graph is invalid or has the wrong shape.
  Dataset(std::vector<Graph> graphs, std::size_t n_max, std::size_t d);

  void push_back(Graph graph);

  std::size_t size() const { return graphs_.size(); }
  bool empty() const { return graphs_.empty(); }
  std::size_t n_max() const { return n_max_; }
  std::size_t d() const { return d_; }
  const Graph& operator[](std::size_t i) const { return graphs_.at(i); }
  const std::vector<Graph>& graphs() const { return graphs_; }
  auto begin() const { return graphs_.begin(); }
  auto end() const { return graphs_.end(); }

  std::size_t count(Label y) const;
  bool all_labeled() const;
  /// Members with label y, in order.
  Dataset filter(Label y) const;
  Dataset subset(const std::vector<std::size_t>& indices) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::size_t n_max_ = 0;
  std::size_t d_ = 0;
  std::vector<Graph> graphs_;
};

struct SplitFractions {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct DatasetSplit {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// Label-stratified, seeded partition. Throws std::invalid_argument if the
/// fractions are not positive summing to 1, if a graph is unlabeled, or if a
/// part would be empty for a label that occurs in the data.
DatasetSplit split(const Dataset& dataset, SplitFractions fractions, std::uint64_t seed);

/// Two-way stratified split: {train, held_out} with held_out ~ fraction of each label.
std::pair<Dataset, Dataset> holdout(const Dataset& dataset, double fraction, std::uint64_t seed);

/// Label-stratified random subset of size m (ceil(m/2) positives when m is odd).
/// Throws std::invalid_argument when a label has too few graphs.
Dataset stratified_sample(const Dataset& dataset, std::size_t m, std::uint64_t seed);

}  // namespace gcvae
