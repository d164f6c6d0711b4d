#pragma once

// JSON Lines dataset files: one graph per line,
//   {"n": 3, "adj": [[0,1,1],[1,0,1],[1,1,0]], "x": [[0.5],[1.0],[-2.0]], "y": 1}
// stored unpadded. "y" is optional. Padding to the run's n_max happens on load.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "gcvae/graph/graph.hpp"

namespace gcvae {

/// Malformed input, with the 1-based line number when it came from a file.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::optional<std::size_t> line, const std::string& what);
  const std::optional<std::size_t>& line() const { return line_; }

 private:
  std::optional<std::size_t> line_;
};

struct LoadOptions {
  /// Pad target; 0 pads to the largest graph in the file.
  std::size_t n_max = 0;
  /// Expected feature width; required when every graph is empty.
  std::optional<std::size_t> d;
};

/// Parses one unpadded graph object. Throws ParseError (no line) on bad structure.
Graph graph_from_json(const nlohmann::json& j);
/// The unpadded (leading n x n block) form of a graph.
nlohmann::json graph_to_json(const Graph& graph);

Dataset read_dataset(std::istream& in, const LoadOptions& options = {});
void write_dataset(std::ostream& out, const Dataset& dataset);

/// Throws std::runtime_error naming the path if it cannot be opened; ParseError
/// naming the line on malformed content; ValidationError naming the graph index.
Dataset load_dataset(const std::filesystem::path& path, const LoadOptions& options = {});
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

/// Dataset serialized to its JSONL text.
std::string dataset_to_string(const Dataset& dataset);

}  // namespace gcvae
