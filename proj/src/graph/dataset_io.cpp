#include "gcvae/graph/dataset_io.hpp"

#include <fstream>
#include <sstream>

namespace gcvae {

using nlohmann::json;

ParseError::ParseError(std::optional<std::size_t> line, const std::string& what)
    : std::runtime_error(line ? "line " + std::to_string(*line) + ": " + what : what), line_(line) {}

namespace {

std::size_t as_count(const json& j, const char* field) {
  if (!j.is_number_integer() || j.get<long long>() < 0) {
    throw ParseError(std::nullopt, std::string("field \"") + field + "\" must be a non-negative integer");
  }
  return j.get<std::size_t>();
}

}  // namespace

Graph graph_from_json(const json& j) {
  if (!j.is_object()) throw ParseError(std::nullopt, "graph record must be a JSON object");
  if (!j.contains("n")) throw ParseError(std::nullopt, "missing field \"n\"");
  const std::size_t n = as_count(j.at("n"), "n");

  Graph g;
  g.n = n;
  g.mask.assign(n, 1.0);
  g.adj = Tensor::zeros(n, n);

  const json& adj = j.contains("adj") ? j.at("adj") : json::array();
  if (!adj.is_array() || adj.size() != n) {
    throw ParseError(std::nullopt, "\"adj\" must be an array of " + std::to_string(n) + " rows");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const json& row = adj[i];
    if (!row.is_array() || row.size() != n) {
      throw ParseError(std::nullopt, "\"adj\" row " + std::to_string(i) + " must have " + std::to_string(n) + " entries");
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (!row[k].is_number()) throw ParseError(std::nullopt, "\"adj\" entries must be numbers");
      g.adj.at(i, k) = row[k].get<double>();
    }
  }

  std::size_t d = 0;
  if (j.contains("x")) {
    const json& x = j.at("x");
    if (!x.is_array() || x.size() != n) {
      throw ParseError(std::nullopt, "\"x\" must be an array of " + std::to_string(n) + " rows");
    }
    if (n > 0) {
      if (!x[0].is_array()) throw ParseError(std::nullopt, "\"x\" rows must be arrays");
      d = x[0].size();
    }
    g.features = Tensor::zeros(n, d);
    for (std::size_t i = 0; i < n; ++i) {
      if (!x[i].is_array() || x[i].size() != d) {
        throw ParseError(std::nullopt, "\"x\" row " + std::to_string(i) + " must have " + std::to_string(d) + " entries");
      }
      for (std::size_t k = 0; k < d; ++k) {
        if (!x[i][k].is_number()) throw ParseError(std::nullopt, "\"x\" entries must be numbers");
        g.features.at(i, k) = x[i][k].get<double>();
      }
    }
  } else {
    g.features = Tensor::zeros(n, 0);
  }

  if (j.contains("y") && !j.at("y").is_null()) {
    const json& y = j.at("y");
    if (!y.is_number_integer()) throw ParseError(std::nullopt, "\"y\" must be 1 or -1");
    try {
      g.label = label_from_int(y.get<long long>());
    } catch (const std::invalid_argument& e) {
      throw ParseError(std::nullopt, e.what());
    }
  }
  return g;
}

json graph_to_json(const Graph& g) {
  json adj = json::array();
  json x = json::array();
  for (std::size_t i = 0; i < g.n; ++i) {
    json row = json::array();
    for (std::size_t k = 0; k < g.n; ++k) row.push_back(static_cast<int>(g.adj.at(i, k)));
    adj.push_back(std::move(row));
    json xr = json::array();
    for (std::size_t k = 0; k < g.d(); ++k) xr.push_back(g.features.at(i, k));
    x.push_back(std::move(xr));
  }
  json j = {{"n", g.n}, {"adj", std::move(adj)}, {"x", std::move(x)}};
  if (g.label) j["y"] = to_int(*g.label);
  return j;
}

Dataset read_dataset(std::istream& in, const LoadOptions& options) {
  std::vector<Graph> raw;
  std::vector<std::size_t> lines;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
    }
    try {
      raw.push_back(graph_from_json(j));
    } catch (const ParseError& e) {
      throw ParseError(line_no, e.what());
    }
    lines.push_back(line_no);
  }

  std::size_t n_max = options.n_max;
  std::optional<std::size_t> d = options.d;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (options.n_max == 0) n_max = std::max(n_max, raw[i].n);
    if (raw[i].n == 0) continue;
    if (!d) d = raw[i].d();
    if (raw[i].d() != *d) {
      throw ParseError(lines[i], "graph " + std::to_string(i) + " has feature width " + std::to_string(raw[i].d()) +
                                     ", expected " + std::to_string(*d));
    }
  }

  Dataset ds(n_max, d.value_or(0));
  for (std::size_t i = 0; i < raw.size(); ++i) {
    Graph& g = raw[i];
    if (g.n == 0) g.features = Tensor::zeros(0, ds.d());
    if (g.n > n_max) {
      throw ParseError(lines[i], "graph " + std::to_string(i) + " has " + std::to_string(g.n) +
                                     " nodes, more than n_max=" + std::to_string(n_max));
    }
    ds.push_back(pad_to(g, n_max));
  }
  return ds;
}

void write_dataset(std::ostream& out, const Dataset& dataset) {
  for (const Graph& g : dataset) out << graph_to_json(g).dump() << '\n';
}

Dataset load_dataset(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file " + path.string());
  return read_dataset(in, options);
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset file " + path.string());
  write_dataset(out, dataset);
  if (!out) throw std::runtime_error("error writing dataset file " + path.string());
}

std::string dataset_to_string(const Dataset& dataset) {
  std::ostringstream out;
  write_dataset(out, dataset);
  return out.str();
}

}  // namespace gcvae
