#include "gcvae/datagen/scenarios.hpp"

#include <cmath>

#include "gcvae/model/training.hpp"

namespace gcvae {

std::string_view scenario_name(Scenario s) {
  switch (s) {
    case Scenario::er_split: return "er-split";
    case Scenario::triangle_confound: return "triangle-confound";
    case Scenario::sbm: return "sbm";
  }
  return "unknown";
}

Scenario parse_scenario(std::string_view name) {
  for (Scenario s : {Scenario::er_split, Scenario::triangle_confound, Scenario::sbm}) {
    if (scenario_name(s) == name) return s;
  }
  throw std::invalid_argument("unknown scenario \"" + std::string(name) +
                              "\" (expected er-split, triangle-confound or sbm)");
}

namespace {

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

std::size_t node_count(const ScenarioConfig& c) {
  return c.scenario == Scenario::triangle_confound ? kTriangleChainNodes : c.n;
}

std::mt19937_64 graph_stream(const ScenarioConfig& c, Label y, std::size_t index) {
  std::uint64_t s = mix_seed(c.seed, static_cast<std::uint64_t>(c.scenario));
  s = mix_seed(s, y == Label::positive ? 1 : 2);
  return std::mt19937_64(mix_seed(s, index));
}

void fill_features(Graph& g, double mean, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(mean, 1.0);
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::size_t k = 0; k < g.d(); ++k) g.features.at(i, k) = normal(rng);
}

template <typename Make>
Dataset assemble(const ScenarioConfig& c, Make make) {
  c.check();
  const std::size_t n_max = c.n_max == 0 ? node_count(c) : c.n_max;
  Dataset ds(n_max, c.d);
  for (std::size_t i = 0; i < c.graphs_per_class; ++i) {
    for (Label y : {Label::positive, Label::negative}) {
      std::mt19937_64 rng = graph_stream(c, y, i);
      Graph g = make(y, rng);
      g.label = y;
      ds.push_back(pad_to(g, n_max));
    }
  }
  return ds;
}

}  // namespace

void ScenarioConfig::check() const {
  if (graphs_per_class < 1) throw std::invalid_argument("graphs_per_class must be >= 1");
  for (double p : {p_pos, p_neg, p_in, p_out}) {
    if (!is_probability(p)) throw std::invalid_argument("edge probabilities must lie in [0, 1]");
  }
  if (!std::isfinite(mu)) throw std::invalid_argument("mu must be finite");
  const std::size_t nodes = node_count(*this);
  if (nodes < 1) throw std::invalid_argument("n must be >= 1");
  if (n_max != 0 && nodes > n_max) {
    throw std::invalid_argument("scenario needs " + std::to_string(nodes) + " nodes but n_max=" + std::to_string(n_max));
  }
  switch (scenario) {
    case Scenario::er_split:
      if (p_pos == p_neg) throw std::invalid_argument("er-split needs p_pos != p_neg");
      break;
    case Scenario::triangle_confound:
      if (d < 1) throw std::invalid_argument("triangle-confound needs d >= 1");
      break;
    case Scenario::sbm:
      if (blocks < 1 || blocks > n) throw std::invalid_argument("sbm needs 1 <= blocks <= n");
      break;
  }
}

Graph erdos_renyi(std::size_t n, double p, std::mt19937_64& rng, std::size_t d) {
  if (!is_probability(p)) throw std::invalid_argument("edge probability must lie in [0, 1]");
  Graph g = make_graph(n, {}, d);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (u(rng) < p) {
        g.adj.at(i, j) = 1.0;
        g.adj.at(j, i) = 1.0;
      }
    }
  return g;
}

Graph triangle_chain(std::size_t d) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t t = 0; t < kTriangleChainTriangles; ++t) {
    const std::size_t a = 3 * t;
    edges.insert(edges.end(), {{a, a + 1}, {a, a + 2}, {a + 1, a + 2}});
    if (t + 1 < kTriangleChainTriangles) edges.emplace_back(a, a + 3);
  }
  return make_graph(kTriangleChainNodes, edges, d);
}

std::vector<std::size_t> block_sizes(std::size_t n, std::size_t blocks) {
  if (blocks == 0) throw std::invalid_argument("blocks must be >= 1");
  std::vector<std::size_t> sizes(blocks, n / blocks);
  for (std::size_t b = 0; b < n % blocks; ++b) ++sizes[b];
  return sizes;
}

double sbm_matched_density(std::size_t n, std::size_t blocks, double p_in, double p_out) {
  if (n < 2) return 0.0;
  const auto sizes = block_sizes(n, blocks);
  double within = 0.0;
  for (std::size_t s : sizes) within += static_cast<double>(s) * static_cast<double>(s - (s > 0)) / 2.0;
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  return (p_in * within + p_out * (pairs - within)) / pairs;
}

Dataset gen_er_split(const ScenarioConfig& config) {
  if (config.scenario != Scenario::er_split) throw std::invalid_argument("gen_er_split needs scenario er-split");
  return assemble(config, [&config](Label y, std::mt19937_64& rng) {
    Graph g = erdos_renyi(config.n, y == Label::positive ? config.p_pos : config.p_neg, rng, config.d);
    fill_features(g, 0.0, rng);
    return g;
  });
}

Dataset gen_triangle_confound(const ScenarioConfig& config) {
  if (config.scenario != Scenario::triangle_confound) {
    throw std::invalid_argument("gen_triangle_confound needs scenario triangle-confound");
  }
  return assemble(config, [&config](Label y, std::mt19937_64& rng) {
    Graph g = triangle_chain(config.d);
    fill_features(g, y == Label::positive ? config.mu : -config.mu, rng);
    return g;
  });
}

Dataset gen_sbm(const ScenarioConfig& config) {
  if (config.scenario != Scenario::sbm) throw std::invalid_argument("gen_sbm needs scenario sbm");
  const double matched = sbm_matched_density(config.n, config.blocks, config.p_in, config.p_out);
  std::vector<std::size_t> block_of;
  const auto sizes = block_sizes(config.n, config.blocks);
  for (std::size_t b = 0; b < sizes.size(); ++b) block_of.insert(block_of.end(), sizes[b], b);
  return assemble(config, [&](Label y, std::mt19937_64& rng) {
    Graph g;
    if (y == Label::positive) {
      g = make_graph(config.n, {}, config.d);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (std::size_t i = 0; i < config.n; ++i)
        for (std::size_t j = i + 1; j < config.n; ++j) {
          const double p = block_of[i] == block_of[j] ? config.p_in : config.p_out;
          if (u(rng) < p) {
            g.adj.at(i, j) = 1.0;
            g.adj.at(j, i) = 1.0;
          }
        }
    } else {
      g = erdos_renyi(config.n, matched, rng, config.d);
    }
    fill_features(g, 0.0, rng);
    return g;
  });
}

Dataset generate(const ScenarioConfig& config) {
  switch (config.scenario) {
    case Scenario::er_split: return gen_er_split(config);
    case Scenario::triangle_confound: return gen_triangle_confound(config);
    case Scenario::sbm: return gen_sbm(config);
  }
  throw std::invalid_argument("unknown scenario");
}

nlohmann::json to_json(const ScenarioConfig& c) {
  return {{"scenario", scenario_name(c.scenario)},
          {"graphs_per_class", c.graphs_per_class},
          {"n", c.n},
          {"d", c.d},
          {"n_max", c.n_max},
          {"p_pos", c.p_pos},
          {"p_neg", c.p_neg},
          {"mu", c.mu},
          {"blocks", c.blocks},
          {"p_in", c.p_in},
          {"p_out", c.p_out},
          {"seed", c.seed}};
}

ScenarioConfig scenario_from_json(const nlohmann::json& j, ScenarioConfig c) {
  if (!j.is_object()) throw std::invalid_argument("scenario config must be a JSON object");
  try {
    if (j.contains("scenario")) c.scenario = parse_scenario(j.at("scenario").get<std::string>());
    if (j.contains("graphs_per_class")) c.graphs_per_class = j.at("graphs_per_class").get<std::size_t>();
    if (j.contains("n")) c.n = j.at("n").get<std::size_t>();
    if (j.contains("d")) c.d = j.at("d").get<std::size_t>();
    if (j.contains("n_max")) c.n_max = j.at("n_max").get<std::size_t>();
    if (j.contains("p_pos")) c.p_pos = j.at("p_pos").get<double>();
    if (j.contains("p_neg")) c.p_neg = j.at("p_neg").get<double>();
    if (j.contains("mu")) c.mu = j.at("mu").get<double>();
    if (j.contains("blocks")) c.blocks = j.at("blocks").get<std::size_t>();
    if (j.contains("p_in")) c.p_in = j.at("p_in").get<double>();
    if (j.contains("p_out")) c.p_out = j.at("p_out").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad scenario field: ") + e.what());
  }
  return c;
}

}  // namespace gcvae
