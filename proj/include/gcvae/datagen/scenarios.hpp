#pragma once

// Seeded synthetic benchmarks. Graph i of class y draws from its own RNG stream
// mix(seed, scenario, y, i), so changing graphs_per_class leaves earlier
// graphs untouched. Output order interleaves the classes: +1, -1, +1, -1, ...

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>

#include <json.hpp>

#include "gcvae/graph/graph.hpp"

namespace gcvae {

enum class Scenario {
  er_split,           // +1 ~ ER(n, p_pos), -1 ~ ER(n, p_neg); N(0, I) features
  triangle_confound,  // fixed 10-triangle chain for both classes; features N(+-mu, I)
  sbm,                // +1 ~ assortative block model, -1 ~ ER at the same expected density
};

std::string_view scenario_name(Scenario s);
Scenario parse_scenario(std::string_view name);

struct ScenarioConfig {
  Scenario scenario = Scenario::er_split;
  std::size_t graphs_per_class = 50;
  /// Node count (triangle_confound always uses its 30-node gadget).
  std::size_t n = 12;
  std::size_t d = 2;
  /// Pad target; 0 means n.
  std::size_t n_max = 0;
  double p_pos = 0.6;
  double p_neg = 0.2;
  double mu = 0.5;
  std::size_t blocks = 2;
  double p_in = 0.8;
  double p_out = 0.2;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on an invalid configuration.
  void check() const;
};

inline constexpr std::size_t kTriangleChainNodes = 30;
inline constexpr std::size_t kTriangleChainTriangles = 10;

/// Each unordered pair present independently with probability p; d zero-valued
/// feature columns. Throws std::invalid_argument unless 0 <= p <= 1.
Graph erdos_renyi(std::size_t n, double p, std::mt19937_64& rng, std::size_t d = 0);

/// 10 disjoint triangles; node 0 of triangle t is linked to node 0 of triangle t+1.
Graph triangle_chain(std::size_t d = 0);

/// Block sizes for n nodes in `blocks` near-equal blocks (larger blocks first).
std::vector<std::size_t> block_sizes(std::size_t n, std::size_t blocks);
/// Expected edge density of the block model, the ER rate that matches it.
double sbm_matched_density(std::size_t n, std::size_t blocks, double p_in, double p_out);

Dataset gen_er_split(const ScenarioConfig& config);
Dataset gen_triangle_confound(const ScenarioConfig& config);
Dataset gen_sbm(const ScenarioConfig& config);
/// Dispatches on config.scenario.
Dataset generate(const ScenarioConfig& config);

nlohmann::json to_json(const ScenarioConfig& config);
/// Missing fields keep the values in `defaults`.
ScenarioConfig scenario_from_json(const nlohmann::json& j, ScenarioConfig defaults = {});

}  // namespace gcvae
