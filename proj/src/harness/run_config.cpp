#include "gcvae/harness/run_config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <stdexcept>

#include "gcvae/model/serialization.hpp"

namespace gcvae {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, std::string_view section, std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) throw std::invalid_argument(std::string(section) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (std::string_view k : keys) known = known || k == key;
    if (!known) {
      throw std::invalid_argument("unknown key \"" + key + "\"" +
                                  (section.empty() ? std::string() : " in " + std::string(section)));
    }
  }
}

std::string where(std::string_view section, std::string_view key) {
  return section.empty() ? std::string(key) : std::string(section) + "." + std::string(key);
}

void read_count(const json& j, std::string_view section, const char* key, std::size_t& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw std::invalid_argument(where(section, key) + " must be a non-negative integer");
  }
  out = v.get<std::size_t>();
}

void read_real(const json& j, std::string_view section, const char* key, double& out) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_number()) throw std::invalid_argument(where(section, key) + " must be a number");
  out = j.at(key).get<double>();
}

std::string read_string(const json& j, std::string_view section, const char* key) {
  if (!j.at(key).is_string()) throw std::invalid_argument(where(section, key) + " must be a string");
  return j.at(key).get<std::string>();
}

void read_path(const json& j, std::string_view section, const char* key, std::optional<std::filesystem::path>& out) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    out.reset();
    return;
  }
  out = read_string(j, section, key);
}

json path_json(const std::optional<std::filesystem::path>& p) { return p ? json(p->generic_string()) : json(nullptr); }

}  // namespace

Estimator default_estimator(Objective objective) {
  return is_discriminative(objective) ? Estimator::celbo : Estimator::importance;
}

Estimator resolved_estimator(const RunConfig& cfg) { return cfg.inference.value_or(default_estimator(cfg.objective)); }

TrainConfig train_config(const RunConfig& cfg, Objective objective) {
  TrainConfig tc;
  tc.objective = objective;
  tc.model = cfg.model;
  tc.adam.learning_rate = cfg.training.learning_rate;
  tc.epochs = cfg.training.epochs;
  tc.clip_norm = cfg.training.clip_norm;
  tc.patience = cfg.training.patience;
  tc.val_fraction = cfg.training.val_fraction;
  return tc;
}

void RunConfig::check() const {
  if (!(training.learning_rate > 0.0) || !std::isfinite(training.learning_rate)) {
    throw std::invalid_argument("training.learning_rate must be positive");
  }
  if (!(training.clip_norm >= 0.0) || !std::isfinite(training.clip_norm)) {
    throw std::invalid_argument("training.clip_norm must be >= 0 (0 disables clipping)");
  }
  if (training.patience < 1) throw std::invalid_argument("training.patience must be >= 1");
  if (!(training.val_fraction > 0.0 && training.val_fraction < 1.0)) {
    throw std::invalid_argument("training.val_fraction must lie in (0, 1)");
  }
  ModelConfig probe = model;
  probe.n_max = 1;
  probe.check();
  if (resolved_estimator(*this) != Estimator::deterministic && samples < 1) {
    throw std::invalid_argument("inference.samples must be >= 1");
  }
  if (prior_pos && !(*prior_pos > 0.0 && *prior_pos < 1.0)) throw std::invalid_argument("prior_pos must lie in (0, 1)");
  if (scenario) {
    ScenarioConfig s = scenario->scenario;
    s.graphs_per_class = scenario->train_per_class;
    s.check();
    if (data.train || data.test) throw std::invalid_argument("\"scenario\" and \"data\" paths are mutually exclusive");
  }
  if (sweep.replicates < 1) throw std::invalid_argument("sweep.replicates must be >= 1");
  if (sweep.objectives.empty()) throw std::invalid_argument("sweep.objectives must not be empty");
  for (std::size_t m : sweep.sizes) {
    if (m < 2) throw std::invalid_argument("sweep sizes must be >= 2 (one graph per label)");
  }
}

RunConfig run_config_from_json(const json& j) {
  reject_unknown(j, "", {"objective", "seed", "model", "training", "inference", "prior_pos", "scenario", "data",
                         "output", "sweep"});
  RunConfig c;
  try {
    if (j.contains("objective")) c.objective = parse_objective(read_string(j, "", "objective"));
    if (j.contains("seed")) {
      if (!j.at("seed").is_number_unsigned()) throw std::invalid_argument("seed must be a non-negative integer");
      c.seed = j.at("seed").get<std::uint64_t>();
    }
    if (j.contains("model")) {
      const json& m = j.at("model");
      reject_unknown(m, "model", {"latent_dim", "encoder_hidden", "encoder_layers", "prior_hidden", "decoder_hidden",
                                  "feature_variance", "model_features"});
      c.model = model_config_from_json(m, c.model);
    }
    if (j.contains("training")) {
      const json& t = j.at("training");
      reject_unknown(t, "training", {"epochs", "learning_rate", "clip_norm", "patience", "val_fraction"});
      read_count(t, "training", "epochs", c.training.epochs);
      read_real(t, "training", "learning_rate", c.training.learning_rate);
      read_real(t, "training", "clip_norm", c.training.clip_norm);
      read_count(t, "training", "patience", c.training.patience);
      read_real(t, "training", "val_fraction", c.training.val_fraction);
    }
    if (j.contains("inference")) {
      const json& i = j.at("inference");
      reject_unknown(i, "inference", {"method", "samples"});
      if (i.contains("method") && !i.at("method").is_null()) {
        c.inference = parse_estimator(read_string(i, "inference", "method"));
      }
      read_count(i, "inference", "samples", c.samples);
    }
    if (j.contains("prior_pos") && !j.at("prior_pos").is_null()) {
      double p = 0.0;
      read_real(j, "", "prior_pos", p);
      c.prior_pos = p;
    }
    if (j.contains("scenario") && !j.at("scenario").is_null()) {
      json s = j.at("scenario");
      reject_unknown(s, "scenario", {"scenario", "n", "d", "n_max", "p_pos", "p_neg", "mu", "blocks", "p_in", "p_out",
                                     "train_per_class", "test_per_class"});
      ScenarioSource src;
      read_count(s, "scenario", "train_per_class", src.train_per_class);
      read_count(s, "scenario", "test_per_class", src.test_per_class);
      s.erase("train_per_class");
      s.erase("test_per_class");
      src.scenario = scenario_from_json(s);
      c.scenario = src;
    }
    if (j.contains("data")) {
      const json& d = j.at("data");
      reject_unknown(d, "data", {"train", "test", "n_max"});
      read_path(d, "data", "train", c.data.train);
      read_path(d, "data", "test", c.data.test);
      read_count(d, "data", "n_max", c.data.n_max);
    }
    if (j.contains("output")) {
      const json& o = j.at("output");
      reject_unknown(o, "output", {"model", "report", "csv"});
      read_path(o, "output", "model", c.output.model);
      read_path(o, "output", "report", c.output.report);
      read_path(o, "output", "csv", c.output.csv);
    }
    if (j.contains("sweep")) {
      const json& s = j.at("sweep");
      reject_unknown(s, "sweep", {"sizes", "replicates", "objectives", "threads"});
      if (s.contains("sizes")) {
        if (!s.at("sizes").is_array()) throw std::invalid_argument("sweep.sizes must be an array");
        c.sweep.sizes.clear();
        for (const json& v : s.at("sizes")) {
          if (!v.is_number_unsigned()) throw std::invalid_argument("sweep.sizes entries must be non-negative integers");
          c.sweep.sizes.push_back(v.get<std::size_t>());
        }
      }
      read_count(s, "sweep", "replicates", c.sweep.replicates);
      read_count(s, "sweep", "threads", c.sweep.threads);
      if (s.contains("objectives")) {
        if (!s.at("objectives").is_array()) throw std::invalid_argument("sweep.objectives must be an array");
        c.sweep.objectives.clear();
        for (const json& v : s.at("objectives")) {
          if (!v.is_string()) throw std::invalid_argument("sweep.objectives entries must be strings");
          c.sweep.objectives.push_back(parse_objective(v.get<std::string>()));
        }
      }
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(e.what());
  }
  c.check();
  return c;
}

json to_json(const RunConfig& c) {
  json model = to_json(c.model);
  model.erase("n_max");
  model.erase("d");
  json j = {
      {"objective", objective_name(c.objective)},
      {"seed", c.seed},
      {"model", model},
      {"training",
       {{"epochs", c.training.epochs},
        {"learning_rate", c.training.learning_rate},
        {"clip_norm", c.training.clip_norm},
        {"patience", c.training.patience},
        {"val_fraction", c.training.val_fraction}}},
      {"inference", {{"method", estimator_name(resolved_estimator(c))}, {"samples", c.samples}}},
      {"prior_pos", c.prior_pos ? json(*c.prior_pos) : json(nullptr)},
      {"data", {{"train", path_json(c.data.train)}, {"test", path_json(c.data.test)}, {"n_max", c.data.n_max}}},
      {"output",
       {{"model", path_json(c.output.model)}, {"report", path_json(c.output.report)}, {"csv", path_json(c.output.csv)}}},
  };
  if (c.scenario) {
    json s = to_json(c.scenario->scenario);
    s.erase("seed");
    s.erase("graphs_per_class");
    s["train_per_class"] = c.scenario->train_per_class;
    s["test_per_class"] = c.scenario->test_per_class;
    j["scenario"] = s;
  } else {
    j["scenario"] = nullptr;
  }
  json objectives = json::array();
  for (Objective o : c.sweep.objectives) objectives.push_back(objective_name(o));
  j["sweep"] = {{"sizes", c.sweep.sizes}, {"replicates", c.sweep.replicates}, {"objectives", objectives},
                {"threads", c.sweep.threads}};
  return j;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace gcvae
