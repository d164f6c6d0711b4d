#include "gcvae/harness/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#include "gcvae/graph/dataset_io.hpp"
#include "gcvae/model/serialization.hpp"

namespace gcvae {

using nlohmann::json;

StageError::StageError(std::string stage, int exit_code, const std::string& detail)
    : std::runtime_error(stage + ": " + detail), stage_(std::move(stage)), exit_code_(exit_code) {}

namespace {

constexpr int kBadInput = 2;
constexpr int kInternal = 1;

// Runs f, attributing any failure to `stage`. Bad input (std::invalid_argument
// and its subclasses) maps to exit code 2, everything else to 1.
template <typename F>
auto in_stage(const std::string& stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const DivergenceError& e) {
    throw StageError(stage, kInternal, e.what());
  } catch (const std::invalid_argument& e) {
    throw StageError(stage, kBadInput, e.what());
  } catch (const ParseError& e) {
    throw StageError(stage, kBadInput, e.what());
  } catch (const std::exception& e) {
    throw StageError(stage, kInternal, e.what());
  }
}

Dataset load_file(const std::filesystem::path& path, const LoadOptions& options) {
  if (!std::filesystem::exists(path)) throw std::invalid_argument("dataset file not found: " + path.string());
  return load_dataset(path, options);
}

ClassPriors priors_for(const RunConfig& cfg, const Dataset& train) {
  return cfg.prior_pos ? ClassPriors::from_positive(*cfg.prior_pos) : estimate_class_priors(train);
}

EstimatorConfig estimator_for(const RunConfig& cfg, std::uint64_t seed) {
  EstimatorConfig ec;
  ec.method = resolved_estimator(cfg);
  ec.samples = cfg.samples;
  ec.seed = seed;
  return ec;
}

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

SweepRow run_cell(const RunConfig& cfg, const RunData& data, Objective objective, std::size_t m,
                  std::uint64_t cell_seed) {
  const Dataset sample = stratified_sample(data.train, m, cell_seed);
  const FitResult fit_result = fit(sample, train_config(cfg, objective), mix_seed(cell_seed, 3));
  RunConfig cell = cfg;
  cell.objective = objective;
  const MetricsReport report =
      evaluate(*data.test, fit_result.model, priors_for(cell, sample), estimator_for(cell, mix_seed(cell_seed, 4)));
  return {objective, m, cell_seed, report.accuracy, report.logloss, report.auc};
}

}  // namespace

json to_json(const ModelFile& f) {
  return {{"format_version", kModelFormatVersion},
          {"objective", objective_name(f.objective)},
          {"priors", {{"p_pos", f.priors.p_pos}, {"p_neg", f.priors.p_neg}}},
          {"model", to_json(f.model)}};
}

ModelFile model_file_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("model file must be a JSON object");
  for (const char* key : {"format_version", "objective", "priors", "model"}) {
    if (!j.contains(key)) throw std::invalid_argument(std::string("model file lacks \"") + key + "\"");
  }
  if (!j.at("format_version").is_number_integer() || j.at("format_version").get<int>() != kModelFormatVersion) {
    throw std::invalid_argument("unsupported model file format_version " + j.at("format_version").dump());
  }
  try {
    ModelFile f;
    f.objective = parse_objective(j.at("objective").get<std::string>());
    const json& p = j.at("priors");
    f.priors = ClassPriors::from_positive(p.at("p_pos").get<double>());
    f.model = trained_model_from_json(j.at("model"));
    if (std::holds_alternative<TwoTowerModel>(f.model) != (f.objective == Objective::two_tower)) {
      throw std::invalid_argument("model kind does not match objective " + std::string(objective_name(f.objective)));
    }
    return f;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bad model file: ") + e.what());
  }
}

void save_model_file(const ModelFile& file, const std::filesystem::path& path) {
  write_text(path, dump_document(to_json(file)));
}

ModelFile load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open model file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
  return model_file_from_json(j);
}

const ModelConfig& model_config(const TrainedModel& model) {
  if (const auto* p = std::get_if<GcvaeParams>(&model)) return p->config();
  return std::get<TwoTowerModel>(model).model_pos.config();
}

RunData load_run_data(const RunConfig& cfg) {
  return in_stage("data load", [&cfg]() -> RunData {
    if (cfg.scenario) {
      ScenarioConfig s = cfg.scenario->scenario;
      s.graphs_per_class = cfg.scenario->train_per_class;
      s.seed = mix_seed(cfg.seed, 1);
      RunData data{generate(s), std::nullopt};
      if (cfg.scenario->test_per_class > 0) {
        s.graphs_per_class = cfg.scenario->test_per_class;
        s.seed = mix_seed(cfg.seed, 2);
        data.test = generate(s);
      }
      return data;
    }
    if (!cfg.data.train) throw std::invalid_argument("no training data configured (set data.train or scenario)");
    RunData data{load_file(*cfg.data.train, {cfg.data.n_max, std::nullopt}), std::nullopt};
    if (cfg.data.test) data.test = load_file(*cfg.data.test, {data.train.n_max(), data.train.d()});
    return data;
  });
}

json report_json(const MetricsReport& report, const json& config) {
  json j = to_json(report);
  j["config"] = config;
  return j;
}

std::string dump_document(const json& j) { return j.dump(2) + "\n"; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("error writing " + path.string());
}

ExperimentResult run_experiment(const RunConfig& cfg) {
  in_stage("config parse", [&cfg] { cfg.check(); });
  const RunData data = load_run_data(cfg);

  ExperimentResult result;
  result.fit = in_stage("training", [&] { return fit(data.train, train_config(cfg, cfg.objective), mix_seed(cfg.seed, 3)); });
  result.model.objective = cfg.objective;
  result.model.priors = in_stage("training", [&] { return priors_for(cfg, data.train); });
  result.model.model = result.fit.model;

  if (data.test) {
    result.report = in_stage("evaluation", [&] {
      return evaluate(*data.test, result.model.model, result.model.priors, estimator_for(cfg, mix_seed(cfg.seed, 4)));
    });
  }
  in_stage("output", [&] {
    if (cfg.output.model) save_model_file(result.model, *cfg.output.model);
    if (cfg.output.report) {
      if (!result.report) throw std::invalid_argument("output.report is set but there is no test data to evaluate");
      write_text(*cfg.output.report, dump_document(report_json(*result.report, to_json(cfg))));
    }
  });
  return result;
}

std::uint64_t sweep_cell_seed(std::uint64_t master, std::size_t m, std::size_t replicate) {
  return mix_seed(mix_seed(master, m), replicate);
}

std::vector<SweepRow> sweep(const RunConfig& cfg) {
  in_stage("config parse", [&cfg] { cfg.check(); });
  return sweep(cfg, load_run_data(cfg));
}

std::vector<SweepRow> sweep(const RunConfig& cfg, const RunData& data) {
  struct Cell {
    Objective objective;
    std::size_t m;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  in_stage("config parse", [&] {
    if (!data.test) throw std::invalid_argument("sweep needs a test split");
    for (std::size_t m : cfg.sweep.sizes) {
      if (m > data.train.size()) {
        throw std::invalid_argument("sweep size m=" + std::to_string(m) + " exceeds the " +
                                    std::to_string(data.train.size()) + " training graphs available");
      }
      for (Objective o : cfg.sweep.objectives) {
        for (std::size_t r = 0; r < cfg.sweep.replicates; ++r) cells.push_back({o, m, sweep_cell_seed(cfg.seed, m, r)});
      }
    }
  });

  std::vector<SweepRow> rows(cells.size());
  std::size_t workers = cfg.sweep.threads > 0 ? cfg.sweep.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, cells.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      rows[i] = run_cell(cfg, data, cells[i].objective, cells[i].m, cells[i].seed);
    }
  };
  in_stage("training", [&] {
    std::vector<std::future<void>> pending;
    for (std::size_t w = 0; w < workers; ++w) pending.push_back(std::async(std::launch::async, work));
    std::exception_ptr failure;
    for (auto& f : pending) {
      try {
        f.get();
      } catch (...) {
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  });

  std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    const auto na = objective_name(a.objective), nb = objective_name(b.objective);
    if (na != nb) return na < nb;
    if (a.m != b.m) return a.m < b.m;
    return a.seed < b.seed;
  });
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << kSweepHeader << "\n";
  for (const SweepRow& r : rows) {
    out << objective_name(r.objective) << ',' << r.m << ',' << r.seed << ',' << format_real(r.accuracy) << ','
        << format_real(r.logloss) << ',' << format_real(r.auc) << "\n";
  }
  return out.str();
}

}  // namespace gcvae
