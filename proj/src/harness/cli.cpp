#include "gcvae/harness/cli.hpp"

#include <CLI11.hpp>

#include <optional>
#include <ostream>

#include "gcvae/graph/dataset_io.hpp"
#include "gcvae/harness/experiment.hpp"

namespace gcvae {

using nlohmann::json;

namespace {

struct SharedFlags {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

struct EstimatorFlags {
  std::optional<std::string> inference;
  std::optional<std::size_t> samples;
  std::optional<double> prior_pos;
};

void add_shared(CLI::App* cmd, SharedFlags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration");
  cmd->add_option("--seed", f.seed, "master seed (overrides the config)");
  cmd->add_option("--out", f.out, "output path");
}

void add_estimator(CLI::App* cmd, EstimatorFlags& f) {
  cmd->add_option("--inference", f.inference, "likelihood estimator: det|mc|is|celbo");
  cmd->add_option("--samples", f.samples, "samples per likelihood estimate");
  cmd->add_option("--prior-pos", f.prior_pos, "class prior P(y=+1) (default: from the training labels)");
}

RunConfig resolve(const SharedFlags& shared, const EstimatorFlags* est) {
  RunConfig cfg;
  if (shared.config) {
    try {
      cfg = load_run_config(*shared.config);
    } catch (const std::exception& e) {
      throw StageError("config parse", 2, e.what());
    }
  }
  try {
    if (shared.seed) cfg.seed = *shared.seed;
    if (est) {
      if (est->inference) cfg.inference = parse_estimator(*est->inference);
      if (est->samples) cfg.samples = *est->samples;
      if (est->prior_pos) cfg.prior_pos = *est->prior_pos;
    }
  } catch (const std::exception& e) {
    throw StageError("config parse", 2, e.what());
  }
  return cfg;
}

void check_config(const RunConfig& cfg) {
  try {
    cfg.check();
  } catch (const std::exception& e) {
    throw StageError("config parse", 2, e.what());
  }
}

ModelFile load_model_stage(const std::string& path) {
  try {
    if (!std::filesystem::exists(path)) throw std::invalid_argument("model file not found: " + path);
    return load_model_file(path);
  } catch (const std::invalid_argument& e) {
    throw StageError("model load", 2, e.what());
  } catch (const std::exception& e) {
    throw StageError("model load", 1, e.what());
  }
}

Dataset load_for_model(const std::string& path, const ModelConfig& mc) {
  try {
    if (!std::filesystem::exists(path)) throw std::invalid_argument("dataset file not found: " + path);
    Dataset ds = load_dataset(path, {mc.n_max, std::nullopt});
    if (ds.d() != mc.d) {
      throw std::invalid_argument("graph feature width " + std::to_string(ds.d()) + " does not match the model (expected d=" +
                                  std::to_string(mc.d) + ", got d=" + std::to_string(ds.d()) + ")");
    }
    return ds;
  } catch (const std::invalid_argument& e) {
    throw StageError("data load", 2, e.what());
  } catch (const ParseError& e) {
    throw StageError("data load", 2, e.what());
  } catch (const std::exception& e) {
    throw StageError("data load", 1, e.what());
  }
}

EstimatorConfig estimator_from(const RunConfig& cfg, Objective objective) {
  RunConfig c = cfg;
  c.objective = objective;
  EstimatorConfig ec;
  ec.method = resolved_estimator(c);
  ec.samples = c.samples;
  ec.seed = mix_seed(c.seed, 4);
  return ec;
}

template <typename F>
auto evaluation_stage(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw StageError("evaluation", 2, e.what());
  } catch (const std::exception& e) {
    throw StageError("evaluation", 1, e.what());
  }
}

void emit(const std::optional<std::string>& path, const std::string& text, std::ostream& out) {
  if (!path) {
    out << text;
    return;
  }
  try {
    write_text(*path, text);
  } catch (const std::invalid_argument& e) {
    throw StageError("output", 2, e.what());
  } catch (const std::exception& e) {
    throw StageError("output", 1, e.what());
  }
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> sizes;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != item.size()) throw StageError("config parse", 2, "bad --sizes entry \"" + item + "\"");
    sizes.push_back(static_cast<std::size_t>(v));
  }
  if (sizes.empty()) throw StageError("config parse", 2, "--sizes is empty");
  return sizes;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Graph conditional VAE classifier"};
  app.require_subcommand(1);

  SharedFlags gen_flags, train_flags, eval_flags, predict_flags, sweep_flags;
  EstimatorFlags train_est, eval_est, predict_est, sweep_est;

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset (JSONL)");
  add_shared(gen, gen_flags);
  std::string split = "train";
  std::optional<std::string> scenario_name_flag;
  std::optional<std::size_t> per_class;
  gen->add_option("--split", split, "train or test stream of the configured scenario")
      ->check(CLI::IsMember({"train", "test"}));
  gen->add_option("--scenario", scenario_name_flag, "er-split|triangle-confound|sbm");
  gen->add_option("--graphs-per-class", per_class, "graphs per label");

  auto* train = app.add_subcommand("train", "train a model; evaluate it when test data is configured");
  add_shared(train, train_flags);
  add_estimator(train, train_est);
  std::optional<std::string> objective_flag, report_flag, train_path, test_path;
  std::optional<std::size_t> epochs_flag;
  train->add_option("--objective", objective_flag, "two-tower|celbo|discriminative|discriminative-logistic");
  train->add_option("--report", report_flag, "report JSON path");
  train->add_option("--train", train_path, "training JSONL");
  train->add_option("--test", test_path, "test JSONL");
  train->add_option("--epochs", epochs_flag, "training epochs");

  auto* eval = app.add_subcommand("eval", "evaluate a saved model on a labeled dataset");
  add_shared(eval, eval_flags);
  add_estimator(eval, eval_est);
  std::string eval_model, eval_data;
  eval->add_option("--model", eval_model, "model JSON")->required();
  eval->add_option("--data", eval_data, "labeled JSONL")->required();

  auto* predict = app.add_subcommand("predict", "log-odds record for one graph");
  add_shared(predict, predict_flags);
  add_estimator(predict, predict_est);
  std::string predict_model, predict_graph;
  predict->add_option("--model", predict_model, "model JSON")->required();
  predict->add_option("--graph", predict_graph, "JSONL file holding one graph")->required();

  auto* sweep_cmd = app.add_subcommand("sweep", "sample-size sweep, CSV output");
  add_shared(sweep_cmd, sweep_flags);
  add_estimator(sweep_cmd, sweep_est);
  std::optional<std::string> sizes_flag, sweep_objective;
  std::optional<std::size_t> replicates_flag, threads_flag;
  sweep_cmd->add_option("--sizes", sizes_flag, "comma-separated training-set sizes");
  sweep_cmd->add_option("--replicates", replicates_flag, "replicates per size");
  sweep_cmd->add_option("--objective", sweep_objective, "restrict to one objective");
  sweep_cmd->add_option("--threads", threads_flag, "worker threads (0: all cores)");

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.push_back("gcvae");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (std::string& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (*gen) {
      RunConfig cfg = resolve(gen_flags, nullptr);
      if (!gen_flags.out) throw StageError("config parse", 2, "gen-data needs --out");
      ScenarioSource src = cfg.scenario.value_or(ScenarioSource{});
      try {
        if (scenario_name_flag) src.scenario.scenario = parse_scenario(*scenario_name_flag);
      } catch (const std::exception& e) {
        throw StageError("config parse", 2, e.what());
      }
      ScenarioConfig s = src.scenario;
      s.graphs_per_class = per_class.value_or(split == "train" ? src.train_per_class : src.test_per_class);
      s.seed = mix_seed(cfg.seed, split == "train" ? 1 : 2);
      std::string text;
      try {
        text = dataset_to_string(generate(s));
      } catch (const std::invalid_argument& e) {
        throw StageError("config parse", 2, e.what());
      }
      emit(gen_flags.out, text, out);
      return 0;
    }

    if (*train) {
      RunConfig cfg = resolve(train_flags, &train_est);
      try {
        if (objective_flag) cfg.objective = parse_objective(*objective_flag);
      } catch (const std::exception& e) {
        throw StageError("config parse", 2, e.what());
      }
      if (epochs_flag) cfg.training.epochs = *epochs_flag;
      if (train_path) {
        cfg.scenario.reset();
        cfg.data.train = *train_path;
      }
      if (test_path) cfg.data.test = *test_path;
      if (train_flags.out) cfg.output.model = *train_flags.out;
      if (report_flag) cfg.output.report = *report_flag;
      check_config(cfg);
      const ExperimentResult r = run_experiment(cfg);
      json summary = {{"objective", objective_name(cfg.objective)},
                      {"epochs_run", r.fit.epochs_run},
                      {"best_epoch", r.fit.best_epoch}};
      if (r.report) {
        summary["accuracy"] = r.report->accuracy;
        summary["logloss"] = r.report->logloss;
        summary["auc"] = std::isfinite(r.report->auc) ? json(r.report->auc) : json(nullptr);
      }
      out << summary.dump() << "\n";
      return 0;
    }

    if (*eval) {
      RunConfig cfg = resolve(eval_flags, &eval_est);
      const ModelFile mf = load_model_stage(eval_model);
      cfg.objective = mf.objective;
      cfg.scenario.reset();
      cfg.data.train.reset();
      cfg.data.test = eval_data;
      cfg.output.model = eval_model;
      cfg.output.report = eval_flags.out ? std::optional<std::filesystem::path>(*eval_flags.out) : std::nullopt;
      check_config(cfg);
      const Dataset ds = load_for_model(eval_data, model_config(mf.model));
      const ClassPriors priors = cfg.prior_pos ? ClassPriors::from_positive(*cfg.prior_pos) : mf.priors;
      const MetricsReport report =
          evaluation_stage([&] { return evaluate(ds, mf.model, priors, estimator_from(cfg, mf.objective)); });
      emit(eval_flags.out, dump_document(report_json(report, to_json(cfg))), out);
      return 0;
    }

    if (*predict) {
      RunConfig cfg = resolve(predict_flags, &predict_est);
      check_config(cfg);
      const ModelFile mf = load_model_stage(predict_model);
      const Dataset ds = load_for_model(predict_graph, model_config(mf.model));
      if (ds.size() != 1) {
        throw StageError("data load", 2,
                         predict_graph + " holds " + std::to_string(ds.size()) + " graphs; predict takes exactly one");
      }
      const ClassPriors priors = cfg.prior_pos ? ClassPriors::from_positive(*cfg.prior_pos) : mf.priors;
      const LogOddsRecord rec =
          evaluation_stage([&] { return log_odds(ds[0], mf.model, priors, estimator_from(cfg, mf.objective), 0); });
      emit(predict_flags.out, to_json(rec).dump() + "\n", out);
      return 0;
    }

    if (*sweep_cmd) {
      RunConfig cfg = resolve(sweep_flags, &sweep_est);
      if (sizes_flag) cfg.sweep.sizes = parse_sizes(*sizes_flag);
      if (replicates_flag) cfg.sweep.replicates = *replicates_flag;
      if (threads_flag) cfg.sweep.threads = *threads_flag;
      try {
        if (sweep_objective) cfg.sweep.objectives = {parse_objective(*sweep_objective)};
      } catch (const std::exception& e) {
        throw StageError("config parse", 2, e.what());
      }
      if (sweep_flags.out) cfg.output.csv = *sweep_flags.out;
      check_config(cfg);
      const std::string csv = sweep_csv(sweep(cfg));
      emit(cfg.output.csv ? std::optional<std::string>(cfg.output.csv->string()) : std::nullopt, csv, out);
      return 0;
    }
  } catch (const StageError& e) {
    err << "gcvae: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    err << "gcvae: internal error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace gcvae
