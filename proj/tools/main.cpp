// Command-line entry point: simulate / train-solver / infer / report /
// pipeline over a single JSON config or a named preset.

#include "sigmoid/config.hpp"
#include "sigmoid/csv.hpp"
#include "sigmoid/errors.hpp"
#include "sigmoid/evalreport.hpp"
#include "sigmoid/version.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace sigmoid;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::string out;
};

RunConfig resolve_config(const CommonArgs& args) {
  RunConfig cfg;
  if (!args.config_path.empty()) {
    cfg = load_config_file(args.config_path);
  } else if (!args.preset.empty()) {
    cfg = make_preset(args.preset);
  } else {
    throw ConfigError("pass --config FILE or --preset NAME");
  }
  if (!args.preset.empty() && !args.config_path.empty())
    throw ConfigError("--config and --preset are mutually exclusive");
  if (args.seed) cfg.master_seed = *args.seed;
  if (!args.out.empty()) cfg.out_dir = args.out;
  return cfg;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

fs::path ensure_out_dir(const RunConfig& cfg) {
  fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  return dir;
}

Dataset run_simulate(const RunConfig& cfg, const fs::path& out_dir) {
  OdeSystem system = system_from_config(cfg);
  Dataset ds = generate_dataset(system, scenario_from_config(cfg));
  save_dataset(out_dir / "dataset.json", ds);
  write_text_file(out_dir / "replicates.csv", replicates_csv(ds));
  std::printf("simulate: %s flat_dim=%d n_replicates=%d -> %s\n", cfg.system_name.c_str(),
              ds.flat_dim(), ds.n_replicates(), (out_dir / "dataset.json").c_str());
  return ds;
}

fs::path trainset_cache_dir(const fs::path& out_dir) {
  if (const char* env = std::getenv("SIGMOID_CACHE_DIR"); env && *env) return fs::path(env);
  return out_dir / "trainset_cache";
}

HyperPinnModel run_train_solver(const RunConfig& cfg, const fs::path& out_dir) {
  OdeSystem system = system_from_config(cfg);
  ParamBounds bounds = default_bounds(system);
  PinnTrainConfig pinn = cfg.pinn;
  pinn.seed = derive_stage_seed(cfg.master_seed, "train-solver");
  if (pinn.beta == 0.0) std::printf("train-solver: beta = 0, physics loss disabled\n");

  const fs::path cache_dir = trainset_cache_dir(out_dir);
  fs::create_directories(cache_dir);
  const std::string key =
      training_set_cache_key(system, bounds, pinn.n_params, pinn.t_col, pinn.seed);
  const fs::path cache_file = cache_dir / ("trainset_" + key + ".bin");
  TrainingSet ts;
  if (auto cached = load_training_set(cache_file)) {
    ts = std::move(*cached);
    std::printf("train-solver: cached training set %s\n", cache_file.c_str());
  } else {
    ts = build_training_set(system, bounds, pinn.n_params, pinn.t_col, pinn.seed);
    save_training_set(cache_file, ts);
    std::printf("train-solver: built training set (%d solutions), cached as %s\n", ts.n_params(),
                cache_file.c_str());
  }

  PinnTrainResult trained = train_hyperpinn(system, bounds, ts, pinn);
  save_model(out_dir / "model.json", trained.model);
  std::string hist = csv_join({"epoch", "data_loss", "physics_loss", "total_loss"});
  for (const auto& row : trained.history)
    hist += csv_join({std::to_string(row.epoch), format_double(row.data),
                      format_double(row.physics), format_double(row.total)});
  write_text_file(out_dir / "loss_history.csv", hist);
  std::printf("train-solver: final total loss %.3e -> %s\n",
              trained.history.back().total, (out_dir / "model.json").c_str());
  return std::move(trained.model);
}

InferenceResult run_infer(const RunConfig& cfg, const HyperPinnModel& model, const Dataset& dataset,
                          const fs::path& out_dir, const std::string& suffix = "") {
  WganConfig gan = cfg.gan;
  gan.seed = derive_stage_seed(cfg.master_seed, "infer");
  InferenceResult result = train_wgan(model, dataset, gan);
  register_builtin_extensions();
  result.param_names = make_system(model.system_name).param_names;
  save_result(out_dir / ("result" + suffix + ".json"), result);
  write_text_file(out_dir / ("draws" + suffix + ".csv"), draws_csv(result));
  GanSummary s = summarize(result);
  std::printf("infer: terminal parameter means:");
  for (Eigen::Index i = 0; i < s.param_mean.size(); ++i) std::printf(" %.4g", s.param_mean[i]);
  std::printf("\n");
  return result;
}

// Reports compare on the natural scale: a log-space run re-integrates the
// base system (same parameters).
OdeSystem reporting_system(const RunConfig& cfg, const std::string& system_name) {
  register_builtin_extensions();
  std::string name = system_name;
  OdeSystem sys = make_system(name);
  if (sys.log_space && name.size() > 4 && name.substr(name.size() - 4) == "_log")
    sys = make_system(name.substr(0, name.size() - 4));
  if (cfg.horizon > 0.0) sys.horizon = cfg.horizon;
  if (cfg.substeps_per_unit > 0.0) sys.substeps_per_unit = cfg.substeps_per_unit;
  return sys;
}

void run_report(const RunConfig& cfg, const Dataset& dataset, const InferenceResult& result,
                const fs::path& out_dir, nlohmann::json run_info) {
  if (dataset.system_name != result.system_name)
    throw ArtifactMismatchError("report: dataset is for '" + dataset.system_name +
                                "' but result is for '" + result.system_name + "'");
  ReportInputs inputs;
  inputs.system = reporting_system(cfg, result.system_name);
  inputs.dataset = &dataset;
  inputs.result = &result;
  inputs.eval_grid = make_eval_grid(inputs.system.horizon, cfg.eval_grid_points);
  run_info["version"] = kVersion;
  run_info["config"] = config_to_json(cfg);
  inputs.run_info = std::move(run_info);
  ReportOutputs outputs = write_report(inputs, out_dir);
  std::printf("report: rmse per component:");
  for (double r : outputs.rmse.rmse) std::printf(" %.4g", r);
  std::printf("\n");
}

std::vector<double> parse_sweep(const std::string& arg) {
  std::vector<double> values;
  std::string token;
  for (char ch : arg + ",") {
    if (ch == ',') {
      if (!token.empty()) values.push_back(std::stod(token));
      token.clear();
    } else {
      token += ch;
    }
  }
  if (values.empty()) throw ConfigError("--lambda-e-sweep needs a comma-separated list");
  return values;
}

int dispatch(CLI::App& app, const std::string& cmd, CommonArgs& args,
             const std::string& model_path, const std::string& dataset_path,
             const std::string& result_path, const std::string& sweep) {
  (void)app;
  if (cmd == "simulate") {
    RunConfig cfg = resolve_config(args);
    run_simulate(cfg, ensure_out_dir(cfg));
    return 0;
  }
  if (cmd == "train-solver") {
    RunConfig cfg = resolve_config(args);
    if (args.epochs) cfg.pinn.epochs = *args.epochs;
    run_train_solver(cfg, ensure_out_dir(cfg));
    return 0;
  }
  if (cmd == "infer") {
    RunConfig cfg = resolve_config(args);
    if (args.epochs) cfg.gan.epochs = *args.epochs;
    HyperPinnModel model = load_model(model_path);
    Dataset dataset = load_dataset(dataset_path);
    const fs::path out_dir = ensure_out_dir(cfg);
    if (sweep.empty()) {
      run_infer(cfg, model, dataset, out_dir);
    } else {
      for (double lambda_e : parse_sweep(sweep)) {
        RunConfig swept = cfg;
        swept.gan.lambda_e = lambda_e;
        std::printf("infer: lambda_e = %g\n", lambda_e);
        run_infer(swept, model, dataset, out_dir, "_le" + format_double(lambda_e));
      }
    }
    return 0;
  }
  if (cmd == "report") {
    RunConfig cfg = resolve_config(args);
    Dataset dataset = load_dataset(dataset_path);
    InferenceResult result = load_result(result_path);
    run_report(cfg, dataset, result, ensure_out_dir(cfg), {});
    return 0;
  }
  if (cmd == "pipeline") {
    RunConfig cfg = resolve_config(args);
    if (args.epochs) cfg.gan.epochs = *args.epochs;
    const fs::path out_dir = ensure_out_dir(cfg);
    nlohmann::json timings;
    auto t0 = std::chrono::steady_clock::now();
    Dataset dataset = run_simulate(cfg, out_dir);
    timings["simulate_s"] = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    HyperPinnModel model = run_train_solver(cfg, out_dir);
    timings["train_solver_s"] = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    InferenceResult result = run_infer(cfg, model, dataset, out_dir);
    timings["infer_s"] = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    nlohmann::json run_info;
    run_info["wall_times"] = timings;
    run_report(cfg, dataset, result, out_dir, run_info);
    return 0;
  }
  throw ConfigError("unknown command");
}

}  // namespace

int main(int argc, char** argv) {
  register_builtin_extensions();

  CLI::App app{"simulation-based inference for ODE systems (simulate -> solver -> generative "
               "inference -> report)"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string model_path, dataset_path, result_path, sweep;

  auto add_common = [&](CLI::App* sub, bool with_epochs) {
    sub->add_option("--config", args.config_path, "JSON config file");
    sub->add_option("--preset", args.preset, "named preset configuration");
    sub->add_option("--seed", args.seed, "master seed (overrides config)");
    sub->add_option("--out", args.out, "output directory (overrides config)");
    if (with_epochs) sub->add_option("--epochs", args.epochs, "override training epochs");
  };

  CLI::App* sim = app.add_subcommand("simulate", "generate a synthetic dataset");
  add_common(sim, false);

  CLI::App* train = app.add_subcommand("train-solver", "train the parametric ODE emulator");
  add_common(train, true);

  CLI::App* infer = app.add_subcommand("infer", "run generative inference against a dataset");
  add_common(infer, true);
  infer->add_option("--model", model_path, "trained solver model file")->required();
  infer->add_option("--dataset", dataset_path, "dataset file")->required();
  infer->add_option("--lambda-e-sweep", sweep, "comma-separated lambda_e values");

  CLI::App* report = app.add_subcommand("report", "evaluate an inference result");
  add_common(report, false);
  report->add_option("--result", result_path, "inference result file")->required();
  report->add_option("--dataset", dataset_path, "dataset file")->required();

  CLI::App* pipeline = app.add_subcommand("pipeline", "simulate, train, infer, report");
  add_common(pipeline, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const std::string cmd = app.get_subcommands().front()->get_name();
    return dispatch(app, cmd, args, model_path, dataset_path, result_path, sweep);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const ArtifactMismatchError& e) {
    std::fprintf(stderr, "artifact mismatch: %s\n", e.what());
    return 3;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
