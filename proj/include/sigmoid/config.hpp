#pragma once

#include "sigmoid/datagen.hpp"
#include "sigmoid/hyperpinn.hpp"
#include "sigmoid/wgan.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace sigmoid {

// One config drives the whole pipeline; stage seeds are derived from the
// master seed per stage name (see derive_stage_seed).
struct RunConfig {
  std::string preset_name;
  std::string system_name;
  std::uint64_t master_seed = 0;
  std::string out_dir = "runs/out";
  double horizon = 0.0;            // 0 keeps the system default
  double substeps_per_unit = 0.0;  // 0 keeps the system default

  int n_replicates = 100;
  std::map<int, std::vector<double>> times_per_component;
  NoiseModel noise;

  PinnTrainConfig pinn;
  WganConfig gan;

  int eval_grid_points = 161;
  bool quantile_band = false;
};

// Named presets with per-system defaults. The fn_* presets are desk-scale
// (they finish in minutes to tens of minutes); *_paper presets carry the
// full-scale settings and run for hours.
std::vector<std::string> preset_names();
RunConfig make_preset(const std::string& name);

// Preset plus JSON overrides (fields present in the document replace preset
// values). A document may name its own "preset"; otherwise "system" selects
// bare per-system defaults.
RunConfig config_from_json(const nlohmann::json& doc);
RunConfig load_config_file(const std::string& path);
nlohmann::json config_to_json(const RunConfig& cfg);

// System with the config's horizon/substeps overrides applied.
OdeSystem system_from_config(const RunConfig& cfg);

ScenarioConfig scenario_from_config(const RunConfig& cfg);

// Registers the extension systems the CLI and tests rely on (the exp_decay
// toy). Idempotent.
void register_builtin_extensions();

}  // namespace sigmoid
