#pragma once

#include "sigmoid/datagen.hpp"
#include "sigmoid/ode.hpp"
#include "sigmoid/wgan.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace sigmoid {

// Dense evaluation grid; 161 uniform points on [0, horizon] by default.
std::vector<double> make_eval_grid(double horizon, int n = 161);

// Ensemble re-integration over a parameter sample: pointwise mean and
// min/max band across draws, every state component included (that is how a
// never-observed component gets reconstructed).
struct Reconstruction {
  std::vector<double> grid;
  ad::Mat mean, lo, hi;  // [grid, d_y]
  int draws_used = 0;
  int draws_dropped = 0;
  std::vector<ad::Mat> ensemble;  // populated only when keep_ensemble
};

Reconstruction reconstruct_missing(const OdeSystem& system, const ad::Mat& param_draws,
                                   const std::vector<double>& grid, bool keep_ensemble = false);

struct RmseReport {
  std::vector<std::string> component_names;
  std::vector<double> rmse;  // per component
  int grid_points = 0;
  int draws_used = 0;
  double scale = 1.0;  // report scale tag, e.g. 1e3 for tables quoted x10^3
};

// Per-component root-mean-square error between two state matrices on a
// shared grid.
RmseReport trajectory_rmse(const ad::Mat& inferred, const ad::Mat& truth,
                           const std::vector<std::string>& component_names, int draws_used,
                           double scale = 1.0);

// Per observed (component, time) mean with a 95% interval across replicates:
// mean +- 1.96 sd, or empirical 2.5%/97.5% quantiles when `quantile`.
struct ObservedBand {
  Eigen::VectorXd mean, lo, hi;  // flat layout
};
ObservedBand observed_band(const Dataset& dataset, bool quantile = false);

// Everything cmd-report writes: rmse.csv, params.csv, reconstruction.csv,
// run.json. Validates inputs before creating any file.
struct ReportInputs {
  OdeSystem system;                 // natural-scale system used to re-integrate
  const Dataset* dataset = nullptr;
  const InferenceResult* result = nullptr;
  std::vector<double> eval_grid;
  nlohmann::json run_info;          // configs, seeds, versions, wall times
};

struct ReportOutputs {
  RmseReport rmse;
  Reconstruction reconstruction;
  std::filesystem::path directory;
};

ReportOutputs write_report(const ReportInputs& inputs, const std::filesystem::path& out_dir);

}  // namespace sigmoid
