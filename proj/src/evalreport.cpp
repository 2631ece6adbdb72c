#include "sigmoid/evalreport.hpp"

#include "sigmoid/csv.hpp"
#include "sigmoid/errors.hpp"

#include <algorithm>
#include <cmath>

namespace sigmoid {

std::vector<double> make_eval_grid(double horizon, int n) { return uniform_grid(0.0, horizon, n); }

Reconstruction reconstruct_missing(const OdeSystem& system, const ad::Mat& param_draws,
                                   const std::vector<double>& grid, bool keep_ensemble) {
  if (param_draws.rows() < 1) throw std::invalid_argument("reconstruct_missing: no parameter draws");
  if (param_draws.cols() != system.dim_p)
    throw std::invalid_argument("reconstruct_missing: draw width does not match system");
  validate_grid(grid);
  const int substeps = substeps_for(system, grid[1] - grid[0]);

  Reconstruction rec;
  rec.grid = grid;
  const Eigen::Index rows = static_cast<Eigen::Index>(grid.size());
  rec.mean = ad::Mat::Zero(rows, system.dim_y);
  rec.lo = ad::Mat::Constant(rows, system.dim_y, std::numeric_limits<double>::infinity());
  rec.hi = ad::Mat::Constant(rows, system.dim_y, -std::numeric_limits<double>::infinity());

  for (Eigen::Index i = 0; i < param_draws.rows(); ++i) {
    Trajectory traj;
    try {
      traj = integrate_rk4(system, param_draws.row(i).transpose(), system.initial_state, grid,
                           substeps);
    } catch (const NumericalError&) {
      ++rec.draws_dropped;
      continue;
    }
    rec.mean += traj.states;
    rec.lo = rec.lo.cwiseMin(traj.states);
    rec.hi = rec.hi.cwiseMax(traj.states);
    if (keep_ensemble) rec.ensemble.push_back(traj.states);
    ++rec.draws_used;
  }
  if (rec.draws_dropped * 10 > static_cast<int>(param_draws.rows()))
    throw NumericalError("reconstruct_missing: more than 10% of draws blew up (" +
                         std::to_string(rec.draws_dropped) + " of " +
                         std::to_string(param_draws.rows()) + ")");
  if (rec.draws_used == 0) throw NumericalError("reconstruct_missing: every draw blew up");
  rec.mean /= static_cast<double>(rec.draws_used);
  return rec;
}

RmseReport trajectory_rmse(const ad::Mat& inferred, const ad::Mat& truth,
                           const std::vector<std::string>& component_names, int draws_used,
                           double scale) {
  if (inferred.rows() != truth.rows() || inferred.cols() != truth.cols())
    throw std::invalid_argument("trajectory_rmse: grids do not match");
  RmseReport report;
  report.component_names = component_names;
  report.grid_points = static_cast<int>(inferred.rows());
  report.draws_used = draws_used;
  report.scale = scale;
  for (Eigen::Index c = 0; c < inferred.cols(); ++c)
    report.rmse.push_back(std::sqrt((inferred.col(c) - truth.col(c)).squaredNorm() /
                                    static_cast<double>(inferred.rows())));
  return report;
}

ObservedBand observed_band(const Dataset& dataset, bool quantile) {
  const Eigen::Index n = dataset.replicates.rows();
  if (n < 2) throw std::invalid_argument("observed_band: needs at least 2 replicates");
  ObservedBand band;
  const Eigen::Index flat = dataset.replicates.cols();
  band.mean.resize(flat);
  band.lo.resize(flat);
  band.hi.resize(flat);
  std::vector<double> sorted(static_cast<size_t>(n));
  for (Eigen::Index c = 0; c < flat; ++c) {
    const auto col = dataset.replicates.col(c);
    const double mu = col.mean();
    band.mean[c] = mu;
    if (quantile) {
      for (Eigen::Index i = 0; i < n; ++i) sorted[static_cast<size_t>(i)] = col(i);
      std::sort(sorted.begin(), sorted.end());
      auto pick = [&](double q) {
        const double pos = q * static_cast<double>(n - 1);
        const size_t k = static_cast<size_t>(pos);
        const double frac = pos - static_cast<double>(k);
        return k + 1 < sorted.size() ? sorted[k] * (1.0 - frac) + sorted[k + 1] * frac : sorted[k];
      };
      band.lo[c] = pick(0.025);
      band.hi[c] = pick(0.975);
    } else {
      const double sd = std::sqrt((col.array() - mu).square().sum() / static_cast<double>(n - 1));
      band.lo[c] = mu - 1.96 * sd;
      band.hi[c] = mu + 1.96 * sd;
    }
  }
  return band;
}

ReportOutputs write_report(const ReportInputs& inputs, const std::filesystem::path& out_dir) {
  if (!inputs.dataset || !inputs.result) throw std::invalid_argument("write_report: missing inputs");
  const InferenceResult& result = *inputs.result;
  if (result.param_draws.rows() < 1)
    throw std::invalid_argument("write_report: empty parameter sample");
  if (inputs.eval_grid.size() < 2) throw std::invalid_argument("write_report: eval grid too small");

  const OdeSystem& system = inputs.system;
  const int substeps = substeps_for(system, inputs.eval_grid[1] - inputs.eval_grid[0]);

  Reconstruction rec = reconstruct_missing(system, result.param_draws, inputs.eval_grid);
  Trajectory truth = integrate_rk4(system, system.true_params, system.initial_state,
                                   inputs.eval_grid, substeps);
  RmseReport rmse =
      trajectory_rmse(rec.mean, truth.states, system.component_names, rec.draws_used);
  GanSummary summary = summarize(result);

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (!std::filesystem::is_directory(out_dir))
    throw std::runtime_error("write_report: cannot create directory " + out_dir.string());

  {
    std::string csv = csv_join({"component", "rmse"});
    for (size_t c = 0; c < rmse.rmse.size(); ++c)
      csv += csv_join({rmse.component_names[c], format_double(rmse.rmse[c])});
    write_text_file(out_dir / "rmse.csv", csv);
  }
  {
    std::string csv = csv_join({"param", "true_value", "mean", "std"});
    for (Eigen::Index p = 0; p < summary.param_mean.size(); ++p) {
      const std::string name = p < static_cast<Eigen::Index>(result.param_names.size())
                                   ? result.param_names[static_cast<size_t>(p)]
                                   : "p" + std::to_string(p);
      csv += csv_join({name, format_double(system.true_params[p]),
                       format_double(summary.param_mean[p]), format_double(summary.param_std[p])});
    }
    write_text_file(out_dir / "params.csv", csv);
  }
  {
    std::vector<std::string> header = {"t"};
    for (const auto& name : system.component_names)
      for (const char* suffix : {"_true", "_mean", "_lo", "_hi"}) header.push_back(name + suffix);
    std::string csv = csv_join(header);
    for (size_t i = 0; i < inputs.eval_grid.size(); ++i) {
      std::vector<std::string> row = {format_double(inputs.eval_grid[i])};
      for (int c = 0; c < system.dim_y; ++c) {
        const Eigen::Index r = static_cast<Eigen::Index>(i);
        row.push_back(format_double(truth.states(r, c)));
        row.push_back(format_double(rec.mean(r, c)));
        row.push_back(format_double(rec.lo(r, c)));
        row.push_back(format_double(rec.hi(r, c)));
      }
      csv += csv_join(row);
    }
    write_text_file(out_dir / "reconstruction.csv", csv);
  }
  {
    nlohmann::json run = inputs.run_info;
    run["rmse"] = rmse.rmse;
    run["reconstruction_draws_used"] = rec.draws_used;
    run["reconstruction_draws_dropped"] = rec.draws_dropped;
    write_text_file(out_dir / "run.json", run.dump(1));
  }

  ReportOutputs out;
  out.rmse = std::move(rmse);
  out.reconstruction = std::move(rec);
  out.directory = out_dir;
  return out;
}

}  // namespace sigmoid
