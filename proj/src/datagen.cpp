#include "sigmoid/datagen.hpp"

#include "sigmoid/csv.hpp"
#include "sigmoid/errors.hpp"
#include "sigmoid/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace sigmoid {

using nlohmann::json;

std::string to_string(NoiseModel::Kind kind) {
  return kind == NoiseModel::Kind::AdditiveGaussian ? "additive_gaussian"
                                                    : "multiplicative_lognormal";
}

NoiseModel::Kind noise_kind_from_string(const std::string& s) {
  if (s == "additive_gaussian") return NoiseModel::Kind::AdditiveGaussian;
  if (s == "multiplicative_lognormal") return NoiseModel::Kind::MultiplicativeLognormal;
  throw ConfigError("unknown noise kind '" + s + "'");
}

int ObservationSchedule::flat_dim() const {
  int n = 0;
  for (const auto& row : mask)
    for (char m : row) n += m ? 1 : 0;
  return n;
}

std::vector<std::pair<int, int>> ObservationSchedule::flat_entries() const {
  std::vector<std::pair<int, int>> entries;
  for (size_t c = 0; c < components.size(); ++c)
    for (size_t j = 0; j < times.size(); ++j)
      if (mask[c][j]) entries.emplace_back(static_cast<int>(c), static_cast<int>(j));
  return entries;
}

ObservationSchedule merged_schedule(const std::map<int, std::vector<double>>& per_component_times) {
  if (per_component_times.empty())
    throw std::invalid_argument("merged_schedule: no observed components");
  std::set<double> merged;
  for (const auto& [comp, grid] : per_component_times) {
    if (comp < 0) throw std::invalid_argument("merged_schedule: negative component index");
    validate_grid(grid);
    merged.insert(grid.begin(), grid.end());
  }
  ObservationSchedule sched;
  sched.times.assign(merged.begin(), merged.end());
  for (const auto& [comp, grid] : per_component_times) {
    sched.components.push_back(comp);
    std::vector<char> row(sched.times.size(), 0);
    for (double t : grid) {
      auto it = std::lower_bound(sched.times.begin(), sched.times.end(), t);
      row[static_cast<size_t>(it - sched.times.begin())] = 1;
    }
    sched.mask.push_back(std::move(row));
  }
  return sched;
}

Eigen::VectorXd Dataset::true_flat() const {
  const auto entries = schedule.flat_entries();
  Eigen::VectorXd flat(static_cast<Eigen::Index>(entries.size()));
  // true_trajectory rows follow its own (original) time grid; map by value
  for (size_t k = 0; k < entries.size(); ++k) {
    const auto [c, j] = entries[k];
    const double t = schedule.times[j];
    const auto& tt = true_trajectory.times;
    auto it = std::lower_bound(tt.begin(), tt.end(), t);
    if (it == tt.end() || *it != t)
      throw std::logic_error("dataset: schedule time missing from stored truth");
    flat[static_cast<Eigen::Index>(k)] =
        true_trajectory.states(it - tt.begin(), schedule.components[c]);
  }
  return flat;
}

Eigen::VectorXd Dataset::replicate_variance() const {
  const Eigen::Index n = replicates.rows();
  if (n < 2) throw std::invalid_argument("dataset: variance needs at least 2 replicates");
  Eigen::RowVectorXd mean = replicates.colwise().mean();
  Eigen::VectorXd var(replicates.cols());
  for (Eigen::Index c = 0; c < replicates.cols(); ++c)
    var[c] = (replicates.col(c).array() - mean[c]).square().sum() / static_cast<double>(n - 1);
  return var;
}

Dataset generate_dataset(const OdeSystem& system, const ScenarioConfig& scenario) {
  if (scenario.n_replicates < 1) throw ConfigError("scenario: n_replicates must be >= 1");
  if (scenario.noise.sigma < 0.0) throw ConfigError("scenario: noise sigma must be >= 0");
  for (const auto& [comp, grid] : scenario.times_per_component)
    if (comp < 0 || comp >= system.dim_y)
      throw ConfigError("scenario: component index " + std::to_string(comp) + " outside " +
                        system.name);

  Dataset ds;
  ds.system_name = system.name;
  ds.schedule = merged_schedule(scenario.times_per_component);
  for (int c : ds.schedule.components) ds.schedule.component_names.push_back(system.component_names[c]);
  ds.noise = scenario.noise;
  ds.seed = scenario.seed;

  // integrate the truth from t = 0 across the merged schedule
  std::vector<double> grid = ds.schedule.times;
  if (grid.empty()) throw ConfigError("scenario: empty schedule");
  if (grid.front() > 0.0) grid.insert(grid.begin(), 0.0);
  std::vector<double> full_grid = grid;
  Trajectory full;
  {
    double prev = 0.0;
    double max_dt = 0.0;
    for (double t : full_grid) {
      max_dt = std::max(max_dt, t - prev);
      prev = t;
    }
    full = integrate_rk4(system, system.true_params, system.initial_state, full_grid,
                         substeps_for(system, max_dt));
  }
  // keep truth on the schedule times only
  const size_t offset = full_grid.size() - ds.schedule.times.size();
  ds.true_trajectory.times = ds.schedule.times;
  ds.true_trajectory.params = system.true_params;
  ds.true_trajectory.states = full.states.bottomRows(static_cast<Eigen::Index>(ds.schedule.times.size()));
  (void)offset;

  const auto entries = ds.schedule.flat_entries();
  ds.replicates.resize(scenario.n_replicates, static_cast<Eigen::Index>(entries.size()));
  Rng root(scenario.seed);
  const bool multiplicative = scenario.noise.kind == NoiseModel::Kind::MultiplicativeLognormal;
  for (int n = 0; n < scenario.n_replicates; ++n) {
    Rng rng = root.fork(static_cast<std::uint64_t>(n));
    for (size_t k = 0; k < entries.size(); ++k) {
      const auto [c, j] = entries[k];
      const double truth = ds.true_trajectory.states(j, ds.schedule.components[c]);
      const double eps = scenario.noise.sigma * rng.normal();
      double value;
      if (!multiplicative || system.log_space) {
        // log-space systems store log-state + eps, which keeps errors Gaussian
        value = truth + eps;
      } else {
        if (!(truth > 0.0))
          throw NumericalError("multiplicative noise on nonpositive value at t = " +
                               format_double(ds.schedule.times[j]));
        value = truth * std::exp(eps);
      }
      ds.replicates(n, static_cast<Eigen::Index>(k)) = value;
    }
  }
  return ds;
}

Dataset mask_components(const Dataset& dataset, const std::vector<int>& keep) {
  if (keep.empty()) throw std::invalid_argument("mask_components: keep set is empty");
  std::vector<int> sorted = keep;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (int c : sorted)
    if (std::find(dataset.schedule.components.begin(), dataset.schedule.components.end(), c) ==
        dataset.schedule.components.end())
      throw std::invalid_argument("mask_components: component " + std::to_string(c) +
                                  " is not observed in the dataset");

  // columns of the flat layout to retain, in flat order
  const auto entries = dataset.schedule.flat_entries();
  std::vector<int> cols;
  std::map<int, std::vector<double>> kept_times;
  for (size_t k = 0; k < entries.size(); ++k) {
    const auto [c, j] = entries[k];
    const int comp = dataset.schedule.components[c];
    if (std::find(sorted.begin(), sorted.end(), comp) == sorted.end()) continue;
    cols.push_back(static_cast<int>(k));
    kept_times[comp].push_back(dataset.schedule.times[j]);
  }

  Dataset out;
  out.system_name = dataset.system_name;
  out.schedule = merged_schedule(kept_times);
  for (size_t c = 0; c < dataset.schedule.components.size(); ++c)
    if (std::find(sorted.begin(), sorted.end(), dataset.schedule.components[c]) != sorted.end())
      out.schedule.component_names.push_back(dataset.schedule.component_names[c]);
  out.noise = dataset.noise;
  out.seed = dataset.seed;
  out.true_trajectory = dataset.true_trajectory;
  out.replicates.resize(dataset.replicates.rows(), static_cast<Eigen::Index>(cols.size()));
  for (size_t k = 0; k < cols.size(); ++k)
    out.replicates.col(static_cast<Eigen::Index>(k)) = dataset.replicates.col(cols[k]);
  return out;
}

namespace {

json mat_to_json(const ad::Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

ad::Mat mat_from_json(const json& j) {
  const Eigen::Index r = static_cast<Eigen::Index>(j.size());
  if (r == 0) return ad::Mat(0, 0);
  const Eigen::Index c = static_cast<Eigen::Index>(j.at(0).size());
  ad::Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index k = 0; k < c; ++k) m(i, k) = j.at(i).at(k).get<double>();
  return m;
}

}  // namespace

json dataset_to_json(const Dataset& ds) {
  json j;
  j["meta"] = {{"system_name", ds.system_name},
               {"n_replicates", ds.n_replicates()},
               {"noise", {{"kind", to_string(ds.noise.kind)}, {"sigma", ds.noise.sigma}}},
               {"seed", ds.seed}};
  json mask = json::array();
  for (const auto& row : ds.schedule.mask) {
    json r = json::array();
    for (char m : row) r.push_back(m != 0);
    mask.push_back(std::move(r));
  }
  j["schedule"] = {{"components", ds.schedule.components},
                   {"component_names", ds.schedule.component_names},
                   {"times", ds.schedule.times},
                   {"mask", std::move(mask)}};
  j["replicates"] = mat_to_json(ds.replicates);
  std::vector<double> params(ds.true_trajectory.params.data(),
                             ds.true_trajectory.params.data() + ds.true_trajectory.params.size());
  j["true_trajectory"] = {{"times", ds.true_trajectory.times},
                          {"states", mat_to_json(ds.true_trajectory.states)},
                          {"params", params}};
  return j;
}

Dataset dataset_from_json(const json& j) {
  Dataset ds;
  ds.system_name = j.at("meta").at("system_name").get<std::string>();
  ds.noise.kind = noise_kind_from_string(j.at("meta").at("noise").at("kind").get<std::string>());
  ds.noise.sigma = j.at("meta").at("noise").at("sigma").get<double>();
  ds.seed = j.at("meta").at("seed").get<std::uint64_t>();
  const auto& sch = j.at("schedule");
  ds.schedule.components = sch.at("components").get<std::vector<int>>();
  ds.schedule.component_names = sch.at("component_names").get<std::vector<std::string>>();
  ds.schedule.times = sch.at("times").get<std::vector<double>>();
  for (const auto& row : sch.at("mask")) {
    std::vector<char> r;
    for (const auto& m : row) r.push_back(m.get<bool>() ? 1 : 0);
    ds.schedule.mask.push_back(std::move(r));
  }
  ds.replicates = mat_from_json(j.at("replicates"));
  const auto& tt = j.at("true_trajectory");
  ds.true_trajectory.times = tt.at("times").get<std::vector<double>>();
  ds.true_trajectory.states = mat_from_json(tt.at("states"));
  const auto params = tt.at("params").get<std::vector<double>>();
  ds.true_trajectory.params = Eigen::Map<const Eigen::VectorXd>(params.data(),
                                                                static_cast<Eigen::Index>(params.size()));
  return ds;
}

void save_dataset(const std::filesystem::path& path, const Dataset& ds) {
  write_text_file(path, dataset_to_json(ds).dump(1));
}

Dataset load_dataset(const std::filesystem::path& path) {
  return dataset_from_json(json::parse(read_text_file(path)));
}

std::string replicates_csv(const Dataset& ds) {
  std::string out = csv_join({"replicate", "component", "t", "value"});
  const auto entries = ds.schedule.flat_entries();
  for (Eigen::Index n = 0; n < ds.replicates.rows(); ++n)
    for (size_t k = 0; k < entries.size(); ++k) {
      const auto [c, j] = entries[k];
      out += csv_join({std::to_string(n), ds.schedule.component_names[c],
                       format_double(ds.schedule.times[j]),
                       format_double(ds.replicates(n, static_cast<Eigen::Index>(k)))});
    }
  return out;
}

}  // namespace sigmoid
