#pragma once

#include "sigmoid/ode.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace sigmoid {

struct NoiseModel {
  enum class Kind { AdditiveGaussian, MultiplicativeLognormal };
  Kind kind = Kind::AdditiveGaussian;
  double sigma = 0.0;
};

std::string to_string(NoiseModel::Kind kind);
NoiseModel::Kind noise_kind_from_string(const std::string& s);

// Observed components over a merged time schedule. `mask[c][j]` says whether
// component `components[c]` is observed at `times[j]` (components can have
// asynchronous schedules). The flat layout of one observation set is fixed:
// for each component in `components` order, its observed times in time order.
struct ObservationSchedule {
  std::vector<int> components;             // sorted indices into the system state
  std::vector<std::string> component_names;
  std::vector<double> times;               // merged, strictly increasing
  std::vector<std::vector<char>> mask;     // [components][times]

  int flat_dim() const;
  // (position in `components`, time index) pairs in flat order
  std::vector<std::pair<int, int>> flat_entries() const;
};

// Merged ordered union of the per-component grids (exact-equality dedup).
ObservationSchedule merged_schedule(const std::map<int, std::vector<double>>& per_component_times);

struct ScenarioConfig {
  std::string system_name;
  int n_replicates = 1;
  std::map<int, std::vector<double>> times_per_component;
  NoiseModel noise;
  std::uint64_t seed = 0;
};

// N_o replicate observation sets over a schedule, plus the noiseless truth
// (all components, kept for evaluation only).
struct Dataset {
  std::string system_name;
  ObservationSchedule schedule;
  ad::Mat replicates;  // [n_replicates, flat_dim]
  Trajectory true_trajectory;
  NoiseModel noise;
  std::uint64_t seed = 0;

  int flat_dim() const { return schedule.flat_dim(); }
  int n_replicates() const { return static_cast<int>(replicates.rows()); }
  // Noiseless truth in flat layout.
  Eigen::VectorXd true_flat() const;
  // Unbiased per-(component, time) variance of the replicates.
  Eigen::VectorXd replicate_variance() const;
};

// Integrates the named system at its true parameters and applies the noise
// model per replicate. For additive noise the stored value is y + e with
// e ~ N(0, sigma^2); for multiplicative noise it is y * exp(e), except on a
// log-space system where the stored value is log-state + e so the stored
// errors are Gaussian. Replicate n draws from substream fork(n) of the seed.
Dataset generate_dataset(const OdeSystem& system, const ScenarioConfig& scenario);

// Restriction to a nonempty subset of the observed components. Retained
// values and the stored truth are untouched.
Dataset mask_components(const Dataset& dataset, const std::vector<int>& keep);

nlohmann::json dataset_to_json(const Dataset& ds);
Dataset dataset_from_json(const nlohmann::json& j);
void save_dataset(const std::filesystem::path& path, const Dataset& ds);
Dataset load_dataset(const std::filesystem::path& path);

// Columns `replicate,component,t,value`; component given by name.
std::string replicates_csv(const Dataset& ds);

}  // namespace sigmoid
