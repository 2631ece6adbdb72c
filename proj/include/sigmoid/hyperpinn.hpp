#pragma once

#include "sigmoid/datagen.hpp"
#include "sigmoid/mlp.hpp"
#include "sigmoid/ode.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sigmoid {

struct ParamBounds {
  Vec lo, hi;

  ParamBounds() = default;
  ParamBounds(Vec lo_, Vec hi_);

  Vec mid() const { return 0.5 * (lo + hi); }
  Vec halfwidth() const { return 0.5 * (hi - lo); }
  int dim() const { return static_cast<int>(lo.size()); }
};

// Default box [0.5 p_true, 1.5 p_true].
ParamBounds default_bounds(const OdeSystem& system);

// Parameter rows sampled i.i.d. uniform inside the box.
ad::Mat sample_parameters(const ParamBounds& bounds, int n, Rng& rng);

// Numerical solutions at the collocation grid for sampled parameters.
struct TrainingSet {
  ad::Mat params;                   // [n, d_p]
  std::vector<double> collocation;  // shared time grid
  std::vector<ad::Mat> solutions;   // per parameter, [t_col, d_y]
  int resampled = 0;                // parameters redrawn after blow-up
  std::string content_hash;

  int n_params() const { return static_cast<int>(params.rows()); }
  int t_col() const { return static_cast<int>(collocation.size()); }
};

// Integrates from the system's fixed initial state for every sampled
// parameter row. Blow-ups are resampled (and counted); more than 10%
// resampling aborts.
TrainingSet build_training_set(const OdeSystem& system, const ParamBounds& bounds, int n_params,
                               int t_col, std::uint64_t seed);

void save_training_set(const std::filesystem::path& path, const TrainingSet& ts);
std::optional<TrainingSet> load_training_set(const std::filesystem::path& path);
// Cache key over everything that determines the set's content.
std::string training_set_cache_key(const OdeSystem& system, const ParamBounds& bounds, int n_params,
                                   int t_col, std::uint64_t seed);

struct PinnTrainConfig {
  double alpha = 1.0;
  double beta = 0.0;
  int n_params = 1000;
  int t_col = 101;
  int batch = 10000;
  double lr = 5e-4;
  int epochs = 30000;
  std::uint64_t seed = 0;
  std::vector<int> hyper_hidden = {64, 64, 64};
  std::vector<int> main_hidden = {32, 32};
  int log_every = 100;
  int fidelity_draws = 20;
  double fidelity_threshold = 0.05;
};

// The trained emulator: hypernetwork weights plus both architectures and the
// input normalizations (p over the bounds box, t over [0, horizon], both to
// [-1, 1]).
struct HyperPinnModel {
  std::string system_name;
  bool log_space = false;
  double horizon = 0.0;
  MlpSpec hyper_spec;  // d_p -> main parameter count
  MlpSpec main_spec;   // 1 -> d_y
  Vec theta_h;
  ParamBounds bounds;
  nlohmann::json metadata;

  int dim_p() const { return hyper_spec.input_dim; }
  int dim_y() const { return main_spec.output_dim; }
};

// theta_m = h((p - mid)/halfwidth; theta_h); warns on stderr when p leaves
// the training box.
Vec emit_weights(const HyperPinnModel& model, const Vec& p);

// Main network evaluated at normalized times 2t/T - 1; rows in grid order.
ad::Mat main_forward(const Vec& theta_m, const MlpSpec& main_spec, double horizon,
                     const std::vector<double>& times);

// One emit_weights then main_forward; log-space models return natural-scale
// states. Times must lie within [0, horizon].
Trajectory solve_trajectory(const HyperPinnModel& model, const Vec& p,
                            const std::vector<double>& times);

// Batch of (parameter index, collocation index) pairs.
using PinnBatch = std::vector<std::pair<int, int>>;

// Mean over the batch of squared solution mismatch (Euclidean norm squared).
double loss_data(const HyperPinnModel& model, const TrainingSet& ts, const PinnBatch& batch);
// Mean over the batch of squared residual || d/dt m - f(m, p) ||^2, with f
// applied to the emulator's own output.
double loss_physics(const HyperPinnModel& model, const OdeSystem& system, const TrainingSet& ts,
                    const PinnBatch& batch);

// Losses plus d(total)/d(theta_h); exposed for gradient verification.
struct PinnLossGrad {
  double total, data, physics;
  Vec grad_theta_h;
};
PinnLossGrad pinn_loss_grad(const HyperPinnModel& model, const OdeSystem& system,
                            const TrainingSet& ts, const PinnBatch& batch, double alpha,
                            double beta);

struct PinnHistoryRow {
  int epoch;
  double data, physics, total;
};

struct PinnTrainResult {
  HyperPinnModel model;
  std::vector<PinnHistoryRow> history;
};

// Adam on the weighted loss over stratified minibatches: each epoch every
// parameter row contributes batch/n_params fresh collocation points drawn
// without replacement. With beta == 0 the physics subgraph is not built.
PinnTrainResult train_hyperpinn(const OdeSystem& system, const ParamBounds& bounds,
                                const TrainingSet& ts, const PinnTrainConfig& config);

// Median per-component RMSE of solve() against RK4 over uniformly drawn
// parameters; the post-training fidelity check stored in model metadata.
std::vector<double> solver_fidelity(const HyperPinnModel& model, const OdeSystem& system,
                                    int draws, std::uint64_t seed);

nlohmann::json model_to_json(const HyperPinnModel& model);
HyperPinnModel model_from_json(const nlohmann::json& j);
void save_model(const std::filesystem::path& path, const HyperPinnModel& model);
HyperPinnModel load_model(const std::filesystem::path& path);

}  // namespace sigmoid
