#pragma once

#include "sigmoid/datagen.hpp"
#include "sigmoid/hyperpinn.hpp"
#include "sigmoid/mlp.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace sigmoid {

struct WganConfig {
  int noise_dim = 32;
  double lambda_d = 10.0;
  double lambda_e = 1.0;
  double lr = 1e-5;
  double beta1 = 0.0;
  double beta2 = 0.9;
  int epochs = 100000;
  int critic_steps = 5;
  std::uint64_t seed = 0;
  int terminal_draws = 10000;
  int history_every = 100;
  std::vector<int> gp_hidden = {64, 64, 64};
  std::vector<int> ge_hidden = {64, 64, 64};
  std::vector<int> d_hidden = {128, 128, 128};
  double divergence_guard = 1e6;
};

// Parameter generator, noise generator, discriminator (all tanh MLPs).
struct GanNets {
  MlpSpec gp_spec, ge_spec, d_spec;
  MlpWeights gp, ge, d;
};

GanNets init_gan_nets(const WganConfig& cfg, int d_p, int flat_dim, Rng& rng);

// Latents with their pushforwards; fakes[n] = emulator(p[n]) masked flat + e[n].
struct GeneratedBatch {
  ad::Mat zp, ze;     // [N, noise_dim]
  ad::Mat params;     // [N, d_p], strictly inside the bounds box
  ad::Mat noise;      // [N, flat_dim]
  ad::Mat fakes;      // [N, flat_dim]
};

struct GanHistoryRow {
  int epoch;
  double loss_g, loss_d, loss_e, gp_term;
};

struct InferenceResult {
  std::string system_name;
  std::vector<std::string> param_names;
  GanNets nets;
  WganConfig config;
  ad::Mat param_draws;       // [M, d_p] terminal parameter sample
  ad::Mat noise_draws;       // [M, flat_dim] terminal noise sample
  Eigen::VectorXd noise_mean, noise_var;  // per flat (component, time) entry
  std::vector<GanHistoryRow> history;
  std::uint64_t sample_seed = 0;
};

// i.i.d. standard normal matrix.
ad::Mat sample_latent(int n, int d, Rng& rng);

// p = mid + halfwidth * tanh(raw G^p output), e = raw G^e output. The tanh
// squash keeps every generated parameter strictly inside the emulator's
// training box.
std::pair<ad::Mat, ad::Mat> generate(const GanNets& nets, const ad::Mat& zp, const ad::Mat& ze,
                                     const ParamBounds& bounds);

// Emulator solutions at the schedule, masked into flat layout, plus noise.
ad::Mat assemble_fake(const HyperPinnModel& model, const ObservationSchedule& schedule,
                      const ad::Mat& p_gen, const ad::Mat& e_gen);

// Sum over observed entries of mean(e^2) plus squared gap between the
// replicate variance of the data and the variance of the generated noise.
double loss_e(const ad::Mat& e_gen, const Dataset& dataset);

// Mean over rows of (||grad_input D(interpolation)|| - 1)^2 with fresh
// per-entry U[0,1] interpolation coefficients.
double gradient_penalty(const MlpSpec& d_spec, const MlpWeights& d_weights, const ad::Mat& reals,
                        const ad::Mat& fakes, std::uint64_t seed);

// -mean D(real) + mean D(fake) + lambda_d * penalty; fakes are constants.
double loss_discriminator(const GanNets& nets, const ad::Mat& reals, const ad::Mat& fakes,
                          double lambda_d, std::uint64_t seed);

// mean D(real) - mean D(fake) + lambda_e * L_e with freshly drawn latents.
double loss_generator(const GanNets& nets, const HyperPinnModel& model, const Dataset& dataset,
                      double lambda_e, std::uint64_t seed);

// Full-batch WGAN-GP training: per epoch, `critic_steps` discriminator
// updates on fresh latents/interpolations, then one generator update. N_G
// equals the dataset's replicate count throughout.
InferenceResult train_wgan(const HyperPinnModel& model, const Dataset& dataset,
                           const WganConfig& config);

struct GanSummary {
  Eigen::VectorXd param_mean, param_std;
  Eigen::VectorXd noise_mean, noise_var;
};

GanSummary summarize(const InferenceResult& result);

nlohmann::json result_to_json(const InferenceResult& r);
InferenceResult result_from_json(const nlohmann::json& j);
void save_result(const std::filesystem::path& path, const InferenceResult& r);
InferenceResult load_result(const std::filesystem::path& path);

// Columns `draw,<param names...>`.
std::string draws_csv(const InferenceResult& r);

}  // namespace sigmoid
