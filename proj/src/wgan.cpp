#include "sigmoid/wgan.hpp"

#include "sigmoid/csv.hpp"
#include "sigmoid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sigmoid {

using nlohmann::json;

GanNets init_gan_nets(const WganConfig& cfg, int d_p, int flat_dim, Rng& rng) {
  GanNets nets;
  nets.gp_spec = MlpSpec{cfg.noise_dim, d_p, cfg.gp_hidden};
  nets.ge_spec = MlpSpec{cfg.noise_dim, flat_dim, cfg.ge_hidden};
  nets.d_spec = MlpSpec{flat_dim, 1, cfg.d_hidden};
  nets.gp = mlp_init(nets.gp_spec, rng);
  nets.ge = mlp_init(nets.ge_spec, rng);
  nets.d = mlp_init(nets.d_spec, rng);
  return nets;
}

ad::Mat sample_latent(int n, int d, Rng& rng) {
  if (n < 1 || d < 1) throw std::invalid_argument("sample_latent: dimensions must be >= 1");
  ad::Mat z(n, d);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = rng.normal();
  return z;
}

std::pair<ad::Mat, ad::Mat> generate(const GanNets& nets, const ad::Mat& zp, const ad::Mat& ze,
                                     const ParamBounds& bounds) {
  if (zp.rows() != ze.rows()) throw std::invalid_argument("generate: latent row mismatch");
  ad::Mat raw = mlp_eval(nets.gp_spec, nets.gp, zp);
  ad::tanh_inplace(raw);
  const Vec mid = bounds.mid(), half = bounds.halfwidth();
  ad::Mat p(raw.rows(), raw.cols());
  for (Eigen::Index i = 0; i < raw.rows(); ++i)
    for (Eigen::Index j = 0; j < raw.cols(); ++j) p(i, j) = mid[j] + half[j] * raw(i, j);
  ad::Mat e = mlp_eval(nets.ge_spec, nets.ge, ze);
  return {std::move(p), std::move(e)};
}

namespace {

std::vector<double> normalized_times(const ObservationSchedule& schedule, double horizon) {
  std::vector<double> tau;
  tau.reserve(schedule.times.size());
  for (double t : schedule.times) tau.push_back(2.0 * t / horizon - 1.0);
  return tau;
}

// Flat row assembly inside a graph: emulator output m [T, d_y] -> [1, flat].
ad::NodeId flatten_masked(ad::Graph& g, ad::NodeId m, const ObservationSchedule& schedule) {
  std::vector<ad::NodeId> pieces;
  for (size_t c = 0; c < schedule.components.size(); ++c) {
    ad::NodeId col = g.slice_cols(m, schedule.components[c], 1);
    std::vector<int> obs;
    for (size_t j = 0; j < schedule.times.size(); ++j)
      if (schedule.mask[c][j]) obs.push_back(static_cast<int>(j));
    if (obs.size() != schedule.times.size()) col = g.gather_rows(col, obs);
    pieces.push_back(g.reshape(col, 1, static_cast<Eigen::Index>(obs.size())));
  }
  return pieces.size() == 1 ? pieces[0] : g.concat_cols(pieces);
}

struct GenGraph {
  ad::Graph g;
  ad::NodeId zp = -1, ze = -1;
  MlpNodes gp, ge, hyper, d;
  ad::NodeId e_gen = -1;
  ad::NodeId fakes = -1;
  ad::NodeId loss_e_node = -1;
  ad::NodeId d_fake_mean = -1;
  ad::NodeId loss_g = -1;
};

GenGraph build_generator_graph(const HyperPinnModel& model, const Dataset& dataset,
                               const GanNets& nets, const WganConfig& cfg) {
  const int n = dataset.n_replicates();
  const int flat = dataset.flat_dim();
  GenGraph gg;
  ad::Graph& g = gg.g;

  gg.zp = g.zeros(n, cfg.noise_dim);
  gg.ze = g.zeros(n, cfg.noise_dim);
  gg.gp = mlp_params(g, nets.gp);
  gg.ge = mlp_params(g, nets.ge);
  gg.hyper = mlp_params(g, mlp_unflatten(model.hyper_spec, model.theta_h));
  gg.d = mlp_params(g, nets.d);

  // tanh of the raw G^p output is exactly the normalized parameter the
  // hypernetwork expects; the natural-scale p is mid + half * tanh(raw)
  ad::NodeId p_norm = g.tanh(mlp_forward(g, nets.gp_spec, gg.gp, gg.zp));
  ad::NodeId H = mlp_forward(g, model.hyper_spec, gg.hyper, p_norm);

  ad::NodeId tau = g.value([&] {
    const auto tv = normalized_times(dataset.schedule, model.horizon);
    ad::Mat m(static_cast<Eigen::Index>(tv.size()), 1);
    for (size_t i = 0; i < tv.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = tv[i];
    return m;
  }());

  std::vector<ad::NodeId> rows;
  rows.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    ad::NodeId packed = g.slice_rows(H, i, 1);
    ad::NodeId m = mlp_forward_packed(g, model.main_spec, packed, tau);
    rows.push_back(flatten_masked(g, m, dataset.schedule));
  }
  gg.e_gen = mlp_forward(g, nets.ge_spec, gg.ge, gg.ze);
  gg.fakes = g.add(g.concat_rows(rows), gg.e_gen);

  ad::NodeId real = g.value(dataset.replicates);
  ad::NodeId d_real = mlp_forward(g, nets.d_spec, gg.d, real);
  ad::NodeId d_fake = mlp_forward(g, nets.d_spec, gg.d, gg.fakes);
  gg.d_fake_mean = g.mean(d_fake);

  // L_e: sum over entries of mean_n e^2, plus squared variance gap
  ad::NodeId term1 = g.sum(g.col_mean(g.square(gg.e_gen)));
  ad::NodeId mu = g.col_mean(gg.e_gen);
  ad::NodeId centered = g.sub(gg.e_gen, g.broadcast(mu, n, flat));
  ad::NodeId var_e = g.scale(g.col_sum(g.square(centered)), 1.0 / (n - 1.0));
  ad::NodeId var_obs = g.value([&] {
    ad::Mat v(1, flat);
    v.row(0) = dataset.replicate_variance().transpose();
    return v;
  }());
  ad::NodeId term2 = g.sum(g.square(g.sub(var_obs, var_e)));
  gg.loss_e_node = g.add(term1, term2);

  gg.loss_g = g.add(g.sub(g.mean(d_real), gg.d_fake_mean), g.scale(gg.loss_e_node, cfg.lambda_e));
  return gg;
}

struct DiscGraph {
  ad::Graph g;
  ad::NodeId real = -1, fake = -1, gamma = -1;
  MlpNodes d;
  ad::NodeId gp_term = -1;
  ad::NodeId d_real_mean = -1, d_fake_mean = -1;
  ad::NodeId loss_d = -1;
};

DiscGraph build_discriminator_graph(const MlpSpec& d_spec, const MlpWeights& d_weights, int n,
                                    int flat, double lambda_d) {
  DiscGraph dg;
  ad::Graph& g = dg.g;
  dg.real = g.zeros(n, flat);
  dg.fake = g.zeros(n, flat);
  dg.gamma = g.zeros(n, flat);
  dg.d = mlp_params(g, d_weights);

  ad::NodeId one_minus = g.add_scalar(g.scale(dg.gamma, -1.0), 1.0);
  ad::NodeId interp = g.add(g.mul(dg.gamma, dg.fake), g.mul(one_minus, dg.real));

  ad::NodeId d_real = mlp_forward(g, d_spec, dg.d, dg.real);
  ad::NodeId d_fake = mlp_forward(g, d_spec, dg.d, dg.fake);
  ad::NodeId d_interp = mlp_forward(g, d_spec, dg.d, interp);

  ad::NodeId norm = input_gradient_norm(g, d_interp, interp);
  dg.gp_term = g.mean(g.square(g.add_scalar(norm, -1.0)));
  dg.d_real_mean = g.mean(d_real);
  dg.d_fake_mean = g.mean(d_fake);
  dg.loss_d = g.add(g.sub(dg.d_fake_mean, dg.d_real_mean), g.scale(dg.gp_term, lambda_d));
  return dg;
}

void fill_uniform(ad::Mat& m, Rng& rng) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform();
}

}  // namespace

ad::Mat assemble_fake(const HyperPinnModel& model, const ObservationSchedule& schedule,
                      const ad::Mat& p_gen, const ad::Mat& e_gen) {
  if (p_gen.cols() != model.dim_p()) throw std::invalid_argument("assemble_fake: parameter width");
  if (p_gen.rows() != e_gen.rows()) throw std::invalid_argument("assemble_fake: row mismatch");
  try {
    validate_grid(schedule.times, model.horizon);
  } catch (const std::exception& e) {
    throw ArtifactMismatchError(std::string("assemble_fake: schedule does not fit the model: ") +
                                e.what());
  }
  const auto entries = schedule.flat_entries();
  if (e_gen.cols() != static_cast<Eigen::Index>(entries.size()))
    throw std::invalid_argument("assemble_fake: noise width does not match schedule");

  ad::Mat fakes(p_gen.rows(), e_gen.cols());
  for (Eigen::Index i = 0; i < p_gen.rows(); ++i) {
    Vec theta = emit_weights(model, p_gen.row(i).transpose());
    ad::Mat m = main_forward(theta, model.main_spec, model.horizon, schedule.times);
    for (size_t k = 0; k < entries.size(); ++k) {
      const auto [c, j] = entries[k];
      fakes(i, static_cast<Eigen::Index>(k)) = m(j, schedule.components[c]);
    }
  }
  fakes += e_gen;
  return fakes;
}

double loss_e(const ad::Mat& e_gen, const Dataset& dataset) {
  if (e_gen.rows() < 2) throw std::invalid_argument("loss_e: needs at least 2 generated sets");
  if (e_gen.cols() != dataset.flat_dim())
    throw std::invalid_argument("loss_e: noise width does not match dataset");
  const Eigen::Index n = e_gen.rows();
  const Eigen::VectorXd var_obs = dataset.replicate_variance();
  double term1 = 0.0, term2 = 0.0;
  for (Eigen::Index c = 0; c < e_gen.cols(); ++c) {
    const auto col = e_gen.col(c);
    const double mean_sq = col.array().square().mean();
    const double mu = col.mean();
    const double var = (col.array() - mu).square().sum() / static_cast<double>(n - 1);
    term1 += mean_sq;
    const double gap = var_obs[c] - var;
    term2 += gap * gap;
  }
  return term1 + term2;
}

double gradient_penalty(const MlpSpec& d_spec, const MlpWeights& d_weights, const ad::Mat& reals,
                        const ad::Mat& fakes, std::uint64_t seed) {
  if (reals.rows() != fakes.rows() || reals.cols() != fakes.cols())
    throw std::invalid_argument("gradient_penalty: real/fake shape mismatch");
  DiscGraph dg = build_discriminator_graph(d_spec, d_weights, static_cast<int>(reals.rows()),
                                           static_cast<int>(reals.cols()), 0.0);
  dg.g.set_value(dg.real, reals);
  dg.g.set_value(dg.fake, fakes);
  ad::Mat gamma(reals.rows(), reals.cols());
  Rng rng(seed);
  fill_uniform(gamma, rng);
  dg.g.set_value(dg.gamma, gamma);
  dg.g.forward();
  return dg.g.val(dg.gp_term)(0, 0);
}

double loss_discriminator(const GanNets& nets, const ad::Mat& reals, const ad::Mat& fakes,
                          double lambda_d, std::uint64_t seed) {
  if (reals.rows() != fakes.rows() || reals.cols() != fakes.cols())
    throw std::invalid_argument("loss_discriminator: real/fake shape mismatch");
  DiscGraph dg = build_discriminator_graph(nets.d_spec, nets.d, static_cast<int>(reals.rows()),
                                           static_cast<int>(reals.cols()), lambda_d);
  dg.g.set_value(dg.real, reals);
  dg.g.set_value(dg.fake, fakes);
  ad::Mat gamma(reals.rows(), reals.cols());
  Rng rng(seed);
  fill_uniform(gamma, rng);
  dg.g.set_value(dg.gamma, gamma);
  dg.g.forward();
  return dg.g.val(dg.loss_d)(0, 0);
}

double loss_generator(const GanNets& nets, const HyperPinnModel& model, const Dataset& dataset,
                      double lambda_e, std::uint64_t seed) {
  Rng rng(seed);
  const int n = dataset.n_replicates();
  ad::Mat zp = sample_latent(n, nets.gp_spec.input_dim, rng);
  ad::Mat ze = sample_latent(n, nets.ge_spec.input_dim, rng);
  auto [p_gen, e_gen] = generate(nets, zp, ze, model.bounds);
  ad::Mat fakes = assemble_fake(model, dataset.schedule, p_gen, e_gen);
  const double d_real = mlp_eval(nets.d_spec, nets.d, dataset.replicates).mean();
  const double d_fake = mlp_eval(nets.d_spec, nets.d, fakes).mean();
  return d_real - d_fake + lambda_e * loss_e(e_gen, dataset);
}

InferenceResult train_wgan(const HyperPinnModel& model, const Dataset& dataset,
                           const WganConfig& config) {
  if (model.system_name != dataset.system_name)
    throw ArtifactMismatchError("train_wgan: model is for '" + model.system_name +
                                "' but dataset is for '" + dataset.system_name + "'");
  const int n = dataset.n_replicates();
  const int flat = dataset.flat_dim();
  if (n < 2) throw ConfigError("train_wgan: needs at least 2 replicates");
  try {
    validate_grid(dataset.schedule.times, model.horizon);
  } catch (const std::exception& e) {
    throw ArtifactMismatchError(std::string("train_wgan: schedule/model horizon mismatch: ") +
                                e.what());
  }

  Rng rng(config.seed);
  GanNets nets = init_gan_nets(config, model.dim_p(), flat, rng);

  GenGraph gen = build_generator_graph(model, dataset, nets, config);
  DiscGraph disc = build_discriminator_graph(nets.d_spec, nets.d, n, flat, config.lambda_d);

  ad::Adam opt_d({config.lr, config.beta1, config.beta2, 1e-8});
  ad::Adam opt_g({config.lr, config.beta1, config.beta2, 1e-8});

  std::vector<ad::Mat*> d_params;
  for (ad::NodeId id : disc.d.all()) d_params.push_back(&disc.g.value_mut(id));
  std::vector<ad::Mat*> g_params;
  for (ad::NodeId id : gen.gp.all()) g_params.push_back(&gen.g.value_mut(id));
  for (ad::NodeId id : gen.ge.all()) g_params.push_back(&gen.g.value_mut(id));

  ad::Mat real_perm(n, flat), gamma(n, flat);
  std::vector<int> perm(static_cast<size_t>(n));

  InferenceResult result;
  double last_loss_d = 0.0, last_gp = 0.0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (int s = 0; s < config.critic_steps; ++s) {
      gen.g.set_value(gen.zp, sample_latent(n, config.noise_dim, rng));
      gen.g.set_value(gen.ze, sample_latent(n, config.noise_dim, rng));
      gen.g.forward();

      std::iota(perm.begin(), perm.end(), 0);
      for (int i = n - 1; i > 0; --i)
        std::swap(perm[static_cast<size_t>(i)],
                  perm[rng.next_u64() % static_cast<std::uint64_t>(i + 1)]);
      for (int i = 0; i < n; ++i) real_perm.row(i) = dataset.replicates.row(perm[static_cast<size_t>(i)]);
      fill_uniform(gamma, rng);

      disc.g.set_value(disc.real, real_perm);
      disc.g.set_value(disc.fake, gen.g.val(gen.fakes));
      disc.g.set_value(disc.gamma, gamma);
      disc.g.forward();

      last_loss_d = disc.g.val(disc.loss_d)(0, 0);
      last_gp = disc.g.val(disc.gp_term)(0, 0);
      const double dr = disc.g.val(disc.d_real_mean)(0, 0);
      const double df = disc.g.val(disc.d_fake_mean)(0, 0);
      if (!std::isfinite(last_loss_d))
        throw NumericalError("wgan: non-finite discriminator loss at epoch " + std::to_string(epoch));
      if (std::abs(dr) > config.divergence_guard || std::abs(df) > config.divergence_guard)
        throw NumericalError("wgan: discriminator score diverged at epoch " + std::to_string(epoch));

      disc.g.backward(disc.loss_d);
      std::vector<const ad::Mat*> d_grads;
      for (ad::NodeId id : disc.d.all()) d_grads.push_back(&disc.g.adjoint_ref(id));
      opt_d.step(d_params, d_grads);
    }

    // generator sees the discriminator as updated by the critic block
    {
      const auto src = disc.d.all();
      const auto dst = gen.d.all();
      for (size_t i = 0; i < src.size(); ++i) gen.g.set_value(dst[i], disc.g.val(src[i]));
    }

    gen.g.set_value(gen.zp, sample_latent(n, config.noise_dim, rng));
    gen.g.set_value(gen.ze, sample_latent(n, config.noise_dim, rng));
    gen.g.forward();
    const double loss_g_val = gen.g.val(gen.loss_g)(0, 0);
    if (!std::isfinite(loss_g_val))
      throw NumericalError("wgan: non-finite generator loss at epoch " + std::to_string(epoch));
    gen.g.backward(gen.loss_g);
    std::vector<const ad::Mat*> g_grads;
    for (ad::NodeId id : gen.gp.all()) g_grads.push_back(&gen.g.adjoint_ref(id));
    for (ad::NodeId id : gen.ge.all()) g_grads.push_back(&gen.g.adjoint_ref(id));
    opt_g.step(g_params, g_grads);

    if (epoch % config.history_every == 0 || epoch + 1 == config.epochs) {
      result.history.push_back(
          {epoch, loss_g_val, last_loss_d, gen.g.val(gen.loss_e_node)(0, 0), last_gp});
    }
  }

  // final weights back out of the graphs
  auto collect = [](const ad::Graph& g, const MlpNodes& nodes) {
    MlpWeights w;
    for (size_t l = 0; l < nodes.W.size(); ++l) {
      w.W.push_back(g.val(nodes.W[l]));
      w.b.push_back(g.val(nodes.b[l]));
    }
    return w;
  };
  nets.gp = collect(gen.g, gen.gp);
  nets.ge = collect(gen.g, gen.ge);
  nets.d = collect(disc.g, disc.d);

  result.system_name = dataset.system_name;
  result.nets = nets;
  result.config = config;
  result.sample_seed = derive_stage_seed(config.seed, "terminal-sample");
  Rng sample_rng(result.sample_seed);
  ad::Mat zp = sample_latent(config.terminal_draws, config.noise_dim, sample_rng);
  ad::Mat ze = sample_latent(config.terminal_draws, config.noise_dim, sample_rng);
  auto [p_draws, e_draws] = generate(nets, zp, ze, model.bounds);
  result.param_draws = std::move(p_draws);
  result.noise_draws = std::move(e_draws);
  result.noise_mean = result.noise_draws.colwise().mean();
  result.noise_var.resize(flat);
  for (Eigen::Index c = 0; c < flat; ++c)
    result.noise_var[c] = (result.noise_draws.col(c).array() - result.noise_mean[c]).square().sum() /
                          static_cast<double>(result.noise_draws.rows() - 1);
  return result;
}

GanSummary summarize(const InferenceResult& result) {
  GanSummary s;
  const ad::Mat& p = result.param_draws;
  if (p.rows() < 1) throw std::invalid_argument("summarize: empty parameter sample");
  s.param_mean = p.colwise().mean();
  s.param_std.resize(p.cols());
  for (Eigen::Index c = 0; c < p.cols(); ++c) {
    if (p.rows() == 1) {
      s.param_std[c] = 0.0;
    } else {
      s.param_std[c] = std::sqrt((p.col(c).array() - s.param_mean[c]).square().sum() /
                                 static_cast<double>(p.rows() - 1));
    }
  }
  s.noise_mean = result.noise_mean;
  s.noise_var = result.noise_var;
  return s;
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

json weights_to_json(const MlpWeights& w) {
  json layers = json::array();
  for (size_t l = 0; l < w.W.size(); ++l)
    layers.push_back({{"W", mat_to_json(w.W[l])}, {"b", mat_to_json(w.b[l])}});
  return layers;
}

MlpWeights weights_from_json(const json& j) {
  MlpWeights w;
  for (const auto& layer : j) {
    w.W.push_back(mat_from_json(layer.at("W")));
    w.b.push_back(mat_from_json(layer.at("b")));
  }
  return w;
}

json spec_to_json(const MlpSpec& s) {
  return {{"input_dim", s.input_dim}, {"output_dim", s.output_dim}, {"hidden", s.hidden}};
}

MlpSpec spec_from_json(const json& j) {
  MlpSpec s;
  s.input_dim = j.at("input_dim").get<int>();
  s.output_dim = j.at("output_dim").get<int>();
  s.hidden = j.at("hidden").get<std::vector<int>>();
  return s;
}

json config_to_json(const WganConfig& c) {
  return {{"noise_dim", c.noise_dim},
          {"lambda_d", c.lambda_d},
          {"lambda_e", c.lambda_e},
          {"lr", c.lr},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"epochs", c.epochs},
          {"critic_steps", c.critic_steps},
          {"seed", c.seed},
          {"terminal_draws", c.terminal_draws},
          {"history_every", c.history_every},
          {"gp_hidden", c.gp_hidden},
          {"ge_hidden", c.ge_hidden},
          {"d_hidden", c.d_hidden},
          {"divergence_guard", c.divergence_guard}};
}

WganConfig config_from_json(const json& j) {
  WganConfig c;
  c.noise_dim = j.at("noise_dim").get<int>();
  c.lambda_d = j.at("lambda_d").get<double>();
  c.lambda_e = j.at("lambda_e").get<double>();
  c.lr = j.at("lr").get<double>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.epochs = j.at("epochs").get<int>();
  c.critic_steps = j.at("critic_steps").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.terminal_draws = j.at("terminal_draws").get<int>();
  c.history_every = j.at("history_every").get<int>();
  c.gp_hidden = j.at("gp_hidden").get<std::vector<int>>();
  c.ge_hidden = j.at("ge_hidden").get<std::vector<int>>();
  c.d_hidden = j.at("d_hidden").get<std::vector<int>>();
  c.divergence_guard = j.at("divergence_guard").get<double>();
  return c;
}

}  // namespace

json result_to_json(const InferenceResult& r) {
  json j;
  j["format"] = "sigmoid-inference-1";
  j["system_name"] = r.system_name;
  j["param_names"] = r.param_names;
  j["config"] = config_to_json(r.config);
  j["sample_seed"] = r.sample_seed;
  j["nets"] = {{"gp_spec", spec_to_json(r.nets.gp_spec)},
               {"ge_spec", spec_to_json(r.nets.ge_spec)},
               {"d_spec", spec_to_json(r.nets.d_spec)},
               {"gp", weights_to_json(r.nets.gp)},
               {"ge", weights_to_json(r.nets.ge)},
               {"d", weights_to_json(r.nets.d)}};
  json hist = json::array();
  for (const auto& h : r.history)
    hist.push_back({{"epoch", h.epoch},
                    {"loss_g", h.loss_g},
                    {"loss_d", h.loss_d},
                    {"loss_e", h.loss_e},
                    {"gp_term", h.gp_term}});
  j["history"] = std::move(hist);
  j["param_draws"] = mat_to_json(r.param_draws);
  j["noise_draws"] = mat_to_json(r.noise_draws);
  std::vector<double> nm(r.noise_mean.data(), r.noise_mean.data() + r.noise_mean.size());
  std::vector<double> nv(r.noise_var.data(), r.noise_var.data() + r.noise_var.size());
  j["noise_mean"] = nm;
  j["noise_var"] = nv;
  return j;
}

InferenceResult result_from_json(const json& j) {
  if (j.value("format", "") != std::string("sigmoid-inference-1"))
    throw ArtifactMismatchError("inference result file has unknown format");
  InferenceResult r;
  r.system_name = j.at("system_name").get<std::string>();
  r.param_names = j.at("param_names").get<std::vector<std::string>>();
  r.config = config_from_json(j.at("config"));
  r.sample_seed = j.at("sample_seed").get<std::uint64_t>();
  const auto& nets = j.at("nets");
  r.nets.gp_spec = spec_from_json(nets.at("gp_spec"));
  r.nets.ge_spec = spec_from_json(nets.at("ge_spec"));
  r.nets.d_spec = spec_from_json(nets.at("d_spec"));
  r.nets.gp = weights_from_json(nets.at("gp"));
  r.nets.ge = weights_from_json(nets.at("ge"));
  r.nets.d = weights_from_json(nets.at("d"));
  for (const auto& h : j.at("history"))
    r.history.push_back({h.at("epoch").get<int>(), h.at("loss_g").get<double>(),
                         h.at("loss_d").get<double>(), h.at("loss_e").get<double>(),
                         h.at("gp_term").get<double>()});
  r.param_draws = mat_from_json(j.at("param_draws"));
  r.noise_draws = mat_from_json(j.at("noise_draws"));
  const auto nm = j.at("noise_mean").get<std::vector<double>>();
  const auto nv = j.at("noise_var").get<std::vector<double>>();
  r.noise_mean = Eigen::Map<const Eigen::VectorXd>(nm.data(), static_cast<Eigen::Index>(nm.size()));
  r.noise_var = Eigen::Map<const Eigen::VectorXd>(nv.data(), static_cast<Eigen::Index>(nv.size()));
  return r;
}

void save_result(const std::filesystem::path& path, const InferenceResult& r) {
  write_text_file(path, result_to_json(r).dump());
}

InferenceResult load_result(const std::filesystem::path& path) {
  return result_from_json(json::parse(read_text_file(path)));
}

std::string draws_csv(const InferenceResult& r) {
  std::vector<std::string> header = {"draw"};
  header.insert(header.end(), r.param_names.begin(), r.param_names.end());
  std::string out = csv_join(header);
  for (Eigen::Index i = 0; i < r.param_draws.rows(); ++i) {
    std::vector<std::string> row = {std::to_string(i)};
    for (Eigen::Index j = 0; j < r.param_draws.cols(); ++j)
      row.push_back(format_double(r.param_draws(i, j)));
    out += csv_join(row);
  }
  return out;
}

}  // namespace sigmoid
