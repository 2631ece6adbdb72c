#include "sigmoid/hyperpinn.hpp"

#include "sigmoid/csv.hpp"
#include "sigmoid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>

namespace sigmoid {

using nlohmann::json;

ParamBounds::ParamBounds(Vec lo_, Vec hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
  if (lo.size() != hi.size()) throw std::invalid_argument("bounds: lo/hi size mismatch");
  for (Eigen::Index i = 0; i < lo.size(); ++i)
    if (!(lo[i] < hi[i]))
      throw std::invalid_argument("bounds: lo must be strictly below hi in every component");
}

ParamBounds default_bounds(const OdeSystem& system) {
  Vec lo = 0.5 * system.true_params;
  Vec hi = 1.5 * system.true_params;
  for (Eigen::Index i = 0; i < lo.size(); ++i)
    if (lo[i] > hi[i]) std::swap(lo[i], hi[i]);  // negative true parameters
  return ParamBounds(lo, hi);
}

ad::Mat sample_parameters(const ParamBounds& bounds, int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_parameters: n must be >= 1");
  ad::Mat out(n, bounds.dim());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < bounds.dim(); ++j) out(i, j) = rng.uniform(bounds.lo[j], bounds.hi[j]);
  return out;
}

TrainingSet build_training_set(const OdeSystem& system, const ParamBounds& bounds, int n_params,
                               int t_col, std::uint64_t seed) {
  if (bounds.dim() != system.dim_p)
    throw std::invalid_argument("build_training_set: bounds dimension mismatch");
  if (n_params < 1 || t_col < 2) throw std::invalid_argument("build_training_set: bad sizes");

  TrainingSet ts;
  ts.collocation = uniform_grid(0.0, system.horizon, t_col);
  const int substeps = substeps_for(system, ts.collocation[1] - ts.collocation[0]);
  ts.params.resize(n_params, system.dim_p);
  ts.solutions.reserve(n_params);

  Rng rng(seed);
  int resampled = 0;
  const int resample_budget = std::max(1, n_params / 10);
  for (int i = 0; i < n_params; ++i) {
    for (;;) {
      Vec p(system.dim_p);
      for (int j = 0; j < system.dim_p; ++j) p[j] = rng.uniform(bounds.lo[j], bounds.hi[j]);
      try {
        Trajectory traj = integrate_rk4(system, p, system.initial_state, ts.collocation, substeps);
        ts.params.row(i) = p.transpose();
        ts.solutions.push_back(std::move(traj.states));
        break;
      } catch (const NumericalError&) {
        ++resampled;
        std::fprintf(stderr, "[trainset] %s: blow-up for sampled parameter, resampling (%d so far)\n",
                     system.name.c_str(), resampled);
        if (resampled > resample_budget)
          throw NumericalError(system.name + ": more than 10% of training parameters blew up (" +
                               std::to_string(resampled) + " resamples for " +
                               std::to_string(n_params) + " parameters); shrink the bounds box");
      }
    }
  }
  ts.resampled = resampled;

  std::string bytes(reinterpret_cast<const char*>(ts.params.data()),
                    sizeof(double) * static_cast<size_t>(ts.params.size()));
  for (const auto& sol : ts.solutions)
    bytes.append(reinterpret_cast<const char*>(sol.data()), sizeof(double) * static_cast<size_t>(sol.size()));
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  ts.content_hash = hex;
  return ts;
}

std::string training_set_cache_key(const OdeSystem& system, const ParamBounds& bounds, int n_params,
                                   int t_col, std::uint64_t seed) {
  std::string key = system.name;
  for (Eigen::Index i = 0; i < bounds.lo.size(); ++i)
    key += "|" + format_double(bounds.lo[i]) + ":" + format_double(bounds.hi[i]);
  key += "|n" + std::to_string(n_params) + "|t" + std::to_string(t_col) + "|s" + std::to_string(seed);
  key += "|h" + format_double(system.horizon) + "|ss" + format_double(system.substeps_per_unit);
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(fnv1a64(key)));
  return hex;
}

namespace {
constexpr char kTrainSetMagic[8] = {'S', 'G', 'T', 'S', 'E', 'T', '0', '1'};
}

void save_training_set(const std::filesystem::path& path, const TrainingSet& ts) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write training set: " + path.string());
  out.write(kTrainSetMagic, 8);
  const std::int64_t n = ts.n_params(), t = ts.t_col(), dp = ts.params.cols(),
                     dy = ts.solutions.empty() ? 0 : ts.solutions[0].cols();
  for (std::int64_t v : {n, t, dp, dy}) out.write(reinterpret_cast<const char*>(&v), 8);
  out.write(reinterpret_cast<const char*>(ts.params.data()),
            static_cast<std::streamsize>(sizeof(double) * ts.params.size()));
  out.write(reinterpret_cast<const char*>(ts.collocation.data()),
            static_cast<std::streamsize>(sizeof(double) * ts.collocation.size()));
  for (const auto& sol : ts.solutions)
    out.write(reinterpret_cast<const char*>(sol.data()),
              static_cast<std::streamsize>(sizeof(double) * sol.size()));
  const std::int32_t resampled = ts.resampled;
  out.write(reinterpret_cast<const char*>(&resampled), 4);
  out.write(ts.content_hash.data(), static_cast<std::streamsize>(ts.content_hash.size()));
}

std::optional<TrainingSet> load_training_set(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kTrainSetMagic, 8) != 0) return std::nullopt;
  std::int64_t n, t, dp, dy;
  for (std::int64_t* v : {&n, &t, &dp, &dy}) in.read(reinterpret_cast<char*>(v), 8);
  if (!in || n < 1 || t < 2 || dp < 1 || dy < 1) return std::nullopt;
  TrainingSet ts;
  ts.params.resize(n, dp);
  in.read(reinterpret_cast<char*>(ts.params.data()),
          static_cast<std::streamsize>(sizeof(double) * ts.params.size()));
  ts.collocation.resize(static_cast<size_t>(t));
  in.read(reinterpret_cast<char*>(ts.collocation.data()),
          static_cast<std::streamsize>(sizeof(double) * ts.collocation.size()));
  for (std::int64_t i = 0; i < n; ++i) {
    ad::Mat sol(t, dy);
    in.read(reinterpret_cast<char*>(sol.data()), static_cast<std::streamsize>(sizeof(double) * sol.size()));
    ts.solutions.push_back(std::move(sol));
  }
  std::int32_t resampled = 0;
  in.read(reinterpret_cast<char*>(&resampled), 4);
  ts.resampled = resampled;
  char hex[17] = {0};
  in.read(hex, 16);
  ts.content_hash = hex;
  return in ? std::optional<TrainingSet>(std::move(ts)) : std::nullopt;
}

namespace {

// p normalized into [-1, 1] over the bounds box.
ad::Mat normalize_params(const ParamBounds& bounds, const ad::Mat& params) {
  const Vec mid = bounds.mid(), half = bounds.halfwidth();
  ad::Mat out = params;
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) = (out(i, j) - mid[j]) / half[j];
  return out;
}

double normalize_time(double t, double horizon) { return 2.0 * t / horizon - 1.0; }

// One parameter group inside the loss graph.
struct PinnGroup {
  Vec p;
  int k = 0;
  ad::NodeId t_leaf = -1;  // [k,1] normalized times
  ad::NodeId y_leaf = -1;  // [k,d_y] target states
};

struct PinnGraph {
  ad::Graph g;
  MlpNodes hyper;
  std::vector<PinnGroup> groups;
  ad::NodeId data_loss = -1;
  ad::NodeId phys_loss = -1;
  ad::NodeId total = -1;
  int total_points = 0;
};

PinnGraph build_pinn_graph(const OdeSystem& system, const MlpSpec& hyper_spec,
                           const MlpSpec& main_spec, const MlpWeights& hyper_w,
                           const ParamBounds& bounds, std::vector<PinnGroup> groups, double alpha,
                           double beta) {
  PinnGraph pg;
  pg.groups = std::move(groups);
  ad::Graph& g = pg.g;

  ad::Mat pmat(static_cast<Eigen::Index>(pg.groups.size()), system.dim_p);
  for (size_t i = 0; i < pg.groups.size(); ++i) pmat.row(static_cast<Eigen::Index>(i)) = pg.groups[i].p.transpose();
  ad::NodeId p_norm = g.value(normalize_params(bounds, pmat));

  pg.hyper = mlp_params(g, hyper_w);
  ad::NodeId H = mlp_forward(g, hyper_spec, pg.hyper, p_norm);

  const bool physics = beta != 0.0;
  std::vector<ad::NodeId> data_terms, phys_terms;
  pg.total_points = 0;
  for (size_t i = 0; i < pg.groups.size(); ++i) {
    PinnGroup& grp = pg.groups[i];
    pg.total_points += grp.k;
    grp.t_leaf = g.zeros(grp.k, 1);
    grp.y_leaf = g.zeros(grp.k, system.dim_y);
    ad::NodeId row = g.slice_rows(H, static_cast<int>(i), 1);
    ad::NodeId m = mlp_forward_packed(g, main_spec, row, grp.t_leaf);
    data_terms.push_back(g.sum(g.square(g.sub(m, grp.y_leaf))));
    if (physics) {
      // d/dt = d/dtau * 2/T because the main net sees normalized time
      ad::NodeId dm = g.scale(g.tangent(m, grp.t_leaf), 2.0 / system.horizon);
      ad::NodeId f = system.rhs_graph(g, m, grp.p);
      phys_terms.push_back(g.sum(g.square(g.sub(dm, f))));
    }
  }
  const double inv_points = 1.0 / static_cast<double>(pg.total_points);
  pg.data_loss = g.scale(g.sum(g.concat_rows(data_terms)), inv_points);
  if (physics) {
    pg.phys_loss = g.scale(g.sum(g.concat_rows(phys_terms)), inv_points);
    pg.total = g.add(g.scale(pg.data_loss, alpha), g.scale(pg.phys_loss, beta));
  } else {
    pg.total = g.scale(pg.data_loss, alpha);
  }
  return pg;
}

void bind_group(PinnGraph& pg, size_t gi, const TrainingSet& ts, int param_index,
                const std::vector<int>& col_idx, double horizon) {
  PinnGroup& grp = pg.groups[gi];
  ad::Mat& t = pg.g.value_mut(grp.t_leaf);
  ad::Mat& y = pg.g.value_mut(grp.y_leaf);
  const ad::Mat& sol = ts.solutions[static_cast<size_t>(param_index)];
  for (int r = 0; r < grp.k; ++r) {
    t(r, 0) = normalize_time(ts.collocation[static_cast<size_t>(col_idx[static_cast<size_t>(r)])], horizon);
    y.row(r) = sol.row(col_idx[static_cast<size_t>(r)]);
  }
}

// Groups a free-form batch by parameter index, preserving order of first use.
std::vector<std::pair<int, std::vector<int>>> group_batch(const PinnBatch& batch) {
  if (batch.empty()) throw std::invalid_argument("pinn loss: empty batch");
  std::vector<std::pair<int, std::vector<int>>> grouped;
  std::map<int, size_t> where;
  for (const auto& [pi, ci] : batch) {
    auto it = where.find(pi);
    if (it == where.end()) {
      where[pi] = grouped.size();
      grouped.push_back({pi, {ci}});
    } else {
      grouped[it->second].second.push_back(ci);
    }
  }
  return grouped;
}

PinnGraph build_batch_graph(const HyperPinnModel& model, const OdeSystem& system,
                            const TrainingSet& ts, const PinnBatch& batch, double alpha,
                            double beta) {
  const auto grouped = group_batch(batch);
  std::vector<PinnGroup> groups;
  for (const auto& [pi, cols] : grouped) {
    if (pi < 0 || pi >= ts.n_params()) throw std::invalid_argument("pinn loss: parameter index out of range");
    for (int c : cols)
      if (c < 0 || c >= ts.t_col()) throw std::invalid_argument("pinn loss: collocation index out of range");
    PinnGroup grp;
    grp.p = ts.params.row(pi).transpose();
    grp.k = static_cast<int>(cols.size());
    groups.push_back(std::move(grp));
  }
  MlpWeights hyper_w = mlp_unflatten(model.hyper_spec, model.theta_h);
  PinnGraph pg = build_pinn_graph(system, model.hyper_spec, model.main_spec, hyper_w, model.bounds,
                                  std::move(groups), alpha, beta);
  for (size_t gi = 0; gi < grouped.size(); ++gi)
    bind_group(pg, gi, ts, grouped[gi].first, grouped[gi].second, model.horizon);
  pg.g.forward();
  return pg;
}

}  // namespace

Vec emit_weights(const HyperPinnModel& model, const Vec& p) {
  if (p.size() != model.dim_p())
    throw std::invalid_argument("emit_weights: parameter vector has " + std::to_string(p.size()) +
                                " entries, model expects " + std::to_string(model.dim_p()));
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p[i] < model.bounds.lo[i] || p[i] > model.bounds.hi[i]) {
      std::fprintf(stderr, "[hyperpinn] warning: parameter component %lld outside training box\n",
                   static_cast<long long>(i));
      break;
    }
  ad::Mat row(1, model.dim_p());
  row.row(0) = p.transpose();
  MlpWeights w = mlp_unflatten(model.hyper_spec, model.theta_h);
  ad::Mat theta = mlp_eval(model.hyper_spec, w, normalize_params(model.bounds, row));
  return Eigen::Map<const Vec>(theta.data(), theta.size());
}

ad::Mat main_forward(const Vec& theta_m, const MlpSpec& main_spec, double horizon,
                     const std::vector<double>& times) {
  MlpWeights w = mlp_unflatten(main_spec, theta_m);
  ad::Mat x(static_cast<Eigen::Index>(times.size()), 1);
  for (size_t i = 0; i < times.size(); ++i)
    x(static_cast<Eigen::Index>(i), 0) = normalize_time(times[i], horizon);
  return mlp_eval(main_spec, w, x);
}

Trajectory solve_trajectory(const HyperPinnModel& model, const Vec& p,
                            const std::vector<double>& times) {
  validate_grid(times, model.horizon);
  Vec theta_m = emit_weights(model, p);
  ad::Mat states = main_forward(theta_m, model.main_spec, model.horizon, times);
  if (model.log_space) states = states.array().exp();
  Trajectory traj;
  traj.times = times;
  traj.states = std::move(states);
  traj.params = p;
  return traj;
}

double loss_data(const HyperPinnModel& model, const TrainingSet& ts, const PinnBatch& batch) {
  // data loss never touches the right-hand side; a shape-only stub suffices
  OdeSystem stub;
  stub.name = model.system_name;
  stub.dim_y = model.dim_y();
  stub.dim_p = model.dim_p();
  stub.horizon = model.horizon;
  PinnGraph pg = build_batch_graph(model, stub, ts, batch, 1.0, 0.0);
  return pg.g.val(pg.data_loss)(0, 0);
}

double loss_physics(const HyperPinnModel& model, const OdeSystem& system, const TrainingSet& ts,
                    const PinnBatch& batch) {
  PinnGraph pg = build_batch_graph(model, system, ts, batch, 0.0, 1.0);
  return pg.g.val(pg.phys_loss)(0, 0);
}

PinnLossGrad pinn_loss_grad(const HyperPinnModel& model, const OdeSystem& system,
                            const TrainingSet& ts, const PinnBatch& batch, double alpha,
                            double beta) {
  PinnGraph pg = build_batch_graph(model, system, ts, batch, alpha, beta);
  pg.g.backward(pg.total);
  PinnLossGrad out;
  out.total = pg.g.val(pg.total)(0, 0);
  out.data = pg.g.val(pg.data_loss)(0, 0);
  out.physics = pg.phys_loss >= 0 ? pg.g.val(pg.phys_loss)(0, 0) : 0.0;
  MlpWeights gw;
  for (size_t l = 0; l < pg.hyper.W.size(); ++l) {
    gw.W.push_back(pg.g.adjoint(pg.hyper.W[l]));
    gw.b.push_back(pg.g.adjoint(pg.hyper.b[l]));
  }
  out.grad_theta_h = mlp_flatten(model.hyper_spec, gw);
  return out;
}

PinnTrainResult train_hyperpinn(const OdeSystem& system, const ParamBounds& bounds,
                                const TrainingSet& ts, const PinnTrainConfig& config) {
  if (config.alpha + config.beta <= 0.0) throw ConfigError("pinn: alpha + beta must be positive");
  if (config.batch < 1 || config.epochs < 1) throw ConfigError("pinn: batch and epochs must be >= 1");
  const int n_params = ts.n_params();
  const int t_col = ts.t_col();
  const int d_y = static_cast<int>(ts.solutions.at(0).cols());

  MlpSpec main_spec{1, d_y, config.main_hidden};
  MlpSpec hyper_spec{system.dim_p, main_spec.param_count(), config.hyper_hidden};

  Rng rng(config.seed);
  MlpWeights hyper_w = mlp_init(hyper_spec, rng, 0.1);

  const int k = std::clamp(config.batch / std::max(1, n_params), 1, t_col);
  std::vector<PinnGroup> groups(static_cast<size_t>(n_params));
  for (int i = 0; i < n_params; ++i) {
    groups[static_cast<size_t>(i)].p = ts.params.row(i).transpose();
    groups[static_cast<size_t>(i)].k = k;
  }
  PinnGraph pg = build_pinn_graph(system, hyper_spec, main_spec, hyper_w, bounds,
                                  std::move(groups), config.alpha, config.beta);

  const bool full_pass = (k == t_col);
  std::vector<int> pool(static_cast<size_t>(t_col));
  std::vector<int> chosen(static_cast<size_t>(k));
  if (full_pass) {
    for (int c = 0; c < t_col; ++c) pool[static_cast<size_t>(c)] = c;
    for (int i = 0; i < n_params; ++i) bind_group(pg, static_cast<size_t>(i), ts, i, pool, system.horizon);
  }

  std::vector<ad::Mat*> params;
  std::vector<const ad::Mat*> grads;
  const auto hyper_ids = pg.hyper.all();
  for (ad::NodeId id : hyper_ids) params.push_back(&pg.g.value_mut(id));

  ad::Adam adam({config.lr, 0.9, 0.999, 1e-8});
  PinnTrainResult result;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (!full_pass) {
      for (int i = 0; i < n_params; ++i) {
        for (int c = 0; c < t_col; ++c) pool[static_cast<size_t>(c)] = c;
        for (int j = 0; j < k; ++j) {
          const int pick = j + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(t_col - j));
          std::swap(pool[static_cast<size_t>(j)], pool[static_cast<size_t>(pick)]);
          chosen[static_cast<size_t>(j)] = pool[static_cast<size_t>(j)];
        }
        bind_group(pg, static_cast<size_t>(i), ts, i, chosen, system.horizon);
      }
    }
    pg.g.forward();
    const double total = pg.g.val(pg.total)(0, 0);
    if (!std::isfinite(total))
      throw NumericalError("pinn: non-finite loss at epoch " + std::to_string(epoch));
    if (epoch % config.log_every == 0 || epoch + 1 == config.epochs) {
      result.history.push_back({epoch, pg.g.val(pg.data_loss)(0, 0),
                                pg.phys_loss >= 0 ? pg.g.val(pg.phys_loss)(0, 0) : 0.0, total});
    }
    pg.g.backward(pg.total);
    grads.clear();
    for (ad::NodeId id : hyper_ids) grads.push_back(&pg.g.adjoint_ref(id));
    adam.step(params, grads);
  }

  HyperPinnModel model;
  model.system_name = system.name;
  model.log_space = system.log_space;
  model.horizon = system.horizon;
  model.hyper_spec = hyper_spec;
  model.main_spec = main_spec;
  model.bounds = bounds;
  MlpWeights final_w;
  for (size_t l = 0; l < pg.hyper.W.size(); ++l) {
    final_w.W.push_back(pg.g.val(pg.hyper.W[l]));
    final_w.b.push_back(pg.g.val(pg.hyper.b[l]));
  }
  model.theta_h = mlp_flatten(hyper_spec, final_w);

  const auto fidelity = solver_fidelity(model, system, config.fidelity_draws,
                                        derive_stage_seed(config.seed, "fidelity"));
  json meta;
  meta["config"] = {{"alpha", config.alpha},   {"beta", config.beta},
                    {"n_params", n_params},    {"t_col", t_col},
                    {"batch", config.batch},   {"points_per_param", k},
                    {"lr", config.lr},         {"epochs", config.epochs},
                    {"seed", config.seed},     {"hyper_hidden", config.hyper_hidden},
                    {"main_hidden", config.main_hidden}};
  meta["trainset_hash"] = ts.content_hash;
  meta["final_data_loss"] = result.history.back().data;
  meta["final_physics_loss"] = result.history.back().physics;
  meta["final_total_loss"] = result.history.back().total;
  meta["fidelity_rmse_median"] = fidelity;
  meta["fidelity_threshold"] = config.fidelity_threshold;
  model.metadata = std::move(meta);
  result.model = std::move(model);
  return result;
}

std::vector<double> solver_fidelity(const HyperPinnModel& model, const OdeSystem& system,
                                    int draws, std::uint64_t seed) {
  const auto grid = uniform_grid(0.0, model.horizon, 161);
  const int substeps = substeps_for(system, grid[1] - grid[0]);
  Rng rng(seed);
  std::vector<std::vector<double>> rmse(static_cast<size_t>(model.dim_y()));
  for (int d = 0; d < draws; ++d) {
    Vec p(model.dim_p());
    for (int j = 0; j < model.dim_p(); ++j) p[j] = rng.uniform(model.bounds.lo[j], model.bounds.hi[j]);
    Trajectory approx = solve_trajectory(model, p, grid);
    Trajectory exact = integrate_rk4(system, p, system.initial_state, grid, substeps);
    ad::Mat exact_states = model.log_space ? exact.states.array().exp().matrix().eval() : exact.states;
    for (int c = 0; c < model.dim_y(); ++c) {
      const double err = std::sqrt((approx.states.col(c) - exact_states.col(c)).squaredNorm() /
                                   static_cast<double>(grid.size()));
      rmse[static_cast<size_t>(c)].push_back(err);
    }
  }
  std::vector<double> medians;
  for (auto& r : rmse) {
    std::sort(r.begin(), r.end());
    medians.push_back(r[r.size() / 2]);
  }
  return medians;
}

namespace {

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

std::vector<double> vec_to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

Vec vec_from_std(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

json model_to_json(const HyperPinnModel& model) {
  json j;
  j["format"] = "sigmoid-hyperpinn-1";
  j["system_name"] = model.system_name;
  j["log_space"] = model.log_space;
  j["horizon"] = model.horizon;
  j["hyper_spec"] = spec_to_json(model.hyper_spec);
  j["main_spec"] = spec_to_json(model.main_spec);
  j["bounds"] = {{"lo", vec_to_std(model.bounds.lo)}, {"hi", vec_to_std(model.bounds.hi)}};
  j["normalization"] = {{"p_mid", vec_to_std(model.bounds.mid())},
                        {"p_halfwidth", vec_to_std(model.bounds.halfwidth())},
                        {"t_scale", model.horizon}};
  j["theta_h"] = vec_to_std(model.theta_h);
  j["training"] = model.metadata;
  return j;
}

HyperPinnModel model_from_json(const json& j) {
  if (j.value("format", "") != std::string("sigmoid-hyperpinn-1"))
    throw ArtifactMismatchError("model file has unknown format");
  HyperPinnModel m;
  m.system_name = j.at("system_name").get<std::string>();
  m.log_space = j.at("log_space").get<bool>();
  m.horizon = j.at("horizon").get<double>();
  m.hyper_spec = spec_from_json(j.at("hyper_spec"));
  m.main_spec = spec_from_json(j.at("main_spec"));
  m.bounds = ParamBounds(vec_from_std(j.at("bounds").at("lo").get<std::vector<double>>()),
                         vec_from_std(j.at("bounds").at("hi").get<std::vector<double>>()));
  m.theta_h = vec_from_std(j.at("theta_h").get<std::vector<double>>());
  if (m.theta_h.size() != m.hyper_spec.param_count())
    throw ArtifactMismatchError("model file theta_h size does not match hyper spec");
  m.metadata = j.value("training", json::object());
  return m;
}

void save_model(const std::filesystem::path& path, const HyperPinnModel& model) {
  write_text_file(path, model_to_json(model).dump(1));
}

HyperPinnModel load_model(const std::filesystem::path& path) {
  return model_from_json(json::parse(read_text_file(path)));
}

}  // namespace sigmoid
