#include "sigmoid/ode.hpp"

#include "sigmoid/csv.hpp"
#include "sigmoid/errors.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace sigmoid {

Vec eval_rhs(const OdeSystem& system, const Vec& y, const Vec& p) {
  if (y.size() != system.dim_y)
    throw std::invalid_argument(system.name + ": state has " + std::to_string(y.size()) +
                                " components, expected " + std::to_string(system.dim_y));
  if (p.size() != system.dim_p)
    throw std::invalid_argument(system.name + ": parameter vector has " + std::to_string(p.size()) +
                                " entries, expected " + std::to_string(system.dim_p));
  Vec dy(system.dim_y);
  system.rhs(y.data(), p.data(), dy.data());
  for (int i = 0; i < system.dim_y; ++i)
    if (!std::isfinite(dy[i]))
      throw NumericalError(system.name + ": non-finite derivative in component " +
                           system.component_names[i]);
  return dy;
}

void validate_grid(const std::vector<double>& grid, double horizon) {
  if (grid.empty()) throw std::invalid_argument("time grid is empty");
  if (grid.front() < 0.0) throw std::invalid_argument("time grid starts before 0");
  for (size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("time grid is not strictly increasing");
  if (horizon >= 0.0 && grid.back() > horizon + 1e-12)
    throw std::invalid_argument("time grid exceeds horizon");
}

Trajectory integrate_rk4(const OdeSystem& system, const Vec& p, const Vec& y0,
                         const std::vector<double>& grid, int substeps) {
  validate_grid(grid);
  if (substeps < 1) throw std::invalid_argument("integrate_rk4: substeps must be >= 1");
  if (y0.size() != system.dim_y) throw std::invalid_argument("integrate_rk4: initial state size");
  if (p.size() != system.dim_p) throw std::invalid_argument("integrate_rk4: parameter size");

  const int d = system.dim_y;
  Trajectory traj;
  traj.times = grid;
  traj.params = p;
  traj.states.resize(static_cast<Eigen::Index>(grid.size()), d);

  Vec y = y0;
  traj.states.row(0) = y.transpose();
  Vec k1(d), k2(d), k3(d), k4(d), tmp(d);
  const double* pp = p.data();

  for (size_t g = 1; g < grid.size(); ++g) {
    const double h = (grid[g] - grid[g - 1]) / substeps;
    for (int s = 0; s < substeps; ++s) {
      system.rhs(y.data(), pp, k1.data());
      tmp = y + 0.5 * h * k1;
      system.rhs(tmp.data(), pp, k2.data());
      tmp = y + 0.5 * h * k2;
      system.rhs(tmp.data(), pp, k3.data());
      tmp = y + h * k3;
      system.rhs(tmp.data(), pp, k4.data());
      y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!y.allFinite()) {
      throw NumericalError(system.name + ": integration blew up near t = " +
                           format_double(grid[g]));
    }
    traj.states.row(g) = y.transpose();
  }
  return traj;
}

int substeps_for(const OdeSystem& system, double dt) {
  return std::max(1, static_cast<int>(std::ceil(dt * system.substeps_per_unit)));
}

namespace {

OdeSystem make_fitzhugh_nagumo() {
  OdeSystem s;
  s.name = "fitzhugh_nagumo";
  s.dim_y = 2;
  s.dim_p = 3;
  s.component_names = {"V", "R"};
  s.param_names = {"a", "b", "c"};
  s.true_params = Vec{{0.2, 0.2, 3.0}};
  s.initial_state = Vec{{-1.0, 1.0}};
  s.horizon = 20.0;
  s.substeps_per_unit = 20.0;
  s.rhs = [](const double* y, const double* p, double* dy) {
    const double V = y[0], R = y[1];
    const double a = p[0], b = p[1], c = p[2];
    dy[0] = c * (V - V * V * V / 3.0 + R);
    dy[1] = -(V - a + b * R) / c;
  };
  s.rhs_graph = [](ad::Graph& g, ad::NodeId y, const Vec& p) {
    const double a = p[0], b = p[1], c = p[2];
    ad::NodeId V = g.slice_cols(y, 0, 1);
    ad::NodeId R = g.slice_cols(y, 1, 1);
    ad::NodeId cubic = g.scale(g.mul(g.square(V), V), 1.0 / 3.0);
    ad::NodeId fV = g.scale(g.add(g.sub(V, cubic), R), c);
    ad::NodeId fR = g.scale(g.add_scalar(g.add(V, g.scale(R, b)), -a), -1.0 / c);
    return g.concat_cols({fV, fR});
  };
  return s;
}

OdeSystem make_protein_transduction() {
  OdeSystem s;
  s.name = "protein_transduction";
  s.dim_y = 5;
  s.dim_p = 6;
  s.component_names = {"S", "S_d", "R", "S_R", "R_pp"};
  s.param_names = {"k1", "k2", "k3", "k4", "V", "Km"};
  s.true_params = Vec{{0.07, 0.6, 0.05, 0.3, 0.017, 0.3}};
  s.initial_state = Vec{{1.0, 0.0, 1.0, 0.0, 0.0}};
  s.horizon = 100.0;
  s.substeps_per_unit = 20.0;
  s.rhs = [](const double* y, const double* p, double* dy) {
    const double S = y[0], R = y[2], SR = y[3], Rpp = y[4];
    const double k1 = p[0], k2 = p[1], k3 = p[2], k4 = p[3], V = p[4], Km = p[5];
    const double mm = V * Rpp / (Km + Rpp);
    dy[0] = -k1 * S - k2 * S + k3 * SR;
    dy[1] = k1 * S;
    dy[2] = -k2 * S * R - k3 * SR + mm;
    dy[3] = k2 * S * R - k3 * SR - k4 * SR;
    dy[4] = k4 * SR - mm;
  };
  s.rhs_graph = [](ad::Graph& g, ad::NodeId y, const Vec& p) {
    const double k1 = p[0], k2 = p[1], k3 = p[2], k4 = p[3], V = p[4], Km = p[5];
    ad::NodeId S = g.slice_cols(y, 0, 1);
    ad::NodeId R = g.slice_cols(y, 2, 1);
    ad::NodeId SR = g.slice_cols(y, 3, 1);
    ad::NodeId Rpp = g.slice_cols(y, 4, 1);
    ad::NodeId mm = g.div(g.scale(Rpp, V), g.add_scalar(Rpp, Km));
    ad::NodeId SxR = g.mul(S, R);
    ad::NodeId f0 = g.add(g.add(g.scale(S, -k1), g.scale(S, -k2)), g.scale(SR, k3));
    ad::NodeId f1 = g.scale(S, k1);
    ad::NodeId f2 = g.add(g.add(g.scale(SxR, -k2), g.scale(SR, -k3)), mm);
    ad::NodeId f3 = g.add(g.scale(SxR, k2), g.scale(SR, -(k3 + k4)));
    ad::NodeId f4 = g.sub(g.scale(SR, k4), mm);
    return g.concat_cols({f0, f1, f2, f3, f4});
  };
  return s;
}

OdeSystem make_hes1() {
  OdeSystem s;
  s.name = "hes1";
  s.dim_y = 3;
  s.dim_p = 7;
  s.component_names = {"P", "M", "H"};
  s.param_names = {"a", "b", "c", "d", "e", "f", "g"};
  s.true_params = Vec{{0.022, 0.3, 0.031, 0.028, 0.5, 20.0, 0.3}};
  s.initial_state = Vec{{1.439, 2.037, 17.904}};
  s.horizon = 240.0;
  s.substeps_per_unit = 20.0;
  s.rhs = [](const double* y, const double* p, double* dy) {
    const double P = y[0], M = y[1], H = y[2];
    const double a = p[0], b = p[1], c = p[2], d = p[3], e = p[4], f = p[5], gg = p[6];
    const double hill = 1.0 / (1.0 + P * P);
    dy[0] = -a * P * H + b * M - c * P;
    dy[1] = -d * M + e * hill;
    dy[2] = -a * P * H + f * hill - gg * H;
  };
  s.rhs_graph = [](ad::Graph& g, ad::NodeId y, const Vec& p) {
    const double a = p[0], b = p[1], c = p[2], d = p[3], e = p[4], f = p[5], gg = p[6];
    ad::NodeId P = g.slice_cols(y, 0, 1);
    ad::NodeId M = g.slice_cols(y, 1, 1);
    ad::NodeId H = g.slice_cols(y, 2, 1);
    ad::NodeId PH = g.scale(g.mul(P, H), -a);
    ad::NodeId hill = g.div(g.ones(g.rows(y), 1), g.add_scalar(g.square(P), 1.0));
    ad::NodeId f0 = g.add(PH, g.sub(g.scale(M, b), g.scale(P, c)));
    ad::NodeId f1 = g.add(g.scale(M, -d), g.scale(hill, e));
    ad::NodeId f2 = g.add(PH, g.sub(g.scale(hill, f), g.scale(H, gg)));
    return g.concat_cols({f0, f1, f2});
  };
  return s;
}

OdeSystem make_lorenz() {
  OdeSystem s;
  s.name = "lorenz";
  s.dim_y = 3;
  s.dim_p = 3;
  s.component_names = {"X", "Y", "Z"};
  s.param_names = {"sigma", "rho", "beta"};
  s.true_params = Vec{{10.0, 28.0, 8.0 / 3.0}};
  s.initial_state = Vec{{4.67, 5.49, 9.06}};
  s.horizon = 2.0;
  s.substeps_per_unit = 200.0;
  s.rhs = [](const double* y, const double* p, double* dy) {
    const double X = y[0], Y = y[1], Z = y[2];
    const double sig = p[0], rho = p[1], beta = p[2];
    dy[0] = sig * (Y - X);
    dy[1] = X * (rho - Z) - Y;
    dy[2] = X * Y - beta * Z;
  };
  s.rhs_graph = [](ad::Graph& g, ad::NodeId y, const Vec& p) {
    const double sig = p[0], rho = p[1], beta = p[2];
    ad::NodeId X = g.slice_cols(y, 0, 1);
    ad::NodeId Y = g.slice_cols(y, 1, 1);
    ad::NodeId Z = g.slice_cols(y, 2, 1);
    ad::NodeId f0 = g.scale(g.sub(Y, X), sig);
    ad::NodeId f1 = g.sub(g.mul(X, g.add_scalar(g.scale(Z, -1.0), rho)), Y);
    ad::NodeId f2 = g.sub(g.mul(X, Y), g.scale(Z, beta));
    return g.concat_cols({f0, f1, f2});
  };
  return s;
}

std::map<std::string, OdeSystem>& extension_registry() {
  static std::map<std::string, OdeSystem> reg;
  return reg;
}

}  // namespace

const std::vector<std::string>& builtin_system_names() {
  static const std::vector<std::string> names = {"fitzhugh_nagumo", "protein_transduction", "hes1",
                                                 "hes1_log", "lorenz"};
  return names;
}

OdeSystem make_system(const std::string& name) {
  if (name == "fitzhugh_nagumo") return make_fitzhugh_nagumo();
  if (name == "protein_transduction") return make_protein_transduction();
  if (name == "hes1") return make_hes1();
  if (name == "hes1_log") return log_transform_system(make_hes1());
  if (name == "lorenz") return make_lorenz();
  auto& ext = extension_registry();
  auto it = ext.find(name);
  if (it != ext.end()) return it->second;
  std::string msg = "unknown system '" + name + "'; registry:";
  for (const auto& n : builtin_system_names()) msg += " " + n;
  for (const auto& [n, sys] : ext) msg += " " + n;
  throw std::invalid_argument(msg);
}

OdeSystem log_transform_system(const OdeSystem& base) {
  if (base.dim_y > 16)
    throw std::invalid_argument("log_transform_system: state dimension above 16 unsupported");
  OdeSystem s = base;
  s.name = base.name + "_log";
  s.log_space = true;
  s.component_names.clear();
  for (const auto& n : base.component_names) s.component_names.push_back("log_" + n);
  for (int i = 0; i < base.dim_y; ++i) {
    if (!(base.initial_state[i] > 0.0))
      throw std::invalid_argument("log_transform_system: initial state of " + base.name +
                                  " must be strictly positive");
    s.initial_state[i] = std::log(base.initial_state[i]);
  }
  auto base_rhs = base.rhs;
  const int d = base.dim_y;
  s.rhs = [base_rhs, d](const double* u, const double* p, double* du) {
    double ey[16];
    for (int i = 0; i < d; ++i) ey[i] = std::exp(u[i]);
    base_rhs(ey, p, du);
    for (int i = 0; i < d; ++i) du[i] /= ey[i];
  };
  auto base_graph = base.rhs_graph;
  s.rhs_graph = [base_graph](ad::Graph& g, ad::NodeId u, const Vec& p) {
    ad::NodeId y = g.exp(u);
    return g.div(base_graph(g, y, p), y);
  };
  return s;
}

void register_extension_system(const OdeSystem& system) {
  for (const auto& n : builtin_system_names())
    if (n == system.name)
      throw std::invalid_argument("register_extension_system: '" + system.name + "' is built in");
  extension_registry()[system.name] = system;
}

std::vector<double> uniform_grid(double lo, double hi, int n) {
  if (n < 2) throw std::invalid_argument("uniform_grid needs at least 2 points");
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  return g;
}

std::string trajectory_csv(const Trajectory& traj, const std::vector<std::string>& component_names) {
  std::vector<std::string> header = {"t"};
  header.insert(header.end(), component_names.begin(), component_names.end());
  std::string out = csv_join(header);
  for (size_t i = 0; i < traj.times.size(); ++i) {
    std::vector<std::string> row = {format_double(traj.times[i])};
    for (Eigen::Index j = 0; j < traj.states.cols(); ++j)
      row.push_back(format_double(traj.states(static_cast<Eigen::Index>(i), j)));
    out += csv_join(row);
  }
  return out;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj,
                          const std::vector<std::string>& component_names) {
  write_text_file(path, trajectory_csv(traj, component_names));
}

}  // namespace sigmoid
