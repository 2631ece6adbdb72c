#pragma once

#include "sigmoid/graph.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace sigmoid {

using Vec = Eigen::VectorXd;

// Solution states on a time grid for one parameter vector.
struct Trajectory {
  std::vector<double> times;
  ad::Mat states;  // [times.size(), d_y]
  Vec params;
};

// A named right-hand side dy/dt = f(y, p) with its benchmark scenario
// metadata. `rhs` is the fast pointer form used by the integrator; `rhs_graph`
// builds the same function over graph nodes (rows of `y` are independent
// samples) for the physics residual.
struct OdeSystem {
  std::string name;
  int dim_y = 0;
  int dim_p = 0;
  std::vector<std::string> component_names;
  std::vector<std::string> param_names;
  Vec true_params;
  Vec initial_state;
  double horizon = 1.0;
  double substeps_per_unit = 20.0;
  bool log_space = false;

  std::function<void(const double* y, const double* p, double* dy)> rhs;
  std::function<ad::NodeId(ad::Graph&, ad::NodeId y, const Vec& p)> rhs_graph;
};

// f(y, p) with dimension and finiteness checks; errors name the offending
// component.
Vec eval_rhs(const OdeSystem& system, const Vec& y, const Vec& p);

// Classical fixed-step RK4 with `substeps` internal steps per grid interval.
// states.row(0) == y0 exactly. Throws NumericalError carrying the time of
// blow-up if the state leaves the finite range.
Trajectory integrate_rk4(const OdeSystem& system, const Vec& p, const Vec& y0,
                         const std::vector<double>& grid, int substeps);

// Convenience: per-interval substep count from the system's default rate.
int substeps_for(const OdeSystem& system, double dt);

// Built-in registry: fitzhugh_nagumo, protein_transduction, hes1, hes1_log,
// lorenz. Unknown names raise an error listing the registry.
const std::vector<std::string>& builtin_system_names();
OdeSystem make_system(const std::string& name);

// System over u = log y with du/dt = f(exp u, p) / exp u.
OdeSystem log_transform_system(const OdeSystem& base);

// Extension point for systems outside the benchmark registry (used by the
// toy pipeline and tests). Registered names are visible to make_system.
void register_extension_system(const OdeSystem& system);

std::vector<double> uniform_grid(double lo, double hi, int n);

// Header `t,<component names...>`, one row per grid point, full precision.
std::string trajectory_csv(const Trajectory& traj, const std::vector<std::string>& component_names);
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj,
                          const std::vector<std::string>& component_names);

void validate_grid(const std::vector<double>& grid, double horizon = -1.0);

}  // namespace sigmoid
