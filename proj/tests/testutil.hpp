#pragma once

#include "sigmoid/graph.hpp"
#include "sigmoid/mlp.hpp"
#include "sigmoid/rng.hpp"

#include <cmath>
#include <filesystem>
#include <functional>
#include <string>

namespace sigmoid::test {

inline double rel_err(double got, double want) {
  const double denom = std::max({std::abs(got), std::abs(want), 1e-8});
  return std::abs(got - want) / denom;
}

// Central finite differences of f over every entry of the leaf `wrt`,
// compared against `analytic` (same shape). Returns the worst relative error.
inline double fd_check(ad::Graph& g, ad::NodeId out, ad::NodeId wrt, const ad::Mat& analytic,
                       double h = 1e-5) {
  double worst = 0.0;
  ad::Mat base = g.val(wrt);
  for (Eigen::Index i = 0; i < base.rows(); ++i) {
    for (Eigen::Index j = 0; j < base.cols(); ++j) {
      ad::Mat bumped = base;
      bumped(i, j) = base(i, j) + h;
      g.set_value(wrt, bumped);
      g.forward();
      const double up = g.val(out)(0, 0);
      bumped(i, j) = base(i, j) - h;
      g.set_value(wrt, bumped);
      g.forward();
      const double down = g.val(out)(0, 0);
      const double fd = (up - down) / (2.0 * h);
      worst = std::max(worst, rel_err(analytic(i, j), fd));
    }
  }
  g.set_value(wrt, base);
  g.forward();
  return worst;
}

// backward() then finite-difference verification of d(out)/d(wrt).
inline double grad_fd_check(ad::Graph& g, ad::NodeId out, ad::NodeId wrt, double h = 1e-5) {
  g.forward();
  g.backward(out);
  ad::Mat analytic = g.adjoint(wrt);
  return fd_check(g, out, wrt, analytic, h);
}

inline ad::Mat random_mat(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  ad::Mat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.uniform(-1.0, 1.0);
  return m;
}

inline std::filesystem::path temp_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("sigmoid_test_" + tag);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace sigmoid::test
