#include "sigmoid/graph.hpp"
#include "sigmoid/mlp.hpp"

#include <doctest.h>

#include "testutil.hpp"

#include <cmath>

using namespace sigmoid;
using namespace sigmoid::test;
using ad::Graph;
using ad::Mat;
using ad::NodeId;

TEST_CASE("forward: constants and simple expressions") {
  Graph g;
  CHECK(g.val(g.tanh(g.scalar(0.0)))(0, 0) == 0.0);

  NodeId x = g.scalar(3.0);
  NodeId y = g.add_scalar(g.scale(x, 2.0), 1.0);
  CHECK(g.val(y)(0, 0) == doctest::Approx(7.0));

  // rebinding the leaf and re-running gives the new value
  g.set_value(x, Mat::Constant(1, 1, -1.0));
  g.forward();
  CHECK(g.val(y)(0, 0) == doctest::Approx(-1.0));
}

TEST_CASE("forward: three-layer net matches straight-line evaluation") {
  Rng rng(11);
  MlpSpec spec{4, 3, {8, 6}};
  MlpWeights w = mlp_init(spec, rng);
  Mat x = random_mat(5, 4, rng);

  Graph g;
  MlpNodes nodes = mlp_params(g, w);
  NodeId out = mlp_forward(g, spec, nodes, g.value(x));

  Mat direct = mlp_eval(spec, w, x);
  CHECK((g.val(out) - direct).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("grad: y = x^2") {
  Graph g;
  NodeId x = g.scalar(3.0);
  NodeId y = g.square(x);
  g.backward(y);
  CHECK(g.adjoint(x)(0, 0) == doctest::Approx(6.0));
}

TEST_CASE("grad: unreachable parameter gets exactly zero") {
  Graph g;
  NodeId x = g.scalar(2.0);
  NodeId orphan = g.value(Mat::Constant(2, 2, 5.0));
  NodeId y = g.square(x);
  g.backward(y);
  CHECK(g.adjoint(orphan).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("grad: non-scalar output rejected") {
  Graph g;
  NodeId x = g.value(Mat::Ones(2, 2));
  NodeId y = g.square(x);
  CHECK_THROWS_AS(g.backward(y), std::invalid_argument);
}

TEST_CASE("grad: sum(tanh(Wx)) matches finite differences") {
  Rng rng(42);
  Graph g;
  NodeId W = g.value(random_mat(4, 6, rng));
  NodeId x = g.value(random_mat(3, 4, rng));
  NodeId y = g.sum(g.tanh(g.matmul(x, W)));
  CHECK(grad_fd_check(g, y, W) < 1e-6);
  CHECK(grad_fd_check(g, y, x) < 1e-6);
}

TEST_CASE("grad: every op passes a randomized finite-difference check") {
  Rng rng(7);
  auto check_scalarized = [&](const std::function<NodeId(Graph&, NodeId, NodeId)>& build,
                              Eigen::Index r, Eigen::Index c, double scale = 1.0) {
    Graph g;
    NodeId a = g.value(random_mat(r, c, rng, scale));
    NodeId b = g.value(random_mat(r, c, rng, scale));
    // fold into a scalar through a nonlinearity so upstream gradients vary
    NodeId out = g.sum(g.tanh(build(g, a, b)));
    CHECK(grad_fd_check(g, out, a) < 1e-6);
    CHECK(grad_fd_check(g, out, b) < 1e-6);
  };

  check_scalarized([](Graph& g, NodeId a, NodeId b) { return g.add(a, b); }, 3, 4);
  check_scalarized([](Graph& g, NodeId a, NodeId b) { return g.sub(a, b); }, 3, 4);
  check_scalarized([](Graph& g, NodeId a, NodeId b) { return g.mul(a, b); }, 3, 4);
  check_scalarized(
      [](Graph& g, NodeId a, NodeId b) { return g.div(a, g.add_scalar(g.square(b), 1.0)); }, 3, 4);
  check_scalarized([](Graph& g, NodeId a, NodeId b) { return g.add(g.scale(a, -1.7), b); }, 2, 5);
  check_scalarized([](Graph& g, NodeId a, NodeId b) { return g.add(g.exp(a), b); }, 2, 3, 0.5);
  check_scalarized(
      [](Graph& g, NodeId a, NodeId b) { return g.add(g.sqrt(g.add_scalar(g.square(a), 1.0)), b); },
      2, 3);
  check_scalarized([](Graph& g, NodeId a, NodeId b) { return g.concat_rows({a, b}); }, 2, 3);
  check_scalarized([](Graph& g, NodeId a, NodeId b) { return g.concat_cols({a, b}); }, 2, 3);
  check_scalarized([](Graph& g, NodeId a, NodeId b) { return g.add(g.reshape(a, 6, 2), g.reshape(b, 6, 2)); }, 3, 4);
  check_scalarized([](Graph& g, NodeId a, NodeId b) { return g.add(g.slice_rows(a, 1, 2), g.slice_rows(b, 0, 2)); }, 4, 3);
  check_scalarized([](Graph& g, NodeId a, NodeId b) { return g.add(g.slice_cols(a, 1, 2), g.slice_cols(b, 2, 2)); }, 3, 4);
  check_scalarized([](Graph& g, NodeId a, NodeId b) { return g.add(g.scatter_rows(a, 1, 5), g.scatter_rows(b, 2, 5)); }, 2, 3);
  check_scalarized([](Graph& g, NodeId a, NodeId b) { return g.add(g.scatter_cols(a, 0, 6), g.scatter_cols(b, 3, 6)); }, 2, 3);
  check_scalarized([](Graph& g, NodeId a, NodeId b) { return g.add(g.gather_rows(a, {2, 0, 1, 2}), g.gather_rows(b, {1, 1, 0, 2})); }, 3, 4);

  // matmul, all four transpose configurations
  for (bool ta : {false, true}) {
    for (bool tb : {false, true}) {
      Graph g;
      NodeId a = g.value(random_mat(ta ? 4 : 3, ta ? 3 : 4, rng));
      NodeId b = g.value(random_mat(tb ? 5 : 4, tb ? 4 : 5, rng));
      NodeId out = g.sum(g.tanh(g.matmul(a, b, ta, tb)));
      CHECK(grad_fd_check(g, out, a) < 1e-6);
      CHECK(grad_fd_check(g, out, b) < 1e-6);
    }
  }

  // broadcast / rowvec / reductions
  {
    Graph g;
    NodeId a = g.value(random_mat(4, 3, rng));
    NodeId v = g.value(random_mat(1, 3, rng));
    NodeId out = g.sum(g.tanh(g.mul_rowvec(g.add_rowvec(a, v), v)));
    CHECK(grad_fd_check(g, out, a) < 1e-6);
    CHECK(grad_fd_check(g, out, v) < 1e-6);
  }
  {
    Graph g;
    NodeId s = g.scalar(0.7);
    NodeId a = g.value(random_mat(3, 4, rng));
    NodeId out = g.sum(g.tanh(g.mul(g.broadcast(s, 3, 4), a)));
    CHECK(grad_fd_check(g, out, s) < 1e-6);
  }
  {
    Graph g;
    NodeId a = g.value(random_mat(5, 3, rng));
    NodeId out = g.mean(g.square(g.col_mean(a)));
    CHECK(grad_fd_check(g, out, a) < 1e-6);
    Graph g2;
    NodeId a2 = g2.value(random_mat(5, 3, rng));
    NodeId out2 = g2.sum(g2.tanh(g2.row_sum(g2.tanh(g2.col_sum(g2.square(a2))))));
    CHECK(grad_fd_check(g2, out2, a2) < 1e-6);
  }
  {
    Graph g;
    NodeId a = g.value(random_mat(4, 3, rng));
    NodeId out = g.sum(g.tanh(g.row_norm(a)));
    CHECK(grad_fd_check(g, out, a) < 1e-6);
  }
}

TEST_CASE("gradient accumulation is deterministic") {
  Rng rng(3);
  Graph g;
  NodeId x = g.value(random_mat(3, 3, rng));
  NodeId y = g.sum(g.add(g.mul(x, x), g.square(x)));
  g.forward();
  g.backward(y);
  Mat first = g.adjoint(x);
  for (int i = 0; i < 5; ++i) {
    g.forward();
    g.backward(y);
    CHECK((g.adjoint(x) - first).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("time_derivative: tanh and linear nets") {
  {
    Graph g;
    NodeId t = g.value(Mat::Zero(1, 1));
    NodeId out = g.tanh(t);
    ad::Dual dual = ad::time_derivative(g, out, t);
    CHECK(g.val(dual.tangent)(0, 0) == doctest::Approx(1.0));  // tanh'(0) = 1
  }
  {
    // m(t) = a t + b has tangent a everywhere
    Graph g;
    NodeId t = g.value(Mat::Constant(4, 1, 0.3));
    NodeId a = g.value(Mat::Constant(1, 1, 2.5));
    NodeId b = g.value(Mat::Constant(1, 1, -0.7));
    NodeId out = g.add_rowvec(g.matmul(t, a), b);
    ad::Dual dual = ad::time_derivative(g, out, t);
    Rng rng(5);
    g.set_value(t, random_mat(4, 1, rng));
    g.forward();
    CHECK((g.val(dual.tangent).array() - 2.5).abs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("time_derivative: random 2-layer net matches finite differences") {
  Rng rng(19);
  MlpSpec spec{1, 2, {6}};
  MlpWeights w = mlp_init(spec, rng);

  Graph g;
  MlpNodes nodes = mlp_params(g, w);
  NodeId t = g.value(random_mat(5, 1, rng));
  NodeId m = mlp_forward(g, spec, nodes, t);
  ad::Dual dual = ad::time_derivative(g, m, t);

  const Mat base = g.val(t);
  const double h = 1e-5;
  g.set_value(t, Mat(base.array() + h));
  g.forward();
  Mat up = g.val(m);
  g.set_value(t, Mat(base.array() - h));
  g.forward();
  Mat down = g.val(m);
  g.set_value(t, base);
  g.forward();
  Mat fd = (up - down) / (2.0 * h);
  for (Eigen::Index i = 0; i < fd.rows(); ++i)
    for (Eigen::Index j = 0; j < fd.cols(); ++j)
      CHECK(rel_err(g.val(dual.tangent)(i, j), fd(i, j)) < 1e-6);
}

TEST_CASE("time_derivative: tangent is differentiable in the weights") {
  // d/dW of sum(dm/dt) against finite differences (the second-order path the
  // physics loss needs)
  Rng rng(23);
  MlpSpec spec{1, 1, {5}};
  MlpWeights w = mlp_init(spec, rng);

  Graph g;
  MlpNodes nodes = mlp_params(g, w);
  NodeId t = g.value(random_mat(4, 1, rng));
  NodeId m = mlp_forward(g, spec, nodes, t);
  NodeId tangent = g.tangent(m, t);
  NodeId out = g.sum(g.square(tangent));
  for (NodeId wid : nodes.all()) CHECK(grad_fd_check(g, out, wid, 1e-5) < 1e-4);
}

TEST_CASE("input_gradient_norm: linear and quadratic closed forms") {
  Rng rng(31);
  {
    // D(x) = x w: gradient norm is ||w|| for any x
    Graph g;
    Mat wv = random_mat(6, 1, rng);
    NodeId w = g.value(wv);
    NodeId x = g.value(random_mat(3, 6, rng));
    NodeId out = g.matmul(x, w);
    NodeId norm = ad::input_gradient_norm(g, out, x);
    for (Eigen::Index i = 0; i < 3; ++i)
      CHECK(g.val(norm)(i, 0) == doctest::Approx(wv.norm()).epsilon(1e-12));
  }
  {
    // D(x) = ||x||^2 / 2: gradient norm is ||x||
    Graph g;
    Mat xv = random_mat(1, 5, rng);
    NodeId x = g.value(xv);
    NodeId out = g.scale(g.sum(g.square(x)), 0.5);
    NodeId norm = ad::input_gradient_norm(g, out, x);
    CHECK(g.val(norm)(0, 0) == doctest::Approx(xv.norm()).epsilon(1e-12));
  }
}

TEST_CASE("input_gradient_norm: per-row gradients of a tanh discriminator") {
  Rng rng(37);
  MlpSpec spec{4, 1, {7, 5}};
  MlpWeights w = mlp_init(spec, rng);

  Graph g;
  MlpNodes nodes = mlp_params(g, w);
  NodeId x = g.value(random_mat(3, 4, rng));
  NodeId out = mlp_forward(g, spec, nodes, x);
  NodeId norm = ad::input_gradient_norm(g, out, x);

  // check row norms against per-row finite differences of D
  const Mat base = g.val(x);
  const double h = 1e-5;
  for (Eigen::Index i = 0; i < base.rows(); ++i) {
    double sq = 0.0;
    for (Eigen::Index j = 0; j < base.cols(); ++j) {
      Mat bumped = base;
      bumped(i, j) += h;
      g.set_value(x, bumped);
      g.forward();
      const double up = g.val(out)(i, 0);
      bumped(i, j) = base(i, j) - h;
      g.set_value(x, bumped);
      g.forward();
      const double down = g.val(out)(i, 0);
      const double fd = (up - down) / (2.0 * h);
      sq += fd * fd;
    }
    g.set_value(x, base);
    g.forward();
    CHECK(rel_err(g.val(norm)(i, 0), std::sqrt(sq)) < 1e-6);
  }
}

TEST_CASE("input_gradient_norm: penalty is differentiable in the weights") {
  Rng rng(41);
  MlpSpec spec{3, 1, {6}};
  MlpWeights w = mlp_init(spec, rng);

  Graph g;
  MlpNodes nodes = mlp_params(g, w);
  NodeId x = g.value(random_mat(4, 3, rng));
  NodeId out = mlp_forward(g, spec, nodes, x);
  NodeId norm = ad::input_gradient_norm(g, out, x);
  NodeId penalty = g.mean(g.square(g.add_scalar(norm, -1.0)));
  for (NodeId wid : nodes.all()) CHECK(grad_fd_check(g, penalty, wid, 1e-5) < 1e-4);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  ad::Adam adam({0.1, 0.9, 0.999, 1e-8});
  Mat p = Mat::Constant(2, 2, 1.5);
  Mat g = Mat::Zero(2, 2);
  Mat before = p;
  adam.step({&p}, {&g});
  CHECK((p - before).cwiseAbs().maxCoeff() == 0.0);
  CHECK(adam.steps() == 1);
}

TEST_CASE("adam: first step moves by about -lr * sign(gradient)") {
  ad::Adam adam({0.01, 0.9, 0.999, 1e-8});
  Mat p = Mat::Zero(1, 3);
  Mat g(1, 3);
  g << 2.0, -0.5, 1e-3;
  adam.step({&p}, {&g});
  for (Eigen::Index j = 0; j < 3; ++j)
    CHECK(p(0, j) == doctest::Approx(-0.01 * (g(0, j) > 0 ? 1.0 : -1.0)).epsilon(1e-4));
}

TEST_CASE("adam: constant gradient descends against its sign") {
  ad::Adam adam({0.05, 0.9, 0.999, 1e-8});
  Mat p = Mat::Zero(1, 1);
  Mat g = Mat::Constant(1, 1, 3.0);
  for (int i = 0; i < 50; ++i) adam.step({&p}, {&g});
  CHECK(p(0, 0) < -0.5);
}

TEST_CASE("adam: shape mismatch rejected") {
  ad::Adam adam({0.1, 0.0, 0.9, 1e-8});
  Mat p = Mat::Zero(2, 2);
  Mat g = Mat::Zero(2, 3);
  CHECK_THROWS_AS(adam.step({&p}, {&g}), std::invalid_argument);
}
