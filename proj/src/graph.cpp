#include "sigmoid/graph.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace sigmoid::ad {

void tanh_inplace(Mat& y) {
  // tanh(x) = (exp(2x) - 1) / (exp(2x) + 1); the clamp keeps exp finite and
  // matches tanh to within one ulp at the saturation boundary.
  Arr t = (2.0 * y.array().min(19.0).max(-19.0)).exp();
  y.array() = (t - 1.0) / (t + 1.0);
}

namespace {

[[noreturn]] void shape_error(const std::string& op, const Mat& a, const Mat& b) {
  throw std::invalid_argument("graph: " + op + " shape mismatch (" + std::to_string(a.rows()) +
                              "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                              "x" + std::to_string(b.cols()) + ")");
}

}  // namespace

NodeId Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  eval_node(nodes_.back());
  ancestor_cache_.clear();
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Graph::check(NodeId id) const {
  if (id < 0 || id >= static_cast<NodeId>(nodes_.size()))
    throw std::invalid_argument("graph: invalid node id " + std::to_string(id));
  return id;
}

NodeId Graph::value(Mat v) {
  Node n;
  n.op = Op::Value;
  n.value = std::move(v);
  nodes_.push_back(std::move(n));
  ancestor_cache_.clear();
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Graph::scalar(double v) {
  Mat m(1, 1);
  m(0, 0) = v;
  return value(std::move(m));
}

NodeId Graph::zeros(Eigen::Index rows, Eigen::Index cols) { return value(Mat::Zero(rows, cols)); }
NodeId Graph::ones(Eigen::Index rows, Eigen::Index cols) { return value(Mat::Ones(rows, cols)); }

void Graph::set_value(NodeId id, const Mat& v) {
  Node& n = nodes_[check(id)];
  if (n.op != Op::Value) throw std::invalid_argument("graph: set_value on non-leaf node");
  if (n.value.rows() != v.rows() || n.value.cols() != v.cols())
    shape_error("set_value", n.value, v);
  n.value = v;
}

#define BINARY_SAME_SHAPE(NAME, OPK)                                   \
  NodeId Graph::NAME(NodeId a, NodeId b) {                             \
    const Mat& va = nodes_[check(a)].value;                            \
    const Mat& vb = nodes_[check(b)].value;                            \
    if (va.rows() != vb.rows() || va.cols() != vb.cols())              \
      shape_error(#NAME, va, vb);                                      \
    Node n;                                                            \
    n.op = OPK;                                                        \
    n.in = {a, b};                                                     \
    return push(std::move(n));                                         \
  }

BINARY_SAME_SHAPE(add, Op::Add)
BINARY_SAME_SHAPE(sub, Op::Sub)
BINARY_SAME_SHAPE(mul, Op::Mul)
BINARY_SAME_SHAPE(div, Op::Div)
#undef BINARY_SAME_SHAPE

NodeId Graph::scale(NodeId a, double c) {
  Node n;
  n.op = Op::Scale;
  n.in = {check(a)};
  n.c = c;
  return push(std::move(n));
}

NodeId Graph::add_scalar(NodeId a, double c) {
  Node n;
  n.op = Op::AddScalar;
  n.in = {check(a)};
  n.c = c;
  return push(std::move(n));
}

NodeId Graph::matmul(NodeId a, NodeId b, bool trans_a, bool trans_b) {
  const Mat& va = nodes_[check(a)].value;
  const Mat& vb = nodes_[check(b)].value;
  const Eigen::Index ka = trans_a ? va.rows() : va.cols();
  const Eigen::Index kb = trans_b ? vb.cols() : vb.rows();
  if (ka != kb) shape_error("matmul inner", va, vb);
  Node n;
  n.op = Op::MatMul;
  n.in = {a, b};
  n.ta = trans_a;
  n.tb = trans_b;
  return push(std::move(n));
}

NodeId Graph::add_rowvec(NodeId a, NodeId v) {
  const Mat& va = nodes_[check(a)].value;
  const Mat& vv = nodes_[check(v)].value;
  if (vv.rows() != 1 || vv.cols() != va.cols()) shape_error("add_rowvec", va, vv);
  Node n;
  n.op = Op::AddRowVec;
  n.in = {a, v};
  return push(std::move(n));
}

NodeId Graph::mul_rowvec(NodeId a, NodeId v) {
  const Mat& va = nodes_[check(a)].value;
  const Mat& vv = nodes_[check(v)].value;
  if (vv.rows() != 1 || vv.cols() != va.cols()) shape_error("mul_rowvec", va, vv);
  Node n;
  n.op = Op::MulRowVec;
  n.in = {a, v};
  return push(std::move(n));
}

NodeId Graph::broadcast(NodeId a, Eigen::Index rows, Eigen::Index cols) {
  const Mat& va = nodes_[check(a)].value;
  const bool ok = (va.rows() == 1 && va.cols() == 1) || (va.rows() == 1 && va.cols() == cols) ||
                  (va.cols() == 1 && va.rows() == rows);
  if (!ok)
    throw std::invalid_argument("graph: broadcast source must be [1,1], [1,cols] or [rows,1]");
  Node n;
  n.op = Op::Broadcast;
  n.in = {a};
  n.i0 = static_cast<int>(rows);
  n.i1 = static_cast<int>(cols);
  return push(std::move(n));
}

#define UNARY(NAME, OPK)                \
  NodeId Graph::NAME(NodeId a) {        \
    Node n;                             \
    n.op = OPK;                         \
    n.in = {check(a)};                  \
    return push(std::move(n));          \
  }

UNARY(tanh, Op::Tanh)
UNARY(exp, Op::Exp)
UNARY(square, Op::Square)
UNARY(sqrt, Op::Sqrt)
UNARY(sum, Op::Sum)
UNARY(mean, Op::Mean)
UNARY(col_sum, Op::ColSum)
UNARY(col_mean, Op::ColMean)
UNARY(row_sum, Op::RowSum)
UNARY(row_norm, Op::RowNorm)
#undef UNARY

NodeId Graph::concat_rows(const std::vector<NodeId>& parts) {
  if (parts.empty()) throw std::invalid_argument("graph: concat_rows of nothing");
  const Eigen::Index c = nodes_[check(parts[0])].value.cols();
  for (NodeId p : parts)
    if (nodes_[check(p)].value.cols() != c)
      throw std::invalid_argument("graph: concat_rows column mismatch");
  Node n;
  n.op = Op::ConcatRows;
  n.in = parts;
  return push(std::move(n));
}

NodeId Graph::concat_cols(const std::vector<NodeId>& parts) {
  if (parts.empty()) throw std::invalid_argument("graph: concat_cols of nothing");
  const Eigen::Index r = nodes_[check(parts[0])].value.rows();
  for (NodeId p : parts)
    if (nodes_[check(p)].value.rows() != r)
      throw std::invalid_argument("graph: concat_cols row mismatch");
  Node n;
  n.op = Op::ConcatCols;
  n.in = parts;
  return push(std::move(n));
}

NodeId Graph::slice_rows(NodeId a, int start, int len) {
  const Mat& va = nodes_[check(a)].value;
  if (start < 0 || len <= 0 || start + len > va.rows())
    throw std::invalid_argument("graph: slice_rows out of range");
  Node n;
  n.op = Op::SliceRows;
  n.in = {a};
  n.i0 = start;
  n.i1 = len;
  return push(std::move(n));
}

NodeId Graph::slice_cols(NodeId a, int start, int len) {
  const Mat& va = nodes_[check(a)].value;
  if (start < 0 || len <= 0 || start + len > va.cols())
    throw std::invalid_argument("graph: slice_cols out of range");
  Node n;
  n.op = Op::SliceCols;
  n.in = {a};
  n.i0 = start;
  n.i1 = len;
  return push(std::move(n));
}

NodeId Graph::scatter_rows(NodeId a, int start, int total_rows) {
  const Mat& va = nodes_[check(a)].value;
  if (start < 0 || start + va.rows() > total_rows)
    throw std::invalid_argument("graph: scatter_rows out of range");
  Node n;
  n.op = Op::ScatterRows;
  n.in = {a};
  n.i0 = start;
  n.i1 = total_rows;
  return push(std::move(n));
}

NodeId Graph::scatter_cols(NodeId a, int start, int total_cols) {
  const Mat& va = nodes_[check(a)].value;
  if (start < 0 || start + va.cols() > total_cols)
    throw std::invalid_argument("graph: scatter_cols out of range");
  Node n;
  n.op = Op::ScatterCols;
  n.in = {a};
  n.i0 = start;
  n.i1 = total_cols;
  return push(std::move(n));
}

NodeId Graph::gather_rows(NodeId a, std::vector<int> idx) {
  const Mat& va = nodes_[check(a)].value;
  if (idx.empty()) throw std::invalid_argument("graph: gather_rows with empty index list");
  for (int i : idx)
    if (i < 0 || i >= va.rows()) throw std::invalid_argument("graph: gather_rows index out of range");
  Node n;
  n.op = Op::GatherRows;
  n.in = {a};
  n.idx = std::move(idx);
  return push(std::move(n));
}

NodeId Graph::reshape(NodeId a, Eigen::Index rows, Eigen::Index cols) {
  const Mat& va = nodes_[check(a)].value;
  if (va.size() != rows * cols) throw std::invalid_argument("graph: reshape size mismatch");
  Node n;
  n.op = Op::Reshape;
  n.in = {a};
  n.i0 = static_cast<int>(rows);
  n.i1 = static_cast<int>(cols);
  return push(std::move(n));
}

void Graph::eval_node(Node& n) {
  auto v = [&](int k) -> const Mat& { return nodes_[n.in[k]].value; };
  switch (n.op) {
    case Op::Value:
      break;
    case Op::Add:
      n.value.noalias() = v(0) + v(1);
      break;
    case Op::Sub:
      n.value.noalias() = v(0) - v(1);
      break;
    case Op::Mul:
      n.value = v(0).cwiseProduct(v(1));
      break;
    case Op::Div:
      n.value = v(0).cwiseQuotient(v(1));
      break;
    case Op::Scale:
      n.value = n.c * v(0);
      break;
    case Op::AddScalar:
      n.value = v(0).array() + n.c;
      break;
    case Op::MatMul:
      if (!n.ta && !n.tb)
        n.value.noalias() = v(0) * v(1);
      else if (n.ta && !n.tb)
        n.value.noalias() = v(0).transpose() * v(1);
      else if (!n.ta && n.tb)
        n.value.noalias() = v(0) * v(1).transpose();
      else
        n.value.noalias() = v(0).transpose() * v(1).transpose();
      break;
    case Op::AddRowVec:
      n.value = v(0).array().rowwise() + v(1).row(0).array();
      break;
    case Op::MulRowVec:
      n.value = v(0).array().rowwise() * v(1).row(0).array();
      break;
    case Op::Broadcast: {
      const Mat& a = v(0);
      n.value.resize(n.i0, n.i1);
      if (a.rows() == 1 && a.cols() == 1)
        n.value.setConstant(a(0, 0));
      else if (a.rows() == 1)
        n.value = a.row(0).replicate(n.i0, 1);
      else
        n.value = a.col(0).replicate(1, n.i1);
      break;
    }
    case Op::Tanh:
      n.value = v(0);
      tanh_inplace(n.value);
      break;
    case Op::Exp:
      n.value = v(0).array().exp();
      break;
    case Op::Square:
      n.value = v(0).array().square();
      break;
    case Op::Sqrt:
      n.value = v(0).array().sqrt();
      break;
    case Op::Sum:
      n.value.resize(1, 1);
      n.value(0, 0) = v(0).sum();
      break;
    case Op::Mean:
      n.value.resize(1, 1);
      n.value(0, 0) = v(0).mean();
      break;
    case Op::ColSum:
      n.value = v(0).colwise().sum();
      break;
    case Op::ColMean:
      n.value = v(0).colwise().mean();
      break;
    case Op::RowSum:
      n.value = v(0).rowwise().sum();
      break;
    case Op::RowNorm:
      n.value = v(0).rowwise().norm();
      break;
    case Op::ConcatRows: {
      Eigen::Index r = 0;
      for (NodeId p : n.in) r += nodes_[p].value.rows();
      n.value.resize(r, nodes_[n.in[0]].value.cols());
      Eigen::Index at = 0;
      for (NodeId p : n.in) {
        const Mat& part = nodes_[p].value;
        n.value.middleRows(at, part.rows()) = part;
        at += part.rows();
      }
      break;
    }
    case Op::ConcatCols: {
      Eigen::Index c = 0;
      for (NodeId p : n.in) c += nodes_[p].value.cols();
      n.value.resize(nodes_[n.in[0]].value.rows(), c);
      Eigen::Index at = 0;
      for (NodeId p : n.in) {
        const Mat& part = nodes_[p].value;
        n.value.middleCols(at, part.cols()) = part;
        at += part.cols();
      }
      break;
    }
    case Op::SliceRows:
      n.value = v(0).middleRows(n.i0, n.i1);
      break;
    case Op::SliceCols:
      n.value = v(0).middleCols(n.i0, n.i1);
      break;
    case Op::ScatterRows:
      n.value = Mat::Zero(n.i1, v(0).cols());
      n.value.middleRows(n.i0, v(0).rows()) = v(0);
      break;
    case Op::ScatterCols:
      n.value = Mat::Zero(v(0).rows(), n.i1);
      n.value.middleCols(n.i0, v(0).cols()) = v(0);
      break;
    case Op::GatherRows: {
      n.value.resize(static_cast<Eigen::Index>(n.idx.size()), v(0).cols());
      for (size_t k = 0; k < n.idx.size(); ++k) n.value.row(static_cast<Eigen::Index>(k)) = v(0).row(n.idx[k]);
      break;
    }
    case Op::Reshape: {
      const Mat& a = v(0);
      n.value.resize(n.i0, n.i1);
      // row-major storage on both sides: a plain copy reinterprets correctly
      std::copy(a.data(), a.data() + a.size(), n.value.data());
      break;
    }
  }
}

void Graph::forward() {
  for (Node& n : nodes_)
    if (n.op != Op::Value) eval_node(n);
}

const std::vector<char>& Graph::ancestors_of(NodeId out) {
  auto it = ancestor_cache_.find(out);
  if (it != ancestor_cache_.end()) return it->second;
  std::vector<char> mark(nodes_.size(), 0);
  mark[out] = 1;
  for (NodeId id = out; id >= 0; --id) {
    if (!mark[id]) continue;
    for (NodeId p : nodes_[id].in) mark[p] = 1;
  }
  return ancestor_cache_.emplace(out, std::move(mark)).first->second;
}

void Graph::accumulate(NodeId id, const Mat& contribution) {
  Node& n = nodes_[id];
  if (n.stamp != pass_) {
    n.adjoint = contribution;
    n.stamp = pass_;
  } else {
    n.adjoint += contribution;
  }
}

void Graph::backward(NodeId out) {
  check(out);
  const Mat& ov = nodes_[out].value;
  if (ov.rows() != 1 || ov.cols() != 1)
    throw std::invalid_argument("graph: backward target must be scalar");
  const std::vector<char>& anc = ancestors_of(out);
  ++pass_;
  nodes_[out].adjoint = Mat::Ones(1, 1);
  nodes_[out].stamp = pass_;
  for (NodeId id = out; id >= 0; --id) {
    if (!anc[id] || nodes_[id].stamp != pass_) continue;
    backprop_node(id);
  }
}

void Graph::backprop_node(NodeId id) {
  Node& n = nodes_[id];
  const Mat& g = n.adjoint;
  auto v = [&](int k) -> const Mat& { return nodes_[n.in[k]].value; };
  switch (n.op) {
    case Op::Value:
      break;
    case Op::Add:
      accumulate(n.in[0], g);
      accumulate(n.in[1], g);
      break;
    case Op::Sub:
      accumulate(n.in[0], g);
      accumulate(n.in[1], -g);
      break;
    case Op::Mul:
      accumulate(n.in[0], g.cwiseProduct(v(1)));
      accumulate(n.in[1], g.cwiseProduct(v(0)));
      break;
    case Op::Div:
      accumulate(n.in[0], g.cwiseQuotient(v(1)));
      accumulate(n.in[1], -g.cwiseProduct(n.value).cwiseQuotient(v(1)));
      break;
    case Op::Scale:
      accumulate(n.in[0], n.c * g);
      break;
    case Op::AddScalar:
      accumulate(n.in[0], g);
      break;
    case Op::MatMul: {
      const Mat& a = v(0);
      const Mat& b = v(1);
      if (!n.ta && !n.tb) {
        accumulate(n.in[0], g * b.transpose());
        accumulate(n.in[1], a.transpose() * g);
      } else if (n.ta && !n.tb) {
        accumulate(n.in[0], b * g.transpose());
        accumulate(n.in[1], a * g);
      } else if (!n.ta && n.tb) {
        accumulate(n.in[0], g * b);
        accumulate(n.in[1], g.transpose() * a);
      } else {
        accumulate(n.in[0], (g * b).transpose());
        accumulate(n.in[1], (a * g).transpose());
      }
      break;
    }
    case Op::AddRowVec:
      accumulate(n.in[0], g);
      accumulate(n.in[1], g.colwise().sum());
      break;
    case Op::MulRowVec:
      accumulate(n.in[0], Mat(g.array().rowwise() * v(1).row(0).array()));
      accumulate(n.in[1], Mat(g.cwiseProduct(v(0)).colwise().sum()));
      break;
    case Op::Broadcast: {
      const Mat& a = v(0);
      if (a.rows() == 1 && a.cols() == 1) {
        Mat s(1, 1);
        s(0, 0) = g.sum();
        accumulate(n.in[0], s);
      } else if (a.rows() == 1) {
        accumulate(n.in[0], g.colwise().sum());
      } else {
        accumulate(n.in[0], g.rowwise().sum());
      }
      break;
    }
    case Op::Tanh:
      accumulate(n.in[0], Mat(g.array() * (1.0 - n.value.array().square())));
      break;
    case Op::Exp:
      accumulate(n.in[0], g.cwiseProduct(n.value));
      break;
    case Op::Square:
      accumulate(n.in[0], Mat(2.0 * g.cwiseProduct(v(0))));
      break;
    case Op::Sqrt:
      accumulate(n.in[0], Mat(g.array() / (2.0 * n.value.array())));
      break;
    case Op::Sum:
      accumulate(n.in[0], Mat::Constant(v(0).rows(), v(0).cols(), g(0, 0)));
      break;
    case Op::Mean:
      accumulate(n.in[0],
                 Mat::Constant(v(0).rows(), v(0).cols(), g(0, 0) / static_cast<double>(v(0).size())));
      break;
    case Op::ColSum:
      accumulate(n.in[0], g.row(0).replicate(v(0).rows(), 1));
      break;
    case Op::ColMean:
      accumulate(n.in[0],
                 Mat(g.row(0).replicate(v(0).rows(), 1) / static_cast<double>(v(0).rows())));
      break;
    case Op::RowSum:
      accumulate(n.in[0], g.col(0).replicate(1, v(0).cols()));
      break;
    case Op::RowNorm: {
      // d||r||/dr = r/||r||; rows with zero norm get a zero subgradient
      Mat inv = n.value;
      for (Eigen::Index i = 0; i < inv.rows(); ++i)
        inv(i, 0) = inv(i, 0) > 0.0 ? g(i, 0) / inv(i, 0) : 0.0;
      accumulate(n.in[0], Mat(v(0).array().colwise() * inv.col(0).array()));
      break;
    }
    case Op::ConcatRows: {
      Eigen::Index at = 0;
      for (NodeId p : n.in) {
        const Eigen::Index r = nodes_[p].value.rows();
        accumulate(p, g.middleRows(at, r));
        at += r;
      }
      break;
    }
    case Op::ConcatCols: {
      Eigen::Index at = 0;
      for (NodeId p : n.in) {
        const Eigen::Index c = nodes_[p].value.cols();
        accumulate(p, g.middleCols(at, c));
        at += c;
      }
      break;
    }
    case Op::SliceRows: {
      Mat pad = Mat::Zero(v(0).rows(), v(0).cols());
      pad.middleRows(n.i0, n.i1) = g;
      accumulate(n.in[0], pad);
      break;
    }
    case Op::SliceCols: {
      Mat pad = Mat::Zero(v(0).rows(), v(0).cols());
      pad.middleCols(n.i0, n.i1) = g;
      accumulate(n.in[0], pad);
      break;
    }
    case Op::ScatterRows:
      accumulate(n.in[0], g.middleRows(n.i0, v(0).rows()));
      break;
    case Op::ScatterCols:
      accumulate(n.in[0], g.middleCols(n.i0, v(0).cols()));
      break;
    case Op::GatherRows: {
      Mat pad = Mat::Zero(v(0).rows(), v(0).cols());
      for (size_t k = 0; k < n.idx.size(); ++k) pad.row(n.idx[k]) += g.row(static_cast<Eigen::Index>(k));
      accumulate(n.in[0], pad);
      break;
    }
    case Op::Reshape: {
      Mat back(v(0).rows(), v(0).cols());
      std::copy(g.data(), g.data() + g.size(), back.data());
      accumulate(n.in[0], back);
      break;
    }
  }
}

Mat Graph::adjoint(NodeId id) const {
  const Node& n = nodes_[check(id)];
  if (n.stamp == pass_ && pass_ != 0) return n.adjoint;
  return Mat::Zero(n.value.rows(), n.value.cols());
}

Mat& Graph::value_mut(NodeId id) {
  Node& n = nodes_[check(id)];
  if (n.op != Op::Value) throw std::invalid_argument("graph: value_mut on non-leaf node");
  return n.value;
}

const Mat& Graph::adjoint_ref(NodeId id) const {
  const Node& n = nodes_[check(id)];
  if (n.stamp != pass_ || pass_ == 0)
    throw std::logic_error("graph: adjoint_ref on a node the last backward did not reach");
  return n.adjoint;
}

NodeId Graph::tangent(NodeId out, NodeId wrt) {
  check(out);
  check(wrt);
  std::unordered_map<NodeId, NodeId> tg;
  tg[wrt] = value(Mat::Ones(rows(wrt), cols(wrt)));
  auto get = [&](NodeId id) -> NodeId {
    auto it = tg.find(id);
    return it == tg.end() ? -1 : it->second;
  };
  const NodeId limit = out;
  for (NodeId id = 0; id <= limit; ++id) {
    // copy: pushing tangent nodes below may reallocate nodes_
    const Node n = nodes_[id];
    if (n.op == Op::Value) continue;
    bool touched = false;
    for (NodeId p : n.in)
      if (get(p) >= 0) {
        touched = true;
        break;
      }
    if (!touched) continue;
    const NodeId a = n.in[0];
    const NodeId ta = get(a);
    const NodeId b = n.in.size() > 1 ? n.in[1] : -1;
    const NodeId tb = b >= 0 ? get(b) : -1;
    NodeId t = -1;
    switch (n.op) {
      case Op::Value:
        break;
      case Op::Add:
        t = (ta >= 0 && tb >= 0) ? add(ta, tb) : (ta >= 0 ? ta : tb);
        break;
      case Op::Sub:
        t = (ta >= 0 && tb >= 0) ? sub(ta, tb) : (ta >= 0 ? ta : scale(tb, -1.0));
        break;
      case Op::Mul: {
        NodeId t1 = ta >= 0 ? mul(ta, b) : -1;
        NodeId t2 = tb >= 0 ? mul(a, tb) : -1;
        t = (t1 >= 0 && t2 >= 0) ? add(t1, t2) : (t1 >= 0 ? t1 : t2);
        break;
      }
      case Op::Div: {
        NodeId t1 = ta >= 0 ? div(ta, b) : -1;
        NodeId t2 = tb >= 0 ? mul(div(id, b), tb) : -1;  // y/b * tb
        t = (t1 >= 0 && t2 >= 0) ? sub(t1, t2) : (t1 >= 0 ? t1 : scale(t2, -1.0));
        break;
      }
      case Op::Scale:
        t = scale(ta, n.c);
        break;
      case Op::AddScalar:
        t = ta;
        break;
      case Op::MatMul: {
        NodeId t1 = ta >= 0 ? matmul(ta, b, n.ta, n.tb) : -1;
        NodeId t2 = tb >= 0 ? matmul(a, tb, n.ta, n.tb) : -1;
        t = (t1 >= 0 && t2 >= 0) ? add(t1, t2) : (t1 >= 0 ? t1 : t2);
        break;
      }
      case Op::AddRowVec: {
        NodeId t2 = tb >= 0 ? broadcast(tb, rows(id), cols(id)) : -1;
        t = (ta >= 0 && t2 >= 0) ? add(ta, t2) : (ta >= 0 ? ta : t2);
        break;
      }
      case Op::MulRowVec: {
        NodeId t1 = ta >= 0 ? mul_rowvec(ta, b) : -1;
        NodeId t2 = tb >= 0 ? mul(a, broadcast(tb, rows(id), cols(id))) : -1;
        t = (t1 >= 0 && t2 >= 0) ? add(t1, t2) : (t1 >= 0 ? t1 : t2);
        break;
      }
      case Op::Broadcast:
        t = broadcast(ta, n.i0, n.i1);
        break;
      case Op::Tanh:
        t = mul(ta, add_scalar(scale(square(id), -1.0), 1.0));
        break;
      case Op::Exp:
        t = mul(ta, id);
        break;
      case Op::Square:
        t = scale(mul(a, ta), 2.0);
        break;
      case Op::Sqrt:
        t = div(ta, scale(id, 2.0));
        break;
      case Op::Sum:
        t = sum(ta);
        break;
      case Op::Mean:
        t = mean(ta);
        break;
      case Op::ColSum:
        t = col_sum(ta);
        break;
      case Op::ColMean:
        t = col_mean(ta);
        break;
      case Op::RowSum:
        t = row_sum(ta);
        break;
      case Op::RowNorm:
        t = div(row_sum(mul(a, ta)), id);
        break;
      case Op::ConcatRows:
      case Op::ConcatCols: {
        std::vector<NodeId> parts;
        parts.reserve(n.in.size());
        for (NodeId p : n.in) {
          NodeId tp = get(p);
          parts.push_back(tp >= 0 ? tp : zeros(rows(p), cols(p)));
        }
        t = n.op == Op::ConcatRows ? concat_rows(parts) : concat_cols(parts);
        break;
      }
      case Op::SliceRows:
        t = slice_rows(ta, n.i0, n.i1);
        break;
      case Op::SliceCols:
        t = slice_cols(ta, n.i0, n.i1);
        break;
      case Op::ScatterRows:
        t = scatter_rows(ta, n.i0, n.i1);
        break;
      case Op::ScatterCols:
        t = scatter_cols(ta, n.i0, n.i1);
        break;
      case Op::GatherRows:
        t = gather_rows(ta, n.idx);
        break;
      case Op::Reshape:
        t = reshape(ta, n.i0, n.i1);
        break;
    }
    if (t >= 0) tg[id] = t;
  }
  const NodeId result = get(out);
  return result >= 0 ? result : zeros(rows(out), cols(out));
}

NodeId Graph::grad_nodes(NodeId out, NodeId wrt, NodeId seed) {
  check(out);
  check(wrt);
  if (seed < 0) {
    if (rows(out) != 1 || cols(out) != 1)
      throw std::invalid_argument("graph: grad_nodes needs a scalar output or an explicit seed");
    seed = ones(1, 1);
  } else {
    check(seed);
  }

  // descendants of wrt, restricted to ids <= out
  std::vector<char> desc(nodes_.size(), 0);
  desc[wrt] = 1;
  for (NodeId id = wrt + 1; id <= out; ++id)
    for (NodeId p : nodes_[id].in)
      if (desc[p]) {
        desc[id] = 1;
        break;
      }
  if (!desc[out]) return zeros(rows(wrt), cols(wrt));

  // copy: node creation below invalidates the cached ancestor mask
  const std::vector<char> anc = ancestors_of(out);
  std::map<NodeId, NodeId> gj;
  gj[out] = seed;
  auto emit = [&](NodeId target, NodeId contribution) {
    auto it = gj.find(target);
    if (it == gj.end())
      gj[target] = contribution;
    else
      it->second = add(it->second, contribution);
  };

  for (NodeId id = out; id > wrt; --id) {
    if (!anc[id] || !desc[id]) continue;
    auto it = gj.find(id);
    if (it == gj.end()) continue;
    const NodeId g = it->second;
    // copy: emitting adjoint nodes may reallocate nodes_
    const Node n = nodes_[id];
    const NodeId a = n.in.empty() ? -1 : n.in[0];
    const NodeId b = n.in.size() > 1 ? n.in[1] : -1;
    switch (n.op) {
      case Op::Value:
        break;
      case Op::Add:
        if (desc[a]) emit(a, g);
        if (desc[b]) emit(b, g);
        break;
      case Op::Sub:
        if (desc[a]) emit(a, g);
        if (desc[b]) emit(b, scale(g, -1.0));
        break;
      case Op::Mul:
        if (desc[a]) emit(a, mul(g, b));
        if (desc[b]) emit(b, mul(g, a));
        break;
      case Op::Div:
        if (desc[a]) emit(a, div(g, b));
        if (desc[b]) emit(b, scale(mul(g, div(id, b)), -1.0));
        break;
      case Op::Scale:
        if (desc[a]) emit(a, scale(g, n.c));
        break;
      case Op::AddScalar:
        if (desc[a]) emit(a, g);
        break;
      case Op::MatMul:
        if (!n.ta && !n.tb) {
          if (desc[a]) emit(a, matmul(g, b, false, true));
          if (desc[b]) emit(b, matmul(a, g, true, false));
        } else if (n.ta && !n.tb) {
          if (desc[a]) emit(a, matmul(b, g, false, true));
          if (desc[b]) emit(b, matmul(a, g, false, false));
        } else if (!n.ta && n.tb) {
          if (desc[a]) emit(a, matmul(g, b, false, false));
          if (desc[b]) emit(b, matmul(g, a, true, false));
        } else {
          if (desc[a]) emit(a, matmul(b, g, true, true));
          if (desc[b]) emit(b, matmul(g, a, true, true));
        }
        break;
      case Op::AddRowVec:
        if (desc[a]) emit(a, g);
        if (desc[b]) emit(b, col_sum(g));
        break;
      case Op::MulRowVec:
        if (desc[a]) emit(a, mul_rowvec(g, b));
        if (desc[b]) emit(b, col_sum(mul(g, a)));
        break;
      case Op::Broadcast: {
        if (!desc[a]) break;
        if (rows(a) == 1 && cols(a) == 1)
          emit(a, sum(g));
        else if (rows(a) == 1)
          emit(a, col_sum(g));
        else
          emit(a, row_sum(g));
        break;
      }
      case Op::Tanh:
        if (desc[a]) emit(a, mul(g, add_scalar(scale(square(id), -1.0), 1.0)));
        break;
      case Op::Exp:
        if (desc[a]) emit(a, mul(g, id));
        break;
      case Op::Square:
        if (desc[a]) emit(a, scale(mul(g, a), 2.0));
        break;
      case Op::Sqrt:
        if (desc[a]) emit(a, div(g, scale(id, 2.0)));
        break;
      case Op::Sum:
        if (desc[a]) emit(a, broadcast(g, rows(a), cols(a)));
        break;
      case Op::Mean:
        if (desc[a])
          emit(a, scale(broadcast(g, rows(a), cols(a)),
                        1.0 / static_cast<double>(rows(a) * cols(a))));
        break;
      case Op::ColSum:
        if (desc[a]) emit(a, broadcast(g, rows(a), cols(a)));
        break;
      case Op::ColMean:
        if (desc[a])
          emit(a, scale(broadcast(g, rows(a), cols(a)), 1.0 / static_cast<double>(rows(a))));
        break;
      case Op::RowSum:
        if (desc[a]) emit(a, broadcast(g, rows(a), cols(a)));
        break;
      case Op::RowNorm:
        if (desc[a])
          emit(a, mul(div(a, broadcast(id, rows(a), cols(a))), broadcast(g, rows(a), cols(a))));
        break;
      case Op::ConcatRows: {
        Eigen::Index at = 0;
        for (NodeId p : n.in) {
          const Eigen::Index r = rows(p);
          if (desc[p]) emit(p, slice_rows(g, static_cast<int>(at), static_cast<int>(r)));
          at += r;
        }
        break;
      }
      case Op::ConcatCols: {
        Eigen::Index at = 0;
        for (NodeId p : n.in) {
          const Eigen::Index c = cols(p);
          if (desc[p]) emit(p, slice_cols(g, static_cast<int>(at), static_cast<int>(c)));
          at += c;
        }
        break;
      }
      case Op::SliceRows:
        if (desc[a]) emit(a, scatter_rows(g, n.i0, static_cast<int>(rows(a))));
        break;
      case Op::SliceCols:
        if (desc[a]) emit(a, scatter_cols(g, n.i0, static_cast<int>(cols(a))));
        break;
      case Op::ScatterRows:
        if (desc[a]) emit(a, slice_rows(g, n.i0, static_cast<int>(rows(a))));
        break;
      case Op::ScatterCols:
        if (desc[a]) emit(a, slice_cols(g, n.i0, static_cast<int>(cols(a))));
        break;
      case Op::GatherRows:
        throw std::invalid_argument("graph: grad_nodes through GatherRows is not supported");
      case Op::Reshape:
        if (desc[a]) emit(a, reshape(g, rows(a), cols(a)));
        break;
    }
  }
  auto it = gj.find(wrt);
  return it == gj.end() ? zeros(rows(wrt), cols(wrt)) : it->second;
}

Dual time_derivative(Graph& g, NodeId output, NodeId t_input) {
  if (g.cols(t_input) != 1)
    throw std::invalid_argument("time_derivative: time input must be a [k,1] column");
  return Dual{output, g.tangent(output, t_input)};
}

NodeId input_gradient_norm(Graph& g, NodeId output, NodeId x_input) {
  const bool scalar_out = g.rows(output) == 1 && g.cols(output) == 1;
  const bool rowwise_out = g.cols(output) == 1 && g.rows(output) == g.rows(x_input);
  if (!scalar_out && !rowwise_out)
    throw std::invalid_argument("input_gradient_norm: output must be scalar or one score per input row");
  NodeId seed = g.ones(g.rows(output), 1);
  NodeId grad = g.grad_nodes(output, x_input, seed);
  return g.row_norm(grad);
}

void Adam::step(const std::vector<Mat*>& params, const std::vector<const Mat*>& grads) {
  if (params.size() != grads.size())
    throw std::invalid_argument("adam: parameter/gradient count mismatch");
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
      m_[i] = Mat::Zero(params[i]->rows(), params[i]->cols());
      v_[i] = Mat::Zero(params[i]->rows(), params[i]->cols());
    }
  }
  if (m_.size() != params.size()) throw std::invalid_argument("adam: parameter count changed");
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < params.size(); ++i) {
    Mat& p = *params[i];
    const Mat& g = *grads[i];
    if (p.rows() != g.rows() || p.cols() != g.cols())
      throw std::invalid_argument("adam: gradient shape mismatch at parameter " + std::to_string(i));
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
    p.array() -= cfg_.lr * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + cfg_.eps);
  }
}

}  // namespace sigmoid::ad
