#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace sigmoid::ad {

// All tensors are dense 0/1/2-d row-major doubles. Scalars are [1,1].
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Arr = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Vectorized tanh via exp(2x); used by both the graph op and the plain
// evaluation paths so the two routes agree bit-for-bit.
void tanh_inplace(Mat& y);

enum class Op : std::uint8_t {
  Value,       // leaf: input, parameter, or constant
  Add,         // a + b, same shape
  Sub,         // a - b, same shape
  Mul,         // elementwise a * b, same shape
  Div,         // elementwise a / b, same shape
  Scale,       // c * a
  AddScalar,   // a + c
  MatMul,      // op(a) * op(b), optional transposes
  AddRowVec,   // a[N,d] + broadcast v[1,d]
  MulRowVec,   // a[N,d] * broadcast v[1,d]
  Broadcast,   // [1,1] | [1,c] | [r,1] -> [r,c]
  Tanh,
  Exp,
  Square,
  Sqrt,
  Sum,         // all entries -> [1,1]
  Mean,        // all entries -> [1,1]
  ColSum,      // sum over rows -> [1,c]
  ColMean,     // mean over rows -> [1,c]
  RowSum,      // sum over cols -> [r,1]
  RowNorm,     // Euclidean norm per row -> [r,1]
  ConcatRows,  // variadic
  ConcatCols,  // variadic
  SliceRows,   // rows [start, start+len)
  SliceCols,   // cols [start, start+len)
  ScatterRows, // rows of a embedded at offset into zeros[total, c]
  ScatterCols, // cols of a embedded at offset into zeros[r, total]
  GatherRows,  // rows picked by index list (repeats allowed)
  Reshape,     // row-major reinterpret
};

using NodeId = std::int32_t;

struct Node {
  Op op = Op::Value;
  std::vector<NodeId> in;
  Mat value;
  Mat adjoint;
  double c = 0.0;           // Scale / AddScalar coefficient
  int i0 = 0, i1 = 0;       // slice start/len, reshape rows/cols, broadcast target
  bool ta = false, tb = false;  // MatMul transpose flags
  std::vector<int> idx;     // GatherRows indices
  std::uint64_t stamp = 0;  // last backward pass that touched the adjoint
};

// A build-once, run-many computation tape. Node ids are topological by
// construction (an op's inputs always precede it). Leaves may be rebound with
// set_value between runs; shapes are fixed after creation.
class Graph {
 public:
  NodeId value(Mat v);
  NodeId scalar(double v);
  NodeId zeros(Eigen::Index rows, Eigen::Index cols);
  NodeId ones(Eigen::Index rows, Eigen::Index cols);

  void set_value(NodeId id, const Mat& v);  // leaves only, same shape

  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId div(NodeId a, NodeId b);
  NodeId scale(NodeId a, double c);
  NodeId add_scalar(NodeId a, double c);
  NodeId matmul(NodeId a, NodeId b, bool trans_a = false, bool trans_b = false);
  NodeId add_rowvec(NodeId a, NodeId v);
  NodeId mul_rowvec(NodeId a, NodeId v);
  NodeId broadcast(NodeId a, Eigen::Index rows, Eigen::Index cols);
  NodeId tanh(NodeId a);
  NodeId exp(NodeId a);
  NodeId square(NodeId a);
  NodeId sqrt(NodeId a);
  NodeId sum(NodeId a);
  NodeId mean(NodeId a);
  NodeId col_sum(NodeId a);
  NodeId col_mean(NodeId a);
  NodeId row_sum(NodeId a);
  NodeId row_norm(NodeId a);
  NodeId concat_rows(const std::vector<NodeId>& parts);
  NodeId concat_cols(const std::vector<NodeId>& parts);
  NodeId slice_rows(NodeId a, int start, int len);
  NodeId slice_cols(NodeId a, int start, int len);
  NodeId scatter_rows(NodeId a, int start, int total_rows);
  NodeId scatter_cols(NodeId a, int start, int total_cols);
  NodeId gather_rows(NodeId a, std::vector<int> idx);
  NodeId reshape(NodeId a, Eigen::Index rows, Eigen::Index cols);

  // Recomputes every non-leaf value in id order.
  void forward();

  // Reverse-mode pass seeding d(out)/d(out) = 1. `out` must be scalar.
  // Adjoints of nodes not on a path to `out` read as zero.
  void backward(NodeId out);

  const Mat& val(NodeId id) const { return nodes_[check(id)].value; }
  // Adjoint from the most recent backward(); zero matrix if untouched.
  Mat adjoint(NodeId id) const;
  // In-place access to a leaf's storage (optimizers update weights without
  // copies). The shape must not change.
  Mat& value_mut(NodeId id);
  // Reference into the adjoint buffer; throws if the last backward() did not
  // reach this node.
  const Mat& adjoint_ref(NodeId id) const;

  // Forward-mode differentiation expressed as new graph nodes: returns a node
  // computing the directional derivative of `out` along d(wrt) = 1 (per
  // entry). The result participates in backward() like any other node, which
  // is what makes d/dt of a network output differentiable in the weights.
  NodeId tangent(NodeId out, NodeId wrt);

  // Reverse-mode differentiation expressed as new graph nodes: adjoint of
  // `wrt` under seed d(out) = seed. With the default seed, `out` must be
  // scalar. A ones seed on a column output of a row-parallel network yields
  // per-row input gradients (used by the gradient penalty).
  NodeId grad_nodes(NodeId out, NodeId wrt, NodeId seed = -1);

  std::size_t size() const { return nodes_.size(); }
  Eigen::Index rows(NodeId id) const { return nodes_[check(id)].value.rows(); }
  Eigen::Index cols(NodeId id) const { return nodes_[check(id)].value.cols(); }

 private:
  NodeId push(Node n);
  NodeId check(NodeId id) const;
  void eval_node(Node& n);
  void backprop_node(NodeId id);
  void accumulate(NodeId id, const Mat& contribution);
  const std::vector<char>& ancestors_of(NodeId out);

  std::vector<Node> nodes_;
  std::uint64_t pass_ = 0;
  std::unordered_map<NodeId, std::vector<char>> ancestor_cache_;
};

struct Dual {
  NodeId primal;
  NodeId tangent;
};

// d/dt of a network output with respect to its [k,1] time input, as graph
// nodes (each row's derivative with respect to its own time entry).
Dual time_derivative(Graph& g, NodeId output, NodeId t_input);

// || d(output)/d(x_input) ||_2 per row, as a differentiable [N,1] node.
// `output` must be [N,1] (or [1,1]) over a row-parallel net on x_input.
NodeId input_gradient_norm(Graph& g, NodeId output, NodeId x_input);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Standard Adam with bias correction. Moments are allocated on first step and
// shape-checked thereafter.
class Adam {
 public:
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

  void step(const std::vector<Mat*>& params, const std::vector<const Mat*>& grads);
  long steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  long t_ = 0;
  std::vector<Mat> m_, v_;
};

}  // namespace sigmoid::ad
