#include "sigmoid/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace sigmoid {

std::vector<int> MlpSpec::layer_dims() const {
  std::vector<int> dims;
  dims.reserve(hidden.size() + 2);
  dims.push_back(input_dim);
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(output_dim);
  return dims;
}

int MlpSpec::param_count() const {
  const auto dims = layer_dims();
  int n = 0;
  for (size_t l = 0; l + 1 < dims.size(); ++l) n += dims[l] * dims[l + 1] + dims[l + 1];
  return n;
}

MlpWeights mlp_init(const MlpSpec& spec, Rng& rng, double last_layer_scale) {
  const auto dims = spec.layer_dims();
  MlpWeights w;
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l], fan_out = dims[l + 1];
    const bool last = l + 2 == dims.size();
    const double bound = std::sqrt(6.0 / (fan_in + fan_out)) * (last ? last_layer_scale : 1.0);
    ad::Mat W(fan_in, fan_out);
    for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = rng.uniform(-bound, bound);
    w.W.push_back(std::move(W));
    w.b.push_back(ad::Mat::Zero(1, fan_out));
  }
  return w;
}

Eigen::VectorXd mlp_flatten(const MlpSpec& spec, const MlpWeights& w) {
  Eigen::VectorXd flat(spec.param_count());
  Eigen::Index at = 0;
  for (size_t l = 0; l < w.W.size(); ++l) {
    const ad::Mat& W = w.W[l];
    std::copy(W.data(), W.data() + W.size(), flat.data() + at);
    at += W.size();
    const ad::Mat& b = w.b[l];
    std::copy(b.data(), b.data() + b.size(), flat.data() + at);
    at += b.size();
  }
  return flat;
}

MlpWeights mlp_unflatten(const MlpSpec& spec, const Eigen::VectorXd& flat) {
  if (flat.size() != spec.param_count())
    throw std::invalid_argument("mlp_unflatten: flat vector has " + std::to_string(flat.size()) +
                                " entries, spec needs " + std::to_string(spec.param_count()));
  const auto dims = spec.layer_dims();
  MlpWeights w;
  Eigen::Index at = 0;
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    ad::Mat W(dims[l], dims[l + 1]);
    std::copy(flat.data() + at, flat.data() + at + W.size(), W.data());
    at += W.size();
    ad::Mat b(1, dims[l + 1]);
    std::copy(flat.data() + at, flat.data() + at + b.size(), b.data());
    at += b.size();
    w.W.push_back(std::move(W));
    w.b.push_back(std::move(b));
  }
  return w;
}

ad::Mat mlp_eval(const MlpSpec& spec, const MlpWeights& w, const ad::Mat& X) {
  if (X.cols() != spec.input_dim)
    throw std::invalid_argument("mlp_eval: input has " + std::to_string(X.cols()) +
                                " columns, spec expects " + std::to_string(spec.input_dim));
  ad::Mat a = X;
  for (size_t l = 0; l < w.W.size(); ++l) {
    ad::Mat z = a * w.W[l];
    z.array().rowwise() += w.b[l].row(0).array();
    if (l + 1 < w.W.size()) ad::tanh_inplace(z);
    a = std::move(z);
  }
  return a;
}

std::vector<ad::NodeId> MlpNodes::all() const {
  std::vector<ad::NodeId> ids;
  ids.reserve(2 * W.size());
  for (size_t l = 0; l < W.size(); ++l) {
    ids.push_back(W[l]);
    ids.push_back(b[l]);
  }
  return ids;
}

MlpNodes mlp_params(ad::Graph& g, const MlpWeights& w) {
  MlpNodes nodes;
  for (size_t l = 0; l < w.W.size(); ++l) {
    nodes.W.push_back(g.value(w.W[l]));
    nodes.b.push_back(g.value(w.b[l]));
  }
  return nodes;
}

ad::NodeId mlp_forward(ad::Graph& g, const MlpSpec& spec, const MlpNodes& nodes, ad::NodeId x) {
  if (g.cols(x) != spec.input_dim) throw std::invalid_argument("mlp_forward: input width mismatch");
  ad::NodeId a = x;
  for (size_t l = 0; l < nodes.W.size(); ++l) {
    ad::NodeId z = g.add_rowvec(g.matmul(a, nodes.W[l]), nodes.b[l]);
    a = (l + 1 < nodes.W.size()) ? g.tanh(z) : z;
  }
  return a;
}

ad::NodeId mlp_forward_packed(ad::Graph& g, const MlpSpec& spec, ad::NodeId packed_row, ad::NodeId x) {
  if (g.rows(packed_row) != 1 || g.cols(packed_row) != spec.param_count())
    throw std::invalid_argument("mlp_forward_packed: packed row must be [1, param_count]");
  if (g.cols(x) != spec.input_dim)
    throw std::invalid_argument("mlp_forward_packed: input width mismatch");
  const auto dims = spec.layer_dims();
  ad::NodeId a = x;
  int at = 0;
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l], fan_out = dims[l + 1];
    ad::NodeId W = g.reshape(g.slice_cols(packed_row, at, fan_in * fan_out), fan_in, fan_out);
    at += fan_in * fan_out;
    ad::NodeId b = g.slice_cols(packed_row, at, fan_out);
    at += fan_out;
    ad::NodeId z = g.add_rowvec(g.matmul(a, W), b);
    a = (l + 2 < dims.size()) ? g.tanh(z) : z;
  }
  return a;
}

std::vector<ad::Mat> mlp_grads(const ad::Graph& g, const MlpNodes& nodes) {
  std::vector<ad::Mat> grads;
  const auto ids = nodes.all();
  grads.reserve(ids.size());
  for (ad::NodeId id : ids) grads.push_back(g.adjoint(id));
  return grads;
}

}  // namespace sigmoid
