#pragma once

#include "sigmoid/graph.hpp"
#include "sigmoid/rng.hpp"

#include <vector>

namespace sigmoid {

// Fully connected tanh network; output layer is affine (identity activation).
// `hidden` may be empty, giving a single affine map.
struct MlpSpec {
  int input_dim = 1;
  int output_dim = 1;
  std::vector<int> hidden;

  std::vector<int> layer_dims() const;  // [in, h..., out]
  int param_count() const;
};

// Weights per layer: W[l] is [in_l, out_l], b[l] is [1, out_l].
struct MlpWeights {
  std::vector<ad::Mat> W;
  std::vector<ad::Mat> b;
};

// Glorot-uniform initialization; `last_layer_scale` shrinks the output layer
// (hypernetworks start the emitted weights small).
MlpWeights mlp_init(const MlpSpec& spec, Rng& rng, double last_layer_scale = 1.0);

// Flat packing order: for each layer, W row-major then b. This order is also
// the contract for hypernetwork outputs feeding a main network.
Eigen::VectorXd mlp_flatten(const MlpSpec& spec, const MlpWeights& w);
MlpWeights mlp_unflatten(const MlpSpec& spec, const Eigen::VectorXd& flat);

// Plain batched evaluation, X is [N, input_dim].
ad::Mat mlp_eval(const MlpSpec& spec, const MlpWeights& w, const ad::Mat& X);

// Weight leaves registered in a graph, in flat-packing order.
struct MlpNodes {
  std::vector<ad::NodeId> W;
  std::vector<ad::NodeId> b;
  std::vector<ad::NodeId> all() const;
};

MlpNodes mlp_params(ad::Graph& g, const MlpWeights& w);

// Forward pass with explicit weight nodes.
ad::NodeId mlp_forward(ad::Graph& g, const MlpSpec& spec, const MlpNodes& nodes, ad::NodeId x);

// Forward pass whose weights are slices of a packed [1, param_count] row
// (a hypernetwork output); gradients flow through the row.
ad::NodeId mlp_forward_packed(ad::Graph& g, const MlpSpec& spec, ad::NodeId packed_row, ad::NodeId x);

// Copies graph adjoints of the weight nodes; order matches MlpNodes::all().
std::vector<ad::Mat> mlp_grads(const ad::Graph& g, const MlpNodes& nodes);

}  // namespace sigmoid
