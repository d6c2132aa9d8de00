#pragma once

#include <functional>
#include <vector>

#include "waveshape/nn/tensor.hpp"

namespace waveshape::nn {

/// Reverse-mode autodiff tape. A graph is rebuilt per training step: ops
/// append nodes in topological order, backward() walks them in reverse.
/// Node handles are plain indices.
class Graph {
 public:
  using Var = int;

  /// Constant input (no gradient tracked beyond the node itself).
  Var input(Tensor value);

  /// Leaf bound to a persistent Parameter; backward() accumulates into
  /// param.grad.
  Var param(Parameter& p);

  const Tensor& value(Var v) const { return nodes_[v].value; }
  Tensor& grad(Var v) { return nodes_[v].grad; }

  /// Backpropagate from a scalar node (seeds d/droot = 1).
  void backward(Var root);

  /// Internal: used by op builders. The node requires a gradient iff any
  /// parent does; backprop closures may skip parents that do not.
  Var emit(Tensor value, std::vector<Var> parents,
           std::function<void(Graph&, Var)> backprop);
  void add_grad(Var v, const Eigen::ArrayXd& g);
  bool requires_grad(Var v) const { return nodes_[v].requires_grad; }

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool grad_ready = false;
    bool requires_grad = false;
    std::vector<Var> parents;
    std::function<void(Graph&, Var)> backprop;
    Parameter* bound = nullptr;
  };
  std::vector<Node> nodes_;
};

// Graph-building wrappers over the kernels in ops.hpp. Each computes the
// forward value immediately and registers the matching backward.
namespace gops {

using Var = Graph::Var;

Var conv3d(Graph& g, Var x, Var w, Var b);
Var avgpool2(Graph& g, Var x);
Var upsample2(Graph& g, Var x);
Var concat_channels(Graph& g, Var a, Var b);
Var linear(Graph& g, Var x, Var w, Var b);
Var silu(Graph& g, Var x);
Var add(Graph& g, Var a, Var b);
Var add_channel_bias(Graph& g, Var x, Var bias);
Var attention(Graph& g, Var x, Var wq, Var wk, Var wv, Var wo);
Var mse(Graph& g, Var pred, Var target);

}  // namespace gops

}  // namespace waveshape::nn
