#include "waveshape/nn/graph.hpp"

#include "waveshape/errors.hpp"
#include "waveshape/nn/ops.hpp"

namespace waveshape::nn {

Graph::Var Graph::input(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = false;
  nodes_.push_back(std::move(n));
  return static_cast<Var>(nodes_.size()) - 1;
}

Graph::Var Graph::param(Parameter& p) {
  Node n;
  n.value = p.value;
  n.requires_grad = true;
  n.bound = &p;
  nodes_.push_back(std::move(n));
  return static_cast<Var>(nodes_.size()) - 1;
}

Graph::Var Graph::emit(Tensor value, std::vector<Var> parents,
                       std::function<void(Graph&, Var)> backprop) {
  Node n;
  n.value = std::move(value);
  n.parents = std::move(parents);
  for (Var p : n.parents) n.requires_grad = n.requires_grad || nodes_[p].requires_grad;
  if (n.requires_grad) n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return static_cast<Var>(nodes_.size()) - 1;
}

void Graph::add_grad(Var v, const Eigen::ArrayXd& g) {
  Node& n = nodes_[v];
  if (!n.requires_grad) return;
  if (!n.grad_ready) {
    n.grad = Tensor(n.value.shape);
    n.grad_ready = true;
  }
  n.grad.data += g;
}

void Graph::backward(Var root) {
  if (nodes_[root].value.size() != 1)
    throw NumericError("backward: root must be a scalar node");
  add_grad(root, Eigen::ArrayXd::Ones(1));
  for (Var v = root; v >= 0; --v) {
    Node& n = nodes_[v];
    if (!n.grad_ready) continue;
    if (n.backprop) n.backprop(*this, v);
    if (n.bound) n.bound->grad.data += n.grad.data;
  }
}

namespace gops {

Var conv3d(Graph& g, Var x, Var w, Var b) {
  Tensor y = ops::conv3d_forward(g.value(x), g.value(w), g.value(b));
  return g.emit(std::move(y), {x, w, b}, [x, w, b](Graph& gr, Var self) {
    Tensor gx, gw, gb;
    ops::conv3d_backward(gr.grad(self), gr.value(x), gr.value(w), gx, gw, gb);
    gr.add_grad(x, gx.data);
    gr.add_grad(w, gw.data);
    gr.add_grad(b, gb.data);
  });
}

Var avgpool2(Graph& g, Var x) {
  Tensor y = ops::avgpool2_forward(g.value(x));
  return g.emit(std::move(y), {x}, [x](Graph& gr, Var self) {
    gr.add_grad(x, ops::avgpool2_backward(gr.grad(self), gr.value(x).shape).data);
  });
}

Var upsample2(Graph& g, Var x) {
  Tensor y = ops::upsample2_forward(g.value(x));
  return g.emit(std::move(y), {x}, [x](Graph& gr, Var self) {
    gr.add_grad(x, ops::upsample2_backward(gr.grad(self), gr.value(x).shape).data);
  });
}

Var concat_channels(Graph& g, Var a, Var b) {
  Tensor y = ops::concat_channels_forward(g.value(a), g.value(b));
  return g.emit(std::move(y), {a, b}, [a, b](Graph& gr, Var self) {
    Tensor ga, gb;
    ops::concat_channels_backward(gr.grad(self), gr.value(a).shape,
                                  gr.value(b).shape, ga, gb);
    gr.add_grad(a, ga.data);
    gr.add_grad(b, gb.data);
  });
}

Var linear(Graph& g, Var x, Var w, Var b) {
  Tensor y = ops::linear_forward(g.value(x), g.value(w), g.value(b));
  return g.emit(std::move(y), {x, w, b}, [x, w, b](Graph& gr, Var self) {
    Tensor gx, gw, gb;
    ops::linear_backward(gr.grad(self), gr.value(x), gr.value(w), gx, gw, gb);
    gr.add_grad(x, gx.data);
    gr.add_grad(w, gw.data);
    gr.add_grad(b, gb.data);
  });
}

Var silu(Graph& g, Var x) {
  Tensor y = ops::silu_forward(g.value(x));
  return g.emit(std::move(y), {x}, [x](Graph& gr, Var self) {
    gr.add_grad(x, ops::silu_backward(gr.grad(self), gr.value(x)).data);
  });
}

Var add(Graph& g, Var a, Var b) {
  if (!(g.value(a).shape == g.value(b).shape))
    throw DataError("add: shape mismatch");
  Tensor y(g.value(a).shape);
  y.data = g.value(a).data + g.value(b).data;
  return g.emit(std::move(y), {a, b}, [a, b](Graph& gr, Var self) {
    gr.add_grad(a, gr.grad(self).data);
    gr.add_grad(b, gr.grad(self).data);
  });
}

Var add_channel_bias(Graph& g, Var x, Var bias) {
  Tensor y = ops::add_channel_bias_forward(g.value(x), g.value(bias));
  return g.emit(std::move(y), {x, bias}, [x, bias](Graph& gr, Var self) {
    Tensor gx, gb;
    ops::add_channel_bias_backward(gr.grad(self), gx, gb);
    gr.add_grad(x, gx.data);
    gr.add_grad(bias, gb.data);
  });
}

Var attention(Graph& g, Var x, Var wq, Var wk, Var wv, Var wo) {
  Tensor y = ops::attention_forward(g.value(x), g.value(wq), g.value(wk),
                                    g.value(wv), g.value(wo));
  return g.emit(std::move(y), {x, wq, wk, wv, wo},
                [x, wq, wk, wv, wo](Graph& gr, Var self) {
                  Tensor gx, gwq, gwk, gwv, gwo;
                  ops::attention_backward(gr.grad(self), gr.value(x), gr.value(wq),
                                          gr.value(wk), gr.value(wv), gr.value(wo),
                                          gx, gwq, gwk, gwv, gwo);
                  gr.add_grad(x, gx.data);
                  gr.add_grad(wq, gwq.data);
                  gr.add_grad(wk, gwk.data);
                  gr.add_grad(wv, gwv.data);
                  gr.add_grad(wo, gwo.data);
                });
}

Var mse(Graph& g, Var pred, Var target) {
  Tensor y({1});
  y.data[0] = ops::mse_forward(g.value(pred), g.value(target));
  return g.emit(std::move(y), {pred, target}, [pred, target](Graph& gr, Var self) {
    const double seed = gr.grad(self).data[0];
    gr.add_grad(pred,
                ops::mse_backward(seed, gr.value(pred), gr.value(target)).data);
  });
}

}  // namespace gops

}  // namespace waveshape::nn
