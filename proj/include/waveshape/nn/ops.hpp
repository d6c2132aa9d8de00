#pragma once

#include "waveshape/nn/tensor.hpp"

namespace waveshape::nn::ops {

// Shape conventions: feature maps are [B, C, D, H, W]; kernels 3x3x3 with
// stride 1 and zero padding 1, so spatial size is preserved.

/// Cross-correlation with a [Cout, Cin, 3, 3, 3] kernel and [Cout] bias.
Tensor conv3d_forward(const Tensor& x, const Tensor& w, const Tensor& b);

/// Exact gradients of conv3d_forward with respect to input, kernel and bias.
void conv3d_backward(const Tensor& grad_out, const Tensor& x, const Tensor& w,
                     Tensor& grad_x, Tensor& grad_w, Tensor& grad_b);

/// 2x average pooling per axis; input spatial dims must be even.
Tensor avgpool2_forward(const Tensor& x);
Tensor avgpool2_backward(const Tensor& grad_out, const std::vector<int>& x_shape);

/// 2x nearest-neighbor upsampling per axis.
Tensor upsample2_forward(const Tensor& x);
Tensor upsample2_backward(const Tensor& grad_out, const std::vector<int>& x_shape);

/// Channel concatenation of two [B, C, D, H, W] maps.
Tensor concat_channels_forward(const Tensor& a, const Tensor& b);
void concat_channels_backward(const Tensor& grad_out, const std::vector<int>& a_shape,
                              const std::vector<int>& b_shape, Tensor& grad_a,
                              Tensor& grad_b);

/// Fully connected layer on [B, In] with weight [Out, In] and bias [Out].
Tensor linear_forward(const Tensor& x, const Tensor& w, const Tensor& b);
void linear_backward(const Tensor& grad_out, const Tensor& x, const Tensor& w,
                     Tensor& grad_x, Tensor& grad_w, Tensor& grad_b);

/// SiLU activation x * sigmoid(x).
Tensor silu_forward(const Tensor& x);
Tensor silu_backward(const Tensor& grad_out, const Tensor& x);

/// Broadcast a per-(sample, channel) bias [B, C] over the spatial axes of x.
Tensor add_channel_bias_forward(const Tensor& x, const Tensor& bias);
void add_channel_bias_backward(const Tensor& grad_out, Tensor& grad_x,
                               Tensor& grad_bias);

/// Single-head scaled dot-product self-attention over flattened spatial
/// positions with residual connection:
///   out = x + Wo (V softmax(Q^T K / sqrt(C))^T),  Q = Wq x, K = Wk x, V = Wv x
/// per sample, x viewed as [C, S]. Weights are [C, C].
Tensor attention_forward(const Tensor& x, const Tensor& wq, const Tensor& wk,
                         const Tensor& wv, const Tensor& wo);
void attention_backward(const Tensor& grad_out, const Tensor& x, const Tensor& wq,
                        const Tensor& wk, const Tensor& wv, const Tensor& wo,
                        Tensor& grad_x, Tensor& grad_wq, Tensor& grad_wk,
                        Tensor& grad_wv, Tensor& grad_wo);

/// Mean over all elements of (pred - target)^2.
double mse_forward(const Tensor& pred, const Tensor& target);
Tensor mse_backward(double grad_out, const Tensor& pred, const Tensor& target);

/// Sinusoidal position encoding of an integer step, [dim] with dim even:
/// sin(t * w_i) and cos(t * w_i), w_i = 10000^(-i / (dim/2)).
Tensor sinusoidal_embedding(int t, int dim);

}  // namespace waveshape::nn::ops
