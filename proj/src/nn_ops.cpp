#include "waveshape/nn/ops.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "waveshape/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace waveshape::nn::ops {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRow = Eigen::Map<RowMat>;
using MapRowC = Eigen::Map<const RowMat>;

void expect(bool ok, const char* msg) {
  if (!ok) throw DataError(msg);
}

struct ConvDims {
  int B, Cin, D, H, W, Cout;
  std::int64_t spatial() const { return static_cast<std::int64_t>(D) * H * W; }
};

ConvDims conv_dims(const Tensor& x, const Tensor& w, const Tensor& b) {
  expect(x.ndim() == 5, "conv3d: input must be [B,C,D,H,W]");
  expect(w.ndim() == 5 && w.dim(2) == 3 && w.dim(3) == 3 && w.dim(4) == 3,
         "conv3d: kernel must be [Cout,Cin,3,3,3]");
  expect(w.dim(1) == x.dim(1), "conv3d: channel mismatch");
  expect(b.ndim() == 1 && b.dim(0) == w.dim(0), "conv3d: bias mismatch");
  return {x.dim(0), x.dim(1), x.dim(2), x.dim(3), x.dim(4), w.dim(0)};
}

// Gather the 27-neighborhood of every voxel into a (Cin*27) x S column
// matrix (zero padding of one voxel).
void im2col(const double* x, const ConvDims& d, Eigen::MatrixXd& col) {
  const std::int64_t S = d.spatial();
  const int K = d.Cin * 27;
  col.resize(K, S);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t s = 0; s < S; ++s) {
    const int w_ = static_cast<int>(s % d.W);
    const int h = static_cast<int>((s / d.W) % d.H);
    const int dd = static_cast<int>(s / (static_cast<std::int64_t>(d.W) * d.H));
    double* out = col.data() + static_cast<std::int64_t>(s) * K;
    for (int ci = 0; ci < d.Cin; ++ci) {
      const double* xc = x + static_cast<std::int64_t>(ci) * S;
      for (int dz = -1; dz <= 1; ++dz) {
        const int zd = dd + dz;
        for (int dy = -1; dy <= 1; ++dy) {
          const int yh = h + dy;
          for (int dx = -1; dx <= 1; ++dx) {
            const int xw = w_ + dx;
            const bool in = zd >= 0 && zd < d.D && yh >= 0 && yh < d.H &&
                            xw >= 0 && xw < d.W;
            *out++ = in ? xc[(static_cast<std::int64_t>(zd) * d.H + yh) * d.W + xw]
                        : 0.0;
          }
        }
      }
    }
  }
}

// Scatter-add a (Cin*27) x S column matrix back onto the input layout.
// Parallel over channels: each channel's 27-row group writes only its own
// channel plane, so writes are disjoint and deterministic.
void col2im_add(const Eigen::MatrixXd& col, const ConvDims& d, double* gx) {
  const std::int64_t S = d.spatial();
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int ci = 0; ci < d.Cin; ++ci) {
    double* gc = gx + static_cast<std::int64_t>(ci) * S;
    for (std::int64_t s = 0; s < S; ++s) {
      const int w_ = static_cast<int>(s % d.W);
      const int h = static_cast<int>((s / d.W) % d.H);
      const int dd = static_cast<int>(s / (static_cast<std::int64_t>(d.W) * d.H));
      const double* src = col.data() + s * col.rows() + ci * 27;
      for (int dz = -1; dz <= 1; ++dz) {
        const int zd = dd + dz;
        for (int dy = -1; dy <= 1; ++dy) {
          const int yh = h + dy;
          for (int dx = -1; dx <= 1; ++dx, ++src) {
            const int xw = w_ + dx;
            if (zd < 0 || zd >= d.D || yh < 0 || yh >= d.H || xw < 0 || xw >= d.W)
              continue;
            gc[(static_cast<std::int64_t>(zd) * d.H + yh) * d.W + xw] += *src;
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv3d_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
  const ConvDims d = conv_dims(x, w, b);
  const std::int64_t S = d.spatial();
  Tensor y({d.B, d.Cout, d.D, d.H, d.W});
  MapRowC wm(w.data.data(), d.Cout, d.Cin * 27);
  Eigen::Map<const Eigen::VectorXd> bias(b.data.data(), d.Cout);
  Eigen::MatrixXd col;
  for (int bi = 0; bi < d.B; ++bi) {
    im2col(x.data.data() + static_cast<std::int64_t>(bi) * d.Cin * S, d, col);
    MapRow ym(y.data.data() + static_cast<std::int64_t>(bi) * d.Cout * S, d.Cout, S);
    ym.noalias() = wm * col;
    ym.colwise() += bias;
  }
  return y;
}

void conv3d_backward(const Tensor& grad_out, const Tensor& x, const Tensor& w,
                     Tensor& grad_x, Tensor& grad_w, Tensor& grad_b) {
  Tensor bias_shape({w.dim(0)});
  const ConvDims d = conv_dims(x, w, bias_shape);
  expect(grad_out.shape == std::vector<int>({d.B, d.Cout, d.D, d.H, d.W}),
         "conv3d_backward: grad shape mismatch");
  const std::int64_t S = d.spatial();

  grad_x = Tensor(x.shape);
  grad_w = Tensor(w.shape);
  grad_b = Tensor({d.Cout});

  MapRowC wm(w.data.data(), d.Cout, d.Cin * 27);
  MapRow gwm(grad_w.data.data(), d.Cout, d.Cin * 27);
  Eigen::Map<Eigen::VectorXd> gb(grad_b.data.data(), d.Cout);

  Eigen::MatrixXd col, gcol;
  for (int bi = 0; bi < d.B; ++bi) {
    MapRowC gym(grad_out.data.data() + static_cast<std::int64_t>(bi) * d.Cout * S,
                d.Cout, S);
    im2col(x.data.data() + static_cast<std::int64_t>(bi) * d.Cin * S, d, col);
    gwm.noalias() += gym * col.transpose();
    gb.noalias() += gym.rowwise().sum();
    gcol.noalias() = wm.transpose() * gym;
    col2im_add(gcol, d, grad_x.data.data() + static_cast<std::int64_t>(bi) * d.Cin * S);
  }
}

Tensor avgpool2_forward(const Tensor& x) {
  expect(x.ndim() == 5, "avgpool2: input must be [B,C,D,H,W]");
  const int B = x.dim(0), C = x.dim(1), D = x.dim(2), H = x.dim(3), W = x.dim(4);
  expect(D % 2 == 0 && H % 2 == 0 && W % 2 == 0, "avgpool2: odd spatial dims");
  Tensor y({B, C, D / 2, H / 2, W / 2});
  const std::int64_t S = static_cast<std::int64_t>(D) * H * W;
  const std::int64_t So = S / 8;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t bc = 0; bc < static_cast<std::int64_t>(B) * C; ++bc) {
    const double* src = x.data.data() + bc * S;
    double* dst = y.data.data() + bc * So;
    for (int dd = 0; dd < D / 2; ++dd)
      for (int hh = 0; hh < H / 2; ++hh)
        for (int ww = 0; ww < W / 2; ++ww) {
          double acc = 0.0;
          for (int dz = 0; dz < 2; ++dz)
            for (int dy = 0; dy < 2; ++dy)
              for (int dx = 0; dx < 2; ++dx)
                acc += src[(static_cast<std::int64_t>(2 * dd + dz) * H + 2 * hh + dy) *
                               W +
                           2 * ww + dx];
          dst[(static_cast<std::int64_t>(dd) * (H / 2) + hh) * (W / 2) + ww] =
              acc / 8.0;
        }
  }
  return y;
}

Tensor avgpool2_backward(const Tensor& grad_out, const std::vector<int>& x_shape) {
  Tensor gx(x_shape);
  const int B = x_shape[0], C = x_shape[1], D = x_shape[2], H = x_shape[3],
            W = x_shape[4];
  const std::int64_t S = static_cast<std::int64_t>(D) * H * W;
  const std::int64_t So = S / 8;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t bc = 0; bc < static_cast<std::int64_t>(B) * C; ++bc) {
    const double* src = grad_out.data.data() + bc * So;
    double* dst = gx.data.data() + bc * S;
    for (int dd = 0; dd < D / 2; ++dd)
      for (int hh = 0; hh < H / 2; ++hh)
        for (int ww = 0; ww < W / 2; ++ww) {
          const double g =
              src[(static_cast<std::int64_t>(dd) * (H / 2) + hh) * (W / 2) + ww] / 8.0;
          for (int dz = 0; dz < 2; ++dz)
            for (int dy = 0; dy < 2; ++dy)
              for (int dx = 0; dx < 2; ++dx)
                dst[(static_cast<std::int64_t>(2 * dd + dz) * H + 2 * hh + dy) * W +
                    2 * ww + dx] += g;
        }
  }
  return gx;
}

Tensor upsample2_forward(const Tensor& x) {
  expect(x.ndim() == 5, "upsample2: input must be [B,C,D,H,W]");
  const int B = x.dim(0), C = x.dim(1), D = x.dim(2), H = x.dim(3), W = x.dim(4);
  Tensor y({B, C, 2 * D, 2 * H, 2 * W});
  const std::int64_t S = static_cast<std::int64_t>(D) * H * W;
  const std::int64_t So = S * 8;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t bc = 0; bc < static_cast<std::int64_t>(B) * C; ++bc) {
    const double* src = x.data.data() + bc * S;
    double* dst = y.data.data() + bc * So;
    for (int dd = 0; dd < 2 * D; ++dd)
      for (int hh = 0; hh < 2 * H; ++hh)
        for (int ww = 0; ww < 2 * W; ++ww)
          dst[(static_cast<std::int64_t>(dd) * 2 * H + hh) * 2 * W + ww] =
              src[(static_cast<std::int64_t>(dd / 2) * H + hh / 2) * W + ww / 2];
  }
  return y;
}

Tensor upsample2_backward(const Tensor& grad_out, const std::vector<int>& x_shape) {
  Tensor gx(x_shape);
  const int B = x_shape[0], C = x_shape[1], D = x_shape[2], H = x_shape[3],
            W = x_shape[4];
  const std::int64_t S = static_cast<std::int64_t>(D) * H * W;
  const std::int64_t So = S * 8;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t bc = 0; bc < static_cast<std::int64_t>(B) * C; ++bc) {
    const double* src = grad_out.data.data() + bc * So;
    double* dst = gx.data.data() + bc * S;
    for (int dd = 0; dd < 2 * D; ++dd)
      for (int hh = 0; hh < 2 * H; ++hh)
        for (int ww = 0; ww < 2 * W; ++ww)
          dst[(static_cast<std::int64_t>(dd / 2) * H + hh / 2) * W + ww / 2] +=
              src[(static_cast<std::int64_t>(dd) * 2 * H + hh) * 2 * W + ww];
  }
  return gx;
}

Tensor concat_channels_forward(const Tensor& a, const Tensor& b) {
  expect(a.ndim() == 5 && b.ndim() == 5, "concat: inputs must be [B,C,D,H,W]");
  expect(a.dim(0) == b.dim(0) && a.dim(2) == b.dim(2) && a.dim(3) == b.dim(3) &&
             a.dim(4) == b.dim(4),
         "concat: shape mismatch");
  const int B = a.dim(0), Ca = a.dim(1), Cb = b.dim(1);
  const std::int64_t S = static_cast<std::int64_t>(a.dim(2)) * a.dim(3) * a.dim(4);
  Tensor y({B, Ca + Cb, a.dim(2), a.dim(3), a.dim(4)});
  for (int bi = 0; bi < B; ++bi) {
    std::copy_n(a.data.data() + bi * Ca * S, Ca * S,
                y.data.data() + static_cast<std::int64_t>(bi) * (Ca + Cb) * S);
    std::copy_n(b.data.data() + bi * Cb * S, Cb * S,
                y.data.data() + static_cast<std::int64_t>(bi) * (Ca + Cb) * S + Ca * S);
  }
  return y;
}

void concat_channels_backward(const Tensor& grad_out, const std::vector<int>& a_shape,
                              const std::vector<int>& b_shape, Tensor& grad_a,
                              Tensor& grad_b) {
  grad_a = Tensor(a_shape);
  grad_b = Tensor(b_shape);
  const int B = a_shape[0], Ca = a_shape[1], Cb = b_shape[1];
  const std::int64_t S =
      static_cast<std::int64_t>(a_shape[2]) * a_shape[3] * a_shape[4];
  for (int bi = 0; bi < B; ++bi) {
    const double* g =
        grad_out.data.data() + static_cast<std::int64_t>(bi) * (Ca + Cb) * S;
    std::copy_n(g, Ca * S, grad_a.data.data() + bi * Ca * S);
    std::copy_n(g + Ca * S, Cb * S, grad_b.data.data() + bi * Cb * S);
  }
}

Tensor linear_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
  expect(x.ndim() == 2 && w.ndim() == 2 && b.ndim() == 1, "linear: bad ranks");
  expect(x.dim(1) == w.dim(1) && b.dim(0) == w.dim(0), "linear: shape mismatch");
  const int B = x.dim(0), In = x.dim(1), Out = w.dim(0);
  Tensor y({B, Out});
  MapRowC xm(x.data.data(), B, In), wm(w.data.data(), Out, In);
  MapRow ym(y.data.data(), B, Out);
  ym.noalias() = xm * wm.transpose();
  ym.rowwise() += Eigen::Map<const Eigen::VectorXd>(b.data.data(), Out).transpose();
  return y;
}

void linear_backward(const Tensor& grad_out, const Tensor& x, const Tensor& w,
                     Tensor& grad_x, Tensor& grad_w, Tensor& grad_b) {
  const int B = x.dim(0), In = x.dim(1), Out = w.dim(0);
  grad_x = Tensor(x.shape);
  grad_w = Tensor(w.shape);
  grad_b = Tensor({Out});
  MapRowC gym(grad_out.data.data(), B, Out), xm(x.data.data(), B, In),
      wm(w.data.data(), Out, In);
  MapRow gxm(grad_x.data.data(), B, In), gwm(grad_w.data.data(), Out, In);
  gxm.noalias() = gym * wm;
  gwm.noalias() = gym.transpose() * xm;
  Eigen::Map<Eigen::VectorXd>(grad_b.data.data(), Out) = gym.colwise().sum();
}

Tensor silu_forward(const Tensor& x) {
  Tensor y(x.shape);
  y.data = x.data / (1.0 + (-x.data).exp()) ;
  return y;
}

Tensor silu_backward(const Tensor& grad_out, const Tensor& x) {
  Tensor gx(x.shape);
  const Eigen::ArrayXd sig = 1.0 / (1.0 + (-x.data).exp());
  gx.data = grad_out.data * sig * (1.0 + x.data * (1.0 - sig));
  return gx;
}

Tensor add_channel_bias_forward(const Tensor& x, const Tensor& bias) {
  expect(x.ndim() == 5 && bias.ndim() == 2, "add_channel_bias: bad ranks");
  expect(bias.dim(0) == x.dim(0) && bias.dim(1) == x.dim(1),
         "add_channel_bias: [B,C] bias expected");
  Tensor y(x.shape);
  const std::int64_t S = static_cast<std::int64_t>(x.dim(2)) * x.dim(3) * x.dim(4);
  for (std::int64_t bc = 0; bc < static_cast<std::int64_t>(x.dim(0)) * x.dim(1); ++bc)
    y.data.segment(bc * S, S) = x.data.segment(bc * S, S) + bias.data[bc];
  return y;
}

void add_channel_bias_backward(const Tensor& grad_out, Tensor& grad_x,
                               Tensor& grad_bias) {
  grad_x = grad_out;
  const int B = grad_out.dim(0), C = grad_out.dim(1);
  const std::int64_t S =
      static_cast<std::int64_t>(grad_out.dim(2)) * grad_out.dim(3) * grad_out.dim(4);
  grad_bias = Tensor({B, C});
  for (std::int64_t bc = 0; bc < static_cast<std::int64_t>(B) * C; ++bc)
    grad_bias.data[bc] = grad_out.data.segment(bc * S, S).sum();
}

namespace {

struct AttnDims {
  int B, C;
  std::int64_t S;
};

AttnDims attn_dims(const Tensor& x, const Tensor& wq) {
  expect(x.ndim() == 5, "attention: input must be [B,C,D,H,W]");
  expect(wq.ndim() == 2 && wq.dim(0) == x.dim(1) && wq.dim(1) == x.dim(1),
         "attention: weights must be [C,C]");
  return {x.dim(0), x.dim(1),
          static_cast<std::int64_t>(x.dim(2)) * x.dim(3) * x.dim(4)};
}

void softmax_rows(Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double mx = m.row(i).maxCoeff();
    m.row(i) = (m.row(i).array() - mx).exp().matrix();
    m.row(i) /= m.row(i).sum();
  }
}

}  // namespace

Tensor attention_forward(const Tensor& x, const Tensor& wq, const Tensor& wk,
                         const Tensor& wv, const Tensor& wo) {
  const AttnDims d = attn_dims(x, wq);
  MapRowC wqm(wq.data.data(), d.C, d.C), wkm(wk.data.data(), d.C, d.C),
      wvm(wv.data.data(), d.C, d.C), wom(wo.data.data(), d.C, d.C);
  Tensor y(x.shape);
  const double inv_sqrt_c = 1.0 / std::sqrt(static_cast<double>(d.C));
  for (int bi = 0; bi < d.B; ++bi) {
    MapRowC xm(x.data.data() + bi * d.C * d.S, d.C, d.S);
    const Eigen::MatrixXd q = wqm * xm;
    const Eigen::MatrixXd k = wkm * xm;
    const Eigen::MatrixXd v = wvm * xm;
    Eigen::MatrixXd attn = (q.transpose() * k) * inv_sqrt_c;  // S x S
    softmax_rows(attn);
    MapRow ym(y.data.data() + bi * d.C * d.S, d.C, d.S);
    ym = xm + wom * (v * attn.transpose());
  }
  return y;
}

void attention_backward(const Tensor& grad_out, const Tensor& x, const Tensor& wq,
                        const Tensor& wk, const Tensor& wv, const Tensor& wo,
                        Tensor& grad_x, Tensor& grad_wq, Tensor& grad_wk,
                        Tensor& grad_wv, Tensor& grad_wo) {
  const AttnDims d = attn_dims(x, wq);
  grad_x = Tensor(x.shape);
  grad_wq = Tensor(wq.shape);
  grad_wk = Tensor(wk.shape);
  grad_wv = Tensor(wv.shape);
  grad_wo = Tensor(wo.shape);

  MapRowC wqm(wq.data.data(), d.C, d.C), wkm(wk.data.data(), d.C, d.C),
      wvm(wv.data.data(), d.C, d.C), wom(wo.data.data(), d.C, d.C);
  MapRow gwq(grad_wq.data.data(), d.C, d.C), gwk(grad_wk.data.data(), d.C, d.C),
      gwv(grad_wv.data.data(), d.C, d.C), gwo(grad_wo.data.data(), d.C, d.C);
  const double inv_sqrt_c = 1.0 / std::sqrt(static_cast<double>(d.C));

  for (int bi = 0; bi < d.B; ++bi) {
    MapRowC xm(x.data.data() + bi * d.C * d.S, d.C, d.S);
    MapRowC gym(grad_out.data.data() + bi * d.C * d.S, d.C, d.S);
    MapRow gxm(grad_x.data.data() + bi * d.C * d.S, d.C, d.S);

    const Eigen::MatrixXd q = wqm * xm;
    const Eigen::MatrixXd k = wkm * xm;
    const Eigen::MatrixXd v = wvm * xm;
    Eigen::MatrixXd attn = (q.transpose() * k) * inv_sqrt_c;
    softmax_rows(attn);
    const Eigen::MatrixXd y_inner = v * attn.transpose();  // C x S

    gxm = gym;  // residual path
    gwo.noalias() += gym * y_inner.transpose();
    const Eigen::MatrixXd gy_inner = wom.transpose() * gym;  // C x S

    const Eigen::MatrixXd gv = gy_inner * attn;              // C x S
    Eigen::MatrixXd gattn = gy_inner.transpose() * v;        // S x S

    // softmax backward per row
    for (Eigen::Index i = 0; i < gattn.rows(); ++i) {
      const double dot = gattn.row(i).dot(attn.row(i));
      gattn.row(i) =
          (attn.row(i).array() * (gattn.row(i).array() - dot)).matrix();
    }
    gattn *= inv_sqrt_c;

    const Eigen::MatrixXd gq = k * gattn.transpose();  // C x S
    const Eigen::MatrixXd gk = q * gattn;              // C x S

    gwq.noalias() += gq * xm.transpose();
    gwk.noalias() += gk * xm.transpose();
    gwv.noalias() += gv * xm.transpose();
    gxm.noalias() += wqm.transpose() * gq + wkm.transpose() * gk +
                     wvm.transpose() * gv;
  }
}

double mse_forward(const Tensor& pred, const Tensor& target) {
  expect(pred.shape == target.shape, "mse: shape mismatch");
  return (pred.data - target.data).square().mean();
}

Tensor mse_backward(double grad_out, const Tensor& pred, const Tensor& target) {
  Tensor g(pred.shape);
  g.data = grad_out * 2.0 / static_cast<double>(pred.size()) *
           (pred.data - target.data);
  return g;
}

Tensor sinusoidal_embedding(int t, int dim) {
  if (dim < 2 || dim % 2 != 0)
    throw ConfigError("sinusoidal_embedding: dim must be even and >= 2");
  Tensor e({dim});
  const int half = dim / 2;
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * i / half);
    e.data[i] = std::sin(t * freq);
    e.data[half + i] = std::cos(t * freq);
  }
  return e;
}

}  // namespace waveshape::nn::ops
