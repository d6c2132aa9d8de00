#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <numeric>
#include <vector>

#include "waveshape/rng.hpp"

namespace waveshape::nn {

/// Dense N-dimensional array, row-major (last dimension fastest). Double
/// precision throughout; gradients live in a sibling Tensor of the same
/// shape where needed.
struct Tensor {
  std::vector<int> shape;
  Eigen::ArrayXd data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data = Eigen::ArrayXd::Zero(count(shape));
  }
  Tensor(std::vector<int> s, Eigen::ArrayXd d)
      : shape(std::move(s)), data(std::move(d)) {}

  static std::int64_t count(const std::vector<int>& s) {
    std::int64_t n = 1;
    for (int d : s) n *= d;
    return n;
  }

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }

  static Tensor full(std::vector<int> s, double v) {
    Tensor t(std::move(s));
    t.data.setConstant(v);
    return t;
  }

  static Tensor randn(std::vector<int> s, Rng& rng, double stddev = 1.0) {
    Tensor t(std::move(s));
    for (Eigen::Index i = 0; i < t.data.size(); ++i)
      t.data[i] = stddev * rng.next_normal();
    return t;
  }

  std::int64_t size() const { return data.size(); }
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
  int ndim() const { return static_cast<int>(shape.size()); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

/// Trainable weight: value plus accumulated gradient.
struct Parameter {
  Tensor value;
  Tensor grad;

  Parameter() = default;
  explicit Parameter(Tensor v) : value(std::move(v)), grad(Tensor::zeros(value.shape)) {}

  void zero_grad() { grad.data.setZero(); }
};

}  // namespace waveshape::nn
