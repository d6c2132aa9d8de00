#pragma once

#include <cstdint>
#include <vector>

#include "waveshape/nn/tensor.hpp"

namespace waveshape::nn {

/// Adam with standard moment defaults and bias correction.
class Adam {
 public:
  Adam(std::vector<Parameter*> params, double lr = 1e-4, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8);

  void step();

  double learning_rate() const { return lr_; }
  std::uint64_t step_count() const { return step_; }

  std::vector<float> flatten_state() const;  // m then v, parameter order
  void load_state(const std::vector<float>& flat, std::uint64_t step_count);

 private:
  std::vector<Parameter*> params_;
  std::vector<Eigen::ArrayXd> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  std::uint64_t step_ = 0;
};

}  // namespace waveshape::nn
