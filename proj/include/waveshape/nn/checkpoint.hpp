#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "waveshape/nn/adam.hpp"
#include "waveshape/nn/net.hpp"

namespace waveshape::nn {

/// Dataset normalization applied before training and inverted after
/// sampling: x_norm = (x - mean) / std. Generators use the input affine for
/// both directions; the detail predictor keeps separate input (coarse) and
/// output (detail) affines.
struct NormAffine {
  double in_mean = 0.0, in_std = 1.0;
  double out_mean = 0.0, out_std = 1.0;
};

/// ".ckpt" payload: magic "WNCK", u32 version, length-prefixed JSON
/// architecture descriptor, f32 LE parameter vector, optional Adam state,
/// normalization affine.
struct Checkpoint {
  NetConfig config;
  std::vector<float> params;
  bool has_optimizer = false;
  std::uint64_t adam_step = 0;
  std::vector<float> adam_state;  // m then v
  NormAffine norm;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

Checkpoint make_checkpoint(const UNet3d& net, const NormAffine& norm,
                           const Adam* opt = nullptr);

/// Instantiate the architecture from the descriptor and load its weights.
UNet3d net_from_checkpoint(const Checkpoint& ckpt);

}  // namespace waveshape::nn
