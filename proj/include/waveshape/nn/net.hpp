#pragma once

#include <string>
#include <vector>

#include "waveshape/nn/graph.hpp"
#include "waveshape/nn/tensor.hpp"
#include "waveshape/rng.hpp"

namespace waveshape::nn {

/// Architecture descriptor for both network kinds. Stage s runs at spatial
/// resolution input / 2^s with base_channels * channel_mult[s] channels.
/// time_embed_dim > 0 enables the two-layer step-embedding MLP with
/// per-stage conditioning ("denoiser"); upsample_head > 0 appends 2x
/// upsampling conv stages after the decoder ("detail" predictor).
struct NetConfig {
  std::string kind = "denoiser";
  int in_channels = 1;
  int out_channels = 1;
  int base_channels = 16;
  std::vector<int> channel_mult = {1, 2};
  int convs_per_stage = 2;
  int time_embed_dim = 64;
  int sinusoidal_dim = 32;
  bool bottleneck_attention = true;
  int upsample_head = 0;

  int stages() const { return static_cast<int>(channel_mult.size()); }
  int stage_channels(int s) const { return base_channels * channel_mult[s]; }

  std::string descriptor() const;            // canonical JSON string
  static NetConfig from_descriptor(const std::string& json_text);

  static NetConfig denoiser_default();
  static NetConfig detail_default();
};

/// 3D U-Net: per-stage 3x3x3 convolutions (stride 1), average-pool
/// downsampling, nearest-neighbor upsampling with skip concatenation, a
/// single self-attention layer at the bottleneck, and optional sinusoidal
/// time embedding passed through two MLP layers and injected per stage as a
/// learned per-channel bias. The final convolution is zero-initialized.
class UNet3d {
 public:
  UNet3d(NetConfig cfg, Rng init_rng);

  const NetConfig& config() const { return cfg_; }

  /// Graph-building forward. x is [B, Cin, N, N, N]; N must be divisible by
  /// 2^(stages-1). For time-conditioned nets tsteps holds one step per batch
  /// element; otherwise pass {}.
  Graph::Var forward(Graph& g, Graph::Var x, const std::vector<int>& tsteps);

  /// Convenience inference (builds a throwaway graph).
  Tensor infer(const Tensor& x, const std::vector<int>& tsteps);

  /// Parameters in their fixed serialization order.
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::int64_t parameter_count() const;
  void zero_grad();

  std::vector<float> flatten_parameters() const;
  void load_parameters(const std::vector<float>& flat);

 private:
  struct Conv {
    Parameter w, b;
  };
  struct Lin {
    Parameter w, b;
  };

  Graph::Var time_embedding(Graph& g, const std::vector<int>& tsteps);
  void check_input(const Tensor& x) const;

  NetConfig cfg_;
  Conv stem_;
  std::vector<std::vector<Conv>> enc_;       // [stage][conv]
  std::vector<Lin> time_proj_;               // per stage
  Lin emb_fc1_, emb_fc2_;
  Parameter attn_wq_, attn_wk_, attn_wv_, attn_wo_;
  Conv bottleneck_;
  std::vector<std::vector<Conv>> dec_;       // [stage][conv], stages-1 entries
  std::vector<Conv> head_;                   // upsample head convs
  Conv final_;
};

}  // namespace waveshape::nn
