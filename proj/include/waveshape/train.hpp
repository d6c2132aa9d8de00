#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "waveshape/diffusion.hpp"
#include "waveshape/grid.hpp"
#include "waveshape/nn/checkpoint.hpp"
#include "waveshape/nn/net.hpp"
#include "waveshape/wavelet.hpp"

namespace waveshape {

struct TrainConfig {
  int iterations = 2000;
  int batch = 4;
  double lr = 1e-4;
  std::uint64_t seed = 0;
  int log_every = 50;             // stdout progress cadence (0 = silent)
  std::string loss_csv;           // per-iteration "iter,loss" log, optional
  int checkpoint_every = 0;       // 0 = final checkpoint only
  std::string out_checkpoint;     // optional; tests often keep models in memory
};

struct TrainedModel {
  std::unique_ptr<nn::UNet3d> net;
  nn::NormAffine norm;
  std::vector<double> losses;     // one entry per iteration
};

/// Train the noise-predicting generator on coarse coefficient volumes with
/// the mean-squares denoising objective. Volumes are normalized by the
/// dataset affine before corruption; the affine is stored in the checkpoint.
/// Aborts with NumericError on NaN loss.
TrainedModel train_generator(const std::vector<VolumeGrid>& coarse,
                             const nn::NetConfig& arch,
                             const NoiseSchedule& sched, const TrainConfig& cfg);

/// Train the detail predictor as a conditional regression from coarse to
/// detail coefficient volumes under mean squared error.
TrainedModel train_detail(const std::vector<WaveletPair>& pairs,
                          const nn::NetConfig& arch, const TrainConfig& cfg);

/// Wrap a trained generator as a DenoiserFn over normalized volumes.
DenoiserFn make_denoiser(nn::UNet3d& net);

}  // namespace waveshape
