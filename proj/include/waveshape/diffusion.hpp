#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <vector>

#include "waveshape/grid.hpp"
#include "waveshape/rng.hpp"

namespace waveshape {

/// Per-step coefficient tables of the forward/backward Gaussian Markov
/// processes. Tables are 1-indexed by time step t in [1, T]; index [t-1].
/// sigma_t^2 = ((1 - abar_{t-1}) / (1 - abar_t)) * beta_t with abar_0 := 1,
/// so sigma_1 = 0.
struct NoiseSchedule {
  int T = 0;
  Eigen::ArrayXd beta;
  Eigen::ArrayXd alpha;
  Eigen::ArrayXd alpha_bar;
  Eigen::ArrayXd sigma;

  double beta_t(int t) const { return beta[t - 1]; }
  double alpha_t(int t) const { return alpha[t - 1]; }
  double alpha_bar_t(int t) const { return t == 0 ? 1.0 : alpha_bar[t - 1]; }
  double sigma_t(int t) const { return sigma[t - 1]; }
};

/// Linear beta schedule: beta_t = beta_start + (t-1)(beta_end-beta_start)/(T-1).
/// Default T=1000, beta from 1e-4 to 0.02.
NoiseSchedule build_schedule(int T, double beta_start = 1e-4,
                             double beta_end = 0.02);

/// Noise predictor: given a corrupted volume at step t, return the predicted
/// noise volume at the same resolution.
using DenoiserFn = std::function<VolumeGrid(const VolumeGrid&, int)>;

/// C_t = sqrt(abar_t) C_0 + sqrt(1 - abar_t) eps, elementwise.
VolumeGrid forward_corrupt(const VolumeGrid& c0, int t, const VolumeGrid& eps,
                           const NoiseSchedule& sched);

/// One training example: a uniformly drawn step, the drawn noise and the
/// corrupted volume.
struct LossDraw {
  int t = 0;
  VolumeGrid eps;
  VolumeGrid corrupted;
};

LossDraw draw_training_example(const VolumeGrid& c0, const NoiseSchedule& sched,
                               Rng& rng);

/// Single-example denoising objective: mean over voxels of
/// (eps - denoiser(C_t, t))^2 with t ~ U[1,T] and eps ~ N(0, I).
/// Deterministic given the rng state.
double training_loss(const DenoiserFn& denoiser, const VolumeGrid& c0,
                     const NoiseSchedule& sched, Rng& rng);

/// Ancestral reverse step:
/// C_{t-1} = (C_t - (beta_t / sqrt(1-abar_t)) eps_theta) / sqrt(alpha_t)
///           + sigma_t z,  z ~ N(0, I) for t > 1 and z = 0 at t = 1.
VolumeGrid ddpm_step(const VolumeGrid& ct, int t, const DenoiserFn& denoiser,
                     const NoiseSchedule& sched, Rng& rng);

/// Deterministic accelerated reverse step from t to t_prev (t_prev < t,
/// t_prev may be 0): the eta = 0 variant of subsampled sampling.
VolumeGrid ddim_step(const VolumeGrid& ct, int t, int t_prev,
                     const DenoiserFn& denoiser, const NoiseSchedule& sched);

/// Reproducibility record of one reverse chain.
struct SampleTrace {
  std::uint64_t seed = 0;
  std::vector<int> steps_used;
  VolumeGrid final;
  std::vector<VolumeGrid> snapshots;  // filled only when requested
};

struct SampleOptions {
  int subsample_factor = 1;  // 1 = full ancestral chain; k > 1 visits T/k steps
  bool keep_snapshots = false;
};

/// Run a reverse chain from C_T ~ N(0, I) at the given resolution. The chain
/// rng is keyed by `rng`; the noise of step t is drawn from rng.split(t) and
/// the initial volume from rng.split(0), so traces are bit-reproducible.
SampleTrace sample(const DenoiserFn& denoiser, const NoiseSchedule& sched,
                   int resolution, double extent, const SampleOptions& opts,
                   Rng rng);

}  // namespace waveshape
