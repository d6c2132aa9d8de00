#include "waveshape/diffusion.hpp"

#include <cmath>

#include "waveshape/errors.hpp"

namespace waveshape {

NoiseSchedule build_schedule(int T, double beta_start, double beta_end) {
  if (T < 2) throw ConfigError("schedule: T must be >= 2");
  if (!(beta_start > 0.0) || !(beta_start < beta_end) || !(beta_end < 1.0))
    throw ConfigError("schedule: need 0 < beta_start < beta_end < 1");

  NoiseSchedule s;
  s.T = T;
  s.beta.resize(T);
  s.alpha.resize(T);
  s.alpha_bar.resize(T);
  s.sigma.resize(T);
  double abar = 1.0;
  double abar_prev = 1.0;
  for (int t = 1; t <= T; ++t) {
    const double beta = beta_start + (t - 1) * (beta_end - beta_start) / (T - 1);
    abar_prev = abar;
    abar *= 1.0 - beta;
    s.beta[t - 1] = beta;
    s.alpha[t - 1] = 1.0 - beta;
    s.alpha_bar[t - 1] = abar;
    s.sigma[t - 1] = std::sqrt((1.0 - abar_prev) / (1.0 - abar) * beta);
  }
  return s;
}

VolumeGrid forward_corrupt(const VolumeGrid& c0, int t, const VolumeGrid& eps,
                           const NoiseSchedule& sched) {
  if (eps.res != c0.res)
    throw DataError("forward_corrupt: noise resolution mismatch");
  if (t < 1 || t > sched.T) throw DataError("forward_corrupt: step out of range");
  const double abar = sched.alpha_bar_t(t);
  VolumeGrid out(c0.res, c0.extent, 0.0);
  out.values = std::sqrt(abar) * c0.values + std::sqrt(1.0 - abar) * eps.values;
  return out;
}

LossDraw draw_training_example(const VolumeGrid& c0, const NoiseSchedule& sched,
                               Rng& rng) {
  LossDraw draw;
  draw.t = static_cast<int>(rng.next_int(1, sched.T));
  draw.eps = VolumeGrid(c0.res, c0.extent, 0.0);
  rng.fill_normal(draw.eps.values);
  draw.corrupted = forward_corrupt(c0, draw.t, draw.eps, sched);
  return draw;
}

double training_loss(const DenoiserFn& denoiser, const VolumeGrid& c0,
                     const NoiseSchedule& sched, Rng& rng) {
  const LossDraw draw = draw_training_example(c0, sched, rng);
  const VolumeGrid pred = denoiser(draw.corrupted, draw.t);
  if (pred.res != c0.res)
    throw DataError("training_loss: denoiser changed the resolution");
  return (draw.eps.values - pred.values).square().mean();
}

VolumeGrid ddpm_step(const VolumeGrid& ct, int t, const DenoiserFn& denoiser,
                     const NoiseSchedule& sched, Rng& rng) {
  const VolumeGrid eps = denoiser(ct, t);
  const double alpha = sched.alpha_t(t);
  const double abar = sched.alpha_bar_t(t);
  const double beta = sched.beta_t(t);
  VolumeGrid out(ct.res, ct.extent, 0.0);
  out.values =
      (ct.values - (beta / std::sqrt(1.0 - abar)) * eps.values) / std::sqrt(alpha);
  if (t > 1) {
    const double sigma = sched.sigma_t(t);
    for (Eigen::Index i = 0; i < out.values.size(); ++i)
      out.values[i] += sigma * rng.next_normal();
  }
  return out;
}

VolumeGrid ddim_step(const VolumeGrid& ct, int t, int t_prev,
                     const DenoiserFn& denoiser, const NoiseSchedule& sched) {
  const VolumeGrid eps = denoiser(ct, t);
  const double abar = sched.alpha_bar_t(t);
  const double abar_prev = sched.alpha_bar_t(t_prev);
  VolumeGrid out(ct.res, ct.extent, 0.0);
  // x0 estimate, then deterministic jump to the previous kept step
  Eigen::ArrayXd x0 =
      (ct.values - std::sqrt(1.0 - abar) * eps.values) / std::sqrt(abar);
  out.values = std::sqrt(abar_prev) * x0 + std::sqrt(1.0 - abar_prev) * eps.values;
  return out;
}

SampleTrace sample(const DenoiserFn& denoiser, const NoiseSchedule& sched,
                   int resolution, double extent, const SampleOptions& opts,
                   Rng rng) {
  if (opts.subsample_factor < 1)
    throw ConfigError("sample: subsample factor must be >= 1");

  SampleTrace trace;
  trace.seed = rng.key();

  VolumeGrid current(resolution, extent, 0.0);
  {
    Rng init = rng.split(0);
    init.fill_normal(current.values);
  }

  if (opts.subsample_factor == 1) {
    for (int t = sched.T; t >= 1; --t) {
      Rng step_rng = rng.split(static_cast<std::uint64_t>(t));
      current = ddpm_step(current, t, denoiser, sched, step_rng);
      trace.steps_used.push_back(t);
      if (opts.keep_snapshots) trace.snapshots.push_back(current);
    }
  } else {
    // evenly spaced subset {1, 1+k, 1+2k, ...}, visited from the top;
    // the final step jumps to abar_0 = 1, i.e. the x0 estimate.
    std::vector<int> steps;
    for (int t = 1; t <= sched.T; t += opts.subsample_factor) steps.push_back(t);
    for (int i = static_cast<int>(steps.size()) - 1; i >= 0; --i) {
      const int t = steps[i];
      const int t_prev = i > 0 ? steps[i - 1] : 0;
      current = ddim_step(current, t, t_prev, denoiser, sched);
      trace.steps_used.push_back(t);
      if (opts.keep_snapshots) trace.snapshots.push_back(current);
    }
  }
  trace.final = std::move(current);
  return trace;
}

}  // namespace waveshape
