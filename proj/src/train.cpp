#include "waveshape/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "waveshape/errors.hpp"
#include "waveshape/nn/adam.hpp"
#include "waveshape/nn/graph.hpp"

namespace waveshape {

namespace nn {

Adam::Adam(std::vector<Parameter*> params, double lr, double beta1, double beta2,
           double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (Parameter* p : params_) {
    m_.push_back(Eigen::ArrayXd::Zero(p->value.data.size()));
    v_.push_back(Eigen::ArrayXd::Zero(p->value.data.size()));
  }
}

void Adam::step() {
  ++step_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const Eigen::ArrayXd& g = params_[i]->grad.data;
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.square();
    const Eigen::ArrayXd m_hat = m_[i] / bc1;
    const Eigen::ArrayXd v_hat = v_[i] / bc2;
    params_[i]->value.data -= lr_ * m_hat / (v_hat.sqrt() + eps_);
  }
}

std::vector<float> Adam::flatten_state() const {
  std::vector<float> flat;
  for (const auto& m : m_)
    for (Eigen::Index i = 0; i < m.size(); ++i)
      flat.push_back(static_cast<float>(m[i]));
  for (const auto& v : v_)
    for (Eigen::Index i = 0; i < v.size(); ++i)
      flat.push_back(static_cast<float>(v[i]));
  return flat;
}

void Adam::load_state(const std::vector<float>& flat, std::uint64_t step_count) {
  std::size_t total = 0;
  for (const auto& m : m_) total += static_cast<std::size_t>(m.size());
  if (flat.size() != 2 * total)
    throw DataError("adam state size mismatch");
  std::size_t k = 0;
  for (auto& m : m_)
    for (Eigen::Index i = 0; i < m.size(); ++i) m[i] = flat[k++];
  for (auto& v : v_)
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = flat[k++];
  step_ = step_count;
}

}  // namespace nn

namespace {

// Scalar mean/std over every voxel of a volume set.
void dataset_moments(const std::vector<const Eigen::ArrayXd*>& arrays, double& mean,
                     double& stddev) {
  double sum = 0.0;
  std::int64_t n = 0;
  for (const auto* a : arrays) {
    sum += a->sum();
    n += a->size();
  }
  mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (const auto* a : arrays) ss += (*a - mean).square().sum();
  stddev = std::sqrt(ss / static_cast<double>(n));
  if (!(stddev > 1e-12)) stddev = 1.0;  // constant datasets stay untouched
}

struct LossLog {
  std::ofstream csv;
  explicit LossLog(const std::string& path) {
    if (!path.empty()) {
      csv.open(path);
      if (!csv) throw DataError("cannot open loss log: " + path);
      csv << "iter,loss\n";
    }
  }
  void log(int iter, double loss) {
    if (csv.is_open()) csv << iter << "," << loss << "\n";
  }
};

void abort_on_nan(double loss, double lr, const nn::Graph& g,
                  std::vector<nn::Parameter*>& params) {
  if (std::isfinite(loss)) return;
  double grad_norm = 0.0;
  for (const nn::Parameter* p : params) grad_norm += p->grad.data.square().sum();
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "training diverged: non-finite loss (lr=%g, grad_norm=%g, "
                "graph_nodes=%zu)",
                lr, std::sqrt(grad_norm), g.node_count());
  throw NumericError(buf);
}

}  // namespace

DenoiserFn make_denoiser(nn::UNet3d& net) {
  return [&net](const VolumeGrid& ct, int t) {
    const int n = ct.res;
    nn::Tensor x({1, 1, n, n, n});
    x.data = ct.values;
    const nn::Tensor y = net.infer(x, {t});
    VolumeGrid out(n, ct.extent, 0.0);
    out.values = y.data;
    return out;
  };
}

TrainedModel train_generator(const std::vector<VolumeGrid>& coarse,
                             const nn::NetConfig& arch,
                             const NoiseSchedule& sched, const TrainConfig& cfg) {
  if (coarse.empty()) throw DataError("train_generator: empty dataset");
  const int n = coarse.front().res;
  for (const auto& c : coarse)
    if (c.res != n) throw DataError("train_generator: mixed resolutions");

  TrainedModel model;
  model.norm = nn::NormAffine{};
  {
    std::vector<const Eigen::ArrayXd*> arrays;
    for (const auto& c : coarse) arrays.push_back(&c.values);
    dataset_moments(arrays, model.norm.in_mean, model.norm.in_std);
    model.norm.out_mean = model.norm.in_mean;
    model.norm.out_std = model.norm.in_std;
  }

  std::vector<Eigen::ArrayXd> data;
  data.reserve(coarse.size());
  for (const auto& c : coarse)
    data.push_back((c.values - model.norm.in_mean) / model.norm.in_std);

  Rng rng(cfg.seed);
  model.net = std::make_unique<nn::UNet3d>(arch, rng.split(0xa1));
  auto params = model.net->parameters();
  nn::Adam opt(params, cfg.lr);
  LossLog log(cfg.loss_csv);
  Rng draw_rng = rng.split(0xb2);

  const std::int64_t voxels = static_cast<std::int64_t>(n) * n * n;
  for (int iter = 1; iter <= cfg.iterations; ++iter) {
    const int b = cfg.batch;
    nn::Tensor ct({b, 1, n, n, n});
    nn::Tensor eps({b, 1, n, n, n});
    std::vector<int> tsteps(b);
    for (int bi = 0; bi < b; ++bi) {
      const auto& c0 = data[static_cast<std::size_t>(
          draw_rng.next_int(0, static_cast<std::int64_t>(data.size()) - 1))];
      const int t = static_cast<int>(draw_rng.next_int(1, sched.T));
      tsteps[bi] = t;
      const double abar = sched.alpha_bar_t(t);
      auto eps_seg = eps.data.segment(bi * voxels, voxels);
      for (std::int64_t i = 0; i < voxels; ++i)
        eps_seg[i] = draw_rng.next_normal();
      ct.data.segment(bi * voxels, voxels) =
          std::sqrt(abar) * c0 + std::sqrt(1.0 - abar) * eps_seg;
    }

    model.net->zero_grad();
    nn::Graph g;
    const auto x = g.input(std::move(ct));
    const auto target = g.input(std::move(eps));
    const auto pred = model.net->forward(g, x, tsteps);
    const auto loss = nn::gops::mse(g, pred, target);
    const double loss_value = g.value(loss).data[0];
    g.backward(loss);
    abort_on_nan(loss_value, cfg.lr, g, params);
    opt.step();

    model.losses.push_back(loss_value);
    log.log(iter, loss_value);
    if (cfg.log_every > 0 && iter % cfg.log_every == 0)
      std::printf("train-gen iter %d loss %.6f\n", iter, loss_value);
    if (!cfg.out_checkpoint.empty() && cfg.checkpoint_every > 0 &&
        iter % cfg.checkpoint_every == 0)
      nn::save_checkpoint(cfg.out_checkpoint,
                          nn::make_checkpoint(*model.net, model.norm, &opt));
  }

  if (!cfg.out_checkpoint.empty())
    nn::save_checkpoint(cfg.out_checkpoint,
                        nn::make_checkpoint(*model.net, model.norm, &opt));
  return model;
}

TrainedModel train_detail(const std::vector<WaveletPair>& pairs,
                          const nn::NetConfig& arch, const TrainConfig& cfg) {
  if (pairs.empty()) throw DataError("train_detail: empty dataset");
  const int nc = pairs.front().coarse.res;
  const int nd = pairs.front().detail.res;
  for (const auto& p : pairs)
    if (p.coarse.res != nc || p.detail.res != nd)
      throw DataError("train_detail: mixed resolutions");
  if (arch.upsample_head < 1)
    throw ConfigError("train_detail: detail architecture needs an upsample head");

  TrainedModel model;
  {
    std::vector<const Eigen::ArrayXd*> cin, dout;
    for (const auto& p : pairs) {
      cin.push_back(&p.coarse.values);
      dout.push_back(&p.detail.values);
    }
    dataset_moments(cin, model.norm.in_mean, model.norm.in_std);
    dataset_moments(dout, model.norm.out_mean, model.norm.out_std);
  }

  std::vector<Eigen::ArrayXd> xs, ys;
  for (const auto& p : pairs) {
    xs.push_back((p.coarse.values - model.norm.in_mean) / model.norm.in_std);
    ys.push_back((p.detail.values - model.norm.out_mean) / model.norm.out_std);
  }

  Rng rng(cfg.seed);
  model.net = std::make_unique<nn::UNet3d>(arch, rng.split(0xa1));
  auto params = model.net->parameters();
  nn::Adam opt(params, cfg.lr);
  LossLog log(cfg.loss_csv);
  Rng draw_rng = rng.split(0xb2);

  const std::int64_t vin = static_cast<std::int64_t>(nc) * nc * nc;
  const std::int64_t vout = static_cast<std::int64_t>(nd) * nd * nd;
  for (int iter = 1; iter <= cfg.iterations; ++iter) {
    const int b = cfg.batch;
    nn::Tensor x({b, 1, nc, nc, nc});
    nn::Tensor y({b, 1, nd, nd, nd});
    for (int bi = 0; bi < b; ++bi) {
      const auto idx = static_cast<std::size_t>(
          draw_rng.next_int(0, static_cast<std::int64_t>(xs.size()) - 1));
      x.data.segment(bi * vin, vin) = xs[idx];
      y.data.segment(bi * vout, vout) = ys[idx];
    }

    model.net->zero_grad();
    nn::Graph g;
    const auto xin = g.input(std::move(x));
    const auto target = g.input(std::move(y));
    const auto pred = model.net->forward(g, xin, {});
    const auto loss = nn::gops::mse(g, pred, target);
    const double loss_value = g.value(loss).data[0];
    g.backward(loss);
    abort_on_nan(loss_value, cfg.lr, g, params);
    opt.step();

    model.losses.push_back(loss_value);
    log.log(iter, loss_value);
    if (cfg.log_every > 0 && iter % cfg.log_every == 0)
      std::printf("train-detail iter %d loss %.6f\n", iter, loss_value);
    if (!cfg.out_checkpoint.empty() && cfg.checkpoint_every > 0 &&
        iter % cfg.checkpoint_every == 0)
      nn::save_checkpoint(cfg.out_checkpoint,
                          nn::make_checkpoint(*model.net, model.norm, &opt));
  }

  if (!cfg.out_checkpoint.empty())
    nn::save_checkpoint(cfg.out_checkpoint,
                        nn::make_checkpoint(*model.net, model.norm, &opt));
  return model;
}

}  // namespace waveshape
