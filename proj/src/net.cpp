#include "waveshape/nn/net.hpp"

#include <cmath>
#include <json.hpp>

#include "waveshape/errors.hpp"
#include "waveshape/nn/ops.hpp"

namespace waveshape::nn {

using json = nlohmann::ordered_json;

std::string NetConfig::descriptor() const {
  json j;
  j["kind"] = kind;
  j["in_channels"] = in_channels;
  j["out_channels"] = out_channels;
  j["base_channels"] = base_channels;
  j["channel_mult"] = channel_mult;
  j["convs_per_stage"] = convs_per_stage;
  j["time_embed_dim"] = time_embed_dim;
  j["sinusoidal_dim"] = sinusoidal_dim;
  j["bottleneck_attention"] = bottleneck_attention;
  j["upsample_head"] = upsample_head;
  return j.dump();
}

NetConfig NetConfig::from_descriptor(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("bad architecture descriptor: ") + e.what());
  }
  NetConfig c;
  c.kind = j.at("kind").get<std::string>();
  c.in_channels = j.at("in_channels").get<int>();
  c.out_channels = j.at("out_channels").get<int>();
  c.base_channels = j.at("base_channels").get<int>();
  c.channel_mult = j.at("channel_mult").get<std::vector<int>>();
  c.convs_per_stage = j.at("convs_per_stage").get<int>();
  c.time_embed_dim = j.at("time_embed_dim").get<int>();
  c.sinusoidal_dim = j.at("sinusoidal_dim").get<int>();
  c.bottleneck_attention = j.at("bottleneck_attention").get<bool>();
  c.upsample_head = j.at("upsample_head").get<int>();
  return c;
}

NetConfig NetConfig::denoiser_default() { return NetConfig{}; }

NetConfig NetConfig::detail_default() {
  NetConfig c;
  c.kind = "detail";
  c.convs_per_stage = 3;  // extra convolutions for the denser detail field
  c.time_embed_dim = 0;
  c.upsample_head = 1;
  return c;
}

namespace {

Parameter conv_weight(int cout, int cin, Rng& rng, bool zero = false) {
  Tensor w({cout, cin, 3, 3, 3});
  if (!zero) {
    const double stddev = std::sqrt(2.0 / (cin * 27.0));
    for (Eigen::Index i = 0; i < w.data.size(); ++i)
      w.data[i] = stddev * rng.next_normal();
  }
  return Parameter(std::move(w));
}

Parameter linear_weight(int out, int in, Rng& rng, bool zero = false) {
  Tensor w({out, in});
  if (!zero) {
    const double stddev = std::sqrt(1.0 / in);
    for (Eigen::Index i = 0; i < w.data.size(); ++i)
      w.data[i] = stddev * rng.next_normal();
  }
  return Parameter(std::move(w));
}

Parameter bias(int n) { return Parameter(Tensor({n})); }

}  // namespace

UNet3d::UNet3d(NetConfig cfg, Rng rng) : cfg_(std::move(cfg)) {
  if (cfg_.stages() < 1) throw ConfigError("net: need at least one stage");
  if (cfg_.convs_per_stage < 1) throw ConfigError("net: convs_per_stage must be >= 1");
  const int s_count = cfg_.stages();

  stem_ = {conv_weight(cfg_.stage_channels(0), cfg_.in_channels, rng),
           bias(cfg_.stage_channels(0))};

  enc_.resize(s_count);
  for (int s = 0; s < s_count; ++s) {
    const int cin0 = s == 0 ? cfg_.stage_channels(0) : cfg_.stage_channels(s - 1);
    const int c = cfg_.stage_channels(s);
    for (int j = 0; j < cfg_.convs_per_stage; ++j) {
      const int ci = j == 0 ? cin0 : c;
      enc_[s].push_back({conv_weight(c, ci, rng), bias(c)});
    }
  }

  if (cfg_.time_embed_dim > 0) {
    emb_fc1_ = {linear_weight(cfg_.time_embed_dim, cfg_.sinusoidal_dim, rng),
                bias(cfg_.time_embed_dim)};
    emb_fc2_ = {linear_weight(cfg_.time_embed_dim, cfg_.time_embed_dim, rng),
                bias(cfg_.time_embed_dim)};
    // one conditioning projection per encoder stage plus one per decoder stage
    for (int s = 0; s < 2 * s_count - 1; ++s) {
      const int c = cfg_.stage_channels(s < s_count ? s : 2 * s_count - 2 - s);
      time_proj_.push_back({linear_weight(c, cfg_.time_embed_dim, rng), bias(c)});
    }
  }

  const int cb = cfg_.stage_channels(s_count - 1);
  if (cfg_.bottleneck_attention) {
    attn_wq_ = linear_weight(cb, cb, rng);
    attn_wk_ = linear_weight(cb, cb, rng);
    attn_wv_ = linear_weight(cb, cb, rng, /*zero=*/true);
    attn_wo_ = linear_weight(cb, cb, rng, /*zero=*/true);
  }
  bottleneck_ = {conv_weight(cb, cb, rng), bias(cb)};

  dec_.resize(s_count - 1);
  for (int s = s_count - 2; s >= 0; --s) {
    const int c = cfg_.stage_channels(s);
    const int cin0 = cfg_.stage_channels(s + 1) + c;  // upsampled + skip
    for (int j = 0; j < cfg_.convs_per_stage; ++j) {
      const int ci = j == 0 ? cin0 : c;
      dec_[s].push_back({conv_weight(c, ci, rng), bias(c)});
    }
  }

  const int c0 = cfg_.stage_channels(0);
  for (int u = 0; u < cfg_.upsample_head; ++u)
    head_.push_back({conv_weight(c0, c0, rng), bias(c0)});

  final_ = {conv_weight(cfg_.out_channels, c0, rng, /*zero=*/true),
            bias(cfg_.out_channels)};
}

std::vector<Parameter*> UNet3d::parameters() {
  std::vector<Parameter*> out;
  auto push_conv = [&](Conv& c) {
    out.push_back(&c.w);
    out.push_back(&c.b);
  };
  auto push_lin = [&](Lin& l) {
    out.push_back(&l.w);
    out.push_back(&l.b);
  };
  push_conv(stem_);
  for (auto& stage : enc_)
    for (auto& c : stage) push_conv(c);
  if (cfg_.time_embed_dim > 0) {
    push_lin(emb_fc1_);
    push_lin(emb_fc2_);
    for (auto& p : time_proj_) push_lin(p);
  }
  if (cfg_.bottleneck_attention) {
    out.push_back(&attn_wq_);
    out.push_back(&attn_wk_);
    out.push_back(&attn_wv_);
    out.push_back(&attn_wo_);
  }
  push_conv(bottleneck_);
  for (auto& stage : dec_)
    for (auto& c : stage) push_conv(c);
  for (auto& c : head_) push_conv(c);
  push_conv(final_);
  return out;
}

std::vector<const Parameter*> UNet3d::parameters() const {
  auto list = const_cast<UNet3d*>(this)->parameters();
  return {list.begin(), list.end()};
}

std::int64_t UNet3d::parameter_count() const {
  std::int64_t n = 0;
  for (const Parameter* p : parameters()) n += p->value.size();
  return n;
}

void UNet3d::zero_grad() {
  for (Parameter* p : parameters()) p->zero_grad();
}

std::vector<float> UNet3d::flatten_parameters() const {
  std::vector<float> flat;
  flat.reserve(static_cast<std::size_t>(parameter_count()));
  for (const Parameter* p : parameters())
    for (Eigen::Index i = 0; i < p->value.data.size(); ++i)
      flat.push_back(static_cast<float>(p->value.data[i]));
  return flat;
}

void UNet3d::load_parameters(const std::vector<float>& flat) {
  if (static_cast<std::int64_t>(flat.size()) != parameter_count())
    throw DataError("load_parameters: size mismatch with architecture");
  std::size_t k = 0;
  for (Parameter* p : parameters())
    for (Eigen::Index i = 0; i < p->value.data.size(); ++i)
      p->value.data[i] = flat[k++];
}

void UNet3d::check_input(const Tensor& x) const {
  if (x.ndim() != 5) throw DataError("net: input must be [B,C,D,H,W]");
  if (x.dim(1) != cfg_.in_channels) throw DataError("net: wrong input channels");
  const int n = x.dim(2);
  if (x.dim(3) != n || x.dim(4) != n) throw DataError("net: input must be cubic");
  const int down = 1 << (cfg_.stages() - 1);
  if (n % down != 0 || n / down < 1)
    throw ConfigError("net: resolution not divisible by the stage downsampling");
  if (cfg_.bottleneck_attention) {
    const std::int64_t s = static_cast<std::int64_t>(n / down);
    if (s * s * s > 512)
      throw ConfigError(
          "net: bottleneck larger than 8^3; deepen the encoder (more "
          "channel_mult stages) before enabling attention");
  }
}

Graph::Var UNet3d::time_embedding(Graph& g, const std::vector<int>& tsteps) {
  const int b = static_cast<int>(tsteps.size());
  Tensor sin({b, cfg_.sinusoidal_dim});
  for (int i = 0; i < b; ++i) {
    const Tensor e = ops::sinusoidal_embedding(tsteps[i], cfg_.sinusoidal_dim);
    sin.data.segment(static_cast<std::int64_t>(i) * cfg_.sinusoidal_dim,
                     cfg_.sinusoidal_dim) = e.data;
  }
  Graph::Var h = g.input(std::move(sin));
  h = gops::linear(g, h, g.param(emb_fc1_.w), g.param(emb_fc1_.b));
  h = gops::silu(g, h);
  h = gops::linear(g, h, g.param(emb_fc2_.w), g.param(emb_fc2_.b));
  return h;
}

Graph::Var UNet3d::forward(Graph& g, Graph::Var x, const std::vector<int>& tsteps) {
  check_input(g.value(x));
  const int s_count = cfg_.stages();
  const int batch = g.value(x).dim(0);

  Graph::Var emb = -1;
  if (cfg_.time_embed_dim > 0) {
    if (static_cast<int>(tsteps.size()) != batch)
      throw DataError("net: need one time step per batch element");
    emb = time_embedding(g, tsteps);
  }
  auto inject = [&](Graph::Var h, int proj_index) {
    if (emb < 0) return h;
    Lin& proj = time_proj_[proj_index];
    Graph::Var bias_bc = gops::linear(g, emb, g.param(proj.w), g.param(proj.b));
    return gops::add_channel_bias(g, h, bias_bc);
  };

  Graph::Var h = gops::conv3d(g, x, g.param(stem_.w), g.param(stem_.b));

  std::vector<Graph::Var> skips(s_count, -1);
  for (int s = 0; s < s_count; ++s) {
    for (int j = 0; j < cfg_.convs_per_stage; ++j) {
      h = gops::conv3d(g, h, g.param(enc_[s][j].w), g.param(enc_[s][j].b));
      h = gops::silu(g, h);
      if (j == 0) h = inject(h, s);
    }
    skips[s] = h;
    if (s + 1 < s_count) h = gops::avgpool2(g, h);
  }

  if (cfg_.bottleneck_attention)
    h = gops::attention(g, h, g.param(attn_wq_), g.param(attn_wk_),
                        g.param(attn_wv_), g.param(attn_wo_));
  h = gops::conv3d(g, h, g.param(bottleneck_.w), g.param(bottleneck_.b));
  h = gops::silu(g, h);

  for (int s = s_count - 2; s >= 0; --s) {
    h = gops::upsample2(g, h);
    h = gops::concat_channels(g, h, skips[s]);
    for (int j = 0; j < cfg_.convs_per_stage; ++j) {
      h = gops::conv3d(g, h, g.param(dec_[s][j].w), g.param(dec_[s][j].b));
      h = gops::silu(g, h);
      if (j == 0) h = inject(h, 2 * s_count - 2 - s);
    }
  }

  for (auto& c : head_) {
    h = gops::upsample2(g, h);
    h = gops::conv3d(g, h, g.param(c.w), g.param(c.b));
    h = gops::silu(g, h);
  }

  return gops::conv3d(g, h, g.param(final_.w), g.param(final_.b));
}

Tensor UNet3d::infer(const Tensor& x, const std::vector<int>& tsteps) {
  Graph g;
  Graph::Var in = g.input(x);
  Graph::Var out = forward(g, in, tsteps);
  return g.value(out);
}

}  // namespace waveshape::nn
