#include "waveshape/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "waveshape/isosurface.hpp"
#include "waveshape/nn/checkpoint.hpp"
#include "waveshape/wavelet.hpp"

namespace waveshape {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::uint64_t hash_bytes(const void* data, std::size_t n) {
  // FNV-1a 64
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t hash_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open for hashing: " + path);
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (is) {
    is.read(buf, sizeof(buf));
    const auto got = is.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

namespace {

json net_to_json(const nn::NetConfig& c) { return json::parse(c.descriptor()); }

nn::NetConfig net_from_json(const json& j, nn::NetConfig base) {
  base.kind = j.value("kind", base.kind);
  base.in_channels = j.value("in_channels", base.in_channels);
  base.out_channels = j.value("out_channels", base.out_channels);
  base.base_channels = j.value("base_channels", base.base_channels);
  if (j.contains("channel_mult"))
    base.channel_mult = j.at("channel_mult").get<std::vector<int>>();
  base.convs_per_stage = j.value("convs_per_stage", base.convs_per_stage);
  base.time_embed_dim = j.value("time_embed_dim", base.time_embed_dim);
  base.sinusoidal_dim = j.value("sinusoidal_dim", base.sinusoidal_dim);
  base.bottleneck_attention =
      j.value("bottleneck_attention", base.bottleneck_attention);
  base.upsample_head = j.value("upsample_head", base.upsample_head);
  return base;
}

json train_to_json(const TrainConfig& c) {
  json j;
  j["iterations"] = c.iterations;
  j["batch"] = c.batch;
  j["lr"] = c.lr;
  j["seed"] = c.seed;
  j["log_every"] = c.log_every;
  j["loss_csv"] = c.loss_csv;
  j["checkpoint_every"] = c.checkpoint_every;
  return j;
}

TrainConfig train_from_json(const json& j, TrainConfig base) {
  base.iterations = j.value("iterations", base.iterations);
  base.batch = j.value("batch", base.batch);
  base.lr = j.value("lr", base.lr);
  base.seed = j.value("seed", base.seed);
  base.log_every = j.value("log_every", base.log_every);
  base.loss_csv = j.value("loss_csv", base.loss_csv);
  base.checkpoint_every = j.value("checkpoint_every", base.checkpoint_every);
  return base;
}

std::vector<std::string> list_objs(const std::string& dir) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir);
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".obj")
      out.push_back(entry.path().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

void PipelineConfig::validate() const {
  tsdf.validate();
  if (level < 1) throw ConfigError("config: wavelet level must be >= 1");
  if (tsdf.resolution % (1 << level) != 0)
    throw ConfigError("config: resolution not divisible by 2^level");
  filter_bank(filters);                            // throws on unknown name
  build_schedule(schedule_steps, beta_start, beta_end);  // validates range
  if (generator_arch.time_embed_dim <= 0)
    throw ConfigError("config: generator architecture needs time conditioning");
  if (detail_arch.upsample_head != 1)
    throw ConfigError("config: detail architecture needs one 2x upsample head");
}

std::string PipelineConfig::to_json() const {
  json j;
  j["tsdf"] = {{"resolution", tsdf.resolution},
               {"extent", tsdf.extent},
               {"truncation", tsdf.truncation}};
  j["wavelet"] = {{"filters", filters}, {"level", level}};
  j["schedule"] = {{"steps", schedule_steps},
                   {"beta_start", beta_start},
                   {"beta_end", beta_end}};
  j["generator_arch"] = net_to_json(generator_arch);
  j["detail_arch"] = net_to_json(detail_arch);
  j["generator_train"] = train_to_json(generator_train);
  j["detail_train"] = train_to_json(detail_train);
  j["seed"] = seed;
  return j.dump(2);
}

PipelineConfig PipelineConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  PipelineConfig c;
  try {
    if (j.contains("tsdf")) {
      const auto& t = j.at("tsdf");
      c.tsdf.resolution = t.value("resolution", c.tsdf.resolution);
      c.tsdf.extent = t.value("extent", c.tsdf.extent);
      c.tsdf.truncation = t.value("truncation", c.tsdf.truncation);
    }
    if (j.contains("wavelet")) {
      const auto& w = j.at("wavelet");
      c.filters = w.value("filters", c.filters);
      c.level = w.value("level", c.level);
    }
    if (j.contains("schedule")) {
      const auto& s = j.at("schedule");
      c.schedule_steps = s.value("steps", c.schedule_steps);
      c.beta_start = s.value("beta_start", c.beta_start);
      c.beta_end = s.value("beta_end", c.beta_end);
    }
    if (j.contains("generator_arch"))
      c.generator_arch = net_from_json(j.at("generator_arch"), c.generator_arch);
    if (j.contains("detail_arch"))
      c.detail_arch = net_from_json(j.at("detail_arch"), c.detail_arch);
    if (j.contains("generator_train"))
      c.generator_train = train_from_json(j.at("generator_train"), c.generator_train);
    if (j.contains("detail_train"))
      c.detail_train = train_from_json(j.at("detail_train"), c.detail_train);
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field error: ") + e.what());
  }
  return c;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config: " + path);
  std::string text((std::istreambuf_iterator<char>(is)),
                   std::istreambuf_iterator<char>());
  return from_json(text);
}

std::vector<std::string> DatasetManifest::wvp_paths() const {
  std::vector<std::string> out;
  for (const auto& e : entries)
    if (e.status == "ok") out.push_back(e.wvp);
  return out;
}

void DatasetManifest::save(const std::string& path) const {
  json j = json::array();
  for (const auto& e : entries) {
    j.push_back({{"source", e.source},
                 {"wvp", e.wvp},
                 {"source_hash", e.source_hash},
                 {"wvp_hash", e.wvp_hash},
                 {"status", e.status}});
  }
  std::ofstream os(path);
  if (!os) throw DataError("cannot open for write: " + path);
  os << j.dump(2) << "\n";
}

DatasetManifest DatasetManifest::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open manifest: " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw DataError(std::string("manifest parse error: ") + e.what());
  }
  DatasetManifest m;
  for (const auto& e : j) {
    m.entries.push_back({e.at("source").get<std::string>(),
                         e.at("wvp").get<std::string>(),
                         e.at("source_hash").get<std::uint64_t>(),
                         e.at("wvp_hash").get<std::uint64_t>(),
                         e.at("status").get<std::string>()});
  }
  return m;
}

DatasetManifest prepare_dataset(const std::string& mesh_dir,
                                const std::string& out_dir,
                                const PipelineConfig& cfg, PrepareStats* stats) {
  cfg.validate();
  const std::vector<std::string> meshes = list_objs(mesh_dir);
  if (meshes.empty()) throw DataError("no .obj files in " + mesh_dir);
  fs::create_directories(out_dir);

  const std::string manifest_path = (fs::path(out_dir) / "manifest.json").string();
  DatasetManifest previous;
  if (fs::exists(manifest_path)) previous = DatasetManifest::load(manifest_path);

  const FilterBank fb = filter_bank(cfg.filters);
  DatasetManifest manifest;
  PrepareStats local;

  for (const std::string& mesh_path : meshes) {
    const std::string wvp_path =
        (fs::path(out_dir) / (fs::path(mesh_path).stem().string() + ".wvp")).string();
    const std::uint64_t shash = hash_file(mesh_path);

    const ManifestEntry* prev = nullptr;
    for (const auto& e : previous.entries)
      if (e.source == mesh_path) prev = &e;
    if (prev != nullptr && prev->status == "ok" && prev->source_hash == shash &&
        fs::exists(wvp_path) && hash_file(wvp_path) == prev->wvp_hash) {
      manifest.entries.push_back(*prev);
      ++local.reused;
      continue;
    }

    ManifestEntry entry{mesh_path, wvp_path, shash, 0, "failed"};
    try {
      const TriangleMesh mesh = normalize_mesh(load_obj(mesh_path), cfg.tsdf.extent);
      const VolumeGrid tsdf = sample_tsdf(mesh, cfg.tsdf);
      const PyramidLevels pyramid = decompose(tsdf, fb, cfg.level);
      write_wvp(wvp_path, compact_pair(pyramid));
      entry.wvp_hash = hash_file(wvp_path);
      entry.status = "ok";
      ++local.prepared;
    } catch (const DataError& e) {
      std::fprintf(stderr, "warning: skipping %s: %s\n", mesh_path.c_str(), e.what());
      ++local.failed;
    }
    manifest.entries.push_back(std::move(entry));
  }

  manifest.save(manifest_path);
  if (stats != nullptr) *stats = local;
  return manifest;
}

std::vector<WaveletPair> load_dataset_pairs(const DatasetManifest& manifest) {
  std::vector<WaveletPair> pairs;
  for (const auto& e : manifest.entries) {
    if (e.status != "ok") continue;
    if (hash_file(e.wvp) != e.wvp_hash)
      throw DataError("content hash mismatch (stale or corrupt artifact): " + e.wvp);
    pairs.push_back(read_wvp(e.wvp));
  }
  if (pairs.empty()) throw DataError("manifest has no usable entries");
  return pairs;
}

std::vector<std::string> generate_shapes(const GenerateOptions& opts,
                                         const PipelineConfig& cfg) {
  cfg.validate();
  if (opts.count < 1) throw ConfigError("generate: count must be >= 1");
  if (opts.steps_div < 1) throw ConfigError("generate: steps-div must be >= 1");

  const nn::Checkpoint gen_ckpt = nn::load_checkpoint(opts.generator_checkpoint);
  if (gen_ckpt.config.descriptor() != cfg.generator_arch.descriptor())
    throw ConfigError("generator checkpoint architecture mismatch:\n  checkpoint: " +
                      gen_ckpt.config.descriptor() +
                      "\n  config:     " + cfg.generator_arch.descriptor());
  nn::UNet3d gen_net = nn::net_from_checkpoint(gen_ckpt);

  const bool with_detail = !opts.detail_checkpoint.empty();
  std::unique_ptr<nn::UNet3d> detail_net;
  nn::NormAffine detail_norm;
  if (with_detail) {
    const nn::Checkpoint det_ckpt = nn::load_checkpoint(opts.detail_checkpoint);
    if (det_ckpt.config.descriptor() != cfg.detail_arch.descriptor())
      throw ConfigError("detail checkpoint architecture mismatch:\n  checkpoint: " +
                        det_ckpt.config.descriptor() +
                        "\n  config:     " + cfg.detail_arch.descriptor());
    detail_net = std::make_unique<nn::UNet3d>(nn::net_from_checkpoint(det_ckpt));
    detail_norm = det_ckpt.norm;
  }

  const NoiseSchedule sched =
      build_schedule(cfg.schedule_steps, cfg.beta_start, cfg.beta_end);
  const FilterBank fb = filter_bank(cfg.filters);
  const int coarse_res = cfg.tsdf.resolution >> cfg.level;
  fs::create_directories(opts.out_dir);

  DenoiserFn denoiser = make_denoiser(gen_net);
  SampleOptions sample_opts;
  sample_opts.subsample_factor = opts.steps_div;
  sample_opts.keep_snapshots = opts.dump_traces;

  std::vector<std::string> out_paths;
  const Rng base(opts.seed);
  for (int i = 0; i < opts.count; ++i) {
    // per-shape stream so any shape is reproducible in isolation
    const Rng shape_rng = base.split(static_cast<std::uint64_t>(i));
    SampleTrace trace = sample(denoiser, sched, coarse_res, cfg.tsdf.extent,
                               sample_opts, shape_rng);

    WaveletPair pair;
    pair.level = cfg.level;
    pair.source_meta = cfg.tsdf;
    pair.coarse = std::move(trace.final);
    pair.coarse.values =
        pair.coarse.values * gen_ckpt.norm.in_std + gen_ckpt.norm.in_mean;
    pair.detail = VolumeGrid(coarse_res * 2, cfg.tsdf.extent, 0.0);
    if (with_detail) {
      nn::Tensor x({1, 1, coarse_res, coarse_res, coarse_res});
      x.data = (pair.coarse.values - detail_norm.in_mean) / detail_norm.in_std;
      const nn::Tensor y = detail_net->infer(x, {});
      pair.detail.values = y.data * detail_norm.out_std + detail_norm.out_mean;
    }

    const VolumeGrid tsdf = reconstruct_from_pair(pair, fb);
    const TriangleMesh mesh = marching_cubes(tsdf, 0.0);

    char name[32];
    std::snprintf(name, sizeof(name), "shape_%04d.obj", i);
    const std::string path = (fs::path(opts.out_dir) / name).string();
    save_obj(path, mesh);
    out_paths.push_back(path);

    if (opts.dump_traces) {
      const fs::path trace_dir = fs::path(opts.out_dir) / "traces";
      fs::create_directories(trace_dir);
      for (std::size_t s = 0; s < trace.snapshots.size(); ++s) {
        char tname[48];
        std::snprintf(tname, sizeof(tname), "shape_%04d_step_%04d.vol", i,
                      trace.steps_used[s]);
        write_vol((trace_dir / tname).string(), trace.snapshots[s]);
      }
    }
  }

  json run;
  run["mode"] = with_detail ? "full" : "no-detail";
  run["seed"] = opts.seed;
  run["count"] = opts.count;
  run["steps_div"] = opts.steps_div;
  run["generator_checkpoint"] = opts.generator_checkpoint;
  run["detail_checkpoint"] = opts.detail_checkpoint;
  json files = json::array();
  for (const auto& p : out_paths)
    files.push_back({{"path", p}, {"hash", hash_file(p)}});
  run["outputs"] = files;
  std::ofstream os((fs::path(opts.out_dir) / "run.json").string());
  os << run.dump(2) << "\n";

  return out_paths;
}

namespace {

PointCloud maybe_subsample(const PointCloud& cloud, int limit, Rng rng) {
  if (static_cast<int>(cloud.size()) <= limit) return cloud;
  // seeded partial Fisher-Yates: the first `limit` slots are an unbiased sample
  std::vector<int> idx(cloud.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  for (int i = 0; i < limit; ++i) {
    const auto j = static_cast<std::size_t>(
        rng.next_int(i, static_cast<std::int64_t>(idx.size()) - 1));
    std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
  }
  PointCloud out;
  out.points.reserve(limit);
  for (int i = 0; i < limit; ++i)
    out.points.push_back(cloud.points[static_cast<std::size_t>(idx[i])]);
  return out;
}

std::vector<PointCloud> clouds_from_meshes(const std::vector<TriangleMesh>& meshes,
                                           int points, Rng seed_stream) {
  std::vector<PointCloud> clouds;
  clouds.reserve(meshes.size());
  for (std::size_t i = 0; i < meshes.size(); ++i)
    clouds.push_back(
        sample_surface(meshes[i], points, seed_stream.split(i).key()));
  return clouds;
}

MetricReport metrics_with_emd_cap(const std::vector<PointCloud>& gen,
                                  const std::vector<PointCloud>& ref,
                                  std::uint64_t seed) {
  const Rng sub(Rng(seed).split(0x5b).key());
  std::vector<PointCloud> gen_emd, ref_emd;
  for (std::size_t i = 0; i < gen.size(); ++i)
    gen_emd.push_back(maybe_subsample(gen[i], 1024, sub.split(2 * i)));
  for (std::size_t i = 0; i < ref.size(); ++i)
    ref_emd.push_back(maybe_subsample(ref[i], 1024, sub.split(2 * i + 1)));
  return compute_metrics(gen, ref, gen_emd, ref_emd);
}

}  // namespace

MetricReport evaluate_dirs(const std::string& gen_dir, const std::string& ref_dir,
                           int points, std::uint64_t seed,
                           const std::string& out_csv) {
  if (points < 1) throw ConfigError("evaluate: points must be >= 1");
  std::vector<TriangleMesh> gen_meshes, ref_meshes;
  for (const auto& p : list_objs(gen_dir)) gen_meshes.push_back(load_obj(p));
  for (const auto& p : list_objs(ref_dir)) ref_meshes.push_back(load_obj(p));
  if (gen_meshes.size() < 2 || ref_meshes.size() < 2)
    throw DataError("evaluate: need at least two meshes per directory");

  const Rng base(seed);
  const auto gen_clouds = clouds_from_meshes(gen_meshes, points, base.split(0x67));
  const auto ref_clouds = clouds_from_meshes(ref_meshes, points, base.split(0x72));
  const MetricReport report = metrics_with_emd_cap(gen_clouds, ref_clouds, seed);
  if (!out_csv.empty()) write_metric_csv(out_csv, report);
  return report;
}

MetricReport run_ablation(const AblationOptions& opts, const PipelineConfig& cfg) {
  if (opts.mode != "full" && opts.mode != "no-detail")
    throw ConfigError("ablate: mode must be full or no-detail");
  if (opts.mode == "full" && opts.detail_checkpoint.empty())
    throw ConfigError("ablate: full mode needs a detail checkpoint");

  const DatasetManifest manifest = DatasetManifest::load(opts.manifest_path);

  GenerateOptions gen_opts;
  gen_opts.generator_checkpoint = opts.generator_checkpoint;
  gen_opts.detail_checkpoint =
      opts.mode == "no-detail" ? std::string() : opts.detail_checkpoint;
  gen_opts.out_dir =
      (fs::path(opts.work_dir) / ("gen_" + opts.mode)).string();
  gen_opts.count = opts.count;
  gen_opts.steps_div = opts.steps_div;
  gen_opts.seed = opts.seed;
  const std::vector<std::string> generated = generate_shapes(gen_opts, cfg);
  if (generated.size() < 2)
    throw DataError("ablate: need at least two generated shapes");

  std::vector<TriangleMesh> gen_meshes, ref_meshes;
  for (const auto& p : generated) gen_meshes.push_back(load_obj(p));
  for (const auto& e : manifest.entries) {
    if (e.status != "ok") continue;
    ref_meshes.push_back(normalize_mesh(load_obj(e.source), cfg.tsdf.extent));
  }
  if (ref_meshes.size() < 2) throw DataError("ablate: need at least two references");

  const Rng base(opts.seed);
  const auto gen_clouds =
      clouds_from_meshes(gen_meshes, opts.points, base.split(0x67));
  const auto ref_clouds =
      clouds_from_meshes(ref_meshes, opts.points, base.split(0x72));
  return metrics_with_emd_cap(gen_clouds, ref_clouds, opts.seed);
}

}  // namespace waveshape
