#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "waveshape/metrics.hpp"
#include "waveshape/nn/net.hpp"
#include "waveshape/sdf.hpp"
#include "waveshape/train.hpp"

namespace waveshape {

/// End-to-end configuration; serialized as a single JSON document whose
/// fields can be overridden by CLI flags.
struct PipelineConfig {
  TsdfConfig tsdf;
  std::string filters = "bior6.8";
  int level = 3;

  int schedule_steps = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;

  nn::NetConfig generator_arch = nn::NetConfig::denoiser_default();
  nn::NetConfig detail_arch = nn::NetConfig::detail_default();
  TrainConfig generator_train;
  TrainConfig detail_train;

  std::uint64_t seed = 0;

  void validate() const;
  std::string to_json() const;
  static PipelineConfig from_json(const std::string& text);
  static PipelineConfig load(const std::string& path);
};

/// FNV-1a content hash used for artifact integrity and prepare idempotence.
std::uint64_t hash_bytes(const void* data, std::size_t n);
std::uint64_t hash_file(const std::string& path);

struct ManifestEntry {
  std::string source;
  std::string wvp;
  std::uint64_t source_hash = 0;
  std::uint64_t wvp_hash = 0;
  std::string status;  // "ok" | "failed"
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;

  std::vector<std::string> wvp_paths() const;  // ok entries only
  void save(const std::string& path) const;
  static DatasetManifest load(const std::string& path);
};

struct PrepareStats {
  int prepared = 0;
  int reused = 0;
  int failed = 0;
};

/// Load the ok entries of a manifest, validating the stored content hashes.
std::vector<WaveletPair> load_dataset_pairs(const DatasetManifest& manifest);

/// Normalize, sample, decompose and persist every OBJ in mesh_dir as a .wvp
/// under out_dir. Idempotent: unchanged inputs (matching hashes) are skipped.
/// Unreadable or degenerate meshes are recorded as failed, not fatal.
DatasetManifest prepare_dataset(const std::string& mesh_dir,
                                const std::string& out_dir,
                                const PipelineConfig& cfg,
                                PrepareStats* stats = nullptr);

struct GenerateOptions {
  std::string generator_checkpoint;
  std::string detail_checkpoint;  // empty = coarse-only ablation (D = 0)
  std::string out_dir;
  int count = 1;
  int steps_div = 10;
  std::uint64_t seed = 0;
  bool dump_traces = false;
};

/// Sample coarse volumes with the trained generator, predict details,
/// reconstruct TSDFs and extract meshes. Returns the written OBJ paths;
/// run metadata (mode, seed, checkpoints) goes to out_dir/run.json.
std::vector<std::string> generate_shapes(const GenerateOptions& opts,
                                         const PipelineConfig& cfg);

/// Load every OBJ in a directory (sorted), sample point clouds and compute
/// the metric suite of gen versus ref. Clouds larger than 1024 points are
/// subsampled with a fixed seed for the exact EMD solver.
MetricReport evaluate_dirs(const std::string& gen_dir, const std::string& ref_dir,
                           int points, std::uint64_t seed,
                           const std::string& out_csv);

struct AblationOptions {
  std::string mode = "full";  // "full" | "no-detail"
  std::string manifest_path;  // dataset manifest from prepare
  std::string generator_checkpoint;
  std::string detail_checkpoint;
  std::string work_dir;
  int count = 8;
  int points = 2048;
  int steps_div = 10;
  std::uint64_t seed = 0;
};

/// Generate under the given mode and run the metric suite against the
/// prepared dataset's (normalized) source meshes.
MetricReport run_ablation(const AblationOptions& opts, const PipelineConfig& cfg);

}  // namespace waveshape
