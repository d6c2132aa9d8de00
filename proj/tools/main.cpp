#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <string>

#include "waveshape/isosurface.hpp"
#include "waveshape/pipeline.hpp"
#include "waveshape/wavelet.hpp"

namespace fs = std::filesystem;
using namespace waveshape;

namespace {

PipelineConfig load_config(const std::string& path) {
  if (path.empty()) return PipelineConfig{};
  return PipelineConfig::load(path);
}

void print_report(const MetricReport& r) {
  std::printf("MMD-CD   %.4f (x1e-3)\n", r.mmd_cd);
  std::printf("MMD-EMD  %.4f (x1e-2)\n", r.mmd_emd);
  std::printf("COV-CD   %.4f\n", r.cov_cd);
  std::printf("COV-EMD  %.4f\n", r.cov_emd);
  std::printf("1NNA-CD  %.4f\n", r.nna_cd);
  std::printf("1NNA-EMD %.4f\n", r.nna_emd);
}

// prepare on a single mesh: one .obj in, one .wvp out
void prepare_single(const std::string& in, const std::string& out,
                    const PipelineConfig& cfg) {
  cfg.validate();
  const FilterBank fb = filter_bank(cfg.filters);
  const TriangleMesh mesh = normalize_mesh(load_obj(in), cfg.tsdf.extent);
  const VolumeGrid tsdf = sample_tsdf(mesh, cfg.tsdf);
  write_wvp(out, compact_pair(decompose(tsdf, fb, cfg.level)));
  std::printf("wrote %s (coarse %d^3, detail %d^3)\n", out.c_str(),
              cfg.tsdf.resolution >> cfg.level,
              cfg.tsdf.resolution >> (cfg.level - 1));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wavelet-domain diffusion for 3D shape generation"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (flags override it)");

  // prepare
  auto* prepare = app.add_subcommand(
      "prepare", "convert meshes to compact wavelet pairs (.wvp)");
  std::string prep_in, prep_out;
  int prep_res = -1, prep_level = -1;
  std::string prep_filters;
  prepare->add_option("--in", prep_in, "input .obj file or directory of .obj")
      ->required();
  prepare->add_option("--out", prep_out, "output .wvp file or dataset directory")
      ->required();
  prepare->add_option("--res", prep_res, "TSDF resolution (power of two)");
  prepare->add_option("--level", prep_level, "decomposition level J");
  prepare->add_option("--filters", prep_filters, "bior6.8|haar");

  // train-gen
  auto* train_gen = app.add_subcommand("train-gen", "train the coarse generator");
  std::string tg_data, tg_out, tg_loss_csv;
  int tg_iters = -1, tg_res = -1, tg_batch = -1;
  double tg_lr = -1;
  std::uint64_t tg_seed = 0;
  bool tg_seed_set = false;
  train_gen->add_option("--data", tg_data, "dataset directory (from prepare)")
      ->required();
  train_gen->add_option("--out", tg_out, "output checkpoint")->required();
  train_gen->add_option("--res", tg_res, "expected coarse resolution");
  train_gen->add_option("--iters", tg_iters, "training iterations");
  train_gen->add_option("--batch", tg_batch, "batch size");
  train_gen->add_option("--lr", tg_lr, "learning rate");
  train_gen->add_option("--loss-csv", tg_loss_csv, "per-iteration loss log");
  train_gen->add_option_function<std::uint64_t>(
      "--seed", [&](const std::uint64_t& v) { tg_seed = v; tg_seed_set = true; },
      "training seed");

  // train-detail
  auto* train_det = app.add_subcommand("train-detail", "train the detail predictor");
  std::string td_data, td_out, td_loss_csv;
  int td_iters = -1, td_batch = -1;
  double td_lr = -1;
  std::uint64_t td_seed = 0;
  bool td_seed_set = false;
  train_det->add_option("--data", td_data, "dataset directory (from prepare)")
      ->required();
  train_det->add_option("--out", td_out, "output checkpoint")->required();
  train_det->add_option("--iters", td_iters, "training iterations");
  train_det->add_option("--batch", td_batch, "batch size");
  train_det->add_option("--lr", td_lr, "learning rate");
  train_det->add_option("--loss-csv", td_loss_csv, "per-iteration loss log");
  train_det->add_option_function<std::uint64_t>(
      "--seed", [&](const std::uint64_t& v) { td_seed = v; td_seed_set = true; },
      "training seed");

  // generate
  auto* generate = app.add_subcommand("generate", "sample new shapes");
  GenerateOptions gen_opts;
  generate->add_option("--checkpoint", gen_opts.generator_checkpoint,
                       "generator checkpoint")->required();
  generate->add_option("--detail", gen_opts.detail_checkpoint,
                       "detail checkpoint (omit for coarse-only)");
  generate->add_option("--count", gen_opts.count, "number of shapes");
  generate->add_option("--steps-div", gen_opts.steps_div,
                       "time-step subsampling factor (1 = full chain)");
  generate->add_option("--seed", gen_opts.seed, "base seed");
  generate->add_option("--out-dir", gen_opts.out_dir, "output directory")
      ->required();
  generate->add_flag("--dump-traces", gen_opts.dump_traces,
                     "write per-step .vol snapshots");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "point-cloud metric suite");
  std::string ev_gen, ev_ref, ev_out;
  int ev_points = 2048;
  std::uint64_t ev_seed = 0;
  evaluate->add_option("--gen", ev_gen, "directory of generated .obj")->required();
  evaluate->add_option("--ref", ev_ref, "directory of reference .obj")->required();
  evaluate->add_option("--points", ev_points, "surface samples per shape");
  evaluate->add_option("--seed", ev_seed, "sampling seed");
  evaluate->add_option("--out", ev_out, "report CSV path")->required();

  // ablate
  auto* ablate = app.add_subcommand("ablate", "full vs no-detail ablation metrics");
  AblationOptions ab_opts;
  std::string ab_out;
  ablate->add_option("--mode", ab_opts.mode, "full|no-detail")->required();
  ablate->add_option("--data", ab_opts.manifest_path, "dataset manifest.json")
      ->required();
  ablate->add_option("--checkpoint", ab_opts.generator_checkpoint,
                     "generator checkpoint")->required();
  ablate->add_option("--detail", ab_opts.detail_checkpoint, "detail checkpoint");
  ablate->add_option("--count", ab_opts.count, "shapes to generate");
  ablate->add_option("--points", ab_opts.points, "surface samples per shape");
  ablate->add_option("--steps-div", ab_opts.steps_div, "subsampling factor");
  ablate->add_option("--seed", ab_opts.seed, "base seed");
  ablate->add_option("--work-dir", ab_opts.work_dir, "working directory")
      ->required();
  ablate->add_option("--out", ab_out, "report CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    PipelineConfig cfg = load_config(config_path);

    if (prepare->parsed()) {
      if (prep_res > 0) cfg.tsdf.resolution = prep_res;
      if (prep_level > 0) cfg.level = prep_level;
      if (!prep_filters.empty()) cfg.filters = prep_filters;
      if (fs::is_directory(prep_in)) {
        PrepareStats stats;
        prepare_dataset(prep_in, prep_out, cfg, &stats);
        std::printf("prepared %d, reused %d, failed %d\n", stats.prepared,
                    stats.reused, stats.failed);
      } else {
        prepare_single(prep_in, prep_out, cfg);
      }
    } else if (train_gen->parsed()) {
      cfg.validate();
      if (tg_iters > 0) cfg.generator_train.iterations = tg_iters;
      if (tg_batch > 0) cfg.generator_train.batch = tg_batch;
      if (tg_lr > 0) cfg.generator_train.lr = tg_lr;
      if (tg_seed_set) cfg.generator_train.seed = tg_seed;
      if (!tg_loss_csv.empty()) cfg.generator_train.loss_csv = tg_loss_csv;
      cfg.generator_train.out_checkpoint = tg_out;

      const auto manifest = DatasetManifest::load(
          (fs::path(tg_data) / "manifest.json").string());
      const auto pairs = load_dataset_pairs(manifest);
      std::vector<VolumeGrid> coarse;
      for (const auto& p : pairs) coarse.push_back(p.coarse);
      if (tg_res > 0 && coarse.front().res != tg_res)
        throw ConfigError("dataset coarse resolution " +
                          std::to_string(coarse.front().res) +
                          " does not match --res " + std::to_string(tg_res));
      const NoiseSchedule sched =
          build_schedule(cfg.schedule_steps, cfg.beta_start, cfg.beta_end);
      const auto model =
          train_generator(coarse, cfg.generator_arch, sched, cfg.generator_train);
      std::printf("final loss %.6f; checkpoint %s\n", model.losses.back(),
                  tg_out.c_str());
    } else if (train_det->parsed()) {
      cfg.validate();
      if (td_iters > 0) cfg.detail_train.iterations = td_iters;
      if (td_batch > 0) cfg.detail_train.batch = td_batch;
      if (td_lr > 0) cfg.detail_train.lr = td_lr;
      if (td_seed_set) cfg.detail_train.seed = td_seed;
      if (!td_loss_csv.empty()) cfg.detail_train.loss_csv = td_loss_csv;
      cfg.detail_train.out_checkpoint = td_out;

      const auto manifest = DatasetManifest::load(
          (fs::path(td_data) / "manifest.json").string());
      const auto pairs = load_dataset_pairs(manifest);
      const auto model = train_detail(pairs, cfg.detail_arch, cfg.detail_train);
      std::printf("final loss %.6f; checkpoint %s\n", model.losses.back(),
                  td_out.c_str());
    } else if (generate->parsed()) {
      const auto paths = generate_shapes(gen_opts, cfg);
      std::printf("wrote %zu shapes to %s\n", paths.size(),
                  gen_opts.out_dir.c_str());
    } else if (evaluate->parsed()) {
      const MetricReport report =
          evaluate_dirs(ev_gen, ev_ref, ev_points, ev_seed, ev_out);
      print_report(report);
    } else if (ablate->parsed()) {
      const MetricReport report = run_ablation(ab_opts, cfg);
      write_metric_csv(ab_out, report);
      print_report(report);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  }
  return 0;
}
