#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "fmparts/pipeline.hpp"

using namespace fmparts;

namespace {

SweepConfig parse_sweep(const std::string& text) {
  SweepConfig s;
  std::istringstream in(text);
  char c1 = 0, c2 = 0;
  if (!(in >> s.t_min >> c1 >> s.t_max >> c2 >> s.t_step) || c1 != ':' || c2 != ':' || !in.eof()) {
    throw Error(ErrorCode::InvalidConfig, "--sweep expects LO:HI:STEP, got '" + text + "'");
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Locate objects and parts from CNN feature-map stacks"};
  std::string manifest_path, config_path, out_dir = "out", preset, n_part, sweep, pose, sweep_target;
  std::optional<double> t_object, t_parts, margin, shift;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers, k_max;
  bool eval = false, single_part = false, no_render = false, export_fms = false, nearest = false;

  app.add_option("--manifest", manifest_path, "Dataset manifest (JSON)")->required()->check(CLI::ExistingFile);
  app.add_option("--config", config_path, "Pipeline configuration (JSON)")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();
  app.add_option("--preset", preset, "Layer preset: googlenet, vgg19, vgg-cnn-s");
  app.add_option("--n-part", n_part, "Number of parts, or 'auto'");
  app.add_option("--k-max", k_max, "Largest k tried by --n-part auto");
  app.add_flag("--single-part", single_part, "With --n-part auto, always use one part");
  app.add_option("--t-object", t_object, "Object threshold in (0,1)");
  app.add_option("--t-parts", t_parts, "Part threshold in (0,1)");
  app.add_option("--margin", margin, "Crop margin as a fraction of box size");
  app.add_option("--shift", shift, "Part crop shift as a fraction of the pose vector");
  app.add_option("--pose", pose, "Pose variant: two-vector, head-body, focal-vector");
  app.add_option("--seed", seed, "Clustering seed");
  app.add_option("--workers", workers, "Images processed concurrently");
  app.add_option("--sweep", sweep, "Threshold sweep LO:HI:STEP");
  app.add_option("--sweep-target", sweep_target, "Thresholds swept: both, object, parts");
  app.add_flag("--eval", eval, "Score against manifest ground truth");
  app.add_flag("--nearest", nearest, "Nearest-neighbour map resizing");
  app.add_flag("--no-render", no_render, "Skip overlay and crop images");
  app.add_flag("--export-fms", export_fms, "Also write masks as FMS1 stacks");
  CLI11_PARSE(app, argc, argv);

  try {
    PipelineConfig config;
    if (!preset.empty()) config = preset_config(preset);
    if (!config_path.empty()) config = read_config_file(config_path, config);
    if (!n_part.empty()) {
      nlohmann::json j;
      if (n_part == "auto") j["n_part"] = "auto";
      else j["n_part"] = std::stoi(n_part);
      config = apply_config_json(j, config);
    }
    if (k_max) config.k_max = *k_max;
    if (single_part) config.force_single_part = true;
    if (t_object) config.t_object = *t_object;
    if (t_parts) config.t_parts = *t_parts;
    if (margin) config.margin = *margin;
    if (shift) config.shift = *shift;
    if (!pose.empty()) config.pose_variant = parse_pose_variant(pose);
    if (seed) config.seed = *seed;
    if (workers) config.workers = *workers;
    if (eval) config.evaluate = true;
    if (nearest) config.interpolation = Interpolation::Nearest;
    if (no_render) config.render = false;
    if (export_fms) config.export_fms = true;
    if (!sweep.empty()) config.sweep = parse_sweep(sweep);
    if (!sweep_target.empty()) {
      if (!config.sweep) throw Error(ErrorCode::InvalidConfig, "--sweep-target needs --sweep");
      config = apply_config_json({{"sweep", {{"t_min", config.sweep->t_min},
                                             {"t_max", config.sweep->t_max},
                                             {"t_step", config.sweep->t_step},
                                             {"target", sweep_target}}}},
                                 config);
    }
    config.validate();

    const Manifest manifest = read_manifest(manifest_path);
    std::size_t failures = 0;
    if (config.sweep) {
      const SweepReport report = run_sweep(config, manifest, out_dir);
      for (const auto& step : report.steps) {
        std::printf("T=%.4g: %zu ok, %zu failed\n", step.threshold, step.batch.successes.size(),
                    step.batch.failures.size());
        failures += step.batch.failures.size();
      }
    } else {
      const BatchReport report = run_batch(config, manifest, out_dir);
      for (const auto& f : report.failures) {
        std::fprintf(stderr, "%s: %s\n", f.image_id.c_str(), f.message.c_str());
      }
      std::printf("%zu images: %zu ok, %zu failed\n", report.manifest_count, report.successes.size(),
                  report.failures.size());
      failures = report.failures.size();
    }
    return failures == 0 ? 0 : 1;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 2;
  }
}
