#include "fmparts/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <thread>

namespace fmparts {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); }

std::string threshold_tag(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "t_%.4g", t);
  return buf;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

json rect_json(const Rect& r) { return json::array({r.x, r.y, r.w, r.h}); }
json point_json(Point2 p) { return json::array({p.x, p.y}); }

std::string_view to_string(SweepTarget t) {
  switch (t) {
    case SweepTarget::Object: return "object";
    case SweepTarget::Parts: return "parts";
    case SweepTarget::Both: return "both";
  }
  return "both";
}

SweepTarget parse_sweep_target(const std::string& s) {
  if (s == "object") return SweepTarget::Object;
  if (s == "parts") return SweepTarget::Parts;
  if (s == "both") return SweepTarget::Both;
  config_error("unknown sweep target '" + s + "'");
}

template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

std::vector<double> SweepConfig::values() const {
  std::vector<double> out;
  if (!(t_step > 0.0) || !(t_min < t_max)) return out;
  const auto count = static_cast<int>(std::floor((t_max - t_min) / t_step + 1e-9)) + 1;
  for (int i = 0; i < count; ++i) out.push_back(std::round((t_min + i * t_step) * 1e6) / 1e6);
  return out;
}

void PipelineConfig::validate() const {
  if (object_layers.empty()) config_error("object_layers is empty");
  if (part_layers.empty()) config_error("part_layers is empty");
  const auto in_unit = [](double t) { return t > 0.0 && t < 1.0; };
  if (!in_unit(t_object)) config_error("t_object must lie in (0,1)");
  if (!in_unit(t_parts)) config_error("t_parts must lie in (0,1)");
  if (!auto_n_part && n_part < 1) config_error("n_part must be >= 1");
  if (auto_n_part && k_max < 2) config_error("k_max must be >= 2");
  if (n_part_fallback < 1) config_error("n_part_fallback must be >= 1");
  if (!(margin >= 0.0)) config_error("margin must be >= 0");
  if (!std::isfinite(shift)) config_error("shift must be finite");
  if (workers < 1) config_error("workers must be >= 1");
  if (sweep) {
    if (!(sweep->t_min < sweep->t_max)) config_error("sweep needs t_min < t_max");
    if (!(sweep->t_step > 0.0)) config_error("sweep needs t_step > 0");
    for (double t : sweep->values()) {
      if (!in_unit(t)) config_error("sweep thresholds must lie in (0,1)");
    }
  }
}

std::vector<std::string> preset_names() { return {"googlenet", "vgg19", "vgg-cnn-s"}; }

PipelineConfig preset_config(std::string_view name) {
  PipelineConfig c;
  if (name == "googlenet") {
    c.object_layers = {"inception_4e/output", "inception_5a/output"};
    c.part_layers = {"inception_4d/output", "inception_4e/output"};
  } else if (name == "vgg19") {
    c.object_layers = {"conv5_4"};
    c.part_layers = {"conv5_2", "conv5_3"};
  } else if (name == "vgg-cnn-s") {
    c.object_layers = {"conv5"};
    c.part_layers = {"conv4", "conv5"};
  } else {
    config_error("unknown preset '" + std::string(name) + "'");
  }
  return c;
}

PipelineConfig apply_config_json(const json& j, PipelineConfig c) {
  try {
    if (j.contains("preset")) {
      const PipelineConfig p = preset_config(j.at("preset").get<std::string>());
      c.object_layers = p.object_layers;
      c.part_layers = p.part_layers;
    }
    if (j.contains("object_layers")) c.object_layers = j.at("object_layers").get<std::vector<std::string>>();
    if (j.contains("part_layers")) c.part_layers = j.at("part_layers").get<std::vector<std::string>>();
    if (j.contains("t_object")) c.t_object = j.at("t_object").get<double>();
    if (j.contains("t_parts")) c.t_parts = j.at("t_parts").get<double>();
    if (j.contains("n_part")) {
      const auto& n = j.at("n_part");
      if (n.is_string()) {
        if (n.get<std::string>() != "auto") config_error("n_part must be an integer or \"auto\"");
        c.auto_n_part = true;
      } else {
        c.auto_n_part = false;
        c.n_part = n.get<int>();
      }
    }
    if (j.contains("k_max")) c.k_max = j.at("k_max").get<int>();
    if (j.contains("force_single_part")) c.force_single_part = j.at("force_single_part").get<bool>();
    if (j.contains("n_part_fallback")) c.n_part_fallback = j.at("n_part_fallback").get<int>();
    if (j.contains("pose_variant")) c.pose_variant = parse_pose_variant(j.at("pose_variant").get<std::string>());
    if (j.contains("margin")) c.margin = j.at("margin").get<double>();
    if (j.contains("shift")) c.shift = j.at("shift").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("interpolation")) {
      const auto s = j.at("interpolation").get<std::string>();
      if (s == "bilinear") c.interpolation = Interpolation::Bilinear;
      else if (s == "nearest") c.interpolation = Interpolation::Nearest;
      else config_error("unknown interpolation '" + s + "'");
    }
    if (j.contains("workers")) c.workers = j.at("workers").get<int>();
    if (j.contains("evaluate")) c.evaluate = j.at("evaluate").get<bool>();
    if (j.contains("render")) c.render = j.at("render").get<bool>();
    if (j.contains("export_fms")) c.export_fms = j.at("export_fms").get<bool>();
    if (j.contains("sweep") && !j.at("sweep").is_null()) {
      const auto& s = j.at("sweep");
      SweepConfig sw;
      sw.t_min = s.value("t_min", sw.t_min);
      sw.t_max = s.value("t_max", sw.t_max);
      sw.t_step = s.value("t_step", sw.t_step);
      if (s.contains("target")) sw.target = parse_sweep_target(s.at("target").get<std::string>());
      c.sweep = sw;
    }
  } catch (const json::exception& ex) {
    config_error(ex.what());
  }
  return c;
}

PipelineConfig read_config_file(const fs::path& path, PipelineConfig base) {
  const auto bytes = read_file_bytes(path);
  try {
    return apply_config_json(json::parse(bytes.begin(), bytes.end()), std::move(base));
  } catch (const json::exception& ex) {
    config_error(path.string() + ": " + ex.what());
  }
}

json config_to_json(const PipelineConfig& c) {
  json j;
  j["object_layers"] = c.object_layers;
  j["part_layers"] = c.part_layers;
  j["t_object"] = c.t_object;
  j["t_parts"] = c.t_parts;
  if (c.auto_n_part) j["n_part"] = "auto";
  else j["n_part"] = c.n_part;
  j["k_max"] = c.k_max;
  j["force_single_part"] = c.force_single_part;
  j["n_part_fallback"] = c.n_part_fallback;
  j["pose_variant"] = std::string(to_string(c.pose_variant));
  j["margin"] = c.margin;
  j["shift"] = c.shift;
  j["seed"] = c.seed;
  j["interpolation"] = c.interpolation == Interpolation::Bilinear ? "bilinear" : "nearest";
  j["evaluate"] = c.evaluate;
  j["render"] = c.render;
  j["export_fms"] = c.export_fms;
  if (c.sweep) {
    j["sweep"] = {{"t_min", c.sweep->t_min},
                  {"t_max", c.sweep->t_max},
                  {"t_step", c.sweep->t_step},
                  {"target", std::string(to_string(c.sweep->target))}};
  }
  return j;
}

// ---------------------------------------------------------------------------
// Serialization

json to_json(const PartDetection& parts, int mask_w, int mask_h, ImageDims image) {
  json out = json::array();
  for (std::size_t k = 0; k < parts.parts.size(); ++k) {
    const auto& p = parts.parts[k];
    json members = json::array();
    for (const auto& m : p.member_maps) members.push_back({{"layer", m.layer_name}, {"map", m.map_index}});
    out.push_back({{"part", k + 1},
                   {"centroid", point_json(p.centroid)},
                   {"centroid_image", point_json(scale_point(p.centroid, mask_w, mask_h, image))},
                   {"area", p.area},
                   {"member_maps", std::move(members)}});
  }
  return out;
}

json to_json(const Pose& pose) {
  json vectors = json::array();
  for (std::size_t i = 0; i < pose.vectors.size(); ++i) {
    vectors.push_back({{"anchor", point_json(pose.anchors[i])}, {"vector", point_json(pose.vectors[i])}});
  }
  return {{"variant", std::string(to_string(pose.variant))},
          {"object_centroid", point_json(pose.object_centroid)},
          {"ellipse",
           {{"center", point_json(pose.ellipse.center)},
            {"semi_axes", json::array({pose.ellipse.semi_major, pose.ellipse.semi_minor})},
            {"orientation", pose.ellipse.orientation}}},
          {"vectors", std::move(vectors)},
          {"coordinates", "mask"}};
}

json to_json(const ClusterValidityReport& report) {
  json per_k = json::array();
  for (const auto& [k, s] : report.per_k) {
    per_k.push_back({{"k", k}, {"db", s.db_index}, {"silhouette", s.mean_silhouette}});
  }
  return {{"per_k", std::move(per_k)}, {"best_k_db", report.best_k_db}, {"best_k_sil", report.best_k_sil}};
}

json to_json(std::span<const CropRegion> crops, std::span<const CropRegion> unshifted) {
  json out = json::array();
  for (std::size_t i = 0; i < crops.size(); ++i) {
    const auto& c = crops[i];
    json j{{"kind", c.kind == CropKind::Object ? "object" : "part"}, {"rect", rect_json(c.rect)}};
    if (c.kind == CropKind::Part) {
      j["part"] = c.part_index + 1;
      j["shifted"] = c.shifted;
      if (i < unshifted.size()) j["unshifted_rect"] = rect_json(unshifted[i].rect);
    }
    out.push_back(std::move(j));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Per-image processing

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  if (!a.grid.same_shape(b.grid)) throw Error(ErrorCode::DimensionMismatch, "mask shapes differ");
  std::size_t inter = 0, uni = 0;
  auto va = a.grid.values();
  auto vb = b.grid.values();
  for (std::size_t i = 0; i < va.size(); ++i) {
    inter += (va[i] && vb[i]) ? 1 : 0;
    uni += (va[i] || vb[i]) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

ImageResult process_stack(const PipelineConfig& config, const FeatureStack& stack, ImageDims image) {
  config.validate();
  ImageResult r;
  r.image_id = stack.image_id;
  r.image_dims = image;
  const int mw = stack.input_width;
  const int mh = stack.input_height;

  r.object = detect_object(stack, config.object_layers, config.t_object, config.interpolation);
  if (r.object.binary.count() == 0) throw Error(ErrorCode::EmptyMask, "object mask is empty");

  std::vector<ScreenedMap> log;
  const auto candidates =
      select_candidates(stack, config.part_layers, config.t_parts, r.object.binary, config.interpolation, &log);
  for (const auto& s : log) {
    ++r.screening.screened;
    switch (s.verdict) {
      case CandidateVerdict::Accepted: ++r.screening.accepted; break;
      case CandidateVerdict::EmptyMap: ++r.screening.empty_map; break;
      case CandidateVerdict::MultipleRegions: ++r.screening.multiple_regions; break;
      case CandidateVerdict::CentroidOutsideObject: ++r.screening.centroid_outside_object; break;
    }
  }

  r.n_part = config.n_part;
  if (config.auto_n_part) {
    if (config.force_single_part) {
      r.n_part = 1;
    } else {
      try {
        r.validity = select_k(candidates, config.k_max, config.seed);
        r.n_part = r.validity->best_k_sil;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::TooFewCandidates && e.code() != ErrorCode::DegenerateClustering) throw;
        r.validity_skipped = true;
        r.n_part = config.n_part_fallback;
      }
    }
  }

  r.parts = order_parts(cluster_parts(candidates, r.n_part, config.t_parts, config.seed));
  r.pose = estimate_pose(r.object.soft, r.object.binary, r.parts, config.pose_variant);
  r.crops = crop_regions(r.object.binary, r.parts, r.pose, image, {config.margin, config.shift});
  r.unshifted_crops = crop_regions(r.object.binary, r.parts, r.pose, image, {config.margin, 0.0});
  r.object_box_tight = clamp_rect(scale_rect(*bounding_box(r.object.binary), mw, mh, image), image);

  const auto shifts = part_shift_vectors(r.pose, r.parts);
  for (std::size_t k = 0; k < r.parts.parts.size(); ++k) {
    const Point2 c = r.parts.parts[k].centroid;
    const Rect probe{c.x, c.y, 0.0, 0.0};
    const Point2 moved = shift_along(probe, shifts[k], config.shift).center();
    r.part_centroids_image.push_back(scale_point(c, mw, mh, image));
    r.shifted_part_centroids_image.push_back(scale_point(moved, mw, mh, image));
  }
  return r;
}

namespace {

void write_json(const fs::path& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

json report_json(const ImageResult& r, const ManifestEntry& entry, const PipelineConfig& config) {
  const int mw = r.object.soft.width();
  const int mh = r.object.soft.height();
  json j;
  j["image_id"] = r.image_id;
  j["image_size"] = {r.image_dims.width, r.image_dims.height};
  j["mask_size"] = {mw, mh};
  j["t_object"] = config.t_object;
  j["t_parts"] = config.t_parts;
  j["object"] = {{"area", r.object.binary.count()},
                 {"bbox_mask", rect_json(*bounding_box(r.object.binary))},
                 {"bbox_image", rect_json(r.object_box_tight)},
                 {"crop", rect_json(r.crops.front().rect)}};
  j["screening"] = {{"screened", r.screening.screened},
                    {"accepted", r.screening.accepted},
                    {"empty_map", r.screening.empty_map},
                    {"multiple_regions", r.screening.multiple_regions},
                    {"centroid_outside_object", r.screening.centroid_outside_object}};
  j["n_part"] = r.n_part;
  if (r.validity) j["model_selection"] = to_json(*r.validity);
  if (r.validity_skipped) j["model_selection"] = "skipped";
  j["parts"] = to_json(r.parts, mw, mh, r.image_dims);
  if (config.evaluate && entry.ground_truth) {
    const auto& gt = *entry.ground_truth;
    json e;
    e["object_iou_margin"] = iou(r.crops.front().rect, gt.bbox);
    e["object_iou_tight"] = iou(r.object_box_tight, gt.bbox);
    json dists = json::array();
    for (std::size_t k = 0; k < r.part_centroids_image.size(); ++k) {
      for (const auto& p : gt.parts) {
        if (!p.visible) continue;
        dists.push_back({{"part", k + 1},
                         {"gt_part_id", p.part_id},
                         {"pre_shift", part_distance(r.part_centroids_image[k], p, gt.bbox)},
                         {"post_shift", part_distance(r.shifted_part_centroids_image[k], p, gt.bbox)}});
      }
    }
    e["part_distances"] = std::move(dists);
    j["evaluation"] = std::move(e);
  }
  return j;
}

void write_bundle(const ImageResult& r, const ManifestEntry& entry, const ImageGrid* image,
                  const PipelineConfig& config, const fs::path& dir) {
  fs::create_directories(dir);
  write_image(mask_to_image(r.object.soft), dir / "object_mask.pgm");
  write_image(mask_to_image(r.object.binary), dir / "object_binary.pgm");
  if (config.export_fms) write_stack(mask_to_stack(r.object.soft, "object_mask"), dir / "object_mask.fms");
  for (std::size_t k = 0; k < r.parts.parts.size(); ++k) {
    const auto& p = r.parts.parts[k];
    const std::string stem = "part_" + std::to_string(k + 1);
    write_image(mask_to_image(p.soft_mask), dir / (stem + "_mask.pgm"));
    write_image(mask_to_image(p.binary_mask), dir / (stem + "_binary.pgm"));
    if (config.export_fms) write_stack(mask_to_stack(p.soft_mask, stem + "_mask"), dir / (stem + "_mask.fms"));
  }
  write_json(dir / "crops.json", to_json(r.crops, r.unshifted_crops));
  write_json(dir / "pose.json", to_json(r.pose));
  write_json(dir / "report.json", report_json(r, entry, config));

  if (config.render && image != nullptr) {
    const char* ext = image->channels == 3 ? ".ppm" : ".pgm";
    for (const auto& c : r.crops) {
      const std::string name =
          c.kind == CropKind::Object ? "crop_object" : "crop_part_" + std::to_string(c.part_index + 1);
      write_image(crop_image(*image, c.rect), dir / (name + ext));
    }
    write_image(render_overlay(*image, r.object.soft.width(), r.object.soft.height(), r.pose, r.parts, r.crops),
                dir / "overlay.ppm");
  }
}

ImageSummary summarize(const ImageResult& r, const ManifestEntry& entry) {
  ImageSummary s;
  s.image_id = r.image_id;
  s.ground_truth = entry.ground_truth;
  s.n_candidates = r.screening.accepted;
  s.n_part = r.n_part;
  s.validity = r.validity;
  s.validity_skipped = r.validity_skipped;
  s.object_crop = r.crops.front().rect;
  s.object_box_tight = r.object_box_tight;
  s.object_area = r.object.binary.count();
  s.part_centroids_image = r.part_centroids_image;
  s.shifted_part_centroids_image = r.shifted_part_centroids_image;
  return s;
}

struct LoadedEntry {
  FeatureStack stack;
  ImageGrid image;
};

LoadedEntry load_entry(const ManifestEntry& entry) {
  LoadedEntry l{read_stack(entry.stack_path), read_image(entry.image_path)};
  l.stack.image_id = entry.image_id;
  validate_annotations(entry, l.image.width, l.image.height);
  return l;
}

Failure make_failure(const std::string& id, const std::exception& ex) {
  if (const auto* e = dynamic_cast<const Error*>(&ex)) return {id, e->code(), e->what()};
  return {id, ErrorCode::IoFailure, ex.what()};
}

void write_summary(const BatchReport& report, const PipelineConfig& config, const fs::path& dir) {
  fs::create_directories(dir);
  write_json(dir / "batch.json", {{"manifest_count", report.manifest_count},
                                  {"successes", report.successes.size()},
                                  {"failures", report.failures.size()},
                                  {"config", config_to_json(config)}});
  json failures = json::array();
  for (const auto& f : report.failures) {
    failures.push_back({{"image_id", f.image_id}, {"error", std::string(to_string(f.code))}, {"message", f.message}});
  }
  write_json(dir / "failures.json", failures);

  std::string csv = "image_id,n_candidates,n_part,object_area,crop_x,crop_y,crop_w,crop_h\n";
  for (const auto& s : report.successes) {
    csv += s.image_id + "," + std::to_string(s.n_candidates) + "," + std::to_string(s.n_part) + "," +
           std::to_string(s.object_area) + "," + num(s.object_crop.x) + "," + num(s.object_crop.y) + "," +
           num(s.object_crop.w) + "," + num(s.object_crop.h) + "\n";
  }
  write_text_file(dir / "results.csv", csv);

  if (config.auto_n_part && !config.force_single_part) {
    ValidityTable table;
    for (const auto& s : report.successes) {
      if (s.validity) table.images.emplace_back(s.image_id, *s.validity);
      else table.skipped.push_back(s.image_id);
    }
    write_text_file(dir / "model_select.csv", table.per_image_csv());
    write_text_file(dir / "best_k_histogram.csv", table.histogram_csv());
  }

  if (!config.evaluate) return;
  std::vector<BoxPair> margin, tight;
  std::vector<ImagePartDetections> pre, post;
  Manifest gt_manifest;
  for (const auto& s : report.successes) {
    if (!s.ground_truth) continue;
    margin.push_back({s.image_id, s.object_crop, s.ground_truth->bbox});
    tight.push_back({s.image_id, s.object_box_tight, s.ground_truth->bbox});
    pre.push_back({s.image_id, s.part_centroids_image});
    post.push_back({s.image_id, s.shifted_part_centroids_image});
    gt_manifest.entries.push_back({s.image_id, {}, {}, s.ground_truth});
  }
  if (margin.empty()) return;
  const auto grid = default_iou_thresholds();
  const std::vector<RecallCurve> curves{recall_curve(margin, grid, "margin"), recall_curve(tight, grid, "no-margin")};
  write_text_file(dir / "recall_curves.csv", recall_curves_csv(curves));
  write_text_file(dir / "recall_curves.gp", recall_gnuplot_script(curves, "recall_curves.csv"));
  try {
    write_text_file(dir / "part_distance_preshift.csv", part_distance_table(pre, gt_manifest).csv());
    write_text_file(dir / "part_distance_postshift.csv", part_distance_table(post, gt_manifest).csv());
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoAnnotations) throw;
  }
}

std::vector<std::size_t> order_by_id(const Manifest& manifest) {
  std::vector<std::size_t> order(manifest.entries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return manifest.entries[a].image_id < manifest.entries[b].image_id;
  });
  return order;
}

}  // namespace

ImageSummary run_image(const PipelineConfig& config, const ManifestEntry& entry, const fs::path& out_dir) {
  try {
    const LoadedEntry loaded = load_entry(entry);
    const ImageResult r = process_stack(config, loaded.stack, {loaded.image.width, loaded.image.height});
    write_bundle(r, entry, &loaded.image, config, out_dir / entry.image_id);
    return summarize(r, entry);
  } catch (const Error& e) {
    throw Error(e.code(), entry.image_id + ": " + e.what());
  }
}

BatchReport run_batch(const PipelineConfig& config, const Manifest& manifest, const fs::path& out_dir) {
  config.validate();
  const auto order = order_by_id(manifest);
  std::vector<std::optional<ImageSummary>> results(order.size());
  std::vector<std::optional<Failure>> failures(order.size());
  parallel_for(order.size(), config.workers, [&](std::size_t i) {
    const auto& entry = manifest.entries[order[i]];
    try {
      results[i] = run_image(config, entry, out_dir);
    } catch (const std::exception& ex) {
      failures[i] = make_failure(entry.image_id, ex);
    }
  });

  BatchReport report;
  report.manifest_count = manifest.entries.size();
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (results[i]) report.successes.push_back(std::move(*results[i]));
    if (failures[i]) report.failures.push_back(std::move(*failures[i]));
  }
  write_summary(report, config, out_dir / "summary");
  return report;
}

SweepReport run_sweep(const PipelineConfig& config, const Manifest& manifest, const fs::path& out_dir) {
  config.validate();
  if (!config.sweep) config_error("run_sweep needs a sweep configuration");
  const auto thresholds = config.sweep->values();
  const auto order = order_by_id(manifest);
  const std::size_t nt = thresholds.size();
  const fs::path sweep_dir = out_dir / "sweep";

  std::vector<PipelineConfig> configs(nt, config);
  for (std::size_t t = 0; t < nt; ++t) {
    configs[t].sweep.reset();
    if (config.sweep->target != SweepTarget::Parts) configs[t].t_object = thresholds[t];
    if (config.sweep->target != SweepTarget::Object) configs[t].t_parts = thresholds[t];
  }

  // [image][threshold]
  std::vector<std::vector<std::optional<ImageSummary>>> results(order.size(),
                                                                std::vector<std::optional<ImageSummary>>(nt));
  std::vector<std::vector<std::optional<Failure>>> failures(order.size(), std::vector<std::optional<Failure>>(nt));
  std::vector<std::vector<SweepStability>> stability(order.size());

  parallel_for(order.size(), config.workers, [&](std::size_t i) {
    const auto& entry = manifest.entries[order[i]];
    std::optional<LoadedEntry> loaded;
    try {
      loaded = load_entry(entry);
    } catch (const std::exception& ex) {
      for (std::size_t t = 0; t < nt; ++t) failures[i][t] = make_failure(entry.image_id, ex);
      return;
    }
    std::optional<BinaryMask> previous;
    for (std::size_t t = 0; t < nt; ++t) {
      try {
        const ImageResult r =
            process_stack(configs[t], loaded->stack, {loaded->image.width, loaded->image.height});
        write_bundle(r, entry, &loaded->image, configs[t], sweep_dir / threshold_tag(thresholds[t]) / entry.image_id);
        results[i][t] = summarize(r, entry);
        if (previous && t > 0) {
          stability[i].push_back({entry.image_id, thresholds[t - 1], thresholds[t], mask_iou(*previous, r.object.binary),
                                  previous->count(), r.object.binary.count()});
        }
        previous = r.object.binary;
      } catch (const std::exception& ex) {
        failures[i][t] = make_failure(entry.image_id, ex);
        previous.reset();
      }
    }
  });

  SweepReport report;
  std::string summary_csv = "threshold,successes,failures,mean_object_area,mean_object_iou_margin\n";
  for (std::size_t t = 0; t < nt; ++t) {
    SweepStep step;
    step.threshold = thresholds[t];
    step.batch.manifest_count = manifest.entries.size();
    double area = 0.0, iou_sum = 0.0;
    std::size_t n_gt = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (results[i][t]) {
        const auto& s = *results[i][t];
        area += static_cast<double>(s.object_area);
        if (s.ground_truth) {
          iou_sum += iou(s.object_crop, s.ground_truth->bbox);
          ++n_gt;
        }
        step.batch.successes.push_back(s);
      }
      if (failures[i][t]) step.batch.failures.push_back(*failures[i][t]);
    }
    write_summary(step.batch, configs[t], sweep_dir / threshold_tag(thresholds[t]) / "summary");
    const std::size_t ns = step.batch.successes.size();
    summary_csv += num(thresholds[t]) + "," + std::to_string(ns) + "," + std::to_string(step.batch.failures.size()) +
                   "," + (ns ? num(area / ns) : "") + "," + (n_gt ? num(iou_sum / n_gt) : "") + "\n";
    report.steps.push_back(std::move(step));
  }
  std::string stability_csv = "image_id,t_low,t_high,mask_iou,area_low,area_high\n";
  for (auto& per_image : stability) {
    for (auto& s : per_image) {
      stability_csv += s.image_id + "," + num(s.t_low) + "," + num(s.t_high) + "," + num(s.mask_iou) + "," +
                       std::to_string(s.area_low) + "," + std::to_string(s.area_high) + "\n";
      report.stability.push_back(std::move(s));
    }
  }
  fs::create_directories(sweep_dir / "summary");
  write_text_file(sweep_dir / "summary" / "sweep.csv", summary_csv);
  write_text_file(sweep_dir / "summary" / "stability.csv", stability_csv);
  write_json(sweep_dir / "summary" / "config.json", config_to_json(config));
  return report;
}

}  // namespace fmparts
