#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fmparts/error.hpp"
#include "fmparts/evalkit.hpp"
#include "fmparts/maskops.hpp"
#include "fmparts/modelselect.hpp"
#include "fmparts/partdetect.hpp"
#include "fmparts/posecrop.hpp"
#include "fmparts/tensorio.hpp"
#include "json.hpp"

namespace fmparts {

enum class SweepTarget { Object, Parts, Both };

struct SweepConfig {
  double t_min = 0.2;
  double t_max = 0.45;
  double t_step = 0.05;
  SweepTarget target = SweepTarget::Both;

  /// t_min, t_min + step, ... up to and including t_max (within 1e-9), rounded to 1e-6.
  std::vector<double> values() const;
};

struct PipelineConfig {
  std::vector<std::string> object_layers;
  std::vector<std::string> part_layers;
  double t_object = 0.3;
  double t_parts = 0.3;
  int n_part = 2;
  bool auto_n_part = false;       // choose k by silhouette over 2..k_max
  int k_max = 6;
  bool force_single_part = false;  // auto mode: always use one part
  int n_part_fallback = 2;         // auto mode when k cannot be scored
  PoseVariant pose_variant = PoseVariant::TwoVector;
  double margin = 0.05;
  double shift = 0.5;
  std::uint64_t seed = 0;
  Interpolation interpolation = Interpolation::Bilinear;
  int workers = 1;
  bool evaluate = false;
  bool render = true;       // overlay and crop images
  bool export_fms = false;  // masks as single-map stacks too
  std::optional<SweepConfig> sweep;

  /// Throws InvalidConfig.
  void validate() const;
};

/// Layer presets: "googlenet", "vgg19", "vgg-cnn-s".
PipelineConfig preset_config(std::string_view name);
std::vector<std::string> preset_names();

/// Fields present in `j` override `base`. A "preset" key is applied first.
PipelineConfig apply_config_json(const nlohmann::json& j, PipelineConfig base);
nlohmann::json config_to_json(const PipelineConfig& config);
PipelineConfig read_config_file(const std::filesystem::path& path, PipelineConfig base = {});

nlohmann::json to_json(const PartDetection& parts, int mask_w, int mask_h, ImageDims image);
nlohmann::json to_json(const Pose& pose);
nlohmann::json to_json(const ClusterValidityReport& report);
nlohmann::json to_json(std::span<const CropRegion> crops, std::span<const CropRegion> unshifted);

struct ScreeningCounts {
  std::size_t screened = 0;
  std::size_t accepted = 0;
  std::size_t empty_map = 0;
  std::size_t multiple_regions = 0;
  std::size_t centroid_outside_object = 0;
};

/// Everything computed for one image; masks are at stack input resolution.
struct ImageResult {
  std::string image_id;
  ImageDims image_dims;
  ObjectMasks object;
  ScreeningCounts screening;
  std::optional<ClusterValidityReport> validity;  // auto mode only
  bool validity_skipped = false;                  // auto mode, k could not be scored
  int n_part = 0;
  PartDetection parts;  // ordered by area
  Pose pose;
  std::vector<CropRegion> crops;            // object, then parts (shifted)
  std::vector<CropRegion> unshifted_crops;  // same with shift = 0
  Rect object_box_tight;                    // no margin, image pixels
  std::vector<Point2> part_centroids_image;
  std::vector<Point2> shifted_part_centroids_image;
};

/// Pure computation on an in-memory stack.
ImageResult process_stack(const PipelineConfig& config, const FeatureStack& stack, ImageDims image);

/// Compact record kept for dataset summaries.
struct ImageSummary {
  std::string image_id;
  std::optional<GroundTruth> ground_truth;
  std::size_t n_candidates = 0;
  int n_part = 0;
  std::optional<ClusterValidityReport> validity;
  bool validity_skipped = false;
  Rect object_crop;
  Rect object_box_tight;
  std::size_t object_area = 0;
  std::vector<Point2> part_centroids_image;
  std::vector<Point2> shifted_part_centroids_image;
};

struct Failure {
  std::string image_id;
  ErrorCode code = ErrorCode::IoFailure;
  std::string message;
};

struct BatchReport {
  std::size_t manifest_count = 0;
  std::vector<ImageSummary> successes;  // ordered by image_id
  std::vector<Failure> failures;        // ordered by image_id
};

/// Loads the stack and image of one entry, processes it and writes the per-image bundle
/// to out_dir/<image_id>/.
ImageSummary run_image(const PipelineConfig& config, const ManifestEntry& entry,
                       const std::filesystem::path& out_dir);

/// All entries (concurrently up to config.workers); per-image failures are recorded, never
/// thrown. Writes summaries to out_dir/summary/.
BatchReport run_batch(const PipelineConfig& config, const Manifest& manifest,
                      const std::filesystem::path& out_dir);

struct SweepStep {
  double threshold = 0.0;
  BatchReport batch;
};

struct SweepStability {
  std::string image_id;
  double t_low = 0.0;
  double t_high = 0.0;
  double mask_iou = 0.0;
  std::size_t area_low = 0;
  std::size_t area_high = 0;
};

struct SweepReport {
  std::vector<SweepStep> steps;
  std::vector<SweepStability> stability;  // adjacent thresholds, ordered by image_id then t
};

/// One batch per threshold under out_dir/sweep/t_<T>/ plus out_dir/sweep/summary/.
SweepReport run_sweep(const PipelineConfig& config, const Manifest& manifest,
                      const std::filesystem::path& out_dir);

/// Pixel IoU of two binary masks of equal shape (1 when both are empty).
double mask_iou(const BinaryMask& a, const BinaryMask& b);

}  // namespace fmparts
