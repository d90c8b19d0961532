#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fmparts/geometry.hpp"
#include "fmparts/tensorio.hpp"

namespace fmparts {

/// Intersection over union; 0 when the union has zero area.
double iou(const Rect& a, const Rect& b);

struct RecallCurve {
  std::vector<double> iou_thresholds;  // ascending, in (0, 1]
  std::vector<double> recall;
  std::size_t n_images = 0;
  std::string variant_label;

  bool monotone_non_increasing() const;
};

struct BoxPair {
  std::string image_id;
  Rect predicted;
  std::optional<Rect> ground_truth;
};

/// 0.10, 0.15, ..., 0.90.
std::vector<double> default_iou_thresholds();

/// recall(t) = fraction of images whose prediction reaches IoU >= t with its ground truth.
RecallCurve recall_curve(std::span<const BoxPair> boxes, std::span<const double> thresholds,
                         std::string variant_label);

/// threshold,recall,variant
std::string recall_curves_csv(std::span<const RecallCurve> curves);
/// gnuplot script plotting `csv_name` one line per variant.
std::string recall_gnuplot_script(std::span<const RecallCurve> curves, const std::string& csv_name);

/// Norm of the offset after dividing x by the box width and y by the box height.
double part_distance(Point2 predicted, const PartAnnotation& truth, const Rect& gt_bbox);

/// Detected part centroids of one image, already in original-image pixels, in part order.
struct ImagePartDetections {
  std::string image_id;
  std::vector<Point2> centroids;
};

struct PartDistanceCell {
  double mean_norm_dist = 0.0;
  std::size_t n_visible = 0;
};

struct PartDistanceTable {
  // per_detected_part[d][gt_part_id - 1]
  std::vector<std::array<PartDistanceCell, kNumAnnotatedParts>> per_detected_part;

  /// detected_part,gt_part_id,mean,n (mean left empty when n == 0)
  std::string csv() const;
};

inline constexpr std::array<std::string_view, kNumAnnotatedParts> kPartNames = {
    "back",     "beak", "belly",     "breast",     "crown",     "forehead", "left eye", "left leg",
    "left wing", "nape", "right eye", "right leg", "right wing", "tail",     "throat"};

/// Averages over visible annotations only, in manifest order.
PartDistanceTable part_distance_table(std::span<const ImagePartDetections> detections,
                                      const Manifest& manifest);

}  // namespace fmparts
