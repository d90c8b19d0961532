#include "fmparts/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "fmparts/error.hpp"

namespace fmparts {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

double iou(const Rect& a, const Rect& b) {
  const double inter = intersect(a, b).area();
  const double uni = a.area() + b.area() - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

bool RecallCurve::monotone_non_increasing() const {
  for (std::size_t i = 1; i < recall.size(); ++i) {
    if (recall[i] > recall[i - 1]) return false;
  }
  return true;
}

std::vector<double> default_iou_thresholds() {
  std::vector<double> t;
  for (int i = 10; i <= 90; i += 5) t.push_back(i / 100.0);
  return t;
}

RecallCurve recall_curve(std::span<const BoxPair> boxes, std::span<const double> thresholds,
                         std::string variant_label) {
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] > 0.0 && thresholds[i] <= 1.0) || (i > 0 && thresholds[i] <= thresholds[i - 1])) {
      throw Error(ErrorCode::InvalidConfig, "IoU thresholds must ascend inside (0, 1]");
    }
  }
  std::vector<double> ious;
  ious.reserve(boxes.size());
  for (const auto& b : boxes) {
    if (!b.ground_truth) {
      throw Error(ErrorCode::MissingGroundTruth, "image " + b.image_id + " has no ground-truth box");
    }
    ious.push_back(iou(b.predicted, *b.ground_truth));
  }
  RecallCurve curve;
  curve.iou_thresholds.assign(thresholds.begin(), thresholds.end());
  curve.n_images = boxes.size();
  curve.variant_label = std::move(variant_label);
  for (double t : thresholds) {
    const auto hits = std::count_if(ious.begin(), ious.end(), [t](double v) { return v >= t; });
    curve.recall.push_back(ious.empty() ? 0.0 : static_cast<double>(hits) / ious.size());
  }
  return curve;
}

std::string recall_curves_csv(std::span<const RecallCurve> curves) {
  std::string out = "threshold,recall,variant\n";
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.recall.size(); ++i) {
      out += num(c.iou_thresholds[i]) + "," + num(c.recall[i]) + "," + c.variant_label + "\n";
    }
  }
  return out;
}

std::string recall_gnuplot_script(std::span<const RecallCurve> curves, const std::string& csv_name) {
  std::string out =
      "set datafile separator ','\nset xlabel 'IoU'\nset ylabel 'Recall'\n"
      "set xrange [0:1]\nset yrange [0:1]\nset key bottom left\nplot ";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto& label = curves[i].variant_label;
    if (i) out += ", \\\n     ";
    out += "'" + csv_name + "' using 1:(strcol(3) eq '" + label + "' ? $2 : 1/0) with linespoints title '" +
           label + "'";
  }
  return out + "\n";
}

double part_distance(Point2 predicted, const PartAnnotation& truth, const Rect& gt_bbox) {
  if (!truth.visible) {
    throw Error(ErrorCode::InvisiblePart, "part " + std::to_string(truth.part_id) + " is not visible");
  }
  if (!(gt_bbox.w > 0.0) || !(gt_bbox.h > 0.0)) {
    throw Error(ErrorCode::DegenerateBox, "ground-truth box needs positive width and height");
  }
  const double dx = (predicted.x - truth.x) / gt_bbox.w;
  const double dy = (predicted.y - truth.y) / gt_bbox.h;
  return std::sqrt(dx * dx + dy * dy);
}

PartDistanceTable part_distance_table(std::span<const ImagePartDetections> detections,
                                      const Manifest& manifest) {
  std::map<std::string, const ManifestEntry*> by_id;
  for (const auto& e : manifest.entries) by_id[e.image_id] = &e;

  std::size_t n_parts = 0;
  for (const auto& d : detections) n_parts = std::max(n_parts, d.centroids.size());
  std::vector<std::array<double, kNumAnnotatedParts>> sums(n_parts);
  for (auto& s : sums) s.fill(0.0);
  PartDistanceTable table;
  table.per_detected_part.resize(n_parts);

  bool annotated = false;
  for (const auto& det : detections) {
    const auto it = by_id.find(det.image_id);
    if (it == by_id.end()) {
      throw Error(ErrorCode::MissingGroundTruth, "image " + det.image_id + " not in manifest");
    }
    const auto& gt = it->second->ground_truth;
    if (!gt || gt->parts.empty()) continue;
    annotated = true;
    for (std::size_t d = 0; d < det.centroids.size(); ++d) {
      for (const auto& p : gt->parts) {
        if (!p.visible) continue;
        sums[d][p.part_id - 1] += part_distance(det.centroids[d], p, gt->bbox);
        ++table.per_detected_part[d][p.part_id - 1].n_visible;
      }
    }
  }
  if (!annotated) throw Error(ErrorCode::NoAnnotations, "no detected image carries part annotations");
  for (std::size_t d = 0; d < n_parts; ++d) {
    for (int g = 0; g < kNumAnnotatedParts; ++g) {
      auto& cell = table.per_detected_part[d][g];
      if (cell.n_visible > 0) cell.mean_norm_dist = sums[d][g] / cell.n_visible;
    }
  }
  return table;
}

std::string PartDistanceTable::csv() const {
  std::string out = "detected_part,gt_part_id,mean,n\n";
  for (std::size_t d = 0; d < per_detected_part.size(); ++d) {
    for (int g = 0; g < kNumAnnotatedParts; ++g) {
      const auto& cell = per_detected_part[d][g];
      out += std::to_string(d + 1) + "," + std::to_string(g + 1) + "," +
             (cell.n_visible ? num(cell.mean_norm_dist) : "") + "," + std::to_string(cell.n_visible) + "\n";
    }
  }
  return out;
}

}  // namespace fmparts
