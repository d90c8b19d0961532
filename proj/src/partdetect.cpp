#include "fmparts/partdetect.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fmparts/error.hpp"

namespace fmparts {

std::string_view to_string(CandidateVerdict verdict) noexcept {
  switch (verdict) {
    case CandidateVerdict::Accepted: return "accepted";
    case CandidateVerdict::EmptyMap: return "empty_map";
    case CandidateVerdict::MultipleRegions: return "multiple_regions";
    case CandidateVerdict::CentroidOutsideObject: return "centroid_outside_object";
  }
  return "unknown";
}

Point2 weighted_centroid(const SoftMask& map, const BinaryMask& region) {
  if (!map.grid().same_shape(region.grid)) {
    throw Error(ErrorCode::DimensionMismatch, "map and region differ in shape");
  }
  double sw = 0.0, sx = 0.0, sy = 0.0;
  std::size_t n = 0;
  double ux = 0.0, uy = 0.0;
  for (int y = 0; y < region.height(); ++y) {
    for (int x = 0; x < region.width(); ++x) {
      if (!region(y, x)) continue;
      const double w = map(y, x);
      sw += w;
      sx += w * x;
      sy += w * y;
      ux += x;
      uy += y;
      ++n;
    }
  }
  if (n == 0) throw Error(ErrorCode::EmptyRegion, "region has no positive pixel");
  // All-zero weights only arise when the region was not derived from `map`.
  if (sw <= 0.0) return {ux / n, uy / n};
  return {sx / sw, sy / sw};
}

Grid<int> label_regions(const BinaryMask& mask, int& region_count) {
  const int h = mask.height();
  const int w = mask.width();
  Grid<int> labels(h, w, 0);
  region_count = 0;
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask(y, x) || labels(y, x) != 0) continue;
      const int label = ++region_count;
      labels(y, x) = label;
      stack.emplace_back(y, x);
      while (!stack.empty()) {
        const auto [cy, cx] = stack.back();
        stack.pop_back();
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int ny = cy + dy;
            const int nx = cx + dx;
            if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
            if (!mask(ny, nx) || labels(ny, nx) != 0) continue;
            labels(ny, nx) = label;
            stack.emplace_back(ny, nx);
          }
        }
      }
    }
  }
  return labels;
}

int connected_regions(const BinaryMask& mask) {
  int count = 0;
  label_regions(mask, count);
  return count;
}

CandidateVerdict screen_map(const SoftMask& resized, const BinaryMask& binary,
                            const BinaryMask& object_binary, Point2& centroid) {
  if (binary.count() == 0) return CandidateVerdict::EmptyMap;
  centroid = weighted_centroid(resized, binary);
  if (connected_regions(binary) != 1) return CandidateVerdict::MultipleRegions;
  const long px = std::lround(centroid.x);
  const long py = std::lround(centroid.y);
  if (px < 0 || py < 0 || px >= object_binary.width() || py >= object_binary.height() ||
      !object_binary(static_cast<int>(py), static_cast<int>(px))) {
    return CandidateVerdict::CentroidOutsideObject;
  }
  return CandidateVerdict::Accepted;
}

std::vector<CandidateMap> select_candidates(const FeatureStack& stack,
                                            std::span<const std::string> part_layers,
                                            double t_parts, const BinaryMask& object_binary,
                                            Interpolation mode,
                                            std::vector<ScreenedMap>* screening_log) {
  if (part_layers.empty()) throw Error(ErrorCode::EmptyLayerSet, "no part layers given");
  for (const auto& name : part_layers) {
    if (stack.find_layer(name) == nullptr) {
      throw Error(ErrorCode::UnknownLayer, "part layer '" + name + "' not in stack");
    }
  }
  if (object_binary.height() != stack.input_height || object_binary.width() != stack.input_width) {
    throw Error(ErrorCode::DimensionMismatch, "object mask is not at input resolution");
  }

  std::vector<CandidateMap> accepted;
  for (const auto& layer : stack.layers) {
    if (std::find(part_layers.begin(), part_layers.end(), layer.name) == part_layers.end()) continue;
    for (std::size_t m = 0; m < layer.maps.size(); ++m) {
      SoftMask resized = SoftMask::from_normalized(normalized_at_input(
          to_double(layer.maps[m]), stack.input_height, stack.input_width, mode));
      BinaryMask binary = threshold(resized, t_parts);
      Point2 centroid;
      const CandidateVerdict verdict = screen_map(resized, binary, object_binary, centroid);
      MapRef ref{layer.name, static_cast<int>(m)};
      if (screening_log != nullptr) screening_log->push_back({ref, verdict});
      if (verdict == CandidateVerdict::Accepted) {
        accepted.push_back({std::move(ref), std::move(resized), std::move(binary), centroid});
      }
    }
  }
  return accepted;
}

std::vector<std::size_t> canonical_order(std::span<const CandidateMap> candidates) {
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ca = candidates[a];
    const auto& cb = candidates[b];
    if (ca.centroid.x != cb.centroid.x) return ca.centroid.x < cb.centroid.x;
    if (ca.centroid.y != cb.centroid.y) return ca.centroid.y < cb.centroid.y;
    return ca.ref < cb.ref;
  });
  return order;
}

PartDetection cluster_parts(std::span<const CandidateMap> candidates, int n_part, double t_parts,
                            std::uint64_t seed, const KMeansOptions& options) {
  if (n_part < 1) throw Error(ErrorCode::InvalidConfig, "n_part must be >= 1");
  if (candidates.size() < static_cast<std::size_t>(n_part)) {
    throw Error(ErrorCode::TooFewCandidates, std::to_string(candidates.size()) +
                                                 " candidates for " + std::to_string(n_part) +
                                                 " parts");
  }
  const auto order = canonical_order(candidates);
  std::vector<Point2> points;
  points.reserve(order.size());
  for (std::size_t i : order) points.push_back(candidates[i].centroid);

  std::vector<int> assignment(points.size(), 0);
  if (n_part > 1) assignment = kmeans(points, n_part, seed, options).assignment;

  PartDetection detection;
  for (int k = 0; k < n_part; ++k) {
    std::vector<const CandidateMap*> members;
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (assignment[i] == k) members.push_back(&candidates[order[i]]);
    }
    std::sort(members.begin(), members.end(),
              [](const CandidateMap* a, const CandidateMap* b) { return a->ref < b->ref; });

    std::vector<const Grid<float>*> maps;
    Part part;
    for (const auto* c : members) {
      maps.push_back(&c->resized_map.grid());
      part.member_maps.push_back(c->ref);
    }
    part.soft_mask = SoftMask::from_normalized(normalize(sum_maps(maps)));
    part.binary_mask = threshold(part.soft_mask, t_parts);
    part.area = part.binary_mask.count();
    if (part.area == 0) {
      throw Error(ErrorCode::EmptyRegion, "part " + std::to_string(k + 1) + " mask is empty");
    }
    part.centroid = weighted_centroid(part.soft_mask, part.binary_mask);
    detection.parts.push_back(std::move(part));
  }
  return detection;
}

}  // namespace fmparts
