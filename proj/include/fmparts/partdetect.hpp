#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fmparts/geometry.hpp"
#include "fmparts/kmeans.hpp"
#include "fmparts/maskops.hpp"
#include "fmparts/tensorio.hpp"

namespace fmparts {

/// Identifies one feature map inside a stack.
struct MapRef {
  std::string layer_name;
  int map_index = 0;

  auto operator<=>(const MapRef&) const = default;
};

struct CandidateMap {
  MapRef ref;
  SoftMask resized_map;
  BinaryMask binary_map;
  Point2 centroid;
};

enum class CandidateVerdict {
  Accepted,
  EmptyMap,               // nothing above threshold
  MultipleRegions,        // more than one connected region
  CentroidOutsideObject,  // rounded centroid not in the object mask
};

std::string_view to_string(CandidateVerdict verdict) noexcept;

struct ScreenedMap {
  MapRef ref;
  CandidateVerdict verdict;
};

struct Part {
  SoftMask soft_mask;
  BinaryMask binary_mask;
  Point2 centroid;
  std::vector<MapRef> member_maps;  // sorted
  std::size_t area = 0;             // positive pixels of binary_mask
};

struct PartDetection {
  std::vector<Part> parts;
};

/// Activation-weighted mean pixel coordinate over the positive pixels of `region`.
/// Pixel centres sit at integer coordinates. Throws EmptyRegion if `region` is empty.
Point2 weighted_centroid(const SoftMask& map, const BinaryMask& region);

/// Number of 8-connected positive regions.
int connected_regions(const BinaryMask& mask);

/// Region label per pixel (0 = background, 1..n), 8-connectivity, scan order.
Grid<int> label_regions(const BinaryMask& mask, int& region_count);

/// Both part-map constraints for one already normalized, resized and thresholded map.
CandidateVerdict screen_map(const SoftMask& resized, const BinaryMask& binary,
                            const BinaryMask& object_binary, Point2& centroid);

/// Normalizes, resizes and thresholds every map of the part layers (stack order), keeping those
/// with exactly one connected region whose rounded weighted centroid lies on the object.
std::vector<CandidateMap> select_candidates(const FeatureStack& stack,
                                            std::span<const std::string> part_layers,
                                            double t_parts, const BinaryMask& object_binary,
                                            Interpolation mode = Interpolation::Bilinear,
                                            std::vector<ScreenedMap>* screening_log = nullptr);

/// Candidate indices sorted by (centroid x, centroid y, map ref). Clustering runs on this order
/// so the result does not depend on how candidates were enumerated.
std::vector<std::size_t> canonical_order(std::span<const CandidateMap> candidates);

/// k-means over candidate centroids, then one summed, normalized and thresholded mask per cluster.
PartDetection cluster_parts(std::span<const CandidateMap> candidates, int n_part, double t_parts,
                            std::uint64_t seed, const KMeansOptions& options = {});

}  // namespace fmparts
