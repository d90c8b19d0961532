#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fmparts/geometry.hpp"
#include "fmparts/kmeans.hpp"
#include "fmparts/partdetect.hpp"

namespace fmparts {

/// Mean over clusters of max_{j != i} (dbar_i + dbar_j) / d(c_i, c_j), where dbar is the mean
/// point-to-center distance. Lower is better. Throws DegenerateClustering for fewer than two
/// clusters, an empty cluster or coincident centers.
double davies_bouldin(std::span<const Point2> points, std::span<const int> assignment,
                      std::span<const Point2> centers);

/// Mean of (b - a) / max(a, b) over all points. a is 0 for singletons; a point with
/// max(a, b) == 0 scores 0.
double mean_silhouette(std::span<const Point2> points, std::span<const int> assignment);

struct ValidityScores {
  double db_index = 0.0;
  double mean_silhouette = 0.0;
};

struct ClusterValidityReport {
  std::map<int, ValidityScores> per_k;  // k = 2..k_max
  int best_k_db = 0;                    // argmin DB, ties to the smaller k
  int best_k_sil = 0;                   // argmax silhouette, ties to the smaller k
};

/// Runs the part-clustering k-means for every k in 2..k_max on the canonical candidate order
/// and scores both criteria. Requires more than k_max candidates.
ClusterValidityReport select_k(std::span<const CandidateMap> candidates, int k_max,
                               std::uint64_t seed, const KMeansOptions& options = {});
ClusterValidityReport select_k(std::span<const Point2> points, int k_max, std::uint64_t seed,
                               const KMeansOptions& options = {});

/// Dataset-level aggregation of per-image reports (plotted as mean index and best-k histogram).
struct ValidityTable {
  std::vector<std::pair<std::string, ClusterValidityReport>> images;  // ordered by image_id
  std::vector<std::string> skipped;  // too few candidates or degenerate

  /// image_id,k,db,silhouette plus one "skipped" row per skipped image.
  std::string per_image_csv() const;
  /// k,best_db_count,best_sil_count,mean_db,mean_silhouette
  std::string histogram_csv() const;
};

}  // namespace fmparts
