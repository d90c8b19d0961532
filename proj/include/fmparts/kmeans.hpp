#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fmparts/geometry.hpp"

namespace fmparts {

struct KMeansOptions {
  int restarts = 10;
  int max_iterations = 100;
};

struct KMeansResult {
  std::vector<int> assignment;  // cluster id per point, 0..k-1, every cluster non-empty
  std::vector<Point2> centers;  // cluster means
  double sse = 0.0;             // within-cluster sum of squared distances
};

/// Lloyd iterations from k-means++ seeds, then single-point transfer passes; best of
/// `restarts` runs by SSE.
/// Nearest-center ties go to the lowest center index. Deterministic for a fixed seed
/// and point order. Throws DegenerateClustering if fewer than k distinct points exist.
KMeansResult kmeans(std::span<const Point2> points, int k, std::uint64_t seed,
                    const KMeansOptions& options = {});

double within_cluster_sse(std::span<const Point2> points, std::span<const int> assignment,
                          std::span<const Point2> centers);

std::vector<Point2> cluster_means(std::span<const Point2> points, std::span<const int> assignment,
                                  int k);

}  // namespace fmparts
