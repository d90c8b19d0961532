#include "fmparts/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <set>
#include <utility>

#include "fmparts/error.hpp"

namespace fmparts {

namespace {

double squared(Point2 a, Point2 b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

// Portable uniform draw in [0, 1); std distributions differ across standard libraries.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

int nearest_center(Point2 p, std::span<const Point2> centers) {
  int best = 0;
  double best_d = squared(p, centers[0]);
  for (std::size_t c = 1; c < centers.size(); ++c) {
    const double d = squared(p, centers[c]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

std::vector<Point2> plus_plus_seeds(std::span<const Point2> points, int k, std::mt19937_64& rng) {
  const std::size_t n = points.size();
  std::vector<Point2> centers;
  centers.reserve(k);
  centers.push_back(points[std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * n))]);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared(points[i], centers[0]);
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (double d : d2) total += d;
    const double target = uniform01(rng) * total;
    double acc = 0.0;
    std::size_t pick = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (d2[i] <= 0.0) continue;
      acc += d2[i];
      pick = i;
      if (acc > target) break;
    }
    centers.push_back(points[pick]);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared(points[i], centers.back()));
  }
  return centers;
}

// Moves the point farthest from its center into an empty cluster until none are empty.
bool repair_empty_clusters(std::span<const Point2> points, std::vector<int>& assignment,
                           std::vector<Point2>& centers) {
  const int k = static_cast<int>(centers.size());
  bool repaired = false;
  for (;;) {
    std::vector<int> sizes(k, 0);
    for (int a : assignment) ++sizes[a];
    const auto empty = std::find(sizes.begin(), sizes.end(), 0);
    if (empty == sizes.end()) return repaired;
    std::size_t far = 0;
    double far_d = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (sizes[assignment[i]] < 2) continue;
      const double d = squared(points[i], centers[assignment[i]]);
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    const int target = static_cast<int>(empty - sizes.begin());
    assignment[far] = target;
    centers[target] = points[far];
    repaired = true;
  }
}

KMeansResult lloyd(std::span<const Point2> points, std::vector<Point2> centers, int max_iterations) {
  const int k = static_cast<int>(centers.size());
  std::vector<int> assignment(points.size(), -1);
  for (int iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const int c = nearest_center(points[i], centers);
      if (c != assignment[i]) {
        assignment[i] = c;
        changed = true;
      }
    }
    if (repair_empty_clusters(points, assignment, centers)) changed = true;
    centers = cluster_means(points, assignment, k);
    if (!changed) break;
  }
  KMeansResult result{std::move(assignment), std::move(centers), 0.0};
  result.sse = within_cluster_sse(points, result.assignment, result.centers);
  return result;
}

// Single-point transfers that lower SSE (Hartigan); Lloyd fixed points are not always stable here.
void transfer_refine(std::span<const Point2> points, KMeansResult& r, int max_passes) {
  const int k = static_cast<int>(r.centers.size());
  std::vector<int> counts(k, 0);
  for (int a : r.assignment) ++counts[a];
  for (int pass = 0; pass < max_passes; ++pass) {
    bool moved = false;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const int from = r.assignment[i];
      if (counts[from] < 2) continue;
      const double n_from = counts[from];
      const double loss = n_from / (n_from - 1.0) * squared(points[i], r.centers[from]);
      int to = -1;
      double best_gain = 0.0;
      for (int c = 0; c < k; ++c) {
        if (c == from) continue;
        const double n_to = counts[c];
        const double gain = n_to / (n_to + 1.0) * squared(points[i], r.centers[c]);
        if (gain < loss * (1.0 - 1e-12) && (to < 0 || gain < best_gain)) {
          to = c;
          best_gain = gain;
        }
      }
      if (to < 0) continue;
      r.centers[from] = (1.0 / (n_from - 1.0)) * (n_from * r.centers[from] - points[i]);
      r.centers[to] = (1.0 / (counts[to] + 1.0)) * (double(counts[to]) * r.centers[to] + points[i]);
      --counts[from];
      ++counts[to];
      r.assignment[i] = to;
      moved = true;
    }
    if (!moved) break;
  }
  r.centers = cluster_means(points, r.assignment, k);
  r.sse = within_cluster_sse(points, r.assignment, r.centers);
}

}  // namespace

std::vector<Point2> cluster_means(std::span<const Point2> points, std::span<const int> assignment,
                                  int k) {
  std::vector<Point2> sums(k);
  std::vector<int> counts(k, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    sums[assignment[i]] = sums[assignment[i]] + points[i];
    ++counts[assignment[i]];
  }
  for (int c = 0; c < k; ++c) {
    if (counts[c] > 0) sums[c] = (1.0 / counts[c]) * sums[c];
  }
  return sums;
}

double within_cluster_sse(std::span<const Point2> points, std::span<const int> assignment,
                          std::span<const Point2> centers) {
  double sse = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) sse += squared(points[i], centers[assignment[i]]);
  return sse;
}

KMeansResult kmeans(std::span<const Point2> points, int k, std::uint64_t seed,
                    const KMeansOptions& options) {
  if (k < 1) throw Error(ErrorCode::DegenerateClustering, "k must be >= 1");
  if (points.size() < static_cast<std::size_t>(k)) {
    throw Error(ErrorCode::TooFewCandidates, std::to_string(points.size()) + " points for k=" +
                                                 std::to_string(k));
  }
  std::set<std::pair<double, double>> distinct;
  for (const auto& p : points) distinct.emplace(p.x, p.y);
  if (distinct.size() < static_cast<std::size_t>(k)) {
    throw Error(ErrorCode::DegenerateClustering,
                "only " + std::to_string(distinct.size()) + " distinct points for k=" +
                    std::to_string(k));
  }

  std::mt19937_64 rng(seed);
  KMeansResult best;
  best.sse = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, options.restarts); ++r) {
    KMeansResult run = lloyd(points, plus_plus_seeds(points, k, rng), options.max_iterations);
    transfer_refine(points, run, options.max_iterations);
    if (run.sse < best.sse) best = std::move(run);
  }
  return best;
}

}  // namespace fmparts
