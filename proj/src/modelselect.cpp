#include "fmparts/modelselect.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <set>

#include "fmparts/error.hpp"

namespace fmparts {

namespace {

struct Labeled {
  Point2 p;
  int cluster;
};

// Sorting makes every accumulation independent of the caller's point order.
std::vector<Labeled> canonical(std::span<const Point2> points, std::span<const int> assignment) {
  if (points.size() != assignment.size()) {
    throw Error(ErrorCode::DimensionMismatch, "points and assignment differ in length");
  }
  std::vector<Labeled> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) out.push_back({points[i], assignment[i]});
  std::sort(out.begin(), out.end(), [](const Labeled& a, const Labeled& b) {
    if (a.cluster != b.cluster) return a.cluster < b.cluster;
    if (a.p.x != b.p.x) return a.p.x < b.p.x;
    return a.p.y < b.p.y;
  });
  return out;
}

int checked_cluster_count(std::span<const int> assignment, int declared) {
  if (assignment.empty()) throw Error(ErrorCode::DegenerateClustering, "no points");
  const int k = declared > 0 ? declared : *std::max_element(assignment.begin(), assignment.end()) + 1;
  if (k < 2) throw Error(ErrorCode::DegenerateClustering, "need at least two clusters");
  std::vector<int> sizes(k, 0);
  for (int a : assignment) {
    if (a < 0 || a >= k) throw Error(ErrorCode::DegenerateClustering, "cluster id out of range");
    ++sizes[a];
  }
  if (std::find(sizes.begin(), sizes.end(), 0) != sizes.end()) {
    throw Error(ErrorCode::DegenerateClustering, "empty cluster");
  }
  return k;
}

}  // namespace

double davies_bouldin(std::span<const Point2> points, std::span<const int> assignment,
                      std::span<const Point2> centers) {
  const int k = checked_cluster_count(assignment, static_cast<int>(centers.size()));
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      if (distance(centers[i], centers[j]) == 0.0) {
        throw Error(ErrorCode::DegenerateClustering, "coincident cluster centers");
      }
    }
  }
  const auto pts = canonical(points, assignment);
  std::vector<double> spread(k, 0.0);
  std::vector<int> sizes(k, 0);
  for (const auto& lp : pts) {
    spread[lp.cluster] += distance(lp.p, centers[lp.cluster]);
    ++sizes[lp.cluster];
  }
  for (int i = 0; i < k; ++i) spread[i] /= sizes[i];

  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    double worst = 0.0;
    for (int j = 0; j < k; ++j) {
      if (j == i) continue;
      worst = std::max(worst, (spread[i] + spread[j]) / distance(centers[i], centers[j]));
    }
    total += worst;
  }
  return total / k;
}

double mean_silhouette(std::span<const Point2> points, std::span<const int> assignment) {
  const int k = checked_cluster_count(assignment, 0);
  const auto pts = canonical(points, assignment);
  std::vector<int> sizes(k, 0);
  for (const auto& lp : pts) ++sizes[lp.cluster];

  double total = 0.0;
  std::vector<double> dist_sum(k);
  for (const auto& self : pts) {
    std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
    for (const auto& other : pts) dist_sum[other.cluster] += distance(self.p, other.p);
    const int own = self.cluster;
    const double a = sizes[own] > 1 ? dist_sum[own] / (sizes[own] - 1) : 0.0;
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      if (c != own) b = std::min(b, dist_sum[c] / sizes[c]);
    }
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(pts.size());
}

ClusterValidityReport select_k(std::span<const Point2> points, int k_max, std::uint64_t seed,
                               const KMeansOptions& options) {
  if (k_max < 2) throw Error(ErrorCode::InvalidConfig, "k_max must be >= 2");
  if (points.size() <= static_cast<std::size_t>(k_max)) {
    throw Error(ErrorCode::TooFewCandidates, std::to_string(points.size()) +
                                                 " candidates, need more than " +
                                                 std::to_string(k_max));
  }
  ClusterValidityReport report;
  double best_db = std::numeric_limits<double>::infinity();
  double best_sil = -std::numeric_limits<double>::infinity();
  for (int k = 2; k <= k_max; ++k) {
    const KMeansResult km = kmeans(points, k, seed, options);
    ValidityScores s;
    s.db_index = davies_bouldin(points, km.assignment, km.centers);
    s.mean_silhouette = mean_silhouette(points, km.assignment);
    report.per_k[k] = s;
    if (s.db_index < best_db) {
      best_db = s.db_index;
      report.best_k_db = k;
    }
    if (s.mean_silhouette > best_sil) {
      best_sil = s.mean_silhouette;
      report.best_k_sil = k;
    }
  }
  return report;
}

ClusterValidityReport select_k(std::span<const CandidateMap> candidates, int k_max,
                               std::uint64_t seed, const KMeansOptions& options) {
  std::vector<Point2> points;
  for (std::size_t i : canonical_order(candidates)) points.push_back(candidates[i].centroid);
  return select_k(std::span<const Point2>(points), k_max, seed, options);
}

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

std::string ValidityTable::per_image_csv() const {
  std::string out = "image_id,k,db,silhouette\n";
  for (const auto& [id, report] : images) {
    for (const auto& [k, s] : report.per_k) {
      out += id + "," + std::to_string(k) + "," + fmt_double(s.db_index) + "," +
             fmt_double(s.mean_silhouette) + "\n";
    }
  }
  for (const auto& id : skipped) out += id + ",skipped,,\n";
  return out;
}

std::string ValidityTable::histogram_csv() const {
  std::map<int, std::array<double, 4>> rows;  // best_db, best_sil, sum_db, sum_sil
  std::map<int, int> counts;
  for (const auto& [id, report] : images) {
    for (const auto& [k, s] : report.per_k) {
      auto& r = rows[k];
      r[2] += s.db_index;
      r[3] += s.mean_silhouette;
      ++counts[k];
    }
    rows[report.best_k_db][0] += 1;
    rows[report.best_k_sil][1] += 1;
  }
  std::string out = "k,best_db_count,best_sil_count,mean_db,mean_silhouette\n";
  for (const auto& [k, r] : rows) {
    const int n = counts[k];
    out += std::to_string(k) + "," + std::to_string(static_cast<int>(r[0])) + "," +
           std::to_string(static_cast<int>(r[1])) + "," + (n ? fmt_double(r[2] / n) : "") + "," +
           (n ? fmt_double(r[3] / n) : "") + "\n";
  }
  out += "skipped," + std::to_string(skipped.size()) + ",,,\n";
  return out;
}

}  // namespace fmparts
