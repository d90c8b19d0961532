#include "doctest.h"
#include "fmparts/error.hpp"
#include "fmparts/kmeans.hpp"
#include "support.hpp"

using namespace fmparts;

TEST_CASE("two separated groups are recovered exactly") {
  oracle::Rng rng(1);
  std::vector<Point2> pts;
  for (int i = 0; i < 10; ++i) pts.push_back({rng.uniform(-0.01, 0.01), rng.uniform(-0.01, 0.01)});
  for (int i = 0; i < 10; ++i) pts.push_back({100 + rng.uniform(-0.01, 0.01), 100 + rng.uniform(-0.01, 0.01)});
  const auto r = kmeans(pts, 2, 7);
  for (int i = 1; i < 10; ++i) CHECK(r.assignment[i] == r.assignment[0]);
  for (int i = 11; i < 20; ++i) CHECK(r.assignment[i] == r.assignment[10]);
  CHECK(r.assignment[0] != r.assignment[10]);
  CHECK(r.sse == doctest::Approx(within_cluster_sse(pts, r.assignment, r.centers)).epsilon(1e-12));
}

TEST_CASE("small instances reach the brute-force optimum") {
  oracle::Rng rng(2);
  int optimal = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const int n = rng.integer(3, 9), k = rng.integer(1, 3);
    std::vector<Point2> pts;
    for (int i = 0; i < n; ++i) pts.push_back({rng.uniform(0, 30), rng.uniform(0, 30)});
    const auto r = kmeans(pts, k, trial);
    optimal += std::abs(r.sse - oracle::best_partition_sse(pts, k)) <= 1e-9;
  }
  CHECK(optimal >= 39);
}

TEST_CASE("result invariants") {
  oracle::Rng rng(3);
  std::vector<Point2> pts;
  for (int i = 0; i < 25; ++i) pts.push_back({rng.uniform(0, 10), rng.uniform(0, 10)});
  const auto r = kmeans(pts, 4, 99);
  REQUIRE(r.assignment.size() == pts.size());
  std::vector<int> counts(4, 0);
  for (int a : r.assignment) ++counts.at(a);
  for (int c : counts) CHECK(c > 0);
  const auto means = cluster_means(pts, r.assignment, 4);
  for (int c = 0; c < 4; ++c) {
    CHECK(means[c].x == doctest::Approx(r.centers[c].x));
    CHECK(means[c].y == doctest::Approx(r.centers[c].y));
  }
  // determinism
  const auto again = kmeans(pts, 4, 99);
  CHECK(again.assignment == r.assignment);
  CHECK(again.sse == r.sse);
}

TEST_CASE("k = 1 and k = n") {
  std::vector<Point2> pts{{0, 0}, {2, 0}, {4, 3}};
  const auto one = kmeans(pts, 1, 0);
  CHECK(one.centers[0].x == doctest::Approx(2.0));
  CHECK(one.centers[0].y == doctest::Approx(1.0));
  const auto all = kmeans(pts, 3, 0);
  CHECK(all.sse == 0.0);
}

TEST_CASE("degenerate inputs") {
  auto code_of = [](std::vector<Point2> pts, int k) {
    try {
      kmeans(pts, k, 0);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoFailure;
  };
  CHECK(code_of({{1, 1}, {1, 1}, {1, 1}}, 2) == ErrorCode::DegenerateClustering);
  CHECK(code_of({{1, 1}}, 2) == ErrorCode::TooFewCandidates);
  CHECK(code_of({{1, 1}, {2, 2}}, 0) == ErrorCode::DegenerateClustering);
  // duplicates are fine as long as k distinct points exist
  const auto r = kmeans(std::vector<Point2>{{0, 0}, {0, 0}, {5, 5}, {5, 5}}, 2, 1);
  CHECK(r.sse == 0.0);
}
