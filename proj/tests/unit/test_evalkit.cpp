#include <cmath>

#include "doctest.h"
#include "fmparts/error.hpp"
#include "fmparts/evalkit.hpp"
#include "fmparts/pipeline.hpp"
#include "fmparts/synth.hpp"
#include "support.hpp"

using namespace fmparts;

namespace {

ManifestEntry annotated(const std::string& id, Rect bbox, std::vector<PartAnnotation> parts) {
  return {id, {}, {}, GroundTruth{bbox, std::move(parts)}};
}

}  // namespace

TEST_CASE("iou") {
  CHECK(iou({0, 0, 2, 2}, {0, 0, 2, 2}) == 1.0);
  CHECK(iou({0, 0, 2, 2}, {5, 5, 2, 2}) == 0.0);
  CHECK(iou({0, 0, 2, 2}, {1, 0, 2, 2}) == doctest::Approx(2.0 / 6.0).epsilon(1e-15));
  CHECK(iou({0, 0, 2, 2}, {2, 0, 2, 2}) == 0.0);
  CHECK(iou({0, 0, 0, 0}, {0, 0, 0, 0}) == 0.0);
  CHECK(iou({0, 0, 4, 4}, {1, 1, 2, 2}) == 0.25);
  oracle::Rng rng(51);
  for (int i = 0; i < 200; ++i) {
    const Rect a{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(0, 6), rng.uniform(0, 6)};
    const Rect b{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(0, 6), rng.uniform(0, 6)};
    CHECK(iou(a, b) == iou(b, a));
    CHECK(iou(a, b) >= 0.0);
    CHECK(iou(a, b) <= 1.0);
  }
}

TEST_CASE("recall curves") {
  const std::vector<double> grid{0.5, 0.7};
  // IoUs 0.4, 0.6, 0.8 against the unit-height box [0,10]
  const std::vector<BoxPair> boxes{{"a", {0, 0, 4, 1}, Rect{0, 0, 10, 1}},
                                   {"b", {0, 0, 6, 1}, Rect{0, 0, 10, 1}},
                                   {"c", {0, 0, 8, 1}, Rect{0, 0, 10, 1}}};
  const auto c = recall_curve(boxes, grid, "v");
  REQUIRE(c.recall.size() == 2);
  CHECK(c.recall[0] == doctest::Approx(2.0 / 3.0));
  CHECK(c.recall[1] == doctest::Approx(1.0 / 3.0));
  CHECK(c.n_images == 3);
  CHECK(c.variant_label == "v");
  CHECK(c.monotone_non_increasing());

  const auto grid2 = default_iou_thresholds();
  REQUIRE(grid2.size() == 17);
  CHECK(grid2.front() == doctest::Approx(0.10));
  CHECK(grid2.back() == doctest::Approx(0.90));
  std::vector<BoxPair> same{{"a", {1, 1, 3, 3}, Rect{1, 1, 3, 3}}, {"b", {0, 0, 1, 1}, Rect{0, 0, 1, 1}}};
  for (double r : recall_curve(same, grid2, "same").recall) CHECK(r == 1.0);
  std::vector<BoxPair> apart{{"a", {0, 0, 1, 1}, Rect{5, 5, 1, 1}}};
  for (double r : recall_curve(apart, grid2, "apart").recall) CHECK(r == 0.0);

  std::vector<BoxPair> missing{{"a", {0, 0, 1, 1}, std::nullopt}};
  try {
    recall_curve(missing, grid2, "x");
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingGroundTruth);
  }
  CHECK_THROWS_AS(recall_curve(same, std::vector<double>{0.7, 0.5}, "x"), Error);
  CHECK_THROWS_AS(recall_curve(same, std::vector<double>{0.0, 0.5}, "x"), Error);

  const std::vector<RecallCurve> curves{c};
  CHECK(recall_curves_csv(curves) == "threshold,recall,variant\n0.5,0.666666667,v\n0.7,0.333333333,v\n");
  CHECK(recall_gnuplot_script(curves, "r.csv").find("'r.csv'") != std::string::npos);
}

TEST_CASE("random recall curves are monotone") {
  oracle::Rng rng(52);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<BoxPair> boxes;
    for (int i = 0; i < 15; ++i) {
      const Rect g{rng.uniform(0, 10), rng.uniform(0, 10), rng.uniform(1, 6), rng.uniform(1, 6)};
      boxes.push_back({"i" + std::to_string(i), {g.x + rng.uniform(-2, 2), g.y + rng.uniform(-2, 2), g.w, g.h}, g});
    }
    CHECK(recall_curve(boxes, default_iou_thresholds(), "r").monotone_non_increasing());
  }
}

TEST_CASE("margin helps when the box sits inside the ground truth") {
  oracle::Rng rng(53);
  std::vector<BoxPair> plain, margin;
  for (int i = 0; i < 30; ++i) {
    const Rect g{0, 0, rng.uniform(20, 40), rng.uniform(20, 40)};
    const double s = rng.uniform(0.5, 0.9);
    const Rect p{g.w * (1 - s) / 2, g.h * (1 - s) / 2, g.w * s, g.h * s};
    const Rect m{p.x - p.w * 0.025, p.y - p.h * 0.025, p.w * 1.05, p.h * 1.05};
    plain.push_back({"i", p, g});
    margin.push_back({"i", m, g});
  }
  const auto a = recall_curve(plain, default_iou_thresholds(), "plain");
  const auto b = recall_curve(margin, default_iou_thresholds(), "margin");
  for (std::size_t i = 0; i < a.recall.size(); ++i) CHECK(b.recall[i] >= a.recall[i]);
}

TEST_CASE("part distance") {
  const Rect box{10, 20, 40, 80};
  CHECK(part_distance({30, 50}, {5, 30, 50, true}, box) == 0.0);
  CHECK(part_distance({70, 50}, {5, 30, 50, true}, box) == 1.0);
  CHECK(part_distance({50, 90}, {5, 30, 50, true}, box) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
  try {
    part_distance({0, 0}, {5, 0, 0, false}, box);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvisiblePart);
  }
  try {
    part_distance({0, 0}, {5, 0, 0, true}, {0, 0, 0, 5});
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateBox);
  }
  oracle::Rng rng(54);
  for (int i = 0; i < 100; ++i) {
    const Point2 p{rng.uniform(0, 100), rng.uniform(0, 100)};
    const PartAnnotation g{3, rng.uniform(0, 100), rng.uniform(0, 100), true};
    const Rect b{rng.uniform(0, 10), rng.uniform(0, 10), rng.uniform(5, 50), rng.uniform(5, 50)};
    const double s = rng.uniform(0.1, 10);
    const double scaled = part_distance(s * p, {3, s * g.x, s * g.y, true}, {s * b.x, s * b.y, s * b.w, s * b.h});
    CHECK(std::abs(scaled - part_distance(p, g, b)) <= 1e-9);
  }
}

TEST_CASE("part distance table") {
  Manifest m;
  m.entries.push_back(annotated("a", {0, 0, 10, 10}, {{5, 2, 2, true}, {14, 8, 8, true}, {3, 5, 5, false}}));
  m.entries.push_back(annotated("b", {0, 0, 20, 20}, {{5, 4, 4, true}}));
  m.entries.push_back({"c", {}, {}, std::nullopt});
  const std::vector<ImagePartDetections> det{{"a", {{2, 2}, {8, 8}}}, {"b", {{4, 4}, {4, 14}}}, {"c", {{1, 1}, {1, 1}}}};
  const auto t = part_distance_table(det, m);
  REQUIRE(t.per_detected_part.size() == 2);
  CHECK(t.per_detected_part[0][4].mean_norm_dist == 0.0);  // crown
  CHECK(t.per_detected_part[0][4].n_visible == 2);
  CHECK(t.per_detected_part[0][2].n_visible == 0);  // invisible belly
  CHECK(t.per_detected_part[1][13].mean_norm_dist == 0.0);
  CHECK(t.per_detected_part[1][4].mean_norm_dist ==
        doctest::Approx((part_distance({8, 8}, {5, 2, 2, true}, {0, 0, 10, 10}) + 0.5) / 2));

  const std::vector<ImagePartDetections> single{{"a", {{3, 1}}}};
  const auto one = part_distance_table(single, m);
  CHECK(one.per_detected_part[0][13].mean_norm_dist == part_distance({3, 1}, {14, 8, 8, true}, {0, 0, 10, 10}));
  CHECK(one.csv().rfind("detected_part,gt_part_id,mean,n\n1,1,,0\n", 0) == 0);
  CHECK(one.csv().find("\n1,14,0.860232527,1\n") != std::string::npos);

  const std::vector<ImagePartDetections> unknown{{"zz", {{0, 0}}}};
  CHECK_THROWS_AS(part_distance_table(unknown, m), Error);
  const std::vector<ImagePartDetections> bare{{"c", {{0, 0}}}};
  try {
    part_distance_table(bare, m);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoAnnotations);
  }
  CHECK(kPartNames[4] == "crown");
  CHECK(kPartNames[13] == "tail");
}

TEST_CASE("the smaller detected part sits near the head annotations") {
  auto config = synth::scene_config();
  Manifest m;
  std::vector<ImagePartDetections> det;
  for (int i = 0; i < 20; ++i) {
    auto scene = synth::make_scene(100 + i);
    scene.stack.image_id = synth::scene_id(i);
    const auto r = process_stack(config, scene.stack, {scene.image.width, scene.image.height});
    det.push_back({r.image_id, r.part_centroids_image});
    m.entries.push_back({r.image_id, {}, {}, scene.ground_truth});
  }
  const auto t = part_distance_table(det, m);
  const auto& head = t.per_detected_part[0];
  for (int near_id : {5, 6, 7}) {      // crown, forehead, left eye
    for (int far_id : {3, 14}) {       // belly, tail
      CHECK(head[near_id - 1].mean_norm_dist < head[far_id - 1].mean_norm_dist);
    }
  }
}
