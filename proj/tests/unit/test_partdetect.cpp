#include <algorithm>
#include <set>

#include "doctest.h"
#include "fmparts/error.hpp"
#include "fmparts/maskops.hpp"
#include "fmparts/partdetect.hpp"
#include "fmparts/synth.hpp"
#include "support.hpp"

using namespace fmparts;

namespace {

BinaryMask mask_of(int h, int w, std::vector<std::uint8_t> v) { return {Grid<std::uint8_t>(h, w, std::move(v)), 0.5}; }

SoftMask ones(int h, int w) { return SoftMask(Grid<float>(h, w, 1.0f)); }

// candidate whose map is a single bright pixel at (x, y) of a 16x16 grid
CandidateMap point_candidate(const std::string& layer, int index, int x, int y) {
  Grid<float> g(16, 16, 0.0f);
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) g(y + dy, x + dx) = (dx == 0 && dy == 0) ? 1.0f : 0.5f;
  SoftMask m(g);
  BinaryMask b = threshold(m, 0.3);
  return {{layer, index}, m, b, weighted_centroid(m, b)};
}

}  // namespace

TEST_CASE("weighted centroid") {
  BinaryMask one{Grid<std::uint8_t>(10, 5, 0), 0.3};
  one.grid(7, 3) = 1;
  CHECK(weighted_centroid(SoftMask(Grid<float>(10, 5, 0.4f)), one) == Point2{3.0, 7.0});

  const auto two = mask_of(1, 3, {1, 0, 1});
  CHECK(weighted_centroid(ones(1, 3), two) == Point2{1.0, 0.0});

  const auto four = mask_of(1, 4, {1, 0, 0, 1});
  const SoftMask weights(Grid<float>(1, 4, {0.25f, 0, 0, 0.75f}));
  CHECK(weighted_centroid(weights, four) == Point2{2.25, 0.0});

  CHECK_THROWS_AS(weighted_centroid(ones(1, 3), mask_of(1, 3, {0, 0, 0})), Error);
  CHECK_THROWS_AS(weighted_centroid(ones(2, 3), mask_of(1, 3, {1, 0, 0})), Error);
}

TEST_CASE("connected regions use 8-connectivity") {
  CHECK(connected_regions(mask_of(3, 3, {0, 0, 0, 0, 0, 0, 0, 0, 0})) == 0);
  CHECK(connected_regions(mask_of(3, 3, {1, 1, 1, 1, 1, 1, 1, 1, 1})) == 1);
  CHECK(connected_regions(mask_of(2, 2, {1, 0, 0, 1})) == 1);
  CHECK(connected_regions(mask_of(1, 3, {1, 0, 1})) == 2);
  int n = 0;
  const auto labels = label_regions(mask_of(2, 4, {1, 0, 0, 1, 1, 0, 1, 1}), n);
  CHECK(n == 2);
  CHECK(labels(0, 0) == 1);
  CHECK(labels(1, 3) == 2);
  CHECK(labels(0, 1) == 0);

  oracle::Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const int h = rng.integer(1, 12), w = rng.integer(1, 12);
    BinaryMask m{Grid<std::uint8_t>(h, w), 0.5};
    std::vector<std::vector<int>> ref(h, std::vector<int>(w));
    const double p = rng.uniform(0.1, 0.6);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) ref[y][x] = m.grid(y, x) = rng.uniform() < p;
    CHECK(connected_regions(m) == oracle::count_components(ref));
  }
}

TEST_CASE("screening verdicts") {
  // object occupies the left half of an 8x8 input
  BinaryMask object{Grid<std::uint8_t>(8, 8, 0), 0.3};
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 4; ++x) object.grid(y, x) = 1;
  Point2 c;
  auto verdict = [&](std::vector<float> on) {
    Grid<float> g(8, 8, 0.0f);
    for (std::size_t i = 0; i + 1 < on.size(); i += 2) g(int(on[i + 1]), int(on[i])) = 1.0f;
    const SoftMask m(g);
    return screen_map(m, threshold(m, 0.3), object, c);
  };
  CHECK(verdict({}) == CandidateVerdict::EmptyMap);
  CHECK(verdict({1, 1, 6, 6}) == CandidateVerdict::MultipleRegions);
  CHECK(verdict({6, 2, 7, 2}) == CandidateVerdict::CentroidOutsideObject);
  // blob reaching beyond the object is fine while its centroid is inside
  CHECK(verdict({2, 3, 3, 3, 4, 3}) == CandidateVerdict::Accepted);
  CHECK(c == Point2{3.0, 3.0});
}

TEST_CASE("select_candidates keeps stack order and logs every map") {
  FeatureStack s;
  s.input_height = 8;
  s.input_width = 8;
  Grid<float> good(4, 4, 0.0f), two(4, 4, 0.0f), flat(4, 4, 2.0f);
  good(1, 1) = 1.0f;
  two(0, 0) = two(3, 3) = 1.0f;
  s.layers.push_back({"a", {two, good}});
  s.layers.push_back({"b", {flat}});
  s.layers.push_back({"z", {good}});
  BinaryMask object{Grid<std::uint8_t>(8, 8, 1), 0.3};
  std::vector<ScreenedMap> log;
  const auto c = select_candidates(s, std::vector<std::string>{"z", "a", "b"}, 0.3, object, Interpolation::Bilinear, &log);
  REQUIRE(log.size() == 4);
  CHECK(log[0].verdict == CandidateVerdict::MultipleRegions);
  CHECK(log[1].verdict == CandidateVerdict::Accepted);
  CHECK(log[2].verdict == CandidateVerdict::EmptyMap);
  CHECK(log[3].ref == MapRef{"z", 0});
  REQUIRE(c.size() == 2);
  CHECK(c[0].ref == MapRef{"a", 1});

  CHECK_THROWS_AS(select_candidates(s, std::vector<std::string>{"q"}, 0.3, object), Error);
  CHECK_THROWS_AS(select_candidates(s, std::vector<std::string>{}, 0.3, object), Error);
  BinaryMask small{Grid<std::uint8_t>(4, 4, 1), 0.3};
  CHECK_THROWS_AS(select_candidates(s, std::vector<std::string>{"a"}, 0.3, small), Error);
}

TEST_CASE("screening agrees with the union-find checker") {
  oracle::Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const int h = rng.integer(4, 16), w = rng.integer(4, 16);
    Grid<float> a(h, w);
    for (float& v : a.values()) v = static_cast<float>(rng.uniform());
    BinaryMask object{Grid<std::uint8_t>(h, w), 0.3};
    std::vector<std::vector<int>> obj(h, std::vector<int>(w)), bin(h, std::vector<int>(w));
    oracle::Plane act(h, std::vector<double>(w));
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) obj[y][x] = object.grid(y, x) = rng.uniform() < 0.6;
    const SoftMask m(a);
    const double t = rng.uniform(0.6, 0.97);
    const auto b = threshold(m, t);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) bin[y][x] = b(y, x), act[y][x] = m(y, x);
    Point2 c;
    const auto v = screen_map(m, b, object, c);
    if (b.count() == 0) {
      CHECK(v == CandidateVerdict::EmptyMap);
    } else {
      CHECK((v == CandidateVerdict::Accepted) == oracle::accept_map(act, bin, obj));
    }
  }
}

TEST_CASE("cluster_parts") {
  std::vector<CandidateMap> c;
  c.push_back(point_candidate("l", 0, 2, 2));
  c.push_back(point_candidate("l", 1, 3, 2));
  c.push_back(point_candidate("l", 2, 12, 12));
  c.push_back(point_candidate("m", 0, 13, 13));
  c.push_back(point_candidate("m", 1, 12, 13));

  SUBCASE("single part sums every candidate") {
    const auto one = cluster_parts(c, 1, 0.3, 0);
    REQUIRE(one.parts.size() == 1);
    CHECK(one.parts[0].member_maps.size() == 5);
    std::vector<Grid<float>> maps;
    for (const auto& x : c) maps.push_back(x.resized_map.grid());
    const auto expect = normalize(sum_maps(maps));
    for (std::size_t i = 0; i < expect.size(); ++i) CHECK(one.parts[0].soft_mask.grid().values()[i] == static_cast<float>(expect.values()[i]));
  }
  SUBCASE("two groups") {
    const auto two = cluster_parts(c, 2, 0.3, 0);
    REQUIRE(two.parts.size() == 2);
    std::set<MapRef> all;
    std::size_t total = 0;
    for (const auto& p : two.parts) {
      CHECK(p.area > 0);
      CHECK(p.area == p.binary_mask.count());
      CHECK(std::is_sorted(p.member_maps.begin(), p.member_maps.end()));
      total += p.member_maps.size();
      all.insert(p.member_maps.begin(), p.member_maps.end());
    }
    CHECK(total == 5);
    CHECK(all.size() == 5);
    const auto& small = two.parts[0].member_maps.size() == 2 ? two.parts[0] : two.parts[1];
    CHECK(small.member_maps == std::vector<MapRef>{{"l", 0}, {"l", 1}});
  }
  SUBCASE("permutation invariance") {
    const auto base = cluster_parts(c, 2, 0.3, 5);
    oracle::Rng rng(4);
    for (int trial = 0; trial < 10; ++trial) {
      auto shuffled = c;
      for (int i = static_cast<int>(shuffled.size()) - 1; i > 0; --i) std::swap(shuffled[i], shuffled[rng.integer(0, i)]);
      const auto p = cluster_parts(shuffled, 2, 0.3, 5);
      for (int k = 0; k < 2; ++k) {
        CHECK(p.parts[k].member_maps == base.parts[k].member_maps);
        CHECK(p.parts[k].soft_mask == base.parts[k].soft_mask);
        CHECK(p.parts[k].centroid == base.parts[k].centroid);
      }
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(cluster_parts(c, 6, 0.3, 0), Error);
    CHECK_THROWS_AS(cluster_parts(c, 0, 0.3, 0), Error);
    CHECK_THROWS_AS(cluster_parts(std::span<const CandidateMap>{}, 1, 0.3, 0), Error);
  }
}

TEST_CASE("planted head and body are localized") {
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto scene = synth::make_scene(seed);
    const auto obj = detect_object(scene.stack, synth::kObjectLayers, 0.3);
    const auto cands = select_candidates(scene.stack, synth::kPartLayers, 0.3, obj.binary);
    const auto parts = cluster_parts(cands, 2, 0.3, seed);
    const double d1 = distance(parts.parts[0].centroid, scene.head_center) + distance(parts.parts[1].centroid, scene.body_center);
    const double d2 = distance(parts.parts[1].centroid, scene.head_center) + distance(parts.parts[0].centroid, scene.body_center);
    const auto& head = d1 < d2 ? parts.parts[0] : parts.parts[1];
    const auto& body = d1 < d2 ? parts.parts[1] : parts.parts[0];
    hits += distance(head.centroid, scene.head_center) <= 5.0 && distance(body.centroid, scene.body_center) <= 5.0;
  }
  CHECK(hits >= 18);
}
