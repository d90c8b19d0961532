#include "fmparts/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

namespace fmparts::synth {

namespace fs = std::filesystem;

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int index(int n) { return std::min(n - 1, static_cast<int>(uniform() * n)); }

 private:
  std::mt19937_64 gen_;
};

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

constexpr double kEdge = 1.0;
constexpr double kBodyWeight = 0.85;
constexpr double kTailWeight = 0.15;

struct Shape {
  Point2 head, body, u, n;
  double rh = 0, ra = 0, rb = 0, tail = 0;
  Point2 distractor;
  double distractor_radius = 8.0;

  // coordinates in the head->body frame, relative to the body centre
  std::pair<double, double> body_frame(Point2 p) const {
    const Point2 d = p - body;
    return {d.x * u.x + d.y * u.y, d.x * n.x + d.y * n.y};
  }
  double head_soft(Point2 p) const { return sigmoid((rh - distance(p, head)) / kEdge); }
  double body_soft(Point2 p) const {
    const auto [a, b] = body_frame(p);
    const double q = std::sqrt((a / ra) * (a / ra) + (b / rb) * (b / rb));
    return sigmoid((1.0 - q) * rb / kEdge);
  }
  double tail_half_width(double a) const { return 0.45 * rb * (1.0 - 0.5 * (a - ra) / tail); }
  double tail_soft(Point2 p) const {
    if (tail <= 0.0) return 0.0;
    const auto [a, b] = body_frame(p);
    const double start = ra - 3.0;
    return sigmoid((a - start) / kEdge) * sigmoid((ra + tail - a) / kEdge) *
           sigmoid((tail_half_width(std::max(a, ra)) - std::abs(b)) / kEdge);
  }
  double activation(Point2 p) const {
    return std::max({head_soft(p), kBodyWeight * body_soft(p), kTailWeight * tail_soft(p)});
  }
  double distractor_soft(Point2 p) const {
    return sigmoid((distractor_radius - distance(p, distractor)) / kEdge);
  }
};

double gaussian(Point2 p, Point2 c, Point2 u, double s_along, double s_across) {
  const Point2 d = p - c;
  const Point2 n{-u.y, u.x};
  const double a = (d.x * u.x + d.y * u.y) / s_along;
  const double b = (d.x * n.x + d.y * n.y) / s_across;
  return std::exp(-0.5 * (a * a + b * b));
}

template <typename F>
Grid<float> sample_map(const SceneOptions& o, Rng& rng, F&& f) {
  Grid<float> g(o.map_size, o.map_size);
  const double step = static_cast<double>(o.input_size - 1) / (o.map_size - 1);
  for (int i = 0; i < o.map_size; ++i) {
    for (int j = 0; j < o.map_size; ++j) {
      const double v = f(Point2{j * step, i * step}) + o.noise * rng.uniform();
      g(i, j) = static_cast<float>(v);
    }
  }
  return g;
}

// A point whose neighbourhood of `clear` pixels holds no object pixel.
Point2 background_point(const Grid<std::uint8_t>& truth, Rng& rng, double clear) {
  const int n = truth.width();
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const Point2 p{rng.uniform(10.0, n - 11.0), rng.uniform(10.0, n - 11.0)};
    bool ok = true;
    const int r = static_cast<int>(std::ceil(clear));
    const int cx = static_cast<int>(std::lround(p.x)), cy = static_cast<int>(std::lround(p.y));
    for (int y = std::max(0, cy - r); ok && y <= std::min(n - 1, cy + r); ++y) {
      for (int x = std::max(0, cx - r); x <= std::min(n - 1, cx + r); ++x) {
        if (truth(y, x) && distance(Point2{double(x), double(y)}, p) <= clear) {
          ok = false;
          break;
        }
      }
    }
    if (ok) return p;
  }
  return {6.0, 6.0};
}

Point2 jitter(Point2 c, Rng& rng, double amount) {
  return {c.x + rng.uniform(-amount, amount), c.y + rng.uniform(-amount, amount)};
}

}  // namespace

std::string scene_id(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "synth_%04d", index);
  return buf;
}

Scene make_scene(std::uint64_t seed, const SceneOptions& o) {
  Rng rng(seed * 0x9E3779B97F4A7C15ull + 0x632BE59BD9B4E019ull);
  const int N = o.input_size;
  const double scale = N / 128.0;

  Shape s;
  s.rh = rng.uniform(9.0, 12.0) * scale;
  s.ra = rng.uniform(20.0, 26.0) * scale;
  s.rb = rng.uniform(12.0, 15.0) * scale;
  const double tail_draw = rng.uniform(16.0, 22.0) * scale;
  s.tail = o.tail_bias ? tail_draw : 0.0;
  const double angle = rng.uniform(-35.0, 35.0) * std::numbers::pi / 180.0;
  const double facing = rng.uniform() < 0.5 ? 1.0 : -1.0;
  s.u = Point2{facing * std::cos(angle), std::sin(angle)};
  s.n = Point2{-s.u.y, s.u.x};
  const double sep = s.ra + 0.6 * s.rh;
  const Point2 c{rng.uniform(54.0, 74.0) * scale, rng.uniform(54.0, 74.0) * scale};
  // keep a tail inside the frame by moving the figure back
  const Point2 centre = c - (0.5 * s.tail) * s.u;
  s.head = centre - (0.5 * sep) * s.u;
  s.body = centre + (0.5 * sep) * s.u;
  const Point2 up = s.n.y <= 0.0 ? s.n : -1.0 * s.n;
  s.distractor = centre + (-38.0 * scale) * up;
  s.distractor_radius = 8.0 * scale;

  Scene scene;
  scene.head_center = s.head;
  scene.body_center = s.body;
  scene.axis = s.u;
  scene.head_radius = s.rh;
  scene.body_semi_major = s.ra;
  scene.body_semi_minor = s.rb;
  scene.tail_length = s.tail;

  scene.object_truth = Grid<std::uint8_t>(N, N);
  scene.body_tail_truth = Grid<std::uint8_t>(N, N);
  scene.distractor_truth = Grid<std::uint8_t>(N, N);
  for (int y = 0; y < N; ++y) {
    for (int x = 0; x < N; ++x) {
      const Point2 p{double(x), double(y)};
      const bool head = s.head_soft(p) > 0.5;
      const bool body_tail = s.body_soft(p) > 0.5 || s.tail_soft(p) > 0.5;
      scene.object_truth(y, x) = (head || body_tail) ? 1 : 0;
      scene.body_tail_truth(y, x) = body_tail ? 1 : 0;
      scene.distractor_truth(y, x) = s.distractor_soft(p) > 0.5 ? 1 : 0;
    }
  }
  scene.gt_bbox_mask = *bounding_box(BinaryMask{scene.object_truth, 0.5});

  FeatureStack& st = scene.stack;
  st.input_height = N;
  st.input_width = N;

  LayerBlock obj_a{"obj_a", {}};
  for (int m = 0; m < o.object_maps_a; ++m) {
    const double w = rng.uniform(0.7, 1.0);
    const double dw = m % 2 == 0 ? rng.uniform(0.6, 1.0) : 0.0;
    obj_a.maps.push_back(sample_map(o, rng, [&](Point2 p) { return w * s.activation(p) + dw * s.distractor_soft(p); }));
  }
  LayerBlock obj_b{"obj_b", {}};
  for (int m = 0; m < o.object_maps_b; ++m) {
    const double w = rng.uniform(0.7, 1.0);
    obj_b.maps.push_back(sample_map(o, rng, [&](Point2 p) { return w * s.activation(p); }));
  }

  std::vector<Grid<float>> part_maps;
  const double sh = s.rh / 1.55;
  for (int m = 0; m < o.head_maps; ++m) {
    const Point2 c0 = jitter(s.head, rng, 1.5 * scale);
    const double amp = rng.uniform(0.6, 1.0);
    part_maps.push_back(sample_map(o, rng, [&](Point2 p) { return amp * gaussian(p, c0, s.u, sh, sh); }));
  }
  for (int m = 0; m < o.body_maps; ++m) {
    const Point2 c0 = jitter(s.body, rng, 1.5 * scale);
    const double amp = rng.uniform(0.6, 1.0);
    part_maps.push_back(
        sample_map(o, rng, [&](Point2 p) { return amp * gaussian(p, c0, s.u, s.ra / 1.55, s.rb / 1.55); }));
  }
  for (int m = 0; m < o.two_blob_maps; ++m) {
    const Point2 on = jitter(m % 2 == 0 ? s.head : s.body, rng, 1.5 * scale);
    const Point2 off = background_point(scene.object_truth, rng, 12.0 * scale);
    const double amp = rng.uniform(0.6, 1.0);
    part_maps.push_back(sample_map(o, rng, [&](Point2 p) {
      return amp * gaussian(p, on, s.u, sh, sh) +
             amp * gaussian(p, off, s.u, 4.0 * scale, 4.0 * scale);
    }));
  }
  for (int m = 0; m < o.background_maps; ++m) {
    const Point2 off = background_point(scene.object_truth, rng, 12.0 * scale);
    const double amp = rng.uniform(0.6, 1.0);
    part_maps.push_back(sample_map(o, rng, [&](Point2 p) { return amp * gaussian(p, off, s.u, 5.0 * scale, 5.0 * scale); }));
  }
  // shuffle (Fisher-Yates with the portable draw), then deal alternately onto the two layers
  for (int i = static_cast<int>(part_maps.size()) - 1; i > 0; --i) {
    std::swap(part_maps[i], part_maps[rng.index(i + 1)]);
  }
  LayerBlock part_a{"part_a", {}}, part_b{"part_b", {}};
  for (std::size_t i = 0; i < part_maps.size(); ++i) {
    (i % 2 == 0 ? part_a : part_b).maps.push_back(std::move(part_maps[i]));
  }
  st.layers = {std::move(obj_a), std::move(obj_b), std::move(part_a), std::move(part_b)};

  const ImageDims dims{o.image_width, o.image_height};
  scene.image = ImageGrid{o.image_height, o.image_width, 1,
                          std::vector<std::uint8_t>(std::size_t(o.image_width) * o.image_height)};
  const double mx = static_cast<double>(N) / o.image_width;
  const double my = static_cast<double>(N) / o.image_height;
  for (int y = 0; y < o.image_height; ++y) {
    for (int x = 0; x < o.image_width; ++x) {
      const Point2 p{(x + 0.5) * mx - 0.5, (y + 0.5) * my - 0.5};
      const double a = std::max({s.head_soft(p), kBodyWeight * s.body_soft(p), 0.6 * s.tail_soft(p)});
      const double v = 40.0 + 180.0 * a + 12.0 * rng.uniform();
      scene.image.at(y, x) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    }
  }

  scene.ground_truth.bbox = scale_rect(scene.gt_bbox_mask, N, N, dims);
  const double rh = s.rh, ra = s.ra, rb = s.rb;
  const Point2 H = s.head, B = s.body, u = s.u;
  const Point2 tail_point = s.tail > 0.0 ? B + (ra + 0.5 * s.tail) * u : B + (0.9 * ra) * u;
  const std::array<Point2, kNumAnnotatedParts> where = {
      B + (-0.2 * ra) * u + (0.75 * rb) * up,   // back
      H + (-(rh + 1.5)) * u,                    // beak
      B + (0.1 * ra) * u + (-0.75 * rb) * up,   // belly
      B + (-0.55 * ra) * u + (-0.55 * rb) * up, // breast
      H + (0.7 * rh) * up,                      // crown
      H + (-0.55 * rh) * u + (0.45 * rh) * up,  // forehead
      H + (-0.35 * rh) * u + (0.2 * rh) * up,   // left eye
      B + (0.15 * ra) * u + (-0.95 * rb) * up,  // left leg
      B + (0.2 * ra) * u + (0.3 * rb) * up,     // left wing
      H + (0.65 * rh) * u + (0.45 * rh) * up,   // nape
      H + (-0.35 * rh) * u + (0.2 * rh) * up,   // right eye
      B + (0.3 * ra) * u + (-0.95 * rb) * up,   // right leg
      B + (0.3 * ra) * u + (0.2 * rb) * up,     // right wing
      tail_point,                               // tail
      H + (0.3 * rh) * u + (-0.7 * rh) * up,    // throat
  };
  for (int k = 0; k < kNumAnnotatedParts; ++k) {
    Point2 q = scale_point(where[k], N, N, dims);
    q.x = std::clamp(q.x, 0.0, o.image_width - 1.0);
    q.y = std::clamp(q.y, 0.0, o.image_height - 1.0);
    const bool visible = k == 10 ? false : (k == 6 ? true : rng.uniform() < 0.85);
    scene.ground_truth.parts.push_back({k + 1, q.x, q.y, visible});
  }
  return scene;
}

PipelineConfig scene_config() {
  PipelineConfig c;
  c.object_layers = kObjectLayers;
  c.part_layers = kPartLayers;
  return c;
}

Manifest write_corpus(const fs::path& dir, int count, std::uint64_t seed, const SceneOptions& options) {
  fs::create_directories(dir / "stacks");
  fs::create_directories(dir / "images");
  Manifest manifest;
  for (int i = 0; i < count; ++i) {
    Scene scene = make_scene(seed + static_cast<std::uint64_t>(i), options);
    const std::string id = scene_id(i);
    scene.stack.image_id = id;
    write_stack(scene.stack, dir / "stacks" / (id + ".fms"));
    write_image(scene.image, dir / "images" / (id + ".pgm"));
    manifest.entries.push_back({id, fs::path("images") / (id + ".pgm"), fs::path("stacks") / (id + ".fms"),
                                scene.ground_truth});
  }
  write_manifest(manifest, dir / "manifest.json");
  write_text_file(dir / "config.json", config_to_json(scene_config()).dump(2) + "\n");
  for (auto& e : manifest.entries) {
    e.image_path = dir / e.image_path;
    e.stack_path = dir / e.stack_path;
  }
  return manifest;
}

}  // namespace fmparts::synth
