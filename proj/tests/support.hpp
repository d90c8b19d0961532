#pragma once
// Independent reference implementations and random generators shared by the unit and
// acceptance suites. Nothing here calls into the library's algorithms.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "fmparts/grid.hpp"
#include "fmparts/geometry.hpp"
#include "fmparts/tensorio.hpp"

namespace oracle {

using fmparts::FeatureStack;
using fmparts::Grid;
using fmparts::LayerBlock;
using fmparts::Point2;

inline std::filesystem::path data_dir() { return FMPARTS_TEST_DATA; }

struct Rng {
  std::mt19937_64 gen;
  explicit Rng(std::uint64_t seed) : gen(seed) {}
  double uniform(double lo = 0.0, double hi = 1.0) {
    return lo + (hi - lo) * (static_cast<double>(gen() >> 11) * 0x1.0p-53);
  }
  int integer(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(uniform() * (hi - lo + 1)) % (hi - lo + 1);
  }
};

// --- object saliency, written straight from the definitions -------------------------------

using Plane = std::vector<std::vector<double>>;

inline Plane normalized(const Plane& p) {
  double lo = p[0][0], hi = p[0][0];
  for (const auto& row : p)
    for (double v : row) lo = std::min(lo, v), hi = std::max(hi, v);
  Plane out = p;
  for (auto& row : out)
    for (double& v : row) v = hi > lo ? (v - lo) / (hi - lo) : 0.0;
  return out;
}

inline Plane upsample(const Plane& p, int H, int W) {
  const int h = static_cast<int>(p.size()), w = static_cast<int>(p[0].size());
  Plane out(H, std::vector<double>(W));
  for (int Y = 0; Y < H; ++Y) {
    for (int X = 0; X < W; ++X) {
      const double sy = H == 1 ? (h - 1) / 2.0 : Y * double(h - 1) / (H - 1);
      const double sx = W == 1 ? (w - 1) / 2.0 : X * double(w - 1) / (W - 1);
      const int y0 = std::min(int(sy), h - 1), x0 = std::min(int(sx), w - 1);
      const int y1 = std::min(y0 + 1, h - 1), x1 = std::min(x0 + 1, w - 1);
      const double fy = sy - y0, fx = sx - x0;
      out[Y][X] = (1 - fy) * (1 - fx) * p[y0][x0] + (1 - fy) * fx * p[y0][x1] + fy * (1 - fx) * p[y1][x0] +
                  fy * fx * p[y1][x1];
    }
  }
  return out;
}

inline Plane object_saliency(const FeatureStack& s, const std::vector<std::string>& names) {
  Plane prod(s.input_height, std::vector<double>(s.input_width, 1.0));
  for (const auto& layer : s.layers) {
    if (std::find(names.begin(), names.end(), layer.name) == names.end()) continue;
    const int h = layer.maps[0].height(), w = layer.maps[0].width();
    Plane sum(h, std::vector<double>(w, 0.0));
    for (const auto& m : layer.maps)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) sum[y][x] += m(y, x);
    const Plane up = upsample(normalized(sum), s.input_height, s.input_width);
    for (int y = 0; y < s.input_height; ++y)
      for (int x = 0; x < s.input_width; ++x) prod[y][x] *= up[y][x];
  }
  return normalized(prod);
}

// --- part-map constraints ----------------------------------------------------------------

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) { return parent[a] == a ? a : parent[a] = find(parent[a]); }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

inline int count_components(const std::vector<std::vector<int>>& bin) {
  const int h = static_cast<int>(bin.size()), w = static_cast<int>(bin[0].size());
  UnionFind uf(h * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!bin[y][x]) continue;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int yy = y + dy, xx = x + dx;
          if (yy >= 0 && yy < h && xx >= 0 && xx < w && bin[yy][xx]) uf.unite(y * w + x, yy * w + xx);
        }
    }
  std::vector<int> roots;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (bin[y][x]) roots.push_back(uf.find(y * w + x));
  std::sort(roots.begin(), roots.end());
  return static_cast<int>(std::unique(roots.begin(), roots.end()) - roots.begin());
}

// true iff one region whose activation-weighted centroid rounds onto an object pixel
inline bool accept_map(const Plane& act, const std::vector<std::vector<int>>& bin,
                       const std::vector<std::vector<int>>& object) {
  if (count_components(bin) != 1) return false;
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t y = 0; y < bin.size(); ++y)
    for (std::size_t x = 0; x < bin[0].size(); ++x)
      if (bin[y][x]) sw += act[y][x], sx += act[y][x] * x, sy += act[y][x] * y;
  const long cx = std::lround(sx / sw), cy = std::lround(sy / sw);
  return object[cy][cx] != 0;
}

// --- clustering ---------------------------------------------------------------------------

inline double partition_sse(const std::vector<Point2>& pts, const std::vector<int>& lab, int k) {
  std::vector<double> sx(k, 0), sy(k, 0), n(k, 0);
  for (std::size_t i = 0; i < pts.size(); ++i) sx[lab[i]] += pts[i].x, sy[lab[i]] += pts[i].y, n[lab[i]] += 1;
  double sse = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double dx = pts[i].x - sx[lab[i]] / n[lab[i]], dy = pts[i].y - sy[lab[i]] / n[lab[i]];
    sse += dx * dx + dy * dy;
  }
  return sse;
}

// Minimum SSE over every partition into exactly k non-empty groups (restricted growth strings).
inline double best_partition_sse(const std::vector<Point2>& pts, int k) {
  const int n = static_cast<int>(pts.size());
  std::vector<int> lab(n, 0);
  double best = INFINITY;
  std::function<void(int, int)> rec = [&](int i, int used) {
    if (n - i < k - used) return;
    if (i == n) {
      if (used == k) best = std::min(best, partition_sse(pts, lab, k));
      return;
    }
    for (int c = 0; c <= std::min(used, k - 1); ++c) {
      lab[i] = c;
      rec(i + 1, std::max(used, c + 1));
    }
  };
  rec(0, 0);
  return best;
}

// --- random stacks ------------------------------------------------------------------------

inline FeatureStack random_stack(Rng& rng, int max_layers, int max_maps, int max_dim, int input_dim) {
  FeatureStack s;
  s.input_height = rng.integer(1, input_dim);
  s.input_width = rng.integer(1, input_dim);
  const int layers = rng.integer(1, max_layers);
  for (int l = 0; l < layers; ++l) {
    LayerBlock b;
    b.name = "layer_" + std::to_string(l);
    const int maps = rng.integer(1, max_maps), h = rng.integer(1, max_dim), w = rng.integer(1, max_dim);
    for (int m = 0; m < maps; ++m) {
      Grid<float> g(h, w);
      for (float& v : g.values()) v = static_cast<float>(rng.uniform(-1.0, 4.0));
      b.maps.push_back(std::move(g));
    }
    s.layers.push_back(std::move(b));
  }
  return s;
}

// Blob-shaped maps so detection has structure: a few Gaussians plus noise.
inline FeatureStack planted_stack(Rng& rng, int layers, int maps, int dim, int input_dim) {
  FeatureStack s;
  s.input_height = input_dim;
  s.input_width = input_dim;
  const double cx = rng.uniform(0.3, 0.7) * (dim - 1), cy = rng.uniform(0.3, 0.7) * (dim - 1);
  for (int l = 0; l < layers; ++l) {
    LayerBlock b;
    b.name = "layer_" + std::to_string(l);
    for (int m = 0; m < maps; ++m) {
      Grid<float> g(dim, dim);
      const double bx = cx + rng.uniform(-2, 2), by = cy + rng.uniform(-2, 2), sig = rng.uniform(1.5, 4.0);
      const double ox = rng.uniform(0, dim - 1), oy = rng.uniform(0, dim - 1), amp = rng.uniform(0, 0.6);
      for (int y = 0; y < dim; ++y)
        for (int x = 0; x < dim; ++x) {
          const double d1 = (x - bx) * (x - bx) + (y - by) * (y - by);
          const double d2 = (x - ox) * (x - ox) + (y - oy) * (y - oy);
          g(y, x) = static_cast<float>(std::exp(-d1 / (2 * sig * sig)) + amp * std::exp(-d2 / 8.0) +
                                       0.05 * rng.uniform());
        }
      b.maps.push_back(std::move(g));
    }
    s.layers.push_back(std::move(b));
  }
  return s;
}

inline std::vector<std::uint8_t> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Relative path -> bytes of every regular file below `root`.
inline std::map<std::string, std::vector<std::uint8_t>> tree_bytes(const std::filesystem::path& root) {
  std::map<std::string, std::vector<std::uint8_t>> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[std::filesystem::relative(e.path(), root).generic_string()] = slurp(e.path());
  }
  return out;
}

}  // namespace oracle
