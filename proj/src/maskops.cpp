#include "fmparts/maskops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fmparts/error.hpp"

namespace fmparts {

SoftMask::SoftMask(Grid<float> grid) : grid_(std::move(grid)) {
  if (grid_.empty()) throw Error(ErrorCode::EmptyGrid, "soft mask is empty");
  for (float& v : grid_.values()) v = std::clamp(v, 0.0f, 1.0f);
}

SoftMask SoftMask::from_normalized(const Grid<double>& grid) {
  std::vector<float> values(grid.size());
  std::transform(grid.values().begin(), grid.values().end(), values.begin(),
                 [](double v) { return static_cast<float>(v); });
  return SoftMask(Grid<float>(grid.height(), grid.width(), std::move(values)));
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(grid.values().begin(), grid.values().end(), 1));
}

Grid<double> to_double(const Grid<float>& grid) {
  std::vector<double> values(grid.values().begin(), grid.values().end());
  return Grid<double>(grid.height(), grid.width(), std::move(values));
}

Grid<double> normalize(const Grid<double>& grid) {
  if (grid.empty()) throw Error(ErrorCode::EmptyGrid, "cannot normalize an empty grid");
  const auto [lo_it, hi_it] = std::minmax_element(grid.values().begin(), grid.values().end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  Grid<double> out(grid.height(), grid.width(), 0.0);
  if (hi == lo) return out;
  const double range = hi - lo;
  auto dst = out.values();
  auto src = grid.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = (src[i] - lo) / range;
  return out;
}

namespace {

// Source coordinate of output sample i under corner alignment.
double corner_aligned(int i, int in, int out) {
  if (out == 1) return 0.5 * (in - 1);
  return static_cast<double>(static_cast<long long>(i) * (in - 1)) / (out - 1);
}

}  // namespace

Grid<double> resize(const Grid<double>& grid, int out_h, int out_w, Interpolation mode) {
  if (grid.empty()) throw Error(ErrorCode::EmptyGrid, "cannot resize an empty grid");
  if (out_h < 1 || out_w < 1) throw Error(ErrorCode::DimensionMismatch, "target size must be >= 1");
  const int in_h = grid.height();
  const int in_w = grid.width();
  Grid<double> out(out_h, out_w);

  if (mode == Interpolation::Nearest) {
    for (int y = 0; y < out_h; ++y) {
      const int sy = std::min(in_h - 1, static_cast<int>((y + 0.5) * in_h / out_h));
      for (int x = 0; x < out_w; ++x) {
        const int sx = std::min(in_w - 1, static_cast<int>((x + 0.5) * in_w / out_w));
        out(y, x) = grid(sy, sx);
      }
    }
    return out;
  }

  std::vector<int> x0(out_w), x1(out_w);
  std::vector<double> fx(out_w);
  for (int x = 0; x < out_w; ++x) {
    const double sx = corner_aligned(x, in_w, out_w);
    x0[x] = std::min(static_cast<int>(std::floor(sx)), in_w - 1);
    x1[x] = std::min(x0[x] + 1, in_w - 1);
    fx[x] = sx - x0[x];
  }
  for (int y = 0; y < out_h; ++y) {
    const double sy = corner_aligned(y, in_h, out_h);
    const int y0 = std::min(static_cast<int>(std::floor(sy)), in_h - 1);
    const int y1 = std::min(y0 + 1, in_h - 1);
    const double fy = sy - y0;
    for (int x = 0; x < out_w; ++x) {
      const double top = grid(y0, x0[x]) + fx[x] * (grid(y0, x1[x]) - grid(y0, x0[x]));
      const double bottom = grid(y1, x0[x]) + fx[x] * (grid(y1, x1[x]) - grid(y1, x0[x]));
      double v = top + fy * (bottom - top);
      // Keep the convex-combination bound exact under rounding.
      const double lo = std::min({grid(y0, x0[x]), grid(y0, x1[x]), grid(y1, x0[x]), grid(y1, x1[x])});
      const double hi = std::max({grid(y0, x0[x]), grid(y0, x1[x]), grid(y1, x0[x]), grid(y1, x1[x])});
      out(y, x) = std::clamp(v, lo, hi);
    }
  }
  return out;
}

BinaryMask threshold(const SoftMask& mask, double t) {
  if (!(t > 0.0 && t < 1.0)) {
    throw Error(ErrorCode::ThresholdOutOfRange, "threshold " + std::to_string(t) + " not in (0,1)");
  }
  // Masks are single precision; comparing against the single-precision threshold keeps
  // a stored 0.3f from counting as "above 0.3".
  const float tf = static_cast<float>(t);
  BinaryMask out{Grid<std::uint8_t>(mask.height(), mask.width(), 0), t};
  auto src = mask.grid().values();
  auto dst = out.grid.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > tf ? 1 : 0;
  return out;
}

namespace {

Grid<double> pairwise_sum(std::span<const Grid<float>* const> maps) {
  if (maps.size() == 1) return to_double(*maps[0]);
  const std::size_t half = maps.size() / 2;
  Grid<double> left = pairwise_sum(maps.first(half));
  const Grid<double> right = pairwise_sum(maps.subspan(half));
  auto l = left.values();
  auto r = right.values();
  for (std::size_t i = 0; i < l.size(); ++i) l[i] += r[i];
  return left;
}

}  // namespace

Grid<double> sum_maps(std::span<const Grid<float>* const> maps) {
  if (maps.empty()) throw Error(ErrorCode::EmptyGrid, "no maps to sum");
  for (const auto* m : maps) {
    if (!m->same_shape(*maps[0])) throw Error(ErrorCode::DimensionMismatch, "maps differ in shape");
    if (m->empty()) throw Error(ErrorCode::EmptyGrid, "empty map in sum");
  }
  return pairwise_sum(maps);
}

Grid<double> sum_maps(std::span<const Grid<float>> maps) {
  std::vector<const Grid<float>*> ptrs;
  ptrs.reserve(maps.size());
  for (const auto& m : maps) ptrs.push_back(&m);
  return sum_maps(std::span<const Grid<float>* const>(ptrs));
}

Grid<double> normalized_at_input(const Grid<double>& grid, int input_h, int input_w,
                                 Interpolation mode) {
  return resize(normalize(grid), input_h, input_w, mode);
}

ObjectMasks detect_object(const FeatureStack& stack, std::span<const std::string> object_layers,
                          double t_object, Interpolation mode) {
  if (object_layers.empty()) throw Error(ErrorCode::EmptyLayerSet, "no object layers given");
  if (!(t_object > 0.0 && t_object < 1.0)) {
    throw Error(ErrorCode::ThresholdOutOfRange, "t_object not in (0,1)");
  }
  for (const auto& name : object_layers) {
    if (stack.find_layer(name) == nullptr) {
      throw Error(ErrorCode::UnknownLayer, "object layer '" + name + "' not in stack");
    }
  }

  std::optional<Grid<double>> product;
  for (const auto& layer : stack.layers) {
    if (std::find(object_layers.begin(), object_layers.end(), layer.name) == object_layers.end()) {
      continue;
    }
    Grid<double> layer_mask =
        normalized_at_input(sum_maps(layer.maps), stack.input_height, stack.input_width, mode);
    if (!product) {
      product = std::move(layer_mask);
    } else {
      auto p = product->values();
      auto m = layer_mask.values();
      for (std::size_t i = 0; i < p.size(); ++i) p[i] *= m[i];
    }
  }

  SoftMask soft = SoftMask::from_normalized(normalize(*product));
  BinaryMask binary = threshold(soft, t_object);
  return {std::move(soft), std::move(binary)};
}

std::optional<Rect> bounding_box(const BinaryMask& mask) {
  int x0 = std::numeric_limits<int>::max(), y0 = x0, x1 = -1, y1 = -1;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask(y, x)) continue;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  if (x1 < 0) return std::nullopt;
  return Rect{static_cast<double>(x0), static_cast<double>(y0), static_cast<double>(x1 - x0 + 1),
              static_cast<double>(y1 - y0 + 1)};
}

ImageGrid mask_to_image(const SoftMask& mask) {
  ImageGrid img{mask.height(), mask.width(), 1, {}};
  img.pixels.reserve(mask.grid().size());
  for (float v : mask.grid().values()) {
    img.pixels.push_back(static_cast<std::uint8_t>(std::floor(static_cast<double>(v) * 255.0 + 0.5)));
  }
  return img;
}

ImageGrid mask_to_image(const BinaryMask& mask) {
  ImageGrid img{mask.height(), mask.width(), 1, {}};
  img.pixels.reserve(mask.grid.size());
  for (auto v : mask.grid.values()) img.pixels.push_back(v ? 255 : 0);
  return img;
}

FeatureStack mask_to_stack(const SoftMask& mask, const std::string& layer_name) {
  FeatureStack stack;
  stack.input_height = mask.height();
  stack.input_width = mask.width();
  stack.layers.push_back({layer_name, {mask.grid()}});
  return stack;
}

}  // namespace fmparts
