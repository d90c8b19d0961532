#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fmparts/geometry.hpp"
#include "fmparts/grid.hpp"
#include "fmparts/tensorio.hpp"

namespace fmparts {

enum class Interpolation { Bilinear, Nearest };

/// Saliency mask: values in [0, 1], stored single precision.
class SoftMask {
 public:
  SoftMask() = default;
  /// Throws EmptyGrid for an empty grid; values are clamped into [0, 1].
  explicit SoftMask(Grid<float> grid);
  static SoftMask from_normalized(const Grid<double>& grid);

  const Grid<float>& grid() const noexcept { return grid_; }
  int height() const noexcept { return grid_.height(); }
  int width() const noexcept { return grid_.width(); }
  float operator()(int y, int x) const { return grid_(y, x); }
  bool operator==(const SoftMask&) const = default;

 private:
  Grid<float> grid_;
};

struct BinaryMask {
  Grid<std::uint8_t> grid;  // exactly 0 or 1
  double threshold_used = 0.0;

  int height() const noexcept { return grid.height(); }
  int width() const noexcept { return grid.width(); }
  bool operator()(int y, int x) const { return grid(y, x) != 0; }
  std::size_t count() const;
};

Grid<double> to_double(const Grid<float>& grid);

/// (x - min) / (max - min); a constant grid maps to all zeros.
Grid<double> normalize(const Grid<double>& grid);

/// Corner-aligned bilinear interpolation (nearest-neighbour for ablations).
Grid<double> resize(const Grid<double>& grid, int out_h, int out_w,
                    Interpolation mode = Interpolation::Bilinear);
inline Grid<double> resize_bilinear(const Grid<double>& grid, int out_h, int out_w) {
  return resize(grid, out_h, out_w, Interpolation::Bilinear);
}

/// Strict comparison: a pixel is positive iff its value exceeds t. t must lie in (0, 1).
BinaryMask threshold(const SoftMask& mask, double t);

/// Elementwise sum in double precision using pairwise accumulation over the map sequence.
Grid<double> sum_maps(std::span<const Grid<float>> maps);
Grid<double> sum_maps(std::span<const Grid<float>* const> maps);

/// normalize -> resize to the stack input resolution.
Grid<double> normalized_at_input(const Grid<double>& grid, int input_h, int input_w,
                                 Interpolation mode);

struct ObjectMasks {
  SoftMask soft;
  BinaryMask binary;
};

/// Object saliency: per layer sum all maps, normalize, resize to the input resolution;
/// multiply across layers; normalize; threshold. Layers are consumed in stack order.
ObjectMasks detect_object(const FeatureStack& stack, std::span<const std::string> object_layers,
                          double t_object, Interpolation mode = Interpolation::Bilinear);

/// Tight bounding box of the positive pixels in pixel-edge coordinates
/// (a single pixel at (x, y) yields {x, y, 1, 1}).
std::optional<Rect> bounding_box(const BinaryMask& mask);

/// Gray image with values scaled by 255 and rounded half up.
ImageGrid mask_to_image(const SoftMask& mask);
ImageGrid mask_to_image(const BinaryMask& mask);
/// Single-layer, single-map stack for lossless inspection.
FeatureStack mask_to_stack(const SoftMask& mask, const std::string& layer_name);

}  // namespace fmparts
