#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fmparts/geometry.hpp"
#include "fmparts/grid.hpp"

namespace fmparts {

/// All maps of one hidden layer. Maps share one (height, width).
struct LayerBlock {
  std::string name;
  std::vector<Grid<float>> maps;

  int map_height() const { return maps.empty() ? 0 : maps.front().height(); }
  int map_width() const { return maps.empty() ? 0 : maps.front().width(); }
};

/// Feature maps of the selected layers for one image, in on-disk order.
struct FeatureStack {
  std::vector<LayerBlock> layers;
  int input_height = 0;
  int input_width = 0;
  std::string image_id;

  const LayerBlock* find_layer(std::string_view name) const;
};

/// Throws InvalidStack / DuplicateLayer / NonFiniteValue when an invariant is broken.
void validate_stack(const FeatureStack& stack);

/// Bitwise comparison of dimensions, names and payload (image_id is not part of the format).
bool bitwise_equal(const FeatureStack& a, const FeatureStack& b);

// FMS1 layout, little-endian:
//   "FMS1" u32 version=1 u32 input_height u32 input_width u32 layer_count
//   per layer: u16 name_len, name bytes (UTF-8), u32 map_count, u32 map_height, u32 map_width,
//              map_count*map_height*map_width f32 values, row-major, map after map.
inline constexpr char kStackMagic[4] = {'F', 'M', 'S', '1'};
inline constexpr std::uint32_t kStackVersion = 1;

std::vector<std::uint8_t> encode_stack(const FeatureStack& stack);
/// image_id of the result is left empty; read_stack fills it from the file stem.
FeatureStack decode_stack(std::span<const std::uint8_t> bytes);

FeatureStack read_stack(const std::filesystem::path& path);
void write_stack(const FeatureStack& stack, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Manifest

inline constexpr int kNumAnnotatedParts = 15;

struct PartAnnotation {
  int part_id = 0;  // 1..15
  double x = 0.0;
  double y = 0.0;
  bool visible = false;
};

struct GroundTruth {
  Rect bbox;
  std::vector<PartAnnotation> parts;
};

struct ManifestEntry {
  std::string image_id;
  std::filesystem::path image_path;
  std::filesystem::path stack_path;
  std::optional<GroundTruth> ground_truth;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
};

/// Relative image/stack paths are resolved against the manifest's directory.
Manifest read_manifest(const std::filesystem::path& path);
Manifest parse_manifest(std::string_view json_text, const std::filesystem::path& base_dir = {});
std::string manifest_to_json(const Manifest& manifest);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// Part coordinates must lie inside the image when visible.
void validate_annotations(const ManifestEntry& entry, int image_width, int image_height);

// ---------------------------------------------------------------------------
// Images

/// 8-bit image, 1 (gray) or 3 (RGB) interleaved channels.
struct ImageGrid {
  int height = 0;
  int width = 0;
  int channels = 1;
  std::vector<std::uint8_t> pixels;

  std::uint8_t& at(int y, int x, int c = 0) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t at(int y, int x, int c = 0) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  bool operator==(const ImageGrid&) const = default;
};

ImageGrid decode_image(std::span<const std::uint8_t> bytes);
ImageGrid read_image(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_image(const ImageGrid& image);
/// P5 for one channel, P6 for three.
void write_image(const ImageGrid& image, const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace fmparts
