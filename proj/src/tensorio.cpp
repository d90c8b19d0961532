#include "fmparts/tensorio.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <set>

#include "fmparts/error.hpp"
#include "json.hpp"

namespace fmparts {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

class ByteWriter {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void reserve(std::size_t n) { out_.reserve(n); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::size_t remaining() const { return data_.size() - pos_; }

  std::span<const std::uint8_t> take(std::size_t n) {
    if (remaining() < n) {
      throw Error(ErrorCode::TruncatedFile, "need " + std::to_string(n) + " bytes at offset " +
                                                std::to_string(pos_) + ", have " +
                                                std::to_string(remaining()));
    }
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint16_t u16() {
    auto s = take(2);
    return static_cast<std::uint16_t>(s[0] | (s[1] << 8));
  }
  std::uint32_t u32() {
    auto s = take(4);
    return static_cast<std::uint32_t>(s[0]) | (static_cast<std::uint32_t>(s[1]) << 8) |
           (static_cast<std::uint32_t>(s[2]) << 16) | (static_cast<std::uint32_t>(s[3]) << 24);
  }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

constexpr std::uint32_t kMaxDim = 1u << 16;

int checked_dim(std::uint32_t v, const char* what) {
  if (v == 0 || v > kMaxDim) {
    throw Error(ErrorCode::InvalidStack, std::string(what) + " out of range: " + std::to_string(v));
  }
  return static_cast<int>(v);
}

}  // namespace

const LayerBlock* FeatureStack::find_layer(std::string_view name) const {
  for (const auto& layer : layers) {
    if (layer.name == name) return &layer;
  }
  return nullptr;
}

void validate_stack(const FeatureStack& stack) {
  if (stack.input_height <= 0 || stack.input_width <= 0) {
    throw Error(ErrorCode::InvalidStack, "input dimensions must be positive");
  }
  if (stack.layers.empty()) throw Error(ErrorCode::InvalidStack, "stack has no layers");
  std::set<std::string_view> names;
  for (const auto& layer : stack.layers) {
    if (!names.insert(layer.name).second) {
      throw Error(ErrorCode::DuplicateLayer, "layer '" + layer.name + "' appears twice");
    }
    if (layer.name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw Error(ErrorCode::InvalidStack, "layer name too long");
    }
    if (layer.maps.empty()) {
      throw Error(ErrorCode::InvalidStack, "layer '" + layer.name + "' has no maps");
    }
    const int h = layer.map_height();
    const int w = layer.map_width();
    if (h <= 0 || w <= 0) {
      throw Error(ErrorCode::InvalidStack, "layer '" + layer.name + "' has empty maps");
    }
    for (const auto& map : layer.maps) {
      if (map.height() != h || map.width() != w) {
        throw Error(ErrorCode::InvalidStack, "layer '" + layer.name + "' mixes map shapes");
      }
      for (float v : map.values()) {
        if (!std::isfinite(v)) {
          throw Error(ErrorCode::NonFiniteValue, "layer '" + layer.name + "' holds NaN/Inf");
        }
      }
    }
  }
}

bool bitwise_equal(const FeatureStack& a, const FeatureStack& b) {
  if (a.input_height != b.input_height || a.input_width != b.input_width ||
      a.layers.size() != b.layers.size()) {
    return false;
  }
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    const auto& la = a.layers[l];
    const auto& lb = b.layers[l];
    if (la.name != lb.name || la.maps.size() != lb.maps.size()) return false;
    for (std::size_t m = 0; m < la.maps.size(); ++m) {
      const auto& ma = la.maps[m];
      const auto& mb = lb.maps[m];
      if (!ma.same_shape(mb)) return false;
      if (std::memcmp(ma.values().data(), mb.values().data(), ma.size() * sizeof(float)) != 0) {
        return false;
      }
    }
  }
  return true;
}

std::vector<std::uint8_t> encode_stack(const FeatureStack& stack) {
  validate_stack(stack);
  ByteWriter w;
  std::size_t payload = 0;
  for (const auto& layer : stack.layers) payload += layer.maps.size() * layer.maps[0].size() * 4;
  w.reserve(20 + payload + 16 * stack.layers.size());

  w.bytes(kStackMagic, 4);
  w.u32(kStackVersion);
  w.u32(static_cast<std::uint32_t>(stack.input_height));
  w.u32(static_cast<std::uint32_t>(stack.input_width));
  w.u32(static_cast<std::uint32_t>(stack.layers.size()));
  for (const auto& layer : stack.layers) {
    w.u16(static_cast<std::uint16_t>(layer.name.size()));
    w.bytes(layer.name.data(), layer.name.size());
    w.u32(static_cast<std::uint32_t>(layer.maps.size()));
    w.u32(static_cast<std::uint32_t>(layer.map_height()));
    w.u32(static_cast<std::uint32_t>(layer.map_width()));
    for (const auto& map : layer.maps) {
      for (float v : map.values()) w.f32(v);
    }
  }
  return w.take();
}

FeatureStack decode_stack(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (bytes.empty()) throw Error(ErrorCode::TruncatedFile, "empty file");
  const std::size_t head = std::min<std::size_t>(bytes.size(), 4);
  if (std::memcmp(bytes.data(), kStackMagic, head) != 0) {
    throw Error(ErrorCode::BadMagic, "missing FMS1 magic");
  }
  if (head < 4) throw Error(ErrorCode::TruncatedFile, "file ends inside the magic");
  r.take(4);
  const std::uint32_t version = r.u32();
  if (version != kStackVersion) {
    throw Error(ErrorCode::UnsupportedVersion, "version " + std::to_string(version));
  }
  FeatureStack stack;
  stack.input_height = checked_dim(r.u32(), "input_height");
  stack.input_width = checked_dim(r.u32(), "input_width");
  const std::uint32_t layer_count = r.u32();
  if (layer_count == 0) throw Error(ErrorCode::InvalidStack, "stack has no layers");

  std::set<std::string> names;
  for (std::uint32_t l = 0; l < layer_count; ++l) {
    LayerBlock layer;
    const std::uint16_t name_len = r.u16();
    auto name_bytes = r.take(name_len);
    layer.name.assign(name_bytes.begin(), name_bytes.end());
    if (!names.insert(layer.name).second) {
      throw Error(ErrorCode::DuplicateLayer, "layer '" + layer.name + "' appears twice");
    }
    const std::uint32_t map_count = r.u32();
    if (map_count == 0) throw Error(ErrorCode::InvalidStack, "layer '" + layer.name + "' has no maps");
    const int h = checked_dim(r.u32(), "map_height");
    const int w = checked_dim(r.u32(), "map_width");
    const std::size_t per_map = static_cast<std::size_t>(h) * w;
    // Check the whole payload size before allocating anything.
    if (r.remaining() / 4 / per_map < map_count) {
      throw Error(ErrorCode::TruncatedFile, "payload of layer '" + layer.name + "' is short");
    }
    layer.maps.reserve(map_count);
    for (std::uint32_t m = 0; m < map_count; ++m) {
      std::vector<float> values(per_map);
      auto raw = r.take(per_map * 4);
      for (std::size_t i = 0; i < per_map; ++i) {
        const std::uint32_t bits = static_cast<std::uint32_t>(raw[4 * i]) |
                                   (static_cast<std::uint32_t>(raw[4 * i + 1]) << 8) |
                                   (static_cast<std::uint32_t>(raw[4 * i + 2]) << 16) |
                                   (static_cast<std::uint32_t>(raw[4 * i + 3]) << 24);
        const float v = std::bit_cast<float>(bits);
        if (!std::isfinite(v)) {
          throw Error(ErrorCode::NonFiniteValue,
                      "layer '" + layer.name + "' map " + std::to_string(m) + " holds NaN/Inf");
        }
        values[i] = v;
      }
      layer.maps.emplace_back(h, w, std::move(values));
    }
    stack.layers.push_back(std::move(layer));
  }
  if (r.remaining() != 0) {
    throw Error(ErrorCode::TruncatedFile,
                std::to_string(r.remaining()) + " trailing bytes after declared payload");
  }
  return stack;
}

FeatureStack read_stack(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  FeatureStack stack = decode_stack(bytes);
  stack.image_id = path.stem().string();
  return stack;
}

void write_stack(const FeatureStack& stack, const std::filesystem::path& path) {
  write_file_bytes(path, encode_stack(stack));
}

// ---------------------------------------------------------------------------

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::IoFailure, "read failed: " + path.string());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

// ---------------------------------------------------------------------------
// Manifest

namespace {

using nlohmann::json;

[[noreturn]] void manifest_error(const std::string& msg) {
  throw Error(ErrorCode::InvalidManifest, msg);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_absolute() || base.empty()) return path;
  return base / path;
}

GroundTruth parse_ground_truth(const json& j, const std::string& id) {
  GroundTruth gt;
  const auto& bbox = j.at("bbox");
  if (!bbox.is_array() || bbox.size() != 4) manifest_error(id + ": bbox must be [x, y, w, h]");
  gt.bbox = {bbox[0].get<double>(), bbox[1].get<double>(), bbox[2].get<double>(),
             bbox[3].get<double>()};
  if (!(gt.bbox.w > 0.0) || !(gt.bbox.h > 0.0)) manifest_error(id + ": bbox needs w > 0 and h > 0");
  if (j.contains("parts")) {
    std::set<int> seen;
    for (const auto& p : j.at("parts")) {
      PartAnnotation a;
      a.part_id = p.at("part_id").get<int>();
      a.x = p.at("x").get<double>();
      a.y = p.at("y").get<double>();
      a.visible = p.value("visible", true);
      if (a.part_id < 1 || a.part_id > kNumAnnotatedParts) {
        manifest_error(id + ": part_id " + std::to_string(a.part_id) + " outside 1..15");
      }
      if (!seen.insert(a.part_id).second) {
        manifest_error(id + ": part_id " + std::to_string(a.part_id) + " repeated");
      }
      gt.parts.push_back(a);
    }
  }
  return gt;
}

}  // namespace

Manifest parse_manifest(std::string_view json_text, const std::filesystem::path& base_dir) {
  Manifest manifest;
  try {
    const json doc = json::parse(json_text);
    const json& entries = doc.is_array() ? doc : doc.at("entries");
    std::set<std::string> ids;
    for (const auto& e : entries) {
      ManifestEntry entry;
      entry.image_id = e.at("image_id").get<std::string>();
      if (entry.image_id.empty()) manifest_error("empty image_id");
      if (!ids.insert(entry.image_id).second) manifest_error("duplicate image_id " + entry.image_id);
      entry.image_path = resolve(base_dir, e.at("image_path").get<std::string>());
      entry.stack_path = resolve(base_dir, e.at("stack_path").get<std::string>());
      if (e.contains("ground_truth") && !e.at("ground_truth").is_null()) {
        entry.ground_truth = parse_ground_truth(e.at("ground_truth"), entry.image_id);
      }
      manifest.entries.push_back(std::move(entry));
    }
  } catch (const json::exception& ex) {
    manifest_error(ex.what());
  }
  return manifest;
}

Manifest read_manifest(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return parse_manifest(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                        path.parent_path());
}

std::string manifest_to_json(const Manifest& manifest) {
  json entries = json::array();
  for (const auto& e : manifest.entries) {
    json j;
    j["image_id"] = e.image_id;
    j["image_path"] = e.image_path.generic_string();
    j["stack_path"] = e.stack_path.generic_string();
    if (e.ground_truth) {
      json gt;
      gt["bbox"] = {e.ground_truth->bbox.x, e.ground_truth->bbox.y, e.ground_truth->bbox.w,
                    e.ground_truth->bbox.h};
      json parts = json::array();
      for (const auto& p : e.ground_truth->parts) {
        parts.push_back({{"part_id", p.part_id}, {"x", p.x}, {"y", p.y}, {"visible", p.visible}});
      }
      gt["parts"] = std::move(parts);
      j["ground_truth"] = std::move(gt);
    }
    entries.push_back(std::move(j));
  }
  return json{{"entries", std::move(entries)}}.dump(2) + "\n";
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  write_text_file(path, manifest_to_json(manifest));
}

void validate_annotations(const ManifestEntry& entry, int image_width, int image_height) {
  if (!entry.ground_truth) return;
  for (const auto& p : entry.ground_truth->parts) {
    if (!p.visible) continue;
    if (p.x < 0.0 || p.y < 0.0 || p.x > image_width || p.y > image_height) {
      manifest_error(entry.image_id + ": visible part " + std::to_string(p.part_id) +
                     " lies outside the image");
    }
  }
}

}  // namespace fmparts
