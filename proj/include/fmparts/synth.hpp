#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fmparts/pipeline.hpp"

// Planted bird-like scenes: a head disc and a body ellipse (optionally with a weakly activated
// tail) rendered into object-layer maps, plus part-layer maps of known centre.
namespace fmparts::synth {

struct SceneOptions {
  int input_size = 128;  // mask resolution (square)
  int map_size = 32;
  int image_width = 256;
  int image_height = 192;
  int object_maps_a = 6;  // layer obj_a: object plus a distractor blob in some maps
  int object_maps_b = 4;  // layer obj_b: object only
  int head_maps = 12;
  int body_maps = 16;
  int two_blob_maps = 4;
  int background_maps = 6;
  bool tail_bias = false;
  double noise = 0.02;
};

struct Scene {
  FeatureStack stack;
  ImageGrid image;
  // Mask coordinates, pixel centres at integers.
  Point2 head_center;
  Point2 body_center;
  Point2 axis;  // unit vector head -> body
  double head_radius = 0.0;
  double body_semi_major = 0.0;
  double body_semi_minor = 0.0;
  double tail_length = 0.0;  // 0 unless tail_bias
  Grid<std::uint8_t> object_truth;     // head, body and tail
  Grid<std::uint8_t> body_tail_truth;  // body and tail
  Grid<std::uint8_t> distractor_truth;
  Rect gt_bbox_mask;
  GroundTruth ground_truth;  // image coordinates
};

inline const std::vector<std::string> kObjectLayers{"obj_a", "obj_b"};
inline const std::vector<std::string> kPartLayers{"part_a", "part_b"};

Scene make_scene(std::uint64_t seed, const SceneOptions& options = {});

/// Pipeline configuration matching the planted layer names.
PipelineConfig scene_config();

/// Writes stacks/<id>.fms, images/<id>.pgm, manifest.json and config.json under `dir`.
/// Scene i uses seed + i; ids are synth_0000, synth_0001, ...
Manifest write_corpus(const std::filesystem::path& dir, int count, std::uint64_t seed,
                      const SceneOptions& options = {});

std::string scene_id(int index);

}  // namespace fmparts::synth
