#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "fmparts/geometry.hpp"
#include "fmparts/maskops.hpp"
#include "fmparts/partdetect.hpp"
#include "fmparts/tensorio.hpp"

namespace fmparts {

/// Moment-equivalent ellipse. Orientation is the major-axis angle measured from +x towards +y
/// (image coordinates, y down), in (-pi/2, pi/2].
struct Ellipse {
  Point2 center;
  double semi_major = 0.0;
  double semi_minor = 0.0;
  double orientation = 0.0;

  Point2 major_axis() const;  // unit vector
  std::array<Point2, 2> foci() const;
};

enum class PoseVariant { FocalVector, HeadBodyVector, TwoVector };

std::string_view to_string(PoseVariant variant) noexcept;
PoseVariant parse_pose_variant(std::string_view name);

struct Pose {
  Point2 object_centroid;
  Ellipse ellipse;
  PoseVariant variant = PoseVariant::TwoVector;
  std::vector<Point2> anchors;  // start point of each vector
  std::vector<Point2> vectors;  // displacements in mask pixels
};

/// Ellipse sharing the region's centroid, second central moments (pixels as unit squares) and
/// pixel area. Throws DegenerateRegion for fewer than 3 pixels or a collinear region.
Ellipse fit_ellipse(const BinaryMask& mask);

/// Index of the smallest part by area, ties broken by centroid y then x.
std::size_t head_part_index(const PartDetection& parts);

/// FocalVector: focus nearer the head part to the other focus. HeadBodyVector: head centroid to
/// body centroid. TwoVector: object weighted centroid to every part centroid.
Pose estimate_pose(const SoftMask& object_soft, const BinaryMask& object_binary,
                   const PartDetection& parts, PoseVariant variant);

/// Ascending binary-mask area; ties by centroid y, then x.
PartDetection order_parts(PartDetection parts);

struct CropConfig {
  double margin = 0.05;
  double shift = 0.5;
};

enum class CropKind { Object, Part };

struct CropRegion {
  Rect rect;  // original-image pixels
  CropKind kind = CropKind::Object;
  int part_index = -1;  // 0-based, Part kind only
  bool shifted = false;
};

struct ImageDims {
  int width = 0;
  int height = 0;
};

/// Grows width and height by `margin` (fraction), centred.
Rect extend_margin(const Rect& r, double margin);
/// Moves the rectangle by shift*v and additionally pushes the edges facing v outwards by
/// shift*|v_x| and shift*|v_y|.
Rect shift_along(const Rect& r, Point2 v, double shift);
Rect scale_rect(const Rect& r, int mask_w, int mask_h, ImageDims image);
/// Pixel-centre coordinates: mask pixel centres map onto the matching image pixel centres.
Point2 scale_point(Point2 p, int mask_w, int mask_h, ImageDims image);
Rect clamp_rect(const Rect& r, ImageDims image);

/// Per-part displacement used for shifted cropping. TwoVector uses each part's own vector;
/// single-vector variants push the head by -v/2 and the body by +v/2.
std::vector<Point2> part_shift_vectors(const Pose& pose, const PartDetection& parts);

/// Object crop first, then one crop per part in part order.
std::vector<CropRegion> crop_regions(const BinaryMask& object_binary, const PartDetection& parts,
                                     const Pose& pose, ImageDims image, const CropConfig& config);

ImageGrid crop_image(const ImageGrid& image, const Rect& rect);

/// Ellipse, centroids, pose vectors and crop rectangles drawn over an RGB copy of the image.
ImageGrid render_overlay(const ImageGrid& image, int mask_w, int mask_h, const Pose& pose,
                         const PartDetection& parts, std::span<const CropRegion> crops);

}  // namespace fmparts
