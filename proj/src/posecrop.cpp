#include "fmparts/posecrop.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "fmparts/error.hpp"

namespace fmparts {

Point2 Ellipse::major_axis() const { return {std::cos(orientation), std::sin(orientation)}; }

std::array<Point2, 2> Ellipse::foci() const {
  const double c = std::sqrt(std::max(0.0, semi_major * semi_major - semi_minor * semi_minor));
  const Point2 u = major_axis();
  return {center - c * u, center + c * u};
}

std::string_view to_string(PoseVariant variant) noexcept {
  switch (variant) {
    case PoseVariant::FocalVector: return "focal-vector";
    case PoseVariant::HeadBodyVector: return "head-body";
    case PoseVariant::TwoVector: return "two-vector";
  }
  return "unknown";
}

PoseVariant parse_pose_variant(std::string_view name) {
  if (name == "focal-vector") return PoseVariant::FocalVector;
  if (name == "head-body") return PoseVariant::HeadBodyVector;
  if (name == "two-vector") return PoseVariant::TwoVector;
  throw Error(ErrorCode::InvalidConfig, "unknown pose variant '" + std::string(name) + "'");
}

Ellipse fit_ellipse(const BinaryMask& mask) {
  double n = 0.0, sx = 0.0, sy = 0.0;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask(y, x)) continue;
      n += 1.0;
      sx += x;
      sy += y;
    }
  }
  if (n < 3.0) throw Error(ErrorCode::DegenerateRegion, "region needs at least 3 pixels");
  const double cx = sx / n;
  const double cy = sy / n;
  double mu20 = 0.0, mu02 = 0.0, mu11 = 0.0;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask(y, x)) continue;
      const double dx = x - cx;
      const double dy = y - cy;
      mu20 += dx * dx;
      mu02 += dy * dy;
      mu11 += dx * dy;
    }
  }
  mu20 /= n;
  mu02 /= n;
  mu11 /= n;

  const double half_trace = 0.5 * (mu20 + mu02);
  const double root = std::hypot(0.5 * (mu20 - mu02), mu11);
  if (half_trace - root <= 1e-9 * std::max(1.0, half_trace)) {
    throw Error(ErrorCode::DegenerateRegion, "region pixels are collinear");
  }
  // Each pixel is a unit square: its own second moment adds 1/12 along both axes.
  const double lambda1 = half_trace + root + 1.0 / 12.0;
  const double lambda2 = half_trace - root + 1.0 / 12.0;
  const double scale = std::sqrt(n / (std::numbers::pi * std::sqrt(lambda1 * lambda2)));

  Ellipse e;
  e.center = {cx, cy};
  e.semi_major = std::sqrt(lambda1) * scale;
  e.semi_minor = std::sqrt(lambda2) * scale;
  e.orientation = 0.5 * std::atan2(2.0 * mu11, mu20 - mu02);
  if (e.orientation <= -std::numbers::pi / 2) e.orientation += std::numbers::pi;
  return e;
}

namespace {

bool smaller_part(const Part& a, const Part& b) {
  if (a.area != b.area) return a.area < b.area;
  if (a.centroid.y != b.centroid.y) return a.centroid.y < b.centroid.y;
  return a.centroid.x < b.centroid.x;
}

}  // namespace

std::size_t head_part_index(const PartDetection& parts) {
  if (parts.parts.empty()) throw Error(ErrorCode::WrongPartCount, "no parts");
  std::size_t best = 0;
  for (std::size_t i = 1; i < parts.parts.size(); ++i) {
    if (smaller_part(parts.parts[i], parts.parts[best])) best = i;
  }
  return best;
}

Pose estimate_pose(const SoftMask& object_soft, const BinaryMask& object_binary,
                   const PartDetection& parts, PoseVariant variant) {
  if (variant == PoseVariant::TwoVector) {
    if (parts.parts.empty()) throw Error(ErrorCode::WrongPartCount, "two-vector pose needs parts");
  } else if (parts.parts.size() != 2) {
    throw Error(ErrorCode::WrongPartCount, std::string(to_string(variant)) + " pose needs 2 parts, got " +
                                               std::to_string(parts.parts.size()));
  }
  if (object_binary.count() == 0) throw Error(ErrorCode::DegenerateRegion, "object mask is empty");

  Pose pose;
  pose.variant = variant;
  pose.ellipse = fit_ellipse(object_binary);
  pose.object_centroid = weighted_centroid(object_soft, object_binary);

  switch (variant) {
    case PoseVariant::TwoVector:
      for (const auto& part : parts.parts) {
        pose.anchors.push_back(pose.object_centroid);
        pose.vectors.push_back(part.centroid - pose.object_centroid);
      }
      break;
    case PoseVariant::HeadBodyVector: {
      const std::size_t head = head_part_index(parts);
      const Point2 h = parts.parts[head].centroid;
      const Point2 b = parts.parts[1 - head].centroid;
      pose.anchors.push_back(h);
      pose.vectors.push_back(b - h);
      break;
    }
    case PoseVariant::FocalVector: {
      const Point2 h = parts.parts[head_part_index(parts)].centroid;
      auto [f0, f1] = pose.ellipse.foci();
      if (distance(f1, h) < distance(f0, h)) std::swap(f0, f1);
      pose.anchors.push_back(f0);
      pose.vectors.push_back(f1 - f0);
      break;
    }
  }
  return pose;
}

PartDetection order_parts(PartDetection parts) {
  std::stable_sort(parts.parts.begin(), parts.parts.end(), smaller_part);
  return parts;
}

Rect extend_margin(const Rect& r, double margin) {
  const double dw = r.w * margin;
  const double dh = r.h * margin;
  return {r.x - 0.5 * dw, r.y - 0.5 * dh, r.w + dw, r.h + dh};
}

Rect shift_along(const Rect& r, Point2 v, double shift) {
  const Point2 d = shift * v;
  Rect out{r.x + d.x, r.y + d.y, r.w, r.h};
  if (d.x > 0.0) {
    out.w += d.x;
  } else {
    out.x += d.x;
    out.w -= d.x;
  }
  if (d.y > 0.0) {
    out.h += d.y;
  } else {
    out.y += d.y;
    out.h -= d.y;
  }
  return out;
}

Rect scale_rect(const Rect& r, int mask_w, int mask_h, ImageDims image) {
  const double sx = static_cast<double>(image.width) / mask_w;
  const double sy = static_cast<double>(image.height) / mask_h;
  return {r.x * sx, r.y * sy, r.w * sx, r.h * sy};
}

Point2 scale_point(Point2 p, int mask_w, int mask_h, ImageDims image) {
  const double sx = static_cast<double>(image.width) / mask_w;
  const double sy = static_cast<double>(image.height) / mask_h;
  return {(p.x + 0.5) * sx - 0.5, (p.y + 0.5) * sy - 0.5};
}

Rect clamp_rect(const Rect& r, ImageDims image) {
  return intersect(r, Rect{0.0, 0.0, static_cast<double>(image.width),
                           static_cast<double>(image.height)});
}

std::vector<Point2> part_shift_vectors(const Pose& pose, const PartDetection& parts) {
  const std::size_t n = parts.parts.size();
  if (pose.variant == PoseVariant::TwoVector) {
    if (pose.vectors.size() != n) {
      throw Error(ErrorCode::WrongPartCount, "pose has " + std::to_string(pose.vectors.size()) +
                                                 " vectors for " + std::to_string(n) + " parts");
    }
    return pose.vectors;
  }
  if (n != 2 || pose.vectors.size() != 1) {
    throw Error(ErrorCode::WrongPartCount, "single-vector pose needs exactly 2 parts");
  }
  const std::size_t head = head_part_index(parts);
  std::vector<Point2> out(2);
  out[head] = -0.5 * pose.vectors[0];
  out[1 - head] = 0.5 * pose.vectors[0];
  return out;
}

std::vector<CropRegion> crop_regions(const BinaryMask& object_binary, const PartDetection& parts,
                                     const Pose& pose, ImageDims image, const CropConfig& config) {
  if (image.width < 1 || image.height < 1) {
    throw Error(ErrorCode::DimensionMismatch, "image must be at least 1x1");
  }
  const int mw = object_binary.width();
  const int mh = object_binary.height();
  const auto finish = [&](const Rect& mask_rect, CropKind kind, int index, bool shifted) {
    const Rect r = clamp_rect(scale_rect(mask_rect, mw, mh, image), image);
    if (!(r.w > 0.0) || !(r.h > 0.0)) {
      throw Error(ErrorCode::EmptyMask, "crop falls outside the image");
    }
    return CropRegion{r, kind, index, shifted};
  };

  std::vector<CropRegion> crops;
  const auto object_box = bounding_box(object_binary);
  if (!object_box) throw Error(ErrorCode::EmptyMask, "object mask is empty");
  crops.push_back(finish(extend_margin(*object_box, config.margin), CropKind::Object, -1, false));

  const auto shifts = parts.parts.empty() ? std::vector<Point2>{} : part_shift_vectors(pose, parts);
  for (std::size_t k = 0; k < parts.parts.size(); ++k) {
    const auto& part = parts.parts[k];
    if (!part.binary_mask.grid.same_shape(object_binary.grid)) {
      throw Error(ErrorCode::DimensionMismatch, "part mask differs from object mask resolution");
    }
    const auto box = bounding_box(part.binary_mask);
    if (!box) throw Error(ErrorCode::EmptyMask, "part " + std::to_string(k + 1) + " mask is empty");
    Rect r = extend_margin(*box, config.margin);
    const bool shifted = config.shift != 0.0 && norm(shifts[k]) > 0.0;
    if (shifted) r = shift_along(r, shifts[k], config.shift);
    crops.push_back(finish(r, CropKind::Part, static_cast<int>(k), shifted));
  }
  return crops;
}

ImageGrid crop_image(const ImageGrid& image, const Rect& rect) {
  const int x0 = std::clamp(static_cast<int>(std::floor(rect.x)), 0, image.width);
  const int y0 = std::clamp(static_cast<int>(std::floor(rect.y)), 0, image.height);
  const int x1 = std::clamp(static_cast<int>(std::ceil(rect.right())), 0, image.width);
  const int y1 = std::clamp(static_cast<int>(std::ceil(rect.bottom())), 0, image.height);
  if (x1 <= x0 || y1 <= y0) throw Error(ErrorCode::EmptyMask, "crop is empty");
  ImageGrid out{y1 - y0, x1 - x0, image.channels, {}};
  out.pixels.reserve(static_cast<std::size_t>(out.width) * out.height * out.channels);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      for (int c = 0; c < image.channels; ++c) out.pixels.push_back(image.at(y, x, c));
    }
  }
  return out;
}

namespace {

using Rgb = std::array<std::uint8_t, 3>;

void plot(ImageGrid& img, double x, double y, Rgb color) {
  const int ix = static_cast<int>(std::lround(x));
  const int iy = static_cast<int>(std::lround(y));
  if (ix < 0 || iy < 0 || ix >= img.width || iy >= img.height) return;
  for (int c = 0; c < 3; ++c) img.at(iy, ix, c) = color[c];
}

void line(ImageGrid& img, Point2 a, Point2 b, Rgb color) {
  const int steps = std::max(1, static_cast<int>(std::ceil(2.0 * distance(a, b))));
  for (int i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    plot(img, a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), color);
  }
}

void cross(ImageGrid& img, Point2 p, Rgb color) {
  line(img, {p.x - 3, p.y}, {p.x + 3, p.y}, color);
  line(img, {p.x, p.y - 3}, {p.x, p.y + 3}, color);
}

}  // namespace

ImageGrid render_overlay(const ImageGrid& image, int mask_w, int mask_h, const Pose& pose,
                         const PartDetection& parts, std::span<const CropRegion> crops) {
  ImageGrid out{image.height, image.width, 3, {}};
  out.pixels.resize(static_cast<std::size_t>(image.width) * image.height * 3);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = image.at(y, x, image.channels == 3 ? c : 0);
    }
  }
  const ImageDims dims{image.width, image.height};
  const auto to_img = [&](Point2 p) { return scale_point(p, mask_w, mask_h, dims); };

  constexpr Rgb kRed{255, 0, 0}, kGreen{0, 220, 0}, kBlue{40, 80, 255}, kYellow{255, 220, 0},
      kMagenta{255, 0, 255};
  const Ellipse& e = pose.ellipse;
  const Point2 u = e.major_axis();
  const Point2 v{-u.y, u.x};
  Point2 prev = to_img(e.center + e.semi_major * u);
  for (int i = 1; i <= 360; ++i) {
    const double t = i * std::numbers::pi / 180.0;
    const Point2 p = to_img(e.center + (e.semi_major * std::cos(t)) * u + (e.semi_minor * std::sin(t)) * v);
    line(out, prev, p, kMagenta);
    prev = p;
  }
  for (const auto& c : crops) {
    const Rgb color = c.kind == CropKind::Object ? kBlue : kYellow;
    const Point2 tl{c.rect.x, c.rect.y}, tr{c.rect.right(), c.rect.y};
    const Point2 bl{c.rect.x, c.rect.bottom()}, br{c.rect.right(), c.rect.bottom()};
    line(out, tl, tr, color);
    line(out, tr, br, color);
    line(out, br, bl, color);
    line(out, bl, tl, color);
  }
  for (std::size_t i = 0; i < pose.vectors.size(); ++i) {
    line(out, to_img(pose.anchors[i]), to_img(pose.anchors[i] + pose.vectors[i]), kGreen);
  }
  cross(out, to_img(pose.object_centroid), kRed);
  for (const auto& part : parts.parts) cross(out, to_img(part.centroid), kRed);
  return out;
}

}  // namespace fmparts
