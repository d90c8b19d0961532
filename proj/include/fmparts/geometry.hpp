#pragma once

#include <cmath>

namespace fmparts {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
  friend bool operator==(Point2, Point2) = default;
};

inline double norm(Point2 p) { return std::hypot(p.x, p.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

/// Axis-aligned rectangle; (x, y) is the top-left corner.
struct Rect {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double right() const { return x + w; }
  double bottom() const { return y + h; }
  double area() const { return w * h; }
  Point2 center() const { return {x + 0.5 * w, y + 0.5 * h}; }
  friend bool operator==(const Rect&, const Rect&) = default;
};

inline Rect intersect(const Rect& a, const Rect& b) {
  const double x0 = std::fmax(a.x, b.x);
  const double y0 = std::fmax(a.y, b.y);
  const double x1 = std::fmin(a.right(), b.right());
  const double y1 = std::fmin(a.bottom(), b.bottom());
  return {x0, y0, std::fmax(0.0, x1 - x0), std::fmax(0.0, y1 - y0)};
}

}  // namespace fmparts
