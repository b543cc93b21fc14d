#pragma once

// Exact convex polygons in the plane and affine maps acting on them.

#include <algorithm>
#include <array>
#include <vector>

#include "fshc/rational.hpp"

namespace fshc {

using Point2 = std::array<Rational, 2>;

/// x -> M x + b with rational entries, M stored row-major.
struct Affine2 {
  std::array<Rational, 4> m{1, 0, 0, 1};
  Point2 b{0, 0};

  Point2 operator()(const Point2& p) const {
    return {m[0] * p[0] + m[1] * p[1] + b[0], m[2] * p[0] + m[3] * p[1] + b[1]};
  }

  /// (this o other)(x) = this(other(x)).
  Affine2 compose(const Affine2& o) const {
    Affine2 r;
    r.m = {m[0] * o.m[0] + m[1] * o.m[2], m[0] * o.m[1] + m[1] * o.m[3], m[2] * o.m[0] + m[3] * o.m[2],
           m[2] * o.m[1] + m[3] * o.m[3]};
    r.b = (*this)(o.b);
    return r;
  }
};

inline Rational cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

/// Twice the signed area (positive for counter-clockwise order).
inline Rational signed_area2(const std::vector<Point2>& poly) {
  Rational s = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    s += p[0] * q[1] - q[0] * p[1];
  }
  return s;
}

/// True when the vertices form a strictly convex polygon with positive area
/// (either orientation). Strict convexity with a consistent turn sign and a
/// total turning of one revolution implies simplicity; the winding is
/// checked via the angular order of edges.
inline bool is_strictly_convex(const std::vector<Point2>& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  int sign = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Rational c = cross(poly[i], poly[(i + 1) % n], poly[(i + 2) % n]);
    if (c == 0) return false;
    const int s = c > 0 ? 1 : -1;
    if (sign == 0) sign = s;
    if (s != sign) return false;
  }
  // A star polygon also turns consistently; it winds more than once. Count
  // edges whose direction crosses the positive x axis direction.
  int crossings = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 d0{poly[(i + 1) % n][0] - poly[i][0], poly[(i + 1) % n][1] - poly[i][1]};
    const Point2 d1{poly[(i + 2) % n][0] - poly[(i + 1) % n][0], poly[(i + 2) % n][1] - poly[(i + 1) % n][1]};
    const bool below0 = d0[1] < 0 || (d0[1] == 0 && d0[0] < 0);
    const bool below1 = d1[1] < 0 || (d1[1] == 0 && d1[0] < 0);
    if (below0 && !below1) ++crossings;
  }
  return crossings == 1 && signed_area2(poly) != 0;
}

inline std::vector<Point2> counter_clockwise(std::vector<Point2> poly) {
  if (signed_area2(poly) < 0) std::reverse(poly.begin(), poly.end());
  return poly;
}

inline std::vector<Point2> transform(const Affine2& a, const std::vector<Point2>& poly) {
  std::vector<Point2> out;
  out.reserve(poly.size());
  for (const auto& p : poly) out.push_back(a(p));
  if (a.m[0] * a.m[3] - a.m[1] * a.m[2] < 0) std::reverse(out.begin(), out.end());
  return out;
}

namespace detail {

inline bool separated_along(const std::vector<Point2>& a, const std::vector<Point2>& b, const Point2& axis) {
  auto project = [&](const std::vector<Point2>& p) {
    Rational lo = axis[0] * p[0][0] + axis[1] * p[0][1];
    Rational hi = lo;
    for (std::size_t i = 1; i < p.size(); ++i) {
      const Rational v = axis[0] * p[i][0] + axis[1] * p[i][1];
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
    return std::pair{lo, hi};
  };
  const auto [alo, ahi] = project(a);
  const auto [blo, bhi] = project(b);
  return ahi <= blo || bhi <= alo;
}

}  // namespace detail

/// Exact test whether the open interiors of two convex polygons intersect.
/// Shared edges or vertices do not count as overlap.
inline bool interiors_overlap(const std::vector<Point2>& a, const std::vector<Point2>& b) {
  for (const auto* poly : {&a, &b}) {
    const std::size_t n = poly->size();
    for (std::size_t i = 0; i < n; ++i) {
      const auto& p = (*poly)[i];
      const auto& q = (*poly)[(i + 1) % n];
      const Point2 normal{p[1] - q[1], q[0] - p[0]};
      if (detail::separated_along(a, b, normal)) return false;
    }
  }
  return true;
}

struct BoundingBox {
  Rational xmin, xmax, ymin, ymax;
};

inline BoundingBox bounding_box(const std::vector<Point2>& poly) {
  BoundingBox box{poly[0][0], poly[0][0], poly[0][1], poly[0][1]};
  for (const auto& p : poly) {
    box.xmin = std::min(box.xmin, p[0]);
    box.xmax = std::max(box.xmax, p[0]);
    box.ymin = std::min(box.ymin, p[1]);
    box.ymax = std::max(box.ymax, p[1]);
  }
  return box;
}

}  // namespace fshc
