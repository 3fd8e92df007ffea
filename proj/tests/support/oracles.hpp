#pragma once

// Brute-force reference implementations used to check the fast paths.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "postertree/core.hpp"
#include "postertree/grid.hpp"

namespace postertree::testing {

inline double dist2_to_segment(Point p, Point a, Point b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = p.x - a.x - t * vx, dy = p.y - a.y - t * vy;
  return dx * dx + dy * dy;
}

inline Point bezier_at(Point p0, Point p1, Point p2, Point p3, double t) {
  const double u = 1 - t;
  const double a = u * u * u, b = 3 * u * u * t, c = 3 * u * t * t, d = t * t * t;
  return {a * p0.x + b * p1.x + c * p2.x + d * p3.x, a * p0.y + b * p1.y + c * p2.y + d * p3.y};
}

// Densely sampled outline of a curved shape, already scaled. 1024 ellipse
// samples keep the chord error below 1e-3 px for radii up to 200 px.
inline std::vector<Point> dense_outline(const Shape& s) {
  std::vector<Point> pts;
  if (const auto* e = std::get_if<Ellipse>(&s)) {
    const int n = 1024;
    for (int i = 0; i <= n; ++i) {
      const double t = 2 * std::numbers::pi * i / n;
      pts.push_back({e->cx + e->rx * std::cos(t), e->cy + e->ry * std::sin(t)});
    }
  } else if (const auto* p = std::get_if<PathCurve>(&s)) {
    Point cur = p->start;
    pts.push_back(cur);
    for (const auto& seg : p->segments) {
      for (int i = 1; i <= 512; ++i) pts.push_back(bezier_at(cur, seg.c1, seg.c2, seg.end, i / 512.0));
      cur = seg.end;
    }
    if (p->closed) pts.push_back(p->start);
  }
  return pts;
}

inline Shape scale_shape(const Shape& s, double k) {
  if (const auto* r = std::get_if<Rect>(&s)) return Rect{r->x * k, r->y * k, r->w * k, r->h * k};
  if (const auto* r = std::get_if<RotatedRect>(&s)) return RotatedRect{r->x * k, r->y * k, r->w * k, r->h * k, r->angle_deg};
  if (const auto* e = std::get_if<Ellipse>(&s)) return Ellipse{e->cx * k, e->cy * k, e->rx * k, e->ry * k};
  PathCurve p = std::get<PathCurve>(s);
  auto sc = [k](Point q) { return Point{q.x * k, q.y * k}; };
  p.start = sc(p.start);
  for (auto& seg : p.segments) seg = {sc(seg.c1), sc(seg.c2), sc(seg.end)};
  return p;
}

// Signed inside margin of point q for a scaled shape: > 0 inside, < 0
// outside, magnitude = distance to the nearest boundary (for strokes, of
// the stroke band). `outline` caches dense_outline for curved shapes.
inline double inside_margin(const Shape& s, const std::vector<Point>& outline, Point q, double half_stroke) {
  if (const auto* r = std::get_if<Rect>(&s)) {
    return std::min({q.x - r->x, r->x + r->w - q.x, q.y - r->y, r->y + r->h - q.y});
  }
  if (const auto* r = std::get_if<RotatedRect>(&s)) {
    const double t = -r->angle_deg * std::numbers::pi / 180;
    const Point c = r->center();
    const double dx = q.x - c.x, dy = q.y - c.y;
    const double lx = std::cos(t) * dx - std::sin(t) * dy, ly = std::sin(t) * dx + std::cos(t) * dy;
    return std::min(r->w / 2 - std::abs(lx), r->h / 2 - std::abs(ly));
  }
  double d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < outline.size(); ++i) d2 = std::min(d2, dist2_to_segment(q, outline[i], outline[i + 1]));
  if (outline.size() == 1) d2 = dist2_to_segment(q, outline[0], outline[0]);
  return half_stroke - std::sqrt(d2);
}

// Exact pixel-center membership for rects (half-open on the far edges).
inline bool rect_covers(const Rect& r, double cx, double cy) {
  return cx >= r.x && cx < r.x + r.w && cy >= r.y && cy < r.y + r.h;
}

struct OracleComparison {
  std::size_t mismatches = 0;
  std::size_t outside_band = 0;  // mismatches farther than 1 px from any boundary
  std::size_t rect_mismatches = 0;
};

// Compares a rendered map against per-pixel inside tests of every element.
inline OracleComparison compare_with_oracle(const Layout& layout, const BinMap& rendered, double stroke_width) {
  const double k = static_cast<double>(rendered.width()) / layout.canvas.width_px;
  std::vector<Shape> shapes;
  std::vector<std::vector<Point>> outlines;
  for (const auto& e : layout.elements) {
    shapes.push_back(scale_shape(e.shape, k));
    outlines.push_back(dense_outline(shapes.back()));
  }
  OracleComparison out;
  for (int y = 0; y < rendered.height(); ++y) {
    for (int x = 0; x < rendered.width(); ++x) {
      const Point q{x + 0.5, y + 0.5};
      bool inside = false, rect_inside = false, near_boundary = false;
      for (std::size_t i = 0; i < shapes.size(); ++i) {
        if (const auto* r = std::get_if<Rect>(&shapes[i])) {
          if (rect_covers(*r, q.x, q.y)) rect_inside = inside = true;
          continue;
        }
        const double m = inside_margin(shapes[i], outlines[i], q, stroke_width / 2);
        if (m >= 0) inside = true;
        if (std::abs(m) <= 1.0) near_boundary = true;
      }
      const bool got = rendered.at(x, y) != 0;
      if (got == inside) continue;
      ++out.mismatches;
      if (rect_inside) ++out.rect_mismatches;
      if (!near_boundary) ++out.outside_band;
    }
  }
  return out;
}

// Sum over pixels of max(0, layers covering it - 1), over the map area.
inline double layer_count_overlap(const std::vector<BinMap>& layers) {
  if (layers.empty()) return 0;
  const std::size_t n = layers[0].size();
  std::size_t extra = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = 0;
    for (const auto& l : layers) c += l[i] ? 1 : 0;
    if (c > 1) extra += c - 1;
  }
  return static_cast<double>(extra) / static_cast<double>(n);
}

}  // namespace postertree::testing
