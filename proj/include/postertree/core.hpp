#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "postertree/error.hpp"
#include "postertree/grid.hpp"

namespace postertree {

struct Canvas {
  int width_px = 1;
  int height_px = 1;

  friend bool operator==(const Canvas&, const Canvas&) = default;
};

inline void validate(const Canvas& canvas) {
  if (canvas.width_px < 1 || canvas.height_px < 1) {
    fail(ErrorCode::kInvalidArgument, "canvas dimensions must be >= 1");
  }
}

// ---------------------------------------------------------------------------
// Categories

enum class BaseCategory { kText, kLogo, kUnderlay, kEmbellishment };
enum class TextVariant { kGeneral, kVertical, kRotated, kEllipse, kCurve };

struct ElementCategory {
  BaseCategory base = BaseCategory::kText;
  TextVariant text_variant = TextVariant::kGeneral;

  bool is_text() const noexcept { return base == BaseCategory::kText; }
  bool is_underlay() const noexcept { return base == BaseCategory::kUnderlay; }

  friend bool operator==(const ElementCategory&, const ElementCategory&) = default;
  friend auto operator<=>(const ElementCategory&, const ElementCategory&) = default;
};

namespace category {
inline constexpr ElementCategory kText{BaseCategory::kText, TextVariant::kGeneral};
inline constexpr ElementCategory kTextVertical{BaseCategory::kText, TextVariant::kVertical};
inline constexpr ElementCategory kTextRotated{BaseCategory::kText, TextVariant::kRotated};
inline constexpr ElementCategory kTextEllipse{BaseCategory::kText, TextVariant::kEllipse};
inline constexpr ElementCategory kTextCurve{BaseCategory::kText, TextVariant::kCurve};
inline constexpr ElementCategory kLogo{BaseCategory::kLogo, TextVariant::kGeneral};
inline constexpr ElementCategory kUnderlay{BaseCategory::kUnderlay, TextVariant::kGeneral};
inline constexpr ElementCategory kEmbellishment{BaseCategory::kEmbellishment, TextVariant::kGeneral};

inline constexpr std::array<ElementCategory, 8> kAll{
    kText, kTextVertical, kTextRotated, kTextEllipse, kTextCurve, kLogo, kUnderlay, kEmbellishment};
}  // namespace category

inline bool is_valid(const ElementCategory& c) noexcept {
  return c.text_variant == TextVariant::kGeneral || c.base == BaseCategory::kText;
}

// Printable tokens used in leaf ids and dataset files.
inline std::string_view category_token(const ElementCategory& c) {
  switch (c.base) {
    case BaseCategory::kLogo: return "logo";
    case BaseCategory::kUnderlay: return "underlay";
    case BaseCategory::kEmbellishment: return "embellishment";
    case BaseCategory::kText: break;
  }
  switch (c.text_variant) {
    case TextVariant::kGeneral: return "text";
    case TextVariant::kVertical: return "textv";
    case TextVariant::kRotated: return "textr";
    case TextVariant::kEllipse: return "texts";
    case TextVariant::kCurve: return "textc";
  }
  return "text";
}

inline std::optional<ElementCategory> category_from_token(std::string_view token) {
  for (const auto& c : category::kAll) {
    if (category_token(c) == token) return c;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Geometry

struct Point {
  double x = 0;
  double y = 0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }

struct Rect {
  double x = 0;
  double y = 0;
  double w = 0;
  double h = 0;

  double right() const noexcept { return x + w; }
  double bottom() const noexcept { return y + h; }
  double area() const noexcept { return w * h; }

  friend bool operator==(const Rect&, const Rect&) = default;
};

struct RotatedRect {
  double x = 0;
  double y = 0;
  double w = 0;
  double h = 0;
  double angle_deg = 0;  // clockwise on screen, about the rect center

  Point center() const noexcept { return {x + w / 2, y + h / 2}; }

  friend bool operator==(const RotatedRect&, const RotatedRect&) = default;
};

struct Ellipse {
  double cx = 0;
  double cy = 0;
  double rx = 0;
  double ry = 0;

  friend bool operator==(const Ellipse&, const Ellipse&) = default;
};

struct CubicSegment {
  Point c1;
  Point c2;
  Point end;

  friend bool operator==(const CubicSegment&, const CubicSegment&) = default;
};

struct PathCurve {
  Point start;
  std::vector<CubicSegment> segments;
  bool closed = false;

  friend bool operator==(const PathCurve&, const PathCurve&) = default;
};

using Shape = std::variant<Rect, RotatedRect, Ellipse, PathCurve>;
using Polygon = std::vector<Point>;

// Maps an angle onto (-180, 180].
inline double normalize_angle(double deg) {
  double a = std::fmod(deg, 360.0);
  if (a <= -180.0) a += 360.0;
  if (a > 180.0) a -= 360.0;
  return a;
}

inline Point rotate_about(Point p, Point pivot, double angle_deg) {
  const double t = angle_deg * std::numbers::pi / 180.0;
  const double c = std::cos(t), s = std::sin(t);
  const Point d = p - pivot;
  return {pivot.x + c * d.x - s * d.y, pivot.y + s * d.x + c * d.y};
}

inline std::array<Point, 4> corners(const RotatedRect& r) {
  const Point c = r.center();
  return {rotate_about({r.x, r.y}, c, r.angle_deg), rotate_about({r.x + r.w, r.y}, c, r.angle_deg),
          rotate_about({r.x + r.w, r.y + r.h}, c, r.angle_deg),
          rotate_about({r.x, r.y + r.h}, c, r.angle_deg)};
}

namespace detail {

inline double distance_to_chord(Point p, Point a, Point b) {
  const Point ab = b - a;
  const double len = std::hypot(ab.x, ab.y);
  if (len == 0) return std::hypot(p.x - a.x, p.y - a.y);
  return std::abs(ab.x * (p.y - a.y) - ab.y * (p.x - a.x)) / len;
}

inline void flatten_cubic(Point p0, Point p1, Point p2, Point p3, double tolerance, int depth,
                          std::vector<Point>& out) {
  const double flat = std::max(distance_to_chord(p1, p0, p3), distance_to_chord(p2, p0, p3));
  if (flat <= tolerance || depth >= 16) {
    out.push_back(p3);
    return;
  }
  const Point p01 = 0.5 * (p0 + p1), p12 = 0.5 * (p1 + p2), p23 = 0.5 * (p2 + p3);
  const Point p012 = 0.5 * (p01 + p12), p123 = 0.5 * (p12 + p23);
  const Point mid = 0.5 * (p012 + p123);
  flatten_cubic(p0, p01, p012, mid, tolerance, depth + 1, out);
  flatten_cubic(mid, p123, p23, p3, tolerance, depth + 1, out);
}

}  // namespace detail

inline constexpr double kFlattenTolerancePx = 0.25;

// Polyline through points on the curve; deviation from the true curve is
// bounded by `tolerance`. A closed path repeats its start point at the end.
inline std::vector<Point> flatten(const PathCurve& path, double tolerance = kFlattenTolerancePx) {
  std::vector<Point> out{path.start};
  Point cur = path.start;
  for (const auto& seg : path.segments) {
    detail::flatten_cubic(cur, seg.c1, seg.c2, seg.end, tolerance, 0, out);
    cur = seg.end;
  }
  if (path.closed && !(cur == path.start)) out.push_back(path.start);
  return out;
}

inline Rect bounding_box(const std::vector<Point>& pts) {
  if (pts.empty()) return {};
  double x0 = pts[0].x, x1 = pts[0].x, y0 = pts[0].y, y1 = pts[0].y;
  for (const auto& p : pts) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  return {x0, y0, x1 - x0, y1 - y0};
}

inline Rect bounding_box(const Shape& shape) {
  struct Visitor {
    Rect operator()(const Rect& r) const { return r; }
    Rect operator()(const RotatedRect& r) const {
      const auto cs = corners(r);
      return bounding_box(std::vector<Point>(cs.begin(), cs.end()));
    }
    Rect operator()(const Ellipse& e) const { return {e.cx - e.rx, e.cy - e.ry, 2 * e.rx, 2 * e.ry}; }
    Rect operator()(const PathCurve& p) const { return bounding_box(flatten(p)); }
  };
  return std::visit(Visitor{}, shape);
}

inline Shape translated(const Shape& shape, double dx, double dy) {
  struct Visitor {
    double dx, dy;
    Shape operator()(Rect r) const { return Rect{r.x + dx, r.y + dy, r.w, r.h}; }
    Shape operator()(RotatedRect r) const {
      r.x += dx;
      r.y += dy;
      return r;
    }
    Shape operator()(Ellipse e) const { return Ellipse{e.cx + dx, e.cy + dy, e.rx, e.ry}; }
    Shape operator()(PathCurve p) const {
      const Point d{dx, dy};
      p.start = p.start + d;
      for (auto& s : p.segments) {
        s.c1 = s.c1 + d;
        s.c2 = s.c2 + d;
        s.end = s.end + d;
      }
      return p;
    }
  };
  return std::visit(Visitor{dx, dy}, shape);
}

inline Polygon translated(const Polygon& poly, double dx, double dy) {
  Polygon out = poly;
  for (auto& p : out) p = p + Point{dx, dy};
  return out;
}

inline bool is_finite(double v) noexcept { return std::isfinite(v); }
inline bool is_positive(double v) noexcept { return std::isfinite(v) && v > 0; }

// Throws MalformedGeometry when a shape breaks its invariants.
inline void validate(const Shape& shape) {
  struct Visitor {
    void operator()(const Rect& r) const {
      if (!is_finite(r.x) || !is_finite(r.y) || !is_positive(r.w) || !is_positive(r.h))
        fail(ErrorCode::kMalformedGeometry, "rect needs finite position and positive size");
    }
    void operator()(const RotatedRect& r) const {
      if (!is_finite(r.x) || !is_finite(r.y) || !is_positive(r.w) || !is_positive(r.h))
        fail(ErrorCode::kMalformedGeometry, "rotated rect needs finite position and positive size");
      if (!(r.angle_deg > -180.0 && r.angle_deg <= 180.0))
        fail(ErrorCode::kMalformedGeometry, "rotation angle outside (-180, 180]");
    }
    void operator()(const Ellipse& e) const {
      if (!is_finite(e.cx) || !is_finite(e.cy) || !is_positive(e.rx) || !is_positive(e.ry))
        fail(ErrorCode::kMalformedGeometry, "ellipse needs finite center and positive radii");
    }
    void operator()(const PathCurve& p) const {
      if (p.segments.empty()) fail(ErrorCode::kMalformedGeometry, "path needs at least one segment");
      auto ok = [](Point q) { return is_finite(q.x) && is_finite(q.y); };
      bool good = ok(p.start);
      for (const auto& s : p.segments) good = good && ok(s.c1) && ok(s.c2) && ok(s.end);
      if (!good) fail(ErrorCode::kMalformedGeometry, "path has non-finite coordinates");
    }
  };
  std::visit(Visitor{}, shape);
}

inline double intersection_area(const Rect& a, const Rect& b) {
  const double w = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const double h = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  return (w > 0 && h > 0) ? w * h : 0.0;
}

inline double iou(const Rect& a, const Rect& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

// ---------------------------------------------------------------------------
// Layouts, intents, trees

struct LayoutElement {
  ElementCategory category;
  Shape shape;

  friend bool operator==(const LayoutElement&, const LayoutElement&) = default;
};

struct Layout {
  Canvas canvas;
  std::vector<LayoutElement> elements;

  friend bool operator==(const Layout&, const Layout&) = default;
};

struct DesignIntent {
  std::vector<Polygon> polygons;
  std::optional<GrayMap> map;
  std::optional<std::vector<double>> embedding;
};

enum class NodeKind { kGroup, kLeaf, kIntent };

struct TreeNode {
  NodeKind kind = NodeKind::kLeaf;
  std::string id;
  Point offset;                 // groups only
  Shape shape = Rect{};         // leaves only
  Polygon polygon;              // intents only
  ElementCategory category;     // leaves only
  std::vector<TreeNode> children;  // groups only

  static TreeNode leaf(ElementCategory cat, Shape s, std::string id = {}) {
    TreeNode n;
    n.kind = NodeKind::kLeaf;
    n.category = cat;
    n.shape = std::move(s);
    n.id = std::move(id);
    return n;
  }
  static TreeNode group(Point offset, std::vector<TreeNode> children) {
    TreeNode n;
    n.kind = NodeKind::kGroup;
    n.offset = offset;
    n.children = std::move(children);
    return n;
  }
  static TreeNode intent(Polygon poly) {
    TreeNode n;
    n.kind = NodeKind::kIntent;
    n.polygon = std::move(poly);
    return n;
  }

  bool is_group() const noexcept { return kind == NodeKind::kGroup; }
  bool is_leaf() const noexcept { return kind == NodeKind::kLeaf; }

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct LayoutTree {
  Canvas canvas;
  std::vector<TreeNode> intent_nodes;
  std::vector<TreeNode> element_nodes;

  friend bool operator==(const LayoutTree&, const LayoutTree&) = default;
};

// Depth of the element hierarchy: 1 for a flat tree, +1 per group level.
inline int tree_depth(const std::vector<TreeNode>& nodes) {
  int depth = 0;
  for (const auto& n : nodes) {
    depth = std::max(depth, n.is_group() ? 1 + tree_depth(n.children) : 1);
  }
  return depth;
}

inline int tree_depth(const LayoutTree& tree) { return tree_depth(tree.element_nodes); }

template <typename Fn>
void for_each_leaf(const std::vector<TreeNode>& nodes, Point origin, Fn&& fn) {
  for (const auto& n : nodes) {
    if (n.is_group()) {
      for_each_leaf(n.children, origin + n.offset, fn);
    } else if (n.is_leaf()) {
      fn(n, origin);
    }
  }
}

inline std::size_t leaf_count(const LayoutTree& tree) {
  std::size_t n = 0;
  for_each_leaf(tree.element_nodes, {}, [&](const TreeNode&, Point) { ++n; });
  return n;
}

struct DatasetRecord {
  std::string record_id;
  Canvas canvas;
  std::vector<LayoutElement> elements;
  DesignIntent intent;
  std::optional<std::string> image_path;
  std::optional<std::string> saliency_path;

  Layout layout() const { return Layout{canvas, elements}; }
};

struct MetricReport {
  std::optional<double> ove, ali, und_l, und_s, uti, occ, rea, cov, con;
};

struct ReferenceStats {
  double cov_l = 0;
  double con_l = 0;
  double uti_l = 0;
  double occ_l = 0;
};

}  // namespace postertree
