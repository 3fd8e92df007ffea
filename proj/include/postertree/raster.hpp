#pragma once

// Deterministic CPU rasterization: pixel-center coverage, no anti-aliasing.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "postertree/core.hpp"

namespace postertree {

inline constexpr int kElementMapWidth = 513;
inline constexpr double kStrokeWidthPx = 30.0;

struct RasterOptions {
  int target_width = kElementMapWidth;
  double stroke_width = kStrokeWidthPx;  // output pixels
};

// Output frame for a canvas rendered at a fixed width; height follows the
// aspect ratio and the scale is uniform.
struct RasterFrame {
  int width = 1;
  int height = 1;
  double scale = 1.0;
};

inline RasterFrame frame_for(const Canvas& canvas, int target_width) {
  validate(canvas);
  if (target_width < 1) fail(ErrorCode::kInvalidArgument, "target width must be >= 1");
  RasterFrame f;
  f.width = target_width;
  f.height = std::max(1, static_cast<int>(std::lround(static_cast<double>(target_width) *
                                                      canvas.height_px / canvas.width_px)));
  f.scale = static_cast<double>(target_width) / canvas.width_px;
  return f;
}

namespace detail {

// First pixel index whose center is >= edge.
inline int first_center_at_or_after(double edge, int limit) {
  double guess = std::ceil(edge - 0.5);
  if (guess < 0) return 0;
  if (guess > limit) return limit;
  int i = static_cast<int>(guess);
  while (i > 0 && (i - 1) + 0.5 >= edge) --i;
  while (i < limit && i + 0.5 < edge) ++i;
  return i;
}

inline void fill_span(BinMap& map, int y, double x0, double x1) {
  const int a = first_center_at_or_after(x0, map.width());
  const int b = first_center_at_or_after(x1, map.width());
  for (int x = a; x < b; ++x) map.at(x, y) = 1;
}

inline void fill_rect(BinMap& map, double x0, double y0, double x1, double y1) {
  const int ya = first_center_at_or_after(y0, map.height());
  const int yb = first_center_at_or_after(y1, map.height());
  for (int y = ya; y < yb; ++y) fill_span(map, y, x0, x1);
}

// Even-odd scanline fill of one closed polygon (output-pixel coordinates).
inline void fill_polygon(BinMap& map, const std::vector<Point>& poly) {
  if (poly.size() < 3) return;
  const Rect box = bounding_box(poly);
  const int ya = first_center_at_or_after(box.y, map.height());
  const int yb = first_center_at_or_after(box.bottom(), map.height());
  std::vector<double> xs;
  for (int y = ya; y < yb; ++y) {
    const double yc = y + 0.5;
    xs.clear();
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Point p = poly[i];
      const Point q = poly[(i + 1) % poly.size()];
      if (p.y == q.y) continue;
      const double lo = std::min(p.y, q.y), hi = std::max(p.y, q.y);
      if (yc < lo || yc >= hi) continue;
      xs.push_back(p.x + (yc - p.y) * (q.x - p.x) / (q.y - p.y));
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t i = 0; i + 1 < xs.size(); i += 2) fill_span(map, y, xs[i], xs[i + 1]);
  }
}

inline double segment_distance(Point p, Point a, Point b) {
  const Point ab = b - a, ap = p - a;
  const double len2 = ab.x * ab.x + ab.y * ab.y;
  double t = len2 > 0 ? (ap.x * ab.x + ap.y * ab.y) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(ap.x - t * ab.x, ap.y - t * ab.y);
}

// Sets every pixel whose center lies within half_width of the polyline.
inline void stroke_polyline(BinMap& map, const std::vector<Point>& pts, double half_width) {
  if (pts.empty()) return;
  auto stamp = [&](Point a, Point b) {
    const int xa = first_center_at_or_after(std::min(a.x, b.x) - half_width, map.width());
    const int xb = first_center_at_or_after(std::nextafter(std::max(a.x, b.x) + half_width, 1e300),
                                            map.width());
    const int ya = first_center_at_or_after(std::min(a.y, b.y) - half_width, map.height());
    const int yb = first_center_at_or_after(std::nextafter(std::max(a.y, b.y) + half_width, 1e300),
                                            map.height());
    for (int y = ya; y < yb; ++y) {
      for (int x = xa; x < xb; ++x) {
        if (map.at(x, y)) continue;
        if (segment_distance({x + 0.5, y + 0.5}, a, b) <= half_width) map.at(x, y) = 1;
      }
    }
  };
  if (pts.size() == 1) stamp(pts[0], pts[0]);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) stamp(pts[i], pts[i + 1]);
}

// Closed polyline on the ellipse outline with sagitta <= tolerance.
inline std::vector<Point> ellipse_outline(const Ellipse& e, double tolerance = kFlattenTolerancePx) {
  const double r = std::max(e.rx, e.ry);
  int n = 8;
  if (r > tolerance) {
    const double step = 2.0 * std::acos(1.0 - tolerance / r);
    n = std::max(8, static_cast<int>(std::ceil(2.0 * std::numbers::pi / step)));
  }
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) {
    const double t = 2.0 * std::numbers::pi * i / n;
    pts.push_back({e.cx + e.rx * std::cos(t), e.cy + e.ry * std::sin(t)});
  }
  return pts;
}

inline Shape scaled(const Shape& shape, double s) {
  struct Visitor {
    double s;
    Shape operator()(const Rect& r) const { return Rect{r.x * s, r.y * s, r.w * s, r.h * s}; }
    Shape operator()(const RotatedRect& r) const {
      return RotatedRect{r.x * s, r.y * s, r.w * s, r.h * s, r.angle_deg};
    }
    Shape operator()(const Ellipse& e) const { return Ellipse{e.cx * s, e.cy * s, e.rx * s, e.ry * s}; }
    Shape operator()(PathCurve p) const {
      p.start = s * p.start;
      for (auto& seg : p.segments) seg = {s * seg.c1, s * seg.c2, s * seg.end};
      return p;
    }
  };
  return std::visit(Visitor{s}, shape);
}

inline void draw_shape(BinMap& map, const Shape& shape, double scale, double stroke_width) {
  if (const auto* r = std::get_if<Rect>(&shape)) {
    fill_rect(map, r->x * scale, r->y * scale, (r->x + r->w) * scale, (r->y + r->h) * scale);
    return;
  }
  const Shape s = scaled(shape, scale);
  if (const auto* rr = std::get_if<RotatedRect>(&s)) {
    const auto cs = corners(*rr);
    fill_polygon(map, std::vector<Point>(cs.begin(), cs.end()));
  } else if (const auto* e = std::get_if<Ellipse>(&s)) {
    stroke_polyline(map, ellipse_outline(*e), stroke_width / 2);
  } else {
    stroke_polyline(map, flatten(std::get<PathCurve>(s)), stroke_width / 2);
  }
}

}  // namespace detail

inline BinMap render_element_map(const Layout& layout, const RasterOptions& options = {}) {
  const RasterFrame f = frame_for(layout.canvas, options.target_width);
  BinMap map(f.width, f.height);
  for (const auto& e : layout.elements) detail::draw_shape(map, e.shape, f.scale, options.stroke_width);
  return map;
}

inline BinMap render_element_map(const Layout& layout, int target_width) {
  return render_element_map(layout, RasterOptions{target_width, kStrokeWidthPx});
}

// Renders only the elements accepted by `keep`.
template <typename Pred>
BinMap render_element_map_if(const Layout& layout, const RasterOptions& options, Pred keep) {
  const RasterFrame f = frame_for(layout.canvas, options.target_width);
  BinMap map(f.width, f.height);
  for (const auto& e : layout.elements) {
    if (keep(e)) detail::draw_shape(map, e.shape, f.scale, options.stroke_width);
  }
  return map;
}

// One layer per non-underlay element, in element order.
inline std::vector<BinMap> render_layers(const Layout& layout, const RasterOptions& options = {}) {
  const RasterFrame f = frame_for(layout.canvas, options.target_width);
  std::vector<BinMap> layers;
  for (const auto& e : layout.elements) {
    if (e.category.is_underlay()) continue;
    BinMap layer(f.width, f.height);
    detail::draw_shape(layer, e.shape, f.scale, options.stroke_width);
    layers.push_back(std::move(layer));
  }
  return layers;
}

// Union of even-odd fills, one per polygon.
inline BinMap rasterize_polygons(const std::vector<Polygon>& polygons, const Canvas& canvas,
                                 int target_width = kElementMapWidth) {
  const RasterFrame f = frame_for(canvas, target_width);
  BinMap map(f.width, f.height);
  for (const auto& poly : polygons) {
    std::vector<Point> scaled_poly;
    scaled_poly.reserve(poly.size());
    for (const auto& p : poly) scaled_poly.push_back(f.scale * p);
    detail::fill_polygon(map, scaled_poly);
  }
  return map;
}

inline BinMap binarize(const GrayMap& map, double threshold = 0.5) {
  if (!(threshold > 0 && threshold < 1)) fail(ErrorCode::kInvalidArgument, "threshold must be in (0,1)");
  BinMap out(map.width(), map.height());
  for (std::size_t i = 0; i < map.size(); ++i) out[i] = map[i] >= threshold ? 1 : 0;
  return out;
}

inline GrayMap to_gray(const BinMap& map) {
  GrayMap out(map.width(), map.height());
  for (std::size_t i = 0; i < map.size(); ++i) out[i] = map[i] ? 1.0 : 0.0;
  return out;
}

inline double map_iou(const BinMap& a, const BinMap& b) {
  require_same_shape(a, b);
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += (a[i] && b[i]) ? 1 : 0;
    uni += (a[i] || b[i]) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// ---------------------------------------------------------------------------
// PGM (P5 binary, P2 ASCII accepted on read)

namespace detail {

inline std::string read_pgm_token(std::istream& in) {
  std::string token;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(c);
  }
  return token;
}

inline int pgm_int(std::istream& in) {
  const std::string t = read_pgm_token(in);
  if (t.empty() || t.size() > 9 || !std::all_of(t.begin(), t.end(), ::isdigit)) {
    fail(ErrorCode::kFormat, "malformed PGM header");
  }
  return std::stoi(t);
}

}  // namespace detail

inline GrayMap parse_pgm(const std::string& bytes) {
  std::istringstream in(bytes);
  const std::string magic = detail::read_pgm_token(in);
  if (magic != "P5" && magic != "P2") fail(ErrorCode::kFormat, "not a PGM file");
  const int w = detail::pgm_int(in), h = detail::pgm_int(in), maxval = detail::pgm_int(in);
  if (w < 1 || h < 1 || maxval < 1 || maxval > 65535) fail(ErrorCode::kFormat, "bad PGM dimensions");
  GrayMap map(w, h);
  const std::size_t n = map.size();
  if (magic == "P2") {
    for (std::size_t i = 0; i < n; ++i) {
      const int v = detail::pgm_int(in);
      map[i] = std::min(1.0, static_cast<double>(v) / maxval);
    }
    return map;
  }
  const std::size_t bpp = maxval > 255 ? 2 : 1;
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.size() < n * bpp) fail(ErrorCode::kFormat, "truncated PGM data");
  for (std::size_t i = 0; i < n; ++i) {
    unsigned v = static_cast<unsigned char>(data[i * bpp]);
    if (bpp == 2) v = (v << 8) | static_cast<unsigned char>(data[i * bpp + 1]);
    map[i] = std::min(1.0, static_cast<double>(v) / maxval);
  }
  return map;
}

inline GrayMap read_pgm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::kIo, "cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return parse_pgm(bytes);
}

inline std::string encode_pgm(const GrayMap& map) {
  std::string out = "P5\n" + std::to_string(map.width()) + " " + std::to_string(map.height()) + "\n255\n";
  out.reserve(out.size() + map.size());
  for (std::size_t i = 0; i < map.size(); ++i) {
    const double v = std::clamp(map[i], 0.0, 1.0);
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
  }
  return out;
}

inline std::string encode_pgm(const BinMap& map) { return encode_pgm(to_gray(map)); }

}  // namespace postertree
