#pragma once

// Layout tree construction: intent polygonization, underlay-driven nesting
// and the inverse flattening back to absolute layouts.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "postertree/core.hpp"
#include "postertree/raster.hpp"
#include "postertree/svg_dialect.hpp"

namespace postertree {

struct IntentVectorizeParams {
  double threshold = 0.5;
  int morph_radius_px = 2;
  double simplify_tolerance_px = 2.0;
  double min_area_fraction = 0.005;
};

struct IntentVectorization {
  std::vector<Polygon> polygons;
  bool empty_map = false;  // nothing reached the threshold
};

namespace detail {

inline std::vector<std::pair<int, int>> disc_offsets(int radius) {
  std::vector<std::pair<int, int>> out;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx * dx + dy * dy <= radius * radius + radius) out.emplace_back(dx, dy);
    }
  }
  return out;
}

// Out-of-bounds neighbours are ignored, so a full map survives opening.
inline BinMap morph(const BinMap& src, int radius, bool dilate) {
  if (radius <= 0) return src;
  const auto offsets = disc_offsets(radius);
  BinMap out(src.width(), src.height());
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) {
      bool v = !dilate;
      for (auto [dx, dy] : offsets) {
        const int nx = x + dx, ny = y + dy;
        if (nx < 0 || ny < 0 || nx >= src.width() || ny >= src.height()) continue;
        const bool s = src.at(nx, ny) != 0;
        if (dilate && s) {
          v = true;
          break;
        }
        if (!dilate && !s) {
          v = false;
          break;
        }
      }
      out.at(x, y) = v ? 1 : 0;
    }
  }
  return out;
}

inline BinMap morph_open_close(const BinMap& src, int radius) {
  BinMap opened = morph(morph(src, radius, false), radius, true);
  return morph(morph(opened, radius, true), radius, false);
}

inline constexpr std::array<std::pair<int, int>, 8> kNeighbours8{
    {{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};

// Follows the outer boundary of the 8-connected component containing
// (sx, sy) along pixel edges, keeping the component on the right. (sx, sy)
// must be the component's first pixel in raster order. Returns the corner
// lattice points where the boundary turns.
inline std::vector<std::pair<int, int>> trace_boundary(const BinMap& map, int sx, int sy) {
  auto fg = [&](int x, int y) {
    return x >= 0 && y >= 0 && x < map.width() && y < map.height() && map.at(x, y) != 0;
  };
  // Headings east, south, west, north (y grows downward).
  static constexpr std::array<std::pair<int, int>, 4> kStep{{{1, 0}, {0, 1}, {-1, 0}, {0, -1}}};
  // Pixels left and right of the unit edge leaving corner (cx, cy) along h.
  auto edge_pixels = [&](int cx, int cy, int h) -> std::pair<bool, bool> {
    switch (h) {
      case 0: return {fg(cx, cy - 1), fg(cx, cy)};
      case 1: return {fg(cx, cy), fg(cx - 1, cy)};
      case 2: return {fg(cx - 1, cy), fg(cx - 1, cy - 1)};
      default: return {fg(cx - 1, cy - 1), fg(cx, cy - 1)};
    }
  };
  std::vector<std::pair<int, int>> corners;
  int cx = sx, cy = sy, heading = 0;
  const std::size_t limit = 4 * (map.size() + 1);
  for (std::size_t step = 0; step < limit; ++step) {
    int next = heading;
    for (int turn : {3, 0, 1}) {  // left, straight, right
      const int h = (heading + turn) % 4;
      const auto [left, right] = edge_pixels(cx, cy, h);
      if (right && !left) {
        next = h;
        break;
      }
    }
    if (step == 0 || next != heading) corners.emplace_back(cx, cy);
    heading = next;
    cx += kStep[static_cast<std::size_t>(heading)].first;
    cy += kStep[static_cast<std::size_t>(heading)].second;
    if (cx == sx && cy == sy) break;
  }
  return corners;
}

inline void douglas_peucker(const std::vector<Point>& pts, std::size_t first, std::size_t last,
                            double tolerance, std::vector<char>& keep) {
  if (last <= first + 1) return;
  double best = -1;
  std::size_t idx = first;
  for (std::size_t i = first + 1; i < last; ++i) {
    const double d = segment_distance(pts[i], pts[first], pts[last]);
    if (d > best) {
      best = d;
      idx = i;
    }
  }
  if (best > tolerance) {
    keep[idx] = 1;
    douglas_peucker(pts, first, idx, tolerance, keep);
    douglas_peucker(pts, idx, last, tolerance, keep);
  }
}

inline std::size_t farthest_from(const Polygon& ring, Point p) {
  std::size_t far = 0;
  double best = -1;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const double d = std::hypot(ring[i].x - p.x, ring[i].y - p.y);
    if (d > best) {
      best = d;
      far = i;
    }
  }
  return far;
}

// Closed-ring simplification: anchor at two mutually distant vertices, then
// simplify both chains between them.
inline Polygon simplify_closed(const Polygon& ring, double tolerance) {
  if (ring.size() <= 3 || tolerance <= 0) return ring;
  const std::size_t a = farthest_from(ring, ring[farthest_from(ring, ring[0])]);
  std::vector<Point> pts(ring.begin() + static_cast<std::ptrdiff_t>(a), ring.end());
  pts.insert(pts.end(), ring.begin(), ring.begin() + static_cast<std::ptrdiff_t>(a));
  const std::size_t far = farthest_from(pts, pts[0]);
  pts.push_back(pts[0]);
  std::vector<char> keep(pts.size(), 0);
  keep[0] = keep[far] = keep[pts.size() - 1] = 1;
  douglas_peucker(pts, 0, far, tolerance, keep);
  douglas_peucker(pts, far, pts.size() - 1, tolerance, keep);
  Polygon out;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if (keep[i]) out.push_back(pts[i]);
  }
  return out;
}

}  // namespace detail

inline double polygon_area(const Polygon& poly) {
  double a = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point p = poly[i], q = poly[(i + 1) % poly.size()];
    a += p.x * q.y - q.x * p.y;
  }
  return std::abs(a) / 2;
}

inline IntentVectorization vectorize_intent(const GrayMap& map, const Canvas& canvas,
                                            const IntentVectorizeParams& params = {}) {
  validate(canvas);
  if (map.empty()) fail(ErrorCode::kBadAspect, "empty intent map");
  const double map_aspect = static_cast<double>(map.width()) / map.height();
  const double canvas_aspect = static_cast<double>(canvas.width_px) / canvas.height_px;
  if (std::abs(map_aspect - canvas_aspect) > 0.01 * canvas_aspect) {
    fail(ErrorCode::kBadAspect, "intent map aspect differs from canvas by more than 1%");
  }
  if (params.morph_radius_px < 0 || params.simplify_tolerance_px < 0) {
    fail(ErrorCode::kInvalidArgument, "negative vectorization parameter");
  }

  IntentVectorization result;
  BinMap bin = binarize(map, params.threshold);
  if (count_set(bin) == 0) {
    result.empty_map = true;
    return result;
  }
  bin = detail::morph_open_close(bin, params.morph_radius_px);

  const double sx = static_cast<double>(canvas.width_px) / map.width();
  const double sy = static_cast<double>(canvas.height_px) / map.height();
  const double total = static_cast<double>(map.size());

  std::vector<int> label(map.size(), -1);
  std::vector<std::pair<int, int>> queue;
  int next_label = 0;
  for (int y = 0; y < bin.height(); ++y) {
    for (int x = 0; x < bin.width(); ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * bin.width() + x;
      if (!bin[i] || label[i] >= 0) continue;
      const int id = next_label++;
      std::size_t pixels = 0;
      queue.assign(1, {x, y});
      label[i] = id;
      while (!queue.empty()) {
        auto [px, py] = queue.back();
        queue.pop_back();
        ++pixels;
        for (auto [dx, dy] : detail::kNeighbours8) {
          const int nx = px + dx, ny = py + dy;
          if (nx < 0 || ny < 0 || nx >= bin.width() || ny >= bin.height()) continue;
          const std::size_t j = static_cast<std::size_t>(ny) * bin.width() + nx;
          if (bin[j] && label[j] < 0) {
            label[j] = id;
            queue.emplace_back(nx, ny);
          }
        }
      }
      if (static_cast<double>(pixels) / total < params.min_area_fraction) continue;
      Polygon ring;
      for (auto [cx, cy] : detail::trace_boundary(bin, x, y)) {
        ring.push_back({cx * sx, cy * sy});
      }
      ring = detail::simplify_closed(ring, params.simplify_tolerance_px);
      if (ring.size() >= 3 && polygon_area(ring) > 0) result.polygons.push_back(std::move(ring));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Nesting

struct NestParams {
  std::optional<double> epsilon_px;  // defaults to 0.01 * max(canvas w, h)
  int max_depth = 4;

  double epsilon_for(const Canvas& c) const {
    return epsilon_px.value_or(0.01 * std::max(c.width_px, c.height_px));
  }
};

// Ablation switches: skip nesting, or omit intent nodes.
struct TreeBuildOptions {
  bool flat_trees = false;
  bool no_intent = false;
};

// Near-identical extents on all four sides, within epsilon.
inline bool nests_within(const Rect& wrapper, const Rect& child, double epsilon) {
  return std::abs(wrapper.x - child.x) <= epsilon && std::abs(wrapper.y - child.y) <= epsilon &&
         std::abs(wrapper.right() - child.right()) <= epsilon &&
         std::abs(wrapper.bottom() - child.bottom()) <= epsilon;
}

namespace detail {

struct NestItem {
  LayoutElement element;
  Rect box;
  std::size_t order = 0;
};

inline void assign_leaf_ids(std::vector<TreeNode>& nodes, std::size_t& index) {
  for (auto& n : nodes) {
    if (n.is_group()) {
      assign_leaf_ids(n.children, index);
    } else if (n.is_leaf()) {
      n.id = leaf_id(n.category, index++);
    }
  }
}

inline TreeNode leaf_at(const NestItem& item, Point origin) {
  return TreeNode::leaf(item.element.category, translated(item.element.shape, -origin.x, -origin.y));
}

// `items` are in absolute coordinates and already sorted; emitted nodes are
// relative to `origin`. `level` is the depth the emitted nodes occupy.
inline std::vector<TreeNode> nest_items(const std::vector<NestItem>& items, Point origin, int level,
                                        double epsilon, int max_depth) {
  std::vector<TreeNode> out;
  std::vector<char> claimed(items.size(), 0);
  for (std::size_t a = 0; a < items.size(); ++a) {
    if (claimed[a]) continue;
    const NestItem& wrapper = items[a];
    if (wrapper.element.category.is_underlay() && level < max_depth) {
      std::vector<NestItem> members;
      for (std::size_t b = a + 1; b < items.size(); ++b) {
        if (!claimed[b] && nests_within(wrapper.box, items[b].box, epsilon)) {
          claimed[b] = 1;
          members.push_back(items[b]);
        }
      }
      if (!members.empty()) {
        const Point group_origin{wrapper.box.x, wrapper.box.y};
        std::vector<TreeNode> children{leaf_at(wrapper, group_origin)};
        auto inner = nest_items(members, group_origin, level + 1, epsilon, max_depth);
        std::move(inner.begin(), inner.end(), std::back_inserter(children));
        out.push_back(TreeNode::group(group_origin - origin, std::move(children)));
        continue;
      }
    }
    out.push_back(leaf_at(wrapper, origin));
  }
  return out;
}

}  // namespace detail

// Underlays first by descending bounding-box area, then everything else in
// reading order (top, then left). Original order breaks remaining ties.
inline std::vector<std::size_t> nesting_order(const std::vector<LayoutElement>& elements) {
  std::vector<std::size_t> order(elements.size());
  std::vector<Rect> boxes;
  boxes.reserve(elements.size());
  for (std::size_t i = 0; i < elements.size(); ++i) {
    order[i] = i;
    boxes.push_back(bounding_box(elements[i].shape));
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const bool ua = elements[a].category.is_underlay(), ub = elements[b].category.is_underlay();
    if (ua != ub) return ua;
    if (ua && boxes[a].area() != boxes[b].area()) return boxes[a].area() > boxes[b].area();
    if (boxes[a].y != boxes[b].y) return boxes[a].y < boxes[b].y;
    return boxes[a].x < boxes[b].x;
  });
  return order;
}

inline LayoutTree build_tree(const DatasetRecord& record, const NestParams& params = {},
                             const TreeBuildOptions& options = {}) {
  validate(record.canvas);
  if (params.max_depth < 1) fail(ErrorCode::kInvalidArgument, "max_depth must be >= 1");
  LayoutTree tree;
  tree.canvas = record.canvas;
  if (!options.no_intent) {
    for (const auto& poly : record.intent.polygons) tree.intent_nodes.push_back(TreeNode::intent(poly));
  }
  std::vector<detail::NestItem> items;
  for (std::size_t idx : nesting_order(record.elements)) {
    const auto& e = record.elements[idx];
    items.push_back({e, bounding_box(e.shape), idx});
  }
  const int max_depth = options.flat_trees ? 1 : params.max_depth;
  tree.element_nodes =
      detail::nest_items(items, {0, 0}, 1, params.epsilon_for(record.canvas), max_depth);
  std::size_t index = 0;
  detail::assign_leaf_ids(tree.element_nodes, index);
  return tree;
}

// Absolute-coordinate elements in depth-first order; intent nodes excluded.
inline Layout flatten_tree(const LayoutTree& tree) {
  Layout layout;
  layout.canvas = tree.canvas;
  for_each_leaf(tree.element_nodes, {0, 0}, [&](const TreeNode& leaf, Point origin) {
    layout.elements.push_back({leaf.category, translated(leaf.shape, origin.x, origin.y)});
  });
  return layout;
}

// Leaf ids in depth-first order, as stored in the tree.
inline std::vector<std::string> leaf_ids(const LayoutTree& tree) {
  std::vector<std::string> ids;
  for_each_leaf(tree.element_nodes, {0, 0}, [&](const TreeNode& leaf, Point) { ids.push_back(leaf.id); });
  return ids;
}

inline std::vector<Polygon> intent_polygons(const LayoutTree& tree) {
  std::vector<Polygon> out;
  for (const auto& n : tree.intent_nodes) out.push_back(n.polygon);
  return out;
}

}  // namespace postertree
