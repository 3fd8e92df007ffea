#pragma once

// Serializer and tolerant parser for the layout-tree SVG dialect. The
// grammar is documented in docs/dialect.md.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "postertree/core.hpp"

namespace postertree {

inline constexpr std::string_view kSvgNamespace = "http://www.w3.org/2000/svg";

// ---------------------------------------------------------------------------
// Numbers: every coordinate is carried on a 0.01 px grid once serialized.

namespace detail {
inline constexpr double kMaxQuantizable = 9.0e13;
}

inline double quantize(double v) {
  if (!std::isfinite(v) || std::abs(v) > detail::kMaxQuantizable) return v;
  return static_cast<double>(std::llround(v * 100.0)) / 100.0;
}

// Shortest decimal for quantize(v): at most two fraction digits, no
// trailing zeros, never "-0".
inline std::string format_number(double v) {
  if (!std::isfinite(v) || std::abs(v) > detail::kMaxQuantizable) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  }
  long long centi = std::llround(v * 100.0);
  std::string out;
  if (centi < 0) {
    out.push_back('-');
    centi = -centi;
  }
  out += std::to_string(centi / 100);
  const long long frac = centi % 100;
  if (frac != 0) {
    out.push_back('.');
    out.push_back(static_cast<char>('0' + frac / 10));
    if (frac % 10 != 0) out.push_back(static_cast<char>('0' + frac % 10));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Canonical form

namespace detail {

inline Point quantize(Point p) { return {postertree::quantize(p.x), postertree::quantize(p.y)}; }

inline Shape quantize_shape(const Shape& shape) {
  struct Visitor {
    Shape operator()(const Rect& r) const {
      return Rect{postertree::quantize(r.x), postertree::quantize(r.y), postertree::quantize(r.w),
                  postertree::quantize(r.h)};
    }
    Shape operator()(const RotatedRect& r) const {
      return RotatedRect{postertree::quantize(r.x), postertree::quantize(r.y),
                         postertree::quantize(r.w), postertree::quantize(r.h),
                         normalize_angle(postertree::quantize(r.angle_deg))};
    }
    Shape operator()(const Ellipse& e) const {
      return Ellipse{postertree::quantize(e.cx), postertree::quantize(e.cy),
                     postertree::quantize(e.rx), postertree::quantize(e.ry)};
    }
    Shape operator()(PathCurve p) const {
      p.start = quantize(p.start);
      for (auto& s : p.segments) {
        s.c1 = quantize(s.c1);
        s.c2 = quantize(s.c2);
        s.end = quantize(s.end);
      }
      return p;
    }
  };
  return std::visit(Visitor{}, shape);
}

inline bool has_leaf(const TreeNode& node) {
  if (node.is_leaf()) return true;
  if (!node.is_group()) return false;
  for (const auto& c : node.children) {
    if (has_leaf(c)) return true;
  }
  return false;
}

inline std::string leaf_id(const ElementCategory& c, std::size_t index) {
  return std::string(category_token(c)) + "_" + std::to_string(index);
}

inline void canonicalize_nodes(std::vector<TreeNode>& nodes, std::size_t& next_index) {
  std::vector<TreeNode> kept;
  kept.reserve(nodes.size());
  for (auto& n : nodes) {
    if (n.is_group()) {
      if (!has_leaf(n)) continue;
      n.offset = quantize(n.offset);
      n.id.clear();
      canonicalize_nodes(n.children, next_index);
    } else if (n.is_leaf()) {
      n.shape = quantize_shape(n.shape);
      n.id = leaf_id(n.category, next_index++);
    } else {
      continue;  // intent nodes never live among elements
    }
    kept.push_back(std::move(n));
  }
  nodes = std::move(kept);
}

}  // namespace detail

// Renumbers leaf ids in depth-first order, snaps numbers to the serialized
// grid and removes groups that hold no leaves.
inline LayoutTree canonicalize(LayoutTree tree) {
  for (auto& intent : tree.intent_nodes) {
    for (auto& p : intent.polygon) p = detail::quantize(p);
    intent.id.clear();
  }
  std::size_t next = 0;
  detail::canonicalize_nodes(tree.element_nodes, next);
  return tree;
}

// ---------------------------------------------------------------------------
// Serialization

namespace detail {

inline void append_attr(std::string& out, std::string_view name, double v) {
  out += ' ';
  out += name;
  out += "=\"";
  out += format_number(v);
  out += '"';
}

inline std::string points_attr(const Polygon& poly) {
  std::string s;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    if (i) s += ' ';
    s += format_number(poly[i].x);
    s += ',';
    s += format_number(poly[i].y);
  }
  return s;
}

inline std::string path_data(const PathCurve& p) {
  std::string d = "M " + format_number(p.start.x) + " " + format_number(p.start.y);
  for (const auto& s : p.segments) {
    d += " C " + format_number(s.c1.x) + " " + format_number(s.c1.y) + " " +
         format_number(s.c2.x) + " " + format_number(s.c2.y) + " " + format_number(s.end.x) +
         " " + format_number(s.end.y);
  }
  if (p.closed) d += " Z";
  return d;
}

inline void serialize_leaf(const TreeNode& n, std::size_t index, std::string& out) {
  const Shape shape = quantize_shape(n.shape);
  const std::string id = leaf_id(n.category, index);
  if (const auto* r = std::get_if<Rect>(&shape)) {
    out += "<rect";
    append_attr(out, "x", r->x);
    append_attr(out, "y", r->y);
    append_attr(out, "width", r->w);
    append_attr(out, "height", r->h);
  } else if (const auto* rr = std::get_if<RotatedRect>(&shape)) {
    out += "<rect";
    append_attr(out, "x", rr->x);
    append_attr(out, "y", rr->y);
    append_attr(out, "width", rr->w);
    append_attr(out, "height", rr->h);
    const Point c = rr->center();
    out += " transform=\"rotate(" + format_number(rr->angle_deg) + " " + format_number(c.x) + " " +
           format_number(c.y) + ")\"";
  } else if (const auto* e = std::get_if<Ellipse>(&shape)) {
    out += "<ellipse";
    append_attr(out, "cx", e->cx);
    append_attr(out, "cy", e->cy);
    append_attr(out, "rx", e->rx);
    append_attr(out, "ry", e->ry);
  } else {
    out += "<path d=\"" + path_data(std::get<PathCurve>(shape)) + "\"";
  }
  out += " id=\"" + id + "\"/>";
}

inline void serialize_nodes(const std::vector<TreeNode>& nodes, std::size_t& next_index,
                            std::string& out) {
  for (const auto& n : nodes) {
    if (n.is_group()) {
      if (!has_leaf(n)) continue;
      out += "<svg";
      append_attr(out, "x", n.offset.x);
      append_attr(out, "y", n.offset.y);
      out += ">";
      serialize_nodes(n.children, next_index, out);
      out += "</svg>";
    } else if (n.is_leaf()) {
      serialize_leaf(n, next_index++, out);
    }
  }
}

}  // namespace detail

inline std::string opening_tag(const Canvas& canvas) {
  return "<svg width=\"" + std::to_string(canvas.width_px) + "\" height=\"" +
         std::to_string(canvas.height_px) + "\" xmlns=\"" + std::string(kSvgNamespace) + "\">";
}

inline std::string serialize_intents(const std::vector<TreeNode>& intents) {
  std::string out;
  for (const auto& n : intents) {
    out += "<polygon points=\"" + detail::points_attr(n.polygon) + "\"/>";
  }
  return out;
}

inline std::string serialize_tree(const LayoutTree& tree) {
  std::string out = opening_tag(tree.canvas);
  out += serialize_intents(tree.intent_nodes);
  std::size_t next = 0;
  detail::serialize_nodes(tree.element_nodes, next, out);
  out += "</svg>";
  return out;
}

struct DialectDocument {
  LayoutTree tree;
  std::string raw_text;
};

inline DialectDocument make_document(const LayoutTree& tree) {
  return {canonicalize(tree), serialize_tree(tree)};
}

// ---------------------------------------------------------------------------
// Parsing

struct ParseOptions {
  std::optional<Canvas> expected_canvas;
  int max_depth = 6;
};

struct ParseResult {
  LayoutTree tree;
  int warnings = 0;
};

namespace detail {

struct XmlTag {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attrs;
  bool closing = false;
  bool self_closing = false;

  const std::string* attr(std::string_view key) const {
    for (const auto& [k, v] : attrs) {
      if (k == key) return &v;
    }
    return nullptr;
  }
};

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }
inline bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == ':' || c == '-' || c == '.';
}
inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Minimal pull scanner over markup; skips text, comments, processing
// instructions and declarations. Malformed tags are skipped and counted.
class TagScanner {
 public:
  TagScanner(std::string_view text, int& warnings) : text_(text), warnings_(warnings) {}

  std::optional<XmlTag> next() {
    while (true) {
      const auto lt = text_.find('<', pos_);
      if (lt == std::string_view::npos) {
        pos_ = text_.size();
        return std::nullopt;
      }
      pos_ = lt;
      if (starts_with("<!--")) {
        skip_past("-->");
        continue;
      }
      if (starts_with("<?")) {
        skip_past("?>");
        continue;
      }
      if (starts_with("<!")) {
        skip_past(">");
        continue;
      }
      if (auto tag = read_tag()) return tag;
      ++warnings_;
    }
  }

 private:
  bool starts_with(std::string_view s) const { return text_.substr(pos_, s.size()) == s; }
  void skip_past(std::string_view s) {
    const auto end = text_.find(s, pos_);
    pos_ = end == std::string_view::npos ? text_.size() : end + s.size();
  }
  void skip_spaces() {
    while (pos_ < text_.size() && is_space(text_[pos_])) ++pos_;
  }
  std::string read_name() {
    const auto start = pos_;
    while (pos_ < text_.size() && is_name_char(text_[pos_])) ++pos_;
    return lower(text_.substr(start, pos_ - start));
  }

  // pos_ sits on '<'. On failure advances by one character.
  std::optional<XmlTag> read_tag() {
    const auto start = pos_;
    ++pos_;
    XmlTag tag;
    if (pos_ < text_.size() && text_[pos_] == '/') {
      tag.closing = true;
      ++pos_;
    }
    tag.name = read_name();
    if (tag.name.empty()) {
      pos_ = start + 1;
      return std::nullopt;
    }
    while (true) {
      skip_spaces();
      if (pos_ >= text_.size()) {
        pos_ = start + 1;
        return std::nullopt;
      }
      const char c = text_[pos_];
      if (c == '>') {
        ++pos_;
        return tag;
      }
      if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '>') {
        pos_ += 2;
        tag.self_closing = true;
        return tag;
      }
      std::string key = read_name();
      if (key.empty()) {
        pos_ = start + 1;
        return std::nullopt;
      }
      skip_spaces();
      std::string value;
      if (pos_ < text_.size() && text_[pos_] == '=') {
        ++pos_;
        skip_spaces();
        if (pos_ >= text_.size()) {
          pos_ = start + 1;
          return std::nullopt;
        }
        const char q = text_[pos_];
        if (q == '"' || q == '\'') {
          const auto close = text_.find(q, pos_ + 1);
          if (close == std::string_view::npos) {
            pos_ = start + 1;
            return std::nullopt;
          }
          value = std::string(text_.substr(pos_ + 1, close - pos_ - 1));
          pos_ = close + 1;
        } else {
          const auto vstart = pos_;
          while (pos_ < text_.size() && !is_space(text_[pos_]) && text_[pos_] != '>' &&
                 !(text_[pos_] == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '>')) {
            ++pos_;
          }
          value = std::string(text_.substr(vstart, pos_ - vstart));
        }
      }
      tag.attrs.emplace_back(std::move(key), std::move(value));
    }
  }

  std::string_view text_;
  int& warnings_;
  std::size_t pos_ = 0;
};

inline constexpr double kMaxCoordinate = 1.0e9;

// Reads one number from `s` at `pos`, skipping separators first.
inline std::optional<double> read_number(std::string_view s, std::size_t& pos) {
  while (pos < s.size() && (is_space(s[pos]) || s[pos] == ',')) ++pos;
  if (pos >= s.size()) return std::nullopt;
  std::size_t begin = pos;
  if (s[begin] == '+') ++begin;
  double v = 0;
  auto res = std::from_chars(s.data() + begin, s.data() + s.size(), v);
  if (res.ec != std::errc{}) return std::nullopt;
  if (!std::isfinite(v) || std::abs(v) > kMaxCoordinate) return std::nullopt;
  pos = static_cast<std::size_t>(res.ptr - s.data());
  return v;
}

inline double attr_number(const XmlTag& tag, std::string_view key, std::optional<double> fallback) {
  const std::string* raw = tag.attr(key);
  if (!raw) {
    if (fallback) return *fallback;
    fail(ErrorCode::kMalformedGeometry, "<" + tag.name + "> lacks attribute " + std::string(key));
  }
  std::string_view s = *raw;
  std::size_t pos = 0;
  auto v = read_number(s, pos);
  if (!v) fail(ErrorCode::kMalformedGeometry, "non-numeric " + std::string(key) + "=\"" + *raw + "\"");
  std::string_view rest = s.substr(pos);
  while (!rest.empty() && is_space(rest.back())) rest.remove_suffix(1);
  while (!rest.empty() && is_space(rest.front())) rest.remove_prefix(1);
  if (!rest.empty() && rest != "px") {
    fail(ErrorCode::kMalformedGeometry, "non-numeric " + std::string(key) + "=\"" + *raw + "\"");
  }
  return *v;
}

inline double positive_attr(const XmlTag& tag, std::string_view key) {
  const double v = attr_number(tag, key, std::nullopt);
  if (!(v > 0)) {
    fail(ErrorCode::kMalformedGeometry, "non-positive " + std::string(key) + " on <" + tag.name + ">");
  }
  return v;
}

struct Transform {
  double rotate = 0;
  std::optional<Point> pivot;  // rotation pivot; absent means the origin
  bool has_rotate = false;
  Point translate;
};

inline std::optional<Transform> parse_transform(std::string_view s) {
  Transform t;
  std::size_t pos = 0;
  while (true) {
    while (pos < s.size() && (is_space(s[pos]) || s[pos] == ',')) ++pos;
    if (pos >= s.size()) return t;
    const auto open = s.find('(', pos);
    if (open == std::string_view::npos) return std::nullopt;
    std::string fn = lower(s.substr(pos, open - pos));
    while (!fn.empty() && is_space(fn.back())) fn.pop_back();
    const auto close = s.find(')', open);
    if (close == std::string_view::npos) return std::nullopt;
    std::string_view args = s.substr(open + 1, close - open - 1);
    std::vector<double> nums;
    std::size_t apos = 0;
    while (true) {
      while (apos < args.size() && (is_space(args[apos]) || args[apos] == ',')) ++apos;
      if (apos >= args.size()) break;
      auto v = read_number(args, apos);
      if (!v) return std::nullopt;
      nums.push_back(*v);
    }
    if (fn == "rotate" && (nums.size() == 1 || nums.size() == 3) && !t.has_rotate &&
        t.translate == Point{}) {
      t.has_rotate = true;
      t.rotate = nums[0];
      if (nums.size() == 3) t.pivot = Point{nums[1], nums[2]};
    } else if (fn == "translate" && (nums.size() == 1 || nums.size() == 2) && !t.has_rotate) {
      t.translate = t.translate + Point{nums[0], nums.size() == 2 ? nums[1] : 0.0};
    } else {
      return std::nullopt;
    }
    pos = close + 1;
  }
}

inline std::optional<PathCurve> parse_path_data(std::string_view d, int& warnings) {
  PathCurve path;
  bool started = false;
  Point cur, subpath_start;
  char cmd = 0;
  std::size_t pos = 0;
  auto need = [&](int n, std::vector<double>& out) -> bool {
    out.clear();
    for (int i = 0; i < n; ++i) {
      auto v = read_number(d, pos);
      if (!v) return false;
      out.push_back(*v);
    }
    return true;
  };
  auto line_to = [&](Point p) {
    path.segments.push_back({cur + (1.0 / 3.0) * (p - cur), cur + (2.0 / 3.0) * (p - cur), p});
    cur = p;
  };
  std::vector<double> v;
  while (true) {
    while (pos < d.size() && (is_space(d[pos]) || d[pos] == ',')) ++pos;
    if (pos >= d.size()) break;
    const char c = d[pos];
    if (std::isalpha(static_cast<unsigned char>(c))) {
      cmd = c;
      ++pos;
      if (cmd == 'Z' || cmd == 'z') {
        if (!started) return std::nullopt;
        path.closed = true;
        while (pos < d.size() && is_space(d[pos])) ++pos;
        if (pos < d.size()) ++warnings;  // only the first subpath is kept
        break;
      }
    } else if (cmd == 0) {
      return std::nullopt;
    }
    const bool rel = std::islower(static_cast<unsigned char>(cmd));
    const Point base = rel ? cur : Point{};
    switch (cmd) {
      case 'M':
      case 'm':
        if (!need(2, v)) return std::nullopt;
        if (started) {
          ++warnings;
          pos = d.size();
          break;
        }
        cur = base + Point{v[0], v[1]};
        subpath_start = cur;
        path.start = cur;
        started = true;
        cmd = rel ? 'l' : 'L';
        break;
      case 'L':
      case 'l':
        if (!started || !need(2, v)) return std::nullopt;
        line_to(base + Point{v[0], v[1]});
        break;
      case 'H':
      case 'h':
        if (!started || !need(1, v)) return std::nullopt;
        line_to({(rel ? cur.x : 0.0) + v[0], cur.y});
        break;
      case 'V':
      case 'v':
        if (!started || !need(1, v)) return std::nullopt;
        line_to({cur.x, (rel ? cur.y : 0.0) + v[0]});
        break;
      case 'C':
      case 'c':
        if (!started || !need(6, v)) return std::nullopt;
        path.segments.push_back(
            {base + Point{v[0], v[1]}, base + Point{v[2], v[3]}, base + Point{v[4], v[5]}});
        cur = path.segments.back().end;
        break;
      default:
        return std::nullopt;
    }
  }
  (void)subpath_start;
  if (!started || path.segments.empty()) return std::nullopt;
  return path;
}

inline std::optional<Polygon> parse_points(std::string_view s) {
  Polygon poly;
  std::size_t pos = 0;
  while (true) {
    while (pos < s.size() && (is_space(s[pos]) || s[pos] == ',')) ++pos;
    if (pos >= s.size()) break;
    auto x = read_number(s, pos);
    if (!x) return std::nullopt;
    auto y = read_number(s, pos);
    if (!y) return std::nullopt;
    poly.push_back({*x, *y});
  }
  return poly;
}

// Recovers the category from an id of the form "{token}_{digits}".
inline std::optional<ElementCategory> category_from_id(std::string_view id) {
  const auto us = id.rfind('_');
  if (us == std::string_view::npos || us == 0 || us + 1 >= id.size()) return std::nullopt;
  for (std::size_t i = us + 1; i < id.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(id[i]))) return std::nullopt;
  }
  return category_from_token(lower(id.substr(0, us)));
}

// Returns the first "<svg" opening that begins an element.
inline std::optional<std::size_t> find_svg_open(std::string_view text, std::size_t from = 0) {
  while (true) {
    const auto p = text.find("<svg", from);
    if (p == std::string_view::npos) return std::nullopt;
    const std::size_t after = p + 4;
    if (after >= text.size() || is_space(text[after]) || text[after] == '>' || text[after] == '/') {
      return p;
    }
    from = p + 1;
  }
}

inline std::optional<std::pair<std::size_t, std::size_t>> find_svg_block(std::string_view text) {
  auto open = find_svg_open(text);
  if (!open) return std::nullopt;
  int depth = 0;
  std::size_t pos = *open;
  while (pos < text.size()) {
    const auto next_open = find_svg_open(text, pos);
    const auto next_close = text.find("</svg>", pos);
    if (next_close == std::string_view::npos) break;
    if (next_open && *next_open < next_close) {
      // Self-closing svg tags contribute no depth.
      const auto gt = text.find('>', *next_open);
      if (gt != std::string_view::npos && gt > 0 && text[gt - 1] == '/') {
        if (depth == 0) return std::pair{*open, gt + 1};
      } else {
        ++depth;
      }
      pos = *next_open + 4;
    } else {
      --depth;
      pos = next_close + 6;
      if (depth <= 0) return std::pair{*open, pos};
    }
  }
  return std::pair{*open, text.size()};
}

inline Shape scale_shape(const Shape& shape, double sx, double sy) {
  struct Visitor {
    double sx, sy;
    Point s(Point p) const { return {p.x * sx, p.y * sy}; }
    Shape operator()(const Rect& r) const { return Rect{r.x * sx, r.y * sy, r.w * sx, r.h * sy}; }
    Shape operator()(RotatedRect r) const {
      return RotatedRect{r.x * sx, r.y * sy, r.w * sx, r.h * sy, r.angle_deg};
    }
    Shape operator()(const Ellipse& e) const {
      return Ellipse{e.cx * sx, e.cy * sy, e.rx * sx, e.ry * sy};
    }
    Shape operator()(PathCurve p) const {
      p.start = s(p.start);
      for (auto& seg : p.segments) seg = {s(seg.c1), s(seg.c2), s(seg.end)};
      return p;
    }
  };
  return std::visit(Visitor{sx, sy}, shape);
}

inline void scale_nodes(std::vector<TreeNode>& nodes, double sx, double sy) {
  for (auto& n : nodes) {
    if (n.is_group()) {
      n.offset = {n.offset.x * sx, n.offset.y * sy};
      scale_nodes(n.children, sx, sy);
    } else if (n.is_leaf()) {
      n.shape = scale_shape(n.shape, sx, sy);
    } else {
      for (auto& p : n.polygon) p = {p.x * sx, p.y * sy};
    }
  }
}

inline void assign_missing_ids(std::vector<TreeNode>& nodes, std::size_t& index) {
  for (auto& n : nodes) {
    if (n.is_group()) {
      assign_missing_ids(n.children, index);
    } else if (n.is_leaf()) {
      if (n.id.empty()) n.id = leaf_id(n.category, index);
      ++index;
    }
  }
}

inline constexpr double kPivotTolerance = 0.006;

inline TreeNode parse_rect(const XmlTag& tag, int& warnings) {
  const double x = attr_number(tag, "x", 0.0);
  const double y = attr_number(tag, "y", 0.0);
  const double w = positive_attr(tag, "width");
  const double h = positive_attr(tag, "height");
  TreeNode leaf = TreeNode::leaf(category::kText, Rect{x, y, w, h});
  if (const auto* tr = tag.attr("transform")) {
    auto t = parse_transform(*tr);
    if (!t) {
      ++warnings;
      return leaf;
    }
    RotatedRect rr{x + t->translate.x, y + t->translate.y, w, h, 0};
    if (t->has_rotate) {
      rr.angle_deg = normalize_angle(t->rotate);
      const Point pivot = t->pivot.value_or(Point{0, 0});
      const Point c{x + w / 2, y + h / 2};
      if (std::abs(pivot.x - c.x) > kPivotTolerance || std::abs(pivot.y - c.y) > kPivotTolerance) {
        const Point moved = rotate_about(c, pivot, t->rotate);
        rr.x += moved.x - c.x;
        rr.y += moved.y - c.y;
      }
      leaf.shape = rr;
    } else {
      leaf.shape = Rect{rr.x, rr.y, w, h};
    }
  }
  return leaf;
}

inline Point parse_translate_only(const XmlTag& tag, int& warnings) {
  const auto* tr = tag.attr("transform");
  if (!tr) return {};
  auto t = parse_transform(*tr);
  if (!t || t->has_rotate) {
    ++warnings;
    return {};
  }
  return t->translate;
}

}  // namespace detail

// Extracts the first <svg> block from `text` (backends may wrap it in prose)
// and parses the dialect subset.
inline ParseResult parse_tree_ex(std::string_view text, const ParseOptions& options = {}) {
  using namespace detail;
  const auto block = find_svg_block(text);
  if (!block) fail(ErrorCode::kNoSvgBlock, "no <svg> block found");
  const std::string_view svg = text.substr(block->first, block->second - block->first);

  ParseResult result;
  int& warnings = result.warnings;
  TagScanner scanner(svg, warnings);

  auto root = scanner.next();
  if (!root || root->name != "svg" || root->closing) {
    fail(ErrorCode::kNoSvgBlock, "malformed <svg> opening tag");
  }

  auto read_dim = [&](std::string_view key) -> std::optional<int> {
    if (!root->attr(key)) return std::nullopt;
    const double v = attr_number(*root, key, std::nullopt);
    if (!(v >= 0.5) || v > kMaxCoordinate) {
      fail(ErrorCode::kMalformedGeometry, "non-positive canvas " + std::string(key));
    }
    return static_cast<int>(std::lround(v));
  };
  const auto width = read_dim("width");
  const auto height = read_dim("height");
  Canvas canvas;
  if (width && height) {
    canvas = {*width, *height};
  } else if (options.expected_canvas) {
    canvas = *options.expected_canvas;
    ++warnings;
  } else {
    fail(ErrorCode::kMalformedGeometry, "canvas size missing");
  }
  result.tree.canvas = canvas;

  // Stack of open element lists; index 0 is the root.
  std::vector<std::vector<TreeNode>*> stack{&result.tree.element_nodes};
  std::vector<TreeNode*> open_groups;
  bool closed_root = root->self_closing;

  while (!closed_root) {
    auto tag = scanner.next();
    if (!tag) {
      ++warnings;  // unterminated block
      break;
    }
    const std::string& name = tag->name;
    if (tag->closing) {
      if (name == "svg") {
        if (open_groups.empty()) {
          closed_root = true;
        } else {
          open_groups.pop_back();
          stack.pop_back();
        }
      }
      continue;
    }
    auto& siblings = *stack.back();
    if (name == "svg") {
      const int contents_depth = static_cast<int>(stack.size()) + 1;
      if (contents_depth > options.max_depth) {
        fail(ErrorCode::kDepthExceeded, "group nesting exceeds depth " +
                                            std::to_string(options.max_depth));
      }
      Point offset{attr_number(*tag, "x", 0.0), attr_number(*tag, "y", 0.0)};
      siblings.push_back(TreeNode::group(offset, {}));
      if (!tag->self_closing) {
        open_groups.push_back(&siblings.back());
        stack.push_back(&siblings.back().children);
      }
      continue;
    }
    std::optional<TreeNode> leaf;
    if (name == "rect") {
      leaf = parse_rect(*tag, warnings);
    } else if (name == "ellipse" || name == "circle") {
      const double cx = attr_number(*tag, "cx", 0.0), cy = attr_number(*tag, "cy", 0.0);
      Ellipse e;
      if (name == "circle") {
        const double r = positive_attr(*tag, "r");
        e = {cx, cy, r, r};
      } else {
        e = {cx, cy, positive_attr(*tag, "rx"), positive_attr(*tag, "ry")};
      }
      const Point t = parse_translate_only(*tag, warnings);
      leaf = TreeNode::leaf(category::kText, Ellipse{e.cx + t.x, e.cy + t.y, e.rx, e.ry});
    } else if (name == "path") {
      const std::string* d = tag->attr("d");
      auto path = d ? parse_path_data(*d, warnings) : std::nullopt;
      if (!path) {
        ++warnings;
      } else {
        const Point t = parse_translate_only(*tag, warnings);
        leaf = TreeNode::leaf(category::kText, translated(Shape{*path}, t.x, t.y));
      }
    } else if (name == "polygon") {
      const std::string* pts = tag->attr("points");
      std::optional<Polygon> poly = pts ? parse_points(*pts) : std::nullopt;
      if (pts && !poly) fail(ErrorCode::kMalformedGeometry, "non-numeric polygon points");
      if (poly && poly->size() >= 3 && stack.size() == 1 && result.tree.element_nodes.empty()) {
        result.tree.intent_nodes.push_back(TreeNode::intent(std::move(*poly)));
      } else {
        ++warnings;
      }
    } else {
      ++warnings;
      if (!tag->self_closing) {
        // Skip the unknown element together with its content.
        int depth = 1;
        while (depth > 0) {
          auto inner = scanner.next();
          if (!inner) break;
          if (inner->name != name || inner->self_closing) continue;
          depth += inner->closing ? -1 : 1;
        }
      }
    }
    if (leaf) {
      if (const auto* id = tag->attr("id")) {
        if (auto cat = category_from_id(*id)) {
          leaf->category = *cat;
          leaf->id = *id;
        } else {
          ++warnings;
        }
      } else {
        ++warnings;
      }
      siblings.push_back(std::move(*leaf));
    }
  }

  std::size_t index = 0;
  assign_missing_ids(result.tree.element_nodes, index);

  if (options.expected_canvas && !(*options.expected_canvas == canvas)) {
    const double sx = static_cast<double>(options.expected_canvas->width_px) / canvas.width_px;
    const double sy = static_cast<double>(options.expected_canvas->height_px) / canvas.height_px;
    scale_nodes(result.tree.intent_nodes, sx, sy);
    scale_nodes(result.tree.element_nodes, sx, sy);
    result.tree.canvas = *options.expected_canvas;
    ++warnings;
  }
  return result;
}

inline LayoutTree parse_tree(std::string_view text, std::optional<Canvas> expected_canvas = {}) {
  return parse_tree_ex(text, ParseOptions{expected_canvas, 6}).tree;
}

}  // namespace postertree
