#pragma once

// Turns layout trees into poster mockups and fills them with materials.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "postertree/core.hpp"
#include "postertree/generation.hpp"
#include "postertree/svg_dialect.hpp"
#include "postertree/tree_builder.hpp"

namespace postertree {

struct MockupOptions {
  double font_scale = 0.7;
  double min_font_size = 8.0;
  std::string underlay_fill = "#d9d9d9";
};

struct Material {
  std::optional<std::string> text;
  std::optional<std::string> href;
  std::optional<std::string> font_family;
  std::optional<std::string> font_weight;
  std::optional<std::string> fill;
};

using Materials = std::map<std::string, Material>;

inline Materials materials_from_json(const nlohmann::json& j) {
  Materials out;
  for (const auto& [id, v] : j.items()) {
    Material m;
    if (v.is_string()) {
      m.text = v.get<std::string>();
    } else {
      if (v.contains("text")) m.text = v.at("text").get<std::string>();
      if (v.contains("href")) m.href = v.at("href").get<std::string>();
      if (v.contains("font_family")) m.font_family = v.at("font_family").get<std::string>();
      if (v.contains("font_weight")) m.font_weight = v.at("font_weight").get<std::string>();
      if (v.contains("fill")) m.fill = v.at("fill").get<std::string>();
    }
    out[id] = std::move(m);
  }
  return out;
}

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

namespace detail {

inline std::string num(double v) { return format_number(v); }

inline std::string rotate_attr(const RotatedRect& r) {
  const Point c = r.center();
  return " transform=\"rotate(" + num(r.angle_deg) + " " + num(c.x) + " " + num(c.y) + ")\"";
}

inline std::string ellipse_path(const Ellipse& e) {
  return "M " + num(e.cx - e.rx) + " " + num(e.cy) + " A " + num(e.rx) + " " + num(e.ry) + " 0 1 1 " +
         num(e.cx + e.rx) + " " + num(e.cy) + " A " + num(e.rx) + " " + num(e.ry) + " 0 1 1 " +
         num(e.cx - e.rx) + " " + num(e.cy) + " Z";
}

class MockupWriter {
 public:
  explicit MockupWriter(const MockupOptions& options) : options_(options) {}

  void write_nodes(const std::vector<TreeNode>& nodes) {
    std::vector<const TreeNode*> order;
    for (const auto& n : nodes) {
      if (n.is_leaf() && n.category.is_underlay()) order.push_back(&n);
    }
    for (const auto& n : nodes) {
      if (!(n.is_leaf() && n.category.is_underlay())) order.push_back(&n);
    }
    for (const TreeNode* n : order) {
      if (n->is_group()) {
        body_ += "<g transform=\"translate(" + num(n->offset.x) + " " + num(n->offset.y) + ")\">";
        write_nodes(n->children);
        body_ += "</g>";
      } else if (n->is_leaf()) {
        write_leaf(*n);
      }
    }
  }

  std::string finish(const Canvas& canvas) const {
    std::string out = opening_tag(canvas);
    if (!defs_.empty()) out += "<defs>" + defs_ + "</defs>";
    out += body_;
    out += "</svg>";
    return out;
  }

 private:
  double font_size(double extent) const {
    return std::clamp(options_.font_scale * extent, std::min(options_.min_font_size, extent), extent);
  }

  void write_leaf(const TreeNode& n) {
    const std::string id = xml_escape(n.id);
    const Shape& s = n.shape;
    if (n.category.is_underlay()) {
      const std::string fill = " fill=\"" + options_.underlay_fill + "\"";
      if (const auto* r = std::get_if<Rect>(&s)) {
        body_ += "<rect id=\"" + id + "\" x=\"" + num(r->x) + "\" y=\"" + num(r->y) + "\" width=\"" +
                 num(r->w) + "\" height=\"" + num(r->h) + "\"" + fill + "/>";
      } else if (const auto* rr = std::get_if<RotatedRect>(&s)) {
        body_ += "<rect id=\"" + id + "\" x=\"" + num(rr->x) + "\" y=\"" + num(rr->y) + "\" width=\"" +
                 num(rr->w) + "\" height=\"" + num(rr->h) + "\"" + rotate_attr(*rr) + fill + "/>";
      } else if (const auto* e = std::get_if<Ellipse>(&s)) {
        body_ += "<ellipse id=\"" + id + "\" cx=\"" + num(e->cx) + "\" cy=\"" + num(e->cy) + "\" rx=\"" +
                 num(e->rx) + "\" ry=\"" + num(e->ry) + "\"" + fill + "/>";
      } else {
        body_ += "<path id=\"" + id + "\" d=\"" + path_data(std::get<PathCurve>(s)) + "\"" + fill + "/>";
      }
      return;
    }
    if (n.category.is_text()) {
      write_text(n, id);
      return;
    }
    // Logos and embellishments become image placeholders over their box.
    if (const auto* rr = std::get_if<RotatedRect>(&s)) {
      body_ += "<image id=\"" + id + "\" href=\"\" x=\"" + num(rr->x) + "\" y=\"" + num(rr->y) +
               "\" width=\"" + num(rr->w) + "\" height=\"" + num(rr->h) + "\"" + rotate_attr(*rr) + "/>";
      return;
    }
    const Rect b = bounding_box(s);
    body_ += "<image id=\"" + id + "\" href=\"\" x=\"" + num(b.x) + "\" y=\"" + num(b.y) + "\" width=\"" +
             num(b.w) + "\" height=\"" + num(b.h) + "\"/>";
  }

  void write_text(const TreeNode& n, const std::string& id) {
    const Shape& s = n.shape;
    if (const auto* r = std::get_if<Rect>(&s)) {
      if (n.category.text_variant == TextVariant::kVertical) {
        const double fs = font_size(r->w);
        body_ += "<text id=\"" + id + "\" x=\"" + num(r->x + r->w / 2) + "\" y=\"" + num(r->y) +
                 "\" font-size=\"" + num(fs) + "\" writing-mode=\"tb\"></text>";
      } else {
        const double fs = font_size(r->h);
        body_ += "<text id=\"" + id + "\" x=\"" + num(r->x) + "\" y=\"" + num(r->y + fs) +
                 "\" font-size=\"" + num(fs) + "\"></text>";
      }
      return;
    }
    if (const auto* rr = std::get_if<RotatedRect>(&s)) {
      const double fs = font_size(rr->h);
      body_ += "<text id=\"" + id + "\" x=\"" + num(rr->x) + "\" y=\"" + num(rr->y + fs) + "\" font-size=\"" +
               num(fs) + "\"" + rotate_attr(*rr) + "></text>";
      return;
    }
    // Text bound to an outline: the path lives in <defs>.
    std::string d;
    if (const auto* e = std::get_if<Ellipse>(&s)) {
      d = ellipse_path(*e);
    } else {
      d = path_data(std::get<PathCurve>(s));
    }
    const std::string path_id = id + "-path";
    defs_ += "<path id=\"" + path_id + "\" d=\"" + d + "\" fill=\"none\"/>";
    const double fs = font_size(kStrokeWidthPx);
    body_ += "<text id=\"" + id + "\" font-size=\"" + num(fs) + "\"><textPath href=\"#" + path_id +
             "\"></textPath></text>";
  }

  const MockupOptions& options_;
  std::string defs_;
  std::string body_;
};

}  // namespace detail

inline std::string mockup(const LayoutTree& tree, const MockupOptions& options = {}) {
  const LayoutTree canonical = canonicalize(tree);
  detail::MockupWriter writer(options);
  writer.write_nodes(canonical.element_nodes);
  return writer.finish(canonical.canvas);
}

// ---------------------------------------------------------------------------
// Material synthesis

namespace detail {

struct TagSpan {
  std::size_t begin = 0;  // '<'
  std::size_t end = 0;    // one past '>'
  std::string name;
};

inline std::optional<TagSpan> find_tag_with_id(const std::string& svg, const std::string& id) {
  const std::string needle = " id=\"" + xml_escape(id) + "\"";
  std::size_t from = 0;
  while (true) {
    const auto at = svg.find(needle, from);
    if (at == std::string::npos) return std::nullopt;
    const auto lt = svg.rfind('<', at);
    const auto gt = svg.find('>', at);
    if (lt == std::string::npos || gt == std::string::npos) return std::nullopt;
    // Skip matches inside <defs> paths ("-path" ids never equal a leaf id, but
    // guard against the needle matching a later attribute).
    if (svg.find('>', lt) >= at) {
      std::size_t name_end = lt + 1;
      while (name_end < svg.size() && is_name_char(svg[name_end])) ++name_end;
      return TagSpan{lt, gt + 1, svg.substr(lt + 1, name_end - lt - 1)};
    }
    from = at + 1;
  }
}

// Sets or replaces an attribute in the start tag at `span`; returns the
// length delta.
inline long set_attribute(std::string& svg, const TagSpan& span, const std::string& name, const std::string& value) {
  const std::string tag = svg.substr(span.begin, span.end - span.begin);
  const std::string key = " " + name + "=\"";
  const std::string escaped = xml_escape(value);
  const auto at = tag.find(key);
  std::string updated;
  if (at != std::string::npos) {
    const auto vstart = at + key.size();
    const auto vend = tag.find('"', vstart);
    updated = tag.substr(0, vstart) + escaped + tag.substr(vend);
  } else {
    const std::size_t insert = (tag.size() >= 2 && tag[tag.size() - 2] == '/') ? tag.size() - 2 : tag.size() - 1;
    updated = tag.substr(0, insert) + key + escaped + "\"" + tag.substr(insert);
  }
  svg.replace(span.begin, span.end - span.begin, updated);
  return static_cast<long>(updated.size()) - static_cast<long>(tag.size());
}

}  // namespace detail

inline std::string synthesize(const std::string& mockup_svg, const Materials& materials) {
  std::string svg = mockup_svg;
  for (const auto& [id, m] : materials) {
    auto span = detail::find_tag_with_id(svg, id);
    if (!span) fail(ErrorCode::kUnknownId, "no element with id " + id);
    if (span->name == "image") {
      if (m.text) fail(ErrorCode::kMaterialMismatch, id + " is an image placeholder; text given");
      if (m.href) detail::set_attribute(svg, *span, "href", *m.href);
      continue;
    }
    if (span->name != "text") fail(ErrorCode::kMaterialMismatch, id + " is not a text or image placeholder");
    if (m.href) fail(ErrorCode::kMaterialMismatch, id + " is a text placeholder; href given");
    for (const auto& [attr, value] :
         {std::pair{"font-family", m.font_family}, std::pair{"font-weight", m.font_weight},
          std::pair{"fill", m.fill}}) {
      if (!value) continue;
      detail::set_attribute(svg, *span, attr, *value);
      span = detail::find_tag_with_id(svg, id);
    }
    if (m.text) {
      std::size_t content_start = span->end;
      if (svg.compare(content_start, 9, "<textPath") == 0) content_start = svg.find('>', content_start) + 1;
      const auto content_end = svg.find("</", content_start);
      if (content_end == std::string::npos) fail(ErrorCode::kFormat, "unterminated <text> for " + id);
      svg.replace(content_start, content_end - content_start, xml_escape(*m.text));
    }
  }
  return svg;
}

// ---------------------------------------------------------------------------
// Backend-driven realization

namespace detail {

// Balanced tags and no malformed markup.
inline bool well_formed(std::string_view svg) {
  int warnings = 0;
  TagScanner scanner(svg, warnings);
  std::vector<std::string> stack;
  while (auto tag = scanner.next()) {
    if (tag->closing) {
      if (stack.empty() || stack.back() != tag->name) return false;
      stack.pop_back();
    } else if (!tag->self_closing) {
      stack.push_back(tag->name);
    }
  }
  return warnings == 0 && stack.empty();
}

}  // namespace detail

inline std::string realization_prompt(const LayoutTree& tree, const Materials& materials,
                                      const std::string& style_hint) {
  std::string p =
      "Transform the layout tree below into a poster design in SVG. Convert text elements into <text> and "
      "logo or embellishment elements into <image>, keep every id unchanged, choose suitable font sizes, "
      "and fill in the contents listed below.\n";
  p += "Style: " + style_hint + "\n";
  p += "Layout tree:\n" + serialize_tree(tree) + "\n";
  p += "Contents:\n";
  for (const auto& [id, m] : materials) {
    p += id + ": ";
    if (m.text) p += "text \"" + *m.text + "\"";
    if (m.href) p += "image " + *m.href;
    p += "\n";
  }
  return p;
}

struct RealizeResult {
  std::string svg;
  bool from_backend = false;
};

inline RealizeResult llm_realize(Backend& backend, const LayoutTree& tree, const Materials& materials,
                                 const std::string& style_hint, const GenParams& params = {},
                                 const MockupOptions& options = {}) {
  const LayoutTree canonical = canonicalize(tree);
  const std::string fallback = synthesize(mockup(canonical, options), materials);
  CompletionRequest req;
  req.prompt = realization_prompt(canonical, materials, style_hint);
  req.temperature = params.temperature;
  req.max_tokens = params.max_tokens;
  req.seed = params.seed;
  req.query_id = "realize";
  try {
    const std::string response = backend.complete(req);
    const auto block = detail::find_svg_block(response);
    if (block) {
      std::string svg = response.substr(block->first, block->second - block->first);
      bool has_ids = true;
      for (const auto& id : leaf_ids(canonical)) {
        has_ids = has_ids && svg.find("id=\"" + id + "\"") != std::string::npos;
      }
      if (has_ids && detail::well_formed(svg)) return {svg, true};
    }
  } catch (const Error&) {
  }
  return {fallback, false};
}

}  // namespace postertree
