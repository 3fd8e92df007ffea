#pragma once

// In-context layout generation: prompt assembly, pluggable completion
// backends, candidate sanitation and ranking.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <future>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "postertree/core.hpp"
#include "postertree/metrics.hpp"
#include "postertree/raster.hpp"
#include "postertree/svg_dialect.hpp"
#include "postertree/tree_builder.hpp"

namespace postertree {

struct GenParams {
  int k = 10;
  double temperature = 0.7;
  int candidates = 4;
  int max_retries = 3;
  int max_tokens = 2048;
  std::optional<std::uint64_t> seed;
};

// ---------------------------------------------------------------------------
// Seeds

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

// Child seed for a named stage (command, record id, ...).
inline std::uint64_t derive_seed(std::uint64_t parent, std::string_view label) {
  return splitmix64(parent ^ fnv1a64(label));
}

inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(parent ^ splitmix64(a)) ^ b);
}

// ---------------------------------------------------------------------------
// Backends

struct CompletionRequest {
  std::string prompt;
  double temperature = 0.7;
  int max_tokens = 2048;
  std::vector<std::string> stop;
  std::optional<std::uint64_t> seed;
  std::string query_id;
  int candidate = 0;
  int attempt = 0;
};

class Backend {
 public:
  virtual ~Backend() = default;
  // Must be safe to call concurrently.
  virtual std::string complete(const CompletionRequest& request) = 0;
};

enum class BackendKind { kMock, kHttp };

struct BackendConfig {
  BackendKind kind = BackendKind::kMock;
  std::string endpoint_url;
  std::string api_token_env_var = "POSTERTREE_API_TOKEN";
  std::string model_name;
  std::string fixture_path;
  double timeout_s = 60.0;
};

namespace detail {

inline double unit_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

inline std::optional<Canvas> last_open_canvas(std::string_view prompt) {
  std::optional<std::size_t> last;
  std::size_t from = 0;
  while (auto p = find_svg_open(prompt, from)) {
    last = *p;
    from = *p + 1;
  }
  if (!last) return std::nullopt;
  const auto gt = prompt.find('>', *last);
  if (gt == std::string_view::npos) return std::nullopt;
  try {
    return parse_tree_ex(std::string(prompt.substr(*last, gt - *last + 1)) + "</svg>").tree.canvas;
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace detail

// Offline backend. Fixture entries (query id -> response, or list of
// responses indexed by attempt) take precedence; otherwise the first example
// tree in the prompt is echoed, rescaled to the requested canvas and jittered
// in proportion to temperature.
class MockBackend : public Backend {
 public:
  MockBackend() = default;
  explicit MockBackend(std::map<std::string, std::vector<std::string>> fixture)
      : fixture_(std::move(fixture)) {}

  static MockBackend from_json(const nlohmann::json& j) {
    std::map<std::string, std::vector<std::string>> fixture;
    const auto& responses = j.contains("responses") ? j.at("responses") : j;
    for (const auto& [id, value] : responses.items()) {
      if (value.is_string()) {
        fixture[id] = {value.get<std::string>()};
      } else {
        fixture[id] = value.get<std::vector<std::string>>();
      }
    }
    return MockBackend(std::move(fixture));
  }

  std::string complete(const CompletionRequest& request) override {
    if (auto it = fixture_.find(request.query_id); it != fixture_.end() && !it->second.empty()) {
      return it->second[static_cast<std::size_t>(request.attempt) % it->second.size()];
    }
    return echo_nearest(request);
  }

 private:
  static std::string echo_nearest(const CompletionRequest& request) {
    // The first <svg that parses; prose may mention the tag before any tree.
    std::optional<LayoutTree> parsed;
    std::size_t from = 0;
    while (!parsed) {
      const auto open = detail::find_svg_open(request.prompt, from);
      if (!open) return "I could not find an example layout to follow.";
      try {
        parsed = parse_tree(std::string_view(request.prompt).substr(*open));
      } catch (const Error&) {
        from = *open + 1;
      }
    }
    LayoutTree example = std::move(*parsed);
    const Canvas target = detail::last_open_canvas(request.prompt).value_or(example.canvas);
    const double sx = static_cast<double>(target.width_px) / example.canvas.width_px;
    const double sy = static_cast<double>(target.height_px) / example.canvas.height_px;
    detail::scale_nodes(example.element_nodes, sx, sy);

    std::mt19937_64 rng(request.seed.value_or(0));
    const double amplitude =
        request.temperature * 0.02 * std::min(target.width_px, target.height_px);
    for (auto& node : example.element_nodes) {
      const double dx = (2 * detail::unit_draw(rng) - 1) * amplitude;
      const double dy = (2 * detail::unit_draw(rng) - 1) * amplitude;
      if (node.is_group()) {
        node.offset = node.offset + Point{dx, dy};
      } else if (node.is_leaf()) {
        node.shape = translated(node.shape, dx, dy);
      }
    }
    LayoutTree body{target, {}, std::move(example.element_nodes)};
    std::string text = serialize_tree(body);
    const std::string open = opening_tag(target);
    // Respond like a completion model stopped at "</svg>".
    return text.substr(open.size(), text.size() - open.size() - 6);
  }

  std::map<std::string, std::vector<std::string>> fixture_;
};

// OpenAI-compatible completions client.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(BackendConfig config);
  std::string complete(const CompletionRequest& request) override;

  static nlohmann::json request_body(const BackendConfig& config, const CompletionRequest& request) {
    nlohmann::json body = {{"model", config.model_name},       {"prompt", request.prompt},
                           {"temperature", request.temperature}, {"max_tokens", request.max_tokens},
                           {"n", 1}};
    if (!request.stop.empty()) body["stop"] = request.stop;
    if (request.seed) body["seed"] = *request.seed;
    return body;
  }

  // Text of the first choice; accepts both completion and chat shapes.
  static std::string response_text(const std::string& body) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& ex) {
      fail(ErrorCode::kBackendUnavailable, std::string("backend returned non-JSON: ") + ex.what());
    }
    if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
      fail(ErrorCode::kBackendUnavailable, "backend response has no choices");
    }
    const auto& c = j["choices"][0];
    if (c.contains("text") && c["text"].is_string()) return c["text"].get<std::string>();
    if (c.contains("message") && c["message"].contains("content") && c["message"]["content"].is_string()) {
      return c["message"]["content"].get<std::string>();
    }
    fail(ErrorCode::kBackendUnavailable, "backend choice has no text");
  }

 private:
  BackendConfig config_;
};

// ---------------------------------------------------------------------------
// Prompts

// Plain-text template with [preface], [example] and [postscript] sections.
// Example placeholders: {j} {width} {height} {intents} {ids} {tree}.
// Postscript placeholders: {width} {height} {intents} {ids} {open_tag}.
struct PromptTemplate {
  std::string preface;
  std::string example;
  std::string postscript;

  static PromptTemplate parse(std::string_view text);
  static PromptTemplate standard();
};

inline constexpr std::string_view kDefaultPromptTemplate =
    R"([preface]
Please generate a poster layout as an SVG layout tree. Each layout lists design-intent regions as <polygon> nodes, followed by element nodes (<rect>, <ellipse>, <path>) whose id names the element category. Nested <svg x=".." y=".."> groups wrap an underlay together with the elements placed on it, using coordinates relative to the group.

[example]
Example {j}: a poster image of {width}x{height} pixels with design intents {intents}. Its layout contains the elements {ids}.
{tree}

[postscript]
Now complete the layout for a poster image of {width}x{height} pixels with design intents {intents}. The layout should contain the elements {ids}.
{open_tag})";

namespace detail {

inline std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& fields,
                                   std::string_view section) {
  std::string out;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find('{', pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    out.append(tmpl.substr(pos, open - pos));
    const auto close = tmpl.find('}', open);
    if (close == std::string_view::npos) {
      out.append(tmpl.substr(open));
      break;
    }
    const std::string name(tmpl.substr(open + 1, close - open - 1));
    auto it = fields.find(name);
    if (it == fields.end()) {
      fail(ErrorCode::kTemplateFieldMissing,
           "template section [" + std::string(section) + "] uses unknown field {" + name + "}");
    }
    out += it->second;
    pos = close + 1;
  }
  return out;
}

}  // namespace detail

inline PromptTemplate PromptTemplate::parse(std::string_view text) {
  PromptTemplate t;
  std::string* current = nullptr;
  bool seen[3] = {false, false, false};
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    std::string_view trimmed = line;
    while (!trimmed.empty() && (trimmed.back() == '\r' || trimmed.back() == ' ')) trimmed.remove_suffix(1);
    if (trimmed == "[preface]") {
      current = &t.preface;
      seen[0] = true;
    } else if (trimmed == "[example]") {
      current = &t.example;
      seen[1] = true;
    } else if (trimmed == "[postscript]") {
      current = &t.postscript;
      seen[2] = true;
    } else if (current) {
      if (!current->empty()) current->push_back('\n');
      current->append(line);
    }
    pos = nl + 1;
  }
  for (std::string* s : {&t.preface, &t.example, &t.postscript}) {
    while (!s->empty() && (s->back() == '\n' || s->back() == '\r')) s->pop_back();
  }
  if (!seen[1] || !seen[2]) {
    fail(ErrorCode::kTemplateFieldMissing, "template needs [example] and [postscript] sections");
  }
  if (t.example.find("{tree}") == std::string::npos || t.example.find("{j}") == std::string::npos) {
    fail(ErrorCode::kTemplateFieldMissing, "[example] must contain {j} and {tree}");
  }
  return t;
}

inline PromptTemplate PromptTemplate::standard() { return parse(kDefaultPromptTemplate); }

struct PromptTest {
  Canvas canvas;
  std::vector<Polygon> intent_polygons;
  std::vector<std::string> requested_ids;  // element summary requested from the backend
};

struct PromptBundle {
  std::string text;
  std::vector<std::string> example_ids;
  PromptTest test_meta;
  std::string completion_prefix;  // opening tag plus intent nodes, if the template seeds it
};

struct PromptExample {
  std::string record_id;
  LayoutTree tree;
};

inline std::string summarize_intents(const std::vector<Polygon>& polygons) {
  if (polygons.empty()) return "none";
  std::string s = std::to_string(polygons.size()) + (polygons.size() == 1 ? " region at " : " regions at ");
  for (std::size_t i = 0; i < polygons.size(); ++i) {
    const Rect b = bounding_box(polygons[i]);
    if (i) s += ", ";
    s += "(" + format_number(b.x) + "," + format_number(b.y) + "," + format_number(b.w) + "," +
         format_number(b.h) + ")";
  }
  return s;
}

inline std::string join_ids(const std::vector<std::string>& ids) {
  if (ids.empty()) return "none";
  std::string s;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) s += ", ";
    s += ids[i];
  }
  return s;
}

inline PromptBundle assemble_prompt(const std::vector<PromptExample>& examples, const PromptTest& test,
                                    const PromptTemplate& tmpl = PromptTemplate::standard()) {
  if (examples.empty()) fail(ErrorCode::kInvalidArgument, "at least one example is required");
  PromptBundle bundle;
  bundle.test_meta = test;
  std::string text = tmpl.preface;
  if (!text.empty()) text += "\n\n";
  for (std::size_t j = 0; j < examples.size(); ++j) {
    const auto& ex = examples[j];
    const LayoutTree canonical = canonicalize(ex.tree);
    const std::map<std::string, std::string> fields{
        {"j", std::to_string(j + 1)},
        {"width", std::to_string(ex.tree.canvas.width_px)},
        {"height", std::to_string(ex.tree.canvas.height_px)},
        {"intents", summarize_intents(intent_polygons(ex.tree))},
        {"ids", join_ids(leaf_ids(canonical))},
        {"tree", serialize_tree(ex.tree)}};
    text += detail::render_template(tmpl.example, fields, "example");
    text += "\n\n";
    bundle.example_ids.push_back(ex.record_id);
  }
  std::vector<TreeNode> intent_nodes;
  for (const auto& p : test.intent_polygons) intent_nodes.push_back(TreeNode::intent(p));
  const std::string open_tag = opening_tag(test.canvas) + serialize_intents(intent_nodes);
  const std::map<std::string, std::string> fields{{"width", std::to_string(test.canvas.width_px)},
                                                  {"height", std::to_string(test.canvas.height_px)},
                                                  {"intents", summarize_intents(test.intent_polygons)},
                                                  {"ids", join_ids(test.requested_ids)},
                                                  {"open_tag", open_tag}};
  text += detail::render_template(tmpl.postscript, fields, "postscript");
  if (tmpl.postscript.find("{open_tag}") != std::string::npos) bundle.completion_prefix = open_tag;
  bundle.text = std::move(text);
  return bundle;
}

// ---------------------------------------------------------------------------
// Generation

struct GenerationResult {
  std::vector<LayoutTree> candidates;
  std::vector<int> attempts;  // requests spent per successful candidate
  int malformed_responses = 0;
};

namespace detail {

// A root tag carries the canvas size; nested group tags only carry x and y.
inline bool has_root_tag(std::string_view text) {
  const auto open = find_svg_open(text);
  if (!open) return false;
  const auto gt = text.find('>', *open);
  const std::string_view tag = text.substr(*open, gt == std::string_view::npos ? std::string_view::npos : gt - *open);
  for (std::size_t p = tag.find("width"); p != std::string_view::npos; p = tag.find("width", p + 1)) {
    if (p > 0 && is_space(tag[p - 1])) return true;
  }
  return false;
}

}  // namespace detail

// Completes the response into a full document: prepends the seeded opening
// tag when the backend continued from it, re-appends stripped "</svg>" stops.
inline std::string complete_document(const std::string& response, const std::string& prefix) {
  std::string doc = response;
  if (!prefix.empty() && !detail::has_root_tag(doc)) doc = prefix + doc;
  std::size_t opens = 0, closes = 0;
  for (auto p = detail::find_svg_open(doc); p; p = detail::find_svg_open(doc, *p + 1)) ++opens;
  for (auto p = doc.find("</svg>"); p != std::string::npos; p = doc.find("</svg>", p + 1)) ++closes;
  for (; closes < opens; ++closes) doc += "</svg>";
  return doc;
}

inline GenerationResult generate_layout(Backend& backend, const PromptBundle& bundle, const GenParams& params,
                                        const std::string& query_id = {}) {
  if (params.candidates < 1) fail(ErrorCode::kInvalidArgument, "candidates must be >= 1");
  struct Outcome {
    std::optional<LayoutTree> tree;
    int attempts = 0;
    int malformed = 0;
  };
  auto run_candidate = [&](int c) {
    Outcome out;
    for (int attempt = 0; attempt <= params.max_retries; ++attempt) {
      CompletionRequest req;
      req.prompt = bundle.text;
      req.temperature = params.temperature;
      req.max_tokens = params.max_tokens;
      req.stop = {"</svg>"};
      if (params.seed) req.seed = derive_seed(*params.seed, static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(attempt));
      req.query_id = query_id;
      req.candidate = c;
      req.attempt = attempt;
      ++out.attempts;
      const std::string response = backend.complete(req);
      try {
        out.tree = parse_tree(complete_document(response, bundle.completion_prefix), bundle.test_meta.canvas);
        if (leaf_count(*out.tree) == 0) {
          out.tree.reset();
          ++out.malformed;
          continue;
        }
        return out;
      } catch (const Error&) {
        ++out.malformed;
      }
    }
    return out;
  };

  std::vector<std::future<Outcome>> futures;
  for (int c = 0; c < params.candidates; ++c) {
    futures.push_back(std::async(std::launch::async, run_candidate, c));
  }
  GenerationResult result;
  std::exception_ptr first_error;
  for (auto& f : futures) {
    try {
      Outcome o = f.get();
      result.malformed_responses += o.malformed;
      if (o.tree) {
        result.candidates.push_back(std::move(*o.tree));
        result.attempts.push_back(o.attempts);
      }
    } catch (...) {
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);
  if (result.candidates.empty()) {
    fail(ErrorCode::kAllCandidatesMalformed, "no candidate parsed after " +
                                                 std::to_string(params.max_retries + 1) + " attempts each");
  }
  return result;
}

// ---------------------------------------------------------------------------
// Sanitation

struct SanitationReport {
  int clamped = 0;
  int dropped = 0;
  int renamed = 0;
};

struct SanitizedTree {
  LayoutTree tree;
  SanitationReport report;
};

namespace detail {

inline bool box_inside(const Rect& b, double w, double h) {
  constexpr double kSlack = 1e-9;
  return b.x >= -kSlack && b.y >= -kSlack && b.right() <= w + kSlack && b.bottom() <= h + kSlack;
}

// Shrinks (when larger than the box) then shifts `shape` so its absolute
// bounding box lies within [lo, hi]; `origin` converts to absolute.
inline Shape fit_into(const Shape& shape, Point origin, Point lo, Point hi) {
  const double aw = hi.x - lo.x, ah = hi.y - lo.y;
  Shape s = shape;
  Rect b = bounding_box(s);
  if (b.w > aw || b.h > ah) {
    const double fx = b.w > aw ? aw / b.w : 1.0;
    const double fy = b.h > ah ? ah / b.h : 1.0;
    if (auto* r = std::get_if<Rect>(&s)) {
      r->w *= fx;
      r->h *= fy;
    } else if (auto* rr = std::get_if<RotatedRect>(&s)) {
      const double f = std::min(fx, fy);
      const Point c = rr->center();
      rr->w *= f;
      rr->h *= f;
      rr->x = c.x - rr->w / 2;
      rr->y = c.y - rr->h / 2;
    } else if (auto* e = std::get_if<Ellipse>(&s)) {
      e->rx *= fx;
      e->ry *= fy;
    } else {
      auto& p = std::get<PathCurve>(s);
      auto sc = [&](Point q) { return Point{b.x + (q.x - b.x) * fx, b.y + (q.y - b.y) * fy}; };
      p.start = sc(p.start);
      for (auto& seg : p.segments) seg = {sc(seg.c1), sc(seg.c2), sc(seg.end)};
    }
    b = bounding_box(s);
  }
  const double ax = b.x + origin.x, ay = b.y + origin.y;
  double dx = 0, dy = 0;
  if (ax < lo.x) {
    dx = lo.x - ax;
  } else if (ax + b.w > hi.x) {
    dx = hi.x - (ax + b.w);
  }
  if (ay < lo.y) {
    dy = lo.y - ay;
  } else if (ay + b.h > hi.y) {
    dy = hi.y - (ay + b.h);
  }
  return translated(s, dx, dy);
}

inline bool zero_area(const Shape& shape) {
  const Rect b = bounding_box(shape);
  if (std::holds_alternative<PathCurve>(shape)) return b.w <= 0 && b.h <= 0;
  return !(b.w > 0 && b.h > 0);
}

inline void sanitize_nodes(std::vector<TreeNode>& nodes, Point origin, const Canvas& canvas,
                           SanitationReport& report) {
  const double W = canvas.width_px, H = canvas.height_px;
  std::vector<TreeNode> kept;
  for (auto& n : nodes) {
    if (n.is_group()) {
      sanitize_nodes(n.children, origin + n.offset, canvas, report);
      kept.push_back(std::move(n));
      continue;
    }
    if (!n.is_leaf()) continue;
    Rect b = bounding_box(n.shape);
    if (!box_inside({b.x + origin.x, b.y + origin.y, b.w, b.h}, W, H)) {
      ++report.clamped;
      Shape fitted = n.shape;
      for (double margin : {0.0, 0.01, 0.02, 0.04, 0.08, 0.16, 0.32, 0.64, 1.28, 2.56}) {
        const double mx = std::min(margin, W / 4), my = std::min(margin, H / 4);
        fitted = quantize_shape(fit_into(n.shape, origin, {mx, my}, {W - mx, H - my}));
        b = bounding_box(fitted);
        if (box_inside({b.x + origin.x, b.y + origin.y, b.w, b.h}, W, H)) break;
      }
      n.shape = fitted;
    }
    if (zero_area(n.shape)) {
      ++report.dropped;
      continue;
    }
    kept.push_back(std::move(n));
  }
  nodes = std::move(kept);
}

// Moves a group's origin onto its rect wrapper's top-left (on the number
// grid) when sanitation shifted the wrapper.
inline void renormalize_groups(std::vector<TreeNode>& nodes) {
  for (auto& n : nodes) {
    if (!n.is_group()) continue;
    renormalize_groups(n.children);
    if (n.children.empty() || !n.children.front().is_leaf()) continue;
    const auto* wrapper = std::get_if<Rect>(&n.children.front().shape);
    if (!wrapper) continue;
    const Rect b = *wrapper;
    const Point d = quantize(Point{b.x, b.y});
    if (d.x == 0 && d.y == 0) continue;
    n.offset = n.offset + d;
    for (auto& c : n.children) {
      if (c.is_group()) {
        c.offset = c.offset - d;
      } else if (c.is_leaf()) {
        c.shape = translated(c.shape, -d.x, -d.y);
      }
    }
  }
}

inline void collect_ids(const std::vector<TreeNode>& nodes, std::vector<std::string>& ids) {
  for_each_leaf(nodes, {0, 0}, [&](const TreeNode& n, Point) { ids.push_back(n.id); });
}

}  // namespace detail

inline SanitizedTree validate_tree(const LayoutTree& input, const Canvas& canvas) {
  validate(canvas);
  SanitizedTree out;
  LayoutTree tree = input;
  tree.canvas = canvas;
  std::vector<std::string> before;
  detail::collect_ids(tree.element_nodes, before);
  tree = canonicalize(std::move(tree));
  detail::sanitize_nodes(tree.element_nodes, {0, 0}, canvas, out.report);
  detail::renormalize_groups(tree.element_nodes);
  tree = canonicalize(std::move(tree));
  std::vector<std::string> after;
  detail::collect_ids(tree.element_nodes, after);
  if (out.report.dropped == 0) {
    for (std::size_t i = 0; i < before.size() && i < after.size(); ++i) {
      out.report.renamed += before[i] != after[i] ? 1 : 0;
    }
  }
  if (after.empty()) fail(ErrorCode::kEmptyAfterSanitation, "no elements left after sanitation");
  out.tree = std::move(tree);
  return out;
}

// True when every leaf box lies inside the canvas and ids are unique.
inline bool satisfies_sanitation_invariants(const LayoutTree& tree) {
  bool ok = true;
  std::vector<std::string> ids;
  for_each_leaf(tree.element_nodes, {0, 0}, [&](const TreeNode& n, Point origin) {
    const Rect b = bounding_box(n.shape);
    ok = ok && detail::box_inside({b.x + origin.x, b.y + origin.y, b.w, b.h}, tree.canvas.width_px,
                                  tree.canvas.height_px);
    ids.push_back(n.id);
  });
  std::sort(ids.begin(), ids.end());
  return ok && std::adjacent_find(ids.begin(), ids.end()) == ids.end();
}

// ---------------------------------------------------------------------------
// Ranking

struct RankWeights {
  double w_ali = 1.0;
  double w_ove = 1.0;
};

struct RankResult {
  std::size_t best = 0;
  std::vector<double> scores;
};

inline double candidate_quality(const LayoutTree& candidate, const BinMap& intent_map, const RankWeights& w) {
  const Layout layout = flatten_tree(candidate);
  const BinMap rendered = render_element_map(layout, intent_map.width());
  const BinMap target = resize_nearest(intent_map, rendered.width(), rendered.height());
  return map_iou(rendered, target) - w.w_ali * ali(layout) - w.w_ove * ove_numeric(layout);
}

inline RankResult rank_candidates(const std::vector<LayoutTree>& candidates, const BinMap& intent_map,
                                  const RankWeights& weights = {}) {
  if (candidates.empty()) fail(ErrorCode::kInvalidArgument, "no candidates to rank");
  RankResult r;
  for (const auto& c : candidates) r.scores.push_back(candidate_quality(c, intent_map, weights));
  for (std::size_t i = 1; i < r.scores.size(); ++i) {
    if (r.scores[i] > r.scores[r.best]) r.best = i;
  }
  return r;
}

}  // namespace postertree

#include "postertree/http_backend.hpp"
