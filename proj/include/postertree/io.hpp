#pragma once

// JSON and file plumbing: dataset documents, embeddings, metric reports and
// atomic writes.

#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "postertree/core.hpp"
#include "postertree/metrics.hpp"
#include "postertree/raster.hpp"

namespace postertree {

using Json = nlohmann::json;

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::kIo, "cannot open " + path.string());
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

// Writes to a sibling temp file, then renames over the target.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& data) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorCode::kIo, "cannot write " + tmp.string());
    f.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!f) fail(ErrorCode::kIo, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& ex) {
    fail(ErrorCode::kFormat, what + ": " + ex.what());
  }
}

inline Json read_json(const std::filesystem::path& path) {
  return parse_json(read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Shapes and records

inline Json to_json(const Point& p) { return Json::array({p.x, p.y}); }

inline Point point_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2) fail(ErrorCode::kFormat, "point must be [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline Json to_json(const Shape& shape) {
  if (const auto* r = std::get_if<Rect>(&shape)) {
    return {{"kind", "rect"}, {"x", r->x}, {"y", r->y}, {"w", r->w}, {"h", r->h}};
  }
  if (const auto* r = std::get_if<RotatedRect>(&shape)) {
    return {{"kind", "rotated_rect"}, {"x", r->x}, {"y", r->y}, {"w", r->w}, {"h", r->h},
            {"angle_deg", r->angle_deg}};
  }
  if (const auto* e = std::get_if<Ellipse>(&shape)) {
    return {{"kind", "ellipse"}, {"cx", e->cx}, {"cy", e->cy}, {"rx", e->rx}, {"ry", e->ry}};
  }
  const auto& p = std::get<PathCurve>(shape);
  Json segs = Json::array();
  for (const auto& s : p.segments) segs.push_back({s.c1.x, s.c1.y, s.c2.x, s.c2.y, s.end.x, s.end.y});
  return {{"kind", "path"}, {"start", to_json(p.start)}, {"segments", segs}, {"closed", p.closed}};
}

inline Shape shape_from_json(const Json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    Shape s;
    if (kind == "rect") {
      s = Rect{j.at("x").get<double>(), j.at("y").get<double>(), j.at("w").get<double>(), j.at("h").get<double>()};
    } else if (kind == "rotated_rect") {
      s = RotatedRect{j.at("x").get<double>(), j.at("y").get<double>(), j.at("w").get<double>(),
                      j.at("h").get<double>(), normalize_angle(j.at("angle_deg").get<double>())};
    } else if (kind == "ellipse") {
      s = Ellipse{j.at("cx").get<double>(), j.at("cy").get<double>(), j.at("rx").get<double>(),
                  j.at("ry").get<double>()};
    } else if (kind == "path") {
      PathCurve p;
      p.start = point_from_json(j.at("start"));
      for (const auto& seg : j.at("segments")) {
        if (!seg.is_array() || seg.size() != 6) fail(ErrorCode::kFormat, "path segment needs 6 numbers");
        p.segments.push_back({{seg[0].get<double>(), seg[1].get<double>()},
                              {seg[2].get<double>(), seg[3].get<double>()},
                              {seg[4].get<double>(), seg[5].get<double>()}});
      }
      p.closed = j.value("closed", false);
      s = std::move(p);
    } else {
      fail(ErrorCode::kFormat, "unknown shape kind '" + kind + "'");
    }
    validate(s);
    return s;
  } catch (const Json::exception& ex) {
    fail(ErrorCode::kFormat, std::string("bad shape: ") + ex.what());
  }
}

inline ElementCategory category_from_json(const Json& j) {
  const auto token = j.get<std::string>();
  auto c = category_from_token(token);
  if (!c) fail(ErrorCode::kFormat, "unknown category '" + token + "'");
  return *c;
}

inline Json to_json(const DatasetRecord& r) {
  Json elements = Json::array();
  for (const auto& e : r.elements) {
    elements.push_back({{"category", std::string(category_token(e.category))}, {"shape", to_json(e.shape)}});
  }
  Json polys = Json::array();
  for (const auto& poly : r.intent.polygons) {
    Json pts = Json::array();
    for (const auto& p : poly) pts.push_back(to_json(p));
    polys.push_back(pts);
  }
  Json intent = {{"polygons", polys}};
  if (r.intent.embedding) intent["embedding"] = *r.intent.embedding;
  Json j = {{"id", r.record_id},
            {"canvas", {{"width", r.canvas.width_px}, {"height", r.canvas.height_px}}},
            {"elements", elements},
            {"intent", intent}};
  if (r.image_path) j["image"] = *r.image_path;
  if (r.saliency_path) j["saliency"] = *r.saliency_path;
  return j;
}

inline DatasetRecord record_from_json(const Json& j) {
  try {
    DatasetRecord r;
    r.record_id = j.at("id").get<std::string>();
    r.canvas = {j.at("canvas").at("width").get<int>(), j.at("canvas").at("height").get<int>()};
    validate(r.canvas);
    for (const auto& e : j.value("elements", Json::array())) {
      r.elements.push_back({category_from_json(e.at("category")), shape_from_json(e.at("shape"))});
    }
    if (j.contains("intent")) {
      const auto& in = j.at("intent");
      for (const auto& poly : in.value("polygons", Json::array())) {
        Polygon p;
        for (const auto& pt : poly) p.push_back(point_from_json(pt));
        if (p.size() < 3) fail(ErrorCode::kFormat, "intent polygon needs >= 3 vertices");
        r.intent.polygons.push_back(std::move(p));
      }
      if (in.contains("embedding")) r.intent.embedding = in.at("embedding").get<std::vector<double>>();
    }
    if (j.contains("image")) r.image_path = j.at("image").get<std::string>();
    if (j.contains("saliency")) r.saliency_path = j.at("saliency").get<std::string>();
    return r;
  } catch (const Json::exception& ex) {
    fail(ErrorCode::kFormat, std::string("bad dataset record: ") + ex.what());
  }
}

inline std::vector<DatasetRecord> dataset_from_json(const Json& doc) {
  if (!doc.contains("records") || !doc.at("records").is_array()) {
    fail(ErrorCode::kFormat, "dataset must be {\"records\": [...]}");
  }
  std::vector<DatasetRecord> out;
  std::set<std::string> ids;
  for (const auto& j : doc.at("records")) {
    out.push_back(record_from_json(j));
    if (!ids.insert(out.back().record_id).second) {
      fail(ErrorCode::kFormat, "duplicate record id " + out.back().record_id);
    }
  }
  return out;
}

inline Json dataset_to_json(const std::vector<DatasetRecord>& records) {
  Json arr = Json::array();
  for (const auto& r : records) arr.push_back(to_json(r));
  return {{"records", arr}};
}

inline std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path) {
  return dataset_from_json(read_json(path));
}

// ---------------------------------------------------------------------------
// Embeddings: {"dim": n, "values": [...]}

inline std::vector<double> embedding_from_json(const Json& j) {
  try {
    const auto values = j.at("values").get<std::vector<double>>();
    if (j.at("dim").get<std::size_t>() != values.size()) {
      fail(ErrorCode::kFormat, "embedding dim does not match value count");
    }
    return values;
  } catch (const Json::exception& ex) {
    fail(ErrorCode::kFormat, std::string("bad embedding file: ") + ex.what());
  }
}

inline Json embedding_to_json(const std::vector<double>& values) {
  return {{"dim", values.size()}, {"values", values}};
}

// ---------------------------------------------------------------------------
// Metric reports

inline Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline std::optional<double> optional_from_json(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

inline Json to_json(const MetricReport& r) {
  return {{"ove", optional_json(r.ove)}, {"ali", optional_json(r.ali)},     {"und_l", optional_json(r.und_l)},
          {"und_s", optional_json(r.und_s)}, {"uti", optional_json(r.uti)}, {"occ", optional_json(r.occ)},
          {"rea", optional_json(r.rea)},   {"cov", optional_json(r.cov)},   {"con", optional_json(r.con)}};
}

inline MetricReport metric_report_from_json(const Json& j) {
  MetricReport r;
  r.ove = optional_from_json(j, "ove");
  r.ali = optional_from_json(j, "ali");
  r.und_l = optional_from_json(j, "und_l");
  r.und_s = optional_from_json(j, "und_s");
  r.uti = optional_from_json(j, "uti");
  r.occ = optional_from_json(j, "occ");
  r.rea = optional_from_json(j, "rea");
  r.cov = optional_from_json(j, "cov");
  r.con = optional_from_json(j, "con");
  return r;
}

inline Json to_json(const AggregateReport& a) {
  Json j = to_json(a.means);
  j["int_metric"] = optional_json(a.int_metric);
  j["sal_metric"] = optional_json(a.sal_metric);
  j["avg"] = optional_json(a.avg);
  j["samples"] = a.samples;
  return j;
}

inline Json to_json(const ReferenceStats& s) {
  return {{"cov_l", s.cov_l}, {"con_l", s.con_l}, {"uti_l", s.uti_l}, {"occ_l", s.occ_l}};
}

inline ReferenceStats reference_stats_from_json(const Json& j) {
  try {
    ReferenceStats s{j.at("cov_l").get<double>(), j.at("con_l").get<double>(), j.at("uti_l").get<double>(),
                     j.at("occ_l").get<double>()};
    for (double v : {s.cov_l, s.con_l, s.uti_l, s.occ_l}) {
      if (!(v >= 0 && v <= 1)) fail(ErrorCode::kFormat, "reference statistics must lie in [0,1]");
    }
    return s;
  } catch (const Json::exception& ex) {
    fail(ErrorCode::kFormat, std::string("bad reference statistics: ") + ex.what());
  }
}

}  // namespace postertree
