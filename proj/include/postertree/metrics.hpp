#pragma once

// Graphic, content and standardized layout metrics.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "postertree/core.hpp"
#include "postertree/raster.hpp"

namespace postertree {

// Mean pairwise IoU of non-underlay bounding boxes.
inline double ove_numeric(const Layout& layout) {
  std::vector<Rect> boxes;
  for (const auto& e : layout.elements) {
    if (!e.category.is_underlay()) boxes.push_back(bounding_box(e.shape));
  }
  if (boxes.size() < 2) return 0.0;
  double sum = 0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    for (std::size_t j = i + 1; j < boxes.size(); ++j) {
      sum += iou(boxes[i], boxes[j]);
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

// (sum of layer areas - area of their union) / map size.
inline double ove_pixel(const std::vector<BinMap>& layers) {
  for (std::size_t i = 1; i < layers.size(); ++i) require_same_shape(layers[0], layers[i]);
  if (layers.size() < 2) return 0.0;
  const std::size_t n = layers[0].size();
  if (n == 0) return 0.0;
  std::size_t sum = 0, uni = 0;
  for (std::size_t p = 0; p < n; ++p) {
    bool any = false;
    for (const auto& l : layers) {
      if (l[p]) {
        ++sum;
        any = true;
      }
    }
    uni += any ? 1 : 0;
  }
  return static_cast<double>(sum - uni) / static_cast<double>(n);
}

inline double ali(const Layout& layout) {
  const std::size_t n = layout.elements.size();
  if (n < 2) return 0.0;
  const double w = layout.canvas.width_px, h = layout.canvas.height_px;
  std::vector<std::array<double, 6>> keys;
  keys.reserve(n);
  for (const auto& e : layout.elements) {
    const Rect b = bounding_box(e.shape);
    keys.push_back({b.x / w, (b.x + b.w / 2) / w, b.right() / w, b.y / h, (b.y + b.h / 2) / h,
                    b.bottom() / h});
  }
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      for (std::size_t k = 0; k < 6; ++k) best = std::min(best, std::abs(keys[i][k] - keys[j][k]));
    }
    total += best;
  }
  return total / static_cast<double>(n);
}

struct UnderlayEffectiveness {
  std::optional<double> loose;
  std::optional<double> strict;
};

inline UnderlayEffectiveness und(const Layout& layout) {
  std::vector<Rect> underlays, others;
  for (const auto& e : layout.elements) {
    (e.category.is_underlay() ? underlays : others).push_back(bounding_box(e.shape));
  }
  if (underlays.empty()) return {};
  double loose_sum = 0, strict_sum = 0;
  for (const auto& u : underlays) {
    double best = 0;
    for (const auto& e : others) {
      if (e.area() > 0) best = std::max(best, std::min(1.0, intersection_area(e, u) / e.area()));
    }
    loose_sum += best;
    strict_sum += best >= 1.0 - 1e-9 ? 1.0 : 0.0;
  }
  const double n = static_cast<double>(underlays.size());
  return {loose_sum / n, strict_sum / n};
}

struct ContentMaps {
  const BinMap* element_map = nullptr;
  const BinMap* saliency = nullptr;
  const BinMap* intent = nullptr;
  const GrayMap* image_gray = nullptr;
  const BinMap* text_mask = nullptr;
};

struct ContentMetrics {
  std::optional<double> uti, occ, rea, cov, con;
};

namespace detail {

inline std::optional<double> masked_fraction(const BinMap& e, const BinMap& region, bool inside) {
  std::size_t num = 0, den = 0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const bool in = region[i] != 0;
    if (in != inside) continue;
    ++den;
    num += e[i] ? 1 : 0;
  }
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

inline double gradient_magnitude(const GrayMap& g, int x, int y) {
  const int xl = std::max(0, x - 1), xr = std::min(g.width() - 1, x + 1);
  const int yu = std::max(0, y - 1), yd = std::min(g.height() - 1, y + 1);
  const double gx = g.at(xr, y) - g.at(xl, y);
  const double gy = g.at(x, yd) - g.at(x, yu);
  return std::sqrt(gx * gx + gy * gy) / std::sqrt(2.0);
}

}  // namespace detail

inline ContentMetrics content_metrics(const ContentMaps& maps) {
  if (!maps.element_map) fail(ErrorCode::kMissingComponent, "element map required");
  const BinMap& e = *maps.element_map;
  for (const BinMap* m : {maps.saliency, maps.intent, maps.text_mask}) {
    if (m) require_same_shape(e, *m);
  }
  if (maps.image_gray && (maps.image_gray->width() != e.width() || maps.image_gray->height() != e.height())) {
    fail(ErrorCode::kDimensionMismatch, "image map differs in dimensions");
  }
  ContentMetrics out;
  if (maps.saliency) {
    out.uti = detail::masked_fraction(e, *maps.saliency, false);
    out.occ = detail::masked_fraction(e, *maps.saliency, true);
  }
  if (maps.intent) {
    out.cov = detail::masked_fraction(e, *maps.intent, true);
    out.con = detail::masked_fraction(e, *maps.intent, false);
  }
  if (maps.image_gray && maps.text_mask) {
    const BinMap& t = *maps.text_mask;
    double sum = 0;
    std::size_t count = 0;
    for (int y = 0; y < t.height(); ++y) {
      for (int x = 0; x < t.width(); ++x) {
        if (!t.at(x, y)) continue;
        sum += detail::gradient_magnitude(*maps.image_gray, x, y);
        ++count;
      }
    }
    if (count > 0) out.rea = sum / static_cast<double>(count);
  }
  return out;
}

// Generated-set means in the same shape as the train-split reference.
using GeneratedStats = ReferenceStats;

struct StandardizedMetrics {
  double int_metric = 0;
  double sal_metric = 0;
};

namespace detail {

inline double relative_term(double numerator, double denominator) {
  constexpr double kFloor = 1e-9;
  if (numerator < kFloor && denominator < kFloor) return 0.0;
  return numerator / std::max(denominator, kFloor);
}

}  // namespace detail

inline StandardizedMetrics standardize(const GeneratedStats& gen, const ReferenceStats& ref) {
  using detail::relative_term;
  const double int_metric = 0.5 * (relative_term(std::abs(gen.cov_l - ref.cov_l), 1.0 - ref.cov_l) +
                                   relative_term(std::abs(gen.con_l - ref.con_l), ref.con_l));
  const double sal_metric = 0.5 * (relative_term(std::abs(gen.uti_l - ref.uti_l), 1.0 - ref.uti_l) +
                                   relative_term(std::abs(gen.occ_l - ref.occ_l), ref.occ_l));
  return {int_metric, sal_metric};
}

struct AvgInputs {
  std::optional<double> ove, ali, und_l, und_s, int_metric, sal_metric, rea;
};

// Mean of (Ove, Ali, 1-Und_l, 1-Und_s, Int, Sal, Rea).
inline double avg(const AvgInputs& in) {
  const std::array<const std::optional<double>*, 7> parts{&in.ove, &in.ali, &in.und_l, &in.und_s,
                                                          &in.int_metric, &in.sal_metric, &in.rea};
  for (const auto* p : parts) {
    if (!p->has_value()) fail(ErrorCode::kMissingComponent, "Avg needs all seven components");
  }
  return (*in.ove + *in.ali + (1.0 - *in.und_l) + (1.0 - *in.und_s) + *in.int_metric +
          *in.sal_metric + *in.rea) /
         7.0;
}

inline double avg(double ove, double ali_v, double und_l, double und_s, double int_metric,
                  double sal_metric, double rea) {
  return avg(AvgInputs{ove, ali_v, und_l, und_s, int_metric, sal_metric, rea});
}

// ---------------------------------------------------------------------------
// Per-sample evaluation and aggregation

enum class OveMode { kNumeric, kPixel };

struct MetricOptions {
  OveMode ove = OveMode::kNumeric;
  RasterOptions raster;
  double threshold = 0.5;  // saliency and intent binarization
};

// External maps for one sample; any may be absent. Maps are resampled to the
// element-map resolution.
struct SampleMaps {
  std::optional<GrayMap> saliency;
  std::optional<GrayMap> intent;
  std::optional<GrayMap> image_gray;
  std::vector<Polygon> intent_polygons;  // used when `intent` is absent
};

inline MetricReport evaluate_sample(const Layout& layout, const SampleMaps& maps,
                                    const MetricOptions& options = {}) {
  MetricReport r;
  const BinMap element_map = render_element_map(layout, options.raster);
  const int w = element_map.width(), h = element_map.height();
  r.ove = options.ove == OveMode::kPixel ? ove_pixel(render_layers(layout, options.raster))
                                        : ove_numeric(layout);
  r.ali = ali(layout);
  const auto u = und(layout);
  r.und_l = u.loose;
  r.und_s = u.strict;

  std::optional<BinMap> saliency, intent;
  std::optional<GrayMap> gray;
  if (maps.saliency) saliency = binarize(resize_nearest(*maps.saliency, w, h), options.threshold);
  if (maps.intent) {
    intent = binarize(resize_nearest(*maps.intent, w, h), options.threshold);
  } else if (!maps.intent_polygons.empty()) {
    intent = rasterize_polygons(maps.intent_polygons, layout.canvas, options.raster.target_width);
  }
  if (maps.image_gray) gray = resize_nearest(*maps.image_gray, w, h);
  const BinMap text_mask =
      render_element_map_if(layout, options.raster, [](const LayoutElement& e) { return e.category.is_text(); });

  ContentMaps cm;
  cm.element_map = &element_map;
  cm.saliency = saliency ? &*saliency : nullptr;
  cm.intent = intent ? &*intent : nullptr;
  cm.image_gray = gray ? &*gray : nullptr;
  cm.text_mask = &text_mask;
  const auto c = content_metrics(cm);
  r.uti = c.uti;
  r.occ = c.occ;
  r.rea = c.rea;
  r.cov = c.cov;
  r.con = c.con;
  return r;
}

struct AggregateReport {
  MetricReport means;
  std::optional<double> int_metric, sal_metric, avg;
  std::size_t samples = 0;
};

inline AggregateReport aggregate(const std::vector<MetricReport>& reports, const ReferenceStats& ref) {
  AggregateReport out;
  out.samples = reports.size();
  auto mean = [&](std::optional<double> MetricReport::*field) -> std::optional<double> {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& r : reports) {
      if (const auto& v = r.*field) {
        sum += *v;
        ++n;
      }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  };
  MetricReport& m = out.means;
  m.ove = mean(&MetricReport::ove);
  m.ali = mean(&MetricReport::ali);
  m.und_l = mean(&MetricReport::und_l);
  m.und_s = mean(&MetricReport::und_s);
  m.uti = mean(&MetricReport::uti);
  m.occ = mean(&MetricReport::occ);
  m.rea = mean(&MetricReport::rea);
  m.cov = mean(&MetricReport::cov);
  m.con = mean(&MetricReport::con);
  if (m.cov && m.con) {
    out.int_metric = standardize({*m.cov, *m.con, 0, 0}, ref).int_metric;
  }
  if (m.uti && m.occ) {
    out.sal_metric = standardize({0, 0, *m.uti, *m.occ}, ref).sal_metric;
  }
  const AvgInputs in{m.ove, m.ali, m.und_l, m.und_s, out.int_metric, out.sal_metric, m.rea};
  if (in.ove && in.ali && in.und_l && in.und_s && in.int_metric && in.sal_metric && in.rea) {
    out.avg = avg(in);
  }
  return out;
}

}  // namespace postertree
