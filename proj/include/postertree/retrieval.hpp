#pragma once

// Flat design-intent index and in-context example selection.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "postertree/core.hpp"

namespace postertree {

using CategoryCounts = std::map<std::string, int>;  // category token -> count

struct IndexEntry {
  std::string record_id;
  std::vector<double> embedding;
  std::vector<Rect> intent_bboxes;
  CategoryCounts category_multiset;
};

struct IntentIndex {
  std::vector<IndexEntry> entries;
  std::size_t embedding_dim = 0;

  std::size_t size() const noexcept { return entries.size(); }
  const IndexEntry* find(const std::string& id) const {
    for (const auto& e : entries) {
      if (e.record_id == id) return &e;
    }
    return nullptr;
  }
};

inline CategoryCounts category_multiset(const std::vector<LayoutElement>& elements) {
  CategoryCounts counts;
  for (const auto& e : elements) ++counts[std::string(category_token(e.category))];
  return counts;
}

inline std::vector<Rect> intent_bboxes(const DesignIntent& intent) {
  std::vector<Rect> out;
  for (const auto& poly : intent.polygons) out.push_back(bounding_box(poly));
  return out;
}

inline IntentIndex build_index(const std::vector<DatasetRecord>& records) {
  if (records.empty()) fail(ErrorCode::kEmptyDataset, "no records to index");
  IntentIndex index;
  std::set<std::string> seen;
  for (const auto& r : records) {
    if (!r.intent.embedding) {
      fail(ErrorCode::kDimMismatch, "record " + r.record_id + " has no embedding");
    }
    const auto& emb = *r.intent.embedding;
    if (index.entries.empty()) {
      index.embedding_dim = emb.size();
    } else if (emb.size() != index.embedding_dim) {
      fail(ErrorCode::kDimMismatch, "record " + r.record_id + " has embedding dim " +
                                        std::to_string(emb.size()) + ", expected " +
                                        std::to_string(index.embedding_dim));
    }
    if (!seen.insert(r.record_id).second) {
      fail(ErrorCode::kInvalidArgument, "duplicate record id " + r.record_id);
    }
    index.entries.push_back({r.record_id, emb, intent_bboxes(r.intent), category_multiset(r.elements)});
  }
  return index;
}

// ---------------------------------------------------------------------------
// Selection

enum class Strategy { kFAligned, kDAligned, kEAligned, kRandom };
enum class EmbeddingMetric { kEuclidean, kCosine };

struct EmbeddingQuery {
  std::vector<double> embedding;
};
struct BoxQuery {
  std::vector<Rect> intent_bboxes;
};
struct CategoryQuery {
  CategoryCounts category_multiset;
};
struct NoQuery {};

using SelectionQuery = std::variant<NoQuery, EmbeddingQuery, BoxQuery, CategoryQuery>;

struct SelectOptions {
  EmbeddingMetric metric = EmbeddingMetric::kEuclidean;
  std::vector<std::string> exclude_ids;  // e.g. the query record itself
};

inline double euclidean_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

inline double cosine_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 1.0;
  return 1.0 - dot / std::sqrt(na * nb);
}

// Greedy best-pair matching; unmatched boxes on either side contribute 0.
inline double box_set_similarity(const std::vector<Rect>& a, const std::vector<Rect>& b) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  struct Pair {
    double iou;
    std::size_t i, j;
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) pairs.push_back({iou(a[i], b[j]), i, j});
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) { return x.iou > y.iou; });
  std::vector<char> used_a(a.size(), 0), used_b(b.size(), 0);
  double sum = 0;
  for (const auto& p : pairs) {
    if (used_a[p.i] || used_b[p.j]) continue;
    used_a[p.i] = used_b[p.j] = 1;
    sum += p.iou;
  }
  return sum / static_cast<double>(std::max(a.size(), b.size()));
}

inline double multiset_jaccard(const CategoryCounts& a, const CategoryCounts& b) {
  std::set<std::string> keys;
  for (const auto& [k, _] : a) keys.insert(k);
  for (const auto& [k, _] : b) keys.insert(k);
  long inter = 0, uni = 0;
  for (const auto& k : keys) {
    const int ca = a.count(k) ? a.at(k) : 0;
    const int cb = b.count(k) ? b.at(k) : 0;
    inter += std::min(ca, cb);
    uni += std::max(ca, cb);
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Portable bounded draw (rejection sampling), so selections reproduce across
// standard libraries.
inline std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % bound;
}

inline std::vector<std::string> select_examples(const IntentIndex& index, const SelectionQuery& query,
                                                std::size_t k, Strategy strategy, std::uint64_t seed = 0,
                                                const SelectOptions& options = {}) {
  std::vector<const IndexEntry*> pool;
  for (const auto& e : index.entries) {
    if (std::find(options.exclude_ids.begin(), options.exclude_ids.end(), e.record_id) ==
        options.exclude_ids.end()) {
      pool.push_back(&e);
    }
  }
  if (k < 1) fail(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (k > pool.size()) {
    fail(ErrorCode::kKTooLarge, "k=" + std::to_string(k) + " exceeds the " +
                                    std::to_string(pool.size()) + " selectable entries");
  }
  std::sort(pool.begin(), pool.end(),
            [](const IndexEntry* a, const IndexEntry* b) { return a->record_id < b->record_id; });

  std::vector<std::string> out;
  if (strategy == Strategy::kRandom) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(bounded_draw(rng, pool.size() - i));
      std::swap(pool[i], pool[j]);
      out.push_back(pool[i]->record_id);
    }
    return out;
  }

  // Lower score ranks first.
  std::vector<double> score(pool.size());
  if (strategy == Strategy::kFAligned) {
    const auto* q = std::get_if<EmbeddingQuery>(&query);
    if (!q) fail(ErrorCode::kStrategyQueryMismatch, "f-aligned selection needs an embedding query");
    if (q->embedding.size() != index.embedding_dim) {
      fail(ErrorCode::kDimMismatch, "query embedding has the wrong dimension");
    }
    for (std::size_t i = 0; i < pool.size(); ++i) {
      score[i] = options.metric == EmbeddingMetric::kCosine
                     ? cosine_distance(q->embedding, pool[i]->embedding)
                     : euclidean_distance(q->embedding, pool[i]->embedding);
    }
  } else if (strategy == Strategy::kDAligned) {
    const auto* q = std::get_if<BoxQuery>(&query);
    if (!q) fail(ErrorCode::kStrategyQueryMismatch, "D-aligned selection needs intent boxes");
    for (std::size_t i = 0; i < pool.size(); ++i) {
      score[i] = -box_set_similarity(q->intent_bboxes, pool[i]->intent_bboxes);
    }
  } else {
    const auto* q = std::get_if<CategoryQuery>(&query);
    if (!q) fail(ErrorCode::kStrategyQueryMismatch, "E-aligned selection needs element categories");
    for (std::size_t i = 0; i < pool.size(); ++i) {
      score[i] = -multiset_jaccard(q->category_multiset, pool[i]->category_multiset);
    }
  }
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  // Pool is id-sorted, so a stable sort breaks ties lexicographically.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });
  for (std::size_t i = 0; i < k; ++i) out.push_back(pool[order[i]]->record_id);
  return out;
}

// ---------------------------------------------------------------------------
// Binary persistence: "POIX", u32 version, u32 count, u32 dim, count*dim
// little-endian float32, then a JSON trailer to end of file.

inline constexpr std::uint32_t kIndexVersion = 1;

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint32_t get_u32(const std::string& in, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

}  // namespace detail

inline std::string encode_index(const IntentIndex& index) {
  std::string out = "POIX";
  detail::put_u32(out, kIndexVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(index.entries.size()));
  detail::put_u32(out, static_cast<std::uint32_t>(index.embedding_dim));
  for (const auto& e : index.entries) {
    for (double v : e.embedding) detail::put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  nlohmann::json trailer = nlohmann::json::array();
  for (const auto& e : index.entries) {
    nlohmann::json boxes = nlohmann::json::array();
    for (const auto& b : e.intent_bboxes) boxes.push_back({b.x, b.y, b.w, b.h});
    trailer.push_back({{"id", e.record_id}, {"intent_bboxes", boxes}, {"categories", e.category_multiset}});
  }
  out += trailer.dump();
  return out;
}

inline IntentIndex decode_index(const std::string& bytes) {
  if (bytes.size() < 16 || bytes.compare(0, 4, "POIX") != 0) fail(ErrorCode::kFormat, "not an index file");
  if (detail::get_u32(bytes, 4) != kIndexVersion) fail(ErrorCode::kFormat, "unsupported index version");
  const std::uint32_t count = detail::get_u32(bytes, 8);
  const std::uint32_t dim = detail::get_u32(bytes, 12);
  const std::size_t floats_end = 16 + static_cast<std::size_t>(count) * dim * 4;
  if (bytes.size() < floats_end) fail(ErrorCode::kFormat, "truncated index file");
  nlohmann::json trailer;
  try {
    trailer = nlohmann::json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(floats_end), bytes.end());
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorCode::kFormat, std::string("bad index trailer: ") + ex.what());
  }
  if (!trailer.is_array() || trailer.size() != count) fail(ErrorCode::kFormat, "index trailer count mismatch");
  IntentIndex index;
  index.embedding_dim = dim;
  try {
    for (std::uint32_t i = 0; i < count; ++i) {
      IndexEntry e;
      e.embedding.resize(dim);
      for (std::uint32_t d = 0; d < dim; ++d) {
        e.embedding[d] =
            std::bit_cast<float>(detail::get_u32(bytes, 16 + (static_cast<std::size_t>(i) * dim + d) * 4));
      }
      const auto& t = trailer[i];
      e.record_id = t.at("id").get<std::string>();
      for (const auto& b : t.at("intent_bboxes")) {
        e.intent_bboxes.push_back({b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                                   b.at(3).get<double>()});
      }
      e.category_multiset = t.at("categories").get<CategoryCounts>();
      index.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorCode::kFormat, std::string("bad index trailer: ") + ex.what());
  }
  return index;
}

}  // namespace postertree
