#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <gtest/gtest.h>

#include "postertree/retrieval.hpp"
#include "support/random_inputs.hpp"

namespace postertree {
namespace {

DatasetRecord rec(std::string id, std::vector<double> emb) {
  DatasetRecord r;
  r.record_id = std::move(id);
  r.canvas = {100, 100};
  r.intent.embedding = std::move(emb);
  return r;
}

IntentIndex random_index(testing::Rng& rng, int n, int dim) {
  std::vector<DatasetRecord> records;
  for (int i = 0; i < n; ++i) {
    std::vector<double> v(static_cast<std::size_t>(dim));
    for (auto& x : v) x = rng.uniform(-1, 1);
    char id[16];
    std::snprintf(id, sizeof id, "r%03d", i);
    records.push_back(rec(id, v));
  }
  return build_index(records);
}

ErrorCode error_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::kInvalidArgument;
}

TEST(BuildIndex, EntriesBoxesAndErrors) {
  DatasetRecord a = rec("a", {1, 2, 3, 4});
  a.intent.polygons = {{{0, 0}, {10, 0}, {10, 5}}, {{20, 20}, {30, 20}, {30, 40}, {20, 40}}};
  a.elements = {{category::kText, Rect{0, 0, 1, 1}}, {category::kText, Rect{0, 0, 1, 1}}, {category::kLogo, Rect{0, 0, 1, 1}}};
  const auto idx = build_index({a, rec("b", {0, 0, 0, 0}), rec("c", {1, 1, 1, 1})});
  EXPECT_EQ(idx.size(), 3u);
  EXPECT_EQ(idx.embedding_dim, 4u);
  ASSERT_EQ(idx.entries[0].intent_bboxes.size(), 2u);
  EXPECT_EQ(idx.entries[0].intent_bboxes[1], (Rect{20, 20, 10, 20}));
  EXPECT_EQ(idx.entries[0].category_multiset.at("text"), 2);
  EXPECT_EQ(error_of([] { build_index({rec("a", {1, 2}), rec("b", {1, 2, 3})}); }), ErrorCode::kDimMismatch);
  EXPECT_EQ(error_of([] { build_index({}); }), ErrorCode::kEmptyDataset);
}

TEST(Select, EuclideanOrdering) {
  const auto idx = build_index({rec("a", {0, 0}), rec("b", {1, 0}), rec("c", {5, 5})});
  EXPECT_EQ(select_examples(idx, EmbeddingQuery{{0.9, 0.1}}, 2, Strategy::kFAligned),
            (std::vector<std::string>{"b", "a"}));
}

TEST(Select, TiesBreakById) {
  const auto idx = build_index({rec("z", {1, 0}), rec("m", {-1, 0}), rec("a", {0, 1})});
  EXPECT_EQ(select_examples(idx, EmbeddingQuery{{0, 0}}, 3, Strategy::kFAligned),
            (std::vector<std::string>{"a", "m", "z"}));
}

TEST(Select, ErrorsAndExclusions) {
  const auto idx = build_index({rec("a", {0, 0}), rec("b", {1, 0})});
  EXPECT_EQ(error_of([&] { select_examples(idx, EmbeddingQuery{{0, 0}}, 3, Strategy::kFAligned); }), ErrorCode::kKTooLarge);
  EXPECT_EQ(error_of([&] { select_examples(idx, NoQuery{}, 1, Strategy::kFAligned); }), ErrorCode::kStrategyQueryMismatch);
  EXPECT_EQ(error_of([&] { select_examples(idx, EmbeddingQuery{{0, 0}}, 1, Strategy::kDAligned); }),
            ErrorCode::kStrategyQueryMismatch);
  SelectOptions opt;
  opt.exclude_ids = {"a"};
  EXPECT_EQ(select_examples(idx, EmbeddingQuery{{0, 0}}, 1, Strategy::kFAligned, 0, opt), (std::vector<std::string>{"b"}));
  EXPECT_EQ(error_of([&] { select_examples(idx, EmbeddingQuery{{0, 0}}, 2, Strategy::kFAligned, 0, opt); }),
            ErrorCode::kKTooLarge);
}

TEST(Select, FullKIsPermutation) {
  testing::Rng rng(1);
  const auto idx = random_index(rng, 12, 3);
  std::vector<std::string> all;
  for (const auto& e : idx.entries) all.push_back(e.record_id);
  std::sort(all.begin(), all.end());
  for (auto strategy : {Strategy::kFAligned, Strategy::kDAligned, Strategy::kEAligned, Strategy::kRandom}) {
    SelectionQuery q = NoQuery{};
    if (strategy == Strategy::kFAligned) q = EmbeddingQuery{{0, 0, 0}};
    if (strategy == Strategy::kDAligned) q = BoxQuery{};
    if (strategy == Strategy::kEAligned) q = CategoryQuery{};
    auto got = select_examples(idx, q, 12, strategy, 5);
    std::sort(got.begin(), got.end());
    EXPECT_EQ(got, all);
  }
}

TEST(Select, MatchesExhaustiveSortAndIgnoresScaling) {
  testing::Rng rng(42);
  const auto idx = random_index(rng, 100, 8);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> q(8);
    for (auto& x : q) x = rng.uniform(-1, 1);
    std::vector<std::pair<double, std::string>> all;
    for (const auto& e : idx.entries) {
      double d = 0;
      for (std::size_t i = 0; i < 8; ++i) d += (e.embedding[i] - q[i]) * (e.embedding[i] - q[i]);
      all.emplace_back(d, e.record_id);
    }
    std::sort(all.begin(), all.end());
    for (std::size_t k : {1u, 5u, 10u}) {
      const auto got = select_examples(idx, EmbeddingQuery{q}, k, Strategy::kFAligned);
      for (std::size_t i = 0; i < k; ++i) EXPECT_EQ(got[i], all[i].second);
      IntentIndex scaled = idx;
      for (auto& e : scaled.entries) {
        for (auto& v : e.embedding) v *= 3.5;
      }
      std::vector<double> sq = q;
      for (auto& v : sq) v *= 3.5;
      EXPECT_EQ(select_examples(scaled, EmbeddingQuery{sq}, k, Strategy::kFAligned), got);
    }
  }
}

TEST(Select, CosineOption) {
  const auto idx = build_index({rec("a", {10, 0}), rec("b", {0.5, 0.5})});
  SelectOptions opt;
  opt.metric = EmbeddingMetric::kCosine;
  EXPECT_EQ(select_examples(idx, EmbeddingQuery{{1, 0.1}}, 1, Strategy::kFAligned, 0, opt), (std::vector<std::string>{"a"}));
  EXPECT_EQ(select_examples(idx, EmbeddingQuery{{1, 1}}, 1, Strategy::kFAligned, 0, opt), (std::vector<std::string>{"b"}));
}

TEST(Select, IntentBoxesAndCategories) {
  DatasetRecord a = rec("a", {0}), b = rec("b", {0}), c = rec("c", {0});
  a.intent.polygons = {{{0, 0}, {10, 0}, {10, 10}, {0, 10}}};
  b.intent.polygons = {{{50, 50}, {60, 50}, {60, 60}, {50, 60}}};
  c.intent.polygons = {{{0, 0}, {10, 0}, {10, 20}, {0, 20}}};
  a.elements = {{category::kText, Rect{0, 0, 1, 1}}};
  b.elements = {{category::kText, Rect{0, 0, 1, 1}}, {category::kLogo, Rect{0, 0, 1, 1}}};
  c.elements = {{category::kLogo, Rect{0, 0, 1, 1}}};
  const auto idx = build_index({a, b, c});
  EXPECT_EQ(select_examples(idx, BoxQuery{{Rect{0, 0, 10, 10}}}, 3, Strategy::kDAligned),
            (std::vector<std::string>{"a", "c", "b"}));
  EXPECT_EQ(select_examples(idx, CategoryQuery{{{"text", 1}, {"logo", 1}}}, 3, Strategy::kEAligned),
            (std::vector<std::string>{"b", "a", "c"}));
  EXPECT_DOUBLE_EQ(box_set_similarity({Rect{0, 0, 10, 10}}, {Rect{0, 0, 10, 10}, Rect{50, 50, 5, 5}}), 0.5);
  EXPECT_DOUBLE_EQ(multiset_jaccard({{"text", 2}}, {{"text", 1}, {"logo", 1}}), 1.0 / 3.0);
}

TEST(Select, RandomIsReproducibleAndUniform) {
  testing::Rng rng(9);
  const auto idx = random_index(rng, 20, 2);
  EXPECT_EQ(select_examples(idx, NoQuery{}, 5, Strategy::kRandom, 77), select_examples(idx, NoQuery{}, 5, Strategy::kRandom, 77));
  std::map<std::string, int> freq;
  const int draws = 1000;
  const std::size_t k = 5;
  for (int s = 0; s < draws; ++s) {
    auto ids = select_examples(idx, NoQuery{}, k, Strategy::kRandom, static_cast<std::uint64_t>(s) * 7919 + 1);
    std::set<std::string> uniq(ids.begin(), ids.end());
    ASSERT_EQ(uniq.size(), k);
    for (const auto& id : ids) ++freq[id];
  }
  const double p = static_cast<double>(k) / 20.0;
  const double mean = draws * p, sigma = std::sqrt(draws * p * (1 - p));
  for (const auto& e : idx.entries) EXPECT_LE(std::abs(freq[e.record_id] - mean), 3 * sigma) << e.record_id;
}

TEST(Persistence, EncodeDecode) {
  testing::Rng rng(2);
  IntentIndex idx = random_index(rng, 7, 5);
  idx.entries[2].intent_bboxes = {{1, 2, 3, 4}};
  idx.entries[3].category_multiset = {{"text", 2}};
  const std::string bytes = encode_index(idx);
  EXPECT_EQ(bytes.substr(0, 4), "POIX");
  const IntentIndex back = decode_index(bytes);
  ASSERT_EQ(back.size(), 7u);
  EXPECT_EQ(back.embedding_dim, 5u);
  for (std::size_t i = 0; i < 7; ++i) {
    EXPECT_EQ(back.entries[i].record_id, idx.entries[i].record_id);
    for (std::size_t d = 0; d < 5; ++d) {
      EXPECT_EQ(back.entries[i].embedding[d], static_cast<double>(static_cast<float>(idx.entries[i].embedding[d])));
    }
  }
  EXPECT_EQ(back.entries[2].intent_bboxes, idx.entries[2].intent_bboxes);
  EXPECT_EQ(back.entries[3].category_multiset, idx.entries[3].category_multiset);
  EXPECT_EQ(encode_index(back), bytes);
  EXPECT_THROW(decode_index("POIX"), Error);
  EXPECT_THROW(decode_index(bytes.substr(0, bytes.size() - 3)), Error);
}

}  // namespace
}  // namespace postertree
