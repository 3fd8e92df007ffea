#pragma once

// Dataset-level operations behind the command-line tool.

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "postertree/core.hpp"
#include "postertree/generation.hpp"
#include "postertree/io.hpp"
#include "postertree/metrics.hpp"
#include "postertree/raster.hpp"
#include "postertree/retrieval.hpp"
#include "postertree/svg_dialect.hpp"
#include "postertree/tree_builder.hpp"

namespace postertree {

namespace fs = std::filesystem;

// Runs fn(i) for i in [0, n) on up to `jobs` threads; rethrows the first
// failure after all workers stop.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(n);
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

// Resolves per-record side files: "<maps>/<id>.intent.pgm", ".saliency.pgm",
// ".image.pgm" and ".embed.json". Paths stored in a record are relative to
// the dataset file.
struct MapStore {
  std::optional<fs::path> maps_dir;
  fs::path dataset_dir = ".";

  std::optional<fs::path> side_file(const std::string& id, const std::string& suffix) const {
    if (!maps_dir) return std::nullopt;
    fs::path p = *maps_dir / (id + suffix);
    if (fs::exists(p)) return p;
    return std::nullopt;
  }

  std::optional<fs::path> resolve(const std::optional<std::string>& stored) const {
    if (!stored) return std::nullopt;
    fs::path p(*stored);
    return p.is_absolute() ? p : dataset_dir / p;
  }

  std::optional<GrayMap> intent_map(const DatasetRecord& r) const {
    if (r.intent.map) return r.intent.map;
    if (auto p = side_file(r.record_id, ".intent.pgm")) return read_pgm(p->string());
    return std::nullopt;
  }

  std::optional<GrayMap> saliency(const DatasetRecord& r) const {
    if (auto p = resolve(r.saliency_path)) return read_pgm(p->string());
    if (auto p = side_file(r.record_id, ".saliency.pgm")) return read_pgm(p->string());
    return std::nullopt;
  }

  std::optional<GrayMap> image_gray(const DatasetRecord& r) const {
    if (auto p = resolve(r.image_path); p && p->extension() == ".pgm") return read_pgm(p->string());
    if (auto p = side_file(r.record_id, ".image.pgm")) return read_pgm(p->string());
    return std::nullopt;
  }

  std::optional<std::vector<double>> embedding(const DatasetRecord& r) const {
    if (r.intent.embedding) return r.intent.embedding;
    if (auto p = side_file(r.record_id, ".embed.json")) return embedding_from_json(read_json(*p));
    return std::nullopt;
  }

  SampleMaps sample_maps(const DatasetRecord& r) const {
    SampleMaps m;
    m.saliency = saliency(r);
    m.intent = intent_map(r);
    m.image_gray = image_gray(r);
    m.intent_polygons = r.intent.polygons;
    return m;
  }
};

inline MapStore map_store_for(const fs::path& dataset_path, const std::optional<fs::path>& maps_dir) {
  MapStore s;
  s.maps_dir = maps_dir;
  s.dataset_dir = dataset_path.has_parent_path() ? dataset_path.parent_path() : fs::path(".");
  return s;
}

// Fills missing intent polygons from intent maps and embeddings from side
// files.
inline void attach_side_data(std::vector<DatasetRecord>& records, const MapStore& maps,
                             const IntentVectorizeParams& vectorize) {
  for (auto& r : records) {
    if (!r.intent.embedding) r.intent.embedding = maps.embedding(r);
    if (r.intent.polygons.empty()) {
      if (auto m = maps.intent_map(r)) r.intent.polygons = vectorize_intent(*m, r.canvas, vectorize).polygons;
    }
  }
}

inline const DatasetRecord& find_record(const std::vector<DatasetRecord>& records, const std::string& id) {
  for (const auto& r : records) {
    if (r.record_id == id) return r;
  }
  fail(ErrorCode::kInvalidArgument, "record " + id + " not found");
}

// ---------------------------------------------------------------------------
// build-trees

inline Json build_trees(const std::vector<DatasetRecord>& records, const NestParams& nest,
                        const TreeBuildOptions& options, const fs::path& out_dir, int jobs) {
  std::vector<Json> entries(records.size());
  parallel_for(records.size(), jobs, [&](std::size_t i) {
    const auto& r = records[i];
    const LayoutTree tree = build_tree(r, nest, options);
    const std::string file = r.record_id + ".svg";
    write_file_atomic(out_dir / file, serialize_tree(tree));
    entries[i] = {{"record_id", r.record_id},
                  {"file", file},
                  {"depth", tree_depth(tree)},
                  {"leaves", leaf_count(tree)},
                  {"intents", tree.intent_nodes.size()}};
  });
  Json manifest = {{"trees", entries},
                   {"epsilon_px", nest.epsilon_px ? Json(*nest.epsilon_px) : Json(nullptr)},
                   {"max_depth", nest.max_depth},
                   {"flat_trees", options.flat_trees},
                   {"no_intent", options.no_intent}};
  write_file_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

// ---------------------------------------------------------------------------
// stats

inline ReferenceStats reference_stats(const std::vector<DatasetRecord>& records, const MapStore& maps,
                                      const MetricOptions& options, int jobs) {
  if (records.empty()) fail(ErrorCode::kEmptyDataset, "no records for reference statistics");
  std::vector<MetricReport> reports(records.size());
  parallel_for(records.size(), jobs, [&](std::size_t i) {
    const auto& r = records[i];
    reports[i] = evaluate_sample(r.layout(), maps.sample_maps(r), options);
    const auto& m = reports[i];
    if (!m.cov || !m.con || !m.uti || !m.occ) {
      fail(ErrorCode::kMissingComponent,
           "record " + r.record_id + " lacks the intent or saliency map needed for reference statistics");
    }
  });
  ReferenceStats s;
  for (const auto& m : reports) {
    s.cov_l += *m.cov;
    s.con_l += *m.con;
    s.uti_l += *m.uti;
    s.occ_l += *m.occ;
  }
  const double n = static_cast<double>(reports.size());
  return {s.cov_l / n, s.con_l / n, s.uti_l / n, s.occ_l / n};
}

// ---------------------------------------------------------------------------
// select / generate

inline std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kFAligned: return "f_aligned";
    case Strategy::kDAligned: return "d_aligned";
    case Strategy::kEAligned: return "e_aligned";
    case Strategy::kRandom: return "random";
  }
  return "f_aligned";
}

inline Strategy strategy_from_name(const std::string& name) {
  if (name == "f" || name == "f_aligned") return Strategy::kFAligned;
  if (name == "d" || name == "d_aligned") return Strategy::kDAligned;
  if (name == "e" || name == "e_aligned") return Strategy::kEAligned;
  if (name == "random") return Strategy::kRandom;
  fail(ErrorCode::kInvalidArgument, "unknown strategy '" + name + "'");
}

inline SelectionQuery query_for(const DatasetRecord& r, Strategy strategy, const MapStore& maps) {
  switch (strategy) {
    case Strategy::kFAligned: {
      auto emb = maps.embedding(r);
      if (!emb) fail(ErrorCode::kStrategyQueryMismatch, "record " + r.record_id + " has no embedding");
      return EmbeddingQuery{*emb};
    }
    case Strategy::kDAligned: return BoxQuery{intent_bboxes(r.intent)};
    case Strategy::kEAligned:
      if (r.elements.empty()) {
        fail(ErrorCode::kStrategyQueryMismatch, "record " + r.record_id + " has no elements for E-aligned selection");
      }
      return CategoryQuery{category_multiset(r.elements)};
    case Strategy::kRandom: return NoQuery{};
  }
  return NoQuery{};
}

struct GenerateConfig {
  GenParams gen;
  NestParams nest;
  TreeBuildOptions ablation;
  Strategy strategy = Strategy::kFAligned;
  SelectOptions select;
  RankWeights weights;
  RasterOptions raster;
  PromptTemplate prompt_template = PromptTemplate::standard();
  std::uint64_t seed = 0;  // seed of the generate command
};

struct GeneratedLayout {
  std::string record_id;
  LayoutTree chosen;
  Json report;
  std::string prompt;
};

inline GeneratedLayout generate_for_record(Backend& backend, const IntentIndex& index,
                                           const std::vector<DatasetRecord>& pool, const DatasetRecord& query,
                                           const MapStore& maps, const GenerateConfig& config) {
  const std::uint64_t record_seed = derive_seed(config.seed, query.record_id);
  SelectOptions select = config.select;
  select.exclude_ids.push_back(query.record_id);
  const auto ids = select_examples(index, query_for(query, config.strategy, maps),
                                   static_cast<std::size_t>(config.gen.k), config.strategy,
                                   derive_seed(record_seed, "select"), select);

  std::vector<PromptExample> examples;
  for (const auto& id : ids) {
    examples.push_back({id, build_tree(find_record(pool, id), config.nest, config.ablation)});
  }
  PromptTest test;
  test.canvas = query.canvas;
  if (!config.ablation.no_intent) test.intent_polygons = query.intent.polygons;
  if (!query.elements.empty()) {
    DatasetRecord bare = query;
    bare.intent = {};
    test.requested_ids = leaf_ids(build_tree(bare, config.nest, config.ablation));
  } else {
    test.requested_ids = leaf_ids(canonicalize(examples.front().tree));
  }
  const PromptBundle bundle = assemble_prompt(examples, test, config.prompt_template);

  GenParams gen = config.gen;
  gen.seed = derive_seed(record_seed, "generate");
  const GenerationResult generated = generate_layout(backend, bundle, gen, query.record_id);

  std::vector<LayoutTree> candidates;
  Json sanitation = Json::array();
  for (std::size_t i = 0; i < generated.candidates.size(); ++i) {
    try {
      auto s = validate_tree(generated.candidates[i], query.canvas);
      sanitation.push_back({{"candidate", candidates.size()},
                            {"clamped", s.report.clamped},
                            {"dropped", s.report.dropped},
                            {"renamed", s.report.renamed}});
      candidates.push_back(std::move(s.tree));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kEmptyAfterSanitation) throw;
    }
  }
  if (candidates.empty()) fail(ErrorCode::kEmptyAfterSanitation, "every candidate was empty after sanitation");

  BinMap intent_map;
  if (auto m = maps.intent_map(query)) {
    const RasterFrame f = frame_for(query.canvas, config.raster.target_width);
    intent_map = binarize(resize_nearest(*m, f.width, f.height));
  } else {
    intent_map = rasterize_polygons(query.intent.polygons, query.canvas, config.raster.target_width);
  }
  const RankResult ranked = rank_candidates(candidates, intent_map, config.weights);

  Json cands = Json::array();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    cands.push_back({{"index", i}, {"score", ranked.scores[i]}, {"svg", serialize_tree(candidates[i])}});
  }
  GeneratedLayout out;
  out.record_id = query.record_id;
  out.chosen = candidates[ranked.best];
  out.prompt = bundle.text;
  out.report = {{"record_id", query.record_id},
                {"strategy", strategy_name(config.strategy)},
                {"example_ids", ids},
                {"chosen", ranked.best},
                {"candidates", cands},
                {"sanitation", sanitation},
                {"malformed_responses", generated.malformed_responses}};
  return out;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluationOutput {
  Json reports;
  AggregateReport aggregate;
};

inline EvaluationOutput evaluate_directory(const fs::path& generated_dir, const std::vector<DatasetRecord>& records,
                                           const MapStore& maps, const ReferenceStats& ref,
                                           const MetricOptions& options, int jobs) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(generated_dir)) {
    const auto& p = entry.path();
    if (entry.is_regular_file() && p.extension() == ".svg") files.push_back(p);
  }
  std::sort(files.begin(), files.end());
  std::vector<MetricReport> reports(files.size());
  std::vector<std::string> ids(files.size());
  parallel_for(files.size(), jobs, [&](std::size_t i) {
    ids[i] = files[i].stem().string();
    const DatasetRecord& r = find_record(records, ids[i]);
    const LayoutTree tree = parse_tree(read_file(files[i]), r.canvas);
    reports[i] = evaluate_sample(flatten_tree(tree), maps.sample_maps(r), options);
  });
  EvaluationOutput out;
  out.reports = Json::array();
  for (std::size_t i = 0; i < reports.size(); ++i) {
    Json j = to_json(reports[i]);
    j["record_id"] = ids[i];
    out.reports.push_back(j);
  }
  out.aggregate = aggregate(reports, ref);
  return out;
}

}  // namespace postertree
