// Command-line front end: build-trees, stats, index, select, generate,
// evaluate, render-map and realize.

#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "postertree/pipeline.hpp"
#include "postertree/realization.hpp"

namespace pt = postertree;
namespace fs = std::filesystem;

namespace {

// Reads a flat JSON object as CLI11 configuration; keys are long option
// names with '_' or '-' separators.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    nlohmann::json j = nlohmann::json::object();
    for (const CLI::Option* opt : app->get_options({})) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const auto& name = opt->get_lnames().front();
      if (opt->count() > 0) {
        j[name] = opt->results().size() == 1 ? nlohmann::json(opt->results().front()) : nlohmann::json(opt->results());
      } else if (default_also && !opt->get_default_str().empty()) {
        j[name] = opt->get_default_str();
      }
    }
    return j.dump(2);
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      input >> j;
    } catch (const nlohmann::json::exception& ex) {
      throw CLI::ConversionError("config", std::string("config is not valid JSON: ") + ex.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config", "config must be a JSON object");
    auto scalar = [](const nlohmann::json& v) {
      if (v.is_string()) return v.get<std::string>();
      if (v.is_boolean()) return std::string(v.get<bool>() ? "true" : "false");
      return v.dump();
    };
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : j.items()) {
      CLI::ConfigItem item;
      item.name = key;
      for (auto& c : item.name) {
        if (c == '_') c = '-';
      }
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else if (!value.is_null()) {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
    return items;
  }
};

struct Args {
  std::string dataset, queries, maps, index, generated, reference, layout, materials, fixture, endpoint, model,
      template_path, out;
  std::string token_env = "POSTERTREE_API_TOKEN";
  std::string style = "clean";
  std::string backend = "mock";
  std::string strategy = "f_aligned";
  std::string ove = "numeric";
  std::vector<std::string> query_ids;
  int jobs = 1;
  int max_depth = 4;
  int k = 10;
  int candidates = 4;
  int max_retries = 3;
  int max_tokens = 2048;
  int render_width = pt::kElementMapWidth;
  std::uint64_t seed = 0;
  double epsilon = -1;
  double temperature = 0.7;
  double timeout = 60;
  double threshold = 0.5;
  double w_ali = 1.0;
  double w_ove = 1.0;
  bool flat_trees = false;
  bool no_intent = false;
  bool cosine = false;
  bool llm = false;
};

void require(const std::string& value, const std::string& flag) {
  if (value.empty()) pt::fail(pt::ErrorCode::kInvalidArgument, "missing required option " + flag);
}

int jobs_of(const Args& a) {
  if (a.jobs > 0) return a.jobs;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

pt::MapStore map_store(const Args& a, const std::string& dataset) {
  std::optional<fs::path> dir;
  if (!a.maps.empty()) {
    if (!fs::is_directory(a.maps)) pt::fail(pt::ErrorCode::kIo, "maps directory not found: " + a.maps);
    dir = fs::path(a.maps);
  }
  return pt::map_store_for(dataset, dir);
}

std::vector<pt::DatasetRecord> load_records(const Args& a, const std::string& path, const pt::MapStore& maps) {
  auto records = pt::load_dataset(path);
  pt::IntentVectorizeParams vectorize;
  vectorize.threshold = a.threshold;
  pt::attach_side_data(records, maps, vectorize);
  return records;
}

pt::NestParams nest_params(const Args& a) {
  pt::NestParams p;
  if (a.epsilon >= 0) p.epsilon_px = a.epsilon;
  p.max_depth = a.max_depth;
  return p;
}

pt::TreeBuildOptions ablation(const Args& a) { return {a.flat_trees, a.no_intent}; }

pt::MetricOptions metric_options(const Args& a) {
  pt::MetricOptions m;
  if (a.ove == "pixel") {
    m.ove = pt::OveMode::kPixel;
  } else if (a.ove != "numeric") {
    pt::fail(pt::ErrorCode::kInvalidArgument, "--ove must be numeric or pixel");
  }
  m.raster.target_width = a.render_width;
  m.threshold = a.threshold;
  return m;
}

std::unique_ptr<pt::Backend> make_backend(const Args& a) {
  if (a.backend == "mock") {
    if (a.fixture.empty()) return std::make_unique<pt::MockBackend>();
    try {
      return std::make_unique<pt::MockBackend>(pt::MockBackend::from_json(pt::read_json(a.fixture)));
    } catch (const nlohmann::json::exception& ex) {
      pt::fail(pt::ErrorCode::kFormat, "bad mock fixture: " + std::string(ex.what()));
    }
  }
  if (a.backend == "http") {
    pt::BackendConfig c;
    c.kind = pt::BackendKind::kHttp;
    c.endpoint_url = a.endpoint;
    c.model_name = a.model;
    c.api_token_env_var = a.token_env;
    c.timeout_s = a.timeout;
    return std::make_unique<pt::HttpBackend>(c);
  }
  pt::fail(pt::ErrorCode::kInvalidArgument, "--backend must be mock or http");
}

pt::GenParams gen_params(const Args& a) {
  pt::GenParams g;
  g.k = a.k;
  g.temperature = a.temperature;
  g.candidates = a.candidates;
  g.max_retries = a.max_retries;
  g.max_tokens = a.max_tokens;
  if (g.k < 1) pt::fail(pt::ErrorCode::kInvalidArgument, "--k must be >= 1");
  return g;
}

void write_json(const fs::path& path, const nlohmann::json& j) { pt::write_file_atomic(path, j.dump(2) + "\n"); }

std::vector<pt::DatasetRecord> pick_queries(const Args& a, std::vector<pt::DatasetRecord> records) {
  if (a.query_ids.empty()) return records;
  std::vector<pt::DatasetRecord> out;
  for (const auto& id : a.query_ids) out.push_back(pt::find_record(records, id));
  return out;
}

// ---------------------------------------------------------------------------

void cmd_build_trees(const Args& a) {
  require(a.dataset, "--dataset");
  require(a.out, "--out");
  const auto maps = map_store(a, a.dataset);
  const auto records = load_records(a, a.dataset, maps);
  pt::build_trees(records, nest_params(a), ablation(a), a.out, jobs_of(a));
}

void cmd_stats(const Args& a) {
  require(a.dataset, "--dataset");
  require(a.out, "--out");
  const auto maps = map_store(a, a.dataset);
  const auto records = load_records(a, a.dataset, maps);
  const pt::ReferenceStats s = pt::reference_stats(records, maps, metric_options(a), jobs_of(a));
  nlohmann::json j = pt::to_json(s);
  j["samples"] = records.size();
  write_json(a.out, j);
}

void cmd_index(const Args& a) {
  require(a.dataset, "--dataset");
  require(a.out, "--out");
  const auto maps = map_store(a, a.dataset);
  const auto records = load_records(a, a.dataset, maps);
  pt::write_file_atomic(a.out, pt::encode_index(pt::build_index(records)));
}

pt::SelectOptions select_options(const Args& a) {
  pt::SelectOptions s;
  if (a.cosine) s.metric = pt::EmbeddingMetric::kCosine;
  return s;
}

void cmd_select(const Args& a, std::uint64_t seed) {
  require(a.index, "--index");
  const std::string source = a.queries.empty() ? a.dataset : a.queries;
  require(source, "--dataset or --queries");
  if (a.query_ids.empty()) pt::fail(pt::ErrorCode::kInvalidArgument, "select needs at least one --query");
  const auto index = pt::decode_index(pt::read_file(a.index));
  const auto maps = map_store(a, source);
  const auto queries = pick_queries(a, load_records(a, source, maps));
  const pt::Strategy strategy = pt::strategy_from_name(a.strategy);
  nlohmann::json selections = nlohmann::json::array();
  for (const auto& q : queries) {
    pt::SelectOptions opts = select_options(a);
    opts.exclude_ids.push_back(q.record_id);
    const std::uint64_t s = pt::derive_seed(pt::derive_seed(seed, q.record_id), "select");
    const auto ids = pt::select_examples(index, pt::query_for(q, strategy, maps), static_cast<std::size_t>(a.k), strategy,
                                         s, opts);
    selections.push_back({{"query", q.record_id}, {"ids", ids}});
  }
  const nlohmann::json out = {{"strategy", pt::strategy_name(strategy)}, {"k", a.k}, {"selections", selections}};
  if (a.out.empty()) {
    std::cout << out.dump(2) << "\n";
  } else {
    write_json(a.out, out);
  }
}

void cmd_generate(const Args& a, std::uint64_t seed) {
  require(a.dataset, "--dataset");
  require(a.index, "--index");
  require(a.out, "--out");
  const auto maps = map_store(a, a.dataset);
  const auto pool = load_records(a, a.dataset, maps);
  const auto query_maps = a.queries.empty() ? maps : map_store(a, a.queries);
  const auto queries = pick_queries(a, a.queries.empty() ? pool : load_records(a, a.queries, query_maps));
  const auto index = pt::decode_index(pt::read_file(a.index));
  auto backend = make_backend(a);

  pt::GenerateConfig config;
  config.gen = gen_params(a);
  config.nest = nest_params(a);
  config.ablation = ablation(a);
  config.strategy = pt::strategy_from_name(a.strategy);
  config.select = select_options(a);
  config.weights = {a.w_ali, a.w_ove};
  config.raster.target_width = a.render_width;
  if (!a.template_path.empty()) config.prompt_template = pt::PromptTemplate::parse(pt::read_file(a.template_path));
  config.seed = seed;

  std::vector<nlohmann::json> entries(queries.size());
  pt::parallel_for(queries.size(), jobs_of(a), [&](std::size_t i) {
    const auto result = pt::generate_for_record(*backend, index, pool, queries[i], query_maps, config);
    const std::string file = result.record_id + ".svg";
    pt::write_file_atomic(fs::path(a.out) / file, pt::serialize_tree(result.chosen));
    write_json(fs::path(a.out) / (result.record_id + ".report.json"), result.report);
    const std::size_t chosen = result.report["chosen"].get<std::size_t>();
    entries[i] = {{"record_id", result.record_id},
                  {"file", file},
                  {"chosen", chosen},
                  {"score", result.report["candidates"][chosen]["score"]}};
  });
  write_json(fs::path(a.out) / "generate.json", {{"backend", a.backend},
                                                 {"strategy", pt::strategy_name(config.strategy)},
                                                 {"k", a.k},
                                                 {"candidates", a.candidates},
                                                 {"seed", a.seed},
                                                 {"records", entries}});
}

void cmd_evaluate(const Args& a) {
  require(a.generated, "--generated");
  require(a.dataset, "--dataset");
  require(a.reference, "--reference");
  require(a.out, "--out");
  const auto maps = map_store(a, a.dataset);
  const auto records = load_records(a, a.dataset, maps);
  const pt::ReferenceStats ref = pt::reference_stats_from_json(pt::read_json(a.reference));
  if (!fs::is_directory(a.generated)) pt::fail(pt::ErrorCode::kIo, "generated directory not found: " + a.generated);
  const auto result = pt::evaluate_directory(a.generated, records, maps, ref, metric_options(a), jobs_of(a));
  write_json(fs::path(a.out) / "reports.json", result.reports);
  write_json(fs::path(a.out) / "aggregate.json", pt::to_json(result.aggregate));
}

void cmd_render_map(const Args& a) {
  require(a.layout, "--layout");
  require(a.out, "--out");
  const pt::LayoutTree tree = pt::parse_tree(pt::read_file(a.layout));
  pt::RasterOptions r;
  r.target_width = a.render_width;
  pt::write_file_atomic(a.out, pt::encode_pgm(pt::render_element_map(pt::flatten_tree(tree), r)));
}

void cmd_realize(const Args& a) {
  require(a.layout, "--layout");
  require(a.out, "--out");
  const pt::LayoutTree tree = pt::parse_tree(pt::read_file(a.layout));
  pt::Materials materials;
  if (!a.materials.empty()) {
    try {
      materials = pt::materials_from_json(pt::read_json(a.materials));
    } catch (const nlohmann::json::exception& ex) {
      pt::fail(pt::ErrorCode::kFormat, "bad materials file: " + std::string(ex.what()));
    }
  }
  std::string svg;
  if (a.llm) {
    auto backend = make_backend(a);
    pt::GenParams g = gen_params(a);
    g.seed = a.seed;
    svg = pt::llm_realize(*backend, tree, materials, a.style, g).svg;
  } else {
    svg = pt::synthesize(pt::mockup(tree), materials);
  }
  pt::write_file_atomic(a.out, svg + "\n");
}

int report_error(const std::string& code, const std::string& message, int exit_code) {
  std::cerr << nlohmann::json{{"error", {{"code", code}, {"message", message}}}}.dump() << "\n";
  return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Poster layout trees: build, index, generate, evaluate and realize."};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file of option values; command-line flags take precedence");
  app.require_subcommand(1, 1);

  Args a;
  app.add_option("--dataset", a.dataset, "Dataset JSON ({\"records\": [...]})");
  app.add_option("--queries", a.queries, "Dataset JSON of query records (defaults to --dataset)");
  app.add_option("--query", a.query_ids, "Restrict to these query record ids");
  app.add_option("--maps", a.maps, "Directory of <id>.intent.pgm, <id>.saliency.pgm, <id>.embed.json side files");
  app.add_option("--index", a.index, "Index file written by `index`");
  app.add_option("--generated", a.generated, "Directory of generated <id>.svg layouts");
  app.add_option("--reference", a.reference, "Reference statistics JSON written by `stats`");
  app.add_option("--layout", a.layout, "Layout tree .svg");
  app.add_option("--materials", a.materials, "Materials JSON (id -> text or {text, href, ...})");
  app.add_option("--out", a.out, "Output file or directory");
  app.add_option("--jobs", a.jobs, "Worker threads (0 = all cores)")->capture_default_str();
  app.add_option("--seed", a.seed, "Root seed")->capture_default_str();
  app.add_option("--epsilon", a.epsilon, "Nesting tolerance in px (default 1% of the longer canvas side)");
  app.add_option("--max-depth", a.max_depth, "Maximum tree depth")->capture_default_str();
  app.add_flag("--flat-trees", a.flat_trees, "Disable nesting (ablation)");
  app.add_flag("--no-intent", a.no_intent, "Omit design-intent polygons (ablation)");
  app.add_option("--render-width", a.render_width, "Element-map width in px")->capture_default_str();
  app.add_option("--ove", a.ove, "Overlap metric: numeric or pixel")->capture_default_str();
  app.add_option("--threshold", a.threshold, "Map binarization threshold")->capture_default_str();
  app.add_option("--backend", a.backend, "mock or http")->capture_default_str();
  app.add_option("--fixture", a.fixture, "Mock backend fixture JSON");
  app.add_option("--endpoint", a.endpoint, "Completions endpoint URL (http backend)");
  app.add_option("--model", a.model, "Model name sent to the http backend");
  app.add_option("--token-env", a.token_env, "Environment variable holding the API token")->capture_default_str();
  app.add_option("--timeout", a.timeout, "HTTP timeout in seconds")->capture_default_str();
  app.add_option("--k", a.k, "In-context examples per prompt")->capture_default_str();
  app.add_option("--temperature", a.temperature, "Sampling temperature")->capture_default_str();
  app.add_option("--candidates", a.candidates, "Candidates per query")->capture_default_str();
  app.add_option("--max-retries", a.max_retries, "Re-requests per malformed candidate")->capture_default_str();
  app.add_option("--max-tokens", a.max_tokens, "Completion token budget")->capture_default_str();
  app.add_option("--strategy", a.strategy, "Example selection: f_aligned, d_aligned, e_aligned or random")
      ->capture_default_str();
  app.add_flag("--cosine", a.cosine, "Use cosine distance for f_aligned selection");
  app.add_option("--w-ali", a.w_ali, "Ranking weight of Ali")->capture_default_str();
  app.add_option("--w-ove", a.w_ove, "Ranking weight of Ove")->capture_default_str();
  app.add_option("--template", a.template_path, "Prompt template file");
  app.add_option("--style", a.style, "Style hint for backend realization")->capture_default_str();
  app.add_flag("--llm", a.llm, "Realize through the backend (falls back to the deterministic path)");

  const std::vector<std::pair<std::string, std::string>> commands{
      {"build-trees", "Dataset -> one layout tree .svg per record plus manifest.json"},
      {"stats", "Dataset + maps -> reference statistics JSON"},
      {"index", "Dataset + embeddings -> index file"},
      {"select", "Index + query records -> selected example ids"},
      {"generate", "Index + queries + backend -> chosen layouts and reports"},
      {"evaluate", "Generated layouts + maps + reference statistics -> metric reports"},
      {"render-map", "Layout tree -> element-map PGM"},
      {"realize", "Layout tree + materials -> poster SVG"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("InvalidArgument", e.what(), 2);
  }

  const std::string command = app.get_subcommands().front()->get_name();
  const std::uint64_t seed = pt::derive_seed(a.seed, command);
  try {
    if (command == "build-trees") cmd_build_trees(a);
    if (command == "stats") cmd_stats(a);
    if (command == "index") cmd_index(a);
    if (command == "select") cmd_select(a, seed);
    if (command == "generate") cmd_generate(a, seed);
    if (command == "evaluate") cmd_evaluate(a);
    if (command == "render-map") cmd_render_map(a);
    if (command == "realize") cmd_realize(a);
  } catch (const pt::Error& e) {
    return report_error(std::string(pt::to_string(e.code())), e.what(), 1);
  } catch (const fs::filesystem_error& e) {
    return report_error("Io", e.what(), 1);
  } catch (const std::exception& e) {
    return report_error("Internal", e.what(), 1);
  }
  return 0;
}
