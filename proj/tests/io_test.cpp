#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "postertree/io.hpp"
#include "postertree/pipeline.hpp"
#include "support/random_inputs.hpp"

namespace postertree {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("postertree_io_" + name + "_" + std::to_string(std::random_device{}()));
  fs::create_directories(dir);
  return dir;
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

TEST(Dataset, ParsesEveryShapeKind) {
  const Json doc = Json::parse(R"({"records": [{
    "id": "p1", "canvas": {"width": 513, "height": 750},
    "elements": [
      {"category": "text", "shape": {"kind": "rect", "x": 10, "y": 20, "w": 100, "h": 30}},
      {"category": "textr", "shape": {"kind": "rotated_rect", "x": 1, "y": 2, "w": 3, "h": 4, "angle_deg": 270}},
      {"category": "texts", "shape": {"kind": "ellipse", "cx": 50, "cy": 60, "rx": 7, "ry": 8}},
      {"category": "textc", "shape": {"kind": "path", "start": [0, 0], "segments": [[1, 2, 3, 4, 5, 6]], "closed": true}}
    ],
    "intent": {"polygons": [[[0, 0], [10, 0], [10, 10]]], "embedding": [0.5, -1]},
    "image": "p1.png", "saliency": "p1.sal.pgm"}]})");
  const auto records = dataset_from_json(doc);
  ASSERT_EQ(records.size(), 1u);
  const auto& r = records[0];
  EXPECT_EQ(r.canvas, (Canvas{513, 750}));
  ASSERT_EQ(r.elements.size(), 4u);
  EXPECT_EQ(r.elements[1].category, category::kTextRotated);
  EXPECT_EQ(std::get<RotatedRect>(r.elements[1].shape).angle_deg, -90);
  EXPECT_TRUE(std::get<PathCurve>(r.elements[3].shape).closed);
  EXPECT_EQ(r.intent.embedding, (std::vector<double>{0.5, -1}));
  EXPECT_EQ(r.image_path, "p1.png");
  EXPECT_EQ(dataset_from_json(dataset_to_json(records))[0].elements, r.elements);
}

TEST(Dataset, RandomRecordsRoundTrip) {
  testing::Rng rng(4);
  std::vector<DatasetRecord> records;
  for (int i = 0; i < 50; ++i) records.push_back(testing::random_record(rng, "r" + std::to_string(i)));
  const auto back = dataset_from_json(Json::parse(dataset_to_json(records).dump()));
  ASSERT_EQ(back.size(), records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    EXPECT_EQ(back[i].record_id, records[i].record_id);
    EXPECT_EQ(back[i].elements, records[i].elements);
    EXPECT_EQ(back[i].intent.polygons, records[i].intent.polygons);
  }
}

TEST(Dataset, RejectsMalformedDocuments) {
  EXPECT_EQ(error_of([] { dataset_from_json(Json::parse(R"([])")); }), ErrorCode::kFormat);
  EXPECT_EQ(error_of([] { dataset_from_json(Json::parse(R"({"records":[{"id":"a","canvas":{"width":1,"height":1}},
                                                                       {"id":"a","canvas":{"width":1,"height":1}}]})")); }),
            ErrorCode::kFormat);
  EXPECT_EQ(error_of([] { record_from_json(Json::parse(R"({"id":"a","canvas":{"width":0,"height":5}})")); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(error_of([] { record_from_json(Json::parse(R"({"id":"a","canvas":{"width":5,"height":5},
      "elements":[{"category":"banner","shape":{"kind":"rect","x":0,"y":0,"w":1,"h":1}}]})")); }),
            ErrorCode::kFormat);
  EXPECT_EQ(error_of([] { shape_from_json(Json::parse(R"({"kind":"triangle"})")); }), ErrorCode::kFormat);
  EXPECT_EQ(error_of([] { shape_from_json(Json::parse(R"({"kind":"rect","x":0,"y":0,"w":-1,"h":1})")); }),
            ErrorCode::kMalformedGeometry);
  EXPECT_EQ(error_of([] { record_from_json(Json::parse(R"({"id":"a","canvas":{"width":5,"height":5},
      "intent":{"polygons":[[[0,0],[1,1]]]}})")); }),
            ErrorCode::kFormat);
  EXPECT_EQ(error_of([] { parse_json("{", "x"); }), ErrorCode::kFormat);
  EXPECT_EQ(error_of([] { read_file("/nonexistent/postertree/file"); }), ErrorCode::kIo);
}

TEST(Embedding, ReadsIntentModelOutput) {
  EXPECT_EQ(embedding_from_json(Json::parse(R"({"dim": 3, "values": [0.25, -1.5, 2]})")), (std::vector<double>{0.25, -1.5, 2}));
  EXPECT_EQ(error_of([] { embedding_from_json(Json::parse(R"({"dim": 2, "values": [1]})")); }), ErrorCode::kFormat);
  EXPECT_EQ(error_of([] { embedding_from_json(Json::parse(R"({"values": [1]})")); }), ErrorCode::kFormat);
  const std::vector<double> v{1, 2.5, -3};
  EXPECT_EQ(embedding_from_json(embedding_to_json(v)), v);
}

TEST(SideFiles, MapStoreResolvesIntentAndEmbedding) {
  const fs::path dir = scratch_dir("maps");
  GrayMap intent(8, 4, 0.0);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) intent.at(x, y) = 1.0;
  }
  write_file_atomic(dir / "rec1.intent.pgm", encode_pgm(intent));
  write_file_atomic(dir / "rec1.embed.json", embedding_to_json({0.1, 0.2}).dump());
  const MapStore store = map_store_for(dir / "dataset.json", dir);
  DatasetRecord r;
  r.record_id = "rec1";
  r.canvas = {80, 40};
  DatasetRecord other;
  other.record_id = "other";
  const auto m = store.intent_map(r);
  ASSERT_TRUE(m);
  EXPECT_EQ(m->width(), 8);
  EXPECT_DOUBLE_EQ(m->at(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(m->at(7, 3), 0.0);
  EXPECT_EQ(store.embedding(r), (std::vector<double>{0.1, 0.2}));
  EXPECT_FALSE(store.intent_map(other));
  EXPECT_FALSE(store.embedding(other));

  std::vector<DatasetRecord> records{r};
  attach_side_data(records, store, IntentVectorizeParams{});
  EXPECT_EQ(records[0].intent.embedding, (std::vector<double>{0.1, 0.2}));
  ASSERT_EQ(records[0].intent.polygons.size(), 1u);
  const Rect b = bounding_box(records[0].intent.polygons[0]);
  EXPECT_NEAR(b.x, 0, 1e-9);
  EXPECT_NEAR(b.w, 40, 1e-9);
  EXPECT_NEAR(b.h, 40, 1e-9);
  fs::remove_all(dir);
}

TEST(Files, AtomicWriteReplaces) {
  const fs::path dir = scratch_dir("atomic");
  write_file_atomic(dir / "sub" / "a.txt", "one");
  write_file_atomic(dir / "sub" / "a.txt", "two");
  EXPECT_EQ(read_file(dir / "sub" / "a.txt"), "two");
  EXPECT_FALSE(fs::exists(dir / "sub" / "a.txt.tmp"));
  fs::remove_all(dir);
}

TEST(Reports, MetricAndReferenceJson) {
  MetricReport r;
  r.ove = 0.25;
  r.rea = 0.5;
  const Json j = to_json(r);
  EXPECT_TRUE(j["cov"].is_null());
  EXPECT_EQ(j["ove"], 0.25);
  const MetricReport back = metric_report_from_json(j);
  EXPECT_EQ(back.ove, r.ove);
  EXPECT_EQ(back.rea, r.rea);
  EXPECT_FALSE(back.con);
  const ReferenceStats s{0.1, 0.2, 0.3, 0.4};
  const ReferenceStats sb = reference_stats_from_json(to_json(s));
  EXPECT_EQ(sb.occ_l, 0.4);
  EXPECT_EQ(error_of([] { reference_stats_from_json(Json::parse(R"({"cov_l":2,"con_l":0,"uti_l":0,"occ_l":0})")); }),
            ErrorCode::kFormat);
  EXPECT_EQ(error_of([] { reference_stats_from_json(Json::parse(R"({"cov_l":0})")); }), ErrorCode::kFormat);
}

}  // namespace
}  // namespace postertree
