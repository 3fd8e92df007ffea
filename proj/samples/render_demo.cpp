// Builds a layout tree for a small hand-made poster, prints its SVG form,
// writes its element map as PGM and a mockup poster next to it.
//
//   render_demo [out_dir]

#include <iostream>

#include "postertree/pipeline.hpp"
#include "postertree/realization.hpp"

namespace pt = postertree;

int main(int argc, char** argv) {
  const std::filesystem::path out = argc > 1 ? argv[1] : ".";

  pt::DatasetRecord record;
  record.record_id = "demo";
  record.canvas = {513, 750};
  record.elements = {
      {pt::category::kUnderlay, pt::Rect{40, 60, 420, 140}},
      {pt::category::kText, pt::Rect{44, 64, 412, 132}},
      {pt::category::kText, pt::Rect{60, 260, 300, 48}},
      {pt::category::kTextEllipse, pt::Ellipse{256, 560, 140, 70}},
      {pt::category::kLogo, pt::Rect{400, 660, 80, 60}},
  };
  record.intent.polygons = {{{20, 240}, {490, 240}, {490, 480}, {20, 480}}};

  const pt::LayoutTree tree = pt::build_tree(record);
  const std::string svg = pt::serialize_tree(tree);
  std::cout << svg << "\n";
  std::cout << "depth " << pt::tree_depth(tree) << ", leaves " << pt::leaf_ids(tree).size() << "\n";

  const pt::Layout layout = pt::flatten_tree(pt::parse_tree(svg));
  const pt::BinMap map = pt::render_element_map(layout);
  pt::write_file_atomic(out / "demo.svg", svg);
  pt::write_file_atomic(out / "demo.pgm", pt::encode_pgm(map));

  pt::Materials materials;
  materials["text_1"].text = "Summer Sale";
  materials["text_2"].text = "Everything must go";
  materials["texts_3"].text = "up to 50% off";
  pt::write_file_atomic(out / "demo.poster.svg", pt::synthesize(pt::mockup(tree), materials) + "\n");

  const pt::MetricReport report = pt::evaluate_sample(layout, pt::SampleMaps{std::nullopt, std::nullopt, std::nullopt, record.intent.polygons});
  std::cout << pt::to_json(report).dump(2) << "\n";
  return 0;
}
