#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "postertree/raster.hpp"
#include "support/oracles.hpp"
#include "support/random_inputs.hpp"

namespace postertree {
namespace {

Layout single(Canvas c, ElementCategory cat, Shape s) { return Layout{c, {{cat, std::move(s)}}}; }

TEST(ElementMap, EmptyLayoutIsBlank) {
  const BinMap m = render_element_map(Layout{{100, 100}, {}}, 100);
  EXPECT_EQ(m.width(), 100);
  EXPECT_EQ(m.height(), 100);
  EXPECT_EQ(count_set(m), 0u);
}

TEST(ElementMap, FullRectCoversEverything) {
  EXPECT_EQ(count_set(render_element_map(single({100, 100}, category::kText, Rect{0, 0, 100, 100}), 100)), 10000u);
}

TEST(ElementMap, DefaultFrameIs513Wide) {
  const BinMap m = render_element_map(Layout{{1000, 1500}, {}});
  EXPECT_EQ(m.width(), 513);
  EXPECT_EQ(m.height(), 770);  // round(513 * 1.5) = round(769.5)
}

TEST(ElementMap, EllipseMatchesAnnulusCount) {
  const Ellipse e{50, 50, 30, 20};
  const BinMap m = render_element_map(single({100, 100}, category::kTextEllipse, e), 100);
  const auto outline = testing::dense_outline(Shape{e});
  std::size_t expected = 0;
  for (int y = 0; y < 100; ++y) {
    for (int x = 0; x < 100; ++x) {
      expected += testing::inside_margin(Shape{e}, outline, {x + 0.5, y + 0.5}, 15) >= 0 ? 1 : 0;
    }
  }
  EXPECT_NEAR(static_cast<double>(count_set(m)), static_cast<double>(expected), 0.02 * 10000);
}

TEST(ElementMap, RandomLayoutsAgreeWithOracle) {
  testing::Rng rng(17);
  for (int i = 0; i < 40; ++i) {
    const Layout l = testing::random_layout(rng, 6, 96);
    const BinMap m = render_element_map(l, l.canvas.width_px);
    const auto cmp = testing::compare_with_oracle(l, m, kStrokeWidthPx);
    EXPECT_EQ(cmp.outside_band, 0u);
    EXPECT_EQ(cmp.rect_mismatches, 0u);
    EXPECT_LE(static_cast<double>(cmp.mismatches), 0.02 * static_cast<double>(m.size()));
  }
}

TEST(ElementMap, RectsMatchOracleExactly) {
  testing::Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    Layout l{{rng.integer(8, 128), rng.integer(8, 128)}, {}};
    const int n = rng.integer(1, 8);
    for (int k = 0; k < n; ++k) {
      const double x = rng.uniform(-5, l.canvas.width_px), y = rng.uniform(-5, l.canvas.height_px);
      l.elements.push_back({category::kText, Rect{x, y, rng.uniform(0.3, 40), rng.uniform(0.3, 40)}});
    }
    const BinMap m = render_element_map(l, l.canvas.width_px);
    EXPECT_EQ(testing::compare_with_oracle(l, m, kStrokeWidthPx).mismatches, 0u);
  }
}

TEST(ElementMap, DoublingResolutionKeepsAreaFraction) {
  testing::Rng rng(23);
  for (int i = 0; i < 30; ++i) {
    const Layout l = testing::random_layout(rng, 6, 400, 128);
    RasterOptions a{256, 30}, b{512, 60};
    const BinMap ma = render_element_map(l, a), mb = render_element_map(l, b);
    const double fa = static_cast<double>(count_set(ma)) / ma.size();
    const double fb = static_cast<double>(count_set(mb)) / mb.size();
    EXPECT_LT(std::abs(fa - fb), 0.02);
  }
}

TEST(Layers, ExcludeUnderlaysAndUnionToNonUnderlayMap) {
  Layout l{{100, 100},
           {{category::kText, Rect{0, 0, 10, 10}},
            {category::kUnderlay, Rect{0, 0, 100, 100}},
            {category::kLogo, Rect{20, 20, 10, 10}},
            {category::kEmbellishment, Ellipse{60, 60, 10, 10}}}};
  const auto layers = render_layers(l, {100, 30});
  ASSERT_EQ(layers.size(), 3u);
  BinMap uni(100, 100);
  for (const auto& layer : layers) {
    for (std::size_t i = 0; i < uni.size(); ++i) uni[i] |= layer[i];
  }
  const BinMap direct =
      render_element_map_if(l, {100, 30}, [](const LayoutElement& e) { return !e.category.is_underlay(); });
  EXPECT_EQ(uni, direct);
  for (std::size_t i = 0; i < uni.size(); ++i) EXPECT_FALSE(layers[0][i] && layers[1][i]);
}

TEST(Polygons, FullAndEmpty) {
  const Canvas c{50, 80};
  EXPECT_EQ(count_set(rasterize_polygons({{{0, 0}, {50, 0}, {50, 80}, {0, 80}}}, c, 50)), 50u * 80u);
  EXPECT_EQ(count_set(rasterize_polygons({}, c, 50)), 0u);
}

TEST(Polygons, EvenOddSelfIntersection) {
  // A bow-tie: two triangles meeting at the center.
  const BinMap m = rasterize_polygons({{{0, 0}, {100, 100}, {100, 0}, {0, 100}}}, {100, 100}, 100);
  std::size_t expected = 0;
  for (int y = 0; y < 100; ++y) {
    for (int x = 0; x < 100; ++x) {
      const double cx = x + 0.5, cy = y + 0.5;
      expected += (std::abs(cx - 50) > std::abs(cy - 50)) ? 1 : 0;
    }
  }
  EXPECT_NEAR(static_cast<double>(count_set(m)), static_cast<double>(expected), 100);
}

TEST(Binarize, Thresholds) {
  EXPECT_EQ(count_set(binarize(GrayMap(10, 10, 0.0))), 0u);
  EXPECT_EQ(count_set(binarize(GrayMap(10, 10, 1.0))), 100u);
  GrayMap checker(10, 10);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 10; ++x) checker.at(x, y) = ((x + y) % 2) ? 0.6 : 0.4;
  }
  EXPECT_EQ(count_set(binarize(checker, 0.5)), 50u);
  EXPECT_THROW(binarize(checker, 1.0), Error);
}

TEST(Pgm, RoundTripBinaryAndAscii) {
  GrayMap g(3, 2, std::vector<double>{0, 1, 0.5, 0.25, 1, 0});
  const GrayMap back = parse_pgm(encode_pgm(g));
  ASSERT_EQ(back.width(), 3);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(back[i], g[i], 0.5 / 255);
  const GrayMap ascii = parse_pgm("P2\n# comment\n2 1\n10\n0 10\n");
  EXPECT_DOUBLE_EQ(ascii[0], 0.0);
  EXPECT_DOUBLE_EQ(ascii[1], 1.0);
  EXPECT_THROW(parse_pgm("P6\n1 1\n255\nx"), Error);
  EXPECT_THROW(parse_pgm("P5\n2 2\n255\nab"), Error);
}

TEST(MapIou, EmptyUnionIsOne) {
  EXPECT_DOUBLE_EQ(map_iou(BinMap(4, 4), BinMap(4, 4)), 1.0);
  EXPECT_THROW(map_iou(BinMap(4, 4), BinMap(4, 5)), Error);
}

}  // namespace
}  // namespace postertree
