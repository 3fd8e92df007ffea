#include <cmath>

#include <gtest/gtest.h>

#include "postertree/core.hpp"
#include "postertree/raster.hpp"
#include "support/random_inputs.hpp"

namespace postertree {
namespace {

TEST(BoundingBox, RectIsIdentity) {
  const Rect r{10, 20, 30, 40};
  EXPECT_EQ(bounding_box(Shape{r}), r);
  EXPECT_EQ(bounding_box(Shape{bounding_box(Shape{r})}), r);
}

TEST(BoundingBox, EllipseExtents) {
  EXPECT_EQ(bounding_box(Shape{Ellipse{50, 50, 10, 20}}), (Rect{40, 30, 20, 40}));
}

TEST(BoundingBox, RotatedSquareAt45Degrees) {
  const Rect b = bounding_box(Shape{RotatedRect{0, 0, 10, 10, 45}});
  const double side = 10 * std::sqrt(2.0);
  EXPECT_NEAR(b.w, side, 1e-9);
  EXPECT_NEAR(b.h, side, 1e-9);
  EXPECT_NEAR(b.x + b.w / 2, 5, 1e-9);
  EXPECT_NEAR(b.y + b.h / 2, 5, 1e-9);
}

TEST(BoundingBox, PathCoversEndpointsAndStaysInHull) {
  PathCurve p;
  p.start = {0, 0};
  p.segments.push_back({{0, 10}, {10, 10}, {10, 0}});
  const Rect b = bounding_box(Shape{p});
  EXPECT_DOUBLE_EQ(b.x, 0);
  EXPECT_DOUBLE_EQ(b.w, 10);
  EXPECT_DOUBLE_EQ(b.y, 0);
  // The curve peaks at 7.5 (t = 1/2); flattening stays within 0.25 px.
  EXPECT_NEAR(b.h, 7.5, 0.25);
}

TEST(BoundingBox, RasterStaysInsideInflatedBox) {
  testing::Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const Canvas canvas{64, 64};
    const Shape s = testing::random_shape(rng, 64, 64);
    const Layout l{canvas, {{category::kLogo, s}}};
    RasterOptions opt{64, 1.0};
    const BinMap m = render_element_map(l, opt);
    const Rect b = bounding_box(s);
    for (int y = 0; y < m.height(); ++y) {
      for (int x = 0; x < m.width(); ++x) {
        if (!m.at(x, y)) continue;
        ASSERT_GE(x + 0.5, b.x - 1 - opt.stroke_width / 2);
        ASSERT_LE(x + 0.5, b.right() + 1 + opt.stroke_width / 2);
        ASSERT_GE(y + 0.5, b.y - 1 - opt.stroke_width / 2);
        ASSERT_LE(y + 0.5, b.bottom() + 1 + opt.stroke_width / 2);
      }
    }
  }
}

TEST(Validate, RejectsBadShapes) {
  EXPECT_THROW(validate(Shape{Rect{0, 0, 0, 5}}), Error);
  EXPECT_THROW(validate(Shape{Ellipse{0, 0, 5, -1}}), Error);
  EXPECT_THROW(validate(Shape{RotatedRect{0, 0, 5, 5, -180}}), Error);
  EXPECT_THROW(validate(Shape{PathCurve{}}), Error);
  EXPECT_THROW(validate(Canvas{0, 10}), Error);
  EXPECT_NO_THROW(validate(Shape{RotatedRect{0, 0, 5, 5, 180}}));
  try {
    validate(Shape{Rect{0, 0, -1, 1}});
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMalformedGeometry);
  }
}

TEST(Angles, NormalizeIntoHalfOpenRange) {
  EXPECT_DOUBLE_EQ(normalize_angle(-180), 180);
  EXPECT_DOUBLE_EQ(normalize_angle(540), 180);
  EXPECT_DOUBLE_EQ(normalize_angle(-190), 170);
  EXPECT_DOUBLE_EQ(normalize_angle(45), 45);
}

TEST(Categories, TokensRoundTrip) {
  for (const auto& c : category::kAll) {
    EXPECT_TRUE(is_valid(c));
    EXPECT_EQ(category_from_token(category_token(c)), c);
  }
  EXPECT_FALSE(category_from_token("banner").has_value());
  EXPECT_FALSE(is_valid(ElementCategory{BaseCategory::kLogo, TextVariant::kVertical}));
}

TEST(Iou, HandValues) {
  EXPECT_DOUBLE_EQ(iou({0, 0, 10, 10}, {5, 0, 10, 10}), 50.0 / 150.0);
  EXPECT_DOUBLE_EQ(iou({0, 0, 10, 10}, {20, 0, 10, 10}), 0.0);
  EXPECT_DOUBLE_EQ(iou({0, 0, 10, 10}, {0, 0, 10, 10}), 1.0);
}

TEST(Tree, DepthAndLeafWalk) {
  LayoutTree t;
  t.canvas = {100, 100};
  t.element_nodes.push_back(TreeNode::group(
      {10, 10}, {TreeNode::leaf(category::kUnderlay, Rect{0, 0, 50, 50}),
                 TreeNode::group({1, 1}, {TreeNode::leaf(category::kText, Rect{1, 1, 5, 5})})}));
  t.element_nodes.push_back(TreeNode::leaf(category::kLogo, Rect{80, 80, 5, 5}));
  EXPECT_EQ(tree_depth(t), 3);
  EXPECT_EQ(leaf_count(t), 3u);
  std::vector<Point> origins;
  for_each_leaf(t.element_nodes, {}, [&](const TreeNode&, Point o) { origins.push_back(o); });
  ASSERT_EQ(origins.size(), 3u);
  EXPECT_EQ(origins[1], (Point{11, 11}));
  EXPECT_EQ(origins[2], (Point{0, 0}));
}

}  // namespace
}  // namespace postertree
