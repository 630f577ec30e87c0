#include <gtest/gtest.h>

#include <algorithm>

#include "midline/dataset.hpp"
#include "midline/error.hpp"

using namespace midline;

namespace {

int class_of(const ParsedAnnotations& p, const std::string& name) {
  const auto it = std::find(p.class_names.begin(), p.class_names.end(), name);
  return static_cast<int>(it - p.class_names.begin());
}

}  // namespace

TEST(DotaClasses, FifteenCategories) {
  EXPECT_EQ(dota_classes().size(), 15u);
  EXPECT_EQ(dota_classes().front(), "plane");
}

TEST(ParseDota, SingleLine) {
  const auto p = parse_dota("100 80 130 80 130 120 100 120 plane 0\n");
  ASSERT_EQ(p.objects.size(), 1u);
  EXPECT_EQ(p.objects[0].class_id(), class_of(p, "plane"));
  EXPECT_FALSE(p.objects[0].difficult());
  EXPECT_TRUE(p.warnings.empty());
}

TEST(ParseDota, HeadersSkippedMalformedWarned) {
  const auto p = parse_dota(
      "imagesource:GoogleEarth\ngsd:0.15\n"
      "100 80 130 80 130 120 100 plane 0\n"
      "0 0 10 0 10 10 0 10 ship 1\n");
  ASSERT_EQ(p.objects.size(), 1u);
  EXPECT_TRUE(p.objects[0].difficult());
  EXPECT_EQ(p.warnings.size(), 1u);
}

TEST(ParseDota, ToleratesBomAndCrlf) {
  const auto p = parse_dota("\xEF\xBB\xBF" "0 0 10 0 10 10 0 10 ship 0\r\n");
  EXPECT_EQ(p.objects.size(), 1u);
}

TEST(ParseDota, AllLinesMalformed) {
  try {
    parse_dota("a b c\n1 2 3\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AllLinesMalformed);
  }
}

TEST(ParseDota, UnknownCategoryWarned) {
  const auto p = parse_dota("0 0 10 0 10 10 0 10 spaceship 0\n0 0 10 0 10 10 0 10 ship 0\n");
  EXPECT_EQ(p.objects.size(), 1u);
  EXPECT_EQ(p.warnings.size(), 1u);
}

TEST(ParseIcdar, TextAndDifficult) {
  const auto p = parse_icdar("10,10,50,12,49,30,9,28,hello\n1,1,20,1,20,9,1,9,###\n");
  ASSERT_EQ(p.objects.size(), 2u);
  EXPECT_FALSE(p.objects[0].difficult());
  EXPECT_TRUE(p.objects[1].difficult());
  EXPECT_EQ(p.class_names, std::vector<std::string>{"text"});
}

TEST(ParseIcdar, TranscriptionMayContainCommas) {
  const auto p = parse_icdar("10,10,50,12,49,30,9,28,a,b\n");
  EXPECT_EQ(p.objects.size(), 1u);
}

TEST(ParseIcdar, NonConvexSkipped) {
  const auto p = parse_icdar("0,0,40,0,10,10,0,40,dart\n10,10,50,12,49,30,9,28,ok\n");
  EXPECT_EQ(p.objects.size(), 1u);
  EXPECT_EQ(p.warnings.size(), 1u);
}

TEST(ParseIcdar, EmptyFileOnlyErrorsWhenStrict) {
  EXPECT_TRUE(parse_icdar("").objects.empty());
  EXPECT_THROW(parse_icdar("", {true}), Error);
  EXPECT_THROW(parse_dota("", {true}), Error);
}

TEST(MakeAnnotatedImage, ClampsCorners) {
  auto parsed = parse_dota("-5 -5 20 -5 20 20 -5 20 ship 0\n");
  const AnnotatedImage img = make_annotated_image("x", 100, 100, parsed);
  ASSERT_EQ(img.objects.size(), 1u);
  EXPECT_EQ(img.objects[0].corners()[0], (Point2{0, 0}));
}

TEST(Tiling, OriginsAndStep) {
  const TileSpec spec;
  EXPECT_EQ(spec.step(), 600);
  EXPECT_EQ(tile_origins(1400, spec), (std::vector<int>{0, 600}));
  EXPECT_EQ(tile_origins(500, spec), (std::vector<int>{0}));
  EXPECT_EQ(tile_origins(2000, spec), (std::vector<int>{0, 600, 1200}));
  EXPECT_EQ(tile_origins(1500, spec), (std::vector<int>{0, 600, 700}));
}

TEST(Tiling, ValidatesSpec) {
  EXPECT_THROW((TileSpec{800, 1.0}.validate()), Error);
  EXPECT_THROW((TileSpec{0, 0.25}.validate()), Error);
  EXPECT_NO_THROW((TileSpec{800, 0.0}.validate()));
}

TEST(Tiling, CentroidMembership) {
  auto parsed = parse_dota("890 290 910 290 910 310 890 310 ship 0\n");
  const AnnotatedImage img = make_annotated_image("P1", 1400, 1400, parsed);
  const auto tiles = tile_image(img, {});
  ASSERT_EQ(tiles.size(), 4u);
  int holders = 0;
  for (const auto& t : tiles) {
    if (t.image.objects.empty()) continue;
    ++holders;
    EXPECT_EQ(t.origin_x, 600);
    EXPECT_EQ(t.origin_y, 0);
    EXPECT_EQ(t.image.image_id, "P1__600_0");
    const Point2 c = t.image.objects[0].centroid();
    EXPECT_NEAR(c.x, 300, 1e-12);
    EXPECT_NEAR(c.y, 300, 1e-12);
  }
  EXPECT_EQ(holders, 1);
}

TEST(Tiling, SmallImageSingleTile) {
  auto parsed = parse_dota("10 10 20 10 20 20 10 20 ship 0\n30 30 40 30 40 40 30 40 plane 0\n");
  const auto tiles = tile_image(make_annotated_image("s", 300, 200, parsed), {});
  ASSERT_EQ(tiles.size(), 1u);
  EXPECT_EQ(tiles[0].origin_x, 0);
  EXPECT_EQ(tiles[0].image.objects.size(), 2u);
}
