#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "midline/error.hpp"
#include "midline/target_encoder.hpp"

using namespace midline;

namespace {

OrientedBox axis_box(int cls = 0) {
  return OrientedBox(Quad{{{70, 80}, {130, 80}, {130, 120}, {70, 120}}}, cls);
}

MidlinePair pair_with_lengths(double a, double b) {
  return {{{a / 2, 0}, {-a / 2, 0}}, {{0, -b / 2}, {0, b / 2}}, BranchId::Horizontal};
}

int positives(const Grid<double>& hm, int channel) {
  int n = 0;
  for (const double v : hm.channel(channel)) n += v == 1.0;
  return n;
}

}  // namespace

TEST(DriftRadius, HandValues) {
  EXPECT_DOUBLE_EQ(drift_radius(pair_with_lengths(200, 100), 4, 16), 4.0);
  EXPECT_DOUBLE_EQ(drift_radius(pair_with_lengths(128, 128), 4, 16), 4.0);
  EXPECT_DOUBLE_EQ(drift_radius(pair_with_lengths(200, 8), 4, 16), 1.0);
}

TEST(DriftRadius, SmallObjectStillCoversCenterCell) {
  MidlinePair p = pair_with_lengths(200, 4);
  const double r = drift_radius(p, 4, 16);
  EXPECT_DOUBLE_EQ(r, 0.5);
  const auto cells = drift_cells({0, 0}, r, 10, 10);
  EXPECT_NE(std::find(cells.begin(), cells.end(), Cell{0, 0}), cells.end());

  // Off-grid center: the radius grows just past the nearest cell.
  for (auto* s : {&p.l1, &p.l2}) {
    s->ep1 = s->ep1 + Point2{41.5, 41.5};
    s->ep2 = s->ep2 + Point2{41.5, 41.5};
  }
  const Point2 c = intersection_point(p) / 4.0;
  const double r2 = drift_radius(p, 4, 16);
  const Cell nearest = round_to_cell(c);
  EXPECT_LT(std::hypot(nearest.col - c.x, nearest.row - c.y), r2);
}

TEST(DriftCells, DiscOfRadiusFourHas45Cells) {
  const auto cells = drift_cells({25, 25}, 4.0, 60, 60);
  EXPECT_EQ(cells.size(), 45u);
  for (const Cell c : cells) EXPECT_LT(std::hypot(c.col - 25.0, c.row - 25.0), 4.0);
}

TEST(DriftCells, ClippedAtBorder) {
  const auto cells = drift_cells({0, 0}, 4.0, 60, 60);
  EXPECT_EQ(cells.size(), 15u);  // quarter disc including both axes
}

TEST(ResolveOverlap, SmallestAreaThenLowestIndex) {
  const std::vector<OrientedBox> boxes{
      make_rotated_rect({50, 50}, 40, 30, 0),   // 1200
      make_rotated_rect({50, 50}, 40, 20, 0),   // 800
      make_rotated_rect({50, 50}, 20, 40, 0)};  // 800
  const int ab[] = {0, 1};
  EXPECT_EQ(resolve_overlap({0, 0}, ab, boxes), 1);
  const int one[] = {0};
  EXPECT_EQ(resolve_overlap({0, 0}, one, boxes), 0);
  const int tie[] = {2, 1};
  EXPECT_EQ(resolve_overlap({0, 0}, tie, boxes), 1);
}

TEST(EncodeImage, SingleAxisAlignedBox) {
  const std::vector<OrientedBox> boxes{axis_box(1)};
  const TargetMaps maps = encode_image(boxes, 200, 200, 3);
  EXPECT_EQ(maps.width, 50);
  EXPECT_EQ(maps.height, 50);
  const int h = branch_index(BranchId::Horizontal);
  const int o = branch_index(BranchId::Oriented);
  EXPECT_EQ(positives(maps.heatmap[h], 1), 45);
  EXPECT_EQ(positives(maps.heatmap[h], 0), 0);
  EXPECT_EQ(positives(maps.heatmap[o], 1), 0);
  EXPECT_EQ(maps.heatmap[h](1, 25, 25), 1.0);

  const double expected[8] = {30, 0, -30, 0, 0, -20, 0, 20};
  for (int ch = 0; ch < 8; ++ch) EXPECT_DOUBLE_EQ(maps.regression[h](ch, 25, 25), expected[ch]) << ch;
  EXPECT_EQ(maps.reg_mask[h](0, 25, 25), 1);

  // Every masked cell decodes the same endpoints.
  for (int r = 0; r < maps.height; ++r) {
    for (int c = 0; c < maps.width; ++c) {
      if (!maps.reg_mask[h](0, r, c)) continue;
      const MidlinePair p = read_midlines(maps.regression[h], {r, c}, 4, BranchId::Horizontal);
      EXPECT_DOUBLE_EQ(p.l1.ep1.x, 130);
      EXPECT_DOUBLE_EQ(p.l2.ep2.y, 120);
    }
  }
}

TEST(EncodeImage, EmptyAnnotationsGiveZeroMaps) {
  const TargetMaps maps = encode_image({}, 64, 48, 2);
  for (int b = 0; b < kNumBranches; ++b) {
    for (const double v : maps.heatmap[b].data()) EXPECT_EQ(v, 0.0);
    for (const auto m : maps.reg_mask[b].data()) EXPECT_EQ(m, 0);
  }
  EXPECT_EQ(maps.n_objects, 0);
}

TEST(EncodeImage, TwoObjectsDifferentClasses) {
  const std::vector<OrientedBox> boxes{make_rotated_rect({100, 100}, 60, 40, 0.5, 0),
                                       make_rotated_rect({300, 300}, 80, 50, 0.3, 1)};
  const TargetMaps maps = encode_image(boxes, 400, 400, 2);
  const int o = branch_index(BranchId::Oriented);
  ASSERT_EQ(maps.regions.size(), 2u);
  EXPECT_EQ(positives(maps.heatmap[o], 0), static_cast<int>(maps.regions[0].cells.size()));
  EXPECT_EQ(positives(maps.heatmap[o], 1), static_cast<int>(maps.regions[1].cells.size()));
  EXPECT_EQ(maps.n_objects, 2);
}

TEST(EncodeImage, OverlapGoesToSmallerObject) {
  const std::vector<OrientedBox> boxes{make_rotated_rect({100, 100}, 120, 100, 0.3, 0),
                                       make_rotated_rect({104, 100}, 40, 30, 0.3, 0)};
  const TargetMaps maps = encode_image(boxes, 200, 200, 1);
  const int o = branch_index(BranchId::Oriented);
  const MidlinePair small = box_to_midlines(boxes[1]);
  const MidlinePair read = read_midlines(maps.regression[o], {25, 25}, 4, BranchId::Oriented);
  EXPECT_NEAR(read.l1.ep1.x, small.l1.ep1.x, 1e-9);
  EXPECT_NEAR(read.l2.ep1.y, small.l2.ep1.y, 1e-9);
}

TEST(EncodeImage, Errors) {
  const std::vector<OrientedBox> bad_class{axis_box(5)};
  EXPECT_THROW(encode_image(bad_class, 200, 200, 2), Error);
  const std::vector<OrientedBox> outside{make_rotated_rect({300, 300}, 10, 10, 0)};
  try {
    encode_image(outside, 200, 200, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutOfBounds);
  }
}
