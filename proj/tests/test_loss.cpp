#include <gtest/gtest.h>

#include <cmath>

#include "midline/error.hpp"
#include "midline/loss.hpp"
#include "midline/target_encoder.hpp"

using namespace midline;

namespace {

Grid<double> one_cell_reg(std::array<double, 8> values) {
  Grid<double> g(kRegressionChannels, 1, 1);
  for (int ch = 0; ch < 8; ++ch) g(ch, 0, 0) = values[ch];
  return g;
}

Grid<std::uint8_t> full_mask(int rows = 1, int cols = 1) { return Grid<std::uint8_t>(1, rows, cols, 1); }

}  // namespace

TEST(SmoothL1, HandValues) {
  EXPECT_EQ(smooth_l1(3.0, 3.0).value, 0.0);
  EXPECT_EQ(smooth_l1(3.0, 3.0).grad, 0.0);
  EXPECT_DOUBLE_EQ(smooth_l1(3.5, 3.0).value, 0.125);
  EXPECT_DOUBLE_EQ(smooth_l1(3.5, 3.0).grad, 0.5);
  EXPECT_DOUBLE_EQ(smooth_l1(5.0, 3.0).value, 1.5);
  EXPECT_DOUBLE_EQ(smooth_l1(5.0, 3.0).grad, 1.0);
  EXPECT_DOUBLE_EQ(smooth_l1(1.0, 3.0).grad, -1.0);
}

TEST(FocalLoss, SingleCellHalfProbability) {
  Grid<double> pred(1, 1, 1, 0.5);
  Grid<double> pos(1, 1, 1, 1.0);
  Grid<double> neg(1, 1, 1, 0.0);
  EXPECT_NEAR(focal_ip_loss(pred, pos, 1, 2.0).value, 0.173286, 1e-6);
  EXPECT_NEAR(focal_ip_loss(pred, neg, 1, 2.0).value, 0.173286, 1e-6);
  EXPECT_NEAR(focal_ip_loss(pred, pos, 1, 2.0).value, -0.25 * std::log(0.5), 1e-15);
}

TEST(FocalLoss, PerfectPredictionIsNearZero) {
  Grid<double> gt(2, 3, 3, 0.0);
  gt(0, 1, 1) = 1.0;
  gt(1, 0, 2) = 1.0;
  Grid<double> pred = gt;
  const GridLoss l = focal_ip_loss(pred, gt, 2);
  EXPECT_LT(l.value, 1e-5);
  for (const double g : l.grad.data()) EXPECT_EQ(g, 0.0);  // every cell clamped
}

TEST(FocalLoss, NormalizesByObjectCountClampedToOne) {
  Grid<double> pred(1, 1, 1, 0.5);
  Grid<double> gt(1, 1, 1, 1.0);
  EXPECT_DOUBLE_EQ(focal_ip_loss(pred, gt, 0).value, focal_ip_loss(pred, gt, 1).value);
  EXPECT_DOUBLE_EQ(focal_ip_loss(pred, gt, 4).value, focal_ip_loss(pred, gt, 1).value / 4);
}

TEST(FocalLoss, Errors) {
  Grid<double> pred(1, 2, 2, 0.5);
  Grid<double> gt(1, 2, 2, 0.5);
  try {
    focal_ip_loss(pred, gt, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonBinaryGroundTruth);
  }
  Grid<double> other(1, 3, 2, 0.0);
  try {
    focal_ip_loss(pred, other, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
}

TEST(EndpointLoss, HandValues) {
  const auto target = one_cell_reg({30, 0, -30, 0, 0, -20, 0, 20});
  EXPECT_EQ(endpoint_loss(target, target, full_mask(), 1).value, 0.0);
  auto pred = target;
  pred(3, 0, 0) += 0.5;
  EXPECT_DOUBLE_EQ(endpoint_loss(pred, target, full_mask(), 1).value, 0.125);
  Grid<std::uint8_t> empty(1, 1, 1, 0);
  pred(0, 0, 0) += 100;
  EXPECT_EQ(endpoint_loss(pred, target, empty, 1).value, 0.0);
}

TEST(CollinearLoss, HandValues) {
  EXPECT_EQ(collinear_loss(one_cell_reg({30, 0, -30, 0, 0, 0, 0, 0}), full_mask(), 1).value, 0.0);
  EXPECT_DOUBLE_EQ(collinear_loss(one_cell_reg({30, 1, -30, 0, 0, 0, 0, 0}), full_mask(), 1).value, 29.5);
  EXPECT_EQ(collinear_loss(one_cell_reg({7.3, -2.1, -7.3, 2.1, 1.5, 4.25, -1.5, -4.25}), full_mask(), 1).value,
            0.0);
}

TEST(VerticalLoss, HandValues) {
  EXPECT_EQ(vertical_loss(one_cell_reg({30, 0, 0, 0, 0, -20, 0, 0}), full_mask(), 1).value, 0.0);
  EXPECT_DOUBLE_EQ(vertical_loss(one_cell_reg({30, 0, 0, 0, 2, -20, 0, 0}), full_mask(), 1).value, 59.5);
  EXPECT_EQ(vertical_loss(one_cell_reg({0, 0, 0, 0, 2, -20, 0, 0}), full_mask(), 1).value, 0.0);
}

TEST(LineLoss, PerfectRectanglePredictionIsZero) {
  const auto target = one_cell_reg({30, 0, -30, 0, 0, -20, 0, 20});
  const LineLossValue v = line_loss(target, target, full_mask(), 1, {});
  EXPECT_EQ(v.l1, 0.0);
  EXPECT_EQ(v.l2, 0.0);
  EXPECT_EQ(v.l3, 0.0);
  EXPECT_EQ(v.total, 0.0);
}

TEST(LineLoss, WeightedSumAndTextMode) {
  const auto target = one_cell_reg({30, 0, -30, 0, 0, -20, 0, 20});
  const auto pred = one_cell_reg({30.2, 0.1, -30, 0, 2, -20, 0, 20});
  LossWeights w;
  const LineLossValue v = line_loss(pred, target, full_mask(), 1, w);
  EXPECT_NEAR(v.total, v.l1 + w.alpha * v.l2 + w.beta * v.l3, 1e-12);
  EXPECT_GT(v.l3, 0.0);
  w.text_mode = true;
  const LineLossValue t = line_loss(pred, target, full_mask(), 1, w);
  EXPECT_NEAR(t.total, t.l1 + w.alpha * t.l2, 1e-12);
  EXPECT_EQ(t.l3, v.l3);
}

TEST(TotalLoss, CombinesBranchesWithGamma) {
  const std::vector<OrientedBox> boxes{make_rotated_rect({40, 40}, 30, 20, 0.4)};
  const TargetMaps target = encode_image(boxes, 80, 80, 1);
  TargetMaps pred = target;
  for (int b = 0; b < kNumBranches; ++b) {
    for (double& v : pred.heatmap[b].data()) v = 0.5 * v + 0.2;
    for (double& v : pred.regression[b].data()) v += 0.3;
  }
  const LossWeights w;
  const LossValue l = total_loss(pred, target, w, true);
  EXPECT_NEAR(l.total, l.ip + w.gamma * (l.l1 + w.alpha * l.l2 + w.beta * l.l3), 1e-9);
  ASSERT_TRUE(l.gradients.has_value());
  EXPECT_GT(l.ip, 0.0);
}

TEST(TotalLoss, EmptyImageWithPerfectNegatives) {
  const TargetMaps target = encode_image({}, 40, 40, 2);
  const LossValue l = total_loss(target, target, {});
  EXPECT_LT(l.total, 1e-5);
}

TEST(LossWeights, RejectNegative) {
  LossWeights w;
  w.gamma = -1;
  EXPECT_THROW(w.validate(), Error);
}
