#include <gtest/gtest.h>

#include <random>

#include "midline/error.hpp"
#include "midline/grad_check.hpp"

using namespace midline;

TEST(GradCheck, EndpointAtRandomSmoothPoint) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10; ++i) {
    const auto c = sample_case(LossKind::Endpoint, rng);
    const auto report = grad_check(c.fn, c.point, 1e-4, 1e-5);
    EXPECT_LT(report.max_rel_error, 1e-5);
    EXPECT_TRUE(report.passed);
  }
}

TEST(GradCheck, FocalAtUniformHalf) {
  Grid<double> gt(2, 3, 4, 0.0);
  gt(0, 1, 1) = 1.0;
  gt(1, 2, 3) = 1.0;
  const auto fn = make_focal_problem(gt, 2, 2.0);
  const std::vector<double> point(gt.size(), 0.5);
  EXPECT_TRUE(grad_check(fn, point, 1e-4, 1e-4).passed);
}

TEST(GradCheck, CollinearAtKinkIsRejected) {
  Grid<std::uint8_t> mask(1, 1, 1, 1);
  const auto fn = make_collinear_problem(mask, 1);
  // x1*y2 - x2*y1 = 1 exactly for line 1.
  const std::vector<double> point{1, 0, 0, 1, 0, 0, 0, 0};
  try {
    grad_check(fn, point, 1e-4, 1e-4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::KinkProximity);
  }
}

TEST(GradCheck, AllLossesPass) {
  for (const auto& s : run_grad_checks(42, 20, 1e-4, 1e-4)) {
    EXPECT_TRUE(s.passed) << loss_name(s.kind) << " " << s.max_rel_error;
    EXPECT_EQ(s.samples, 20);
  }
}

TEST(GradCheck, BiasedGradientFails) {
  bool any_failed = false;
  for (const auto& s : run_grad_checks(42, 3, 1e-4, 1e-4, 1e-3)) any_failed |= !s.passed;
  EXPECT_TRUE(any_failed);
}

TEST(GradCheck, FlattenRoundTrip) {
  const TargetMaps like = TargetMaps::zeros(12, 8, 4, 2);
  std::vector<double> params(flatten_prediction(like).size());
  for (std::size_t i = 0; i < params.size(); ++i) params[i] = 0.001 * static_cast<double>(i);
  EXPECT_EQ(flatten_prediction(unflatten_prediction(params, like)), params);
}

TEST(GradCheck, ZeroSamplesRejected) { EXPECT_THROW(run_grad_checks(1, 0, 1e-4, 1e-4), Error); }
