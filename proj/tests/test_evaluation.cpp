#include <gtest/gtest.h>

#include "midline/error.hpp"
#include "midline/evaluation.hpp"

using namespace midline;

namespace {

OrientedBox box_at(double x, int cls = 0, double score = 1.0, bool difficult = false) {
  return OrientedBox(Quad{{{x, 0}, {x + 10, 0}, {x + 10, 10}, {x, 10}}}, cls, score, difficult);
}

constexpr auto TP = MatchFlag::TruePositive;
constexpr auto FP = MatchFlag::FalsePositive;

}  // namespace

TEST(MatchDetections, ExactMatch) {
  const std::vector<OrientedBox> g{box_at(0)};
  const auto m = match_detections(g, g, 0.5);
  EXPECT_EQ(m.true_positives, 1);
  EXPECT_EQ(m.false_positives, 0);
  EXPECT_EQ(m.false_negatives, 0);
}

TEST(MatchDetections, GreedyByScore) {
  const std::vector<OrientedBox> g{box_at(0)};
  const std::vector<OrientedBox> d{box_at(1, 0, 0.9), box_at(0, 0, 0.8)};
  const auto m = match_detections(d, g, 0.5);
  EXPECT_EQ(m.flags[0], TP);
  EXPECT_EQ(m.flags[1], FP);
}

TEST(MatchDetections, NoDetections) {
  const std::vector<OrientedBox> g{box_at(0), box_at(50)};
  EXPECT_EQ(match_detections({}, g, 0.5).false_negatives, 2);
}

TEST(MatchDetections, DifficultIsIgnored) {
  const std::vector<OrientedBox> g{box_at(0, 0, 1.0, true)};
  const auto m = match_detections(g, g, 0.5);
  EXPECT_EQ(m.flags[0], MatchFlag::Ignored);
  EXPECT_EQ(m.false_negatives, 0);
  EXPECT_EQ(m.n_gt, 0);
}

TEST(AveragePrecision, CurveConstruction) {
  const std::vector<double> two{0.9, 0.8};
  const std::vector<MatchFlag> all_tp{TP, TP};
  EXPECT_DOUBLE_EQ(*average_precision(all_tp, two, 2), 1.0);
  const std::vector<MatchFlag> tp_fp{TP, FP};
  EXPECT_DOUBLE_EQ(*average_precision(tp_fp, two, 1), 1.0);
  const std::vector<MatchFlag> fp_tp{FP, TP};
  EXPECT_DOUBLE_EQ(*average_precision(fp_tp, two, 1), 0.5);
  EXPECT_FALSE(average_precision({}, {}, 0).has_value());
  EXPECT_DOUBLE_EQ(*average_precision({}, {}, 3), 0.0);
}

TEST(AveragePrecision, ElevenPoint) {
  const std::vector<double> two{0.9, 0.8};
  const std::vector<MatchFlag> fp_tp{FP, TP};
  EXPECT_DOUBLE_EQ(*average_precision(fp_tp, two, 1, ApMode::ElevenPoint), 0.5);
  const std::vector<MatchFlag> tp_fp{TP, FP};
  EXPECT_DOUBLE_EQ(*average_precision(tp_fp, two, 2, ApMode::ElevenPoint), 6.0 / 11.0);
}

TEST(Evaluate, IdentityGivesPerfectScores) {
  AnnotatedImage img{"a", 100, 100, {box_at(0, 0), box_at(30, 1), box_at(60, 1)}, {"x", "y"}};
  std::vector<ImageDetections> dets{{"a", {}}};
  for (const auto& b : img.objects) dets[0].detections.push_back({b, BranchId::Oriented});
  const std::vector<AnnotatedImage> gts{img};
  const std::vector<std::string> names{"x", "y"};
  const EvalReport map = evaluate(gts, dets, names);
  EXPECT_EQ(map.map_score, 1.0);
  const EvalReport text = evaluate(gts, dets, names, {EvalMode::Text});
  EXPECT_EQ(*text.f1, 1.0);
}

TEST(Evaluate, HalfRecall) {
  AnnotatedImage img{"a", 100, 100, {box_at(0), box_at(30)}, {"text"}};
  std::vector<ImageDetections> dets{{"a", {{box_at(0), BranchId::Oriented}}}};
  const std::vector<AnnotatedImage> gts{img};
  const std::vector<std::string> names{"text"};
  const EvalReport r = evaluate(gts, dets, names, {EvalMode::Text});
  EXPECT_DOUBLE_EQ(*r.recall, 0.5);
  EXPECT_DOUBLE_EQ(*r.precision, 1.0);
  EXPECT_DOUBLE_EQ(*r.f1, 2.0 / 3.0);
}

TEST(Evaluate, MeanOfClassAps) {
  // Class x: AP 0.5 (FP ranked first); class y: AP 1.
  AnnotatedImage img{"a", 100, 100, {box_at(0, 0), box_at(60, 1)}, {"x", "y"}};
  std::vector<ImageDetections> dets{
      {"a", {{box_at(30, 0, 0.9), BranchId::Oriented}, {box_at(0, 0, 0.5), BranchId::Oriented},
             {box_at(60, 1, 0.7), BranchId::Oriented}}}};
  const std::vector<AnnotatedImage> gts{img};
  const std::vector<std::string> names{"x", "y"};
  const EvalReport r = evaluate(gts, dets, names);
  EXPECT_DOUBLE_EQ(r.per_class_ap.at("x"), 0.5);
  EXPECT_DOUBLE_EQ(r.map_score, 0.75);
  EXPECT_NE(format_table(r).find("mAP"), std::string::npos);
  EXPECT_DOUBLE_EQ(to_json(r)["map"].get<double>(), 0.75);
}

TEST(Evaluate, UnknownClassId) {
  std::vector<ImageDetections> dets{{"a", {{box_at(0, 3), BranchId::Oriented}}}};
  const std::vector<std::string> names{"x"};
  EXPECT_THROW(evaluate({}, dets, names), Error);
}

TEST(F1Score, Formula) {
  EXPECT_DOUBLE_EQ(f1_score(1.0, 0.5), 2.0 / 3.0);
  EXPECT_EQ(f1_score(0.0, 0.0), 0.0);
}
