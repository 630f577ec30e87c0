#pragma once

// Detection metrics: per-class AP / mAP for aerial benchmarks and micro
// averaged Precision / Recall / F1 for text benchmarks.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "midline/dataset.hpp"
#include "midline/detection.hpp"

namespace midline {

enum class MatchFlag { TruePositive, FalsePositive, Ignored };

struct MatchResult {
  std::vector<MatchFlag> flags;  // one per detection, input order
  int true_positives = 0;
  int false_positives = 0;
  int false_negatives = 0;
  int n_gt = 0;  // non-difficult ground truth
};

/// Greedy matching of one image/class slice. `dets` must already be sorted by
/// descending score. A detection takes the unmatched ground truth of highest
/// IoU; at or above the threshold it is a TP, or Ignored if that ground truth
/// is difficult. Difficult ground truth never counts as FN.
MatchResult match_detections(std::span<const OrientedBox> dets, std::span<const OrientedBox> gts,
                             double iou_threshold);

enum class ApMode { AllPoint, ElevenPoint };

/// Area under the interpolated precision/recall curve. `flags` and `scores`
/// are paired and sorted here by descending score (stable). Returns nullopt
/// when the class has neither ground truth nor counted detections.
std::optional<double> average_precision(std::span<const MatchFlag> flags,
                                        std::span<const double> scores, int n_gt,
                                        ApMode mode = ApMode::AllPoint);

enum class EvalMode { Map, Text };

struct EvalConfig {
  EvalMode mode = EvalMode::Map;
  double iou_threshold = 0.5;
  ApMode ap_mode = ApMode::AllPoint;
};

struct ClassCounts {
  int tp = 0;
  int fp = 0;
  int fn = 0;
  int n_gt = 0;
};

struct EvalReport {
  EvalMode mode = EvalMode::Map;
  std::map<std::string, double> per_class_ap;
  double map_score = 0.0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::map<std::string, ClassCounts> counts;
};

struct ImageDetections {
  std::string image_id;
  std::vector<Detection> detections;
};

/// Class ids on both sides index `class_names`. Detections for images
/// without ground truth count as false positives. Throws
/// Error(UnknownClass) for a class id outside the vocabulary.
EvalReport evaluate(std::span<const AnnotatedImage> gts, std::span<const ImageDetections> dets,
                    std::span<const std::string> class_names, const EvalConfig& config = {});

double f1_score(double precision, double recall);

nlohmann::json to_json(const EvalReport& report);

/// Fixed-width table, one row per class plus a summary row.
std::string format_table(const EvalReport& report);

}  // namespace midline
