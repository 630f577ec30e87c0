#include "midline/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <unordered_map>

#include "midline/error.hpp"
#include "midline/rotated_iou.hpp"

namespace midline {

MatchResult match_detections(std::span<const OrientedBox> dets, std::span<const OrientedBox> gts,
                             double iou_threshold) {
  MatchResult result;
  result.flags.resize(dets.size(), MatchFlag::FalsePositive);
  result.n_gt = static_cast<int>(std::count_if(gts.begin(), gts.end(),
                                               [](const OrientedBox& g) { return !g.difficult(); }));
  std::vector<bool> used(gts.size(), false);

  for (std::size_t i = 0; i < dets.size(); ++i) {
    int best = -1;
    double best_iou = -1.0;
    for (std::size_t j = 0; j < gts.size(); ++j) {
      if (used[j]) continue;
      const double iou = rotated_iou(dets[i], gts[j]);
      if (iou > best_iou) {
        best_iou = iou;
        best = static_cast<int>(j);
      }
    }
    if (best >= 0 && best_iou >= iou_threshold) {
      if (gts[best].difficult()) {
        result.flags[i] = MatchFlag::Ignored;
      } else {
        result.flags[i] = MatchFlag::TruePositive;
        used[best] = true;
        ++result.true_positives;
      }
    } else {
      ++result.false_positives;
    }
  }
  result.false_negatives = result.n_gt - result.true_positives;
  return result;
}

std::optional<double> average_precision(std::span<const MatchFlag> flags,
                                        std::span<const double> scores, int n_gt, ApMode mode) {
  if (flags.size() != scores.size()) throw Error(ErrorCode::ShapeMismatch, "flags and scores differ in length");
  std::vector<std::size_t> order(flags.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<double> recall;
  std::vector<double> precision;
  int tp = 0;
  int fp = 0;
  for (const std::size_t i : order) {
    if (flags[i] == MatchFlag::Ignored) continue;
    (flags[i] == MatchFlag::TruePositive ? tp : fp) += 1;
    recall.push_back(n_gt > 0 ? static_cast<double>(tp) / n_gt : 0.0);
    precision.push_back(static_cast<double>(tp) / (tp + fp));
  }

  if (n_gt == 0) {
    if (fp > 0) return 0.0;
    return std::nullopt;
  }
  if (recall.empty()) return 0.0;

  if (mode == ApMode::ElevenPoint) {
    double sum = 0.0;
    for (int k = 0; k <= 10; ++k) {
      const double t = k / 10.0;
      double best = 0.0;
      for (std::size_t i = 0; i < recall.size(); ++i) {
        if (recall[i] >= t) best = std::max(best, precision[i]);
      }
      sum += best;
    }
    return sum / 11.0;
  }

  std::vector<double> mrec{0.0};
  std::vector<double> mpre{0.0};
  mrec.insert(mrec.end(), recall.begin(), recall.end());
  mpre.insert(mpre.end(), precision.begin(), precision.end());
  mrec.push_back(1.0);
  mpre.push_back(0.0);
  for (std::size_t i = mpre.size() - 1; i > 0; --i) mpre[i - 1] = std::max(mpre[i - 1], mpre[i]);
  double ap = 0.0;
  for (std::size_t i = 0; i + 1 < mrec.size(); ++i) {
    if (mrec[i + 1] != mrec[i]) ap += (mrec[i + 1] - mrec[i]) * mpre[i + 1];
  }
  return ap;
}

double f1_score(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

EvalReport evaluate(std::span<const AnnotatedImage> gts, std::span<const ImageDetections> dets,
                    std::span<const std::string> class_names, const EvalConfig& config) {
  const int n_classes = static_cast<int>(class_names.size());
  auto check_class = [&](int id, const std::string& where) {
    if (id < 0 || id >= n_classes) {
      throw Error(ErrorCode::UnknownClass, where + " uses class id " + std::to_string(id));
    }
  };

  // Image order: ground truth first, then detection-only images.
  std::vector<std::string> image_ids;
  std::unordered_map<std::string, std::size_t> image_index;
  std::vector<std::vector<const OrientedBox*>> gt_by_image;
  std::vector<std::vector<const Detection*>> det_by_image;
  auto slot = [&](const std::string& id) {
    auto [it, inserted] = image_index.emplace(id, image_ids.size());
    if (inserted) {
      image_ids.push_back(id);
      gt_by_image.emplace_back();
      det_by_image.emplace_back();
    }
    return it->second;
  };
  for (const auto& img : gts) {
    const std::size_t s = slot(img.image_id);
    for (const auto& box : img.objects) {
      check_class(box.class_id(), "ground truth of " + img.image_id);
      gt_by_image[s].push_back(&box);
    }
  }
  for (const auto& img : dets) {
    const std::size_t s = slot(img.image_id);
    for (const auto& det : img.detections) {
      check_class(det.box.class_id(), "detection in " + img.image_id);
      det_by_image[s].push_back(&det);
    }
  }

  EvalReport report;
  report.mode = config.mode;
  ClassCounts total;
  for (int c = 0; c < n_classes; ++c) {
    std::vector<MatchFlag> flags;
    std::vector<double> scores;
    ClassCounts counts;
    for (std::size_t s = 0; s < image_ids.size(); ++s) {
      std::vector<OrientedBox> g;
      for (const auto* box : gt_by_image[s]) {
        if (box->class_id() == c) g.push_back(*box);
      }
      std::vector<OrientedBox> d;
      for (const auto* det : det_by_image[s]) {
        if (det->box.class_id() == c) d.push_back(det->box);
      }
      std::stable_sort(d.begin(), d.end(),
                       [](const OrientedBox& a, const OrientedBox& b) { return a.score() > b.score(); });
      const MatchResult m = match_detections(d, g, config.iou_threshold);
      for (std::size_t k = 0; k < d.size(); ++k) {
        flags.push_back(m.flags[k]);
        scores.push_back(d[k].score());
      }
      counts.tp += m.true_positives;
      counts.fp += m.false_positives;
      counts.fn += m.false_negatives;
      counts.n_gt += m.n_gt;
    }
    const std::string& name = class_names[c];
    if (auto ap = average_precision(flags, scores, counts.n_gt, config.ap_mode)) {
      report.per_class_ap[name] = *ap;
    }
    if (counts.n_gt > 0 || counts.tp + counts.fp > 0) report.counts[name] = counts;
    total.tp += counts.tp;
    total.fp += counts.fp;
    total.fn += counts.fn;
    total.n_gt += counts.n_gt;
  }

  if (!report.per_class_ap.empty()) {
    double sum = 0.0;
    for (const auto& [name, ap] : report.per_class_ap) sum += ap;
    report.map_score = sum / static_cast<double>(report.per_class_ap.size());
  }

  if (config.mode == EvalMode::Text) {
    const int n_det = total.tp + total.fp;
    const double p = n_det > 0 ? static_cast<double>(total.tp) / n_det : 0.0;
    const double r = total.n_gt > 0 ? static_cast<double>(total.tp) / total.n_gt : 1.0;
    report.precision = p;
    report.recall = r;
    report.f1 = f1_score(p, r);
  }
  return report;
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& [name, c] : report.counts) {
    counts[name] = {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"n_gt", c.n_gt}};
  }
  nlohmann::json out = {{"mode", report.mode == EvalMode::Map ? "map" : "text"},
                        {"per_class_ap", report.per_class_ap},
                        {"map", report.map_score},
                        {"counts", counts}};
  if (report.precision) out["precision"] = *report.precision;
  if (report.recall) out["recall"] = *report.recall;
  if (report.f1) out["f1"] = *report.f1;
  return out;
}

std::string format_table(const EvalReport& report) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-20s %8s %6s %6s %6s %6s\n", "class", "AP", "TP", "FP", "FN", "GT");
  out += line;
  for (const auto& [name, c] : report.counts) {
    const auto ap = report.per_class_ap.find(name);
    if (ap != report.per_class_ap.end()) {
      std::snprintf(line, sizeof line, "%-20s %8.4f %6d %6d %6d %6d\n", name.c_str(), ap->second, c.tp,
                    c.fp, c.fn, c.n_gt);
    } else {
      std::snprintf(line, sizeof line, "%-20s %8s %6d %6d %6d %6d\n", name.c_str(), "-", c.tp, c.fp,
                    c.fn, c.n_gt);
    }
    out += line;
  }
  std::snprintf(line, sizeof line, "%-20s %8.4f\n", "mAP", report.map_score);
  out += line;
  if (report.mode == EvalMode::Text) {
    std::snprintf(line, sizeof line, "%-20s %8.4f %8s %8.4f %8s %8.4f\n", "precision", *report.precision,
                  "recall", *report.recall, "F1", *report.f1);
    out += line;
  }
  return out;
}

}  // namespace midline
