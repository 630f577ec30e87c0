#pragma once

// Heatmap + regression maps -> oriented detections.
//
// Each class channel is binarized (value > threshold) and split into
// 8-connected domains. The rounded centroid of a domain selects the cell whose
// regression values give the four midline endpoints. No NMS and no top-K:
// only cross-branch duplicates are merged.

#include <vector>

#include "midline/detection.hpp"
#include "midline/target_encoder.hpp"

namespace midline {

struct Component {
  std::vector<Cell> cells;  // scan order
  double score = 0.0;       // max heatmap value over cells
  int class_id = 0;
  BranchId branch = BranchId::Oriented;
};

/// Components of one channel in scan order of their first cell. Throws
/// Error(InvalidArgument) unless 0 < threshold < 1.
std::vector<Component> extract_components(const Grid<double>& heatmap, int channel,
                                          double threshold);

/// Half-up rounded unweighted centroid of the component's cells.
Cell lookup_cell(const Component& comp);

/// Throws Error(DegenerateBox) when the regressed midlines collapse.
Detection component_to_detection(const Component& comp, const Grid<double>& regression, int stride);

struct DecoderConfig {
  double threshold = 0.3;
  double merge_iou = 0.7;
};

struct DecodeResult {
  std::vector<Detection> detections;
  int components = 0;
  int dropped_degenerate = 0;
};

/// Throws Error(ShapeMismatch) when the grids disagree with the map header.
DecodeResult decode(const TargetMaps& maps, const DecoderConfig& config = {});

/// Drops the lower-scored member of every same-class cross-branch pair with
/// IoU above the threshold (ties keep the Horizontal branch). Order of the
/// survivors is preserved.
std::vector<Detection> merge_branches(const std::vector<Detection>& dets, double iou_threshold = 0.7);

}  // namespace midline
