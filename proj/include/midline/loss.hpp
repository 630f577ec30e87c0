#pragma once

// Intersection-point focal loss and the three-part Line Loss, each returning
// its value together with the exact gradient w.r.t. the prediction.
//
// All sums run over the regression mask (drift-region cells) and are divided
// by N = max(object count, 1).

#include <array>
#include <cstdint>
#include <optional>

#include "midline/grid.hpp"
#include "midline/target_encoder.hpp"

namespace midline {

inline constexpr double kProbEpsilon = 1e-7;

struct LossWeights {
  double alpha_focal = 2.0;  // focal exponent
  double alpha = 1.0;        // collinear term
  double beta = 1.0;         // vertical term
  double gamma = 0.5;        // Line Loss weight in the total
  bool text_mode = false;    // drops the vertical term

  /// Throws Error(InvalidArgument) on a negative weight.
  void validate() const;
};

struct SmoothL1 {
  double value = 0.0;
  double grad = 0.0;  // d value / d pred
};

/// Transition at |pred - target| = 1.
SmoothL1 smooth_l1(double pred, double target);

struct GridLoss {
  double value = 0.0;
  Grid<double> grad;
};

/// Throws Error(ShapeMismatch) or Error(NonBinaryGroundTruth). Predictions
/// are clamped to [eps, 1 - eps]; clamped cells get zero gradient.
GridLoss focal_ip_loss(const Grid<double>& pred, const Grid<double>& gt, int n_objects,
                       double alpha_focal = 2.0);

GridLoss endpoint_loss(const Grid<double>& pred_reg, const Grid<double>& target_reg,
                       const Grid<std::uint8_t>& mask, int n_objects);

/// Per line: SmoothL1(dx1 * dy2, dx2 * dy1).
GridLoss collinear_loss(const Grid<double>& pred_reg, const Grid<std::uint8_t>& mask,
                        int n_objects);

/// SmoothL1(<ep1 of L1, ep1 of L2>, 0).
GridLoss vertical_loss(const Grid<double>& pred_reg, const Grid<std::uint8_t>& mask,
                       int n_objects);

struct LineLossValue {
  double total = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
  double l3 = 0.0;  // reported even in text mode, never added there
  Grid<double> grad;
};

LineLossValue line_loss(const Grid<double>& pred_reg, const Grid<double>& target_reg,
                        const Grid<std::uint8_t>& mask, int n_objects, const LossWeights& weights);

struct MapGradients {
  std::array<Grid<double>, kNumBranches> heatmap;
  std::array<Grid<double>, kNumBranches> regression;
};

struct LossValue {
  double total = 0.0;
  double ip = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
  double l3 = 0.0;
  std::optional<MapGradients> gradients;
};

/// Sum over both branches of L_ip + gamma * L_line. The prediction's heatmap
/// and regression grids are used; the target supplies masks and N.
LossValue total_loss(const TargetMaps& pred, const TargetMaps& target, const LossWeights& weights,
                     bool with_gradients = false);

}  // namespace midline
