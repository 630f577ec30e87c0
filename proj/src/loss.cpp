#include "midline/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "midline/error.hpp"

namespace midline {

namespace {

double clamp_n(int n_objects) { return static_cast<double>(std::max(n_objects, 1)); }

void require_regression_shapes(const Grid<double>& pred_reg, const Grid<std::uint8_t>& mask) {
  if (pred_reg.channels() != kRegressionChannels) {
    throw Error(ErrorCode::ShapeMismatch, "regression prediction needs 8 channels");
  }
  if (mask.channels() != 1 || mask.rows() != pred_reg.rows() || mask.cols() != pred_reg.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "mask does not match regression grid");
  }
}

// Channel offsets of each line's (x1, y1, x2, y2).
constexpr std::array<int, 2> kLineBase{0, 4};

void add_scaled(Grid<double>& into, const Grid<double>& from, double scale) {
  auto dst = into.data();
  auto src = from.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
}

}  // namespace

void LossWeights::validate() const {
  if (alpha_focal < 0.0 || alpha < 0.0 || beta < 0.0 || gamma < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "loss weights must be non-negative");
  }
}

SmoothL1 smooth_l1(double pred, double target) {
  const double d = pred - target;
  const double a = std::abs(d);
  if (a < 1.0) return {0.5 * d * d, d};
  return {a - 0.5, d > 0.0 ? 1.0 : -1.0};
}

GridLoss focal_ip_loss(const Grid<double>& pred, const Grid<double>& gt, int n_objects,
                       double alpha_focal) {
  if (!pred.same_shape(gt)) throw Error(ErrorCode::ShapeMismatch, "heatmap shapes differ");
  const double n = clamp_n(n_objects);
  GridLoss out{0.0, Grid<double>(pred.channels(), pred.rows(), pred.cols())};
  auto p_in = pred.data();
  auto y = gt.data();
  auto g = out.grad.data();

  double sum = 0.0;
  for (std::size_t i = 0; i < p_in.size(); ++i) {
    const double raw = p_in[i];
    const double p = std::clamp(raw, kProbEpsilon, 1.0 - kProbEpsilon);
    const bool inside = raw == p;
    if (y[i] == 1.0) {
      const double q = 1.0 - p;
      sum += std::pow(q, alpha_focal) * std::log(p);
      if (inside) {
        const double d = -alpha_focal * std::pow(q, alpha_focal - 1.0) * std::log(p) +
                         std::pow(q, alpha_focal) / p;
        g[i] = -d / n;
      }
    } else if (y[i] == 0.0) {
      sum += std::pow(p, alpha_focal) * std::log(1.0 - p);
      if (inside) {
        const double d = alpha_focal * std::pow(p, alpha_focal - 1.0) * std::log(1.0 - p) -
                         std::pow(p, alpha_focal) / (1.0 - p);
        g[i] = -d / n;
      }
    } else {
      throw Error(ErrorCode::NonBinaryGroundTruth,
                  "ground-truth heatmap value " + std::to_string(y[i]));
    }
  }
  out.value = -sum / n;
  return out;
}

GridLoss endpoint_loss(const Grid<double>& pred_reg, const Grid<double>& target_reg,
                       const Grid<std::uint8_t>& mask, int n_objects) {
  require_regression_shapes(pred_reg, mask);
  if (!pred_reg.same_shape(target_reg)) {
    throw Error(ErrorCode::ShapeMismatch, "regression prediction and target differ");
  }
  const double n = clamp_n(n_objects);
  GridLoss out{0.0, Grid<double>(pred_reg.channels(), pred_reg.rows(), pred_reg.cols())};
  for (int r = 0; r < pred_reg.rows(); ++r) {
    for (int c = 0; c < pred_reg.cols(); ++c) {
      if (!mask(0, r, c)) continue;
      for (int ch = 0; ch < kRegressionChannels; ++ch) {
        const SmoothL1 s = smooth_l1(pred_reg(ch, r, c), target_reg(ch, r, c));
        out.value += s.value;
        out.grad(ch, r, c) = s.grad / n;
      }
    }
  }
  out.value /= n;
  return out;
}

GridLoss collinear_loss(const Grid<double>& pred_reg, const Grid<std::uint8_t>& mask,
                        int n_objects) {
  require_regression_shapes(pred_reg, mask);
  const double n = clamp_n(n_objects);
  GridLoss out{0.0, Grid<double>(pred_reg.channels(), pred_reg.rows(), pred_reg.cols())};
  for (int r = 0; r < pred_reg.rows(); ++r) {
    for (int c = 0; c < pred_reg.cols(); ++c) {
      if (!mask(0, r, c)) continue;
      for (const int base : kLineBase) {
        const double x1 = pred_reg(base, r, c);
        const double y1 = pred_reg(base + 1, r, c);
        const double x2 = pred_reg(base + 2, r, c);
        const double y2 = pred_reg(base + 3, r, c);
        const SmoothL1 s = smooth_l1(x1 * y2, x2 * y1);
        out.value += s.value;
        const double g = s.grad / n;
        out.grad(base, r, c) = g * y2;
        out.grad(base + 1, r, c) = -g * x2;
        out.grad(base + 2, r, c) = -g * y1;
        out.grad(base + 3, r, c) = g * x1;
      }
    }
  }
  out.value /= n;
  return out;
}

GridLoss vertical_loss(const Grid<double>& pred_reg, const Grid<std::uint8_t>& mask,
                       int n_objects) {
  require_regression_shapes(pred_reg, mask);
  const double n = clamp_n(n_objects);
  GridLoss out{0.0, Grid<double>(pred_reg.channels(), pred_reg.rows(), pred_reg.cols())};
  for (int r = 0; r < pred_reg.rows(); ++r) {
    for (int c = 0; c < pred_reg.cols(); ++c) {
      if (!mask(0, r, c)) continue;
      const double ax = pred_reg(0, r, c);
      const double ay = pred_reg(1, r, c);
      const double bx = pred_reg(4, r, c);
      const double by = pred_reg(5, r, c);
      const SmoothL1 s = smooth_l1(ax * bx + ay * by, 0.0);
      out.value += s.value;
      const double g = s.grad / n;
      out.grad(0, r, c) = g * bx;
      out.grad(1, r, c) = g * by;
      out.grad(4, r, c) = g * ax;
      out.grad(5, r, c) = g * ay;
    }
  }
  out.value /= n;
  return out;
}

LineLossValue line_loss(const Grid<double>& pred_reg, const Grid<double>& target_reg,
                        const Grid<std::uint8_t>& mask, int n_objects, const LossWeights& weights) {
  weights.validate();
  GridLoss e = endpoint_loss(pred_reg, target_reg, mask, n_objects);
  const GridLoss co = collinear_loss(pred_reg, mask, n_objects);
  const GridLoss ve = vertical_loss(pred_reg, mask, n_objects);

  LineLossValue out;
  out.l1 = e.value;
  out.l2 = co.value;
  out.l3 = ve.value;
  out.total = out.l1 + weights.alpha * out.l2;
  out.grad = std::move(e.grad);
  add_scaled(out.grad, co.grad, weights.alpha);
  if (!weights.text_mode) {
    out.total += weights.beta * out.l3;
    add_scaled(out.grad, ve.grad, weights.beta);
  }
  return out;
}

LossValue total_loss(const TargetMaps& pred, const TargetMaps& target, const LossWeights& weights,
                     bool with_gradients) {
  weights.validate();
  LossValue out;
  MapGradients grads;
  for (int b = 0; b < kNumBranches; ++b) {
    if (!pred.heatmap[b].same_shape(target.heatmap[b]) ||
        !pred.regression[b].same_shape(target.regression[b])) {
      throw Error(ErrorCode::ShapeMismatch, "prediction maps do not match target maps");
    }
    GridLoss ip = focal_ip_loss(pred.heatmap[b], target.heatmap[b], target.n_objects,
                                weights.alpha_focal);
    LineLossValue line = line_loss(pred.regression[b], target.regression[b], target.reg_mask[b],
                                   target.n_objects, weights);
    out.ip += ip.value;
    out.l1 += line.l1;
    out.l2 += line.l2;
    out.l3 += line.l3;
    if (with_gradients) {
      grads.heatmap[b] = std::move(ip.grad);
      grads.regression[b] = Grid<double>(line.grad.channels(), line.grad.rows(), line.grad.cols());
      add_scaled(grads.regression[b], line.grad, weights.gamma);
    }
  }
  const double line_total =
      out.l1 + weights.alpha * out.l2 + (weights.text_mode ? 0.0 : weights.beta * out.l3);
  out.total = out.ip + weights.gamma * line_total;
  if (with_gradients) out.gradients = std::move(grads);
  return out;
}

}  // namespace midline
