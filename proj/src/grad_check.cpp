#include "midline/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "midline/error.hpp"

namespace midline {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Grid<double> grid_from(std::span<const double> params, int channels, int rows, int cols) {
  Grid<double> g(channels, rows, cols);
  std::copy(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(g.size()),
            g.data().begin());
  return g;
}

std::vector<double> to_vector(const Grid<double>& g) { return {g.data().begin(), g.data().end()}; }

// Distance from a SmoothL1 argument to the |x| = 1 kink, expressed in units of
// a single parameter step given the largest coefficient multiplying it.
double kink_distance(double arg, double coefficient) {
  return std::abs(std::abs(arg) - 1.0) / std::max(1.0, std::abs(coefficient));
}

double prob_margin(double p) { return std::min(p - kProbEpsilon, 1.0 - kProbEpsilon - p); }

double endpoint_cell_margin(const Grid<double>& pred, const Grid<double>& target, int r, int c) {
  double m = kInf;
  for (int ch = 0; ch < kRegressionChannels; ++ch) {
    m = std::min(m, kink_distance(pred(ch, r, c) - target(ch, r, c), 1.0));
  }
  return m;
}

double collinear_cell_margin(const Grid<double>& pred, int r, int c) {
  double m = kInf;
  for (const int base : {0, 4}) {
    const double x1 = pred(base, r, c);
    const double y1 = pred(base + 1, r, c);
    const double x2 = pred(base + 2, r, c);
    const double y2 = pred(base + 3, r, c);
    const double coef = std::max({std::abs(x1), std::abs(y1), std::abs(x2), std::abs(y2)});
    m = std::min(m, kink_distance(x1 * y2 - x2 * y1, coef));
  }
  return m;
}

double vertical_cell_margin(const Grid<double>& pred, int r, int c) {
  const double ax = pred(0, r, c);
  const double ay = pred(1, r, c);
  const double bx = pred(4, r, c);
  const double by = pred(5, r, c);
  const double coef = std::max({std::abs(ax), std::abs(ay), std::abs(bx), std::abs(by)});
  return kink_distance(ax * bx + ay * by, coef);
}

template <typename CellMargin>
double masked_margin(const Grid<std::uint8_t>& mask, CellMargin&& cell_margin) {
  double m = kInf;
  for (int r = 0; r < mask.rows(); ++r) {
    for (int c = 0; c < mask.cols(); ++c) {
      if (mask(0, r, c)) m = std::min(m, cell_margin(r, c));
    }
  }
  return m;
}

double line_margin(const Grid<double>& pred, const Grid<double>& target,
                   const Grid<std::uint8_t>& mask, bool with_vertical) {
  return masked_margin(mask, [&](int r, int c) {
    double m = std::min(endpoint_cell_margin(pred, target, r, c), collinear_cell_margin(pred, r, c));
    if (with_vertical) m = std::min(m, vertical_cell_margin(pred, r, c));
    return m;
  });
}

}  // namespace

GradCheckReport grad_check(const Differentiable& fn, std::span<const double> point, double step,
                           double tolerance) {
  if (!(step > 0.0)) throw Error(ErrorCode::InvalidArgument, "finite-difference step must be positive");
  if (fn.smooth_margin) {
    const double margin = fn.smooth_margin(point);
    if (margin <= 10.0 * step) {
      throw Error(ErrorCode::KinkProximity, fn.name + ": evaluation point within " +
                                                std::to_string(margin) + " of a non-smooth point");
    }
  }

  const std::vector<double> analytic = fn.gradient(point);
  if (analytic.size() != point.size()) {
    throw Error(ErrorCode::ShapeMismatch, fn.name + ": gradient size differs from point size");
  }

  GradCheckReport report;
  report.name = fn.name;
  report.n_coords = point.size();
  std::vector<double> x(point.begin(), point.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + step;
    const double fp = fn.value(x);
    x[i] = saved - step;
    const double fm = fn.value(x);
    x[i] = saved;
    const double numeric = (fp - fm) / (2.0 * step);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
    const double rel = std::abs(analytic[i] - numeric) / denom;
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_index = i;
    }
  }
  report.passed = report.max_rel_error < tolerance;
  return report;
}

Differentiable make_focal_problem(Grid<double> gt, int n_objects, double alpha_focal) {
  const int ch = gt.channels(), rows = gt.rows(), cols = gt.cols();
  auto shared = std::make_shared<const Grid<double>>(std::move(gt));
  Differentiable fn;
  fn.name = std::string(loss_name(LossKind::Focal));
  fn.value = [=](std::span<const double> p) {
    return focal_ip_loss(grid_from(p, ch, rows, cols), *shared, n_objects, alpha_focal).value;
  };
  fn.gradient = [=](std::span<const double> p) {
    return to_vector(focal_ip_loss(grid_from(p, ch, rows, cols), *shared, n_objects, alpha_focal).grad);
  };
  fn.smooth_margin = [](std::span<const double> p) {
    double m = kInf;
    for (const double v : p) m = std::min(m, prob_margin(v));
    return m;
  };
  return fn;
}

Differentiable make_endpoint_problem(Grid<double> target_reg, Grid<std::uint8_t> mask,
                                     int n_objects) {
  const int rows = target_reg.rows(), cols = target_reg.cols();
  auto target = std::make_shared<const Grid<double>>(std::move(target_reg));
  auto m = std::make_shared<const Grid<std::uint8_t>>(std::move(mask));
  Differentiable fn;
  fn.name = std::string(loss_name(LossKind::Endpoint));
  fn.value = [=](std::span<const double> p) {
    return endpoint_loss(grid_from(p, kRegressionChannels, rows, cols), *target, *m, n_objects).value;
  };
  fn.gradient = [=](std::span<const double> p) {
    return to_vector(
        endpoint_loss(grid_from(p, kRegressionChannels, rows, cols), *target, *m, n_objects).grad);
  };
  fn.smooth_margin = [=](std::span<const double> p) {
    const Grid<double> pred = grid_from(p, kRegressionChannels, rows, cols);
    return masked_margin(*m, [&](int r, int c) { return endpoint_cell_margin(pred, *target, r, c); });
  };
  return fn;
}

Differentiable make_collinear_problem(Grid<std::uint8_t> mask, int n_objects) {
  const int rows = mask.rows(), cols = mask.cols();
  auto m = std::make_shared<const Grid<std::uint8_t>>(std::move(mask));
  Differentiable fn;
  fn.name = std::string(loss_name(LossKind::Collinear));
  fn.value = [=](std::span<const double> p) {
    return collinear_loss(grid_from(p, kRegressionChannels, rows, cols), *m, n_objects).value;
  };
  fn.gradient = [=](std::span<const double> p) {
    return to_vector(collinear_loss(grid_from(p, kRegressionChannels, rows, cols), *m, n_objects).grad);
  };
  fn.smooth_margin = [=](std::span<const double> p) {
    const Grid<double> pred = grid_from(p, kRegressionChannels, rows, cols);
    return masked_margin(*m, [&](int r, int c) { return collinear_cell_margin(pred, r, c); });
  };
  return fn;
}

Differentiable make_vertical_problem(Grid<std::uint8_t> mask, int n_objects) {
  const int rows = mask.rows(), cols = mask.cols();
  auto m = std::make_shared<const Grid<std::uint8_t>>(std::move(mask));
  Differentiable fn;
  fn.name = std::string(loss_name(LossKind::Vertical));
  fn.value = [=](std::span<const double> p) {
    return vertical_loss(grid_from(p, kRegressionChannels, rows, cols), *m, n_objects).value;
  };
  fn.gradient = [=](std::span<const double> p) {
    return to_vector(vertical_loss(grid_from(p, kRegressionChannels, rows, cols), *m, n_objects).grad);
  };
  fn.smooth_margin = [=](std::span<const double> p) {
    const Grid<double> pred = grid_from(p, kRegressionChannels, rows, cols);
    return masked_margin(*m, [&](int r, int c) { return vertical_cell_margin(pred, r, c); });
  };
  return fn;
}

Differentiable make_line_problem(Grid<double> target_reg, Grid<std::uint8_t> mask, int n_objects,
                                 LossWeights weights) {
  const int rows = target_reg.rows(), cols = target_reg.cols();
  auto target = std::make_shared<const Grid<double>>(std::move(target_reg));
  auto m = std::make_shared<const Grid<std::uint8_t>>(std::move(mask));
  Differentiable fn;
  fn.name = std::string(loss_name(LossKind::Line));
  fn.value = [=](std::span<const double> p) {
    return line_loss(grid_from(p, kRegressionChannels, rows, cols), *target, *m, n_objects, weights)
        .total;
  };
  fn.gradient = [=](std::span<const double> p) {
    return to_vector(
        line_loss(grid_from(p, kRegressionChannels, rows, cols), *target, *m, n_objects, weights).grad);
  };
  fn.smooth_margin = [=](std::span<const double> p) {
    const Grid<double> pred = grid_from(p, kRegressionChannels, rows, cols);
    return line_margin(pred, *target, *m, !weights.text_mode);
  };
  return fn;
}

std::vector<double> flatten_prediction(const TargetMaps& pred) {
  std::vector<double> out;
  for (int b = 0; b < kNumBranches; ++b) {
    out.insert(out.end(), pred.heatmap[b].data().begin(), pred.heatmap[b].data().end());
  }
  for (int b = 0; b < kNumBranches; ++b) {
    out.insert(out.end(), pred.regression[b].data().begin(), pred.regression[b].data().end());
  }
  return out;
}

TargetMaps unflatten_prediction(std::span<const double> params, const TargetMaps& like) {
  TargetMaps pred = TargetMaps::zeros(like.image_w, like.image_h, like.stride, like.num_classes);
  std::size_t offset = 0;
  for (int b = 0; b < kNumBranches; ++b) {
    auto dst = pred.heatmap[b].data();
    std::copy_n(params.begin() + static_cast<std::ptrdiff_t>(offset), dst.size(), dst.begin());
    offset += dst.size();
  }
  for (int b = 0; b < kNumBranches; ++b) {
    auto dst = pred.regression[b].data();
    std::copy_n(params.begin() + static_cast<std::ptrdiff_t>(offset), dst.size(), dst.begin());
    offset += dst.size();
  }
  return pred;
}

Differentiable make_total_problem(TargetMaps target, LossWeights weights) {
  target.regions.clear();
  auto t = std::make_shared<const TargetMaps>(std::move(target));
  Differentiable fn;
  fn.name = std::string(loss_name(LossKind::Total));
  fn.value = [=](std::span<const double> p) {
    return total_loss(unflatten_prediction(p, *t), *t, weights).total;
  };
  fn.gradient = [=](std::span<const double> p) {
    const LossValue v = total_loss(unflatten_prediction(p, *t), *t, weights, true);
    TargetMaps packed = TargetMaps::zeros(t->image_w, t->image_h, t->stride, t->num_classes);
    for (int b = 0; b < kNumBranches; ++b) {
      packed.heatmap[b] = v.gradients->heatmap[b];
      packed.regression[b] = v.gradients->regression[b];
    }
    return flatten_prediction(packed);
  };
  fn.smooth_margin = [=](std::span<const double> p) {
    const TargetMaps pred = unflatten_prediction(p, *t);
    double m = kInf;
    for (int b = 0; b < kNumBranches; ++b) {
      for (const double v : pred.heatmap[b].data()) m = std::min(m, prob_margin(v));
      m = std::min(m, line_margin(pred.regression[b], t->regression[b], t->reg_mask[b],
                                  !weights.text_mode));
    }
    return m;
  };
  return fn;
}

std::string_view loss_name(LossKind kind) {
  switch (kind) {
    case LossKind::Focal: return "focal_ip";
    case LossKind::Endpoint: return "endpoint";
    case LossKind::Collinear: return "collinear";
    case LossKind::Vertical: return "vertical";
    case LossKind::Line: return "line";
    case LossKind::Total: return "total";
  }
  return "unknown";
}

namespace {

constexpr int kRows = 4;
constexpr int kCols = 5;
constexpr int kClasses = 2;
constexpr int kMaxResample = 10000;

Grid<std::uint8_t> random_mask(std::mt19937_64& rng, int rows, int cols) {
  std::bernoulli_distribution coin(0.5);
  Grid<std::uint8_t> mask(1, rows, cols);
  for (auto& v : mask.data()) v = coin(rng) ? 1 : 0;
  std::uniform_int_distribution<int> pick(0, rows * cols - 1);
  mask.data()[pick(rng)] = 1;
  return mask;
}

// Fills one masked cell of `pred` until `cell_margin` clears `margin`.
template <typename Sample, typename CellMargin>
void sample_cell(Grid<double>& pred, int r, int c, double margin, Sample&& sample,
                 CellMargin&& cell_margin) {
  for (int attempt = 0; attempt < kMaxResample; ++attempt) {
    for (int ch = 0; ch < kRegressionChannels; ++ch) pred(ch, r, c) = sample(ch);
    if (cell_margin(r, c) >= margin) return;
  }
  throw Error(ErrorCode::InvalidArgument, "could not sample a smooth point");
}

// Offset from a target that keeps |pred - target| away from 1 by `margin`.
double smooth_offset(std::mt19937_64& rng, double margin) {
  std::bernoulli_distribution coin(0.5);
  std::uniform_real_distribution<double> inner(0.0, 1.0 - margin);
  std::uniform_real_distribution<double> outer(1.0 + margin, 3.0);
  const double mag = coin(rng) ? inner(rng) : outer(rng);
  return coin(rng) ? mag : -mag;
}

void fill_line_prediction(std::mt19937_64& rng, Grid<double>& pred, const Grid<double>& target,
                          const Grid<std::uint8_t>& mask, bool with_vertical, double margin) {
  std::uniform_real_distribution<double> loose(-3.0, 3.0);
  for (int r = 0; r < pred.rows(); ++r) {
    for (int c = 0; c < pred.cols(); ++c) {
      if (!mask(0, r, c)) {
        for (int ch = 0; ch < kRegressionChannels; ++ch) pred(ch, r, c) = loose(rng);
        continue;
      }
      sample_cell(
          pred, r, c, margin,
          [&](int ch) { return target(ch, r, c) + smooth_offset(rng, margin); },
          [&](int rr, int cc) {
            double m = std::min(endpoint_cell_margin(pred, target, rr, cc),
                                collinear_cell_margin(pred, rr, cc));
            if (with_vertical) m = std::min(m, vertical_cell_margin(pred, rr, cc));
            return m;
          });
    }
  }
}

Grid<double> random_grid(std::mt19937_64& rng, int channels, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Grid<double> g(channels, kRows, kCols);
  for (auto& v : g.data()) v = u(rng);
  return g;
}

}  // namespace

GradCheckCase sample_case(LossKind kind, std::mt19937_64& rng, double margin) {
  std::uniform_int_distribution<int> objects(1, 3);
  const int n = objects(rng);
  LossWeights weights;

  switch (kind) {
    case LossKind::Focal: {
      std::bernoulli_distribution positive(0.2);
      Grid<double> gt(kClasses, kRows, kCols);
      for (auto& v : gt.data()) v = positive(rng) ? 1.0 : 0.0;
      const double lo = kProbEpsilon + margin;
      Grid<double> pred = random_grid(rng, kClasses, lo, 1.0 - lo);
      return {make_focal_problem(std::move(gt), n, weights.alpha_focal), to_vector(pred)};
    }
    case LossKind::Endpoint: {
      Grid<double> target = random_grid(rng, kRegressionChannels, -40.0, 40.0);
      Grid<std::uint8_t> mask = random_mask(rng, kRows, kCols);
      Grid<double> pred(kRegressionChannels, kRows, kCols);
      for (std::size_t i = 0; i < pred.size(); ++i) {
        pred.data()[i] = target.data()[i] + smooth_offset(rng, margin);
      }
      return {make_endpoint_problem(std::move(target), std::move(mask), n), to_vector(pred)};
    }
    case LossKind::Collinear:
    case LossKind::Vertical: {
      Grid<std::uint8_t> mask = random_mask(rng, kRows, kCols);
      Grid<double> pred(kRegressionChannels, kRows, kCols);
      std::uniform_real_distribution<double> u(-3.0, 3.0);
      for (int r = 0; r < kRows; ++r) {
        for (int c = 0; c < kCols; ++c) {
          sample_cell(pred, r, c, margin, [&](int) { return u(rng); }, [&](int rr, int cc) {
            return kind == LossKind::Collinear ? collinear_cell_margin(pred, rr, cc)
                                               : vertical_cell_margin(pred, rr, cc);
          });
        }
      }
      auto fn = kind == LossKind::Collinear ? make_collinear_problem(std::move(mask), n)
                                            : make_vertical_problem(std::move(mask), n);
      return {std::move(fn), to_vector(pred)};
    }
    case LossKind::Line: {
      Grid<double> target = random_grid(rng, kRegressionChannels, -3.0, 3.0);
      Grid<std::uint8_t> mask = random_mask(rng, kRows, kCols);
      Grid<double> pred(kRegressionChannels, kRows, kCols);
      fill_line_prediction(rng, pred, target, mask, true, margin);
      return {make_line_problem(std::move(target), std::move(mask), n, weights), to_vector(pred)};
    }
    case LossKind::Total: {
      TargetMaps target = TargetMaps::zeros(kCols * 4, kRows * 4, 4, kClasses);
      TargetMaps pred = target;
      target.n_objects = n;
      std::uniform_int_distribution<int> cls(0, kClasses - 1);
      const double lo = kProbEpsilon + margin;
      for (int b = 0; b < kNumBranches; ++b) {
        target.reg_mask[b] = random_mask(rng, kRows, kCols);
        target.regression[b] = random_grid(rng, kRegressionChannels, -3.0, 3.0);
        for (int r = 0; r < kRows; ++r) {
          for (int c = 0; c < kCols; ++c) {
            if (target.reg_mask[b](0, r, c)) target.heatmap[b](cls(rng), r, c) = 1.0;
          }
        }
        pred.heatmap[b] = random_grid(rng, kClasses, lo, 1.0 - lo);
        fill_line_prediction(rng, pred.regression[b], target.regression[b], target.reg_mask[b],
                             !weights.text_mode, margin);
      }
      auto point = flatten_prediction(pred);
      return {make_total_problem(std::move(target), weights), std::move(point)};
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown loss kind");
}

std::vector<GradCheckSummary> run_grad_checks(std::uint64_t seed, int samples, double step,
                                              double tolerance, double gradient_bias) {
  if (samples < 1) throw Error(ErrorCode::InvalidArgument, "samples must be >= 1");
  std::vector<GradCheckSummary> out;
  for (const LossKind kind : kAllLossKinds) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(kind) * 0x9E3779B97F4A7C15ULL);
    GradCheckSummary summary{kind, 0.0, samples, true};
    for (int s = 0; s < samples; ++s) {
      GradCheckCase test = sample_case(kind, rng);
      if (gradient_bias != 0.0) {
        test.fn.gradient = [inner = test.fn.gradient, gradient_bias](std::span<const double> p) {
          auto g = inner(p);
          for (auto& v : g) v += gradient_bias;
          return g;
        };
      }
      const GradCheckReport report = grad_check(test.fn, test.point, step, tolerance);
      summary.max_rel_error = std::max(summary.max_rel_error, report.max_rel_error);
      summary.passed = summary.passed && report.passed;
    }
    out.push_back(summary);
  }
  return out;
}

}  // namespace midline
