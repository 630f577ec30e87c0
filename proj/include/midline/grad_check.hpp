#pragma once

// Central finite-difference verification of the analytic loss gradients.

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "midline/loss.hpp"

namespace midline {

/// A scalar function of a flat parameter vector with its analytic gradient.
struct Differentiable {
  std::string name;
  std::function<double(std::span<const double>)> value;
  std::function<std::vector<double>(std::span<const double>)> gradient;
  /// Distance (in parameter units) from the point to the nearest place where
  /// the function stops being smooth: a SmoothL1 kink or a clamp boundary.
  std::function<double(std::span<const double>)> smooth_margin;
};

struct GradCheckReport {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t n_coords = 0;
  bool passed = false;
};

/// Compares the analytic gradient against (f(x + h e_i) - f(x - h e_i)) / 2h
/// for every coordinate. Relative error uses max(|analytic|, |numeric|, 1e-6)
/// as denominator. Throws Error(KinkProximity) when the point sits within
/// 10 * step of a non-smooth point.
GradCheckReport grad_check(const Differentiable& fn, std::span<const double> point, double step,
                           double tolerance);

Differentiable make_focal_problem(Grid<double> gt, int n_objects, double alpha_focal);
Differentiable make_endpoint_problem(Grid<double> target_reg, Grid<std::uint8_t> mask,
                                     int n_objects);
Differentiable make_collinear_problem(Grid<std::uint8_t> mask, int n_objects);
Differentiable make_vertical_problem(Grid<std::uint8_t> mask, int n_objects);
Differentiable make_line_problem(Grid<double> target_reg, Grid<std::uint8_t> mask, int n_objects,
                                 LossWeights weights);
/// Parameters: hm_b1, hm_b2, reg_b1, reg_b2 flattened in that order.
Differentiable make_total_problem(TargetMaps target, LossWeights weights);

std::vector<double> flatten_prediction(const TargetMaps& pred);
TargetMaps unflatten_prediction(std::span<const double> params, const TargetMaps& like);

enum class LossKind { Focal, Endpoint, Collinear, Vertical, Line, Total };

std::string_view loss_name(LossKind kind);
inline constexpr std::array<LossKind, 6> kAllLossKinds{LossKind::Focal,     LossKind::Endpoint,
                                                       LossKind::Collinear, LossKind::Vertical,
                                                       LossKind::Line,      LossKind::Total};

struct GradCheckCase {
  Differentiable fn;
  std::vector<double> point;
};

/// Random small problem with a point at least `margin` away from every
/// non-smooth location.
GradCheckCase sample_case(LossKind kind, std::mt19937_64& rng, double margin = 0.02);

struct GradCheckSummary {
  LossKind kind;
  double max_rel_error = 0.0;
  int samples = 0;
  bool passed = false;
};

/// Runs `samples` random cases per loss. A nonzero `gradient_bias` is added
/// to every analytic gradient entry (negative control).
std::vector<GradCheckSummary> run_grad_checks(std::uint64_t seed, int samples, double step,
                                              double tolerance, double gradient_bias = 0.0);

}  // namespace midline
