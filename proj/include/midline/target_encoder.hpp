#pragma once

// Training targets for the two-branch middle-line head.
//
// Per branch the encoder writes C class heatmaps, 8 regression channels and a
// regression mask at output stride d. Regression channels are, in order,
// (dx, dy) of L1 endpoint 1, L1 endpoint 2, L2 endpoint 1, L2 endpoint 2,
// measured in input pixels from the position of the cell that stores them.
// Cell (row, col) sits at input position (col * d, row * d).

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "midline/geometry.hpp"
#include "midline/grid.hpp"

namespace midline {

inline constexpr int kRegressionChannels = 8;
inline constexpr int kNumBranches = 2;

struct Cell {
  int row = 0;
  int col = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

inline Point2 cell_position(Cell cell, int stride) {
  return {static_cast<double>(cell.col) * stride, static_cast<double>(cell.row) * stride};
}

/// Nearest cell to a feature-map position, rounding half up on each axis.
inline Cell round_to_cell(Point2 fm) {
  return {static_cast<int>(std::floor(fm.y + 0.5)), static_cast<int>(std::floor(fm.x + 0.5))};
}

struct DriftRegion {
  Point2 center;  // feature-map units
  double radius = 0.0;
  int object_index = -1;
  BranchId branch = BranchId::Oriented;
  MidlinePair midlines;
  std::vector<Cell> cells;  // all cells claimed before overlap resolution
};

struct TargetMaps {
  int stride = 4;
  int num_classes = 0;
  int width = 0;
  int height = 0;
  int image_w = 0;
  int image_h = 0;
  int n_objects = 0;
  std::array<Grid<double>, kNumBranches> heatmap;
  std::array<Grid<double>, kNumBranches> regression;
  std::array<Grid<std::uint8_t>, kNumBranches> reg_mask;
  std::vector<DriftRegion> regions;

  /// All-zero maps sized ceil(image / stride) per axis.
  static TargetMaps zeros(int image_w, int image_h, int stride, int num_classes);
};

struct EncoderConfig {
  int stride = 4;
  double drift_r = 16.0;
  BranchRange branches;
};

/// Drift radius in feature cells: min(r / stride, min(|L1|, |L2|) / (2 stride)),
/// raised just enough that the rounded center cell lies strictly inside.
double drift_radius(const MidlinePair& pair, int stride, double r);

/// Cells of the drift disc clipped to a width x height map. The rounded
/// center cell, clamped to the map, is always included.
std::vector<Cell> drift_cells(Point2 center, double radius, int width, int height);

/// Smallest polygon area wins a contested cell; ties go to the lower index.
int resolve_overlap(Cell cell, std::span<const int> candidates,
                    std::span<const OrientedBox> annotations);

/// Throws Error(OutOfBounds) when an intersection point falls outside the
/// image and Error(InvalidArgument) for a class id outside [0, num_classes).
/// Degenerate annotations are skipped.
TargetMaps encode_image(std::span<const OrientedBox> annotations, int image_w, int image_h,
                        int num_classes, const EncoderConfig& config = {});

/// Endpoints stored at a cell of a regression grid, in input pixels.
MidlinePair read_midlines(const Grid<double>& regression, Cell cell, int stride, BranchId branch);

}  // namespace midline
