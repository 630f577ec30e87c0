#include "midline/target_encoder.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "midline/error.hpp"

namespace midline {

TargetMaps TargetMaps::zeros(int image_w, int image_h, int stride, int num_classes) {
  if (image_w < 1 || image_h < 1) throw Error(ErrorCode::InvalidArgument, "image size must be positive");
  if (stride < 1) throw Error(ErrorCode::InvalidArgument, "stride must be >= 1");
  if (num_classes < 0) throw Error(ErrorCode::InvalidArgument, "negative class count");

  TargetMaps maps;
  maps.stride = stride;
  maps.num_classes = num_classes;
  maps.image_w = image_w;
  maps.image_h = image_h;
  maps.width = (image_w + stride - 1) / stride;
  maps.height = (image_h + stride - 1) / stride;
  for (int b = 0; b < kNumBranches; ++b) {
    maps.heatmap[b] = Grid<double>(num_classes, maps.height, maps.width);
    maps.regression[b] = Grid<double>(kRegressionChannels, maps.height, maps.width);
    maps.reg_mask[b] = Grid<std::uint8_t>(1, maps.height, maps.width);
  }
  return maps;
}

double drift_radius(const MidlinePair& pair, int stride, double r) {
  if (stride < 1) throw Error(ErrorCode::InvalidArgument, "stride must be >= 1");
  if (!(r > 0.0)) throw Error(ErrorCode::InvalidArgument, "drift r must be positive");

  const double shortest = std::min(pair.l1.length(), pair.l2.length());
  const double radius = std::min(r / stride, shortest / (2.0 * stride));

  const Point2 center = intersection_point(pair) / static_cast<double>(stride);
  const Cell nearest = round_to_cell(center);
  const double to_nearest = distance(center, {static_cast<double>(nearest.col),
                                              static_cast<double>(nearest.row)});
  return std::max(radius, std::nextafter(to_nearest, std::numeric_limits<double>::infinity()));
}

std::vector<Cell> drift_cells(Point2 center, double radius, int width, int height) {
  std::vector<Cell> cells;
  if (width < 1 || height < 1) return cells;

  const int r0 = std::max(0, static_cast<int>(std::floor(center.y - radius)));
  const int r1 = std::min(height - 1, static_cast<int>(std::ceil(center.y + radius)));
  const int c0 = std::max(0, static_cast<int>(std::floor(center.x - radius)));
  const int c1 = std::min(width - 1, static_cast<int>(std::ceil(center.x + radius)));
  for (int row = r0; row <= r1; ++row) {
    for (int col = c0; col <= c1; ++col) {
      if (std::hypot(col - center.x, row - center.y) < radius) cells.push_back({row, col});
    }
  }

  Cell nearest = round_to_cell(center);
  nearest.row = std::clamp(nearest.row, 0, height - 1);
  nearest.col = std::clamp(nearest.col, 0, width - 1);
  if (std::find(cells.begin(), cells.end(), nearest) == cells.end()) {
    cells.push_back(nearest);
    std::sort(cells.begin(), cells.end(), [](Cell a, Cell b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
  }
  return cells;
}

int resolve_overlap(Cell /*cell*/, std::span<const int> candidates,
                    std::span<const OrientedBox> annotations) {
  if (candidates.empty()) throw Error(ErrorCode::InvalidArgument, "no overlap candidates");
  int best = candidates.front();
  for (const int idx : candidates.subspan(1)) {
    const double a = std::abs(annotations[idx].area());
    const double b = std::abs(annotations[best].area());
    if (a < b || (a == b && idx < best)) best = idx;
  }
  return best;
}

TargetMaps encode_image(std::span<const OrientedBox> annotations, int image_w, int image_h,
                        int num_classes, const EncoderConfig& config) {
  TargetMaps maps = TargetMaps::zeros(image_w, image_h, config.stride, num_classes);
  const int stride = config.stride;

  for (std::size_t i = 0; i < annotations.size(); ++i) {
    const OrientedBox& box = annotations[i];
    if (box.class_id() >= num_classes) {
      throw Error(ErrorCode::InvalidArgument,
                  "class id " + std::to_string(box.class_id()) + " outside vocabulary");
    }
    MidlinePair pair;
    try {
      pair = box_to_midlines(box, config.branches);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::DegenerateBox) continue;
      throw;
    }
    const Point2 ip = intersection_point(pair);
    if (ip.x < 0.0 || ip.y < 0.0 || ip.x > image_w || ip.y > image_h) {
      throw Error(ErrorCode::OutOfBounds, "object " + std::to_string(i) + " center outside image");
    }

    DriftRegion region;
    region.center = ip / static_cast<double>(stride);
    region.radius = drift_radius(pair, stride, config.drift_r);
    region.object_index = static_cast<int>(i);
    region.branch = pair.branch;
    region.midlines = pair;
    region.cells = drift_cells(region.center, region.radius, maps.width, maps.height);
    maps.regions.push_back(std::move(region));
  }
  maps.n_objects = static_cast<int>(maps.regions.size());

  // Owner of each cell per branch, as an index into maps.regions.
  const std::size_t plane = static_cast<std::size_t>(maps.width) * maps.height;
  std::array<std::vector<int>, kNumBranches> owner;
  for (auto& o : owner) o.assign(plane, -1);

  for (std::size_t k = 0; k < maps.regions.size(); ++k) {
    const DriftRegion& region = maps.regions[k];
    auto& own = owner[branch_index(region.branch)];
    for (const Cell cell : region.cells) {
      int& slot = own[static_cast<std::size_t>(cell.row) * maps.width + cell.col];
      if (slot < 0) {
        slot = static_cast<int>(k);
        continue;
      }
      const std::array<int, 2> contenders{maps.regions[slot].object_index, region.object_index};
      const int winner = resolve_overlap(cell, contenders, annotations);
      if (winner == region.object_index) slot = static_cast<int>(k);
    }
  }

  for (int b = 0; b < kNumBranches; ++b) {
    auto& hm = maps.heatmap[b];
    auto& reg = maps.regression[b];
    auto& mask = maps.reg_mask[b];
    for (int row = 0; row < maps.height; ++row) {
      for (int col = 0; col < maps.width; ++col) {
        const int k = owner[b][static_cast<std::size_t>(row) * maps.width + col];
        if (k < 0) continue;
        const DriftRegion& region = maps.regions[k];
        const Point2 q = cell_position({row, col}, stride);
        const MidlinePair& m = region.midlines;
        const std::array<Point2, 4> eps{m.l1.ep1, m.l1.ep2, m.l2.ep1, m.l2.ep2};
        for (int e = 0; e < 4; ++e) {
          reg(2 * e, row, col) = eps[e].x - q.x;
          reg(2 * e + 1, row, col) = eps[e].y - q.y;
        }
        hm(annotations[region.object_index].class_id(), row, col) = 1.0;
        mask(0, row, col) = 1;
      }
    }
  }
  return maps;
}

MidlinePair read_midlines(const Grid<double>& regression, Cell cell, int stride, BranchId branch) {
  if (regression.channels() != kRegressionChannels) {
    throw Error(ErrorCode::ShapeMismatch, "regression grid needs 8 channels");
  }
  const Point2 q = cell_position(cell, stride);
  auto at = [&](int e) {
    return Point2{q.x + regression(2 * e, cell.row, cell.col),
                  q.y + regression(2 * e + 1, cell.row, cell.col)};
  };
  MidlinePair pair;
  pair.l1 = {at(0), at(1)};
  pair.l2 = {at(2), at(3)};
  pair.branch = branch;
  return pair;
}

}  // namespace midline
