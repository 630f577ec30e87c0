#include "midline/decoder.hpp"

#include <algorithm>
#include <cmath>

#include "midline/error.hpp"
#include "midline/rotated_iou.hpp"

namespace midline {

std::vector<Component> extract_components(const Grid<double>& heatmap, int channel,
                                          double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "threshold must lie in (0, 1)");
  }
  const int rows = heatmap.rows();
  const int cols = heatmap.cols();
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(rows) * cols, 0);
  std::vector<Component> out;
  std::vector<Cell> stack;

  auto above = [&](int r, int c) { return heatmap(channel, r, c) > threshold; };
  auto flat = [cols](int r, int c) { return static_cast<std::size_t>(r) * cols + c; };

  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (seen[flat(r, c)] || !above(r, c)) continue;
      Component comp;
      comp.class_id = channel;
      seen[flat(r, c)] = 1;
      stack.push_back({r, c});
      while (!stack.empty()) {
        const Cell cell = stack.back();
        stack.pop_back();
        comp.cells.push_back(cell);
        comp.score = std::max(comp.score, heatmap(channel, cell.row, cell.col));
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const int nr = cell.row + dr;
            const int nc = cell.col + dc;
            if (nr < 0 || nc < 0 || nr >= rows || nc >= cols) continue;
            if (seen[flat(nr, nc)] || !above(nr, nc)) continue;
            seen[flat(nr, nc)] = 1;
            stack.push_back({nr, nc});
          }
        }
      }
      std::sort(comp.cells.begin(), comp.cells.end(), [](Cell a, Cell b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
      });
      out.push_back(std::move(comp));
    }
  }
  return out;
}

Cell lookup_cell(const Component& comp) {
  double sr = 0.0;
  double sc = 0.0;
  for (const Cell cell : comp.cells) {
    sr += cell.row;
    sc += cell.col;
  }
  const double n = static_cast<double>(comp.cells.size());
  return round_to_cell({sc / n, sr / n});
}

Detection component_to_detection(const Component& comp, const Grid<double>& regression, int stride) {
  if (comp.cells.empty()) throw Error(ErrorCode::InvalidArgument, "empty component");
  const Cell cell = lookup_cell(comp);
  if (cell.row < 0 || cell.col < 0 || cell.row >= regression.rows() || cell.col >= regression.cols()) {
    throw Error(ErrorCode::OutOfBounds, "component lookup cell outside the map");
  }
  const MidlinePair pair = order_endpoints(read_midlines(regression, cell, stride, comp.branch));
  const double score = std::clamp(comp.score, 0.0, 1.0);
  return {midlines_to_box(pair, comp.class_id, score), comp.branch};
}

DecodeResult decode(const TargetMaps& maps, const DecoderConfig& config) {
  DecodeResult result;
  for (int b = 0; b < kNumBranches; ++b) {
    const auto& hm = maps.heatmap[b];
    const auto& reg = maps.regression[b];
    if (hm.channels() != maps.num_classes || hm.rows() != maps.height || hm.cols() != maps.width ||
        reg.channels() != kRegressionChannels || reg.rows() != maps.height ||
        reg.cols() != maps.width) {
      throw Error(ErrorCode::ShapeMismatch, "map grids disagree with the map header");
    }
    const BranchId branch = branch_from_index(b);
    for (int cls = 0; cls < maps.num_classes; ++cls) {
      for (Component& comp : extract_components(hm, cls, config.threshold)) {
        comp.branch = branch;
        ++result.components;
        try {
          result.detections.push_back(component_to_detection(comp, reg, maps.stride));
        } catch (const Error& e) {
          if (e.code() != ErrorCode::DegenerateBox && e.code() != ErrorCode::InvalidGeometry) throw;
          ++result.dropped_degenerate;
        }
      }
    }
  }
  result.detections = merge_branches(result.detections, config.merge_iou);
  return result;
}

namespace {

struct Bounds {
  double x0, y0, x1, y1;
};

Bounds bounds_of(const OrientedBox& box) {
  Bounds b{box.corners()[0].x, box.corners()[0].y, box.corners()[0].x, box.corners()[0].y};
  for (const Point2 p : box.corners()) {
    b.x0 = std::min(b.x0, p.x);
    b.y0 = std::min(b.y0, p.y);
    b.x1 = std::max(b.x1, p.x);
    b.y1 = std::max(b.y1, p.y);
  }
  return b;
}

bool overlaps(const Bounds& a, const Bounds& b) {
  return a.x0 < b.x1 && b.x0 < a.x1 && a.y0 < b.y1 && b.y0 < a.y1;
}

}  // namespace

std::vector<Detection> merge_branches(const std::vector<Detection>& dets, double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "merge IoU threshold must lie in (0, 1)");
  }
  std::vector<std::size_t> horizontal;
  std::vector<std::size_t> oriented;
  std::vector<Bounds> bounds;
  bounds.reserve(dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) {
    bounds.push_back(bounds_of(dets[i].box));
    (dets[i].branch == BranchId::Horizontal ? horizontal : oriented).push_back(i);
  }

  std::vector<bool> dropped(dets.size(), false);
  for (const std::size_t h : horizontal) {
    for (const std::size_t o : oriented) {
      if (dets[h].box.class_id() != dets[o].box.class_id()) continue;
      if (!overlaps(bounds[h], bounds[o])) continue;
      if (rotated_iou(dets[h].box, dets[o].box) <= iou_threshold) continue;
      if (dets[h].box.score() >= dets[o].box.score()) {
        dropped[o] = true;
      } else {
        dropped[h] = true;
      }
    }
  }

  std::vector<Detection> out;
  out.reserve(dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (!dropped[i]) out.push_back(dets[i]);
  }
  return out;
}

}  // namespace midline
