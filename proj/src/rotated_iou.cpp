#include "midline/rotated_iou.hpp"

#include <algorithm>

#include "midline/error.hpp"

namespace midline {

std::vector<Point2> clip_convex(std::span<const Point2> subject, std::span<const Point2> clip) {
  std::vector<Point2> output(subject.begin(), subject.end());
  std::vector<Point2> input;
  const std::size_t m = clip.size();
  for (std::size_t e = 0; e < m && !output.empty(); ++e) {
    const Point2 a = clip[e];
    const Point2 edge = clip[(e + 1) % m] - a;
    auto side = [&](Point2 p) { return cross(edge, p - a); };

    input.swap(output);
    output.clear();
    Point2 prev = input.back();
    double prev_side = side(prev);
    for (const Point2 cur : input) {
      const double cur_side = side(cur);
      if (cur_side >= 0.0) {
        if (prev_side < 0.0) output.push_back(prev + (cur - prev) * (prev_side / (prev_side - cur_side)));
        output.push_back(cur);
      } else if (prev_side >= 0.0) {
        output.push_back(prev + (cur - prev) * (prev_side / (prev_side - cur_side)));
      }
      prev = cur;
      prev_side = cur_side;
    }
  }
  return output;
}

double intersection_area(const OrientedBox& a, const OrientedBox& b) {
  const auto poly = clip_convex(a.corners(), b.corners());
  if (poly.size() < 3) return 0.0;
  const double area = signed_area(poly);
  return area < 1e-9 ? 0.0 : area;
}

double rotated_iou(const OrientedBox& a, const OrientedBox& b) {
  if (!a.is_convex() || !b.is_convex()) {
    throw Error(ErrorCode::NonConvexInput, "rotated IoU needs convex quadrilaterals");
  }
  // Evaluate in a canonical argument order so the result is bitwise symmetric.
  auto key = [](const OrientedBox& box) {
    std::array<double, 8> k;
    for (std::size_t i = 0; i < 4; ++i) {
      k[2 * i] = box.corners()[i].x;
      k[2 * i + 1] = box.corners()[i].y;
    }
    return k;
  };
  const bool swap = key(b) < key(a);
  const OrientedBox& first = swap ? b : a;
  const OrientedBox& second = swap ? a : b;

  const double inter = intersection_area(first, second);
  if (inter == 0.0) return 0.0;
  const double uni = first.area() + second.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace midline
