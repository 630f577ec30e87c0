#pragma once

#include <span>
#include <vector>

#include "midline/geometry.hpp"

namespace midline {

/// Sutherland-Hodgman clip of `subject` against the convex polygon `clip`.
/// Both polygons must have positive signed area.
std::vector<Point2> clip_convex(std::span<const Point2> subject, std::span<const Point2> clip);

/// Intersection area of two convex boxes; results below 1e-9 are reported as 0.
double intersection_area(const OrientedBox& a, const OrientedBox& b);

/// Intersection over union of two convex quadrilaterals. Throws
/// Error(NonConvexInput) if either box is not convex. Exactly symmetric in
/// its arguments.
double rotated_iou(const OrientedBox& a, const OrientedBox& b);

}  // namespace midline
