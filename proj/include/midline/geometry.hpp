#pragma once

// Oriented boxes and their middle-line representation.
//
// Coordinates are image pixels with y growing downward. A box's corners are
// stored with positive signed shoelace area computed on the raw (x, y)
// values; mirrored input orders are reversed at construction.

#include <array>
#include <cmath>
#include <span>

namespace midline {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Point2 operator*(Point2 a, double s) { return {a.x * s, a.y * s}; }
  friend constexpr Point2 operator*(double s, Point2 a) { return {a.x * s, a.y * s}; }
  friend constexpr Point2 operator/(Point2 a, double s) { return {a.x / s, a.y / s}; }
  friend constexpr bool operator==(Point2 a, Point2 b) = default;
};

constexpr double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }
inline bool is_finite(Point2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

/// Signed shoelace area of a closed polygon (positive for our canonical winding).
double signed_area(std::span<const Point2> polygon);

using Quad = std::array<Point2, 4>;

/// A quadrilateral annotation or detection.
///
/// Construction validates the polygon (finite, simple, positive area) and
/// normalizes the winding by keeping corner 0 and reversing the rest when the
/// signed area is negative. Throws Error(InvalidGeometry) for non-finite or
/// self-intersecting input and Error(DegenerateBox) for zero area.
class OrientedBox {
 public:
  explicit OrientedBox(const Quad& corners, int class_id = 0, double score = 1.0,
                       bool difficult = false);

  const Quad& corners() const noexcept { return corners_; }
  int class_id() const noexcept { return class_id_; }
  double score() const noexcept { return score_; }
  bool difficult() const noexcept { return difficult_; }

  double area() const;
  Point2 centroid() const;
  bool is_convex() const;

  OrientedBox with_score(double score) const;
  OrientedBox with_class(int class_id) const;

 private:
  Quad corners_;
  int class_id_;
  double score_;
  bool difficult_;
};

/// Builds a rectangle from center, side lengths and rotation (radians, measured
/// from +x toward +y). Corner 0 is center + (w/2, -h/2) rotated.
OrientedBox make_rotated_rect(Point2 center, double width, double height, double angle_rad,
                              int class_id = 0);

enum class BranchId { Horizontal = 1, Oriented = 2 };

inline int branch_index(BranchId b) { return b == BranchId::Horizontal ? 0 : 1; }
inline BranchId branch_from_index(int i) { return i == 0 ? BranchId::Horizontal : BranchId::Oriented; }

/// Open angle interval (degrees) routed to the Horizontal branch.
struct BranchRange {
  double low = 88.0;
  double high = 92.0;
};

struct Segment {
  Point2 ep1;
  Point2 ep2;

  double length() const { return distance(ep1, ep2); }
};

struct MidlinePair {
  Segment l1;
  Segment l2;
  BranchId branch = BranchId::Oriented;
};

/// The two midline candidates of a box: A joins the midpoints of edges p0p1
/// and p2p3, B joins the midpoints of p1p2 and p3p0.
std::array<Segment, 2> midline_candidates(const OrientedBox& box);

/// Angle of a segment against +x, folded into [0, 180) degrees.
double segment_angle_deg(const Segment& s);

/// Angle of the more vertical midline candidate, in [0, 180) degrees.
double object_angle_deg(const OrientedBox& box);

BranchId classify_angle(double theta_deg, BranchRange range = {});

/// Throws Error(DegenerateBox) when a midline candidate has zero length.
BranchId classify_branch(const OrientedBox& box, BranchRange range = {});

/// Puts endpoint 1 of l1 on the right (ties: smaller y) and endpoint 1 of l2
/// on top (ties: larger x).
MidlinePair order_endpoints(MidlinePair pair);

MidlinePair box_to_midlines(const OrientedBox& box, BranchRange range = {});

/// Mean of the four midline endpoints.
Point2 intersection_point(const MidlinePair& pair);

/// Parallelogram spanned by the half-midlines around the intersection point.
/// Rectangles round-trip exactly through box_to_midlines.
OrientedBox midlines_to_box(const MidlinePair& pair, int class_id = 0, double score = 1.0);

}  // namespace midline
