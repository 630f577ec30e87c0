#include "midline/geometry.hpp"

#include <algorithm>
#include <numbers>

#include "midline/error.hpp"

namespace midline {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateBox: return "DegenerateBox";
    case ErrorCode::InvalidGeometry: return "InvalidGeometry";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonBinaryGroundTruth: return "NonBinaryGroundTruth";
    case ErrorCode::KinkProximity: return "KinkProximity";
    case ErrorCode::NonConvexInput: return "NonConvexInput";
    case ErrorCode::UnknownClass: return "UnknownClass";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::AllLinesMalformed: return "AllLinesMalformed";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Format: return "Format";
  }
  return "Unknown";
}

double signed_area(std::span<const Point2> polygon) {
  double twice = 0.0;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) {
    twice += cross(polygon[i], polygon[(i + 1) % n]);
  }
  return 0.5 * twice;
}

namespace {

int orientation(Point2 a, Point2 b, Point2 c) {
  const double v = cross(b - a, c - a);
  return (v > 0.0) - (v < 0.0);
}

bool on_segment(Point2 a, Point2 b, Point2 p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

bool segments_intersect(Point2 a, Point2 b, Point2 c, Point2 d) {
  const int o1 = orientation(a, b, c);
  const int o2 = orientation(a, b, d);
  const int o3 = orientation(c, d, a);
  const int o4 = orientation(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

Point2 midpoint(Point2 a, Point2 b) { return (a + b) * 0.5; }

// |sin| of the segment direction against the x axis, compared without division.
bool more_vertical(const Segment& a, const Segment& b) {
  const Point2 da = a.ep2 - a.ep1;
  const Point2 db = b.ep2 - b.ep1;
  return std::abs(da.y) * norm(db) > std::abs(db.y) * norm(da);
}

}  // namespace

OrientedBox::OrientedBox(const Quad& corners, int class_id, double score, bool difficult)
    : corners_(corners), class_id_(class_id), score_(score), difficult_(difficult) {
  for (const auto& p : corners_) {
    if (!is_finite(p)) throw Error(ErrorCode::InvalidGeometry, "box corner is not finite");
  }
  if (class_id < 0) throw Error(ErrorCode::InvalidArgument, "negative class id");
  if (!(score >= 0.0 && score <= 1.0)) throw Error(ErrorCode::InvalidArgument, "score outside [0,1]");

  const double a = signed_area(corners_);
  if (std::abs(a) <= 1e-12) throw Error(ErrorCode::DegenerateBox, "box has zero area");
  if (segments_intersect(corners_[0], corners_[1], corners_[2], corners_[3]) ||
      segments_intersect(corners_[1], corners_[2], corners_[3], corners_[0])) {
    throw Error(ErrorCode::InvalidGeometry, "box polygon is self-intersecting");
  }
  if (a < 0.0) std::swap(corners_[1], corners_[3]);
}

double OrientedBox::area() const { return signed_area(corners_); }

Point2 OrientedBox::centroid() const {
  return (corners_[0] + corners_[1] + corners_[2] + corners_[3]) * 0.25;
}

bool OrientedBox::is_convex() const {
  for (std::size_t i = 0; i < 4; ++i) {
    const Point2 e0 = corners_[(i + 1) % 4] - corners_[i];
    const Point2 e1 = corners_[(i + 2) % 4] - corners_[(i + 1) % 4];
    const double scale = norm(e0) * norm(e1);
    if (cross(e0, e1) < -1e-12 * scale) return false;
  }
  return true;
}

OrientedBox OrientedBox::with_score(double score) const {
  OrientedBox out = *this;
  if (!(score >= 0.0 && score <= 1.0)) throw Error(ErrorCode::InvalidArgument, "score outside [0,1]");
  out.score_ = score;
  return out;
}

OrientedBox OrientedBox::with_class(int class_id) const {
  OrientedBox out = *this;
  if (class_id < 0) throw Error(ErrorCode::InvalidArgument, "negative class id");
  out.class_id_ = class_id;
  return out;
}

OrientedBox make_rotated_rect(Point2 center, double width, double height, double angle_rad,
                              int class_id) {
  const double c = std::cos(angle_rad);
  const double s = std::sin(angle_rad);
  const double hw = 0.5 * width;
  const double hh = 0.5 * height;
  const std::array<Point2, 4> local{{{hw, -hh}, {hw, hh}, {-hw, hh}, {-hw, -hh}}};
  Quad corners;
  for (std::size_t i = 0; i < 4; ++i) {
    corners[i] = {center.x + local[i].x * c - local[i].y * s,
                  center.y + local[i].x * s + local[i].y * c};
  }
  return OrientedBox(corners, class_id);
}

std::array<Segment, 2> midline_candidates(const OrientedBox& box) {
  const auto& p = box.corners();
  return {Segment{midpoint(p[0], p[1]), midpoint(p[2], p[3])},
          Segment{midpoint(p[1], p[2]), midpoint(p[3], p[0])}};
}

double segment_angle_deg(const Segment& s) {
  const Point2 d = s.ep2 - s.ep1;
  double deg = std::atan2(d.y, d.x) * 180.0 / std::numbers::pi;
  if (deg < 0.0) deg += 180.0;
  if (deg >= 180.0) deg -= 180.0;
  return deg;
}

namespace {

std::array<Segment, 2> checked_candidates(const OrientedBox& box) {
  auto cands = midline_candidates(box);
  if (cands[0].length() == 0.0 || cands[1].length() == 0.0) {
    throw Error(ErrorCode::DegenerateBox, "midline candidate has zero length");
  }
  return cands;
}

}  // namespace

double object_angle_deg(const OrientedBox& box) {
  const auto cands = checked_candidates(box);
  // Ties make candidate A the horizontal one, so B is taken as vertical.
  const Segment& vertical = more_vertical(cands[0], cands[1]) ? cands[0] : cands[1];
  return segment_angle_deg(vertical);
}

BranchId classify_angle(double theta_deg, BranchRange range) {
  return (theta_deg > range.low && theta_deg < range.high) ? BranchId::Horizontal
                                                           : BranchId::Oriented;
}

BranchId classify_branch(const OrientedBox& box, BranchRange range) {
  return classify_angle(object_angle_deg(box), range);
}

MidlinePair order_endpoints(MidlinePair pair) {
  auto& l1 = pair.l1;
  if (l1.ep1.x < l1.ep2.x || (l1.ep1.x == l1.ep2.x && l1.ep1.y > l1.ep2.y)) {
    std::swap(l1.ep1, l1.ep2);
  }
  auto& l2 = pair.l2;
  if (l2.ep1.y > l2.ep2.y || (l2.ep1.y == l2.ep2.y && l2.ep1.x < l2.ep2.x)) {
    std::swap(l2.ep1, l2.ep2);
  }
  return pair;
}

MidlinePair box_to_midlines(const OrientedBox& box, BranchRange range) {
  const auto cands = checked_candidates(box);
  const bool a_vertical = more_vertical(cands[0], cands[1]);
  const Segment& vertical = a_vertical ? cands[0] : cands[1];
  const BranchId branch = classify_angle(segment_angle_deg(vertical), range);

  MidlinePair pair;
  pair.branch = branch;
  if (branch == BranchId::Horizontal) {
    pair.l1 = a_vertical ? cands[1] : cands[0];
    pair.l2 = vertical;
  } else {
    const bool b_longer = cands[1].length() > cands[0].length();
    pair.l1 = b_longer ? cands[1] : cands[0];
    pair.l2 = b_longer ? cands[0] : cands[1];
  }
  return order_endpoints(pair);
}

Point2 intersection_point(const MidlinePair& pair) {
  return {(pair.l1.ep1.x + pair.l1.ep2.x + pair.l2.ep1.x + pair.l2.ep2.x) / 4.0,
          (pair.l1.ep1.y + pair.l1.ep2.y + pair.l2.ep1.y + pair.l2.ep2.y) / 4.0};
}

OrientedBox midlines_to_box(const MidlinePair& pair, int class_id, double score) {
  const Point2 c = intersection_point(pair);
  const Point2 u = (pair.l1.ep1 - pair.l1.ep2) * 0.5;
  const Point2 v = (pair.l2.ep1 - pair.l2.ep2) * 0.5;
  if (norm(u) == 0.0 || norm(v) == 0.0) {
    throw Error(ErrorCode::DegenerateBox, "midline has zero length");
  }
  return OrientedBox(Quad{c + u + v, c + u - v, c - u - v, c - u + v}, class_id, score);
}

}  // namespace midline
