#pragma once

#include <vector>

#include <Eigen/Core>

namespace cdrgeo {

using Point = Eigen::Vector2d;

/// Open ring: the closing vertex is implicit (back() != front()).
using Ring = std::vector<Point>;

/// Planar ring set. Outer rings are counter-clockwise, holes clockwise, so the
/// signed area of the set is its area.
struct Polygon {
  std::vector<Ring> rings;
};

struct Box {
  Point lo{0.0, 0.0};
  Point hi{0.0, 0.0};

  double width() const { return hi.x() - lo.x(); }
  double height() const { return hi.y() - lo.y(); }
  double area() const { return width() * height(); }
  bool overlaps(const Box& other) const {
    return lo.x() <= other.hi.x() && other.lo.x() <= hi.x() &&
           lo.y() <= other.hi.y() && other.lo.y() <= hi.y();
  }
  Ring ring() const;  // counter-clockwise
};

double signed_area(const Ring& ring);
double area(const Polygon& poly);
Box bounds(const Ring& ring);
Box bounds(const Polygon& poly);

bool is_convex(const Ring& ring);

/// True when no two non-adjacent edges intersect and adjacent edges meet only
/// at their shared vertex. O(n^2).
bool is_simple(const Ring& ring);

/// Even-odd point-in-polygon over all rings.
bool contains(const Polygon& poly, const Point& p);

/// Clips `subject` against a convex counter-clockwise `clip` ring
/// (Sutherland-Hodgman). Exact in area for any simple subject.
Ring clip_to_convex(const Ring& subject, const Ring& clip);

/// area(a ∩ b) for arbitrary simple ring sets.
double intersection_area(const Polygon& a, const Polygon& b);

/// Reorients so outer rings are CCW and holes CW (hole = ring contained in
/// another ring of the same set).
void normalize_orientation(Polygon& poly);

}  // namespace cdrgeo
