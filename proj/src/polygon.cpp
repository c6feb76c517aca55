#include "cdrgeo/polygon.hpp"

#include <algorithm>
#include <cmath>

namespace cdrgeo {
namespace {

double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

double orient(const Point& a, const Point& b, const Point& c) { return cross(b - a, c - a); }

int sign(double v) { return (v > 0.0) - (v < 0.0); }

bool on_segment(const Point& a, const Point& b, const Point& p) {
  return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
         std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
}

bool segments_intersect(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
  const int d1 = sign(orient(q1, q2, p1));
  const int d2 = sign(orient(q1, q2, p2));
  const int d3 = sign(orient(p1, p2, q1));
  const int d4 = sign(orient(p1, p2, q2));
  if (d1 * d2 < 0 && d3 * d4 < 0) return true;
  if (d1 == 0 && on_segment(q1, q2, p1)) return true;
  if (d2 == 0 && on_segment(q1, q2, p2)) return true;
  if (d3 == 0 && on_segment(p1, p2, q1)) return true;
  if (d4 == 0 && on_segment(p1, p2, q2)) return true;
  return false;
}

bool ring_contains(const Ring& ring, const Point& p) {
  bool inside = false;
  const std::size_t n = ring.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point& a = ring[i];
    const Point& b = ring[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

Ring ccw_copy(const Ring& ring) {
  Ring out = ring;
  if (signed_area(out) < 0.0) std::reverse(out.begin(), out.end());
  return out;
}

bool single_convex(const Polygon& p) { return p.rings.size() == 1 && is_convex(p.rings[0]); }

double area_against_convex(const Polygon& subject, const Ring& convex) {
  const Ring clip = ccw_copy(convex);
  double total = 0.0;
  for (const Ring& ring : subject.rings) total += signed_area(clip_to_convex(ring, clip));
  return total;
}

struct FanTriangle {
  Ring tri;  // CCW
  Box box;
  double sign = 1.0;
};

std::vector<FanTriangle> fan(const Polygon& poly, const Point& origin) {
  std::vector<FanTriangle> out;
  for (const Ring& ring : poly.rings) {
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
      Ring tri{origin, ring[i], ring[(i + 1) % n]};
      const double a = signed_area(tri);
      if (a == 0.0) continue;
      FanTriangle t;
      t.sign = a > 0.0 ? 1.0 : -1.0;
      if (a < 0.0) std::swap(tri[1], tri[2]);
      t.box = bounds(tri);
      t.tri = std::move(tri);
      out.push_back(std::move(t));
    }
  }
  return out;
}

}  // namespace

Ring Box::ring() const { return {lo, {hi.x(), lo.y()}, hi, {lo.x(), hi.y()}}; }

double signed_area(const Ring& ring) {
  const std::size_t n = ring.size();
  if (n < 3) return 0.0;
  // shoelace relative to the first vertex to limit cancellation
  const Point& o = ring[0];
  double twice = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) twice += cross(ring[i] - o, ring[i + 1] - o);
  return 0.5 * twice;
}

double area(const Polygon& poly) {
  double total = 0.0;
  for (const Ring& r : poly.rings) total += signed_area(r);
  return total;
}

Box bounds(const Ring& ring) {
  Box b{{INFINITY, INFINITY}, {-INFINITY, -INFINITY}};
  for (const Point& p : ring) {
    b.lo = b.lo.cwiseMin(p);
    b.hi = b.hi.cwiseMax(p);
  }
  return b;
}

Box bounds(const Polygon& poly) {
  Box b{{INFINITY, INFINITY}, {-INFINITY, -INFINITY}};
  for (const Ring& r : poly.rings) {
    const Box rb = bounds(r);
    b.lo = b.lo.cwiseMin(rb.lo);
    b.hi = b.hi.cwiseMax(rb.hi);
  }
  return b;
}

bool is_convex(const Ring& ring) {
  const std::size_t n = ring.size();
  if (n < 3) return false;
  int seen = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int s = sign(orient(ring[i], ring[(i + 1) % n], ring[(i + 2) % n]));
    if (s == 0) continue;
    if (seen == 0) seen = s;
    else if (s != seen) return false;
  }
  return seen != 0;
}

bool is_simple(const Ring& ring) {
  const std::size_t n = ring.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i)
    if (ring[i] == ring[(i + 1) % n]) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a1 = ring[i];
    const Point& a2 = ring[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      const Point& b1 = ring[j];
      const Point& b2 = ring[(j + 1) % n];
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) {
        // only the shared vertex may touch: reject folding back along the edge
        const Point& shared = j == i + 1 ? a2 : a1;
        const Point& other_a = j == i + 1 ? a1 : a2;
        const Point& other_b = j == i + 1 ? b2 : b1;
        if (orient(other_a, shared, other_b) == 0.0 &&
            (other_a - shared).dot(other_b - shared) > 0.0)
          return false;
        continue;
      }
      if (segments_intersect(a1, a2, b1, b2)) return false;
    }
  }
  return true;
}

bool contains(const Polygon& poly, const Point& p) {
  bool inside = false;
  for (const Ring& r : poly.rings)
    if (ring_contains(r, p)) inside = !inside;
  return inside;
}

Ring clip_to_convex(const Ring& subject, const Ring& clip) {
  Ring out = subject;
  const std::size_t m = clip.size();
  Ring input;
  for (std::size_t k = 0; k < m && !out.empty(); ++k) {
    const Point& a = clip[k];
    const Point& b = clip[(k + 1) % m];
    const Point edge = b - a;
    input.swap(out);
    out.clear();
    const std::size_t n = input.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point& p = input[i];
      const Point& q = input[(i + 1) % n];
      const double sp = cross(edge, p - a);
      const double sq = cross(edge, q - a);
      if (sp >= 0.0) out.push_back(p);
      if ((sp >= 0.0) != (sq >= 0.0)) {
        const double t = sp / (sp - sq);
        out.push_back(p + t * (q - p));
      }
    }
  }
  return out;
}

double intersection_area(const Polygon& a, const Polygon& b) {
  if (a.rings.empty() || b.rings.empty()) return 0.0;
  if (!bounds(a).overlaps(bounds(b))) return 0.0;
  if (single_convex(b)) return area_against_convex(a, b.rings[0]);
  if (single_convex(a)) return area_against_convex(b, a.rings[0]);

  // Signed fan decomposition: the indicator of each ring set is a signed sum
  // of triangle indicators, so the overlap is a double sum of convex overlaps.
  const Point origin = a.rings[0][0];
  const auto fa = fan(a, origin);
  const auto fb = fan(b, origin);
  double total = 0.0;
  for (const FanTriangle& ta : fa) {
    for (const FanTriangle& tb : fb) {
      if (!ta.box.overlaps(tb.box)) continue;
      total += ta.sign * tb.sign * signed_area(clip_to_convex(ta.tri, tb.tri));
    }
  }
  return total;
}

void normalize_orientation(Polygon& poly) {
  const std::size_t n = poly.rings.size();
  for (std::size_t i = 0; i < n; ++i) {
    Ring& ring = poly.rings[i];
    if (ring.empty()) continue;
    std::size_t depth = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && ring_contains(poly.rings[j], ring[0])) ++depth;
    const bool hole = depth % 2 == 1;
    const double a = signed_area(ring);
    if ((hole && a > 0.0) || (!hole && a < 0.0)) std::reverse(ring.begin(), ring.end());
  }
}

}  // namespace cdrgeo
