#pragma once

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <vector>

namespace qdcap {

using Point2 = Eigen::Vector2d;

/// Closed ring of vertices in nm; the closing edge is implied.
struct Polygon2D {
  std::vector<Point2> vertices;

  std::size_t size() const { return vertices.size(); }
  const Point2& operator[](std::size_t i) const { return vertices[i]; }
};

struct Box2 {
  Point2 lo{Point2::Constant(std::numeric_limits<double>::infinity())};
  Point2 hi{Point2::Constant(-std::numeric_limits<double>::infinity())};

  void extend(const Point2& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  bool empty() const { return (hi.array() < lo.array()).any(); }
};

/// Shoelace area; positive for counterclockwise rings.
double signed_area(const Polygon2D& poly);
inline double area(const Polygon2D& poly) { return std::abs(signed_area(poly)); }

Box2 bounds(const Polygon2D& poly);

/// Drops repeated and collinear vertices and orients the ring counterclockwise.
/// Throws ValidationError on fewer than three distinct vertices, zero area or
/// non-finite coordinates.
Polygon2D normalized(const Polygon2D& poly);

/// True if no two non-adjacent edges intersect.
bool is_simple(const Polygon2D& poly);

/// Even-odd point containment. Points on the boundary count as inside.
bool contains(const Polygon2D& poly, const Point2& p);

/// Signed Euclidean distance to the ring: negative inside, positive outside.
double signed_distance(const Polygon2D& poly, const Point2& p);

/// True when the interiors of a and b intersect (touching edges do not count).
bool polygons_overlap(const Polygon2D& a, const Polygon2D& b);

/// Mitered offset of a simple ring by delta_nm (positive grows outward).
/// Convex corners whose miter would reach farther than 2*|delta| from the
/// source vertex are beveled. Throws ValidationError when a shrink collapses
/// the ring or the result self-intersects.
Polygon2D offset_polygon(const Polygon2D& poly, double delta_nm);

}  // namespace qdcap
