#include "qdcap/polygon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "qdcap/error.hpp"

namespace qdcap {
namespace {

double cross(const Point2& a, const Point2& b) { return a.x() * b.y() - a.y() * b.x(); }

double segment_distance(const Point2& p, const Point2& a, const Point2& b) {
  const Point2 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (a + t * ab - p).norm();
}

int orientation(const Point2& a, const Point2& b, const Point2& c) {
  const double v = cross(b - a, c - a);
  const double scale = std::max({(b - a).norm(), (c - a).norm(), 1.0});
  if (std::abs(v) <= 1e-12 * scale * scale) return 0;
  return v > 0 ? 1 : -1;
}

bool on_segment(const Point2& a, const Point2& b, const Point2& p) {
  return p.x() <= std::max(a.x(), b.x()) + 1e-12 && p.x() >= std::min(a.x(), b.x()) - 1e-12 &&
         p.y() <= std::max(a.y(), b.y()) + 1e-12 && p.y() >= std::min(a.y(), b.y()) - 1e-12;
}

bool segments_intersect(const Point2& p1, const Point2& p2, const Point2& q1, const Point2& q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

// Strict crossing: the segments pass through each other's interiors.
bool segments_cross(const Point2& p1, const Point2& p2, const Point2& q1, const Point2& q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  return o1 * o2 < 0 && o3 * o4 < 0;
}

std::optional<Point2> line_intersection(const Point2& p, const Point2& d, const Point2& q,
                                        const Point2& e) {
  const double denom = cross(d, e);
  if (std::abs(denom) < 1e-12) return std::nullopt;
  const double t = cross(q - p, e) / denom;
  return p + t * d;
}

}  // namespace

double signed_area(const Polygon2D& poly) {
  double a = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) a += cross(poly[i], poly[(i + 1) % n]);
  return 0.5 * a;
}

Box2 bounds(const Polygon2D& poly) {
  Box2 b;
  for (const auto& v : poly.vertices) b.extend(v);
  return b;
}

Polygon2D normalized(const Polygon2D& poly) {
  for (const auto& v : poly.vertices)
    if (!v.allFinite()) throw ValidationError("polygon has a non-finite coordinate");

  std::vector<Point2> pts;
  for (const auto& v : poly.vertices)
    if (pts.empty() || (v - pts.back()).norm() > 1e-9) pts.push_back(v);
  while (pts.size() > 1 && (pts.front() - pts.back()).norm() <= 1e-9) pts.pop_back();

  // Remove collinear vertices until stable.
  bool changed = true;
  while (changed && pts.size() >= 3) {
    changed = false;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto& a = pts[(i + pts.size() - 1) % pts.size()];
      const auto& b = pts[i];
      const auto& c = pts[(i + 1) % pts.size()];
      if (orientation(a, b, c) == 0) {
        pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        break;
      }
    }
  }
  if (pts.size() < 3) throw ValidationError("polygon needs at least 3 distinct vertices");

  Polygon2D out{std::move(pts)};
  const double a = signed_area(out);
  if (std::abs(a) < 1e-9) throw ValidationError("polygon has zero area");
  if (a < 0) std::reverse(out.vertices.begin(), out.vertices.end());
  return out;
}

bool is_simple(const Polygon2D& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& a = poly[i];
    const Point2& b = poly[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      if (segments_intersect(a, b, poly[j], poly[(j + 1) % n])) return false;
    }
  }
  return true;
}

bool contains(const Polygon2D& poly, const Point2& p) {
  const std::size_t n = poly.size();
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point2& a = poly[i];
    const Point2& b = poly[j];
    if (segment_distance(p, a, b) < 1e-9) return true;
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x();
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

double signed_distance(const Polygon2D& poly, const Point2& p) {
  const std::size_t n = poly.size();
  double d = std::numeric_limits<double>::infinity();
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point2& a = poly[i];
    const Point2& b = poly[j];
    d = std::min(d, segment_distance(p, a, b));
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x();
      if (p.x() < x) inside = !inside;
    }
  }
  return inside ? -d : d;
}

bool polygons_overlap(const Polygon2D& a, const Polygon2D& b) {
  const Box2 ba = bounds(a), bb = bounds(b);
  if ((ba.hi.array() <= bb.lo.array()).any() || (bb.hi.array() <= ba.lo.array()).any())
    return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      if (segments_cross(a[i], a[(i + 1) % a.size()], b[j], b[(j + 1) % b.size()])) return true;
  // No crossings: either nested, disjoint, or touching. Probe edge midpoints
  // nudged inward so that shared edges do not count.
  auto interior_probe = [](const Polygon2D& p, std::size_t i) {
    const Point2 e = p[(i + 1) % p.size()] - p[i];
    const Point2 inward(-e.y(), e.x());
    return Point2(0.5 * (p[i] + p[(i + 1) % p.size()]) + 1e-6 * inward.normalized());
  };
  for (std::size_t i = 0; i < a.size(); ++i)
    if (signed_distance(b, interior_probe(a, i)) < -1e-9) return true;
  for (std::size_t j = 0; j < b.size(); ++j)
    if (signed_distance(a, interior_probe(b, j)) < -1e-9) return true;
  return false;
}

Polygon2D offset_polygon(const Polygon2D& poly, double delta_nm) {
  const Polygon2D src = normalized(poly);
  if (delta_nm == 0.0) return src;

  const std::size_t n = src.size();
  const double miter_limit = 2.0 * std::abs(delta_nm);
  std::vector<Point2> out;
  out.reserve(2 * n);

  auto outward = [&](std::size_t i) {
    const Point2 e = (src[(i + 1) % n] - src[i]).normalized();
    return Point2(e.y(), -e.x());
  };

  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t prev = (i + n - 1) % n;
    const Point2 n0 = outward(prev);
    const Point2 n1 = outward(i);
    const Point2& v = src[i];
    const Point2 d0 = src[i] - src[prev];
    const Point2 d1 = src[(i + 1) % n] - src[i];
    const auto miter = line_intersection(v + delta_nm * n0, d0, v + delta_nm * n1, d1);
    // A corner is "convex with respect to the offset" when the offset moves
    // away from it; only those can spike and need beveling.
    const bool convex = cross(d0, d1) > 0.0;
    const bool opening = (convex && delta_nm > 0.0) || (!convex && delta_nm < 0.0);
    if (miter && (!opening || (*miter - v).norm() <= miter_limit + 1e-12)) {
      out.push_back(*miter);
    } else {
      out.push_back(v + delta_nm * n0);
      out.push_back(v + delta_nm * n1);
    }
  }

  Polygon2D result{std::move(out)};
  const double a = signed_area(result);
  if (!(a > 1e-9)) throw ValidationError("offset collapses polygon to empty");
  // Every offset vertex must sit at least |delta| from the source ring; a
  // vertex closer than that means an edge was swallowed by its neighbours.
  const double tol = 1e-6 * std::max(1.0, std::abs(delta_nm));
  for (const auto& v : result.vertices) {
    const double sd = signed_distance(src, v);
    if (delta_nm < 0.0 ? sd > delta_nm + tol : sd < delta_nm - tol)
      throw ValidationError("offset collapses polygon features");
  }
  if (!is_simple(result)) throw ValidationError("offset polygon self-intersects");
  return normalized(result);
}

}  // namespace qdcap
