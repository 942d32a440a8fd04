#include "qdcap/contour.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "qdcap/error.hpp"
#include "qdcap/log.hpp"

namespace qdcap {

std::size_t DotRegion::dot_index() const {
  std::size_t found = polygons.size(), count = 0;
  for (std::size_t i = 0; i < polygons.size(); ++i)
    if (polygons[i].is_dot) {
      found = i;
      ++count;
    }
  if (count != 1) throw ValidationError("region must have exactly one dot polygon (found " + std::to_string(count) + ")");
  return found;
}

bool DotRegion::contains(const Point2& p) const {
  bool inside = false;
  for (const auto& c : polygons)
    if (qdcap::contains(c.polygon, p)) inside = !inside;
  return inside;
}

namespace {

struct Segment {
  std::size_t from_edge, to_edge;
  Point2 from, to;
};

}  // namespace

DotRegion extract_contour(const DensityMap& map, double level) {
  if (!(level > 0.0)) throw ValidationError("contour level must be positive");
  DotRegion region;
  region.level = level;
  if (map.n.size() == 0 || level > map.n.maxCoeff() || level < map.n.minCoeff()) {
    std::ostringstream os;
    os << "level " << level << " lies outside the map range; region is empty";
    region.note = os.str();
    if (map.n.size() == 0 || level > map.n.maxCoeff()) return region;
  }

  // Node lattice: padding node, cell centres, padding node.
  const std::size_t mx = map.xs.size(), my = map.ys.size();
  std::vector<double> X{map.x_planes.front()}, Y{map.y_planes.front()};
  X.insert(X.end(), map.xs.begin(), map.xs.end());
  Y.insert(Y.end(), map.ys.begin(), map.ys.end());
  X.push_back(map.x_planes.back());
  Y.push_back(map.y_planes.back());
  const std::size_t NX = mx + 2, NY = my + 2;
  auto f = [&](std::size_t i, std::size_t j) {
    if (i == 0 || j == 0 || i == NX - 1 || j == NY - 1) return -level;
    return map.n(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(j - 1)) - level;
  };
  // Edge ids: horizontal (i,j)-(i+1,j) -> 2*(i + NX*j); vertical (i,j)-(i,j+1) -> +1.
  auto hedge = [&](std::size_t i, std::size_t j) { return 2 * (i + NX * j); };
  auto vedge = [&](std::size_t i, std::size_t j) { return 2 * (i + NX * j) + 1; };

  std::vector<Segment> segments;
  for (std::size_t j = 0; j + 1 < NY; ++j)
    for (std::size_t i = 0; i + 1 < NX; ++i) {
      // Corners counterclockwise: 0 (i,j), 1 (i+1,j), 2 (i+1,j+1), 3 (i,j+1).
      const double v[4] = {f(i, j), f(i + 1, j), f(i + 1, j + 1), f(i, j + 1)};
      const Point2 p[4] = {{X[i], Y[j]}, {X[i + 1], Y[j]}, {X[i + 1], Y[j + 1]}, {X[i], Y[j + 1]}};
      const std::size_t edge[4] = {hedge(i, j), vedge(i + 1, j), hedge(i, j + 1), vedge(i, j)};
      // Edge e joins corners e and e+1.
      std::vector<std::size_t> cut;
      for (std::size_t e = 0; e < 4; ++e)
        if ((v[e] > 0.0) != (v[(e + 1) % 4] > 0.0)) cut.push_back(e);
      if (cut.empty()) continue;
      auto point = [&](std::size_t e) {
        const std::size_t a = e, b = (e + 1) % 4;
        const double t = v[a] / (v[a] - v[b]);
        return Point2(p[a] + t * (p[b] - p[a]));
      };
      auto emit = [&](std::size_t e1, std::size_t e2) {
        Segment s{edge[e1], edge[e2], point(e1), point(e2)};
        const std::size_t above = v[e1] > 0.0 ? e1 : (e1 + 1) % 4;
        const Point2 d = s.to - s.from, w = p[above] - s.from;
        if (d.x() * w.y() - d.y() * w.x() < 0.0) {
          std::swap(s.from_edge, s.to_edge);
          std::swap(s.from, s.to);
        }
        segments.push_back(s);
      };
      if (cut.size() == 2) {
        emit(cut[0], cut[1]);
      } else {
        // Saddle: corners 0 and 2 share a sign. Join around the corners that
        // the centre value disagrees with.
        const double centre = 0.25 * (v[0] + v[1] + v[2] + v[3]);
        if ((centre > 0.0) == (v[0] > 0.0)) {
          emit(0, 1);
          emit(2, 3);
        } else {
          emit(3, 0);
          emit(1, 2);
        }
      }
    }

  std::unordered_map<std::size_t, std::size_t> by_start;
  for (std::size_t s = 0; s < segments.size(); ++s) by_start.emplace(segments[s].from_edge, s);
  std::vector<unsigned char> used(segments.size(), 0);
  for (std::size_t s0 = 0; s0 < segments.size(); ++s0) {
    if (used[s0]) continue;
    Polygon2D ring;
    std::size_t s = s0;
    while (!used[s]) {
      used[s] = 1;
      ring.vertices.push_back(segments[s].from);
      const auto it = by_start.find(segments[s].to_edge);
      if (it == by_start.end()) break;
      s = it->second;
    }
    if (ring.size() < 3) continue;
    const bool above = signed_area(ring) > 0.0;
    try {
      ContourPolygon c;
      c.polygon = normalized(ring);
      c.encloses_above = above;
      region.polygons.push_back(std::move(c));
    } catch (const ValidationError&) {
      // Degenerate loop of zero area.
    }
  }
  std::stable_sort(region.polygons.begin(), region.polygons.end(), [](const auto& a, const auto& b) {
    const Box2 ba = bounds(a.polygon), bb = bounds(b.polygon);
    return ba.lo.x() != bb.lo.x() ? ba.lo.x() < bb.lo.x() : ba.lo.y() < bb.lo.y();
  });
  return region;
}

void classify(DotRegion& region, const std::vector<Seed>& seeds) {
  for (auto& c : region.polygons) {
    c.is_dot = false;
    c.conductor.clear();
  }
  for (const auto& seed : seeds) {
    if (!region.contains(seed.point)) {
      log::warn("seed " + seed.conductor + " lies below the contour level");
      continue;
    }
    std::size_t best = region.polygons.size();
    double best_area = 0.0;
    for (std::size_t i = 0; i < region.polygons.size(); ++i) {
      const auto& c = region.polygons[i];
      if (!c.encloses_above || !contains(c.polygon, seed.point)) continue;
      const double a = area(c.polygon);
      if (best == region.polygons.size() || a < best_area) {
        best = i;
        best_area = a;
      }
    }
    if (best == region.polygons.size()) continue;
    region.polygons[best].conductor = seed.conductor;
    region.polygons[best].is_dot = region.polygons[best].is_dot || seed.dot;
  }
}

bool nested_within(const DotRegion& inner, const DotRegion& outer) {
  for (const auto& c : inner.polygons)
    for (const auto& v : c.polygon.vertices)
      if (!outer.contains(v)) return false;
  return true;
}

namespace {

using ojson = nlohmann::ordered_json;

ojson polygon_json(const Polygon2D& poly) {
  ojson ring = ojson::array();
  for (const auto& v : poly.vertices) ring.push_back({v.x(), v.y()});
  return ring;
}

}  // namespace

ProcessRecipe promote_to_conductor(const ProcessRecipe& recipe, const DotRegion& region, double depth_nm,
                                   const std::string& name) {
  if (!(depth_nm > 0.0)) throw ValidationError("promotion depth must be positive");
  const Polygon2D dot = region.dot();
  const Box2 b = bounds(dot);
  const Eigen::Vector3d lo = recipe.domain.lo(), hi = recipe.domain.hi();
  if (b.lo.x() < lo.x() || b.lo.y() < lo.y() || b.hi.x() > hi.x() || b.hi.y() > hi.y())
    throw ValidationError("dot polygon lies outside the silicon extent");
  if (recipe.source_text.empty()) throw ValidationError("recipe has no source document to edit");

  ojson doc = ojson::parse(recipe.source_text);
  std::string mask_name = "dot_" + name;
  for (int k = 2; recipe.find_mask(mask_name) != nullptr; ++k) mask_name = "dot_" + name + "_" + std::to_string(k);
  if (!doc.contains("masks")) doc["masks"] = ojson::array();
  doc["masks"].push_back({{"name", mask_name}, {"layer", "2deg"}, {"polygons", ojson::array({polygon_json(dot)})}});

  ojson new_step = {{"kind", "conductor_sheet"}, {"material", ""}, {"depth_nm", depth_nm}, {"mask", mask_name},
                    {"conductor", name}};
  ojson& steps = doc["steps"];
  std::size_t where = steps.size();
  for (std::size_t i = 0; i < recipe.steps.size(); ++i) {
    const auto& st = recipe.steps[i];
    const auto it = std::find(st.conductors.begin(), st.conductors.end(), name);
    if (it == st.conductors.end()) continue;
    if (st.kind != StepKind::conductor_sheet)
      throw ValidationError("conductor '" + name + "' is not a conductor sheet");
    new_step["material"] = st.material;
    if (steps[i].contains("reference_z_nm")) new_step["reference_z_nm"] = steps[i]["reference_z_nm"];
    if (st.conductors.size() == 1) {
      steps[i] = new_step;
      where = i;
      break;
    }
    // Split a multi-polygon sheet around the promoted conductor.
    const auto& polys = recipe.mask(*st.mask).polygons;
    const std::size_t k = static_cast<std::size_t>(it - st.conductors.begin());
    std::vector<ojson> parts;
    auto part = [&](std::size_t a, std::size_t e, const std::string& suffix) {
      if (a >= e) return;
      const std::string mname = *st.mask + suffix;
      ojson ps = ojson::array();
      ojson names = ojson::array();
      for (std::size_t q = a; q < e; ++q) {
        ps.push_back(polygon_json(polys[q]));
        names.push_back(st.conductors[q]);
      }
      doc["masks"].push_back({{"name", mname}, {"layer", "2deg"}, {"polygons", ps}});
      ojson s = steps[i];
      s.erase("conductor");
      s["mask"] = mname;
      s["conductors"] = names;
      parts.push_back(s);
    };
    part(0, k, "_before_" + name);
    parts.push_back(new_step);
    part(k + 1, polys.size(), "_after_" + name);
    ojson rebuilt = ojson::array();
    for (std::size_t q = 0; q < steps.size(); ++q) {
      if (q != i) rebuilt.push_back(steps[q]);
      else
        for (const auto& pj : parts) rebuilt.push_back(pj);
    }
    steps = std::move(rebuilt);
    where = i;
    break;
  }
  if (where == steps.size()) {
    for (const auto& m : recipe.materials)
      if (m.is_conductor) {
        new_step["material"] = m.name;
        break;
      }
    if (new_step["material"].get<std::string>().empty())
      throw ValidationError("recipe declares no conductor material for the promoted sheet");
    steps.push_back(new_step);
  }
  ProcessRecipe out = load_recipe(doc.dump(2), recipe.base_dir, recipe.overrides);
  build_solid(out);  // surfaces overlap and extent errors here
  return out;
}

DeviceSolid promote_to_conductor(const DeviceSolid& solid, const DotRegion& region, double depth_nm,
                                 const std::string& name) {
  return build_solid(promote_to_conductor(solid.recipe(), region, depth_nm, name));
}

}  // namespace qdcap
