#pragma once

#include <string>
#include <vector>

#include "qdcap/density.hpp"
#include "qdcap/polygon.hpp"
#include "qdcap/solid.hpp"

namespace qdcap {

struct ContourPolygon {
  Polygon2D polygon;           // counterclockwise
  bool encloses_above = true;  // false: a hole, density inside is below the level
  bool is_dot = false;
  std::string conductor;       // seed association, empty when none
};

struct DotRegion {
  double level = 0.0;
  std::vector<ContourPolygon> polygons;
  std::string note;

  /// Index of the single polygon marked as dot; throws unless exactly one.
  std::size_t dot_index() const;
  const Polygon2D& dot() const { return polygons[dot_index()].polygon; }
  /// Even-odd membership in the above-level set.
  bool contains(const Point2& p) const;
};

struct Seed {
  std::string conductor;
  Point2 point = Point2::Zero();
  bool dot = false;
};

/// Marching squares over the cell-centre lattice, padded with a ring of
/// zero density at the map edge so every contour closes. Saddles are split
/// by the cell-centre average. A level outside the map's range yields an
/// empty region with a note.
DotRegion extract_contour(const DensityMap& map, double level);

/// Attaches each seed to the smallest above-level polygon containing it.
void classify(DotRegion& region, const std::vector<Seed>& seeds);

/// True if every vertex of inner's polygons lies in outer's above-level set.
bool nested_within(const DotRegion& inner, const DotRegion& outer);

/// Replaces (or adds) the conductor sheet `name` with the dot polygon of
/// `region`, extruded depth_nm below the sheet reference plane. Other
/// conductors and the registry order are unchanged. The edit is made on the
/// recipe document, so source_text of the result stays re-loadable and keeps
/// its parameter expressions.
ProcessRecipe promote_to_conductor(const ProcessRecipe& recipe, const DotRegion& region, double depth_nm,
                                   const std::string& name);
DeviceSolid promote_to_conductor(const DeviceSolid& solid, const DotRegion& region, double depth_nm,
                                 const std::string& name);

}  // namespace qdcap
