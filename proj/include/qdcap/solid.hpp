#pragma once

#include <Eigen/Core>
#include <array>
#include <memory>
#include <string>
#include <vector>

#include "qdcap/recipe.hpp"

namespace qdcap {

/// Material index into DeviceSolid::materials() and 1-based conductor id
/// (0 = not a conductor).
struct SolidSample {
  int material = 0;
  int conductor = 0;
};

/// A candidate grid plane. Hard planes are exact interfaces; soft planes come
/// from conformal coverage and may be dropped when they crowd a hard plane.
struct FeaturePlane {
  double coord = 0.0;
  bool hard = true;
};

class DeviceSolid;

/// Evaluates the solid along one vertical line; lateral work is done once.
class ColumnProbe {
 public:
  SolidSample sample(double z) const;

 private:
  friend class DeviceSolid;
  const DeviceSolid* solid_ = nullptr;
  std::vector<double> lateral_;   // signed distance to each step's mask union
  std::vector<int> polygon_;      // index of the containing polygon, -1 if none
};

/// Volumetric device model produced by replaying a ProcessRecipe. Immutable.
class DeviceSolid {
 public:
  const ProcessRecipe& recipe() const { return recipe_; }

  /// Recipe materials, plus "air" (eps_r = 1) appended when not declared.
  const std::vector<Material>& materials() const { return materials_; }
  int air_index() const { return air_index_; }

  /// Conductor registry in declaration order; id k maps to conductors()[k-1].
  const std::vector<std::string>& conductors() const { return conductors_; }
  int conductor_id(std::string_view name) const;

  const DomainBox& domain() const { return recipe_.domain; }

  /// Top of the substrate step: the Si/oxide interface for sheet conductors.
  double interface_z() const { return interface_z_; }

  SolidSample sample(const Eigen::Vector3d& p) const;
  ColumnProbe column(double x, double y) const;

  /// Candidate grid planes per axis, sorted, inside the open domain.
  const std::array<std::vector<FeaturePlane>, 3>& feature_planes() const { return planes_; }

  /// Planar z-extent [lo, hi] of each step (sheets: their depth range).
  std::pair<double, double> step_z_range(std::size_t step) const;

 private:
  friend DeviceSolid build_solid(const ProcessRecipe& recipe);
  friend class ColumnProbe;

  struct StepGeometry {
    StepKind kind = StepKind::planar_film;
    int material = 0;
    std::vector<int> conductor_ids;  // size 0, 1 or one per polygon
    std::vector<Polygon2D> polygons;
    std::vector<Box2> boxes;
    double z_lo = 0.0;
    double z_hi = 0.0;
    double thickness = 0.0;
    bool masked = false;
  };

  ProcessRecipe recipe_;
  std::vector<Material> materials_;
  int air_index_ = 0;
  std::vector<std::string> conductors_;
  std::vector<StepGeometry> steps_;
  double interface_z_ = 0.0;
  double distance_cap_ = 0.0;
  std::array<std::vector<FeaturePlane>, 3> planes_;
};

/// Replays the recipe. Throws ValidationError when a mask leaves the domain or
/// a conductor sheet overlaps a conductor from an earlier step.
DeviceSolid build_solid(const ProcessRecipe& recipe);

struct ConductorExtent {
  std::string name;
  Eigen::Vector3d lo = Eigen::Vector3d::Zero();
  Eigen::Vector3d hi = Eigen::Vector3d::Zero();
  double volume_nm3 = 0.0;
  int components = 0;
};

struct SolidReport {
  std::size_t conductor_count = 0;
  std::vector<ConductorExtent> conductors;
  std::vector<std::pair<std::string, std::string>> shorts;
  std::vector<std::string> warnings;

  bool ok() const { return shorts.empty(); }
};

/// Samples the solid on a lattice snapped to its feature planes (nominal
/// spacing lattice_nm) and reports extents, touching conductor pairs and
/// disconnected or empty conductors.
SolidReport validate_solid(const DeviceSolid& solid, double lattice_nm = 20.0);

std::string format_report(const SolidReport& report);

}  // namespace qdcap
