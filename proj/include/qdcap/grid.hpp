#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "qdcap/grid_spec.hpp"
#include "qdcap/recipe.hpp"
#include "qdcap/solid.hpp"

namespace qdcap {


/// Nonuniform rectilinear grid with per-cell material and conductor labels.
/// Cell (i, j, k) has linear index i + nx * (j + ny * k).
struct VoxelGrid {
  std::array<std::vector<double>, 3> planes;  // strictly increasing, n+1 per axis
  std::vector<std::int16_t> material;
  std::vector<std::int16_t> conductor;        // 0 = none, else 1-based id
  std::vector<Material> materials;
  std::vector<std::string> conductors;
  double interface_z = 0.0;

  std::size_t n(int axis) const { return planes[static_cast<std::size_t>(axis)].size() - 1; }
  std::size_t nx() const { return n(0); }
  std::size_t ny() const { return n(1); }
  std::size_t nz() const { return n(2); }
  std::size_t cell_count() const { return nx() * ny() * nz(); }
  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const { return i + nx() * (j + ny() * k); }

  double width(int axis, std::size_t i) const {
    const auto& p = planes[static_cast<std::size_t>(axis)];
    return p[i + 1] - p[i];
  }
  double center(int axis, std::size_t i) const {
    const auto& p = planes[static_cast<std::size_t>(axis)];
    return 0.5 * (p[i] + p[i + 1]);
  }
  bool is_conductor(std::size_t cell) const { return conductor[cell] != 0; }
  double permittivity(std::size_t cell) const {
    return materials[static_cast<std::size_t>(material[cell])].relative_permittivity;
  }
  int conductor_id(std::string_view name) const;
};

/// Inserts every feature plane of the solid, fills the gaps at the local
/// target spacing with adjacent-width ratio <= 2, and labels each cell by
/// sampling the solid at its centroid. Throws ValidationError on a clamp
/// conflict (two exact interfaces closer than min_cell_nm) or when the cell
/// budget is exceeded.
VoxelGrid generate_grid(const DeviceSolid& solid, const GridSpec& spec);

/// Builds the plane list for one axis; exposed for testing.
std::vector<double> grid_axis(const std::vector<FeaturePlane>& features, double lo, double hi, int axis,
                              const GridSpec& spec);

struct GridReport {
  std::array<std::size_t, 3> counts{};
  std::size_t total = 0;
  std::vector<std::pair<std::string, double>> material_volume_nm3;
  std::vector<std::pair<std::string, double>> conductor_area_nm2;
  std::size_t dielectric_cells = 0;
};

GridReport grid_report(const VoxelGrid& grid);
std::string format_report(const GridReport& report);

}  // namespace qdcap
