#pragma once

#include <Eigen/Core>
#include <string>
#include <string_view>
#include <vector>

#include "qdcap/capmatrix.hpp"
#include "qdcap/contour.hpp"
#include "qdcap/density.hpp"
#include "qdcap/grid.hpp"
#include "qdcap/sensitivity.hpp"

namespace qdcap {

/// `#` metadata lines, a header row of names, then one row per conductor with
/// entries in aF to 4 significant digits.
std::string export_matrix_csv(const CapacitanceMatrix& c);
CapacitanceMatrix load_matrix_csv(std::string_view text);

/// Conductor names made SPICE-safe: non-alphanumerics become '_', collisions
/// get an index suffix.
std::vector<std::string> sanitize_names(const std::vector<std::string>& names);

/// SPICE3 subcircuit with one capacitor per pair whose |C_ij| >= floor_aF.
/// Throws ValidationError on a positive off-diagonal entry above the floor.
std::string export_spice(const CapacitanceMatrix& c, std::string_view name, double floor_aF = 0.01);

/// Legacy ASCII rectilinear grid with cell data `material`, `conductor` and,
/// when given, `phi`.
std::string export_vtk(const VoxelGrid& grid, const Eigen::VectorXd* phi = nullptr);

std::string export_density(const DensityMap& map);

/// Mask document ({"masks": [...]}) that load_masks and mask_files accept.
/// The dot polygon is named dot_<conductor>.
std::string export_contours(const DotRegion& region);

std::string export_sweep(const SweepTable& table);

std::string read_text(const std::string& path);
void write_text(const std::string& path, std::string_view text);

}  // namespace qdcap
