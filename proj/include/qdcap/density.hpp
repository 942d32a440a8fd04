#pragma once

#include <Eigen/Core>
#include <map>
#include <string>
#include <vector>

#include "qdcap/field.hpp"
#include "qdcap/recipe.hpp"

namespace qdcap {

struct DensityParams {
  double critical_density = 1.5e11;  // cm^-2
  double dos_2d = 1.59e14;           // cm^-2 eV^-1
  double threshold_offset_V = 0.0;
  double mixing = 1.0;
  double sc_tol = 1e-6;
  std::size_t max_iterations = 200;
  SolveOptions solve;

  void validate() const;
};

/// Sheet density on the interface plane, sampled at cell centres.
/// n(i, j) belongs to (xs[i], ys[j]); x_planes/y_planes are the cell faces.
struct DensityMap {
  std::vector<double> xs, ys;
  std::vector<double> x_planes, y_planes;
  Eigen::ArrayXXd n;  // cm^-2
  std::map<std::string, double> biases;
  double interface_z = 0.0;
  double residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Orders a name -> volts map by the grid's conductor registry. Throws
/// ValidationError when a conductor has no bias.
DriveVector bias_vector(const VoxelGrid& grid, const std::map<std::string, double>& biases);

/// Zero-temperature Thomas-Fermi 2DEG in the silicon cell layer just below
/// the interface plane, solved self-consistently with the gate electrostatics.
/// A non-converged solve returns a map with converged = false.
DensityMap solve_thomas_fermi(const VoxelGrid& grid, const std::map<std::string, double>& biases,
                              const DensityParams& params = {});

/// The recipe with every conductor_sheet step removed: the device as the
/// density solve sees it, with gates only.
ProcessRecipe recipe_without_sheets(const ProcessRecipe& recipe);

}  // namespace qdcap
