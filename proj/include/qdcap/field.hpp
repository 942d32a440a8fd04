#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <vector>

#include "qdcap/grid.hpp"
#include "qdcap/multigrid.hpp"
#include "qdcap/stencil.hpp"

namespace qdcap {

/// Conductor potentials in volts, indexed by conductor id - 1.
using DriveVector = Eigen::VectorXd;
/// Induced conductor charges in aF*V.
using ChargeVector = Eigen::VectorXd;

/// Conductance between a dielectric cell and an adjacent conductor cell.
struct ConductorFace {
  std::uint32_t cell = 0;
  std::int32_t conductor = 0;  // 0-based
  double g = 0.0;              // aF
};

/// Finite-volume Laplace operator on the dielectric cells of a grid, with
/// conductor cells eliminated as Dirichlet data and zero-flux outer faces.
/// Holds a reference to the grid, which must outlive it.
class FieldOperator {
 public:
  const VoxelGrid& grid() const { return *grid_; }
  const Stencil7<double>& stencil() const { return *stencil_; }
  const Multigrid& multigrid() const { return *multigrid_; }
  const std::vector<ConductorFace>& conductor_faces() const { return faces_; }

  std::size_t unknowns() const { return unknowns_; }
  std::size_t floating_regions() const { return floating_regions_; }
  std::size_t floating_cells() const { return floating_cells_; }

  /// Conductance between two face-adjacent dielectric cells (0 otherwise).
  double coupling(std::size_t a, std::size_t b) const;

  /// Right-hand side contributed by the conductor potentials.
  Eigen::VectorXd rhs(const DriveVector& drive) const;

  /// Copy with `shift` added to the diagonal of the active cells.
  FieldOperator shifted(const Eigen::VectorXd& shift) const;

 private:
  friend FieldOperator assemble(const VoxelGrid& grid, const MultigridOptions& mg);

  const VoxelGrid* grid_ = nullptr;
  std::shared_ptr<const Stencil7<double>> stencil_;
  std::shared_ptr<const Multigrid> multigrid_;
  std::vector<ConductorFace> faces_;
  std::size_t unknowns_ = 0;
  std::size_t floating_regions_ = 0;
  std::size_t floating_cells_ = 0;
  MultigridOptions mg_options_;
};

/// Face conductance of two cells of widths ha, hb (normal to the face) and
/// relative permittivities ea, eb sharing a face of area `area`.
double face_conductance(double area, double ha, double ea, double hb, double eb);

/// Throws ValidationError when the grid has no conductor or no dielectric cell.
/// Dielectric regions touching no conductor are pinned to 0 V and reported.
FieldOperator assemble(const VoxelGrid& grid, const MultigridOptions& mg = {});

enum class Preconditioner { multigrid, jacobi };

struct SolveOptions {
  double tol = 1e-8;
  std::size_t max_iterations = 0;  // 0: 50 * sqrt(unknowns)
  Preconditioner preconditioner = Preconditioner::multigrid;
};

struct FieldSolution {
  Eigen::VectorXd phi;  // per cell; conductor cells hold their drive potential
  DriveVector drive;
  std::size_t iterations = 0;
  double residual = 0.0;
  double seconds = 0.0;
  bool converged = false;
};

FieldSolution solve(const FieldOperator& op, const DriveVector& drive, const SolveOptions& options = {});

/// Solves op * x = b for an arbitrary right-hand side (b must vanish on
/// inactive cells). `guess`, when given, seeds the iteration.
FieldSolution solve_system(const FieldOperator& op, const Eigen::VectorXd& b, const DriveVector& drive,
                           const SolveOptions& options, const Eigen::VectorXd* guess = nullptr);

/// Q_k = sum over faces of g * (V_k - phi_cell). Throws SolverError for an
/// unconverged solution.
ChargeVector conductor_charges(const FieldOperator& op, const FieldSolution& solution);

}  // namespace qdcap
