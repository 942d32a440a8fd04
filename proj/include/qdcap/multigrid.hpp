#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <memory>
#include <vector>

#include "qdcap/stencil.hpp"

namespace qdcap {

struct MultigridOptions {
  int smoothing_sweeps = 2;
  std::size_t coarsest_cells = 1200;
  double coarse_scale = 1.0;
};

/// Aggregation multigrid for Stencil7 operators. Fine cells are grouped into
/// 2x2x2 (or semi-coarsened 2x2x1 etc.) blocks; the coarse operator is the
/// Galerkin product with piecewise-constant prolongation, which is again a
/// 7-point stencil. One symmetric V-cycle with red-black Gauss-Seidel is an
/// SPD preconditioner.
class Multigrid {
 public:
  using Vector = Eigen::VectorXd;

  Multigrid() = default;
  explicit Multigrid(std::shared_ptr<const Stencil7<double>> fine, const MultigridOptions& options = {});

  /// z = M^{-1} r.
  void apply(const Vector& r, Vector& z) const;

  std::size_t levels() const { return levels_.size() + 1; }

 private:
  struct Level {
    Stencil7<double> op;
    std::array<std::size_t, 3> factor{1, 1, 1};  // coarsening from the previous level
    mutable Vector x, b;
  };

  void cycle(std::size_t level, const Vector& b, Vector& x) const;
  const Stencil7<double>& op(std::size_t level) const;

  std::shared_ptr<const Stencil7<double>> fine_;
  std::vector<Level> levels_;  // levels_[0] is the first coarse level
  MultigridOptions options_;
  std::vector<std::ptrdiff_t> dense_index_;
  Eigen::LLT<Eigen::MatrixXd> coarse_llt_;
};

void gauss_seidel_rb(const Stencil7<double>& A, const Eigen::VectorXd& b, Eigen::VectorXd& x, bool forward);

}  // namespace qdcap
