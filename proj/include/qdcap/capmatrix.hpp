#pragma once

#include <Eigen/Core>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qdcap/field.hpp"

namespace qdcap {

struct SolveRecord {
  std::string conductor;
  std::size_t iterations = 0;
  double residual = 0.0;
  double seconds = 0.0;
};

/// Maxwell capacitance matrix in aF, rows and columns in registry order.
struct CapacitanceMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> names;
  std::vector<SolveRecord> solves;
  /// max |C_ij - C_ji| / max |C| before symmetrization.
  double raw_asymmetry = 0.0;
  std::size_t cell_count = 0;
  double tol = 0.0;

  Eigen::Index size() const { return values.rows(); }
  Eigen::Index index(std::string_view name) const;
  double operator()(std::string_view a, std::string_view b) const { return values(index(a), index(b)); }
};

CapacitanceMatrix make_matrix(std::vector<std::string> names, Eigen::MatrixXd values);

/// Charges induced on every conductor by 1 V on `driven` (0-based) and 0 V
/// elsewhere: column `driven` of the raw matrix. Throws SolverError naming the
/// conductor when the solve does not converge.
ChargeVector extract_column(const FieldOperator& op, int driven, const SolveOptions& options,
                            SolveRecord* record = nullptr);

/// One unit-drive solve per conductor, then (C + C^T) / 2.
CapacitanceMatrix extract_matrix(const FieldOperator& op, const SolveOptions& options = {});
CapacitanceMatrix extract_matrix(const VoxelGrid& grid, const SolveOptions& options = {});

struct MatrixDiagnostics {
  double asymmetry = 0.0;        // relative, pre-symmetrization when known
  double max_row_sum = 0.0;      // max_i |sum_j C_ij| / C_ii
  std::vector<std::pair<std::string, std::string>> positive_off_diagonal;
  std::vector<std::string> nonpositive_diagonal;
  bool symmetric = true;
  bool row_sums = true;
  bool signs = true;

  bool ok() const { return symmetric && row_sums && signs; }
};

/// Off-diagonal entries are tested against tol_rel * max|C| so that solver
/// noise on decoupled pairs is not reported as a sign error.
MatrixDiagnostics check_matrix(const CapacitanceMatrix& c, double tol_rel = 1e-3);
std::string format_diagnostics(const MatrixDiagnostics& d);

/// (name, -C(g, target)) for every g != target, then (target, C(target, target)).
std::vector<std::pair<std::string, double>> couplings_to(const CapacitanceMatrix& c, std::string_view target);

/// -C(gate, dot) / C(dot, dot).
double lever_arm(const CapacitanceMatrix& c, std::string_view gate, std::string_view dot);

}  // namespace qdcap
