#include "qdcap/capmatrix.hpp"

#include <cstdio>
#include <sstream>

#include "qdcap/error.hpp"
#include "qdcap/log.hpp"

namespace qdcap {

Eigen::Index CapacitanceMatrix::index(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<Eigen::Index>(i);
  throw ValidationError("unknown conductor '" + std::string(name) + "'");
}

CapacitanceMatrix make_matrix(std::vector<std::string> names, Eigen::MatrixXd values) {
  if (values.rows() != values.cols() || static_cast<std::size_t>(values.rows()) != names.size())
    throw ValidationError("matrix shape does not match the name list");
  CapacitanceMatrix c;
  c.names = std::move(names);
  c.values = std::move(values);
  return c;
}

ChargeVector extract_column(const FieldOperator& op, int driven, const SolveOptions& options, SolveRecord* record) {
  const auto& names = op.grid().conductors;
  DriveVector drive = DriveVector::Zero(static_cast<Eigen::Index>(names.size()));
  drive[driven] = 1.0;
  const FieldSolution sol = solve(op, drive, options);
  const std::string& name = names[static_cast<std::size_t>(driven)];
  char line[256];
  std::snprintf(line, sizeof line, "solve conductor=%s iters=%zu resid=%.3e seconds=%.3f", name.c_str(),
                sol.iterations, sol.residual, sol.seconds);
  log::info(line);
  if (!sol.converged) {
    std::ostringstream os;
    os << "solve for conductor '" << name << "' did not converge (residual " << sol.residual << " after "
       << sol.iterations << " iterations)";
    throw SolverError(os.str());
  }
  if (record) *record = {name, sol.iterations, sol.residual, sol.seconds};
  return conductor_charges(op, sol);
}

CapacitanceMatrix extract_matrix(const FieldOperator& op, const SolveOptions& options) {
  const auto& names = op.grid().conductors;
  const auto n = static_cast<Eigen::Index>(names.size());
  if (n < 2) throw ValidationError("capacitance extraction needs at least two conductors");
  CapacitanceMatrix c;
  c.names = names;
  c.values.resize(n, n);
  c.solves.resize(names.size());
  for (Eigen::Index i = 0; i < n; ++i)
    c.values.col(i) = extract_column(op, static_cast<int>(i), options, &c.solves[static_cast<std::size_t>(i)]);
  const double scale = c.values.cwiseAbs().maxCoeff();
  c.raw_asymmetry = scale > 0 ? (c.values - c.values.transpose()).cwiseAbs().maxCoeff() / scale : 0.0;
  const Eigen::MatrixXd sym = 0.5 * (c.values + c.values.transpose());
  c.values = sym;
  c.cell_count = op.grid().cell_count();
  c.tol = options.tol;
  std::ostringstream os;
  os << "matrix raw_asymmetry=" << c.raw_asymmetry;
  log::info(os.str());
  return c;
}

CapacitanceMatrix extract_matrix(const VoxelGrid& grid, const SolveOptions& options) {
  return extract_matrix(assemble(grid), options);
}

MatrixDiagnostics check_matrix(const CapacitanceMatrix& c, double tol_rel) {
  MatrixDiagnostics d;
  const auto& v = c.values;
  const double scale = v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
  const double now = scale > 0 ? (v - v.transpose()).cwiseAbs().maxCoeff() / scale : 0.0;
  d.asymmetry = std::max(now, c.raw_asymmetry);
  d.symmetric = d.asymmetry <= tol_rel;
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    const std::string& ni = c.names[static_cast<std::size_t>(i)];
    if (!(v(i, i) > 0.0)) {
      d.nonpositive_diagonal.push_back(ni);
      d.row_sums = false;
    } else {
      d.max_row_sum = std::max(d.max_row_sum, std::abs(v.row(i).sum()) / v(i, i));
    }
    for (Eigen::Index j = i + 1; j < v.cols(); ++j)
      if (v(i, j) > tol_rel * scale || v(j, i) > tol_rel * scale)
        d.positive_off_diagonal.emplace_back(ni, c.names[static_cast<std::size_t>(j)]);
  }
  d.row_sums = d.row_sums && d.max_row_sum <= tol_rel;
  d.signs = d.positive_off_diagonal.empty() && d.nonpositive_diagonal.empty();
  return d;
}

std::string format_diagnostics(const MatrixDiagnostics& d) {
  std::ostringstream os;
  os << "symmetry " << (d.symmetric ? "ok" : "FAIL") << " asymmetry=" << d.asymmetry << "\n";
  os << "row_sums " << (d.row_sums ? "ok" : "FAIL") << " max_rel=" << d.max_row_sum << "\n";
  os << "signs " << (d.signs ? "ok" : "FAIL") << "\n";
  for (const auto& [a, b] : d.positive_off_diagonal) os << "  positive off-diagonal " << a << "," << b << "\n";
  for (const auto& a : d.nonpositive_diagonal) os << "  non-positive diagonal " << a << "\n";
  return os.str();
}

std::vector<std::pair<std::string, double>> couplings_to(const CapacitanceMatrix& c, std::string_view target) {
  const Eigen::Index t = c.index(target);
  std::vector<std::pair<std::string, double>> out;
  for (Eigen::Index g = 0; g < c.size(); ++g)
    if (g != t) out.emplace_back(c.names[static_cast<std::size_t>(g)], -c.values(g, t));
  out.emplace_back(c.names[static_cast<std::size_t>(t)], c.values(t, t));
  return out;
}

double lever_arm(const CapacitanceMatrix& c, std::string_view gate, std::string_view dot) {
  const Eigen::Index g = c.index(gate), d = c.index(dot);
  if (g == d) throw ValidationError("lever arm needs distinct gate and dot");
  return -c.values(g, d) / c.values(d, d);
}

}  // namespace qdcap
