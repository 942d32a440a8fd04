#include "qdcap/density.hpp"

#include <algorithm>

#include <cmath>
#include <sstream>

#include "qdcap/constants.hpp"
#include "qdcap/error.hpp"
#include "qdcap/log.hpp"

namespace qdcap {

void DensityParams::validate() const {
  if (!(critical_density > 0.0)) throw ValidationError("critical_density must be positive");
  if (!(dos_2d > 0.0)) throw ValidationError("dos_2d must be positive");
  if (!(mixing > 0.0 && mixing <= 1.0)) throw ValidationError("mixing must lie in (0, 1]");
  if (!(sc_tol > 0.0)) throw ValidationError("sc_tol must be positive");
  if (!std::isfinite(threshold_offset_V)) throw ValidationError("threshold_offset_V must be finite");
}

DriveVector bias_vector(const VoxelGrid& grid, const std::map<std::string, double>& biases) {
  DriveVector v(static_cast<Eigen::Index>(grid.conductors.size()));
  for (std::size_t i = 0; i < grid.conductors.size(); ++i) {
    const auto it = biases.find(grid.conductors[i]);
    if (it == biases.end()) throw ValidationError("no bias given for gate '" + grid.conductors[i] + "'");
    v[static_cast<Eigen::Index>(i)] = it->second;
  }
  for (const auto& [name, volts] : biases)
    if (std::find(grid.conductors.begin(), grid.conductors.end(), name) == grid.conductors.end())
      throw ValidationError("bias given for unknown conductor '" + name + "'");
  return v;
}

ProcessRecipe recipe_without_sheets(const ProcessRecipe& recipe) {
  ProcessRecipe out = recipe;
  std::erase_if(out.steps, [](const ProcessStep& s) { return s.kind == StepKind::conductor_sheet; });
  return out;
}

DensityMap solve_thomas_fermi(const VoxelGrid& grid, const std::map<std::string, double>& biases,
                              const DensityParams& params) {
  params.validate();
  const DriveVector drive = bias_vector(grid, biases);
  const auto& zp = grid.planes[2];
  std::ptrdiff_t layer = -1;
  for (std::size_t k = 0; k + 1 < zp.size(); ++k)
    if (std::abs(zp[k + 1] - grid.interface_z) < 1e-6) layer = static_cast<std::ptrdiff_t>(k);
  if (layer < 0) throw ValidationError("grid has no plane at the interface z");

  const FieldOperator op = assemble(grid);
  const std::size_t nx = grid.nx(), ny = grid.ny(), n = grid.cell_count();
  const double dos_nm = params.dos_2d * kNm2ToCm2;  // nm^-2 V^-1
  const double vt = params.threshold_offset_V;

  std::vector<std::size_t> cells(nx * ny, n);
  Eigen::VectorXd kappa = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < ny; ++j)
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t c = grid.index(i, j, static_cast<std::size_t>(layer));
      if (!op.stencil().active[c]) continue;
      cells[i + nx * j] = c;
      kappa[static_cast<Eigen::Index>(c)] = kElementaryCharge * dos_nm * grid.width(0, i) * grid.width(1, j);
    }

  DensityMap map;
  for (std::size_t i = 0; i < nx; ++i) map.xs.push_back(grid.center(0, i));
  for (std::size_t j = 0; j < ny; ++j) map.ys.push_back(grid.center(1, j));
  map.x_planes = grid.planes[0];
  map.y_planes = grid.planes[1];
  map.biases = biases;
  map.interface_z = grid.interface_z;
  map.n = Eigen::ArrayXXd::Zero(static_cast<Eigen::Index>(nx), static_cast<Eigen::Index>(ny));

  const Eigen::VectorXd b0 = op.rhs(drive);
  auto density = [&](const Eigen::VectorXd& phi) {
    Eigen::ArrayXXd out = Eigen::ArrayXXd::Zero(static_cast<Eigen::Index>(nx), static_cast<Eigen::Index>(ny));
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t i = 0; i < nx; ++i) {
        const std::size_t c = cells[i + nx * j];
        if (c < n) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                       params.dos_2d * std::max(0.0, phi[static_cast<Eigen::Index>(c)] - vt);
      }
    return out;
  };

  // Active-set iteration: cells with phi > V_T carry the linearised charge
  // -kappa (phi - V_T), which enters the operator as a diagonal shift.
  FieldSolution sol = solve(op, drive, params.solve);
  if (!sol.converged) throw SolverError("density: initial field solve did not converge");
  Eigen::VectorXd phi = sol.phi;
  Eigen::ArrayXXd n_prev = density(phi);
  std::vector<unsigned char> active_set(n, 0);
  for (std::size_t it = 1; it <= params.max_iterations; ++it) {
    Eigen::VectorXd shift = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    Eigen::VectorXd b = b0;
    for (std::size_t c : cells) {
      if (c >= n || phi[static_cast<Eigen::Index>(c)] <= vt) continue;
      const auto e = static_cast<Eigen::Index>(c);
      shift[e] = kappa[e];
      b[e] += kappa[e] * vt;
    }
    const FieldOperator shifted = op.shifted(shift);
    sol = solve_system(shifted, b, drive, params.solve, &phi);
    if (!sol.converged) throw SolverError("density: field solve did not converge");
    phi = (1.0 - params.mixing) * phi + params.mixing * sol.phi;
    const Eigen::ArrayXXd n_new = density(phi);
    const double scale = std::max(n_new.abs().maxCoeff(), params.critical_density * 1e-6);
    map.residual = (n_new - n_prev).abs().maxCoeff() / scale;
    map.iterations = it;
    n_prev = n_new;
    std::ostringstream os;
    os << "density iteration " << it << " change=" << map.residual;
    log::debug(os.str());
    if (map.residual <= params.sc_tol) {
      map.converged = true;
      break;
    }
  }
  map.n = n_prev;
  if (!map.converged) log::warn("density: self-consistency not reached within the iteration cap");
  return map;
}

}  // namespace qdcap
