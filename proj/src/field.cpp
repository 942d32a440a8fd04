#include "qdcap/field.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <sstream>

#include "qdcap/constants.hpp"
#include "qdcap/error.hpp"
#include "qdcap/log.hpp"
#include "qdcap/pcg.hpp"

namespace qdcap {

double face_conductance(double area, double ha, double ea, double hb, double eb) {
  return kEpsilon0 * area / (0.5 * ha / ea + 0.5 * hb / eb);
}

double FieldOperator::coupling(std::size_t a, std::size_t b) const {
  if (a > b) std::swap(a, b);
  const auto& d = stencil_->dims;
  const std::size_t ia[3] = {a % d[0], (a / d[0]) % d[1], a / (d[0] * d[1])};
  const std::size_t ib[3] = {b % d[0], (b / d[0]) % d[1], b / (d[0] * d[1])};
  for (std::size_t ax = 0; ax < 3; ++ax) {
    bool neighbour = ib[ax] == ia[ax] + 1;
    for (std::size_t o = 0; o < 3; ++o)
      if (o != ax) neighbour = neighbour && ib[o] == ia[o];
    if (neighbour) return stencil_->g[ax][static_cast<Eigen::Index>(a)];
  }
  return 0.0;
}

Eigen::VectorXd FieldOperator::rhs(const DriveVector& drive) const {
  if (static_cast<std::size_t>(drive.size()) != grid_->conductors.size())
    throw ValidationError("drive length does not match the conductor count");
  if (!drive.allFinite()) throw ValidationError("drive has non-finite entries");
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(stencil_->size()));
  for (const auto& f : faces_) b[f.cell] += f.g * drive[f.conductor];
  return b;
}

FieldOperator FieldOperator::shifted(const Eigen::VectorXd& shift) const {
  auto st = std::make_shared<Stencil7<double>>(*stencil_);
  for (std::size_t c = 0; c < st->size(); ++c)
    if (st->active[c]) st->diag[static_cast<Eigen::Index>(c)] += shift[static_cast<Eigen::Index>(c)];
  FieldOperator out = *this;
  out.stencil_ = st;
  out.multigrid_ = std::make_shared<Multigrid>(st, mg_options_);
  return out;
}

FieldOperator assemble(const VoxelGrid& grid, const MultigridOptions& mg) {
  if (grid.conductors.empty()) throw ValidationError("grid has no conductors");
  const std::size_t n = grid.cell_count();
  auto st = std::make_shared<Stencil7<double>>();
  st->dims = {grid.nx(), grid.ny(), grid.nz()};
  for (auto& g : st->g) g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  st->diag = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
  st->active.assign(n, 0);
  const auto strides = st->strides();

  FieldOperator op;
  op.grid_ = &grid;
  op.mg_options_ = mg;
  std::size_t unknowns = 0;
  for (std::size_t c = 0; c < n; ++c)
    if (!grid.is_conductor(c)) {
      st->active[c] = 1;
      st->diag[static_cast<Eigen::Index>(c)] = 0.0;
      ++unknowns;
    }
  if (unknowns == 0) throw ValidationError("grid has no dielectric cells");

  const std::size_t nx = grid.nx(), ny = grid.ny(), nz = grid.nz();
  for (std::size_t k = 0; k < nz; ++k)
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t i = 0; i < nx; ++i) {
        const std::size_t c = grid.index(i, j, k);
        const std::size_t idx[3] = {i, j, k};
        const double w[3] = {grid.width(0, i), grid.width(1, j), grid.width(2, k)};
        for (int a = 0; a < 3; ++a) {
          const auto au = static_cast<std::size_t>(a);
          if (idx[a] + 1 >= st->dims[au]) continue;
          const std::size_t nb = c + strides[au];
          const bool dc = !grid.is_conductor(c), dn = !grid.is_conductor(nb);
          if (!dc && !dn) continue;
          const double area = w[(a + 1) % 3] * w[(a + 2) % 3];
          const double h_nb = grid.width(a, idx[a] + 1);
          if (dc && dn) {
            const double g = face_conductance(area, w[a], grid.permittivity(c), h_nb, grid.permittivity(nb));
            st->g[au][static_cast<Eigen::Index>(c)] = g;
            st->diag[static_cast<Eigen::Index>(c)] += g;
            st->diag[static_cast<Eigen::Index>(nb)] += g;
          } else {
            const std::size_t d = dc ? c : nb;
            const std::size_t m = dc ? nb : c;
            const double h = dc ? w[a] : h_nb;
            const double g = kEpsilon0 * grid.permittivity(d) * area / (0.5 * h);
            st->diag[static_cast<Eigen::Index>(d)] += g;
            op.faces_.push_back({static_cast<std::uint32_t>(d), grid.conductor[m] - 1, g});
          }
        }
      }
  std::sort(op.faces_.begin(), op.faces_.end(), [](const ConductorFace& a, const ConductorFace& b) {
    return a.cell != b.cell ? a.cell < b.cell : a.conductor < b.conductor;
  });

  // Dielectric components with no conductor contact are pinned to zero.
  std::vector<unsigned char> anchored(n, 0);
  for (const auto& f : op.faces_) anchored[f.cell] = 1;
  std::vector<std::int32_t> comp(n, -1);
  std::vector<std::size_t> stack;
  std::int32_t ncomp = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (!st->active[s] || comp[s] >= 0) continue;
    std::vector<std::size_t> members;
    bool touches = false;
    comp[s] = ncomp;
    stack.push_back(s);
    while (!stack.empty()) {
      const std::size_t c = stack.back();
      stack.pop_back();
      members.push_back(c);
      touches = touches || anchored[c];
      const std::size_t i = c % nx, j = (c / nx) % ny, k = c / (nx * ny);
      const std::size_t idx[3] = {i, j, k};
      for (int a = 0; a < 3; ++a) {
        const auto au = static_cast<std::size_t>(a);
        if (idx[a] + 1 < st->dims[au] && st->g[au][static_cast<Eigen::Index>(c)] > 0.0 &&
            comp[c + strides[au]] < 0) {
          comp[c + strides[au]] = ncomp;
          stack.push_back(c + strides[au]);
        }
        if (idx[a] > 0 && st->g[au][static_cast<Eigen::Index>(c - strides[au])] > 0.0 &&
            comp[c - strides[au]] < 0) {
          comp[c - strides[au]] = ncomp;
          stack.push_back(c - strides[au]);
        }
      }
    }
    ++ncomp;
    if (touches) continue;
    ++op.floating_regions_;
    op.floating_cells_ += members.size();
    for (std::size_t c : members) {
      st->active[c] = 0;
      st->diag[static_cast<Eigen::Index>(c)] = 1.0;
      for (auto& g : st->g) g[static_cast<Eigen::Index>(c)] = 0.0;
      --unknowns;
    }
  }
  if (op.floating_regions_ > 0) {
    std::ostringstream os;
    os << op.floating_regions_ << " dielectric region(s) with " << op.floating_cells_
       << " cells touch no conductor; pinned to 0 V";
    log::warn(os.str());
  }
  if (unknowns == 0) throw ValidationError("no dielectric cell is coupled to a conductor");
  op.unknowns_ = unknowns;
  op.stencil_ = st;
  op.multigrid_ = std::make_shared<Multigrid>(st, mg);
  return op;
}

FieldSolution solve_system(const FieldOperator& op, const Eigen::VectorXd& b, const DriveVector& drive,
                           const SolveOptions& options, const Eigen::VectorXd* guess) {
  if (!(options.tol > 0.0 && options.tol < 1.0)) throw ValidationError("tol must lie in (0, 1)");
  const auto t0 = std::chrono::steady_clock::now();
  const auto& A = op.stencil();
  const std::size_t cap = options.max_iterations > 0
                              ? options.max_iterations
                              : static_cast<std::size_t>(std::ceil(50.0 * std::sqrt(double(std::max<std::size_t>(op.unknowns(), 1)))));
  FieldSolution sol;
  sol.drive = drive;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
  if (guess) {
    x = *guess;
    for (std::size_t c = 0; c < A.size(); ++c)
      if (!A.active[c]) x[static_cast<Eigen::Index>(c)] = 0.0;
  }
  auto apply = [&](const Eigen::VectorXd& v, Eigen::VectorXd& y) { A.apply(v, y); };
  PcgResult res;
  if (options.preconditioner == Preconditioner::multigrid) {
    const auto& mg = op.multigrid();
    res = pcg(apply, [&](const Eigen::VectorXd& r, Eigen::VectorXd& z) { mg.apply(r, z); }, b, x, options.tol, cap);
  } else {
    res = pcg(apply, [&](const Eigen::VectorXd& r, Eigen::VectorXd& z) { z = r.cwiseQuotient(A.diag); }, b, x,
              options.tol, cap);
  }
  sol.iterations = res.iterations;
  sol.residual = res.relative_residual;
  sol.converged = res.converged;
  const auto& grid = op.grid();
  for (std::size_t c = 0; c < A.size(); ++c)
    if (grid.conductor[c] != 0) x[static_cast<Eigen::Index>(c)] = drive[grid.conductor[c] - 1];
  sol.phi = std::move(x);
  sol.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

FieldSolution solve(const FieldOperator& op, const DriveVector& drive, const SolveOptions& options) {
  return solve_system(op, op.rhs(drive), drive, options);
}

ChargeVector conductor_charges(const FieldOperator& op, const FieldSolution& solution) {
  if (!solution.converged) throw SolverError("charges requested from an unconverged solution");
  ChargeVector q = ChargeVector::Zero(static_cast<Eigen::Index>(op.grid().conductors.size()));
  for (const auto& f : op.conductor_faces())
    q[f.conductor] += f.g * (solution.drive[f.conductor] - solution.phi[f.cell]);
  return q;
}

}  // namespace qdcap
