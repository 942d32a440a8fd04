#include "qdcap/multigrid.hpp"

#include <algorithm>

#include "qdcap/error.hpp"

namespace qdcap {

namespace {

using Vector = Eigen::VectorXd;

std::array<std::size_t, 3> choose_factors(const Stencil7<double>& A) {
  std::array<double, 3> strength{};
  for (int a = 0; a < 3; ++a) strength[a] = A.dims[a] > 1 ? A.g[a].sum() / double(A.dims[a] - 1) : 0.0;
  const double top = *std::max_element(strength.begin(), strength.end());
  std::array<std::size_t, 3> f{1, 1, 1};
  for (int a = 0; a < 3; ++a)
    if (A.dims[a] > 1 && strength[a] >= 0.25 * top) f[a] = 2;
  if (f == std::array<std::size_t, 3>{1, 1, 1})
    for (int a = 0; a < 3; ++a)
      if (A.dims[a] > 1) f[a] = 2;
  return f;
}

Stencil7<double> galerkin_coarsen(const Stencil7<double>& A, const std::array<std::size_t, 3>& f) {
  Stencil7<double> C;
  for (int a = 0; a < 3; ++a) C.dims[a] = (A.dims[a] + f[a] - 1) / f[a];
  const std::size_t n = C.size();
  for (auto& g : C.g) g = Vector::Zero(static_cast<Eigen::Index>(n));
  C.diag = Vector::Ones(static_cast<Eigen::Index>(n));
  C.active.assign(n, 0);
  const auto [nx, ny, nz] = A.dims;
  const auto [cx, cy, cz] = C.dims;

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t KK = 0; KK < static_cast<std::ptrdiff_t>(cz); ++KK) {
    const auto K = static_cast<std::size_t>(KK);
    for (std::size_t J = 0; J < cy; ++J)
      for (std::size_t I = 0; I < cx; ++I) {
        const std::size_t cc = I + cx * (J + cy * K);
        const std::size_t i0 = I * f[0], i1 = std::min(i0 + f[0], nx);
        const std::size_t j0 = J * f[1], j1 = std::min(j0 + f[1], ny);
        const std::size_t k0 = K * f[2], k1 = std::min(k0 + f[2], nz);
        double diag = 0.0;
        std::array<double, 3> cross{};
        bool any = false;
        for (std::size_t k = k0; k < k1; ++k)
          for (std::size_t j = j0; j < j1; ++j)
            for (std::size_t i = i0; i < i1; ++i) {
              const std::size_t c = i + nx * (j + ny * k);
              if (!A.active[c]) continue;
              any = true;
              diag += A.diag[c];
              const std::size_t idx[3] = {i, j, k};
              const std::size_t hi[3] = {i1, j1, k1};
              for (int a = 0; a < 3; ++a) {
                if (idx[a] + 1 >= A.dims[a]) continue;
                const double g = A.g[a][c];
                if (g == 0.0) continue;
                if (idx[a] + 1 < hi[a]) diag -= 2.0 * g;
                else cross[a] += g;
              }
            }
        if (!any) continue;
        C.active[cc] = 1;
        C.diag[cc] = diag;
        for (int a = 0; a < 3; ++a) C.g[a][cc] = cross[a];
      }
  }
  return C;
}

void restrict_to(const Stencil7<double>& fine, const std::array<std::size_t, 3>& f, const Stencil7<double>& coarse,
                 const Vector& r, Vector& b) {
  b.setZero(static_cast<Eigen::Index>(coarse.size()));
  const auto [nx, ny, nz] = fine.dims;
  const auto [cx, cy, cz] = coarse.dims;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t KK = 0; KK < static_cast<std::ptrdiff_t>(cz); ++KK) {
    const auto K = static_cast<std::size_t>(KK);
    for (std::size_t J = 0; J < cy; ++J)
      for (std::size_t I = 0; I < cx; ++I) {
        const std::size_t cc = I + cx * (J + cy * K);
        if (!coarse.active[cc]) continue;
        double s = 0.0;
        for (std::size_t k = K * f[2]; k < std::min((K + 1) * f[2], nz); ++k)
          for (std::size_t j = J * f[1]; j < std::min((J + 1) * f[1], ny); ++j)
            for (std::size_t i = I * f[0]; i < std::min((I + 1) * f[0], nx); ++i) {
              const std::size_t c = i + nx * (j + ny * k);
              if (fine.active[c]) s += r[c];
            }
        b[cc] = s;
      }
  }
}

void prolong_add(const Stencil7<double>& fine, const std::array<std::size_t, 3>& f, const Stencil7<double>& coarse,
                 const Vector& xc, double scale, Vector& x) {
  const auto [nx, ny, nz] = fine.dims;
  const std::size_t cx = coarse.dims[0], cy = coarse.dims[1];
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t kk = 0; kk < static_cast<std::ptrdiff_t>(nz); ++kk) {
    const auto k = static_cast<std::size_t>(kk);
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t i = 0; i < nx; ++i) {
        const std::size_t c = i + nx * (j + ny * k);
        if (!fine.active[c]) continue;
        x[c] += scale * xc[i / f[0] + cx * (j / f[1] + cy * (k / f[2]))];
      }
  }
}

}  // namespace

void gauss_seidel_rb(const Stencil7<double>& A, const Vector& b, Vector& x, bool forward) {
  const auto [nx, ny, nz] = A.dims;
  for (int pass = 0; pass < 2; ++pass) {
    const std::size_t color = forward ? static_cast<std::size_t>(pass) : static_cast<std::size_t>(1 - pass);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t kk = 0; kk < static_cast<std::ptrdiff_t>(nz); ++kk) {
      const auto k = static_cast<std::size_t>(kk);
      for (std::size_t j = 0; j < ny; ++j) {
        const std::size_t i0 = (color + j + k) % 2;
        for (std::size_t i = i0; i < nx; i += 2) {
          const std::size_t c = i + nx * (j + ny * k);
          if (!A.active[c]) continue;
          x[c] = (b[c] + A.off_sum(c, i, j, k, x)) / A.diag[c];
        }
      }
    }
  }
}

Multigrid::Multigrid(std::shared_ptr<const Stencil7<double>> fine, const MultigridOptions& options)
    : fine_(std::move(fine)), options_(options) {
  const Stencil7<double>* cur = fine_.get();
  while (cur->size() > options_.coarsest_cells) {
    const auto f = choose_factors(*cur);
    Level lvl;
    lvl.factor = f;
    lvl.op = galerkin_coarsen(*cur, f);
    if (lvl.op.size() == cur->size()) break;
    levels_.push_back(std::move(lvl));
    cur = &levels_.back().op;
  }
  for (auto& l : levels_) {
    l.x.setZero(static_cast<Eigen::Index>(l.op.size()));
    l.b.setZero(static_cast<Eigen::Index>(l.op.size()));
  }

  const Stencil7<double>& A = *cur;
  dense_index_.assign(A.size(), -1);
  Eigen::Index m = 0;
  for (std::size_t c = 0; c < A.size(); ++c)
    if (A.active[c]) dense_index_[c] = m++;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(m, m);
  const auto st = A.strides();
  for (std::size_t c = 0; c < A.size(); ++c) {
    const auto p = dense_index_[c];
    if (p < 0) continue;
    D(p, p) = A.diag[c];
    for (int a = 0; a < 3; ++a) {
      const double g = A.g[a][c];
      if (g == 0.0) continue;
      const auto q = dense_index_[c + st[a]];
      if (q < 0) continue;
      D(p, q) -= g;
      D(q, p) -= g;
    }
  }
  coarse_llt_.compute(D);
  if (m > 0 && coarse_llt_.info() != Eigen::Success) throw SolverError("coarse operator is not positive definite");
}

const Stencil7<double>& Multigrid::op(std::size_t level) const { return level == 0 ? *fine_ : levels_[level - 1].op; }

void Multigrid::cycle(std::size_t level, const Vector& b, Vector& x) const {
  const Stencil7<double>& A = op(level);
  x.setZero(b.size());
  if (level == levels_.size()) {
    Eigen::VectorXd rhs(coarse_llt_.rows());
    for (std::size_t c = 0; c < A.size(); ++c)
      if (dense_index_[c] >= 0) rhs[dense_index_[c]] = b[c];
    const Eigen::VectorXd sol = coarse_llt_.solve(rhs);
    for (std::size_t c = 0; c < A.size(); ++c)
      if (dense_index_[c] >= 0) x[c] = sol[dense_index_[c]];
    return;
  }
  for (int s = 0; s < options_.smoothing_sweeps; ++s) gauss_seidel_rb(A, b, x, true);
  Vector r;
  A.apply(x, r);
  r = b - r;
  const Level& next = levels_[level];
  restrict_to(A, next.factor, next.op, r, next.b);
  cycle(level + 1, next.b, next.x);
  prolong_add(A, next.factor, next.op, next.x, options_.coarse_scale, x);
  for (int s = 0; s < options_.smoothing_sweeps; ++s) gauss_seidel_rb(A, b, x, false);
}

void Multigrid::apply(const Vector& r, Vector& z) const { cycle(0, r, z); }

}  // namespace qdcap
