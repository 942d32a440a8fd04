#pragma once

#include <Eigen/Core>
#include <array>
#include <cstddef>
#include <vector>

namespace qdcap {

/// Symmetric 7-point operator on an nx*ny*nz lattice:
/// (A x)_c = diag_c x_c - sum over neighbours n of g(c,n) x_n.
/// g[a][c] couples c with its +a neighbour and is zero on the far boundary.
/// Inactive cells carry diag = 1, zero couplings and zero values.
template <class Scalar>
struct Stencil7 {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::array<std::size_t, 3> dims{};
  std::array<Vector, 3> g;
  Vector diag;
  std::vector<unsigned char> active;

  std::size_t size() const { return dims[0] * dims[1] * dims[2]; }
  std::array<std::size_t, 3> strides() const { return {1, dims[0], dims[0] * dims[1]}; }

  Scalar off_sum(std::size_t c, std::size_t i, std::size_t j, std::size_t k, const Vector& x) const {
    const std::size_t sx = 1, sy = dims[0], sz = dims[0] * dims[1];
    Scalar s(0);
    if (i > 0) s += g[0][c - sx] * x[c - sx];
    if (i + 1 < dims[0]) s += g[0][c] * x[c + sx];
    if (j > 0) s += g[1][c - sy] * x[c - sy];
    if (j + 1 < dims[1]) s += g[1][c] * x[c + sy];
    if (k > 0) s += g[2][c - sz] * x[c - sz];
    if (k + 1 < dims[2]) s += g[2][c] * x[c + sz];
    return s;
  }

  void apply(const Vector& x, Vector& y) const {
    y.resize(x.size());
    const auto nx = dims[0], ny = dims[1], nz = dims[2];
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t kk = 0; kk < static_cast<std::ptrdiff_t>(nz); ++kk) {
      const auto k = static_cast<std::size_t>(kk);
      for (std::size_t j = 0; j < ny; ++j)
        for (std::size_t i = 0; i < nx; ++i) {
          const std::size_t c = i + nx * (j + ny * k);
          y[c] = diag[c] * x[c] - off_sum(c, i, j, k, x);
        }
    }
  }
};

}  // namespace qdcap
