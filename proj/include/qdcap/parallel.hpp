#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <vector>

namespace qdcap {

/// Sets the OpenMP worker count; n <= 0 restores the runtime default.
void set_threads(int n);
int threads();

namespace detail {

inline constexpr std::ptrdiff_t kReduceChunk = 8192;

template <class Scalar>
Scalar pairwise_sum(const Scalar* v, std::size_t n) {
  if (n == 0) return Scalar(0);
  if (n == 1) return v[0];
  const std::size_t h = n / 2;
  return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

}  // namespace detail

/// Inner product with a fixed chunking and a pairwise combine, so the result
/// does not depend on the number of workers.
template <class DerivedA, class DerivedB>
typename DerivedA::Scalar deterministic_dot(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  const std::ptrdiff_t n = a.size();
  const std::ptrdiff_t chunks = (n + detail::kReduceChunk - 1) / detail::kReduceChunk;
  std::vector<Scalar> partial(static_cast<std::size_t>(chunks), Scalar(0));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < chunks; ++c) {
    const std::ptrdiff_t lo = c * detail::kReduceChunk;
    const std::ptrdiff_t len = std::min(detail::kReduceChunk, n - lo);
    partial[static_cast<std::size_t>(c)] = a.segment(lo, len).dot(b.segment(lo, len));
  }
  return detail::pairwise_sum(partial.data(), partial.size());
}

template <class Derived>
typename Derived::Scalar deterministic_squared_norm(const Eigen::MatrixBase<Derived>& a) {
  return deterministic_dot(a, a);
}

/// y = x + alpha * y and similar element-wise kernels, parallel over chunks.
template <class Scalar>
void axpy(Scalar alpha, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x, Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& y) {
  const std::ptrdiff_t n = x.size();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <class Scalar>
void xpby(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x, Scalar beta, Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& y) {
  const std::ptrdiff_t n = x.size();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) y[i] = x[i] + beta * y[i];
}

}  // namespace qdcap
