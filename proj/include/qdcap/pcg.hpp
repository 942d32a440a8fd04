#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstddef>

#include "qdcap/parallel.hpp"

namespace qdcap {

struct PcgResult {
  std::size_t iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Preconditioned conjugate gradient. `apply(x, y)` computes y = A x and
/// `precondition(r, z)` computes z = M^{-1} r; both must be symmetric. x holds
/// the initial guess on entry and the iterate on exit.
template <class Apply, class Precondition, class Scalar>
PcgResult pcg(const Apply& apply, const Precondition& precondition, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& b,
              Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x, double tol, std::size_t max_iterations) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  PcgResult out;
  const Scalar bnorm = std::sqrt(deterministic_squared_norm(b));
  if (bnorm == Scalar(0)) {
    x.setZero(b.size());
    out.converged = true;
    return out;
  }
  Vector r(b.size()), z(b.size()), p(b.size()), q(b.size());
  apply(x, q);
  r = b - q;
  Scalar rnorm = std::sqrt(deterministic_squared_norm(r));
  if (rnorm <= tol * bnorm) {
    out.relative_residual = double(rnorm / bnorm);
    out.converged = true;
    return out;
  }
  precondition(r, z);
  p = z;
  Scalar rz = deterministic_dot(r, z);
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    apply(p, q);
    const Scalar alpha = rz / deterministic_dot(p, q);
    axpy(alpha, p, x);
    axpy(-alpha, q, r);
    rnorm = std::sqrt(deterministic_squared_norm(r));
    out.iterations = it;
    if (rnorm <= tol * bnorm) {
      // Confirm against the true residual; restart from it if the recurrence drifted.
      apply(x, q);
      r = b - q;
      rnorm = std::sqrt(deterministic_squared_norm(r));
      if (rnorm <= tol * bnorm) break;
      precondition(r, z);
      p = z;
      rz = deterministic_dot(r, z);
      continue;
    }
    precondition(r, z);
    const Scalar rz_next = deterministic_dot(r, z);
    xpby(z, rz_next / rz, p);
    rz = rz_next;
  }
  // Report the true residual rather than the recurrence.
  apply(x, q);
  r = b - q;
  out.relative_residual = double(std::sqrt(deterministic_squared_norm(r)) / bnorm);
  out.converged = out.relative_residual <= tol;
  return out;
}

}  // namespace qdcap
