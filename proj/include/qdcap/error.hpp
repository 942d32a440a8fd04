#pragma once

#include <stdexcept>
#include <string>

namespace qdcap {

/// Input or geometry problem detected before any solve. CLI exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Iterative solve did not reach its tolerance. CLI exit code 2.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qdcap
