#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "qdcap/capmatrix.hpp"
#include "qdcap/recipe.hpp"

namespace qdcap {

struct CouplingTarget {
  std::string gate;
  std::string dot;
};

struct SweepSpec {
  std::string parameter;
  std::vector<double> values;
  std::vector<CouplingTarget> targets;
};

struct SweepRow {
  double requested = 0.0;
  double achieved = 0.0;
  std::string target;  // "gate:dot"
  double capacitance_aF = 0.0;
  double pct_change = 0.0;
};

struct SweepTable {
  std::string parameter;
  std::vector<SweepRow> rows;
};

/// Rebuilds solid and grid per value and reports -C(gate, dot) for each
/// target, with percent change against the first value. Each distinct dot
/// needs one solve (its matrix column). Errors name the failing value.
SweepTable sweep(const ProcessRecipe& recipe, const SweepSpec& spec, const GridSpec& grid,
                 const SolveOptions& options = {});

/// 100 * (perturbed - baseline) / baseline, so a growing coupling magnitude is
/// positive; entries with |baseline| below floor_aF are NaN.
Eigen::MatrixXd relative_deltas(const CapacitanceMatrix& baseline, const CapacitanceMatrix& perturbed,
                                double floor_aF = 0.01);

struct PlateEstimate {
  double capacitance_aF = 0.0;
  double overlap_nm2 = 0.0;
  double min_stack_nm = 0.0;  // smallest sum(d / eps_r) over the overlap
};

/// Sum of local parallel plates over every column where `gate` is the first
/// conductor above the top of `dot`: eps0 * dA / sum(d / eps_r). Throws
/// ValidationError when no such column exists.
PlateEstimate parallel_plate_estimate(const ProcessRecipe& recipe, const std::string& gate, const std::string& dot,
                                      double lateral_step_nm = 2.0);

}  // namespace qdcap
