#include "qdcap/sensitivity.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "qdcap/constants.hpp"
#include "qdcap/error.hpp"
#include "qdcap/grid.hpp"
#include "qdcap/log.hpp"
#include "qdcap/solid.hpp"

namespace qdcap {

namespace {

double nearest_plane(const std::vector<double>& planes, double z) {
  double best = planes.front();
  for (double p : planes)
    if (std::abs(p - z) < std::abs(best - z)) best = p;
  return best;
}

// Thickness of the first step driven by `parameter` as the grid represents it.
double achieved_value(const DeviceSolid& solid, const VoxelGrid& grid, const std::string& parameter, double requested) {
  const auto& steps = solid.recipe().steps;
  for (std::size_t s = 0; s < steps.size(); ++s) {
    if (steps[s].thickness_parameter != parameter || steps[s].kind != StepKind::planar_film) continue;
    const auto [lo, hi] = solid.step_z_range(s);
    return nearest_plane(grid.planes[2], hi) - nearest_plane(grid.planes[2], lo);
  }
  return requested;
}

}  // namespace

SweepTable sweep(const ProcessRecipe& recipe, const SweepSpec& spec, const GridSpec& grid_spec,
                 const SolveOptions& options) {
  if (spec.values.size() < 2) throw ValidationError("sweep needs at least two values");
  if (!recipe.parameters.contains(spec.parameter))
    throw ValidationError("unknown sweep parameter '" + spec.parameter + "'");
  if (spec.targets.empty()) throw ValidationError("sweep needs at least one target");

  SweepTable table;
  table.parameter = spec.parameter;
  std::vector<double> first(spec.targets.size(), 0.0);
  for (std::size_t v = 0; v < spec.values.size(); ++v) {
    const double value = spec.values[v];
    try {
      const ProcessRecipe r = with_parameters(recipe, {{spec.parameter, value}});
      const DeviceSolid solid = build_solid(r);
      const VoxelGrid grid = generate_grid(solid, grid_spec);
      const FieldOperator op = assemble(grid);
      const double achieved = achieved_value(solid, grid, spec.parameter, value);
      std::map<std::string, ChargeVector> columns;
      for (std::size_t t = 0; t < spec.targets.size(); ++t) {
        const auto& tg = spec.targets[t];
        const int dot = grid.conductor_id(tg.dot) - 1;
        const int gate = grid.conductor_id(tg.gate) - 1;
        if (!columns.contains(tg.dot)) columns.emplace(tg.dot, extract_column(op, dot, options));
        const double c = -columns.at(tg.dot)[gate];
        if (v == 0) first[t] = c;
        SweepRow row;
        row.requested = value;
        row.achieved = achieved;
        row.target = tg.gate + ":" + tg.dot;
        row.capacitance_aF = c;
        row.pct_change = first[t] != 0.0 ? 100.0 * (c - first[t]) / std::abs(first[t]) : 0.0;
        table.rows.push_back(row);
      }
    } catch (const ValidationError& e) {
      std::ostringstream os;
      os << spec.parameter << "=" << value << ": " << e.what();
      throw ValidationError(os.str());
    } catch (const SolverError& e) {
      std::ostringstream os;
      os << spec.parameter << "=" << value << ": " << e.what();
      throw SolverError(os.str());
    }
  }
  return table;
}

Eigen::MatrixXd relative_deltas(const CapacitanceMatrix& baseline, const CapacitanceMatrix& perturbed,
                                double floor_aF) {
  if (baseline.names != perturbed.names) throw ValidationError("conductor registries differ");
  const Eigen::MatrixXd& b = baseline.values;
  Eigen::MatrixXd out = 100.0 * (perturbed.values - b).array() / b.array();
  for (Eigen::Index i = 0; i < b.rows(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j)
      if (std::abs(b(i, j)) < floor_aF) out(i, j) = std::numeric_limits<double>::quiet_NaN();
  return out;
}

PlateEstimate parallel_plate_estimate(const ProcessRecipe& recipe, const std::string& gate, const std::string& dot,
                                      double lateral_step_nm) {
  const DeviceSolid solid = build_solid(recipe);
  const int gate_id = solid.conductor_id(gate);
  const int dot_id = solid.conductor_id(dot);
  if (gate_id == dot_id) throw ValidationError("gate and dot must differ");

  // Footprint and top of the dot.
  const auto& steps = recipe.steps;
  std::vector<Polygon2D> footprint;
  double z_top = 0.0;
  for (std::size_t s = 0; s < steps.size(); ++s) {
    const auto& st = steps[s];
    const auto it = std::find(st.conductors.begin(), st.conductors.end(), dot);
    if (it == st.conductors.end()) continue;
    z_top = solid.step_z_range(s).second;
    if (!st.mask) {
      const auto lo = recipe.domain.lo(), hi = recipe.domain.hi();
      footprint.push_back({{{lo.x(), lo.y()}, {hi.x(), lo.y()}, {hi.x(), hi.y()}, {lo.x(), hi.y()}}});
    } else {
      const auto& polys = recipe.mask(*st.mask).polygons;
      if (st.conductors.size() == 1) footprint = polys;
      else footprint.push_back(polys[static_cast<std::size_t>(it - st.conductors.begin())]);
    }
  }
  Box2 box;
  for (const auto& p : footprint)
    for (const auto& v : p.vertices) box.extend(v);

  const double dz = 0.25;
  const double z_max = recipe.domain.hi().z();
  const int nx = std::max(1, static_cast<int>(std::ceil((box.hi.x() - box.lo.x()) / lateral_step_nm)));
  const int ny = std::max(1, static_cast<int>(std::ceil((box.hi.y() - box.lo.y()) / lateral_step_nm)));
  const double hx = (box.hi.x() - box.lo.x()) / nx, hy = (box.hi.y() - box.lo.y()) / ny;
  PlateEstimate est;
  est.min_stack_nm = std::numeric_limits<double>::infinity();
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const Point2 p(box.lo.x() + (i + 0.5) * hx, box.lo.y() + (j + 0.5) * hy);
      bool in = false;
      for (const auto& poly : footprint) in = in || contains(poly, p);
      if (!in) continue;
      const auto probe = solid.column(p.x(), p.y());
      double stack = 0.0;
      int hit = 0;
      for (double z = z_top + 0.5 * dz; z < z_max; z += dz) {
        const auto smp = probe.sample(z);
        if (smp.conductor == dot_id) continue;
        if (smp.conductor != 0) {
          hit = smp.conductor;
          break;
        }
        stack += dz / solid.materials()[static_cast<std::size_t>(smp.material)].relative_permittivity;
      }
      if (hit != gate_id || stack <= 0.0) continue;
      est.overlap_nm2 += hx * hy;
      est.capacitance_aF += kEpsilon0 * hx * hy / stack;
      est.min_stack_nm = std::min(est.min_stack_nm, stack);
    }
  if (est.overlap_nm2 == 0.0)
    throw ValidationError("'" + gate + "' has no vertical overlap with '" + dot + "'");
  return est;
}

}  // namespace qdcap
