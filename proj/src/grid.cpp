#include "qdcap/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qdcap/constants.hpp"
#include "qdcap/error.hpp"
#include "qdcap/solid.hpp"

namespace qdcap {

void GridSpec::validate() const {
  if (!(min_cell_nm > 0.0)) throw ValidationError("min_cell_nm must be positive");
  if (!(max_cell_nm >= min_cell_nm)) throw ValidationError("max_cell_nm must be >= min_cell_nm");
  for (int a = 0; a < 3; ++a)
    if (!(target_cell_nm[a] >= min_cell_nm && target_cell_nm[a] <= max_cell_nm))
      throw ValidationError("target_cell_nm must lie within [min_cell_nm, max_cell_nm]");
  for (const auto& b : refinement_boxes)
    if ((b.spacing_nm.array() <= 0.0).any()) throw ValidationError("refinement spacing must be positive");
  if (!(snap_tolerance_nm >= 0.0)) throw ValidationError("snap_tolerance_nm must be >= 0");
}

GridSpec refine(const GridSpec& spec, double factor) {
  if (!(factor > 0.0)) throw ValidationError("refinement factor must be positive");
  GridSpec out = spec;
  out.target_cell_nm /= factor;
  out.min_cell_nm /= factor;
  out.max_cell_nm /= factor;
  for (auto& b : out.refinement_boxes) b.spacing_nm /= factor;
  if (out.min_cell_nm < kMinCellFloorNm || out.target_cell_nm.minCoeff() < kMinCellFloorNm)
    throw ValidationError("refined spacing falls below the 0.01 nm floor");
  return out;
}

int VoxelGrid::conductor_id(std::string_view name) const {
  for (std::size_t i = 0; i < conductors.size(); ++i)
    if (conductors[i] == name) return static_cast<int>(i) + 1;
  throw ValidationError("unknown conductor '" + std::string(name) + "'");
}

std::vector<double> grid_axis(const std::vector<FeaturePlane>& features, double lo, double hi, int axis,
                              const GridSpec& spec) {
  std::vector<FeaturePlane> cand;
  cand.push_back({lo, true});
  for (const auto& f : features)
    if (f.coord > lo && f.coord < hi) cand.push_back(f);
  for (const auto& b : spec.refinement_boxes) {
    for (double c : {b.lo[axis], b.hi[axis]})
      if (c > lo && c < hi) cand.push_back({c, false});
  }
  cand.push_back({hi, true});
  std::stable_sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) { return a.coord < b.coord; });

  std::vector<FeaturePlane> kept;
  for (const auto& c : cand) {
    for (;;) {
      if (kept.empty()) {
        kept.push_back(c);
        break;
      }
      auto& last = kept.back();
      const double gap = c.coord - last.coord;
      if (gap <= spec.snap_tolerance_nm) {
        if (c.hard && !last.hard) last = c;
        break;
      }
      if (gap >= spec.min_cell_nm - 1e-12) {
        kept.push_back(c);
        break;
      }
      if (!c.hard) break;
      if (!last.hard) {
        kept.pop_back();
        continue;
      }
      std::ostringstream os;
      os << "clamp conflict on axis " << "xyz"[axis] << ": interfaces at " << last.coord << " and " << c.coord
         << " nm are closer than min_cell_nm=" << spec.min_cell_nm;
      throw ValidationError(os.str());
    }
  }

  // Uniform fill per interval at the local spacing.
  std::vector<double> widths;
  for (std::size_t i = 1; i < kept.size(); ++i) {
    const double a = kept[i - 1].coord, b = kept[i].coord;
    double h = spec.target_cell_nm[axis];
    for (const auto& box : spec.refinement_boxes)
      if (std::min(b, box.hi[axis]) - std::max(a, box.lo[axis]) > 1e-9) h = std::min(h, box.spacing_nm[axis]);
    h = std::clamp(h, spec.min_cell_nm, spec.max_cell_nm);
    const int n = std::max(1, static_cast<int>(std::ceil((b - a) / h - 1e-9)));
    for (int k = 0; k < n; ++k) widths.push_back((b - a) / n);
  }

  // Grade: split any cell wider than twice a neighbour.
  for (bool changed = true; changed;) {
    changed = false;
    std::vector<double> next;
    next.reserve(widths.size() * 2);
    for (std::size_t i = 0; i < widths.size(); ++i) {
      const double w = widths[i];
      const double nb = std::min(i > 0 ? widths[i - 1] : w, i + 1 < widths.size() ? widths[i + 1] : w);
      if (w > 2.0 * nb * (1.0 + 1e-9)) {
        next.push_back(0.5 * w);
        next.push_back(0.5 * w);
        changed = true;
      } else {
        next.push_back(w);
      }
    }
    widths.swap(next);
  }

  std::vector<double> planes{lo};
  for (double w : widths) planes.push_back(planes.back() + w);
  planes.back() = hi;
  // Re-anchor hard planes exactly (accumulated rounding).
  for (const auto& k : kept) {
    auto it = std::lower_bound(planes.begin(), planes.end(), k.coord - 1e-6);
    if (it != planes.end() && std::abs(*it - k.coord) < 1e-6) *it = k.coord;
  }
  return planes;
}

VoxelGrid generate_grid(const DeviceSolid& solid, const GridSpec& spec) {
  spec.validate();
  VoxelGrid grid;
  const Eigen::Vector3d lo = solid.domain().lo(), hi = solid.domain().hi();
  for (int a = 0; a < 3; ++a)
    grid.planes[static_cast<std::size_t>(a)] =
        grid_axis(solid.feature_planes()[static_cast<std::size_t>(a)], lo[a], hi[a], a, spec);
  const std::size_t total = grid.cell_count();
  if (total > spec.max_cells) {
    std::ostringstream os;
    os << "grid needs " << grid.nx() << "x" << grid.ny() << "x" << grid.nz() << " = " << total
       << " cells, over the budget of " << spec.max_cells;
    throw ValidationError(os.str());
  }
  grid.materials = solid.materials();
  grid.conductors = solid.conductors();
  grid.interface_z = solid.interface_z();
  grid.material.assign(total, 0);
  grid.conductor.assign(total, 0);

  const std::size_t nx = grid.nx(), ny = grid.ny(), nz = grid.nz();
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t jj = 0; jj < static_cast<std::ptrdiff_t>(ny); ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    for (std::size_t i = 0; i < nx; ++i) {
      const auto probe = solid.column(grid.center(0, i), grid.center(1, j));
      for (std::size_t k = 0; k < nz; ++k) {
        const auto s = probe.sample(grid.center(2, k));
        const std::size_t c = grid.index(i, j, k);
        grid.material[c] = static_cast<std::int16_t>(s.material);
        grid.conductor[c] = static_cast<std::int16_t>(s.conductor);
      }
    }
  }
  return grid;
}

GridReport grid_report(const VoxelGrid& grid) {
  GridReport r;
  r.counts = {grid.nx(), grid.ny(), grid.nz()};
  r.total = grid.cell_count();
  std::vector<double> vol(grid.materials.size(), 0.0);
  std::vector<double> area(grid.conductors.size(), 0.0);
  const std::size_t nx = grid.nx(), ny = grid.ny(), nz = grid.nz();
  for (std::size_t k = 0; k < nz; ++k)
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t i = 0; i < nx; ++i) {
        const std::size_t c = grid.index(i, j, k);
        const double dx = grid.width(0, i), dy = grid.width(1, j), dz = grid.width(2, k);
        vol[static_cast<std::size_t>(grid.material[c])] += dx * dy * dz;
        if (grid.conductor[c] == 0) ++r.dielectric_cells;
        // Faces towards +x, +y, +z neighbours.
        const std::size_t nb[3] = {i + 1 < nx ? c + 1 : c, j + 1 < ny ? c + nx : c, k + 1 < nz ? c + nx * ny : c};
        const double fa[3] = {dy * dz, dx * dz, dx * dy};
        for (int a = 0; a < 3; ++a) {
          if (nb[a] == c) continue;
          const int p = grid.conductor[c], q = grid.conductor[nb[a]];
          if (p == q) continue;
          if (p) area[static_cast<std::size_t>(p - 1)] += fa[a];
          if (q) area[static_cast<std::size_t>(q - 1)] += fa[a];
        }
      }
  for (std::size_t m = 0; m < vol.size(); ++m) r.material_volume_nm3.emplace_back(grid.materials[m].name, vol[m]);
  for (std::size_t c = 0; c < area.size(); ++c) r.conductor_area_nm2.emplace_back(grid.conductors[c], area[c]);
  return r;
}

std::string format_report(const GridReport& r) {
  std::ostringstream os;
  os << "cells " << r.counts[0] << " x " << r.counts[1] << " x " << r.counts[2] << " = " << r.total << "\n";
  os << "dielectric cells " << r.dielectric_cells << "\n";
  for (const auto& [name, v] : r.material_volume_nm3)
    if (v > 0) os << "material " << name << " volume_nm3 " << v << "\n";
  for (const auto& [name, a] : r.conductor_area_nm2) os << "conductor " << name << " area_nm2 " << a << "\n";
  return os.str();
}

}  // namespace qdcap
