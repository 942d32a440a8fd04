#include "qdcap/solid.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "qdcap/error.hpp"

namespace qdcap {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double interval_distance(double z, double lo, double hi) {
  if (z < lo) return lo - z;
  if (z > hi) return z - hi;
  return 0.0;
}

double box_distance(const Box2& b, const Point2& p) {
  const double dx = std::max({b.lo.x() - p.x(), 0.0, p.x() - b.hi.x()});
  const double dy = std::max({b.lo.y() - p.y(), 0.0, p.y() - b.hi.y()});
  return std::hypot(dx, dy);
}

// Distance to the intersection of two sets from the distances to each, for an
// intersection edge between a vertical column wall and the set boundary.
double intersect_distance(double a, double b) {
  if (a > 0.0 && b > 0.0) return std::hypot(a, b);
  return std::max(a, b);
}

struct Wall {
  double coord;
  int dir;
  bool operator<(const Wall& o) const { return coord < o.coord || (coord == o.coord && dir < o.dir); }
};

void add_polygon_walls(const Polygon2D& poly, std::set<Wall>& wx, std::set<Wall>& wy) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 e = poly[(i + 1) % n] - poly[i];
    if (std::abs(e.x()) < 1e-9) wx.insert({poly[i].x(), e.y() > 0 ? 1 : -1});
    else if (std::abs(e.y()) < 1e-9) wy.insert({poly[i].y(), e.x() > 0 ? -1 : 1});
  }
}

}  // namespace

SolidSample ColumnProbe::sample(double z) const {
  const auto& steps = solid_->steps_;
  double d_solid = kInf;
  bool claimed = false;
  SolidSample out{solid_->air_index_, 0};

  for (std::size_t s = 0; s < steps.size(); ++s) {
    const auto& g = steps[s];
    const double lat = lateral_[s];
    double d_step = kInf;
    bool inside = false;
    switch (g.kind) {
      case StepKind::planar_film: {
        d_step = interval_distance(z, g.z_lo, g.z_hi);
        inside = d_step == 0.0;
        break;
      }
      case StepKind::patterned_deposit: {
        const double dz = interval_distance(z, g.z_lo, g.z_hi);
        inside = lat <= 0.0 && dz == 0.0;
        d_step = std::hypot(std::max(lat, 0.0), dz);
        break;
      }
      case StepKind::conformal_deposit: {
        const double a = std::max(0.0, d_solid - g.thickness);
        inside = d_solid <= g.thickness && (!g.masked || lat <= 0.0);
        d_step = g.masked ? intersect_distance(a, std::max(lat, 0.0)) : a;
        break;
      }
      case StepKind::etch_pattern: {
        if (lat <= 0.0 && z >= g.z_lo) {
          claimed = false;
          out = {solid_->air_index_, 0};
          d_solid = std::max(d_solid, std::min(-lat, z - g.z_lo));
        }
        continue;
      }
      case StepKind::conductor_sheet: {
        if (claimed && lat <= 0.0 && z >= g.z_lo && z <= g.z_hi) {
          out.material = g.material;
          out.conductor = g.conductor_ids.size() == 1 ? g.conductor_ids[0]
                                                      : g.conductor_ids[static_cast<std::size_t>(polygon_[s])];
        }
        continue;
      }
    }
    if (inside && !claimed) {
      claimed = true;
      out.material = g.material;
      if (g.conductor_ids.size() == 1) out.conductor = g.conductor_ids[0];
      else if (!g.conductor_ids.empty()) out.conductor = g.conductor_ids[static_cast<std::size_t>(polygon_[s])];
      else out.conductor = 0;
    }
    d_solid = std::min(d_solid, d_step);
  }
  return out;
}

int DeviceSolid::conductor_id(std::string_view name) const {
  for (std::size_t i = 0; i < conductors_.size(); ++i)
    if (conductors_[i] == name) return static_cast<int>(i) + 1;
  throw ValidationError("unknown conductor '" + std::string(name) + "'");
}

ColumnProbe DeviceSolid::column(double x, double y) const {
  ColumnProbe probe;
  probe.solid_ = this;
  probe.lateral_.assign(steps_.size(), -kInf);
  probe.polygon_.assign(steps_.size(), -1);
  const Point2 p(x, y);
  for (std::size_t s = 0; s < steps_.size(); ++s) {
    const auto& g = steps_[s];
    if (!g.masked) continue;
    double best = kInf;
    for (std::size_t k = 0; k < g.polygons.size(); ++k) {
      const double lb = box_distance(g.boxes[k], p);
      if (lb > distance_cap_) {
        best = std::min(best, lb);
        continue;
      }
      const double d = signed_distance(g.polygons[k], p);
      if (d <= 0.0 && probe.polygon_[s] < 0) probe.polygon_[s] = static_cast<int>(k);
      best = std::min(best, d);
    }
    probe.lateral_[s] = best;
  }
  return probe;
}

SolidSample DeviceSolid::sample(const Eigen::Vector3d& p) const { return column(p.x(), p.y()).sample(p.z()); }

std::pair<double, double> DeviceSolid::step_z_range(std::size_t step) const {
  const auto& g = steps_.at(step);
  return {g.z_lo, g.z_hi};
}

DeviceSolid build_solid(const ProcessRecipe& recipe) {
  DeviceSolid solid;
  solid.recipe_ = recipe;
  solid.materials_ = recipe.materials;
  solid.air_index_ = -1;
  for (std::size_t i = 0; i < recipe.materials.size(); ++i)
    if (recipe.materials[i].name == "air") solid.air_index_ = static_cast<int>(i);
  if (solid.air_index_ < 0) {
    solid.air_index_ = static_cast<int>(solid.materials_.size());
    solid.materials_.push_back({"air", 1.0, false});
  }
  solid.conductors_ = recipe.conductor_names();

  const Eigen::Vector3d lo = recipe.domain.lo();
  const Eigen::Vector3d hi = recipe.domain.hi();
  double z_ref = lo.z();
  std::set<double> tops;
  std::set<Wall> walls_x, walls_y;
  std::array<std::map<double, bool>, 3> planes;  // coord -> hard
  auto add_plane = [&](int axis, double c, bool hard) {
    if (c <= lo[axis] || c >= hi[axis]) return;
    auto [it, inserted] = planes[axis].emplace(c, hard);
    if (!inserted) it->second = it->second || hard;
  };

  int next_id = 1;
  double total_conformal = 0.0;
  for (const auto& step : recipe.steps)
    if (step.kind == StepKind::conformal_deposit) total_conformal += step.thickness_nm;
  solid.distance_cap_ = total_conformal + 1.0;

  struct Footprint {
    Polygon2D poly;
    double z_lo, z_hi;
    int id;
    std::size_t step;
  };
  std::vector<Footprint> conductor_footprints;

  for (std::size_t si = 0; si < recipe.steps.size(); ++si) {
    const auto& step = recipe.steps[si];
    DeviceSolid::StepGeometry g;
    g.kind = step.kind;
    g.material = recipe.material_index(step.material);
    g.thickness = step.thickness_nm;
    for (std::size_t c = 0; c < step.conductors.size(); ++c) g.conductor_ids.push_back(next_id++);
    if (step.mask) {
      const auto& mask = recipe.mask(*step.mask);
      g.masked = true;
      g.polygons = mask.polygons;
      for (const auto& poly : g.polygons) {
        const Box2 b = bounds(poly);
        if (b.lo.x() < lo.x() - 1e-9 || b.lo.y() < lo.y() - 1e-9 || b.hi.x() > hi.x() + 1e-9 ||
            b.hi.y() > hi.y() + 1e-9)
          throw ValidationError("step " + std::to_string(si) + ": mask '" + mask.name +
                                "' extends outside domain_box");
        g.boxes.push_back(b);
      }
    }

    switch (step.kind) {
      case StepKind::planar_film:
        g.z_lo = z_ref;
        g.z_hi = z_ref + step.thickness_nm;
        z_ref = g.z_hi;
        tops.insert(g.z_hi);
        add_plane(2, g.z_lo, true);
        add_plane(2, g.z_hi, true);
        break;
      case StepKind::patterned_deposit:
        g.z_lo = z_ref;
        g.z_hi = z_ref + step.thickness_nm;
        tops.insert(g.z_hi);
        add_plane(2, g.z_lo, true);
        add_plane(2, g.z_hi, true);
        for (const auto& poly : g.polygons) add_polygon_walls(poly, walls_x, walls_y);
        break;
      case StepKind::conformal_deposit: {
        const double t = step.thickness_nm;
        std::set<double> new_tops;
        for (double top : tops) new_tops.insert(top + t);
        for (double top : new_tops) add_plane(2, top, false);
        tops.insert(new_tops.begin(), new_tops.end());
        std::set<Wall> nx, ny;
        for (const auto& w : walls_x) nx.insert({w.coord + w.dir * t, w.dir});
        for (const auto& w : walls_y) ny.insert({w.coord + w.dir * t, w.dir});
        for (const auto& w : nx) add_plane(0, w.coord, false);
        for (const auto& w : ny) add_plane(1, w.coord, false);
        walls_x.insert(nx.begin(), nx.end());
        walls_y.insert(ny.begin(), ny.end());
        if (g.masked) {
          for (const auto& poly : g.polygons) add_polygon_walls(poly, walls_x, walls_y);
        } else {
          z_ref += t;
        }
        g.z_lo = z_ref - t;
        g.z_hi = z_ref;
        break;
      }
      case StepKind::etch_pattern:
        g.z_lo = z_ref - step.thickness_nm;
        g.z_hi = std::numeric_limits<double>::infinity();
        add_plane(2, g.z_lo, true);
        for (const auto& poly : g.polygons) add_polygon_walls(poly, walls_x, walls_y);
        break;
      case StepKind::conductor_sheet: {
        g.z_hi = step.reference_z_nm.value_or(solid.interface_z_);
        g.z_lo = g.z_hi - step.thickness_nm;
        add_plane(2, g.z_lo, true);
        add_plane(2, g.z_hi, true);
        break;
      }
    }
    if (si == 0) solid.interface_z_ = g.z_hi;

    // Hard lateral planes: every axis-aligned mask edge.
    for (const auto& poly : g.polygons) {
      for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point2 e = poly[(i + 1) % poly.size()] - poly[i];
        if (std::abs(e.x()) < 1e-9) add_plane(0, poly[i].x(), true);
        if (std::abs(e.y()) < 1e-9) add_plane(1, poly[i].y(), true);
      }
    }

    // Sheets may not overlap conductors from earlier steps.
    if (!g.conductor_ids.empty() && g.masked) {
      for (std::size_t k = 0; k < g.polygons.size(); ++k) {
        const int id = g.conductor_ids.size() == 1 ? g.conductor_ids[0] : g.conductor_ids[k];
        if (step.kind == StepKind::conductor_sheet) {
          for (const auto& f : conductor_footprints) {
            if (f.step == si) continue;
            const bool z_overlap = std::min(f.z_hi, g.z_hi) - std::max(f.z_lo, g.z_lo) > 1e-9;
            if (z_overlap && polygons_overlap(f.poly, g.polygons[k]))
              throw ValidationError("conductor_sheet '" + solid.conductors_[static_cast<std::size_t>(id - 1)] +
                                    "' overlaps existing conductor '" +
                                    solid.conductors_[static_cast<std::size_t>(f.id - 1)] + "'");
          }
        }
        if (step.kind == StepKind::conductor_sheet || step.kind == StepKind::patterned_deposit)
          conductor_footprints.push_back({g.polygons[k], g.z_lo, g.z_hi, id, si});
      }
    }
    solid.steps_.push_back(std::move(g));
  }

  for (int axis = 0; axis < 3; ++axis)
    for (const auto& [c, hard] : planes[axis]) solid.planes_[static_cast<std::size_t>(axis)].push_back({c, hard});
  return solid;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> lattice_axis(const std::vector<FeaturePlane>& features, double lo, double hi, double h) {
  std::vector<double> planes{lo};
  for (const auto& f : features)
    if (f.coord - planes.back() > 1e-6 && hi - f.coord > 1e-6) planes.push_back(f.coord);
  planes.push_back(hi);
  std::vector<double> out{lo};
  for (std::size_t i = 1; i < planes.size(); ++i) {
    const double a = planes[i - 1], b = planes[i];
    const int n = std::max(1, static_cast<int>(std::ceil((b - a) / h - 1e-9)));
    for (int k = 1; k <= n; ++k) out.push_back(a + (b - a) * k / n);
  }
  return out;
}

}  // namespace

SolidReport validate_solid(const DeviceSolid& solid, double lattice_nm) {
  SolidReport report;
  const auto& names = solid.conductors();
  report.conductor_count = names.size();
  if (names.empty()) report.warnings.push_back("solid has no conductors");

  const Eigen::Vector3d lo = solid.domain().lo(), hi = solid.domain().hi();
  std::array<std::vector<double>, 3> ax;
  for (int a = 0; a < 3; ++a)
    ax[static_cast<std::size_t>(a)] =
        lattice_axis(solid.feature_planes()[static_cast<std::size_t>(a)], lo[a], hi[a], lattice_nm);
  const std::size_t nx = ax[0].size() - 1, ny = ax[1].size() - 1, nz = ax[2].size() - 1;
  std::vector<int> cond(nx * ny * nz, 0);
  auto idx = [&](std::size_t i, std::size_t j, std::size_t k) { return i + nx * (j + ny * k); };

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t jj = 0; jj < static_cast<std::ptrdiff_t>(ny); ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    for (std::size_t i = 0; i < nx; ++i) {
      const auto probe = solid.column(0.5 * (ax[0][i] + ax[0][i + 1]), 0.5 * (ax[1][j] + ax[1][j + 1]));
      for (std::size_t k = 0; k < nz; ++k) cond[idx(i, j, k)] = probe.sample(0.5 * (ax[2][k] + ax[2][k + 1])).conductor;
    }
  }

  report.conductors.resize(names.size());
  for (std::size_t c = 0; c < names.size(); ++c) {
    report.conductors[c].name = names[c];
    report.conductors[c].lo.setConstant(std::numeric_limits<double>::infinity());
    report.conductors[c].hi.setConstant(-std::numeric_limits<double>::infinity());
  }
  std::set<std::pair<int, int>> touching;
  for (std::size_t k = 0; k < nz; ++k)
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t i = 0; i < nx; ++i) {
        const int c = cond[idx(i, j, k)];
        if (c == 0) continue;
        auto& ext = report.conductors[static_cast<std::size_t>(c - 1)];
        ext.lo = ext.lo.cwiseMin(Eigen::Vector3d(ax[0][i], ax[1][j], ax[2][k]));
        ext.hi = ext.hi.cwiseMax(Eigen::Vector3d(ax[0][i + 1], ax[1][j + 1], ax[2][k + 1]));
        ext.volume_nm3 += (ax[0][i + 1] - ax[0][i]) * (ax[1][j + 1] - ax[1][j]) * (ax[2][k + 1] - ax[2][k]);
        const int nbr[3] = {i + 1 < nx ? cond[idx(i + 1, j, k)] : 0, j + 1 < ny ? cond[idx(i, j + 1, k)] : 0,
                            k + 1 < nz ? cond[idx(i, j, k + 1)] : 0};
        for (int o : nbr)
          if (o != 0 && o != c) touching.insert({std::min(c, o), std::max(c, o)});
      }
  for (const auto& [a, b] : touching)
    report.shorts.emplace_back(names[static_cast<std::size_t>(a - 1)], names[static_cast<std::size_t>(b - 1)]);

  // Connected components per conductor.
  std::vector<int> seen(cond.size(), 0);
  for (std::size_t start = 0; start < cond.size(); ++start) {
    if (cond[start] == 0 || seen[start]) continue;
    const int c = cond[start];
    report.conductors[static_cast<std::size_t>(c - 1)].components++;
    std::deque<std::size_t> queue{start};
    seen[start] = 1;
    while (!queue.empty()) {
      const std::size_t cur = queue.front();
      queue.pop_front();
      const std::size_t i = cur % nx, j = (cur / nx) % ny, k = cur / (nx * ny);
      auto visit = [&](std::size_t n) {
        if (!seen[n] && cond[n] == c) {
          seen[n] = 1;
          queue.push_back(n);
        }
      };
      if (i > 0) visit(cur - 1);
      if (i + 1 < nx) visit(cur + 1);
      if (j > 0) visit(cur - nx);
      if (j + 1 < ny) visit(cur + nx);
      if (k > 0) visit(cur - nx * ny);
      if (k + 1 < nz) visit(cur + nx * ny);
    }
  }
  for (const auto& ext : report.conductors) {
    if (ext.components == 0) report.warnings.push_back("conductor '" + ext.name + "' has no volume");
    else if (ext.components > 1)
      report.warnings.push_back("conductor '" + ext.name + "' is split into " + std::to_string(ext.components) +
                                " floating regions");
  }
  return report;
}

std::string format_report(const SolidReport& report) {
  std::ostringstream os;
  os << "conductors " << report.conductor_count << "\n";
  for (const auto& c : report.conductors)
    os << "conductor " << c.name << " lo " << c.lo.x() << " " << c.lo.y() << " " << c.lo.z() << " hi " << c.hi.x()
       << " " << c.hi.y() << " " << c.hi.z() << " volume_nm3 " << c.volume_nm3 << " components " << c.components
       << "\n";
  for (const auto& [a, b] : report.shorts) os << "short " << a << " " << b << "\n";
  for (const auto& w : report.warnings) os << "warning " << w << "\n";
  return os.str();
}

}  // namespace qdcap
