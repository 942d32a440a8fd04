#include <doctest.h>

#include <algorithm>
#include <queue>
#include <set>

#include "qdcap/error.hpp"
#include "qdcap/grid.hpp"
#include "support.hpp"

using namespace qdcap;

namespace {

const char* kTwoSlab = R"({
  "domain_box": {"origin": [0, 0, 0], "size": [100, 100, 1100]},
  "materials": [{"name": "Si", "permittivity": 11.9}, {"name": "SiO2", "permittivity": 3.9}],
  "steps": [{"kind": "planar_film", "material": "Si", "thickness_nm": 1000},
            {"kind": "planar_film", "material": "SiO2", "thickness_nm": 35}]})";

const char* kAirBox = R"({
  "domain_box": {"origin": [0, 0, 0], "size": [100, 100, 100]},
  "materials": [{"name": "air", "permittivity": 1.0}],
  "steps": [{"kind": "planar_film", "material": "air", "thickness_nm": 100}]})";

GridSpec uniform(double h, double max_cell = 100.0) {
  GridSpec s;
  s.target_cell_nm.setConstant(h);
  s.max_cell_nm = max_cell;
  return s;
}

bool has_plane(const std::vector<double>& planes, double z) {
  return std::any_of(planes.begin(), planes.end(), [&](double p) { return std::abs(p - z) < 1e-9; });
}

double max_ratio(const std::vector<double>& p) {
  double r = 1.0;
  for (std::size_t i = 1; i + 1 < p.size(); ++i) {
    const double a = p[i] - p[i - 1], b = p[i + 1] - p[i];
    r = std::max(r, std::max(a / b, b / a));
  }
  return r;
}

}  // namespace

TEST_SUITE("grid") {
  TEST_CASE("slab interfaces become grid planes") {
    const DeviceSolid s = build_solid(load_recipe(kTwoSlab));
    const VoxelGrid g = generate_grid(s, uniform(10.0));
    for (double z : {0.0, 1000.0, 1035.0, 1100.0}) CHECK(has_plane(g.planes[2], z));
    const GridReport rep = grid_report(g);
    double sio2 = 0.0, si = 0.0;
    for (const auto& [name, v] : rep.material_volume_nm3) {
      if (name == "SiO2") sio2 = v;
      if (name == "Si") si = v;
    }
    CHECK(sio2 == doctest::Approx(100.0 * 100.0 * 35.0).epsilon(1e-12));
    CHECK(si == doctest::Approx(100.0 * 100.0 * 1000.0).epsilon(1e-12));
    CHECK(max_ratio(g.planes[2]) <= 2.0 + 1e-12);
  }

  TEST_CASE("air box at ten nm") {
    const VoxelGrid g = generate_grid(build_solid(load_recipe(kAirBox)), uniform(10.0));
    CHECK(g.nx() == 10);
    CHECK(g.ny() == 10);
    CHECK(g.nz() == 10);
    const GridReport rep = grid_report(g);
    CHECK(rep.total == 1000);
    CHECK(rep.dielectric_cells == 1000);
    CHECK(g.conductors.empty());
    CHECK(format_report(rep).find("1000") != std::string::npos);
  }

  TEST_CASE("refinement scales spacings") {
    GridSpec s = uniform(10.0);
    s.min_cell_nm = 1.0;
    s.refinement_boxes.push_back({{0, 0, 0}, {10, 10, 10}, {4, 4, 2}});
    const GridSpec r = refine(s, 2.0);
    CHECK(r.target_cell_nm.x() == 5.0);
    CHECK(r.min_cell_nm == 0.5);
    CHECK(r.refinement_boxes[0].spacing_nm.z() == 1.0);
    CHECK(r.snap_tolerance_nm == s.snap_tolerance_nm);
    const GridSpec same = refine(s, 1.0);
    CHECK(same.target_cell_nm == s.target_cell_nm);
    CHECK(same.max_cell_nm == s.max_cell_nm);
    GridSpec fine = uniform(10.0);
    fine.min_cell_nm = 10.0;
    CHECK_THROWS_AS(refine(fine, 2000.0), ValidationError);
    CHECK_THROWS_AS(refine(s, 0.0), ValidationError);
  }

  TEST_CASE("spec validation") {
    GridSpec s = uniform(10.0);
    s.min_cell_nm = 20.0;
    CHECK_THROWS_AS(s.validate(), ValidationError);
    GridSpec t = uniform(10.0);
    t.max_cells = 100;
    CHECK_THROWS_AS(generate_grid(build_solid(load_recipe(kAirBox)), t), ValidationError);
  }

  TEST_CASE("interfaces closer than the minimum cell are a clamp conflict") {
    GridSpec s = uniform(10.0);
    s.min_cell_nm = 50.0;
    s.target_cell_nm.setConstant(50.0);
    CHECK_THROWS_AS(generate_grid(build_solid(load_recipe(kTwoSlab)), s), ValidationError);
  }

  TEST_CASE("axis grading never exceeds a factor of two") {
    std::vector<FeaturePlane> f{{0.0, true}, {3.0, true}, {3.5, true}, {400.0, true}};
    GridSpec s = uniform(40.0);
    const auto p = grid_axis(f, 0.0, 400.0, 2, s);
    CHECK(max_ratio(p) <= 2.0 + 1e-12);
    CHECK(has_plane(p, 3.0));
    CHECK(has_plane(p, 3.5));
    CHECK(std::is_sorted(p.begin(), p.end()));
  }

  TEST_CASE("island of the nanowire is one block four cells wide") {
    const ProcessRecipe r = test::bundled("nanowire.json");
    const DeviceSolid s = build_solid(r);
    GridSpec spec = uniform(40.0, 40.0);
    spec.refinement_boxes.push_back({{-130, -40, 380}, {0, 40, 460}, {5, 5, 5}});
    const VoxelGrid g = generate_grid(s, spec);
    const int id = g.conductor_id("island1");
    std::set<std::size_t> xs, ys, zs;
    std::vector<std::size_t> cells;
    for (std::size_t k = 0; k < g.nz(); ++k)
      for (std::size_t j = 0; j < g.ny(); ++j)
        for (std::size_t i = 0; i < g.nx(); ++i)
          if (g.conductor[g.index(i, j, k)] == id) {
            xs.insert(i);
            ys.insert(j);
            zs.insert(k);
            cells.push_back(g.index(i, j, k));
          }
    REQUIRE(!cells.empty());
    CHECK(ys.size() == 4);
    CHECK(zs.size() == 4);
    // Analytic footprint: (pitch - gap) x 20 x 20.
    const double length = 125.0 - 7.0;
    double volume = 0.0;
    for (std::size_t c : cells) {
      const std::size_t i = c % g.nx(), j = (c / g.nx()) % g.ny(), k = c / (g.nx() * g.ny());
      volume += g.width(0, i) * g.width(1, j) * g.width(2, k);
    }
    CHECK(volume == doctest::Approx(length * 20.0 * 20.0).epsilon(0.05));
    // Flood fill from the first cell reaches every island cell.
    std::set<std::size_t> all(cells.begin(), cells.end()), seen{cells[0]};
    std::queue<std::size_t> q;
    q.push(cells[0]);
    const std::ptrdiff_t stride[3] = {1, static_cast<std::ptrdiff_t>(g.nx()),
                                      static_cast<std::ptrdiff_t>(g.nx() * g.ny())};
    while (!q.empty()) {
      const auto c = static_cast<std::ptrdiff_t>(q.front());
      q.pop();
      for (auto st : stride)
        for (auto n : {c - st, c + st})
          if (n >= 0 && all.contains(static_cast<std::size_t>(n)) && !seen.contains(static_cast<std::size_t>(n))) {
            seen.insert(static_cast<std::size_t>(n));
            q.push(n);
          }
    }
    CHECK(seen.size() == all.size());
  }

  TEST_CASE("device grid at its defaults") {
    const ProcessRecipe r = test::bundled("device1.json");
    const VoxelGrid g = generate_grid(build_solid(r), test::recipe_grid(r));
    const GridReport rep = grid_report(g);
    CHECK(rep.total == rep.counts[0] * rep.counts[1] * rep.counts[2]);
    CHECK(rep.total > 500'000);
    CHECK(rep.total < 4'000'000);
    for (int a = 0; a < 3; ++a) CHECK(max_ratio(g.planes[static_cast<std::size_t>(a)]) <= 2.0 + 1e-9);
    for (double z : {1000.0, 990.0, 1035.0, 1235.0}) CHECK(has_plane(g.planes[2], z));
    CHECK(g.conductors.size() == 16);
  }

  TEST_CASE("generation is deterministic and refinement keeps snapped labels") {
    const DeviceSolid s = build_solid(load_recipe(kTwoSlab));
    const VoxelGrid a = generate_grid(s, uniform(10.0)), b = generate_grid(s, uniform(10.0));
    CHECK(a.planes == b.planes);
    CHECK(a.material == b.material);
    const VoxelGrid f = generate_grid(s, refine(uniform(10.0), 2.0));
    for (std::size_t k = 0; k < f.nz(); ++k) {
      const double z = f.center(2, k);
      const auto it = std::upper_bound(a.planes[2].begin(), a.planes[2].end(), z);
      const std::size_t kc = static_cast<std::size_t>(it - a.planes[2].begin()) - 1;
      CHECK(f.material[f.index(0, 0, k)] == a.material[a.index(0, 0, kc)]);
    }
  }
}
