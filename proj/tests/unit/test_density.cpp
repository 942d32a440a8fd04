#include <doctest.h>

#include "qdcap/constants.hpp"
#include "qdcap/density.hpp"
#include "qdcap/error.hpp"
#include "support.hpp"

using namespace qdcap;

namespace {

// Uniform top gate over 35 nm of oxide on silicon, fine cells at the interface.
const char* kMos = R"({
  "domain_box": {"origin": [0, 0, 0], "size": [20, 20, 245]},
  "materials": [{"name": "Si", "permittivity": 11.9}, {"name": "SiO2", "permittivity": 3.9},
                {"name": "metal", "conductor": true}],
  "steps": [{"kind": "planar_film", "material": "Si", "thickness_nm": 200},
            {"kind": "planar_film", "material": "SiO2", "thickness_nm": 35},
            {"kind": "planar_film", "material": "metal", "thickness_nm": 10, "conductor": "gate"}],
  "grid": {"target_cell_nm": [20, 20, 5], "min_cell_nm": 0.1, "max_cell_nm": 20,
           "refinement_boxes": [{"lo": [0, 0, 198], "hi": [20, 20, 202], "spacing_nm": [20, 20, 0.25]}]}})";

// Two gates over a thin oxide; gate g1 sits over the left half.
const char* kTwoGates = R"({
  "domain_box": {"origin": [0, 0, 0], "size": [200, 100, 180]},
  "materials": [{"name": "Si", "permittivity": 11.9}, {"name": "SiO2", "permittivity": 3.9},
                {"name": "metal", "conductor": true}],
  "masks": [{"name": "gates", "polygons": [[[20, 20], [90, 20], [90, 80], [20, 80]],
                                           [[110, 20], [180, 20], [180, 80], [110, 80]]]}],
  "steps": [{"kind": "planar_film", "material": "Si", "thickness_nm": 100},
            {"kind": "planar_film", "material": "SiO2", "thickness_nm": 20},
            {"kind": "patterned_deposit", "material": "metal", "thickness_nm": 20, "mask": "gates",
             "conductors": ["g1", "g2"]}],
  "grid": {"target_cell_nm": [5, 5, 5], "min_cell_nm": 0.1, "max_cell_nm": 20,
           "refinement_boxes": [{"lo": [0, 0, 98], "hi": [200, 100, 102], "spacing_nm": [5, 5, 0.5]}]}})";

double oracle(double dv, const DensityParams& p) {
  const double c_ox = kEpsilon0 * 3.9 / 35.0 * 1e-18 / kNm2ToCm2;  // F/cm^2
  const double c_q = kElementaryChargeC * p.dos_2d;
  return c_ox * dv / (kElementaryChargeC * (1.0 + c_ox / c_q));
}

VoxelGrid grid_of(const char* doc) {
  const ProcessRecipe r = load_recipe(doc);
  return generate_grid(build_solid(r), test::recipe_grid(r));
}

}  // namespace

TEST_SUITE("density") {
  TEST_CASE("one dimensional stack matches the series capacitor density") {
    const VoxelGrid g = grid_of(kMos);
    DensityParams p;
    p.threshold_offset_V = 0.3;
    for (double dv : {0.5, 1.0, 2.0}) {
      const DensityMap m = solve_thomas_fermi(g, {{"gate", p.threshold_offset_V + dv}}, p);
      REQUIRE(m.converged);
      CHECK(m.n(0, 0) == doctest::Approx(oracle(dv, p)).epsilon(0.01));
    }
    CHECK(oracle(1.0, p) == doctest::Approx(6.14e11).epsilon(2e-3));
  }

  TEST_CASE("gates at or below threshold leave no electrons") {
    const VoxelGrid g = grid_of(kTwoGates);
    DensityParams p;
    p.threshold_offset_V = 0.5;
    const DensityMap m = solve_thomas_fermi(g, {{"g1", 0.5}, {"g2", -1.0}}, p);
    CHECK(m.converged);
    CHECK(m.n.abs().maxCoeff() == 0.0);
  }

  TEST_CASE("raising a gate never lowers the density") {
    const VoxelGrid g = grid_of(kTwoGates);
    DensityParams p;
    const DensityMap lo = solve_thomas_fermi(g, {{"g1", 0.4}, {"g2", 1.0}}, p);
    const DensityMap hi = solve_thomas_fermi(g, {{"g1", 0.8}, {"g2", 1.0}}, p);
    REQUIRE(lo.converged);
    REQUIRE(hi.converged);
    CHECK((hi.n - lo.n).minCoeff() >= -1e-6 * hi.n.maxCoeff());
    CHECK(lo.n.minCoeff() >= 0.0);
    CHECK(lo.residual <= p.sc_tol);
    // The density sits under the gates and is larger under the higher one.
    const auto ix = [&](double x) {
      return static_cast<Eigen::Index>(std::lower_bound(lo.xs.begin(), lo.xs.end(), x) - lo.xs.begin());
    };
    const auto iy = static_cast<Eigen::Index>(lo.ys.size() / 2);
    CHECK(lo.n(ix(55), iy) < lo.n(ix(145), iy));
    CHECK(lo.interface_z == 100.0);
  }

  TEST_CASE("converged maps are self consistent") {
    const VoxelGrid g = grid_of(kTwoGates);
    DensityParams p;
    p.sc_tol = 1e-8;
    const DensityMap m = solve_thomas_fermi(g, {{"g1", 1.0}, {"g2", 0.6}}, p);
    CHECK(m.converged);
    CHECK(m.residual <= p.sc_tol);
    CHECK(m.iterations >= 1);
    CHECK(m.xs.size() + 1 == m.x_planes.size());
    CHECK(static_cast<std::size_t>(m.n.rows()) == m.xs.size());
  }

  TEST_CASE("bias and parameter validation") {
    const VoxelGrid g = grid_of(kTwoGates);
    CHECK_THROWS_AS(solve_thomas_fermi(g, {{"g1", 1.0}}), ValidationError);
    CHECK_THROWS_AS(bias_vector(g, {{"g1", 1.0}, {"g2", 0.0}, {"g3", 0.0}}), ValidationError);
    const DriveVector v = bias_vector(g, {{"g2", 2.0}, {"g1", 1.0}});
    CHECK(v[0] == 1.0);
    CHECK(v[1] == 2.0);
    DensityParams p;
    p.mixing = 0.0;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = {};
    p.critical_density = -1.0;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = {};
    p.dos_2d = 0.0;
    CHECK_THROWS_AS(p.validate(), ValidationError);
  }

  TEST_CASE("sheet conductors are removed for the density solve") {
    const ProcessRecipe r = recipe_without_sheets(test::bundled("device1.json"));
    CHECK(r.steps.size() == 5);
    const auto names = r.conductor_names();
    REQUIRE(names.size() == 9);
    CHECK(names.front() == "C8");
    CHECK(names.back() == "C16");
  }
}
