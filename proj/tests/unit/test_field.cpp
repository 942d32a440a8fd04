#include <doctest.h>

#include "qdcap/constants.hpp"
#include "qdcap/error.hpp"
#include "qdcap/field.hpp"
#include "support.hpp"

using namespace qdcap;

namespace {

struct Bench {
  ProcessRecipe recipe;
  DeviceSolid solid;
  VoxelGrid grid;
  explicit Bench(ProcessRecipe r)
      : recipe(std::move(r)), solid(build_solid(recipe)), grid(generate_grid(solid, test::recipe_grid(recipe))) {}
};

DriveVector unit(Eigen::Index n, Eigen::Index k) {
  DriveVector d = DriveVector::Zero(n);
  d[k] = 1.0;
  return d;
}

}  // namespace

TEST_SUITE("field") {
  TEST_CASE("harmonic face conductance") {
    const double g = face_conductance(1.0, 1.0, 3.9, 1.0, 11.9);
    CHECK(g / kEpsilon0 == doctest::Approx(2.0 * 3.9 * 11.9 / (3.9 + 11.9)));
    CHECK(g / kEpsilon0 == doctest::Approx(5.874).epsilon(1e-4));
    CHECK(face_conductance(4.0, 2.0, 3.9, 2.0, 3.9) == doctest::Approx(kEpsilon0 * 3.9 * 4.0 / 2.0));
  }

  TEST_CASE("stacked half spaces use the harmonic permittivity across the interface") {
    const char* doc = R"({
      "domain_box": {"origin": [0, 0, 0], "size": [10, 10, 40]},
      "materials": [{"name": "m", "conductor": true}, {"name": "Si", "permittivity": 11.9},
                    {"name": "SiO2", "permittivity": 3.9}],
      "steps": [{"kind": "planar_film", "material": "m", "thickness_nm": 10, "conductor": "lo"},
                {"kind": "planar_film", "material": "Si", "thickness_nm": 10},
                {"kind": "planar_film", "material": "SiO2", "thickness_nm": 10},
                {"kind": "planar_film", "material": "m", "thickness_nm": 10, "conductor": "hi"}],
      "grid": {"target_cell_nm": [10, 10, 2], "min_cell_nm": 0.5, "max_cell_nm": 20}})";
    Bench b(load_recipe(doc));
    const VoxelGrid& g = b.grid;
    REQUIRE(g.nx() == 1);
    REQUIRE(g.ny() == 1);
    const FieldOperator op = assemble(g);
    std::size_t below = 0;
    for (std::size_t k = 0; k < g.nz(); ++k)
      if (g.planes[2][k + 1] == 20.0) below = k;
    const double h = g.width(2, below);
    REQUIRE(g.width(2, below + 1) == h);
    CHECK(op.coupling(below, below + 1) ==
          doctest::Approx(kEpsilon0 * 100.0 / h * 2.0 * 3.9 * 11.9 / (3.9 + 11.9)));
    // Interior rows of the column operator sum to zero.
    const auto& st = op.stencil();
    for (std::size_t k = 1; k + 1 < g.nz(); ++k) {
      if (!st.active[k] || !st.active[k - 1] || !st.active[k + 1]) continue;
      CHECK(st.diag[static_cast<Eigen::Index>(k)] ==
            doctest::Approx(op.coupling(k, k - 1) + op.coupling(k, k + 1)).epsilon(1e-12));
    }
  }

  TEST_CASE("parallel plates give a linear profile and the analytic charge") {
    Bench b(test::bundled("plates.json"));
    const FieldOperator op = assemble(b.grid);
    const FieldSolution sol = solve(op, unit(2, 0));
    REQUIRE(sol.converged);
    for (std::size_t k = 0; k < b.grid.nz(); ++k) {
      const std::size_t c = b.grid.index(0, 0, k);
      if (b.grid.is_conductor(c)) continue;
      CHECK(sol.phi[static_cast<Eigen::Index>(c)] == doctest::Approx(1.0 - (b.grid.center(2, k) - 10.0) / 10.0).epsilon(1e-7));
    }
    const ChargeVector q = conductor_charges(op, sol);
    const double oracle = kEpsilon0 * 3.9 * 100.0 * 100.0 / 10.0;
    CHECK(q[0] == doctest::Approx(oracle).epsilon(1e-6));
    CHECK(q[1] == doctest::Approx(-oracle).epsilon(1e-6));
    CHECK(oracle == doctest::Approx(34.53).epsilon(1e-4));
  }

  TEST_CASE("series stack divides the voltage by the layer capacitances") {
    Bench b(test::bundled("series_stack.json"));
    const FieldOperator op = assemble(b.grid);
    const FieldSolution sol = solve(op, unit(2, 1));
    const ChargeVector q = conductor_charges(op, sol);
    const double c_ox = kEpsilon0 * 3.9 * 1e4 / 35.0, c_si = kEpsilon0 * 11.9 * 1e4 / 20.0;
    const double c = 1.0 / (1.0 / c_ox + 1.0 / c_si);
    CHECK(q[1] == doctest::Approx(c).epsilon(1e-6));
    // Potential at the Si/SiO2 interface: charge over the silicon layer capacitance.
    const auto& g = b.grid;
    for (std::size_t k = 0; k + 1 < g.nz(); ++k)
      if (g.planes[2][k + 1] == 30.0) {
        const double lo = sol.phi[static_cast<Eigen::Index>(g.index(0, 0, k))];
        const double hi = sol.phi[static_cast<Eigen::Index>(g.index(0, 0, k + 1))];
        const double w_lo = g.width(2, k) / 2 / 11.9, w_hi = g.width(2, k + 1) / 2 / 3.9;
        const double interface = (lo * w_hi + hi * w_lo) / (w_lo + w_hi);
        CHECK(interface == doctest::Approx(c / c_si).epsilon(1e-6));
      }
  }

  TEST_CASE("zero drive returns a zero field without iterating") {
    Bench b(load_recipe(test::kPads));
    const FieldOperator op = assemble(b.grid);
    const FieldSolution sol = solve(op, DriveVector::Zero(4));
    CHECK(sol.iterations == 0);
    CHECK(sol.phi.cwiseAbs().maxCoeff() == 0.0);
    CHECK(conductor_charges(op, sol).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("maximum principle, charge neutrality, reciprocity and linearity") {
    Bench b(load_recipe(test::kPads));
    const FieldOperator op = assemble(b.grid);
    const double tol = 1e-10;
    SolveOptions o;
    o.tol = tol;
    DriveVector v1(4), v2(4);
    v1 << 0.0, 1.0, -0.5, 0.3;
    v2 << 0.2, -1.0, 0.0, 0.7;
    const FieldSolution s1 = solve(op, v1, o), s2 = solve(op, v2, o);
    CHECK(s1.phi.minCoeff() >= v1.minCoeff() - 1e-9);
    CHECK(s1.phi.maxCoeff() <= v1.maxCoeff() + 1e-9);
    const ChargeVector q1 = conductor_charges(op, s1), q2 = conductor_charges(op, s2);
    CHECK(std::abs(q1.sum()) <= 1e-3 * q1.cwiseAbs().maxCoeff());

    const FieldSolution s12 = solve(op, 2.0 * v1 - 3.0 * v2, o);
    const ChargeVector q12 = conductor_charges(op, s12);
    CHECK((q12 - (2.0 * q1 - 3.0 * q2)).cwiseAbs().maxCoeff() <= 10 * tol * q12.cwiseAbs().maxCoeff());

    const ChargeVector qa = conductor_charges(op, solve(op, unit(4, 1), o));
    const ChargeVector qc = conductor_charges(op, solve(op, unit(4, 3), o));
    CHECK(std::abs(qa[3] - qc[1]) <= 10 * tol * std::abs(qa[1]));
  }

  TEST_CASE("doubling every permittivity doubles every charge exactly") {
    Bench b(load_recipe(test::kPads));
    VoxelGrid scaled = b.grid;
    for (auto& m : scaled.materials) m.relative_permittivity *= 2.0;
    const FieldOperator op1 = assemble(b.grid), op2 = assemble(scaled);
    const DriveVector v = unit(4, 2);
    const ChargeVector q1 = conductor_charges(op1, solve(op1, v)), q2 = conductor_charges(op2, solve(op2, v));
    CHECK((q2 - 2.0 * q1).cwiseAbs().maxCoeff() <= 1e-12 * q1.cwiseAbs().maxCoeff());
  }

  TEST_CASE("diagonal preconditioning reaches the same charges") {
    Bench b(load_recipe(test::kPads));
    const FieldOperator op = assemble(b.grid);
    SolveOptions jac;
    jac.preconditioner = Preconditioner::jacobi;
    const FieldSolution sj = solve(op, unit(4, 0), jac), sm = solve(op, unit(4, 0));
    CHECK(sj.converged);
    CHECK(sm.iterations < sj.iterations);
    const ChargeVector qj = conductor_charges(op, sj), qm = conductor_charges(op, sm);
    CHECK((qj - qm).cwiseAbs().maxCoeff() <= 1e-6 * qm.cwiseAbs().maxCoeff());
  }

  TEST_CASE("an unconverged solve is refused") {
    Bench b(load_recipe(test::kPads));
    const FieldOperator op = assemble(b.grid);
    SolveOptions o;
    o.max_iterations = 1;
    o.preconditioner = Preconditioner::jacobi;
    const FieldSolution sol = solve(op, unit(4, 1), o);
    CHECK_FALSE(sol.converged);
    CHECK_THROWS_AS(conductor_charges(op, sol), SolverError);
  }

  TEST_CASE("a grid without conductors cannot be assembled") {
    const char* doc = R"({
      "domain_box": {"origin": [0, 0, 0], "size": [50, 50, 50]},
      "materials": [{"name": "air", "permittivity": 1.0}],
      "steps": [{"kind": "planar_film", "material": "air", "thickness_nm": 50}],
      "grid": {"target_cell_nm": [10, 10, 10]}})";
    Bench b(load_recipe(doc));
    CHECK_THROWS_AS(assemble(b.grid), ValidationError);
  }

  TEST_CASE("fringing plate capacitance converges under refinement") {
    const char* doc = R"({
      "domain_box": {"origin": [0, 0, 0], "size": [160, 160, 60]},
      "materials": [{"name": "SiO2", "permittivity": 3.9}, {"name": "m", "conductor": true}],
      "masks": [{"name": "top", "polygons": [[[30, 30], [130, 30], [130, 130], [30, 130]]]}],
      "steps": [{"kind": "planar_film", "material": "m", "thickness_nm": 10, "conductor": "bottom"},
                {"kind": "planar_film", "material": "SiO2", "thickness_nm": 10},
                {"kind": "patterned_deposit", "material": "m", "thickness_nm": 10, "mask": "top", "conductor": "top"}]})";
    const DeviceSolid s = build_solid(load_recipe(doc));
    std::vector<double> c;
    for (double h : {10.0, 5.0, 2.5}) {
      GridSpec spec;
      spec.target_cell_nm.setConstant(h);
      spec.max_cell_nm = 20.0;
      const VoxelGrid g = generate_grid(s, spec);
      const FieldOperator op = assemble(g);
      c.push_back(conductor_charges(op, solve(op, unit(2, 1)))[1]);
    }
    CHECK(std::abs(c[1] - c[2]) < std::abs(c[0] - c[1]));
    // First-order Richardson extrapolations from successive pairs agree.
    const double coarse = 2 * c[1] - c[0], fine = 2 * c[2] - c[1];
    MESSAGE("C(h) " << c[0] << " " << c[1] << " " << c[2] << ", extrapolated " << coarse << " " << fine);
    CHECK(std::abs(fine - coarse) < 0.01 * fine);
    CHECK(c[2] > kEpsilon0 * 3.9 * 1e4 / 10.0);
  }
}
