#include <doctest.h>

#include <fstream>

#include "qdcap/error.hpp"
#include "qdcap/expression.hpp"
#include "qdcap/recipe.hpp"
#include "support.hpp"

using namespace qdcap;

namespace {

const char* kSubstrateOnly = R"({
  "name": "bare",
  "domain_box": {"origin": [0, 0, 0], "size": [200, 200, 1200]},
  "materials": [{"name": "Si", "permittivity": 11.9}],
  "steps": [{"kind": "planar_film", "material": "Si", "thickness_nm": 1000}]
})";

std::string with_thickness(const std::string& t) {
  return R"({
  "domain_box": {"origin": [0, 0, 0], "size": [200, 200, 1200]},
  "materials": [{"name": "Si", "permittivity": 11.9}],
  "steps": [{"kind": "planar_film", "material": "Si", "thickness_nm": )" +
         t + "}]}";
}

}  // namespace

TEST_SUITE("expression") {
  TEST_CASE("arithmetic with precedence and unary minus") {
    const ParameterMap p{{"a", 3.0}, {"b", 4.0}};
    CHECK(evaluate_expression("1 + 2 * 3", p) == 7.0);
    CHECK(evaluate_expression("(1 + 2) * 3", p) == 9.0);
    CHECK(evaluate_expression("-a + $b", p) == 1.0);
    CHECK(evaluate_expression("-(a * b) / 2", p) == -6.0);
    CHECK(evaluate_expression("2.5e1", p) == 25.0);
  }

  TEST_CASE("unknown names and bad syntax are errors") {
    CHECK_THROWS_AS(evaluate_expression("a + c", {{"a", 1.0}}), ValidationError);
    CHECK_THROWS_AS(evaluate_expression("1 +", {}), ValidationError);
    CHECK_THROWS_AS(evaluate_expression("(1", {}), ValidationError);
    CHECK_THROWS_AS(evaluate_expression("1 2", {}), ValidationError);
  }
}

TEST_SUITE("recipe") {
  TEST_CASE("substrate only document") {
    const ProcessRecipe r = load_recipe(kSubstrateOnly);
    CHECK(r.steps.size() == 1);
    CHECK(r.conductor_names().empty());
    CHECK(r.domain.hi().z() == 1200.0);
  }

  TEST_CASE("bundled device recipe") {
    const ProcessRecipe r = test::bundled("device1.json");
    REQUIRE(r.steps.size() == 6);
    const auto names = r.conductor_names();
    REQUIRE(names.size() == 16);
    for (int k = 0; k < 16; ++k) CHECK(names[static_cast<std::size_t>(k)] == "C" + std::to_string(k + 1));
    CHECK(r.steps[0].thickness_nm == 1000.0);
    CHECK(r.steps[1].kind == StepKind::conductor_sheet);
    CHECK(r.steps[1].thickness_nm == 10.0);
    CHECK(r.steps[2].thickness_nm == 35.0);
    CHECK(r.steps[3].thickness_nm == 200.0);
    CHECK(r.steps[4].kind == StepKind::conformal_deposit);
    CHECK(r.steps[4].thickness_nm == 60.0);
    CHECK(r.steps[5].thickness_nm == 300.0);
    CHECK(r.material("Al2O3").relative_permittivity == 7.9);
    CHECK(r.material("SiO2").relative_permittivity == 3.9);
    CHECK(r.material("Si").relative_permittivity == 11.9);
  }

  TEST_CASE("enlarged gate footprint is thirty nm outside the drawn one") {
    const ProcessRecipe r = test::bundled("device1.json");
    const auto& drawn = r.mask("poly_drawn").polygons;
    const auto& poly = r.mask("poly").polygons;
    REQUIRE(drawn.size() == poly.size());
    for (std::size_t i = 0; i < drawn.size(); ++i) {
      const Box2 a = bounds(drawn[i]), b = bounds(poly[i]);
      CHECK(b.lo.x() == doctest::Approx(a.lo.x() - 30));
      CHECK(b.hi.y() == doctest::Approx(a.hi.y() + 30));
    }
  }

  TEST_CASE("negative thickness names the field") {
    try {
      load_recipe(with_thickness("-5"));
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("/steps/0/thickness_nm") != std::string::npos);
    }
  }

  TEST_CASE("unknown parameter and material are errors") {
    CHECK_THROWS_AS(load_recipe(with_thickness("\"missing\"")), ValidationError);
    std::string doc = kSubstrateOnly;
    doc.replace(doc.find("\"Si\", \"thickness"), 4, "\"Ge\"");
    CHECK_THROWS_AS(load_recipe(doc), ValidationError);
    CHECK_THROWS_AS(load_recipe("{ not json"), ValidationError);
  }

  TEST_CASE("overrides re-resolve dependent expressions") {
    const ProcessRecipe base = test::bundled("plates.json");
    CHECK(base.domain.size.z() == 30.0);
    const ProcessRecipe r = with_parameters(base, {{"gap", 20.0}});
    CHECK(r.domain.size.z() == 40.0);
    CHECK(r.steps[1].thickness_nm == 20.0);
    CHECK(r.steps[1].thickness_parameter == "gap");
    CHECK_THROWS_AS(with_parameters(base, {{"nope", 1.0}}), ValidationError);
  }

  TEST_CASE("mask files resolve against the document directory") {
    const auto dir = test::scratch_dir() / "maskfiles";
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "extra.json") << R"({"masks": [{"name": "pad", "layer": "m1",
      "polygons": [[[10, 10], [60, 10], [60, 60], [10, 60]]]}]})";
    std::ofstream(dir / "r.json") << R"({
      "domain_box": {"origin": [0, 0, 0], "size": [100, 100, 100]},
      "mask_files": ["extra.json"],
      "materials": [{"name": "ox", "permittivity": 3.9}, {"name": "m", "conductor": true}],
      "steps": [{"kind": "planar_film", "material": "ox", "thickness_nm": 50},
                {"kind": "patterned_deposit", "material": "m", "thickness_nm": 10, "mask": "pad", "conductor": "pad"}]})";
    const ProcessRecipe r = load_recipe_file(dir / "r.json");
    CHECK(area(r.mask("pad").polygons.at(0)) == doctest::Approx(2500.0));
  }

  TEST_CASE("masks leaving the domain are rejected") {
    const char* doc = R"({
      "domain_box": {"origin": [0, 0, 0], "size": [100, 100, 100]},
      "materials": [{"name": "ox", "permittivity": 3.9}, {"name": "m", "conductor": true}],
      "masks": [{"name": "pad", "polygons": [[[10, 10], [160, 10], [160, 60], [10, 60]]]}],
      "steps": [{"kind": "planar_film", "material": "ox", "thickness_nm": 50},
                {"kind": "patterned_deposit", "material": "m", "thickness_nm": 10, "mask": "pad", "conductor": "pad"}]})";
    CHECK_THROWS_AS(build_solid(load_recipe(doc)), ValidationError);
  }
}
