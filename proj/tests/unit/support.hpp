#pragma once

#include <filesystem>
#include <string>

#include "qdcap/capmatrix.hpp"
#include "qdcap/grid.hpp"
#include "qdcap/recipe.hpp"
#include "qdcap/solid.hpp"

namespace qdcap::test {

inline std::filesystem::path recipe_path(const std::string& name) {
  return std::filesystem::path(QDCAP_RECIPE_DIR) / name;
}

inline ProcessRecipe bundled(const std::string& name, const ParameterMap& overrides = {}) {
  return load_recipe_file(recipe_path(name), overrides);
}

inline GridSpec recipe_grid(const ProcessRecipe& r) { return r.grid ? *r.grid : GridSpec{}; }

/// Published nanowire matrix, two significant digits.
inline CapacitanceMatrix published_nanowire() {
  Eigen::MatrixXd m(8, 8);
  m << 30.5, -7.7, -8.1, -0.23, -2.3, -2.3, -0.06, -9.7,  //
      -7.7, 30.5, -0.23, -8.1, -0.06, -2.3, -2.3, -9.7,   //
      -8.1, -0.23, 130, -2.3, -3.7, -0.59, -0.32, -115,   //
      -0.23, -8.1, -2.3, 130, -0.32, -0.59, -3.7, -115,   //
      -2.3, -0.06, -3.7, -0.32, 72, -0.14, -0.08, -65,    //
      -2.3, -2.3, -0.59, -0.59, -0.14, 72, -0.14, -66,    //
      -0.06, -2.3, -0.32, -3.7, -0.08, -0.14, 72, -65,    //
      -9.7, -9.7, -115, -115, -65, -66, -65, 445;
  return make_matrix({"island1", "island2", "source", "drain", "LGS", "LGC", "LGD", "UG"}, m);
}

/// Ground plane under 40 nm of oxide with three pads on top; the outer pads
/// mirror each other about x = 120.
inline const char* kPads = R"({
  "name": "pads",
  "parameters": {"oxide": 40},
  "domain_box": {"origin": [0, 0, 0], "size": [240, 120, "oxide + 40"]},
  "materials": [{"name": "SiO2", "permittivity": 3.9}, {"name": "metal", "conductor": true}],
  "masks": [{"name": "pads", "polygons": [[[20, 30], [70, 30], [70, 90], [20, 90]],
                                          [[95, 30], [145, 30], [145, 90], [95, 90]],
                                          [[170, 30], [220, 30], [220, 90], [170, 90]]]}],
  "steps": [{"kind": "planar_film", "material": "metal", "thickness_nm": 10, "conductor": "back"},
            {"kind": "planar_film", "material": "SiO2", "thickness_nm": "oxide"},
            {"kind": "patterned_deposit", "material": "metal", "thickness_nm": 10, "mask": "pads",
             "conductors": ["a", "b", "c"]}],
  "grid": {"target_cell_nm": [5, 5, 5], "min_cell_nm": 0.5, "max_cell_nm": 20}
})";

/// Solid, grid and matrix in one step for small benchmarks.
inline CapacitanceMatrix extract(const ProcessRecipe& r, const SolveOptions& opts = {}) {
  const DeviceSolid solid = build_solid(r);
  const VoxelGrid grid = generate_grid(solid, recipe_grid(r));
  return extract_matrix(grid, opts);
}

/// Scratch directory unique to the running test binary.
inline std::filesystem::path scratch_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "qdcap_unit";
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace qdcap::test
