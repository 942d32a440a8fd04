#include "qdcap/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "qdcap/capmatrix.hpp"
#include "qdcap/contour.hpp"
#include "qdcap/density.hpp"
#include "qdcap/error.hpp"
#include "qdcap/grid.hpp"
#include "qdcap/io.hpp"
#include "qdcap/log.hpp"
#include "qdcap/parallel.hpp"
#include "qdcap/recipe.hpp"
#include "qdcap/sensitivity.hpp"
#include "qdcap/solid.hpp"

namespace qdcap::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Options {
  std::string recipe;
  std::string grid = "default";
  std::vector<double> grid_target;
  double tol = 1e-8;
  std::size_t max_iterations = 0;
  int threads = 0;
  std::vector<std::string> params;  // name=value overrides
  std::string out_matrix, out_spice, out_vtk, out_density, out_contours, out_sweep, out_recipe;
  std::string biases;
  std::optional<double> level;
  std::string sweep_param;
  std::vector<double> values;
  std::vector<std::string> targets;
  std::string matrix_file;
  std::string spice_name;
};

ParameterMap parse_overrides(const std::vector<std::string>& items) {
  ParameterMap out;
  for (const auto& s : items) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ValidationError("--set expects name=value, got '" + s + "'");
    try {
      out[s.substr(0, eq)] = std::stod(s.substr(eq + 1));
    } catch (const std::exception&) {
      throw ValidationError("--set " + s + ": value is not a number");
    }
  }
  return out;
}

ProcessRecipe load(const Options& o) {
  if (o.recipe.empty()) throw ValidationError("--recipe is required");
  return load_recipe_file(o.recipe, parse_overrides(o.params));
}

// Flags override the recipe's grid block, which overrides the defaults.
GridSpec grid_spec(const Options& o, const ProcessRecipe& r) {
  GridSpec spec = r.grid.value_or(GridSpec{});
  if (!o.grid_target.empty()) {
    if (o.grid_target.size() == 1) spec.target_cell_nm.setConstant(o.grid_target[0]);
    else if (o.grid_target.size() == 3) spec.target_cell_nm = Eigen::Vector3d(o.grid_target[0], o.grid_target[1], o.grid_target[2]);
    else throw ValidationError("--grid-target takes one or three values");
    spec.max_cell_nm = std::max(spec.max_cell_nm, spec.target_cell_nm.maxCoeff());
    spec.min_cell_nm = std::min(spec.min_cell_nm, spec.target_cell_nm.minCoeff());
  }
  if (o.grid != "default") {
    double factor = 0.0;
    try {
      factor = std::stod(o.grid);
    } catch (const std::exception&) {
      throw ValidationError("--grid expects 'default' or a refinement factor, got '" + o.grid + "'");
    }
    spec = refine(spec, factor);
  }
  spec.validate();
  return spec;
}

SolveOptions solve_options(const Options& o) {
  SolveOptions s;
  s.tol = o.tol;
  s.max_iterations = o.max_iterations;
  return s;
}

void emit(const std::string& path, std::string_view text) {
  if (path.empty()) return;
  write_text(path, text);
  log::info("wrote " + path);
}

struct DensityConfig {
  std::map<std::string, double> biases;
  std::vector<Seed> seeds;
  DensityParams params;
  std::string dot;
  double depth_nm = 10.0;
};

DensityConfig load_density_config(const std::string& path) {
  if (path.empty()) throw ValidationError("--biases is required");
  DensityConfig cfg;
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
  try {
    for (const auto& [k, v] : doc.at("biases").items()) cfg.biases[k] = v.get<double>();
    if (doc.contains("seeds"))
      for (const auto& s : doc["seeds"]) {
        Seed seed;
        seed.conductor = s.at("conductor").get<std::string>();
        seed.point = Point2(s.at("point").at(0).get<double>(), s.at("point").at(1).get<double>());
        seed.dot = s.value("dot", false);
        cfg.seeds.push_back(seed);
      }
    if (doc.contains("density")) {
      const auto& d = doc["density"];
      auto& p = cfg.params;
      p.critical_density = d.value("critical_density", p.critical_density);
      p.dos_2d = d.value("dos_2d", p.dos_2d);
      p.threshold_offset_V = d.value("threshold_offset_V", p.threshold_offset_V);
      p.mixing = d.value("mixing", p.mixing);
      p.sc_tol = d.value("sc_tol", p.sc_tol);
      p.max_iterations = d.value("max_iterations", p.max_iterations);
    }
    cfg.depth_nm = doc.value("depth_nm", cfg.depth_nm);
    for (const auto& s : cfg.seeds)
      if (s.dot) cfg.dot = s.conductor;
  } catch (const json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
  cfg.params.validate();
  return cfg;
}

void print_couplings(const CapacitanceMatrix& c, const std::string& dot) {
  for (const auto& [name, v] : couplings_to(c, dot)) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "  %-10s %10.4g aF", name.c_str(), v);
    std::cerr << buf << "\n";
  }
}

CapacitanceMatrix extract(const ProcessRecipe& recipe, const GridSpec& spec, const SolveOptions& so) {
  const DeviceSolid solid = build_solid(recipe);
  const VoxelGrid grid = generate_grid(solid, spec);
  return extract_matrix(grid, so);
}

void write_matrix_outputs(const Options& o, const CapacitanceMatrix& c, const std::string& name) {
  const MatrixDiagnostics d = check_matrix(c);
  std::cerr << format_diagnostics(d);
  emit(o.out_matrix, export_matrix_csv(c));
  if (!o.out_spice.empty()) emit(o.out_spice, export_spice(c, o.spice_name.empty() ? name : o.spice_name));
  if (o.out_matrix.empty() && o.out_spice.empty()) std::cout << export_matrix_csv(c);
}

DensityMap density_for(const ProcessRecipe& recipe, const GridSpec& spec, const DensityConfig& cfg,
                       const SolveOptions& so) {
  const ProcessRecipe gates = recipe_without_sheets(recipe);
  const DeviceSolid solid = build_solid(gates);
  const VoxelGrid grid = generate_grid(solid, spec);
  DensityParams p = cfg.params;
  p.solve = so;
  DensityMap map = solve_thomas_fermi(grid, cfg.biases, p);
  if (!map.converged)
    throw SolverError("density did not converge after " + std::to_string(map.iterations) + " iterations");
  return map;
}

DotRegion dot_region(const DensityMap& map, const DensityConfig& cfg, double level) {
  DotRegion region = extract_contour(map, level);
  if (!region.note.empty()) log::warn(region.note);
  classify(region, cfg.seeds);
  return region;
}

int cmd_build(const Options& o) {
  const ProcessRecipe r = load(o);
  const DeviceSolid solid = build_solid(r);
  const SolidReport rep = validate_solid(solid);
  std::cout << format_report(rep);
  return rep.ok() ? 0 : 1;
}

int cmd_grid(const Options& o) {
  const ProcessRecipe r = load(o);
  const VoxelGrid grid = generate_grid(build_solid(r), grid_spec(o, r));
  std::cout << format_report(grid_report(grid));
  emit(o.out_vtk, export_vtk(grid));
  return 0;
}

int cmd_extract(const Options& o) {
  const ProcessRecipe r = load(o);
  const CapacitanceMatrix c = extract(r, grid_spec(o, r), solve_options(o));
  write_matrix_outputs(o, c, r.name);
  return 0;
}

int cmd_density(const Options& o) {
  const ProcessRecipe r = load(o);
  const DensityConfig cfg = load_density_config(o.biases);
  const DensityMap map = density_for(r, grid_spec(o, r), cfg, solve_options(o));
  emit(o.out_density, export_density(map));
  const DotRegion region = dot_region(map, cfg, o.level.value_or(cfg.params.critical_density));
  emit(o.out_contours, export_contours(region));
  std::cerr << "density iterations=" << map.iterations << " residual=" << map.residual
            << " contours=" << region.polygons.size() << "\n";
  return 0;
}

int cmd_refine_dot(const Options& o) {
  const ProcessRecipe r = load(o);
  const DensityConfig cfg = load_density_config(o.biases);
  if (cfg.dot.empty()) throw ValidationError(o.biases + ": no seed is marked as the dot");
  const GridSpec spec = grid_spec(o, r);
  const SolveOptions so = solve_options(o);
  const DensityMap map = density_for(r, spec, cfg, so);
  emit(o.out_density, export_density(map));
  const DotRegion region = dot_region(map, cfg, o.level.value_or(cfg.params.critical_density));
  emit(o.out_contours, export_contours(region));
  const ProcessRecipe refined = promote_to_conductor(r, region, cfg.depth_nm, cfg.dot);
  emit(o.out_recipe, refined.source_text);
  const CapacitanceMatrix c = extract(refined, spec, so);
  std::cerr << "couplings to " << cfg.dot << " with the contour dot:\n";
  print_couplings(c, cfg.dot);
  write_matrix_outputs(o, c, refined.name);
  return 0;
}

int cmd_sweep(const Options& o) {
  const ProcessRecipe r = load(o);
  SweepSpec spec;
  spec.parameter = o.sweep_param;
  spec.values = o.values;
  for (const auto& t : o.targets) {
    const auto colon = t.find(':');
    if (colon == std::string::npos) throw ValidationError("--targets expects gate:dot, got '" + t + "'");
    spec.targets.push_back({t.substr(0, colon), t.substr(colon + 1)});
  }
  if (spec.targets.empty()) throw ValidationError("--targets is required");
  const SweepTable table = sweep(r, spec, grid_spec(o, r), solve_options(o));
  if (o.out_sweep.empty()) std::cout << export_sweep(table);
  else emit(o.out_sweep, export_sweep(table));
  return 0;
}

int cmd_check(const Options& o) {
  const CapacitanceMatrix c = load_matrix_csv(read_text(o.matrix_file));
  const MatrixDiagnostics d = check_matrix(c);
  std::cerr << format_diagnostics(d);
  return d.ok() ? 0 : 1;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Capacitance extraction for quantum-dot devices"};
  app.require_subcommand(1);
  Options o;
  std::string log_level;
  app.add_option("--log", log_level, "quiet, info or debug (overrides QDCAP_LOG)")
      ->check(CLI::IsMember({"quiet", "info", "debug"}));
  app.add_option("--threads", o.threads, "worker threads (0: runtime default)")->check(CLI::NonNegativeNumber);

  auto common = [&](CLI::App* sub, bool solver) {
    sub->add_option("--recipe", o.recipe, "process recipe document")->required()->check(CLI::ExistingFile);
    sub->add_option("--set", o.params, "parameter override name=value (repeatable)");
    sub->add_option("--grid", o.grid, "'default' or a refinement factor applied to the recipe grid");
    sub->add_option("--grid-target", o.grid_target, "target cell size in nm (one value or three)")->expected(1, 3);
    sub->add_option("--threads", o.threads, "worker threads")->check(CLI::NonNegativeNumber);
    if (solver) sub->add_option("--tol", o.tol, "relative residual tolerance")->check(CLI::Range(1e-14, 0.5));
    if (solver) sub->add_option("--max-iterations", o.max_iterations, "PCG iteration cap (0: automatic)");
  };
  auto matrix_out = [&](CLI::App* sub) {
    sub->add_option("--out-matrix", o.out_matrix, "matrix CSV path");
    sub->add_option("--out-spice", o.out_spice, "SPICE subcircuit path");
    sub->add_option("--spice-name", o.spice_name, "subcircuit name (default: recipe name)");
  };
  auto density_opts = [&](CLI::App* sub) {
    sub->add_option("--biases", o.biases, "bias, seed and density document")->required()->check(CLI::ExistingFile);
    sub->add_option("--level", o.level, "contour level in cm^-2 (default: critical density)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out-density", o.out_density, "density CSV path");
    sub->add_option("--out-contours", o.out_contours, "contour mask document path");
  };

  auto* build = app.add_subcommand("build", "build the solid and print its report");
  common(build, false);
  auto* grid = app.add_subcommand("grid", "generate the grid and print its report");
  common(grid, false);
  grid->add_option("--out-vtk", o.out_vtk, "VTK path");
  auto* extract_cmd = app.add_subcommand("extract", "extract the capacitance matrix");
  common(extract_cmd, true);
  matrix_out(extract_cmd);
  auto* density = app.add_subcommand("density", "solve the 2DEG density and extract contours");
  common(density, true);
  density_opts(density);
  auto* refine_dot = app.add_subcommand("refine-dot", "replace the dot by its density contour and re-extract");
  common(refine_dot, true);
  density_opts(refine_dot);
  matrix_out(refine_dot);
  refine_dot->add_option("--out-recipe", o.out_recipe, "refined recipe path");
  auto* sweep_cmd = app.add_subcommand("sweep", "re-extract couplings over a parameter sweep");
  common(sweep_cmd, true);
  sweep_cmd->add_option("--param", o.sweep_param, "recipe parameter")->required();
  sweep_cmd->add_option("--values", o.values, "parameter values")->required()->expected(2, -1);
  sweep_cmd->add_option("--targets", o.targets, "gate:dot pairs")->required();
  sweep_cmd->add_option("--out-sweep", o.out_sweep, "sweep CSV path");
  auto* check = app.add_subcommand("check", "check a matrix CSV");
  check->add_option("matrix", o.matrix_file, "matrix CSV")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (!log_level.empty())
    log::set_level(log_level == "quiet" ? log::Level::quiet : log_level == "debug" ? log::Level::debug : log::Level::info);
  set_threads(o.threads);

  try {
    if (*build) return cmd_build(o);
    if (*grid) return cmd_grid(o);
    if (*extract_cmd) return cmd_extract(o);
    if (*density) return cmd_density(o);
    if (*refine_dot) return cmd_refine_dot(o);
    if (*sweep_cmd) return cmd_sweep(o);
    if (*check) return cmd_check(o);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace qdcap::cli
