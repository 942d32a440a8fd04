#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qdcap/expression.hpp"
#include "qdcap/grid_spec.hpp"
#include "qdcap/polygon.hpp"

namespace qdcap {

struct Material {
  std::string name;
  double relative_permittivity = 1.0;
  bool is_conductor = false;
};

struct MaskLayout {
  std::string name;
  std::string layer_tag;
  std::vector<Polygon2D> polygons;
};

enum class StepKind { planar_film, patterned_deposit, conformal_deposit, etch_pattern, conductor_sheet };

std::string_view to_string(StepKind kind);

struct ProcessStep {
  StepKind kind = StepKind::planar_film;
  std::string material;
  /// Film/deposit thickness, etch depth or sheet depth.
  double thickness_nm = 0.0;
  std::optional<std::string> mask;
  /// Empty: no conductor. One entry: the whole step is that conductor.
  /// Otherwise one name per mask polygon.
  std::vector<std::string> conductors;
  /// Sheet top; defaults to the top of the substrate step.
  std::optional<double> reference_z_nm;
  /// Parameter name when the thickness field was a bare parameter reference.
  std::string thickness_parameter;
};

struct DomainBox {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d size = Eigen::Vector3d::Zero();

  Eigen::Vector3d lo() const { return origin; }
  Eigen::Vector3d hi() const { return origin + size; }
};

struct ProcessRecipe {
  std::string name;
  std::vector<Material> materials;
  std::vector<MaskLayout> masks;
  std::vector<ProcessStep> steps;
  DomainBox domain;
  ParameterMap parameters;
  std::optional<GridSpec> grid;

  /// Provenance: the document text and the directory relative paths resolve
  /// against. Kept so parameter overrides can re-resolve the document.
  std::string source_text;
  std::filesystem::path base_dir;
  ParameterMap overrides;

  const Material& material(std::string_view name) const;
  int material_index(std::string_view name) const;
  const MaskLayout& mask(std::string_view name) const;
  MaskLayout* find_mask(std::string_view name);
  const MaskLayout* find_mask(std::string_view name) const;

  /// Conductor names in declaration order.
  std::vector<std::string> conductor_names() const;
};

/// Parses and fully resolves a recipe document. Errors are ValidationError
/// messages naming the offending field path and line.
ProcessRecipe load_recipe(std::string_view document, const std::filesystem::path& base_dir = {},
                          const ParameterMap& overrides = {});

ProcessRecipe load_recipe_file(const std::filesystem::path& path, const ParameterMap& overrides = {});

/// Re-resolves the recipe's source document with parameters overridden.
ProcessRecipe with_parameters(const ProcessRecipe& recipe, const ParameterMap& overrides);

/// Parses a standalone mask document ({"masks": [...]}) as written by
/// export_contours.
std::vector<MaskLayout> load_masks(std::string_view document, const ParameterMap& params = {});

}  // namespace qdcap
