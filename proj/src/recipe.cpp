#include "qdcap/recipe.hpp"

#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include <json.hpp>

#include "qdcap/error.hpp"

namespace qdcap {

using json = nlohmann::ordered_json;

std::string_view to_string(StepKind kind) {
  switch (kind) {
    case StepKind::planar_film: return "planar_film";
    case StepKind::patterned_deposit: return "patterned_deposit";
    case StepKind::conformal_deposit: return "conformal_deposit";
    case StepKind::etch_pattern: return "etch_pattern";
    case StepKind::conductor_sheet: return "conductor_sheet";
  }
  return "?";
}

namespace {

// ---------------------------------------------------------------------------
// Line lookup: a SAX pass over the document records the line on which each
// JSON pointer starts.

struct LineCountingIterator {
  using iterator_category = std::forward_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char*;
  using reference = const char&;

  const char* p = nullptr;
  std::size_t* line = nullptr;

  reference operator*() const { return *p; }
  LineCountingIterator& operator++() {
    if (*p == '\n') ++*line;
    ++p;
    return *this;
  }
  LineCountingIterator operator++(int) {
    auto tmp = *this;
    ++*this;
    return tmp;
  }
  bool operator==(const LineCountingIterator& o) const { return p == o.p; }
  bool operator!=(const LineCountingIterator& o) const { return p != o.p; }
};

class LineIndex : public nlohmann::json_sax<json> {
 public:
  explicit LineIndex(std::string_view text) {
    std::size_t line = 1;
    line_ = &line;
    LineCountingIterator first{text.data(), &line};
    LineCountingIterator last{text.data() + text.size(), &line};
    json::sax_parse(first, last, this, nlohmann::detail::input_format_t::json, false);
    line_ = nullptr;
  }

  std::size_t line_of(const std::string& pointer) const {
    std::string p = pointer;
    for (;;) {
      if (auto it = lines_.find(p); it != lines_.end()) return it->second;
      const auto slash = p.find_last_of('/');
      if (slash == std::string::npos || p.empty()) return 0;
      p.resize(slash);
    }
  }

  bool null() override { return value(); }
  bool boolean(bool) override { return value(); }
  bool number_integer(number_integer_t) override { return value(); }
  bool number_unsigned(number_unsigned_t) override { return value(); }
  bool number_float(number_float_t, const string_t&) override { return value(); }
  bool string(string_t&) override { return value(); }
  bool binary(binary_t&) override { return value(); }
  bool start_object(std::size_t) override {
    enter_value();
    stack_.push_back({false, 0, ""});
    return true;
  }
  bool key(string_t& k) override {
    stack_.back().key = k;
    lines_.emplace(path() + "/" + k, *line_);
    return true;
  }
  bool end_object() override {
    stack_.pop_back();
    return true;
  }
  bool start_array(std::size_t) override {
    enter_value();
    stack_.push_back({true, 0, ""});
    return true;
  }
  bool end_array() override {
    stack_.pop_back();
    return true;
  }
  bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception&) override {
    return false;
  }

 private:
  struct Frame {
    bool is_array;
    std::size_t index;
    std::string key;
  };

  std::string path() const {
    std::string p;
    for (const auto& f : stack_) {
      if (&f == &stack_.back()) break;
      p += "/" + (f.is_array ? std::to_string(f.index - 1) : f.key);
    }
    if (!stack_.empty()) {
      const auto& f = stack_.back();
      if (f.is_array) p += "/" + std::to_string(f.index);
    }
    return p;
  }

  // Called when a value (scalar or container) begins at the current position.
  void enter_value() {
    if (stack_.empty()) return;
    auto& f = stack_.back();
    if (f.is_array) {
      lines_.emplace(path(), *line_);
      ++f.index;
    }
  }
  bool value() {
    enter_value();
    return true;
  }

  std::size_t* line_ = nullptr;
  std::vector<Frame> stack_;
  std::map<std::string, std::size_t> lines_;
};

// ---------------------------------------------------------------------------

class Resolver {
 public:
  Resolver(std::string_view text, const LineIndex& lines) : text_(text), lines_(lines) {}

  [[noreturn]] void fail(const std::string& pointer, const std::string& what) const {
    std::ostringstream os;
    os << "schema violation at " << (pointer.empty() ? "/" : pointer);
    if (const auto line = lines_.line_of(pointer); line > 0) os << " (line " << line << ")";
    os << ": " << what;
    throw ValidationError(os.str());
  }

  const json& require(const json& obj, const std::string& pointer, const char* key) const {
    if (!obj.is_object()) fail(pointer, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) fail(pointer, std::string("missing field '") + key + "'");
    return *it;
  }

  std::string string_field(const json& obj, const std::string& pointer, const char* key) const {
    const json& v = require(obj, pointer, key);
    if (!v.is_string()) fail(pointer + "/" + key, "expected a string");
    return v.get<std::string>();
  }

  double number(const json& v, const std::string& pointer, const ParameterMap& params) const {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      try {
        return evaluate_expression(v.get<std::string>(), params);
      } catch (const ValidationError& e) {
        fail(pointer, e.what());
      }
    }
    fail(pointer, "expected a number or parameter expression");
  }

  Eigen::Vector3d vec3(const json& v, const std::string& pointer, const ParameterMap& params) const {
    if (!v.is_array() || v.size() != 3) fail(pointer, "expected [x, y, z]");
    return {number(v[0], pointer + "/0", params), number(v[1], pointer + "/1", params),
            number(v[2], pointer + "/2", params)};
  }

  Polygon2D polygon(const json& v, const std::string& pointer, const ParameterMap& params) const {
    if (!v.is_array()) fail(pointer, "expected an array of [x, y] pairs");
    Polygon2D poly;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto p = pointer + "/" + std::to_string(i);
      if (!v[i].is_array() || v[i].size() != 2) fail(p, "expected an [x, y] pair");
      poly.vertices.emplace_back(number(v[i][0], p + "/0", params), number(v[i][1], p + "/1", params));
    }
    try {
      auto n = normalized(poly);
      if (!is_simple(n)) fail(pointer, "polygon self-intersects");
      return n;
    } catch (const ValidationError& e) {
      if (std::string_view(e.what()).starts_with("schema violation")) throw;
      fail(pointer, e.what());
    }
  }

  std::vector<MaskLayout> masks(const json& arr, const std::string& pointer, const ParameterMap& params,
                                const std::vector<MaskLayout>& known) const {
    if (!arr.is_array()) fail(pointer, "expected an array of masks");
    std::vector<MaskLayout> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const auto p = pointer + "/" + std::to_string(i);
      const json& m = arr[i];
      MaskLayout mask;
      mask.name = string_field(m, p, "name");
      mask.layer_tag = m.value("layer", mask.name);
      if (m.contains("from")) {
        const auto src = string_field(m, p, "from");
        const MaskLayout* base = nullptr;
        for (const std::vector<MaskLayout>* list : std::initializer_list<const std::vector<MaskLayout>*>{&out, &known})
          for (const auto& k : *list)
            if (k.name == src) base = &k;
        if (!base) fail(p + "/from", "unknown mask '" + src + "'");
        mask.polygons = base->polygons;
      }
      if (m.contains("polygons")) {
        const json& polys = m["polygons"];
        if (!polys.is_array()) fail(p + "/polygons", "expected an array of polygons");
        for (std::size_t j = 0; j < polys.size(); ++j)
          mask.polygons.push_back(polygon(polys[j], p + "/polygons/" + std::to_string(j), params));
      }
      if (mask.polygons.empty()) fail(p, "mask has no polygons");
      if (m.contains("offset_nm")) {
        const double d = number(m["offset_nm"], p + "/offset_nm", params);
        for (auto& poly : mask.polygons) {
          try {
            poly = offset_polygon(poly, d);
          } catch (const ValidationError& e) {
            fail(p + "/offset_nm", e.what());
          }
        }
      }
      out.push_back(std::move(mask));
    }
    return out;
  }

 private:
  std::string_view text_;
  const LineIndex& lines_;
};

std::optional<GridSpec> parse_grid(const Resolver& r, const json& g, const ParameterMap& params) {
  GridSpec spec;
  const std::string p = "/grid";
  if (!g.is_object()) r.fail(p, "expected an object");
  if (g.contains("target_cell_nm")) {
    const json& t = g["target_cell_nm"];
    if (t.is_array()) spec.target_cell_nm = r.vec3(t, p + "/target_cell_nm", params);
    else spec.target_cell_nm.setConstant(r.number(t, p + "/target_cell_nm", params));
  }
  if (g.contains("min_cell_nm")) spec.min_cell_nm = r.number(g["min_cell_nm"], p + "/min_cell_nm", params);
  if (g.contains("max_cell_nm")) spec.max_cell_nm = r.number(g["max_cell_nm"], p + "/max_cell_nm", params);
  if (g.contains("snap_tolerance_nm"))
    spec.snap_tolerance_nm = r.number(g["snap_tolerance_nm"], p + "/snap_tolerance_nm", params);
  if (g.contains("max_cells"))
    spec.max_cells = static_cast<std::size_t>(r.number(g["max_cells"], p + "/max_cells", params));
  if (g.contains("refinement_boxes")) {
    const json& boxes = g["refinement_boxes"];
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      const auto bp = p + "/refinement_boxes/" + std::to_string(i);
      RefinementBox box;
      box.lo = r.vec3(r.require(boxes[i], bp, "lo"), bp + "/lo", params);
      box.hi = r.vec3(r.require(boxes[i], bp, "hi"), bp + "/hi", params);
      const json& s = r.require(boxes[i], bp, "spacing_nm");
      if (s.is_array()) box.spacing_nm = r.vec3(s, bp + "/spacing_nm", params);
      else box.spacing_nm.setConstant(r.number(s, bp + "/spacing_nm", params));
      if ((box.hi.array() <= box.lo.array()).any()) r.fail(bp, "box hi must exceed lo");
      if ((box.spacing_nm.array() <= 0).any()) r.fail(bp + "/spacing_nm", "spacing must be positive");
      spec.refinement_boxes.push_back(box);
    }
  }
  try {
    spec.validate();
  } catch (const ValidationError& e) {
    r.fail(p, e.what());
  }
  return spec;
}

StepKind parse_kind(const Resolver& r, const std::string& s, const std::string& pointer) {
  for (auto k : {StepKind::planar_film, StepKind::patterned_deposit, StepKind::conformal_deposit,
                 StepKind::etch_pattern, StepKind::conductor_sheet})
    if (to_string(k) == s) return k;
  r.fail(pointer, "unknown step kind '" + s + "'");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json parse_json(std::string_view text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into a line number.
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw ValidationError("schema violation in " + what + " (line " + std::to_string(line) +
                          "): malformed JSON: " + e.what());
  }
}

}  // namespace

const Material& ProcessRecipe::material(std::string_view n) const {
  return materials.at(static_cast<std::size_t>(material_index(n)));
}

int ProcessRecipe::material_index(std::string_view n) const {
  for (std::size_t i = 0; i < materials.size(); ++i)
    if (materials[i].name == n) return static_cast<int>(i);
  throw ValidationError("unknown material '" + std::string(n) + "'");
}

const MaskLayout& ProcessRecipe::mask(std::string_view n) const {
  for (const auto& m : masks)
    if (m.name == n) return m;
  throw ValidationError("unknown mask '" + std::string(n) + "'");
}

MaskLayout* ProcessRecipe::find_mask(std::string_view n) {
  for (auto& m : masks)
    if (m.name == n) return &m;
  return nullptr;
}

const MaskLayout* ProcessRecipe::find_mask(std::string_view n) const {
  for (const auto& m : masks)
    if (m.name == n) return &m;
  return nullptr;
}

std::vector<std::string> ProcessRecipe::conductor_names() const {
  std::vector<std::string> names;
  for (const auto& s : steps)
    for (const auto& c : s.conductors) names.push_back(c);
  return names;
}

ProcessRecipe load_recipe(std::string_view document, const std::filesystem::path& base_dir,
                          const ParameterMap& overrides) {
  const json doc = parse_json(document, "recipe document");
  const LineIndex lines(document);
  const Resolver r(document, lines);
  if (!doc.is_object()) r.fail("", "recipe must be a JSON object");

  ProcessRecipe recipe;
  recipe.source_text = std::string(document);
  recipe.base_dir = base_dir;
  recipe.overrides = overrides;
  recipe.name = doc.value("name", "recipe");

  // Parameters may reference earlier parameters.
  if (doc.contains("parameters")) {
    const json& params = doc["parameters"];
    if (!params.is_object()) r.fail("/parameters", "expected an object");
    for (const auto& [k, v] : params.items()) {
      if (auto it = overrides.find(k); it != overrides.end()) {
        recipe.parameters[k] = it->second;
        continue;
      }
      recipe.parameters[k] = r.number(v, "/parameters/" + k, recipe.parameters);
    }
  }
  for (const auto& [k, v] : overrides)
    if (!recipe.parameters.contains(k))
      throw ValidationError("parameter override '" + k + "' is not declared in the recipe");
  const ParameterMap& params = recipe.parameters;

  // Domain.
  {
    const json& d = r.require(doc, "", "domain_box");
    if (d.is_array()) {
      recipe.domain.size = r.vec3(d, "/domain_box", params);
    } else {
      recipe.domain.size = r.vec3(r.require(d, "/domain_box", "size"), "/domain_box/size", params);
      if (d.contains("origin")) recipe.domain.origin = r.vec3(d["origin"], "/domain_box/origin", params);
    }
    if ((recipe.domain.size.array() <= 0).any()) r.fail("/domain_box", "extents must be strictly positive");
  }

  // Materials.
  {
    const json& mats = r.require(doc, "", "materials");
    if (!mats.is_array() || mats.empty()) r.fail("/materials", "expected a non-empty array");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < mats.size(); ++i) {
      const auto p = "/materials/" + std::to_string(i);
      Material m;
      m.name = r.string_field(mats[i], p, "name");
      m.is_conductor = mats[i].value("conductor", false);
      if (mats[i].contains("permittivity"))
        m.relative_permittivity = r.number(mats[i]["permittivity"], p + "/permittivity", params);
      else if (!m.is_conductor)
        r.fail(p, "dielectric material needs 'permittivity'");
      if (!m.is_conductor && m.relative_permittivity < 1.0)
        r.fail(p + "/permittivity", "relative permittivity must be >= 1");
      if (!seen.insert(m.name).second) r.fail(p + "/name", "duplicate material '" + m.name + "'");
      recipe.materials.push_back(m);
    }
  }

  // Masks, including external mask documents.
  if (doc.contains("mask_files")) {
    const json& files = doc["mask_files"];
    if (!files.is_array()) r.fail("/mask_files", "expected an array of paths");
    for (std::size_t i = 0; i < files.size(); ++i) {
      if (!files[i].is_string()) r.fail("/mask_files/" + std::to_string(i), "expected a path");
      const auto path = base_dir / files[i].get<std::string>();
      const auto more = load_masks(read_file(path), params);
      recipe.masks.insert(recipe.masks.end(), more.begin(), more.end());
    }
  }
  if (doc.contains("masks")) {
    auto more = r.masks(doc["masks"], "/masks", params, recipe.masks);
    recipe.masks.insert(recipe.masks.end(), more.begin(), more.end());
  }
  {
    std::set<std::string> seen;
    for (const auto& m : recipe.masks)
      if (!seen.insert(m.name).second) throw ValidationError("duplicate mask '" + m.name + "'");
  }

  // Steps.
  const json& steps = r.require(doc, "", "steps");
  if (!steps.is_array() || steps.empty()) r.fail("/steps", "expected a non-empty array");
  std::set<std::string> conductor_seen;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto p = "/steps/" + std::to_string(i);
    const json& s = steps[i];
    ProcessStep step;
    step.kind = parse_kind(r, r.string_field(s, p, "kind"), p + "/kind");
    step.material = r.string_field(s, p, "material");
    bool known = false;
    for (const auto& m : recipe.materials) known |= m.name == step.material;
    if (!known) r.fail(p + "/material", "unknown material '" + step.material + "'");

    const char* tkey = s.contains("depth_nm") ? "depth_nm" : "thickness_nm";
    const json& t = r.require(s, p, tkey);
    step.thickness_nm = r.number(t, p + "/" + tkey, params);
    if (t.is_string()) {
      std::string name = t.get<std::string>();
      if (!name.empty() && name.front() == '$') name.erase(0, 1);
      if (params.contains(name)) step.thickness_parameter = name;
    }
    if (!(step.thickness_nm > 0.0)) r.fail(p + "/" + tkey, "thickness must be positive");

    if (s.contains("mask")) {
      if (!s["mask"].is_string()) r.fail(p + "/mask", "expected a mask name");
      step.mask = s["mask"].get<std::string>();
      bool found = false;
      for (const auto& m : recipe.masks) found |= m.name == *step.mask;
      if (!found) r.fail(p + "/mask", "unknown mask '" + *step.mask + "'");
    }
    const bool needs_mask = step.kind == StepKind::patterned_deposit || step.kind == StepKind::etch_pattern ||
                            step.kind == StepKind::conductor_sheet;
    if (needs_mask && !step.mask) r.fail(p, std::string(to_string(step.kind)) + " requires a mask");

    if (s.contains("conductor")) {
      if (!s["conductor"].is_string()) r.fail(p + "/conductor", "expected a name");
      step.conductors.push_back(s["conductor"].get<std::string>());
    } else if (s.contains("conductors")) {
      const json& c = s["conductors"];
      if (!c.is_array()) r.fail(p + "/conductors", "expected an array of names");
      for (const auto& n : c) {
        if (!n.is_string()) r.fail(p + "/conductors", "expected an array of names");
        step.conductors.push_back(n.get<std::string>());
      }
      if (!step.mask || recipe.mask(*step.mask).polygons.size() != step.conductors.size())
        r.fail(p + "/conductors", "needs exactly one name per mask polygon");
    }
    if (step.kind == StepKind::conductor_sheet && step.conductors.empty())
      r.fail(p, "conductor_sheet requires a conductor name");
    if (step.kind == StepKind::etch_pattern && !step.conductors.empty())
      r.fail(p, "etch_pattern cannot name conductors");
    if (recipe.material(step.material).is_conductor && step.conductors.empty())
      r.fail(p, "conductor material '" + step.material + "' needs a conductor name");
    for (const auto& c : step.conductors)
      if (!conductor_seen.insert(c).second) r.fail(p, "duplicate conductor '" + c + "'");

    if (s.contains("reference_z_nm")) {
      if (step.kind != StepKind::conductor_sheet) r.fail(p + "/reference_z_nm", "only valid on conductor_sheet");
      step.reference_z_nm = r.number(s["reference_z_nm"], p + "/reference_z_nm", params);
    }
    if (i == 0 && (step.kind != StepKind::planar_film || step.mask))
      r.fail(p, "the first step must be an unmasked planar_film substrate spanning the domain");
    if (step.kind == StepKind::planar_film && step.mask) r.fail(p + "/mask", "planar_film takes no mask");
    recipe.steps.push_back(std::move(step));
  }

  if (doc.contains("grid")) recipe.grid = parse_grid(r, doc["grid"], params);
  return recipe;
}

ProcessRecipe load_recipe_file(const std::filesystem::path& path, const ParameterMap& overrides) {
  return load_recipe(read_file(path), path.parent_path(), overrides);
}

ProcessRecipe with_parameters(const ProcessRecipe& recipe, const ParameterMap& overrides) {
  ParameterMap merged = recipe.overrides;
  for (const auto& [k, v] : overrides) merged[k] = v;
  return load_recipe(recipe.source_text, recipe.base_dir, merged);
}

std::vector<MaskLayout> load_masks(std::string_view document, const ParameterMap& params) {
  const json doc = parse_json(document, "mask document");
  const LineIndex lines(document);
  const Resolver r(document, lines);
  return r.masks(r.require(doc, "", "masks"), "/masks", params, {});
}

}  // namespace qdcap
