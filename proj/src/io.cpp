#include "qdcap/io.hpp"

#include <json.hpp>

#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "qdcap/error.hpp"

namespace qdcap {

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string export_matrix_csv(const CapacitanceMatrix& c) {
  const MatrixDiagnostics d = check_matrix(c);
  std::ostringstream os;
  os << "# capacitance matrix, aF\n";
  os << "# cells=" << c.cell_count << "\n";
  os << "# tol=" << fmt("%.3g", c.tol) << "\n";
  os << "# raw_asymmetry=" << fmt("%.3g", c.raw_asymmetry) << "\n";
  os << "# max_row_sum=" << fmt("%.3g", d.max_row_sum) << "\n";
  os << "# diagonal: self-term with all conductors present, not the capacitance to infinity\n";
  os << "name";
  for (const auto& n : c.names) os << "," << n;
  os << "\n";
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    os << c.names[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < c.size(); ++j) os << "," << fmt("%.4g", c.values(i, j));
    os << "\n";
  }
  return os.str();
}

CapacitanceMatrix load_matrix_csv(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string line;
  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;
  double asym = 0.0;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    if (line[0] == '#') {
      if (line.rfind("# raw_asymmetry=", 0) == 0) asym = std::stod(line.substr(16));
      continue;
    }
    const auto cells = split(line, ',');
    if (names.empty()) {
      names.assign(cells.begin() + 1, cells.end());
      continue;
    }
    if (cells.size() != names.size() + 1)
      throw ValidationError("matrix CSV line " + std::to_string(lineno) + ": expected " +
                            std::to_string(names.size() + 1) + " fields");
    std::vector<double> row;
    for (std::size_t k = 1; k < cells.size(); ++k) {
      try {
        row.push_back(std::stod(cells[k]));
      } catch (const std::exception&) {
        throw ValidationError("matrix CSV line " + std::to_string(lineno) + ": bad number '" + cells[k] + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (names.empty() || rows.size() != names.size()) throw ValidationError("matrix CSV is not square");
  const auto n = static_cast<Eigen::Index>(names.size());
  Eigen::MatrixXd v(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) v(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  CapacitanceMatrix c = make_matrix(std::move(names), std::move(v));
  c.raw_asymmetry = asym;
  return c;
}

std::vector<std::string> sanitize_names(const std::vector<std::string>& names) {
  std::vector<std::string> out;
  std::set<std::string> used;
  for (const auto& n : names) {
    std::string s = n;
    for (char& ch : s)
      if (!std::isalnum(static_cast<unsigned char>(ch))) ch = '_';
    if (s.empty()) s = "_";
    std::string candidate = s;
    for (int k = 1; used.contains(candidate); ++k) candidate = s + "_" + std::to_string(k);
    used.insert(candidate);
    out.push_back(candidate);
  }
  return out;
}

std::string export_spice(const CapacitanceMatrix& c, std::string_view name, double floor_aF) {
  const auto nodes = sanitize_names(c.names);
  std::ostringstream os;
  os << "* capacitance subcircuit, values in aF\n";
  os << ".SUBCKT " << name;
  for (const auto& n : nodes) os << " " << n;
  os << "\n";
  for (Eigen::Index i = 0; i < c.size(); ++i)
    for (Eigen::Index j = i + 1; j < c.size(); ++j) {
      const double cij = c.values(i, j);
      if (std::abs(cij) < floor_aF) continue;
      if (cij > 0.0)
        throw ValidationError("positive off-diagonal entry C(" + c.names[static_cast<std::size_t>(i)] + "," +
                              c.names[static_cast<std::size_t>(j)] + ")");
      os << "C" << i + 1 << "_" << j + 1 << " " << nodes[static_cast<std::size_t>(i)] << " "
         << nodes[static_cast<std::size_t>(j)] << " " << fmt("%.4g", -cij) << "aF\n";
    }
  os << ".ENDS\n";
  return os.str();
}

std::string export_vtk(const VoxelGrid& grid, const Eigen::VectorXd* phi) {
  std::ostringstream os;
  os << "# vtk DataFile Version 3.0\n";
  os << "qdcap voxel grid\n";
  os << "ASCII\n";
  os << "DATASET RECTILINEAR_GRID\n";
  os << "DIMENSIONS " << grid.nx() + 1 << " " << grid.ny() + 1 << " " << grid.nz() + 1 << "\n";
  const char* axes[3] = {"X_COORDINATES", "Y_COORDINATES", "Z_COORDINATES"};
  for (int a = 0; a < 3; ++a) {
    const auto& p = grid.planes[static_cast<std::size_t>(a)];
    os << axes[a] << " " << p.size() << " double\n";
    for (std::size_t i = 0; i < p.size(); ++i) os << fmt("%.9g", p[i]) << (i + 1 < p.size() ? " " : "\n");
  }
  const std::size_t n = grid.cell_count();
  os << "CELL_DATA " << n << "\n";
  os << "SCALARS material int 1\nLOOKUP_TABLE default\n";
  for (std::size_t c = 0; c < n; ++c) os << grid.material[c] << "\n";
  os << "SCALARS conductor int 1\nLOOKUP_TABLE default\n";
  for (std::size_t c = 0; c < n; ++c) os << grid.conductor[c] << "\n";
  if (phi) {
    os << "SCALARS phi double 1\nLOOKUP_TABLE default\n";
    for (std::size_t c = 0; c < n; ++c) os << fmt("%.9g", (*phi)[static_cast<Eigen::Index>(c)]) << "\n";
  }
  return os.str();
}

std::string export_density(const DensityMap& map) {
  std::ostringstream os;
  os << "x_nm,y_nm,n_s_cm2\n";
  for (std::size_t j = 0; j < map.ys.size(); ++j)
    for (std::size_t i = 0; i < map.xs.size(); ++i)
      os << fmt("%.6g", map.xs[i]) << "," << fmt("%.6g", map.ys[j]) << ","
         << fmt("%.6g", map.n(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) << "\n";
  return os.str();
}

std::string export_contours(const DotRegion& region) {
  nlohmann::ordered_json doc;
  doc["level_cm2"] = region.level;
  doc["masks"] = nlohmann::ordered_json::array();
  std::size_t k = 0;
  std::set<std::string> used;
  for (const auto& c : region.polygons) {
    std::string name;
    if (c.is_dot) name = "dot_" + c.conductor;
    else if (!c.conductor.empty()) name = "region_" + c.conductor;
    else name = "contour_" + std::to_string(k++);
    for (char& ch : name) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    const std::string stem = name;
    for (int dup = 2; used.contains(name); ++dup) name = stem + "_" + std::to_string(dup);
    used.insert(name);
    nlohmann::ordered_json ring = nlohmann::ordered_json::array();
    for (const auto& v : c.polygon.vertices) ring.push_back({v.x(), v.y()});
    doc["masks"].push_back({{"name", name},
                            {"layer", c.encloses_above ? "2deg" : "2deg_hole"},
                            {"polygons", nlohmann::ordered_json::array({ring})}});
  }
  return doc.dump(2) + "\n";
}

std::string export_sweep(const SweepTable& table) {
  std::ostringstream os;
  os << "parameter,requested,achieved,target,C_aF,pct_change\n";
  for (const auto& r : table.rows)
    os << table.parameter << "," << fmt("%.6g", r.requested) << "," << fmt("%.6g", r.achieved) << "," << r.target
       << "," << fmt("%.4g", r.capacitance_aF) << "," << fmt("%.3f", r.pct_change) << "\n";
  return os.str();
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << text;
}

}  // namespace qdcap
