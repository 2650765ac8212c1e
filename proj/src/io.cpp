#include "stochphase/io.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "stochphase/errors.hpp"

namespace stochphase {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != header.size()) throw config_error("csv", "row width does not match the header");
  rows.push_back(std::move(row));
}

std::string CsvTable::str() const {
  std::ostringstream os;
  const auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
    os << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("io", "cannot write " + path.string());
  out << content;
  if (!out) throw config_error("io", "write failed for " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("io", "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CsvTable field_table(const Grid2D& grid, const std::vector<std::string>& names,
                     const std::vector<const std::vector<double>*>& columns) {
  CsvTable t;
  t.header = {"x", "y"};
  t.header.insert(t.header.end(), names.begin(), names.end());
  for (std::size_t node = 0; node < grid.size(); ++node) {
    bool ok = grid.is_valid(node);
    for (const auto* c : columns) ok = ok && std::isfinite((*c)[node]);
    if (!ok) continue;
    const auto p = grid.point(node);
    std::vector<std::string> row{format_number(p[0]), format_number(p[1])};
    for (const auto* c : columns) row.push_back(format_number((*c)[node]));
    t.add_row(std::move(row));
  }
  return t;
}

std::string raw_block(const std::vector<double>& values) {
  std::string out(values.size() * sizeof(double), '\0');
  std::memcpy(out.data(), values.data(), out.size());
  return out;
}

json raw_sidecar(const Grid2D& grid, const std::string& name) {
  return {{"field", name},
          {"dtype", "float64"},
          {"order", "row-major, x fastest"},
          {"bounds", {grid.x_min, grid.x_max, grid.y_min, grid.y_max}},
          {"nx", grid.nx},
          {"ny", grid.ny},
          {"mask_digest", grid.mask_digest()}};
}

CsvTable reduced_table(const ReducedPhaseModel& model) {
  CsvTable t;
  t.header = {"phi", "a", "D", "count"};
  for (std::size_t b = 0; b < model.n_bins; ++b)
    t.add_row({format_number(model.phi[b]), format_number(model.a[b]), format_number(model.D[b]),
               format_number(model.count[b])});
  return t;
}

json reduced_metadata(const ReducedPhaseModel& model) {
  return json{{"label", to_string(model.label)},
              {"n_bins", model.n_bins},
              {"smoothing", model.smoothing},
              {"zero_crossings", model.zero_crossings()}};
}

CsvTable response_table(const ResponseCurve& curve) {
  CsvTable t;
  t.header = {"phi"};
  for (std::size_t c = 0; c < curve.dim(); ++c) t.header.push_back("comp" + std::to_string(c));
  for (std::size_t c = 0; c < curve.dim(); ++c) t.header.push_back("stderr" + std::to_string(c));
  for (std::size_t b = 0; b < curve.n_bins(); ++b) {
    std::vector<std::string> row{format_number(curve.phi[b])};
    for (std::size_t c = 0; c < curve.dim(); ++c) row.push_back(format_number(curve.values[c][b]));
    for (std::size_t c = 0; c < curve.dim(); ++c) row.push_back(format_number(curve.error[c][b]));
    t.add_row(std::move(row));
  }
  return t;
}

json to_json(const LongTermStats& s) {
  return json{{"omega_eff", s.omega_eff}, {"D_eff", s.D_eff},     {"stderr_omega", s.stderr_omega},
              {"stderr_D", s.stderr_D},   {"n_traj", s.n_traj}, {"t_window", s.t_window}};
}

json to_json(const Region& r) {
  return json{{"lower", r.box.lower},
              {"upper", r.box.upper},
              {"lattice", r.lattice},
              {"threshold", r.threshold},
              {"cells", r.cells.size()},
              {"dominant_share", r.dominant_share},
              {"fragmented", r.fragmented},
              {"digest", r.digest()}};
}

json to_json(const GedmdModel& g) {
  json L = json::array();
  for (Eigen::Index i = 0; i < g.L.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < g.L.cols(); ++j) row.push_back(g.L(i, j));
    L.push_back(std::move(row));
  }
  json v_re = json::array(), v_im = json::array();
  for (Eigen::Index i = 0; i < g.v.size(); ++i) {
    v_re.push_back(g.v(i).real());
    v_im.push_back(g.v(i).imag());
  }
  return json{{"basis",
               {{"kind", "monomial"},
                {"dim", g.basis.dim()},
                {"degree", g.basis.degree()},
                {"size", g.basis.size()},
                {"center", g.basis.center()},
                {"scale", g.basis.scale()}}},
              {"lambda1", {g.lambda1.real(), g.lambda1.imag()}},
              {"x_ref", g.x_ref},
              {"residual", g.residual},
              {"condition", g.condition},
              {"samples", g.samples},
              {"region", to_json(g.region)},
              {"L", std::move(L)},
              {"v_re", std::move(v_re)},
              {"v_im", std::move(v_im)}};
}

}  // namespace stochphase
