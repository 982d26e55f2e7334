#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "quadma/benchmarks.hpp"
#include "quadma/mesh.hpp"
#include "quadma/quadrature.hpp"
#include "quadma/solver.hpp"

namespace quadma::io {

using nlohmann::json;

/// Full-precision scientific notation.
inline std::string sci(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17e", v);
  return buf;
}

/// Writes to a sibling temporary and renames over the target.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline json grid_to_json(const Grid& grid) {
  json j;
  j["kind"] = to_string(grid.kind);
  j["n"] = grid.n;
  j["h"] = grid.h;
  j["stencil_width"] = grid.stencil_width;
  j["depth"] = grid.depth;
  j["angles"] = grid.angles.angles();
  j["interior_count"] = grid.interior_count;
  json pts = json::array();
  for (auto const& p : grid.points) pts.push_back({p.x, p.y});
  j["points"] = std::move(pts);
  json mask = json::array();
  for (auto v : grid.interior) mask.push_back(v != 0);
  j["interior"] = std::move(mask);
  json table = json::array();
  for (std::size_t node = 0; node < grid.interior_count; ++node) {
    json row = json::array();
    for (std::size_t a = 0; a < grid.angle_count(); ++a) {
      auto const& s = grid.stencil(node, a);
      row.push_back({{"plus", s.plus}, {"h_plus", s.h_plus}, {"minus", s.minus}, {"h_minus", s.h_minus}});
    }
    table.push_back(std::move(row));
  }
  j["stencils"] = std::move(table);
  return j;
}

inline json report_to_json(const SolveReport& r) {
  return {{"converged", r.converged},
          {"status", to_string(r.status)},
          {"iterations", r.iterations},
          {"final_residual", r.final_residual},
          {"threshold", r.threshold},
          {"residual_history", r.residual_history},
          {"alpha_history", r.alpha_history}};
}

inline const char* kStudyCsvHeader = "n,h,max_error,runtime_seconds,newton_iters";

inline std::string study_csv(const std::vector<ConvergenceRow>& rows, bool with_timing = true) {
  std::ostringstream os;
  os << kStudyCsvHeader << '\n';
  for (auto const& r : rows)
    os << r.n << ',' << sci(r.h) << ',' << sci(r.max_error) << ',' << sci(with_timing ? r.runtime_seconds : 0.0)
       << ',' << r.newton_iters << '\n';
  return os.str();
}

inline json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json study_summary(const std::string& problem, const Backend& backend, const ConvergenceStudy& study) {
  json rows = json::array();
  for (auto const& r : study.rows)
    rows.push_back({{"n", r.n}, {"converged", r.converged}, {"status", r.status}, {"newton_iters", r.newton_iters}});
  return {{"problem", problem},
          {"backend", to_string(backend.kind)},
          {"order", optional_json(study.fit.order)},
          {"order_trimmed", optional_json(study.fit.order_trimmed)},
          {"coarsest_excluded", study.fit.coarsest_excluded},
          {"rows", std::move(rows)}};
}

/// Angle table: index, angle, gap, trapezoid weight, Simpson weight (empty when
/// the rule is not defined for this set), followed by summary lines.
inline std::string angles_table(const AngularDiscretization& d) {
  auto const trap = trapezoid_weights(d);
  std::optional<QuadratureRule> simp;
  std::string simpson_error;
  try {
    simp = simpson_weights(d);
  } catch (const QuadratureError& e) {
    simpson_error = e.what();
  }
  std::ostringstream os;
  os << "index,angle,gap,trapezoid_weight,simpson_weight\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    os << i << ',' << sci(d.angle(i)) << ',' << sci(d.gaps()[i]) << ',' << sci(trap.weights[i]) << ',';
    if (simp) os << sci(simp->weights[i]);
    os << '\n';
  }
  os << "# count=" << d.size() << '\n';
  os << "# resolution=" << sci(d.resolution()) << '\n';
  os << "# quasi_uniformity=" << sci(d.quasi_uniformity()) << '\n';
  os << "# simpson_positive=" << (simp ? "true" : "false") << '\n';
  if (!simpson_error.empty()) os << "# simpson_error=" << simpson_error << '\n';
  return os.str();
}

inline std::string solution_csv(const Grid& grid, const GridFunction& u) {
  std::ostringstream os;
  os << "x,y,interior,u\n";
  for (std::size_t k = 0; k < grid.size(); ++k)
    os << sci(grid.points[k].x) << ',' << sci(grid.points[k].y) << ',' << int(grid.interior[k]) << ','
       << sci(u[static_cast<Eigen::Index>(k)]) << '\n';
  return os.str();
}

}  // namespace quadma::io
