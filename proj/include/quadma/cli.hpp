#pragma once

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "quadma/io.hpp"
#include "quadma/quadma.hpp"

namespace quadma::cli {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct DomainConfig {
  std::string type = "square";  // "square" or "disc"
  Point2 lower_left{0.0, 0.0};
  double side = 1.0;
  Point2 center{0.0, 0.0};
  double radius = 1.0;

  ConvexDomain build() const {
    if (type == "square") {
      if (!(side > 0.0)) throw ConfigError("domain.side must be positive");
      return square(lower_left, side);
    }
    if (type == "disc") {
      if (!(radius > 0.0)) throw ConfigError("domain.radius must be positive");
      return disc(center, radius);
    }
    throw ConfigError("domain.type must be 'square' or 'disc', got '" + type + "'");
  }
};

struct RunConfig {
  std::string subcommand;
  std::string backend = "cartesian";
  std::string problem = "ex1";
  std::vector<int> n;
  std::optional<int> K;
  double K_scale = 1.0;
  std::optional<double> epsilon;
  NewtonConfig newton;
  bool warm_start = true;
  std::optional<int> coarse_n;
  std::optional<DomainConfig> domain;
  std::string out_dir = ".";
  std::optional<std::string> dump_grid;
  bool omit_timing = false;

  Backend make_backend() const {
    Backend b;
    if (backend == "cartesian")
      b.kind = MeshKind::cartesian;
    else if (backend == "hex" || backend == "hexagonal")
      b.kind = MeshKind::hexagonal;
    else
      throw ConfigError("backend must be 'hex' or 'cartesian', got '" + backend + "'");
    if (!(K_scale > 0.0)) throw ConfigError("K_scale must be positive");
    b.depth_scale = K_scale;
    if (K) {
      if (*K < 1) throw ConfigError("K must be at least 1");
      b.depth = K;
    }
    if (epsilon) {
      if (!(*epsilon > 0.0)) throw ConfigError("epsilon must be positive");
      b.epsilon = epsilon;
    }
    return b;
  }

  void validate() const {
    if (subcommand == "angles") {
      if (backend != "cartesian") return;
      if (!K) throw ConfigError("angles: K is required for the cartesian backend");
      if (*K < 1) throw ConfigError("K must be at least 1");
      return;
    }
    make_backend();
    if (n.empty()) throw ConfigError(subcommand + ": n is required");
    for (int v : n)
      if (v < 8) throw ConfigError("n must be at least 8");
    if ((subcommand == "solve" || subcommand == "mesh-dump") && n.size() != 1)
      throw ConfigError(subcommand + ": n must be a single value");
    if (subcommand == "study" && n.size() < 3) throw ConfigError("study: n needs at least three values");
    try {
      newton.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (domain) domain->build();
    if (subcommand != "mesh-dump") benchmark_by_name(problem);
  }
};

inline std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      int const v = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError("n: cannot parse '" + item + "' as an integer");
    }
  }
  return out;
}

/// Fills fields present in a JSON config document.
inline void apply_json(RunConfig& cfg, const nlohmann::json& j) {
  try {
    if (j.contains("backend")) cfg.backend = j.at("backend").get<std::string>();
    if (j.contains("problem")) cfg.problem = j.at("problem").get<std::string>();
    if (j.contains("n")) {
      auto const& v = j.at("n");
      cfg.n = v.is_array() ? v.get<std::vector<int>>() : std::vector<int>{v.get<int>()};
    }
    if (j.contains("K")) cfg.K = j.at("K").get<int>();
    if (j.contains("K_scale")) cfg.K_scale = j.at("K_scale").get<double>();
    if (j.contains("epsilon")) cfg.epsilon = j.at("epsilon").get<double>();
    if (j.contains("warm_start")) cfg.warm_start = j.at("warm_start").get<bool>();
    if (j.contains("coarse_n")) cfg.coarse_n = j.at("coarse_n").get<int>();
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("dump_grid")) cfg.dump_grid = j.at("dump_grid").get<std::string>();
    if (j.contains("omit_timing")) cfg.omit_timing = j.at("omit_timing").get<bool>();
    if (j.contains("newton")) {
      auto const& nw = j.at("newton");
      if (nw.contains("threshold_factor")) cfg.newton.residual_threshold_factor = nw.at("threshold_factor").get<double>();
      if (nw.contains("max_iterations")) cfg.newton.max_iterations = nw.at("max_iterations").get<int>();
      if (nw.contains("damping")) cfg.newton.damping = nw.at("damping").get<double>();
      if (nw.contains("min_step")) cfg.newton.min_step = nw.at("min_step").get<double>();
      if (nw.contains("verbose")) cfg.newton.verbose = nw.at("verbose").get<bool>();
    }
    if (j.contains("domain")) {
      auto const& d = j.at("domain");
      DomainConfig spec;
      spec.type = d.at("type").get<std::string>();
      if (d.contains("lower_left")) {
        auto const v = d.at("lower_left").get<std::vector<double>>();
        if (v.size() != 2) throw ConfigError("domain.lower_left needs two coordinates");
        spec.lower_left = {v[0], v[1]};
      }
      if (d.contains("side")) spec.side = d.at("side").get<double>();
      if (d.contains("center")) {
        auto const v = d.at("center").get<std::vector<double>>();
        if (v.size() != 2) throw ConfigError("domain.center needs two coordinates");
        spec.center = {v[0], v[1]};
      }
      if (d.contains("radius")) spec.radius = d.at("radius").get<double>();
      cfg.domain = spec;
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config file: ") + e.what());
  }
}

namespace detail {

inline std::filesystem::path out_path(const RunConfig& cfg, const char* name) {
  return std::filesystem::path(cfg.out_dir) / name;
}

inline int run_solve(const RunConfig& cfg, std::ostream& out) {
  auto problem = benchmark_by_name(cfg.problem);
  ConvexDomain const domain = cfg.domain ? cfg.domain->build() : problem.domain;
  Backend const backend = cfg.make_backend();
  int const n = cfg.n.front();
  std::optional<int> warm;
  if (cfg.warm_start) warm = cfg.coarse_n.value_or(default_coarse_n(n));
  auto const res = solve_problem(domain, problem.f, problem.g, n, backend, cfg.newton, warm);

  auto report = io::report_to_json(res.report);
  report["problem"] = cfg.problem;
  report["backend"] = to_string(backend.kind);
  report["n"] = n;
  report["h"] = res.grid.h;
  report["depth"] = res.grid.depth;
  report["epsilon"] = backend.params(res.grid).epsilon;
  report["points"] = res.grid.size();
  report["max_error"] = max_error(res.grid, res.u, problem);
  if (!cfg.omit_timing) report["runtime_seconds"] = res.seconds;

  io::write_file_atomic(out_path(cfg, "solution.csv"), io::solution_csv(res.grid, res.u));
  io::write_file_atomic(out_path(cfg, "report.json"), report.dump(2) + "\n");
  if (cfg.dump_grid) io::write_file_atomic(*cfg.dump_grid, io::grid_to_json(res.grid).dump() + "\n");
  out << "solve " << cfg.problem << " " << to_string(backend.kind) << " n=" << n << ": "
      << to_string(res.report.status) << ", iterations=" << res.report.iterations
      << ", residual=" << io::sci(res.report.final_residual)
      << ", max_error=" << io::sci(report["max_error"].get<double>()) << "\n";
  return res.report.converged ? 0 : 1;
}

inline int run_study(const RunConfig& cfg, std::ostream& out) {
  auto problem = benchmark_by_name(cfg.problem);
  if (cfg.domain) problem.domain = cfg.domain->build();
  Backend const backend = cfg.make_backend();
  StudyOptions opts;
  opts.newton = cfg.newton;
  opts.warm_start = cfg.warm_start;
  auto const study = convergence_study(problem, backend, cfg.n, opts);

  io::write_file_atomic(out_path(cfg, "study.csv"), io::study_csv(study.rows, !cfg.omit_timing));
  io::write_file_atomic(out_path(cfg, "study.json"), io::study_summary(cfg.problem, backend, study).dump(2) + "\n");
  out << io::study_csv(study.rows, !cfg.omit_timing);
  out << "order=" << (study.fit.order ? io::sci(*study.fit.order) : std::string("n/a")) << "\n";
  bool const all_ok = std::all_of(study.rows.begin(), study.rows.end(), [](auto const& r) { return r.converged; });
  return all_ok ? 0 : 1;
}

inline int run_angles(const RunConfig& cfg, std::ostream& out) {
  AngularDiscretization const d = cfg.backend == "cartesian" ? l1_angles(*cfg.K) : hex_angles();
  std::string const table = io::angles_table(d);
  out << table;
  if (cfg.out_dir != ".") io::write_file_atomic(out_path(cfg, "angles.csv"), table);
  return 0;
}

inline int run_mesh_dump(const RunConfig& cfg, std::ostream& out) {
  ConvexDomain const domain = cfg.domain ? cfg.domain->build() : benchmark_by_name(cfg.problem).domain;
  Grid const grid = cfg.make_backend().build_grid(domain, cfg.n.front());
  auto const path = cfg.dump_grid ? std::filesystem::path(*cfg.dump_grid) : out_path(cfg, "grid.json");
  io::write_file_atomic(path, io::grid_to_json(grid).dump() + "\n");
  out << "mesh " << to_string(grid.kind) << ": " << grid.size() << " points (" << grid.interior_count
      << " interior) -> " << path.string() << "\n";
  return 0;
}

}  // namespace detail

/// Exit status: 0 success, 1 solver failure, 2 configuration error.
inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  }
  try {
    if (cfg.subcommand == "solve") return detail::run_solve(cfg, out);
    if (cfg.subcommand == "study") return detail::run_study(cfg, out);
    if (cfg.subcommand == "angles") return detail::run_angles(cfg, out);
    if (cfg.subcommand == "mesh-dump") return detail::run_mesh_dump(cfg, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << "config error: unknown subcommand '" << cfg.subcommand << "'\n";
  return 2;
}

/// Parses flags (and an optional --config JSON file; flags win) and runs.
inline int main(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Monotone quadrature schemes for the Monge-Ampere equation"};
  app.require_subcommand(1);

  std::string config_path, backend, problem, n_text, out_dir, dump_grid, domain_type;
  int K = 0, max_iter = 0, coarse_n = 0;
  double K_scale = 0, epsilon = 0, threshold = 0, damping = 0, min_step = 0, side = 0, radius = 0;
  std::vector<double> lower_left, center;
  bool verbose = false, omit_timing = false, no_warm = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file; flags override its fields");
    sub->add_option("--backend", backend, "hex | cartesian");
    sub->add_option("--problem", problem, "ex1 | ex2 | ex3 | ex4");
    sub->add_option("--n", n_text, "grid size, or comma-separated list for study");
    sub->add_option("--K", K, "L1 stencil depth (cartesian)");
    sub->add_option("--K-scale", K_scale, "c_K in K = max(2, round(c_K n^(1/3)))");
    sub->add_option("--epsilon", epsilon, "regularization override");
    sub->add_option("--threshold-factor", threshold, "Newton stops when residual < factor h^2");
    sub->add_option("--max-iter", max_iter, "Newton iteration cap");
    sub->add_option("--damping", damping, "line-search shrink factor in (0,1)");
    sub->add_option("--min-step", min_step, "smallest accepted step length");
    sub->add_flag("--no-warm-start", no_warm, "start Newton from the Poisson solve only");
    sub->add_option("--coarse-n", coarse_n, "coarse grid size for the warm start");
    sub->add_option("--domain", domain_type, "square | disc (overrides the problem domain)");
    sub->add_option("--lower-left", lower_left, "square lower-left corner x y")->expected(2);
    sub->add_option("--side", side, "square side length");
    sub->add_option("--center", center, "disc center x y")->expected(2);
    sub->add_option("--radius", radius, "disc radius");
    sub->add_option("--out-dir", out_dir, "directory for output files");
    sub->add_option("--dump-grid", dump_grid, "write the grid as JSON to this path");
    sub->add_flag("--verbose", verbose, "log Newton progress to stderr");
    sub->add_flag("--omit-timing", omit_timing, "write zero runtimes (byte-reproducible output)");
  };
  std::pair<const char*, const char*> const commands[] = {
      {"solve", "solve one benchmark; writes solution.csv and report.json"},
      {"study", "convergence study over --n; writes study.csv and study.json"},
      {"angles", "angle, gap and weight table for the backend's directions"},
      {"mesh-dump", "write the grid (points, mask, stencils) as JSON"}};
  for (auto [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    add_common(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  RunConfig cfg;
  cfg.subcommand = sub->get_name();
  auto given = [&](const char* flag) { return sub->count(flag) > 0; };
  try {
    if (given("--config")) {
      std::ifstream in(config_path);
      if (!in) throw ConfigError("cannot read config file " + config_path);
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config file: ") + e.what());
      }
      apply_json(cfg, j);
    }
    if (given("--backend")) cfg.backend = backend;
    if (given("--problem")) cfg.problem = problem;
    if (given("--n")) cfg.n = parse_int_list(n_text);
    if (given("--K")) cfg.K = K;
    if (given("--K-scale")) cfg.K_scale = K_scale;
    if (given("--epsilon")) cfg.epsilon = epsilon;
    if (given("--threshold-factor")) cfg.newton.residual_threshold_factor = threshold;
    if (given("--max-iter")) cfg.newton.max_iterations = max_iter;
    if (given("--damping")) cfg.newton.damping = damping;
    if (given("--min-step")) cfg.newton.min_step = min_step;
    if (given("--no-warm-start")) cfg.warm_start = false;
    if (given("--coarse-n")) cfg.coarse_n = coarse_n;
    if (given("--out-dir")) cfg.out_dir = out_dir;
    if (given("--dump-grid")) cfg.dump_grid = dump_grid;
    if (given("--verbose")) cfg.newton.verbose = verbose;
    if (given("--omit-timing")) cfg.omit_timing = omit_timing;
    if (given("--domain") || given("--lower-left") || given("--side") || given("--center") || given("--radius")) {
      DomainConfig spec = cfg.domain.value_or(DomainConfig{});
      if (given("--domain")) spec.type = domain_type;
      if (given("--lower-left")) spec.lower_left = {lower_left[0], lower_left[1]};
      if (given("--side")) spec.side = side;
      if (given("--center")) spec.center = {center[0], center[1]};
      if (given("--radius")) spec.radius = radius;
      cfg.domain = spec;
    }
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  }
  return run(cfg, out, err);
}

}  // namespace quadma::cli
