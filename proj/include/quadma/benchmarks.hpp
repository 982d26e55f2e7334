#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "quadma/geometry.hpp"
#include "quadma/operator.hpp"
#include "quadma/solver.hpp"

namespace quadma {

struct BenchmarkProblem {
  std::string name;
  ConvexDomain domain;
  ScalarField u_exact;
  ScalarField f;
  ScalarField g;
};

/// Smooth radial solution u = exp(|x|^2 / 2) on (-1, 1)^2.
inline BenchmarkProblem ex1() {
  auto u = [](Point2 p) { return std::exp(0.5 * dot(p, p)); };
  auto f = [](Point2 p) {
    double const r2 = dot(p, p);
    return (1.0 + r2) * std::exp(r2);
  };
  return {"ex1", square({-1.0, -1.0}, 2.0), u, f, u};
}

/// C^1 solution, flat (fully degenerate) inside the disc of radius 0.2 about (0.5, 0.5).
inline BenchmarkProblem ex2() {
  Point2 const x0{0.5, 0.5};
  auto u = [x0](Point2 p) {
    double const d = std::max(norm(p - x0) - 0.2, 0.0);
    return 0.5 * d * d;
  };
  auto f = [x0](Point2 p) {
    double const r = norm(p - x0);
    if (r < 1e-14) return 0.0;
    return std::max(1.0 - 0.2 / r, 0.0);
  };
  return {"ex2", square({0.0, 0.0}, 1.0), u, f, u};
}

/// Gradient blows up at the corner (1, 1).
inline BenchmarkProblem ex3() {
  auto u = [](Point2 p) { return -std::sqrt(std::max(2.0 - dot(p, p), 0.0)); };
  auto f = [](Point2 p) {
    double const s = 2.0 - dot(p, p);
    return 2.0 / (s * s);
  };
  return {"ex3", square({0.0, 0.0}, 1.0), u, f, u};
}

/// Semi-degenerate quadratic u = (gamma . x)^2 with gamma = (0.6, 0.4), f = 0.
inline BenchmarkProblem ex4() {
  auto u = [](Point2 p) {
    double const s = 0.6 * p.x + 0.4 * p.y;
    return s * s;
  };
  return {"ex4", square({-1.0, -1.0}, 2.0), u, [](Point2) { return 0.0; }, u};
}

inline BenchmarkProblem benchmark_by_name(const std::string& name) {
  if (name == "ex1") return ex1();
  if (name == "ex2") return ex2();
  if (name == "ex3") return ex3();
  if (name == "ex4") return ex4();
  throw std::invalid_argument("unknown benchmark problem '" + name + "'");
}

/// max over all nodes of |computed - u_exact|.
inline double max_error(const Grid& grid, const GridFunction& computed, const BenchmarkProblem& problem) {
  double e = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k)
    e = std::max(e, std::abs(computed[static_cast<Eigen::Index>(k)] - problem.u_exact(grid.points[k])));
  return e;
}

struct ConvergenceRow {
  int n = 0;
  double h = 0.0;
  double max_error = 0.0;
  double runtime_seconds = 0.0;
  int newton_iters = 0;
  bool converged = false;
  std::string status;
};

struct OrderFit {
  std::optional<double> order;           // least squares over all rows
  std::optional<double> order_trimmed;   // coarsest row dropped when it is an outlier
  bool coarsest_excluded = false;
};

/// Order p from the least-squares line log(error) = c - p log(n).
inline std::optional<double> fit_order(const std::vector<double>& ns, const std::vector<double>& errors) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < ns.size(); ++i)
    if (errors[i] > 0.0 && std::isfinite(errors[i])) {
      x.push_back(std::log(ns[i]));
      y.push_back(std::log(errors[i]));
    }
  if (x.size() < 2) return std::nullopt;
  double const m = double(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  double const den = m * sxx - sx * sx;
  if (den == 0.0) return std::nullopt;
  return -(m * sxy - sx * sy) / den;
}

/// Fits the order over all rows, and again without the coarsest row when that
/// row sits more than 3 residual standard deviations off the fit of the others.
inline OrderFit fit_convergence_order(const std::vector<ConvergenceRow>& rows) {
  OrderFit fit;
  std::vector<double> ns, es;
  for (auto const& r : rows) {
    ns.push_back(double(r.n));
    es.push_back(r.max_error);
  }
  // Errors at round-off level carry no rate information.
  bool const all_tiny = std::all_of(es.begin(), es.end(), [](double e) { return e < 1e-13; });
  if (all_tiny) return fit;
  fit.order = fit_order(ns, es);
  fit.order_trimmed = fit.order;
  if (ns.size() < 4) return fit;

  std::vector<double> ns_rest(ns.begin() + 1, ns.end()), es_rest(es.begin() + 1, es.end());
  auto const p = fit_order(ns_rest, es_rest);
  if (!p) return fit;
  // intercept of the trimmed fit
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < ns_rest.size(); ++i) {
    mx += std::log(ns_rest[i]);
    my += std::log(es_rest[i]);
  }
  mx /= double(ns_rest.size());
  my /= double(ns_rest.size());
  double ss = 0;
  for (std::size_t i = 0; i < ns_rest.size(); ++i) {
    double const r = std::log(es_rest[i]) - (my - *p * (std::log(ns_rest[i]) - mx));
    ss += r * r;
  }
  double const sigma = std::sqrt(ss / double(ns_rest.size() - 2));
  double const dev = std::abs(std::log(es[0]) - (my - *p * (std::log(ns[0]) - mx)));
  if (dev > 3.0 * sigma) {
    fit.order_trimmed = p;
    fit.coarsest_excluded = true;
  }
  return fit;
}

struct ConvergenceStudy {
  std::vector<ConvergenceRow> rows;
  OrderFit fit;
};

struct StudyOptions {
  NewtonConfig newton;
  bool warm_start = true;
};

/// Solves at every n and records error, runtime and Newton iterations.
/// Solver failures are recorded in the row rather than thrown.
inline ConvergenceStudy convergence_study(const BenchmarkProblem& problem, const Backend& backend,
                                          const std::vector<int>& n_list, const StudyOptions& options = {}) {
  if (n_list.size() < 3) throw std::invalid_argument("convergence_study: need at least three resolutions");
  for (std::size_t i = 1; i < n_list.size(); ++i)
    if (n_list[i] <= n_list[i - 1]) throw std::invalid_argument("convergence_study: n_list must increase");
  ConvergenceStudy study;
  for (int n : n_list) {
    ConvergenceRow row;
    row.n = n;
    try {
      std::optional<int> warm;
      if (options.warm_start) warm = default_coarse_n(n);
      auto const out = solve_problem(problem.domain, problem.f, problem.g, n, backend, options.newton, warm);
      row.h = out.grid.h;
      row.max_error = max_error(out.grid, out.u, problem);
      row.runtime_seconds = out.seconds;
      row.newton_iters = out.report.iterations;
      row.converged = out.report.converged;
      row.status = to_string(out.report.status);
    } catch (const std::exception& e) {
      row.max_error = std::numeric_limits<double>::quiet_NaN();
      row.status = std::string("error: ") + e.what();
    }
    study.rows.push_back(row);
  }
  study.fit = fit_convergence_order(study.rows);
  return study;
}

}  // namespace quadma
