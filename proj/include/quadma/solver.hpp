#pragma once

#include <Eigen/SparseLU>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "quadma/mesh.hpp"
#include "quadma/operator.hpp"

namespace quadma {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Grid family plus the scheme parameters tied to it.
struct Backend {
  MeshKind kind = MeshKind::cartesian;
  double depth_scale = 1.0;            // c_K in K = max(2, round(c_K n^(1/3)))
  std::optional<int> depth;            // fixes K regardless of n
  std::optional<double> epsilon;       // overrides the default regularization

  int stencil_depth(int n) const {
    if (depth) return *depth;
    return std::max(2, static_cast<int>(std::lround(depth_scale * std::cbrt(double(n)))));
  }

  Grid build_grid(const ConvexDomain& domain, int n) const {
    return kind == MeshKind::cartesian ? cartesian_mesh(domain, n, stencil_depth(n)) : hexagonal_mesh(domain, n);
  }

  /// Hexagonal: trapezoid rule, eps = h^2. Cartesian: Simpson rule, eps = (K h)^2.
  SchemeParams params(const Grid& grid) const {
    if (grid.kind == MeshKind::hexagonal) {
      double const eps = epsilon.value_or(grid.h * grid.h);
      return {eps, trapezoid_weights(grid.angles)};
    }
    double const r = grid.depth * grid.h;
    return {epsilon.value_or(r * r), simpson_weights(grid.angles)};
  }
};

struct NewtonConfig {
  double residual_threshold_factor = 1.0;  // stop when max|residual| < factor * h^2
  int max_iterations = 60;
  double damping = 0.5;                    // step shrink factor
  double min_step = 1.0 / 1048576.0;       // 2^-20
  bool verbose = false;

  void validate() const {
    if (!(residual_threshold_factor > 0.0)) throw std::invalid_argument("newton: threshold factor must be positive");
    if (!(damping > 0.0 && damping < 1.0)) throw std::invalid_argument("newton: damping must lie in (0, 1)");
    if (!(min_step > 0.0 && min_step <= 1.0)) throw std::invalid_argument("newton: min step must lie in (0, 1]");
    if (max_iterations < 0) throw std::invalid_argument("newton: max iterations must be nonnegative");
  }
};

enum class SolveStatus { converged, max_iterations, line_search_failed, singular_jacobian };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iterations: return "max_iterations";
    case SolveStatus::line_search_failed: return "line_search_failed";
    case SolveStatus::singular_jacobian: return "singular_jacobian";
  }
  return "unknown";
}

struct SolveReport {
  double final_residual = 0.0;
  double threshold = 0.0;
  int iterations = 0;
  std::vector<double> residual_history;  // entry k is max|residual| after k accepted steps
  std::vector<double> alpha_history;
  bool converged = false;
  SolveStatus status = SolveStatus::max_iterations;
};

struct SolveResult {
  GridFunction u;
  SolveReport report;
};

namespace detail {

inline double max_abs(const GridFunction& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

inline double row_norm(const SparseMatrix& A) {
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(A.rows());
  for (Eigen::Index k = 0; k < A.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) sums[it.row()] += std::abs(it.value());
  return sums.size() ? sums.maxCoeff() : 0.0;
}

inline std::optional<std::size_t> find_angle(const AngularDiscretization& d, double theta) {
  for (std::size_t i = 0; i < d.size(); ++i)
    if (std::abs(d.angle(i) - theta) < 1e-12) return i;
  return std::nullopt;
}

}  // namespace detail

/// Discrete Laplacian with Dirichlet rows. Cartesian grids use D_00 + D_{pi/2};
/// other grids use 2/pi sum_i w_i D_i with the trapezoid weights of their angles.
inline SparseMatrix dirichlet_laplacian(const Grid& grid) {
  std::size_t const m = grid.angle_count();
  std::vector<double> coef(m, 0.0);
  if (grid.kind == MeshKind::cartesian) {
    auto const ax = detail::find_angle(grid.angles, 0.0);
    auto const ay = detail::find_angle(grid.angles, 0.5 * std::numbers::pi);
    if (!ax || !ay) throw SolverError("laplacian: Cartesian grid lacks axis directions");
    coef[*ax] = 1.0;
    coef[*ay] = 1.0;
  } else {
    auto const rule = trapezoid_weights(grid.angles);
    for (std::size_t a = 0; a < m; ++a) coef[a] = 2.0 * rule.weights[a] / std::numbers::pi;
  }
  std::vector<Eigen::Triplet<double>> trips;
  for (std::size_t node = 0; node < grid.size(); ++node) {
    auto const row = static_cast<Eigen::Index>(node);
    if (!grid.is_interior(node)) {
      trips.emplace_back(row, row, 1.0);
      continue;
    }
    double diag = 0.0;
    for (std::size_t a = 0; a < m; ++a) {
      if (coef[a] == 0.0) continue;
      Stencil const& st = grid.stencil(node, a);
      auto const c = sdd_coefficients(st);
      trips.emplace_back(row, static_cast<Eigen::Index>(st.plus), coef[a] * c.plus);
      trips.emplace_back(row, static_cast<Eigen::Index>(st.minus), coef[a] * c.minus);
      diag += coef[a] * c.center;
    }
    trips.emplace_back(row, row, diag);
  }
  auto const n = static_cast<Eigen::Index>(grid.size());
  SparseMatrix L(n, n);
  L.setFromTriplets(trips.begin(), trips.end());
  return L;
}

/// Initial guess from the linearization  Laplacian u = sqrt(2 f), u = g on the boundary.
inline GridFunction poisson_init(const Grid& grid, const GridFunction& f_values, const GridFunction& g_values) {
  auto const n = static_cast<Eigen::Index>(grid.size());
  GridFunction rhs(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (grid.is_interior(static_cast<std::size_t>(k))) {
      if (!(f_values[k] >= 0.0)) throw std::invalid_argument("poisson_init: right-hand side must be nonnegative");
      rhs[k] = std::sqrt(2.0 * f_values[k]);
    } else {
      rhs[k] = g_values[k];
    }
  }
  SparseMatrix const L = dirichlet_laplacian(grid);
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(L);
  if (lu.info() != Eigen::Success) throw SolverError("poisson_init: factorization failed: " + lu.lastErrorMessage());
  GridFunction u = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !u.allFinite()) throw SolverError("poisson_init: linear solve failed");
  double const res = detail::max_abs(L * u - rhs);
  double const scale = detail::row_norm(L) * detail::max_abs(u) + detail::max_abs(rhs);
  if (res > 1e-10 * scale) throw SolverError("poisson_init: linear residual too large");
  return u;
}

inline GridFunction poisson_init(const Grid& grid, const ScalarField& f, const ScalarField& g) {
  return poisson_init(grid, sample(grid, f), sample(grid, g));
}

/// Damped Newton iteration J y = -residual, u <- u + alpha y, with alpha halved
/// from 1 until the max-norm residual strictly decreases.
inline SolveResult damped_newton(const Grid& grid, const SchemeParams& params, const GridFunction& f_values,
                                 const GridFunction& g_values, GridFunction u0, const NewtonConfig& cfg) {
  cfg.validate();
  if (!u0.allFinite()) throw std::invalid_argument("damped_newton: initial guess is not finite");
  SolveResult out{std::move(u0), {}};
  SolveReport& rep = out.report;
  rep.threshold = cfg.residual_threshold_factor * grid.h * grid.h;

  GridFunction res = scheme_apply(grid, out.u, params, f_values, g_values).residual;
  double r = detail::max_abs(res);
  rep.residual_history.push_back(r);

  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  bool analyzed = false;

  while (true) {
    if (r < rep.threshold) {
      rep.converged = true;
      rep.status = SolveStatus::converged;
      break;
    }
    if (rep.iterations >= cfg.max_iterations) {
      rep.status = SolveStatus::max_iterations;
      break;
    }
    SparseMatrix J = assemble_jacobian(grid, out.u, params);
    if (!analyzed) {
      lu.analyzePattern(J);
      analyzed = true;
    }
    lu.factorize(J);
    if (lu.info() != Eigen::Success) {
      double const shift = 1e-10 * detail::row_norm(J);
      for (Eigen::Index k = 0; k < J.rows(); ++k) J.coeffRef(k, k) += shift;
      lu.factorize(J);
      if (lu.info() != Eigen::Success) {
        rep.status = SolveStatus::singular_jacobian;
        break;
      }
    }
    GridFunction const step = lu.solve(-res);
    if (!step.allFinite()) {
      rep.status = SolveStatus::singular_jacobian;
      break;
    }

    double alpha = 1.0;
    bool accepted = false;
    GridFunction trial, trial_res;
    double trial_r = 0.0;
    while (alpha >= cfg.min_step) {
      trial = out.u + alpha * step;
      trial_res = scheme_apply(grid, trial, params, f_values, g_values).residual;
      trial_r = detail::max_abs(trial_res);
      if (trial_r < r) {
        accepted = true;
        break;
      }
      alpha *= cfg.damping;
    }
    if (!accepted) {
      rep.status = SolveStatus::line_search_failed;
      break;
    }
    out.u = std::move(trial);
    res = std::move(trial_res);
    r = trial_r;
    ++rep.iterations;
    rep.residual_history.push_back(r);
    rep.alpha_history.push_back(alpha);
    if (cfg.verbose) std::fprintf(stderr, "iter %d: residual=%.17e, alpha=%.17e\n", rep.iterations, r, alpha);
  }
  rep.final_residual = r;
  return out;
}

inline SolveResult damped_newton(const Grid& grid, const SchemeParams& params, const ScalarField& f,
                                 const ScalarField& g, GridFunction u0, const NewtonConfig& cfg) {
  return damped_newton(grid, params, sample(grid, f), sample(grid, g), std::move(u0), cfg);
}

/// Transfers a coarse grid function onto the fine grid: bilinear in lattice
/// coordinates on Cartesian grids, barycentric over lattice triangles on
/// hexagonal grids. Fine boundary nodes take g exactly. Lattice corners that
/// are not coarse interior nodes borrow the value of the nearest coarse
/// boundary node.
inline GridFunction interpolate(const Grid& coarse, const GridFunction& coarse_u, const Grid& fine,
                                const GridFunction& fine_g) {
  if (coarse.kind != fine.kind) throw std::invalid_argument("interpolate: grid kinds differ");
  auto corner = [&](std::int64_t i, std::int64_t j) {
    if (auto id = coarse.node_at(i, j)) return coarse_u[static_cast<Eigen::Index>(*id)];
    Point2 const p = coarse.lattice.at(i, j);
    double best = std::numeric_limits<double>::infinity();
    double value = 0.0;
    for (std::size_t k = coarse.interior_count; k < coarse.size(); ++k) {
      double const d = norm(coarse.points[k] - p);
      if (d < best) {
        best = d;
        value = coarse_u[static_cast<Eigen::Index>(k)];
      }
    }
    return value;
  };

  GridFunction u(static_cast<Eigen::Index>(fine.size()));
  for (std::size_t node = 0; node < fine.size(); ++node) {
    auto const k = static_cast<Eigen::Index>(node);
    if (!fine.is_interior(node)) {
      u[k] = fine_g[k];
      continue;
    }
    auto const [a, c] = coarse.lattice.coords(fine.points[node]);
    auto const i0 = static_cast<std::int64_t>(std::floor(a));
    auto const j0 = static_cast<std::int64_t>(std::floor(c));
    double const s = a - double(i0), t = c - double(j0);
    if (coarse.kind == MeshKind::cartesian) {
      u[k] = (1 - s) * (1 - t) * corner(i0, j0) + s * (1 - t) * corner(i0 + 1, j0) + (1 - s) * t * corner(i0, j0 + 1) +
             s * t * corner(i0 + 1, j0 + 1);
    } else if (s + t <= 1.0) {
      u[k] = (1 - s - t) * corner(i0, j0) + s * corner(i0 + 1, j0) + t * corner(i0, j0 + 1);
    } else {
      u[k] = (1 - t) * corner(i0 + 1, j0) + (1 - s) * corner(i0, j0 + 1) + (s + t - 1) * corner(i0 + 1, j0 + 1);
    }
  }
  return u;
}

/// Poisson start followed by damped Newton on one grid.
inline SolveResult solve_direct(const Grid& grid, const SchemeParams& params, const GridFunction& f_values,
                                const GridFunction& g_values, const NewtonConfig& cfg) {
  return damped_newton(grid, params, f_values, g_values, poisson_init(grid, f_values, g_values), cfg);
}

/// Fine-grid initial guess: solve on a coarse grid of the same backend, then
/// interpolate. With coarse_n >= fine.n the direct fine-grid solution is returned.
inline GridFunction coarse_to_fine(const ConvexDomain& domain, const ScalarField& f, const ScalarField& g,
                                   const Grid& fine, int coarse_n, const Backend& backend, const NewtonConfig& cfg) {
  if (coarse_n >= fine.n) {
    return solve_direct(fine, backend.params(fine), sample(fine, f), sample(fine, g), cfg).u;
  }
  Grid const coarse = backend.build_grid(domain, coarse_n);
  auto const coarse_sol = solve_direct(coarse, backend.params(coarse), sample(coarse, f), sample(coarse, g), cfg);
  return interpolate(coarse, coarse_sol.u, fine, sample(fine, g));
}

inline int default_coarse_n(int fine_n) { return (fine_n + 3) / 4; }

/// Smallest n the backend accepts.
inline int minimum_n(const Backend& backend) {
  if (backend.kind == MeshKind::hexagonal) return 8;
  for (int n = 4;; ++n)
    if (n >= 4 * backend.stencil_depth(n) + 4) return n;
}

struct SolveOutcome {
  Grid grid;
  GridFunction u;
  SolveReport report;
  double seconds = 0.0;
};

/// Full pipeline on one resolution. warm_start_n (if set and admissible)
/// enables the coarse-to-fine start; otherwise the Poisson start is used.
inline SolveOutcome solve_problem(const ConvexDomain& domain, const ScalarField& f, const ScalarField& g, int n,
                                  const Backend& backend, const NewtonConfig& cfg,
                                  std::optional<int> warm_start_n = std::nullopt) {
  auto const t0 = std::chrono::steady_clock::now();
  SolveOutcome out{backend.build_grid(domain, n), {}, {}, 0.0};
  SchemeParams const params = backend.params(out.grid);
  GridFunction const fv = sample(out.grid, f), gv = sample(out.grid, g);
  GridFunction u0;
  if (warm_start_n && *warm_start_n < n && *warm_start_n >= minimum_n(backend)) {
    NewtonConfig quiet = cfg;
    quiet.verbose = false;
    u0 = coarse_to_fine(domain, f, g, out.grid, *warm_start_n, backend, quiet);
  } else {
    u0 = poisson_init(out.grid, fv, gv);
  }
  auto sol = damped_newton(out.grid, params, fv, gv, std::move(u0), cfg);
  out.u = std::move(sol.u);
  out.report = std::move(sol.report);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace quadma
