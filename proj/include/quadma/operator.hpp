#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "quadma/geometry.hpp"
#include "quadma/mesh.hpp"
#include "quadma/quadrature.hpp"

namespace quadma {

using GridFunction = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using ScalarField = std::function<double(Point2)>;

struct SchemeParams {
  double epsilon = 0.0;
  QuadratureRule quadrature;
};

/// Symmetric 2x2 matrix [[xx, xy], [xy, yy]].
struct Sym2 {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;

  double quadratic_form(double theta) const {
    double const c = std::cos(theta), s = std::sin(theta);
    return xx * c * c + 2.0 * xy * c * s + yy * s * s;
  }
  double det() const { return xx * yy - xy * xy; }
  std::pair<double, double> eigenvalues() const {
    double const mean = 0.5 * (xx + yy);
    double const rad = std::hypot(0.5 * (xx - yy), xy);
    return {mean - rad, mean + rad};
  }
};

inline GridFunction sample(const Grid& grid, const ScalarField& fn) {
  GridFunction v(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) v[static_cast<Eigen::Index>(i)] = fn(grid.points[i]);
  return v;
}

/// Weights of the three-point second difference:
/// D u = plus * u(x + h+ nu) + minus * u(x - h- nu) + center * u(x).
struct SddCoefficients {
  double plus;
  double minus;
  double center;
};

inline SddCoefficients sdd_coefficients(const Stencil& s) {
  double const sum = s.h_plus + s.h_minus;
  return {2.0 / (s.h_plus * sum), 2.0 / (s.h_minus * sum), -2.0 / (s.h_plus * s.h_minus)};
}

/// Aligned (possibly uncentered) second directional difference at an interior node.
inline double sdd_apply(const Grid& grid, const GridFunction& u, std::size_t node, std::size_t angle) {
  Stencil const& s = grid.stencil(node, angle);
  double const up = u[static_cast<Eigen::Index>(s.plus)];
  double const um = u[static_cast<Eigen::Index>(s.minus)];
  double const u0 = u[static_cast<Eigen::Index>(node)];
  double const sum = s.h_plus + s.h_minus;
  return 2.0 * (s.h_minus * up + s.h_plus * um - sum * u0) / (s.h_plus * s.h_minus * sum);
}

/// -(1/pi sum_i w_i / max(D_i, eps))^-2 - min_i min(D_i, eps) from the
/// directional differences D_i.
inline double quadrature_operator(std::span<const double> sdd, std::span<const double> weights, double epsilon) {
  double s = 0.0;
  double low = epsilon;
  for (std::size_t i = 0; i < sdd.size(); ++i) {
    s += weights[i] / std::max(sdd[i], epsilon);
    low = std::min(low, sdd[i]);
  }
  s /= std::numbers::pi;
  return -1.0 / (s * s) - low;
}

/// Discrete convexified Monge-Ampere operator at one interior node.
inline double scheme_value(const Grid& grid, const GridFunction& u, const SchemeParams& params, std::size_t node,
                           std::vector<double>& scratch) {
  std::size_t const m = grid.angle_count();
  scratch.resize(m);
  for (std::size_t a = 0; a < m; ++a) scratch[a] = sdd_apply(grid, u, node, a);
  return quadrature_operator(scratch, params.quadrature.weights, params.epsilon);
}

struct OperatorOutput {
  GridFunction residual;
};

/// Residual F^h[u] + f at interior nodes and u - g at boundary nodes.
inline OperatorOutput scheme_apply(const Grid& grid, const GridFunction& u, const SchemeParams& params,
                                   const GridFunction& f_values, const GridFunction& g_values) {
  if (params.quadrature.size() != grid.angle_count())
    throw std::invalid_argument("scheme_apply: quadrature rule does not match grid angles");
  OperatorOutput out{GridFunction(u.size())};
  std::vector<double> scratch;
  for (std::size_t node = 0; node < grid.size(); ++node) {
    auto const k = static_cast<Eigen::Index>(node);
    if (grid.is_interior(node))
      out.residual[k] = scheme_value(grid, u, params, node, scratch) + f_values[k];
    else
      out.residual[k] = u[k] - g_values[k];
  }
  return out;
}

inline OperatorOutput scheme_apply(const Grid& grid, const GridFunction& u, const SchemeParams& params,
                                   const ScalarField& f, const ScalarField& g) {
  return scheme_apply(grid, u, params, sample(grid, f), sample(grid, g));
}

/// Regularized determinant of a constant Hessian through the quadrature rule.
inline double det_eps_reference(const Sym2& hessian, double epsilon, const QuadratureRule& rule) {
  double s = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i)
    s += rule.weights[i] / std::max(hessian.quadratic_form(rule.discretization.angle(i)), epsilon);
  s /= std::numbers::pi;
  return 1.0 / (s * s);
}

/// det(M) for positive semidefinite M, smallest eigenvalue otherwise.
inline double det_plus_oracle(const Sym2& hessian) {
  auto const [l1, l2] = hessian.eigenvalues();
  return l1 >= 0.0 ? l1 * l2 : l1;
}

/// Active-set Jacobian of scheme_apply. At kinks of max(D, eps) and of the min
/// term the eps branch is taken, so those entries vanish. Every stencil entry is
/// stored (possibly as an explicit zero) so the sparsity pattern depends only on
/// the grid.
inline SparseMatrix assemble_jacobian(const Grid& grid, const GridFunction& u, const SchemeParams& params) {
  std::size_t const m = grid.angle_count();
  auto const n = static_cast<Eigen::Index>(grid.size());
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(grid.interior_count * (2 * m + 1) + (grid.size() - grid.interior_count));
  std::vector<double> sdd(m), dfd(m);
  auto const& w = params.quadrature.weights;
  double const eps = params.epsilon;

  for (std::size_t node = 0; node < grid.size(); ++node) {
    auto const row = static_cast<Eigen::Index>(node);
    if (!grid.is_interior(node)) {
      trips.emplace_back(row, row, 1.0);
      continue;
    }
    double s = 0.0;
    std::size_t lowest = 0;
    for (std::size_t a = 0; a < m; ++a) {
      sdd[a] = sdd_apply(grid, u, node, a);
      s += w[a] / std::max(sdd[a], eps);
      if (sdd[a] < sdd[lowest]) lowest = a;
    }
    s /= std::numbers::pi;
    double const scale = -2.0 / (s * s * s * std::numbers::pi);
    for (std::size_t a = 0; a < m; ++a) dfd[a] = sdd[a] > eps ? scale * w[a] / (sdd[a] * sdd[a]) : 0.0;
    if (sdd[lowest] < eps) dfd[lowest] -= 1.0;

    double diag = 0.0;
    for (std::size_t a = 0; a < m; ++a) {
      Stencil const& st = grid.stencil(node, a);
      auto const c = sdd_coefficients(st);
      trips.emplace_back(row, static_cast<Eigen::Index>(st.plus), dfd[a] * c.plus);
      trips.emplace_back(row, static_cast<Eigen::Index>(st.minus), dfd[a] * c.minus);
      diag += dfd[a] * c.center;
    }
    trips.emplace_back(row, row, diag);
  }
  SparseMatrix J(n, n);
  J.setFromTriplets(trips.begin(), trips.end());
  return J;
}

}  // namespace quadma
