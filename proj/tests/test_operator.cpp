#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "quadma/operator.hpp"
#include "quadma/solver.hpp"

using namespace quadma;
using std::numbers::pi;

namespace {

const ConvexDomain centered = square({-0.5, -0.5}, 1.0);

// One interior node at the origin with a single stencil along `theta`.
Grid three_point_grid(double theta, double hp, double hm) {
  Grid g;
  g.h = std::max(hp, hm);
  g.angles = AngularDiscretization({theta});
  Point2 const d = direction(theta);
  g.points = {{0.0, 0.0}, hp * d, -hm * d};
  g.interior = {1, 0, 0};
  g.interior_count = 1;
  g.stencils = {Stencil{1, hp, 2, hm}};
  g.stencil_width = g.h;
  return g;
}

ScalarField quadratic(Sym2 m) {
  return [m](Point2 p) { return 0.5 * (m.xx * p.x * p.x + 2 * m.xy * p.x * p.y + m.yy * p.y * p.y) + 0.3 * p.x - 0.1; };
}

AngularDiscretization uniform(int count) {
  std::vector<double> a;
  for (int j = 0; j < count; ++j) a.push_back(j * pi / count);
  return AngularDiscretization(a);
}

double max_interior(const Grid& g, const GridFunction& v) {
  double m = 0;
  for (std::size_t k = 0; k < g.interior_count; ++k) m = std::max(m, std::abs(v[Eigen::Index(k)]));
  return m;
}

}  // namespace

TEST(Sdd, CenteredOnXSquared) {
  auto const g = three_point_grid(0.0, 0.1, 0.1);
  GridFunction const u = sample(g, [](Point2 p) { return p.x * p.x; });
  EXPECT_NEAR(sdd_apply(g, u, 0, 0), 2.0, 1e-12);
}

TEST(Sdd, VerticalOnXSquared) {
  auto const g = three_point_grid(pi / 2, 0.1, 0.1);
  GridFunction const u = sample(g, [](Point2 p) { return p.x * p.x; });
  EXPECT_NEAR(sdd_apply(g, u, 0, 0), 0.0, 1e-12);
}

TEST(Sdd, UncenteredStillExactOnQuadratics) {
  auto const g = three_point_grid(0.0, 0.1, 0.05);
  GridFunction const u = sample(g, [](Point2 p) { return p.x * p.x; });
  EXPECT_NEAR(sdd_apply(g, u, 0, 0), 2.0, 1e-12);
  auto const g2 = three_point_grid(0.7, 0.03, 0.11);
  Sym2 const m{1.5, -0.4, 2.5};
  GridFunction const u2 = sample(g2, quadratic(m));
  EXPECT_NEAR(sdd_apply(g2, u2, 0, 0), m.quadratic_form(0.7), 1e-11);
}

TEST(Sdd, CoefficientsMatchDirectFormula) {
  Stencil const s{1, 0.3, 2, 0.2};
  auto const c = sdd_coefficients(s);
  EXPECT_NEAR(c.plus, 2 * 0.2 / (0.3 * 0.2 * 0.5), 1e-12);
  EXPECT_NEAR(c.minus, 2 * 0.3 / (0.3 * 0.2 * 0.5), 1e-12);
  EXPECT_NEAR(c.plus + c.minus + c.center, 0.0, 1e-12);
}

TEST(SchemeApply, ParaboloidGivesMinusOneMinusEps) {
  for (int pass = 0; pass < 2; ++pass) {
    Grid const g = pass ? hexagonal_mesh(centered, 13) : cartesian_mesh(centered, 13, 2);
    double const eps = 1e-3;
    SchemeParams const p{eps, pass ? trapezoid_weights(g.angles) : simpson_weights(g.angles)};
    auto f = [](Point2) { return 0.25; };
    auto u = [](Point2 q) { return 0.5 * dot(q, q); };
    auto const out = scheme_apply(g, sample(g, u), p, f, u);
    for (std::size_t k = 0; k < g.interior_count; ++k) EXPECT_NEAR(out.residual[Eigen::Index(k)], -1 - eps + 0.25, 1e-11);
    for (std::size_t k = g.interior_count; k < g.size(); ++k) EXPECT_NEAR(out.residual[Eigen::Index(k)], 0.0, 0.0);
  }
}

TEST(SchemeApply, BoundaryResidualIsUMinusG) {
  Grid const g = hexagonal_mesh(centered, 9);
  SchemeParams const p{1e-2, trapezoid_weights(g.angles)};
  auto u = [](Point2 q) { return q.x; };
  auto gfun = [](Point2 q) { return q.y; };
  auto const out = scheme_apply(g, sample(g, u), p, [](Point2) { return 0.0; }, gfun);
  for (std::size_t k = g.interior_count; k < g.size(); ++k)
    EXPECT_DOUBLE_EQ(out.residual[Eigen::Index(k)], g.points[k].x - g.points[k].y);
}

TEST(SchemeApply, AnisotropicQuadraticDeepStencil) {
  Grid const g = cartesian_mesh(square({-1.0, -1.0}, 2.0), 132, 32);
  double const eps = 1e-6;
  SchemeParams const p{eps, simpson_weights(g.angles)};
  GridFunction const u = sample(g, [](Point2 q) { return 0.5 * (2 * q.x * q.x + 3 * q.y * q.y); });
  std::vector<double> scratch;
  for (std::size_t k = 0; k < g.interior_count; k += 997) EXPECT_NEAR(scheme_value(g, u, p, k, scratch), -6 - eps, 2e-3);
}

TEST(SchemeApply, ConcaveGivesMinusSmallestEigenvalue) {
  for (double eps : {1e-2, 1e-4, 1e-6}) {
    Grid const g = cartesian_mesh(centered, 13, 2);
    SchemeParams const p{eps, simpson_weights(g.angles)};
    GridFunction const u = sample(g, [](Point2 q) { return -0.5 * dot(q, q); });
    std::vector<double> scratch;
    for (std::size_t k = 0; k < g.interior_count; ++k) EXPECT_NEAR(scheme_value(g, u, p, k, scratch), 1.0, 1.01 * eps * eps + 1e-10);
  }
}

TEST(SchemeApply, MatchesReferenceOnQuadratics) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> e(0.5, 3.0), ang(0, pi);
  for (int pass = 0; pass < 2; ++pass) {
    Grid const g = pass ? hexagonal_mesh(centered, 13) : cartesian_mesh(centered, 13, 2);
    QuadratureRule const rule = pass ? trapezoid_weights(g.angles) : simpson_weights(g.angles);
    for (int trial = 0; trial < 10; ++trial) {
      double const l1 = e(rng), l2 = e(rng), t = ang(rng), c = std::cos(t), s = std::sin(t);
      Sym2 const m{l1 * c * c + l2 * s * s, (l1 - l2) * c * s, l1 * s * s + l2 * c * c};
      double const eps = 0.1;
      SchemeParams const p{eps, rule};
      GridFunction const u = sample(g, quadratic(m));
      double const expect = -det_eps_reference(m, eps, rule) - eps;
      std::vector<double> scratch;
      for (std::size_t k = 0; k < g.interior_count; ++k) EXPECT_NEAR(scheme_value(g, u, p, k, scratch), expect, 1e-12);
    }
  }
}

TEST(SchemeApply, RuleSizeMismatchRejected) {
  Grid const g = hexagonal_mesh(centered, 9);
  SchemeParams const p{1e-2, simpson_weights(l1_angles(2))};
  GridFunction const u = GridFunction::Zero(Eigen::Index(g.size()));
  EXPECT_THROW(scheme_apply(g, u, p, u, u), std::invalid_argument);
}

TEST(DetEpsReference, IdentityIsOne) {
  for (auto const& rule : {trapezoid_weights(hex_angles()), simpson_weights(l1_angles(5))})
    EXPECT_NEAR(det_eps_reference({1, 0, 1}, 1e-6, rule), 1.0, 1e-13);
}

TEST(DetEpsReference, DiagTwoThree) {
  EXPECT_NEAR(det_eps_reference({2, 0, 3}, 1e-12, trapezoid_weights(uniform(512))), 6.0, 1e-10);
}

TEST(DetEpsReference, VanishingEigenvalueDecreases) {
  auto const rule = trapezoid_weights(uniform(64));
  double prev = det_eps_reference({0, 0, 1}, 1e-1, rule);
  for (double eps : {1e-2, 1e-3, 1e-4, 1e-6}) {
    double const v = det_eps_reference({0, 0, 1}, eps, rule);
    EXPECT_LT(v, prev);
    EXPECT_GE(v, 0.0);
    prev = v;
  }
  EXPECT_LT(prev, 1e-8);
}

TEST(DetPlusOracle, Branches) {
  EXPECT_DOUBLE_EQ(det_plus_oracle({2, 0, 3}), 6.0);
  EXPECT_DOUBLE_EQ(det_plus_oracle({-1, 0, 5}), -1.0);
  EXPECT_DOUBLE_EQ(det_plus_oracle({0, 0, 7}), 0.0);
  EXPECT_NEAR(det_plus_oracle({1, 2, 1}), -1.0, 1e-14);
}

TEST(Jacobian, BoundaryRowsAreIdentity) {
  Grid const g = cartesian_mesh(centered, 13, 2);
  SchemeParams const p{1e-2, simpson_weights(g.angles)};
  SparseMatrix const J = assemble_jacobian(g, sample(g, [](Point2 q) { return dot(q, q); }), p);
  for (std::size_t k = g.interior_count; k < g.size(); ++k) {
    auto const row = Eigen::Index(k);
    for (Eigen::Index c = 0; c < J.cols(); ++c) EXPECT_EQ(J.coeff(row, c), c == row ? 1.0 : 0.0);
  }
}

TEST(Jacobian, InteriorSparsityWithinStencil) {
  Grid const g = hexagonal_mesh(centered, 11);
  SchemeParams const p{1e-2, trapezoid_weights(g.angles)};
  SparseMatrix const J = assemble_jacobian(g, sample(g, [](Point2 q) { return std::exp(q.x) + q.y * q.y; }), p);
  Eigen::SparseMatrix<double, Eigen::RowMajor> const R = J;
  for (std::size_t k = 0; k < g.interior_count; ++k) {
    std::set<Eigen::Index> allowed{Eigen::Index(k)};
    for (std::size_t a = 0; a < 6; ++a) {
      allowed.insert(Eigen::Index(g.stencil(k, a).plus));
      allowed.insert(Eigen::Index(g.stencil(k, a).minus));
    }
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(R, Eigen::Index(k)); it; ++it)
      EXPECT_TRUE(allowed.count(it.col())) << "row " << k << " col " << it.col();
  }
}

TEST(Jacobian, MatchesCentralDifferences) {
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> coef(0.5, 2.0), unit(-1.0, 1.0);
  for (int pass = 0; pass < 2; ++pass) {
    Grid const g = pass ? hexagonal_mesh(centered, 15) : cartesian_mesh(centered, 15, 2);
    SchemeParams const p{1e-4, pass ? trapezoid_weights(g.angles) : simpson_weights(g.angles)};
    GridFunction const zero = GridFunction::Zero(Eigen::Index(g.size()));
    for (int trial = 0; trial < 5; ++trial) {
      double const a = coef(rng), b = coef(rng);
      GridFunction const u = sample(g, [&](Point2 q) { return a * q.x * q.x + b * q.y * q.y + 0.1 * std::sin(q.x + 2 * q.y); });
      GridFunction v(u.size());
      for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = unit(rng) * g.h * g.h;
      GridFunction const Jv = assemble_jacobian(g, u, p) * v;
      double errs[2];
      int i = 0;
      for (double t : {1e-4, 1e-5}) {
        GridFunction const fd =
            (scheme_apply(g, u + t * v, p, zero, zero).residual - scheme_apply(g, u - t * v, p, zero, zero).residual) / (2 * t);
        errs[i++] = (fd - Jv).cwiseAbs().maxCoeff();
      }
      double const scale = Jv.cwiseAbs().maxCoeff();
      EXPECT_LT(errs[1], 1e-7 * scale);
      EXPECT_LT(errs[0], 1e-5 * scale);
    }
  }
}

TEST(Jacobian, KinkUsesEpsilonBranch) {
  // u linear: every difference is below eps, so only the min term contributes
  // and each interior row is minus one second difference
  Grid const g = cartesian_mesh(centered, 13, 2);
  SchemeParams const p{1e-2, simpson_weights(g.angles)};
  SparseMatrix const J = assemble_jacobian(g, sample(g, [](Point2 q) { return q.x; }), p);
  GridFunction const row_sums = J * GridFunction::Ones(J.cols());
  for (std::size_t k = 0; k < g.interior_count; ++k) {
    auto const i = Eigen::Index(k);
    EXPECT_NEAR(row_sums[i], 0.0, 1e-9 / (g.h * g.h));
    EXPECT_GT(J.coeff(i, i), 0.0);
  }
}

TEST(Monotonicity, RandomPerturbations) {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> unit(-1.0, 1.0), delta(1e-12, 1.0);
  for (int pass = 0; pass < 2; ++pass) {
    Grid const g = pass ? hexagonal_mesh(centered, 13) : cartesian_mesh(centered, 13, 2);
    SchemeParams const p{g.h * g.h, pass ? trapezoid_weights(g.angles) : simpson_weights(g.angles)};
    std::uniform_int_distribution<std::size_t> pick_node(0, g.interior_count - 1), pick_angle(0, g.angle_count() - 1);
    std::vector<double> scratch;
    for (int trial = 0; trial < 300; ++trial) {
      double const a = unit(rng), b = unit(rng);
      GridFunction u = sample(g, [&](Point2 q) { return q.x * q.x + a * std::sin(3 * q.y) + b * q.x * q.y; });
      for (Eigen::Index k = 0; k < u.size(); ++k) u[k] += 0.01 * unit(rng);
      std::size_t const node = pick_node(rng), angle = pick_angle(rng);
      Stencil const& s = g.stencil(node, angle);
      std::size_t const nb = rng() % 2 ? s.plus : s.minus;
      double const d = delta(rng);
      double const base = scheme_value(g, u, p, node, scratch);
      GridFunction up = u;
      up[Eigen::Index(nb)] += d;
      EXPECT_LE(scheme_value(g, up, p, node, scratch), base);
      GridFunction uc = u;
      uc[Eigen::Index(node)] += d;
      EXPECT_GE(scheme_value(g, uc, p, node, scratch), base);
    }
  }
}

TEST(Truncation, FullyDegenerateDecays) {
  for (int pass = 0; pass < 2; ++pass) {
    Backend b;
    b.kind = pass ? MeshKind::hexagonal : MeshKind::cartesian;
    double prev = std::numeric_limits<double>::infinity();
    for (int n : {16, 32, 64}) {
      Grid const g = b.build_grid(centered, n);
      GridFunction const u = sample(g, [](Point2 q) { return q.x + q.y; });
      GridFunction const zero = GridFunction::Zero(u.size());
      double const m = max_interior(g, scheme_apply(g, u, b.params(g), zero, zero).residual);
      EXPECT_LT(m, prev);
      prev = m;
    }
  }
}

TEST(Truncation, SmoothConvexConsistencyDecays) {
  ConvexDomain const dom = square({-1.0, -1.0}, 2.0);
  auto u = [](Point2 q) { return std::exp(0.5 * dot(q, q)); };
  auto det = [](Point2 q) { return (1 + dot(q, q)) * std::exp(dot(q, q)); };
  {
    Backend b;
    double prev = std::numeric_limits<double>::infinity();
    for (int n : {16, 32, 64}) {
      Grid const g = b.build_grid(dom, n);
      auto const res = scheme_apply(g, sample(g, u), b.params(g), sample(g, det), sample(g, u)).residual;
      double m = 0;
      for (std::size_t k = 0; k < g.interior_count; ++k)
        if (dom.signed_distance(g.points[k]) < -0.5) m = std::max(m, std::abs(res[Eigen::Index(k)]));
      EXPECT_LT(m, prev) << "n=" << n;
      prev = m;
    }
  }
}
