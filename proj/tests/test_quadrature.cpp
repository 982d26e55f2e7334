#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "quadma/quadrature.hpp"

using namespace quadma;
using std::numbers::pi;

namespace {

AngularDiscretization uniform(int count) {
  std::vector<double> a;
  for (int j = 0; j < count; ++j) a.push_back(j * pi / count);
  return AngularDiscretization(a);
}

double ellipse_integrand(double t) { return 1.0 / (2 * std::cos(t) * std::cos(t) + 3 * std::sin(t) * std::sin(t)); }

// least-squares slope of log(err) against log(dtheta)
double slope(const std::vector<double>& x, const std::vector<double>& y) {
  double n = double(x.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double const lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST(Trapezoid, HexWeightsEqual) {
  auto const r = trapezoid_weights(hex_angles());
  for (double w : r.weights) EXPECT_NEAR(w, pi / 6, 1e-15);
}

TEST(Trapezoid, L1DepthTwoWeights) {
  auto const r = trapezoid_weights(l1_angles(2));
  for (double w : r.weights) EXPECT_NEAR(w, pi / 4, 1e-15);
}

TEST(Trapezoid, SumsToPiAndBoundedBelow) {
  for (int K = 1; K <= 64; ++K) {
    auto const d = l1_angles(K);
    auto const r = trapezoid_weights(d);
    EXPECT_NEAR(r.sum(), pi, 1e-12);
    for (double w : r.weights) EXPECT_GE(w, d.resolution() / d.quasi_uniformity() * (1 - 1e-12));
  }
  AngularDiscretization const odd({0.0, 0.3, 0.5, 2.9});
  auto const r = trapezoid_weights(odd);
  EXPECT_NEAR(r.sum(), pi, 1e-12);
  for (double w : r.weights) EXPECT_GT(w, 0.0);
}

TEST(Simpson, UniformGapWeights) {
  for (int count : {4, 6, 12, 30}) {
    auto const r = simpson_weights(uniform(count));
    double const h = pi / count;
    for (int j = 0; j < count; ++j) EXPECT_NEAR(r.weights[j], j % 2 ? 4 * h / 3 : 2 * h / 3, 1e-14);
  }
}

TEST(Simpson, L1DepthTwoWeights) {
  auto const r = simpson_weights(l1_angles(2));
  EXPECT_NEAR(r.weights[0], pi / 6, 1e-15);
  EXPECT_NEAR(r.weights[1], pi / 3, 1e-15);
  EXPECT_NEAR(r.weights[2], pi / 6, 1e-15);
  EXPECT_NEAR(r.weights[3], pi / 3, 1e-15);
}

TEST(Simpson, PositiveAndAboveBoundForL1) {
  for (int K = 2; K <= 64; ++K) {
    auto const d = l1_angles(K);
    auto const r = simpson_weights(d);
    double const bound = simpson_weight_bound(d.quasi_uniformity()) * d.resolution();
    EXPECT_NEAR(r.sum(), pi, 1e-10);
    for (double w : r.weights) {
      EXPECT_GT(w, 0.0);
      EXPECT_GE(w, bound);
    }
  }
}

TEST(Simpson, WeightFormulaOnNonuniformGaps) {
  // hand expansion of the panel weights for gaps a, b, c, d
  AngularDiscretization const d({0.0, 0.7, 1.5, 2.2});
  double const a = 0.7, b = 0.8, c = 0.7, e = pi - 2.2;
  auto const r = simpson_weights(d);
  EXPECT_NEAR(r.weights[1], std::pow(a + b, 3) / (6 * a * b), 1e-14);
  EXPECT_NEAR(r.weights[3], std::pow(c + e, 3) / (6 * c * e), 1e-14);
  EXPECT_NEAR(r.weights[0], (a + b) / 6 * (2 - b / a) + (c + e) / 6 * (2 - c / e), 1e-14);
  EXPECT_NEAR(r.weights[2], (c + e) / 6 * (2 - e / c) + (a + b) / 6 * (2 - a / b), 1e-14);
  EXPECT_NEAR(r.sum(), pi, 1e-12);
}

TEST(Simpson, NonuniformWeightsSumToPi) {
  AngularDiscretization const d({0.0, 0.5, 0.9, 1.6, 2.0, 2.7});
  auto const r = simpson_weights(d);
  EXPECT_NEAR(integrate_function(r, [](double) { return 1.0; }), pi, 1e-12);
}

TEST(Simpson, RejectsOddCount) { EXPECT_THROW(simpson_weights(uniform(5)), QuadratureError); }

TEST(Simpson, RejectsNonpositiveWeightWithDiagnostic) {
  // ratio far beyond 2 makes an even weight negative
  AngularDiscretization const d({0.0, 0.05, 1.0, 1.6});
  try {
    simpson_weights(d);
    FAIL() << "expected a nonpositive weight";
  } catch (const QuadratureError& e) {
    std::string const msg = e.what();
    EXPECT_NE(msg.find("simpson weight"), std::string::npos);
    EXPECT_NE(msg.find("gap ratios"), std::string::npos);
  }
}

TEST(Integrate, ConstantGivesPi) {
  for (auto const& r : {trapezoid_weights(hex_angles()), simpson_weights(l1_angles(9))}) {
    std::vector<double> ones(r.size(), 1.0);
    EXPECT_NEAR(integrate(r, ones), pi, 1e-12);
  }
}

TEST(Integrate, EllipseIntegrandSimpson) {
  auto const r = simpson_weights(l1_angles(32));
  std::vector<double> s;
  for (double t : r.discretization.angles()) s.push_back(ellipse_integrand(t));
  EXPECT_NEAR(integrate(r, s), pi / std::sqrt(6.0), 1e-4);
}

TEST(Integrate, SineSquaredTrapezoidHex) {
  auto const r = trapezoid_weights(hex_angles());
  EXPECT_NEAR(integrate_function(r, [](double t) { return std::sin(t) * std::sin(t); }), pi / 2, 1e-12);
}

TEST(Integrate, LengthMismatchRejected) {
  auto const r = trapezoid_weights(hex_angles());
  std::vector<double> s(5, 1.0);
  EXPECT_THROW(integrate(r, s), QuadratureError);
}

TEST(Integrate, SimpsonFourthOrderOnL1Angles) {
  std::vector<double> res, err;
  double const exact = pi / std::sqrt(6.0);
  for (int K : {8, 16, 32, 64}) {
    auto const r = simpson_weights(l1_angles(K));
    res.push_back(r.discretization.resolution());
    err.push_back(std::abs(integrate_function(r, ellipse_integrand) - exact));
  }
  EXPECT_GE(slope(res, err), 3.5);
}

TEST(Integrate, TrapezoidSpectralOnUniformGrids) {
  double const exact = pi / std::sqrt(6.0);
  std::vector<double> err;
  for (int count : {6, 12, 24}) err.push_back(std::abs(integrate_function(trapezoid_weights(uniform(count)), ellipse_integrand) - exact));
  // each doubling gains more than any fixed algebraic factor would: the rate itself increases
  double const rate1 = std::log2(err[0] / err[1]);
  double const rate2 = std::log2(err[1] / std::max(err[2], 1e-300));
  EXPECT_GT(rate1, 4.0);
  EXPECT_GT(rate2, rate1);
}

TEST(MakeRule, DispatchesOnKind) {
  EXPECT_EQ(make_rule(QuadratureKind::trapezoid, hex_angles()).kind, QuadratureKind::trapezoid);
  EXPECT_EQ(make_rule(QuadratureKind::simpson, l1_angles(3)).kind, QuadratureKind::simpson);
  EXPECT_STREQ(to_string(QuadratureKind::simpson), "simpson");
}
