#pragma once

#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "quadma/angular.hpp"

namespace quadma {

class QuadratureError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class QuadratureKind { trapezoid, simpson };

inline const char* to_string(QuadratureKind k) { return k == QuadratureKind::trapezoid ? "trapezoid" : "simpson"; }

/// Nonnegative weights over [0, pi) paired with the directions they sample.
struct QuadratureRule {
  QuadratureKind kind = QuadratureKind::trapezoid;
  AngularDiscretization discretization;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
  double sum() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }
};

inline QuadratureRule trapezoid_weights(const AngularDiscretization& d) {
  if (d.size() < 2) throw QuadratureError("trapezoid rule needs at least two angles");
  QuadratureRule rule{QuadratureKind::trapezoid, d, std::vector<double>(d.size())};
  for (std::size_t i = 0; i < d.size(); ++i) {
    auto const ii = static_cast<std::ptrdiff_t>(i);
    rule.weights[i] = 0.5 * (d.gap(ii - 1) + d.gap(ii));
  }
  return rule;
}

/// Composite Simpson rule on non-uniform periodic angles, panels
/// (theta_{2i}, theta_{2i+1}, theta_{2i+2}). Rejects any nonpositive weight.
inline QuadratureRule simpson_weights(const AngularDiscretization& d) {
  if (d.size() % 2 != 0 || d.size() < 2)
    throw QuadratureError("simpson rule needs an even number of angles, got " + std::to_string(d.size()));
  QuadratureRule rule{QuadratureKind::simpson, d, std::vector<double>(d.size())};
  for (std::size_t j = 0; j < d.size(); ++j) {
    auto const jj = static_cast<std::ptrdiff_t>(j);
    if (j % 2 == 1) {
      double const a = d.gap(jj - 1), b = d.gap(jj);
      rule.weights[j] = (a + b) * (a + b) * (a + b) / (6.0 * a * b);
    } else {
      double const g0 = d.gap(jj), g1 = d.gap(jj + 1);
      double const gm2 = d.gap(jj - 2), gm1 = d.gap(jj - 1);
      rule.weights[j] = (g0 + g1) / 6.0 * (2.0 - g1 / g0) + (gm2 + gm1) / 6.0 * (2.0 - gm2 / gm1);
    }
    if (!(rule.weights[j] > 0.0)) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "simpson weight " << j << " is nonpositive (" << rule.weights[j] << "); gap ratios "
          << d.gap(jj + 1) / d.gap(jj) << " and " << d.gap(jj - 2) / d.gap(jj - 1);
      throw QuadratureError(msg.str());
    }
  }
  return rule;
}

inline QuadratureRule make_rule(QuadratureKind kind, const AngularDiscretization& d) {
  return kind == QuadratureKind::trapezoid ? trapezoid_weights(d) : simpson_weights(d);
}

/// Lower bound on Simpson weights in units of the resolution:
/// min{4 / (3 Q^3), 2 (2 - Q) / (3 Q)}.
inline double simpson_weight_bound(double Q) {
  return std::min(4.0 / (3.0 * Q * Q * Q), 2.0 * (2.0 - Q) / (3.0 * Q));
}

inline double integrate(const QuadratureRule& rule, std::span<const double> samples) {
  if (samples.size() != rule.size())
    throw QuadratureError("integrate: expected " + std::to_string(rule.size()) + " samples, got " +
                          std::to_string(samples.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) s += rule.weights[i] * samples[i];
  return s;
}

template <class F>
double integrate_function(const QuadratureRule& rule, F&& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) s += rule.weights[i] * f(rule.discretization.angle(i));
  return s;
}

}  // namespace quadma
