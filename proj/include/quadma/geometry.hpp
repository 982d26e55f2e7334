#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>

namespace quadma {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
  friend bool operator==(Point2, Point2) = default;
};

inline double norm(Point2 p) { return std::hypot(p.x, p.y); }
inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline Point2 direction(double theta) { return {std::cos(theta), std::sin(theta)}; }

struct Box {
  Point2 lower;
  Point2 upper;

  double width() const { return upper.x - lower.x; }
  double height() const { return upper.y - lower.y; }
  double diameter() const { return std::hypot(width(), height()); }
};

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bounded open convex domain described by its signed distance function
/// (negative inside, zero on the boundary, positive outside).
class ConvexDomain {
 public:
  using DistanceFn = std::function<double(Point2)>;

  ConvexDomain(std::string name, DistanceFn signed_distance, Box bounding_box)
      : name_(std::move(name)), distance_(std::move(signed_distance)), box_(bounding_box) {}

  double signed_distance(Point2 p) const { return distance_(p); }
  bool contains(Point2 p) const { return distance_(p) < 0.0; }
  const Box& bounding_box() const { return box_; }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  DistanceFn distance_;
  Box box_;
};

/// Axis-aligned rectangle (lower.x, upper.x) x (lower.y, upper.y).
inline ConvexDomain rectangle(Point2 lower, Point2 upper) {
  if (!(upper.x > lower.x && upper.y > lower.y)) throw GeometryError("rectangle: empty extent");
  auto sdf = [lower, upper](Point2 p) {
    double const dx = std::max(lower.x - p.x, p.x - upper.x);
    double const dy = std::max(lower.y - p.y, p.y - upper.y);
    if (dx <= 0.0 && dy <= 0.0) return std::max(dx, dy);
    return std::hypot(std::max(dx, 0.0), std::max(dy, 0.0));
  };
  return ConvexDomain("rectangle", sdf, Box{lower, upper});
}

inline ConvexDomain square(Point2 lower_left, double side) {
  auto d = rectangle(lower_left, {lower_left.x + side, lower_left.y + side});
  return ConvexDomain("square", [d](Point2 p) { return d.signed_distance(p); }, d.bounding_box());
}

inline ConvexDomain disc(Point2 center, double radius) {
  if (!(radius > 0.0)) throw GeometryError("disc: radius must be positive");
  auto sdf = [center, radius](Point2 p) { return norm(p - center) - radius; };
  return ConvexDomain("disc", sdf,
                      Box{{center.x - radius, center.y - radius}, {center.x + radius, center.y + radius}});
}

inline double signed_distance(const ConvexDomain& domain, Point2 p) { return domain.signed_distance(p); }

/// Smallest t > 0 with signed_distance(origin + t * dir) == 0, by bracketing
/// on [0, 2 * diameter] and bisection.
inline double boundary_intersection(const ConvexDomain& domain, Point2 origin, Point2 dir) {
  double const d0 = domain.signed_distance(origin);
  if (!(d0 < 0.0)) throw GeometryError("boundary_intersection: origin is not interior");
  double const len = norm(dir);
  if (!(std::abs(len - 1.0) < 1e-12)) throw GeometryError("boundary_intersection: direction not normalized");

  double const t_max = 2.0 * domain.bounding_box().diameter();
  // The signed distance is 1-Lipschitz, so no crossing happens before |d0|.
  double lo = -d0;
  if (domain.signed_distance(origin + lo * dir) >= 0.0) lo = 0.0;
  double hi = lo;
  double step = std::max(-d0, 1e-12 * t_max);
  while (domain.signed_distance(origin + hi * dir) < 0.0) {
    lo = hi;
    hi += step;
    step *= 2.0;
    if (hi > t_max) {
      hi = t_max;
      if (domain.signed_distance(origin + hi * dir) < 0.0)
        throw GeometryError("boundary_intersection: no boundary crossing within search range");
      break;
    }
  }
  // Invariant: d(lo) < 0 <= d(hi).
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
    double const mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (domain.signed_distance(origin + mid * dir) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  double const d_lo = std::abs(domain.signed_distance(origin + lo * dir));
  double const d_hi = std::abs(domain.signed_distance(origin + hi * dir));
  return d_lo < d_hi ? lo : hi;
}

}  // namespace quadma
