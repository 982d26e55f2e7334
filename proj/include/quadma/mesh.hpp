#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "quadma/angular.hpp"
#include "quadma/geometry.hpp"

namespace quadma {

class MeshError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class MeshKind { cartesian, hexagonal };

inline const char* to_string(MeshKind k) { return k == MeshKind::cartesian ? "cartesian" : "hexagonal"; }

/// Point set origin + i * b1 + j * b2 for integer (i, j).
struct Lattice {
  MeshKind kind = MeshKind::cartesian;
  Point2 origin;
  Point2 b1;
  Point2 b2;
  double spacing = 0.0;

  Point2 at(std::int64_t i, std::int64_t j) const {
    return {origin.x + double(i) * b1.x + double(j) * b2.x, origin.y + double(i) * b1.y + double(j) * b2.y};
  }

  /// Real lattice coordinates (a, c) with p = origin + a * b1 + c * b2.
  std::pair<double, double> coords(Point2 p) const {
    double const det = b1.x * b2.y - b1.y * b2.x;
    Point2 const q = p - origin;
    return {(q.x * b2.y - q.y * b2.x) / det, (b1.x * q.y - b1.y * q.x) / det};
  }

  static std::int64_t key(std::int64_t i, std::int64_t j) { return (i << 32) ^ (j & 0xffffffffLL); }
};

struct Stencil {
  std::size_t plus = 0;
  double h_plus = 0.0;
  std::size_t minus = 0;
  double h_minus = 0.0;
};

/// Discretization points: interior lattice nodes first (sorted by row, then
/// column), boundary nodes appended in insertion order. Every interior node
/// owns one aligned stencil per angle.
struct Grid {
  MeshKind kind = MeshKind::cartesian;
  Lattice lattice;
  AngularDiscretization angles;
  std::vector<LatticeOffset> offsets;
  double h = 0.0;
  double stencil_width = 0.0;
  int depth = 0;  // L1 stencil depth K; zero for hexagonal grids
  int n = 0;      // construction resolution (points per side or per vertical line)

  std::vector<Point2> points;
  std::vector<std::uint8_t> interior;
  std::size_t interior_count = 0;
  std::vector<Stencil> stencils;  // interior_count x angles.size(), row major
  std::unordered_map<std::int64_t, std::size_t> lattice_nodes;

  std::size_t size() const { return points.size(); }
  std::size_t angle_count() const { return angles.size(); }
  bool is_interior(std::size_t node) const { return interior[node] != 0; }
  const Stencil& stencil(std::size_t node, std::size_t angle) const { return stencils[node * angle_count() + angle]; }

  std::optional<std::size_t> node_at(std::int64_t i, std::int64_t j) const {
    auto it = lattice_nodes.find(Lattice::key(i, j));
    if (it == lattice_nodes.end()) return std::nullopt;
    return it->second;
  }
};

namespace detail {

// Buckets points by cell so duplicate boundary insertions can be found in O(1).
class PointIndex {
 public:
  explicit PointIndex(double cell) : cell_(cell) {}

  std::optional<std::size_t> find(const std::vector<Point2>& pts, Point2 p, double tol) const {
    auto const [cx, cy] = cell_of(p);
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        auto it = buckets_.find(Lattice::key(cx + dx, cy + dy));
        if (it == buckets_.end()) continue;
        for (auto id : it->second)
          if (norm(pts[id] - p) <= tol) return id;
      }
    return std::nullopt;
  }

  void insert(Point2 p, std::size_t id) {
    auto const [cx, cy] = cell_of(p);
    buckets_[Lattice::key(cx, cy)].push_back(id);
  }

 private:
  std::pair<std::int64_t, std::int64_t> cell_of(Point2 p) const {
    return {static_cast<std::int64_t>(std::floor(p.x / cell_)), static_cast<std::int64_t>(std::floor(p.y / cell_))};
  }

  double cell_;
  std::unordered_map<std::int64_t, std::vector<std::size_t>> buckets_;
};

inline constexpr double kInteriorMargin = 1e-9;  // in units of h
inline constexpr double kDedupTolerance = 1e-9;  // in units of h

// Selects lattice nodes strictly inside the domain and orders them by row.
inline void select_interior(Grid& g, const ConvexDomain& domain, std::int64_t i_lo, std::int64_t i_hi,
                            std::int64_t j_lo, std::int64_t j_hi, int row_stride_i) {
  struct Candidate {
    std::int64_t row, i, j;
  };
  std::vector<Candidate> keep;
  for (std::int64_t i = i_lo; i <= i_hi; ++i)
    for (std::int64_t j = j_lo; j <= j_hi; ++j) {
      Point2 const p = g.lattice.at(i, j);
      if (domain.signed_distance(p) < -kInteriorMargin * g.h) keep.push_back({row_stride_i * i + 2 * j, i, j});
    }
  std::sort(keep.begin(), keep.end(),
            [](const Candidate& a, const Candidate& b) { return a.row != b.row ? a.row < b.row : a.i < b.i; });
  if (keep.empty()) throw MeshError("mesh: no lattice point lies inside the domain");
  for (auto const& c : keep) {
    g.lattice_nodes.emplace(Lattice::key(c.i, c.j), g.points.size());
    g.points.push_back(g.lattice.at(c.i, c.j));
  }
  g.interior_count = g.points.size();
  g.interior.assign(g.points.size(), 1);
}

}  // namespace detail

/// Adds boundary points so every interior node has aligned neighbors in all
/// stencil directions: the lattice neighbor x +/- offset when it is interior,
/// otherwise the point where the ray leaves the domain. Fills grid.stencils.
inline Grid augment_boundary(Grid grid, const ConvexDomain& domain, std::span<const LatticeOffset> offsets) {
  std::size_t const m = grid.angle_count();
  if (offsets.size() != m) throw MeshError("augment_boundary: one lattice offset per angle required");
  grid.offsets.assign(offsets.begin(), offsets.end());

  // Recover lattice indices of interior nodes from the map.
  std::vector<std::pair<std::int64_t, std::int64_t>> ij(grid.interior_count);
  for (auto const& [key, node] : grid.lattice_nodes) {
    std::int64_t const i = key >> 32;
    auto j = static_cast<std::int64_t>(static_cast<std::int32_t>(key & 0xffffffffLL));
    ij[node] = {i, j};
  }

  double const tol = detail::kDedupTolerance * grid.h;
  detail::PointIndex index(grid.h);
  grid.stencils.assign(grid.interior_count * m, Stencil{});
  grid.stencil_width = 0.0;

  auto resolve = [&](std::size_t node, LatticeOffset o, Point2 dir, int sign, std::size_t& id, double& len) {
    auto const [i, j] = ij[node];
    if (auto nb = grid.node_at(i + sign * o.dx, j + sign * o.dy)) {
      id = *nb;
      Point2 const b = grid.lattice.at(o.dx, o.dy) - grid.lattice.origin;
      len = norm(b);
      return;
    }
    Point2 const d = double(sign) * dir;
    double const t = boundary_intersection(domain, grid.points[node], d);
    Point2 const p = grid.points[node] + t * d;
    if (auto existing = index.find(grid.points, p, tol)) {
      id = *existing;
      len = norm(grid.points[id] - grid.points[node]);
      return;
    }
    id = grid.points.size();
    grid.points.push_back(p);
    grid.interior.push_back(0);
    index.insert(p, id);
    len = t;
  };

  for (std::size_t node = 0; node < grid.interior_count; ++node) {
    for (std::size_t a = 0; a < m; ++a) {
      Point2 const dir = direction(grid.angles.angle(a));
      Stencil& s = grid.stencils[node * m + a];
      resolve(node, offsets[a], dir, +1, s.plus, s.h_plus);
      resolve(node, offsets[a], dir, -1, s.minus, s.h_minus);
      grid.stencil_width = std::max({grid.stencil_width, s.h_plus, s.h_minus});
    }
  }
  return grid;
}

/// Uniform Cartesian lattice with `n` points across the larger bounding-box side
/// and L1-circle stencils of depth K (stencil width K h).
inline Grid cartesian_mesh(const ConvexDomain& domain, int n, int K) {
  if (K < 1) throw MeshError("cartesian_mesh: stencil depth K must be at least 1");
  if (n < 4 * K + 4) throw MeshError("cartesian_mesh: need n >= 4K + 4");
  Box const box = domain.bounding_box();
  Grid g;
  g.kind = MeshKind::cartesian;
  g.depth = K;
  g.n = n;
  g.h = std::max(box.width(), box.height()) / double(n - 1);
  g.lattice = Lattice{MeshKind::cartesian, box.lower, {g.h, 0.0}, {0.0, g.h}, g.h};
  g.angles = l1_angles(K);
  auto const ni = static_cast<std::int64_t>(std::ceil(box.width() / g.h - 1e-9));
  auto const nj = static_cast<std::int64_t>(std::ceil(box.height() / g.h - 1e-9));
  // row key is 2j so that rows sort by y
  detail::select_interior(g, domain, 0, ni, 0, nj, 0);
  auto const offsets = l1_offsets(K);
  return augment_boundary(std::move(g), domain, offsets);
}

/// Lattice offsets realising the directions j*pi/6 on the hexagonal lattice
/// with b1 = v (sqrt(3)/2, 1/2) and b2 = v (0, 1).
inline std::vector<LatticeOffset> hex_offsets() { return {{2, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 2}, {-1, 1}}; }

/// Hexagonal (triangular) lattice with `n` points along the vertical extent.
/// Columns sit sqrt(3)/2 v apart and alternate columns are shifted by v/2.
inline Grid hexagonal_mesh(const ConvexDomain& domain, int n) {
  if (n < 8) throw MeshError("hexagonal_mesh: need n >= 8");
  Box const box = domain.bounding_box();
  double const v = box.height() / double(n - 1);
  double const s3 = std::sqrt(3.0);
  Grid g;
  g.kind = MeshKind::hexagonal;
  g.h = v;
  g.n = n;
  g.lattice = Lattice{MeshKind::hexagonal, box.lower, {0.5 * s3 * v, 0.5 * v}, {0.0, v}, v};
  g.angles = hex_angles();
  auto const ni = static_cast<std::int64_t>(std::ceil(box.width() / (0.5 * s3 * v) + 1e-9));
  auto const nj = static_cast<std::int64_t>(std::ceil(box.height() / v + 1e-9));
  // y = y0 + (i + 2j) v / 2, so the row key is i + 2j
  detail::select_interior(g, domain, 0, ni, -(ni / 2) - 1, nj, 1);
  auto const offsets = hex_offsets();
  return augment_boundary(std::move(g), domain, offsets);
}

/// Sampled estimate of sup_x min_y |x - y| over the domain.
inline double spatial_resolution(const Grid& grid, const ConvexDomain& domain, int samples_per_side) {
  Box const box = domain.bounding_box();
  double worst = 0.0;
  for (int a = 0; a < samples_per_side; ++a)
    for (int b = 0; b < samples_per_side; ++b) {
      Point2 const p{box.lower.x + (a + 0.5) / samples_per_side * box.width(),
                     box.lower.y + (b + 0.5) / samples_per_side * box.height()};
      if (!domain.contains(p)) continue;
      double best = std::numeric_limits<double>::infinity();
      for (auto const& q : grid.points) best = std::min(best, norm(q - p));
      worst = std::max(worst, best);
    }
  return worst;
}

}  // namespace quadma
