#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

namespace quadma {

class AngularError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Ordered directions theta_0 < ... < theta_M in [0, pi). Gap i runs from
/// theta_i to theta_{i+1}; the last gap wraps around to theta_0 + pi.
class AngularDiscretization {
 public:
  AngularDiscretization() = default;

  explicit AngularDiscretization(std::vector<double> angles) : angles_(std::move(angles)) {
    if (angles_.empty()) throw AngularError("angular discretization needs at least one angle");
    for (std::size_t i = 0; i < angles_.size(); ++i) {
      double const a = angles_[i];
      if (!(a >= 0.0 && a < std::numbers::pi)) throw AngularError("angle outside [0, pi)");
      if (i > 0 && !(a > angles_[i - 1])) throw AngularError("angles must be strictly increasing");
    }
    gaps_.resize(angles_.size());
    for (std::size_t i = 0; i + 1 < angles_.size(); ++i) gaps_[i] = angles_[i + 1] - angles_[i];
    gaps_.back() = angles_.front() + std::numbers::pi - angles_.back();
  }

  std::size_t size() const { return angles_.size(); }
  const std::vector<double>& angles() const { return angles_; }
  const std::vector<double>& gaps() const { return gaps_; }
  double angle(std::size_t i) const { return angles_[i]; }

  /// Gap with periodic indexing, so gap(-1) is the wraparound gap.
  double gap(std::ptrdiff_t i) const {
    auto const n = static_cast<std::ptrdiff_t>(gaps_.size());
    return gaps_[static_cast<std::size_t>(((i % n) + n) % n)];
  }

  double resolution() const { return *std::max_element(gaps_.begin(), gaps_.end()); }
  double min_gap() const { return *std::min_element(gaps_.begin(), gaps_.end()); }
  double quasi_uniformity() const { return resolution() / min_gap(); }

 private:
  std::vector<double> angles_;
  std::vector<double> gaps_;
};

inline double quasi_uniformity(const AngularDiscretization& d) { return d.quasi_uniformity(); }

/// Six equispaced directions j*pi/6 of the hexagonal lattice.
inline AngularDiscretization hex_angles() {
  std::vector<double> a(6);
  for (int j = 0; j < 6; ++j) a[j] = j * std::numbers::pi / 6.0;
  return AngularDiscretization(std::move(a));
}

struct LatticeOffset {
  int dx = 0;
  int dy = 0;
  double length() const { return std::hypot(double(dx), double(dy)); }
};

/// Lattice vectors on the L1 circle of radius K, one per direction in [0, pi):
/// (K - j, K - |K - j|) for j = 0, ..., 2K - 1.
inline std::vector<LatticeOffset> l1_offsets(int K) {
  if (K < 1) throw AngularError("l1 stencil depth must be at least 1");
  std::vector<LatticeOffset> out;
  out.reserve(2 * static_cast<std::size_t>(K));
  for (int j = 0; j < 2 * K; ++j) out.push_back({K - j, K - std::abs(K - j)});
  return out;
}

inline AngularDiscretization l1_angles(int K) {
  std::vector<double> a;
  for (auto o : l1_offsets(K)) a.push_back(std::atan2(double(o.dy), double(o.dx)));
  return AngularDiscretization(std::move(a));
}

/// True when every consecutive gap ratio gap_{i+1}/gap_i, wraparound included,
/// lies strictly inside (ratio_low, ratio_high).
inline bool satisfies_ratio_bound(const AngularDiscretization& d, double ratio_low, double ratio_high) {
  for (std::size_t i = 0; i < d.size(); ++i) {
    double const r = d.gap(static_cast<std::ptrdiff_t>(i) + 1) / d.gap(static_cast<std::ptrdiff_t>(i));
    if (!(r > ratio_low && r < ratio_high)) return false;
  }
  return true;
}

/// Largest subset of `candidate_angles` containing the first angle whose
/// consecutive gap ratios (wraparound included) lie in (ratio_low, ratio_high)
/// and whose gaps never exceed three times the input resolution.
///
/// Dynamic program over (previous, current) kept pairs. Only pairs closer than
/// the gap cap are stored, so the cost is O(n k^3) with k the number of
/// candidates inside one capped gap.
inline AngularDiscretization filter_angles(const std::vector<double>& candidate_angles, double ratio_low,
                                           double ratio_high) {
  if (!(ratio_low > 0.0 && ratio_low < 1.0 && ratio_high > 1.0))
    throw AngularError("filter_angles: need 0 < ratio_low < 1 < ratio_high");
  AngularDiscretization const input(candidate_angles);
  std::size_t const n = input.size();
  if (n < 4) throw AngularError("filter_angles: fewer than 4 candidate angles");
  if (satisfies_ratio_bound(input, ratio_low, ratio_high)) return input;

  double const cap = 3.0 * input.resolution() * (1.0 + 1e-12);
  // Extended sequence: index n is theta_0 + pi.
  std::vector<double> a(candidate_angles);
  a.push_back(a.front() + std::numbers::pi);
  auto ok_ratio = [&](double g_prev, double g_next) {
    double const r = g_next / g_prev;
    return r > ratio_low && r < ratio_high;
  };

  // Window: for each index, how many successors lie within the cap.
  std::vector<std::size_t> reach(n + 1, 0);
  for (std::size_t i = 0; i <= n; ++i) {
    std::size_t k = 0;
    while (i + k + 1 <= n && a[i + k + 1] - a[i] <= cap) ++k;
    reach[i] = k;
  }
  std::size_t window = 0;
  for (auto r : reach) window = std::max(window, r);
  if (window == 0) throw AngularError("filter_angles: no admissible gaps");

  constexpr int kUnreached = -1;
  std::vector<std::size_t> best_path;
  int best_count = 0;

  // state (p, c) stored at [c][c - p - 1]
  std::vector<std::vector<int>> count(n + 1, std::vector<int>(window, kUnreached));
  std::vector<std::vector<std::size_t>> parent(n + 1, std::vector<std::size_t>(window, 0));

  for (std::size_t second = 1; second <= std::min(reach[0], n - 1); ++second) {
    for (auto& row : count) std::fill(row.begin(), row.end(), kUnreached);
    count[second][second - 1] = 2;
    for (std::size_t c = second; c < n; ++c) {
      for (std::size_t back = 1; back <= window && back <= c; ++back) {
        int const cnt = count[c][back - 1];
        if (cnt == kUnreached) continue;
        std::size_t const p = c - back;
        double const g_prev = a[c] - a[p];
        for (std::size_t d = c + 1; d <= c + reach[c]; ++d) {
          if (!ok_ratio(g_prev, a[d] - a[c])) continue;
          int const next = d == n ? cnt : cnt + 1;
          int& slot = count[d][d - c - 1];
          if (next > slot) {
            slot = next;
            parent[d][d - c - 1] = p;
          }
        }
      }
    }
    double const g_first = a[second] - a[0];
    for (std::size_t back = 1; back <= window && back <= n; ++back) {
      int const cnt = count[n][back - 1];
      if (cnt == kUnreached || cnt <= best_count) continue;
      std::size_t const p = n - back;
      if (!ok_ratio(a[n] - a[p], g_first)) continue;
      // walk back to recover the kept indices
      std::vector<std::size_t> path{n, p};
      std::size_t cur = p, nxt = n;
      while (cur != 0) {
        std::size_t const prev = parent[nxt][nxt - cur - 1];
        if (cur == second && prev == 0) {
          path.push_back(0);
          break;
        }
        nxt = cur;
        cur = prev;
        path.push_back(cur);
      }
      best_count = cnt;
      best_path.assign(path.rbegin(), path.rend());
    }
  }
  if (best_count < 4) throw AngularError("filter_angles: fewer than 4 angles survive the ratio filter");

  std::vector<double> kept;
  for (auto i : best_path)
    if (i < n) kept.push_back(a[i]);
  return AngularDiscretization(std::move(kept));
}

}  // namespace quadma
