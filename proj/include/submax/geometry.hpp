#pragma once

#include <algorithm>
#include <numeric>

#include "submax/set_function.hpp"

namespace submax {

enum class BodyKind { Box, Cardinality, ScaledSimplex };

/// Convex feasible region inside [0,1]^n:
///   Box            - the whole unit box,
///   Cardinality    - sum x_i <= k (relaxation of picking at most k items),
///   ScaledSimplex  - sum x_i  = k.
struct ConstraintSet {
  BodyKind kind = BodyKind::Box;
  int n = 0;
  double k = 0.0;

  static ConstraintSet box(int n) {
    if (n <= 0) throw InputError("ConstraintSet: n must be positive");
    return {BodyKind::Box, n, static_cast<double>(n)};
  }
  static ConstraintSet cardinality_polytope(int n, double k) {
    validate_budget(n, k);
    return {BodyKind::Cardinality, n, k};
  }
  static ConstraintSet scaled_simplex(int n, double k) {
    validate_budget(n, k);
    return {BodyKind::ScaledSimplex, n, k};
  }

  bool contains(std::span<const double> x, double tol = 1e-9) const {
    if (static_cast<int>(x.size()) != n) return false;
    if (!in_unit_box(x, tol)) return false;
    const double s = sum(x);
    switch (kind) {
      case BodyKind::Box: return true;
      case BodyKind::Cardinality: return s <= k + tol;
      case BodyKind::ScaledSimplex: return std::abs(s - k) <= tol;
    }
    return false;
  }

  std::string name() const {
    switch (kind) {
      case BodyKind::Box: return "box(" + std::to_string(n) + ")";
      case BodyKind::Cardinality:
        return "cardinality(n=" + std::to_string(n) + ",k=" + std::to_string(k) + ")";
      case BodyKind::ScaledSimplex:
        return "scaled-simplex(n=" + std::to_string(n) + ",k=" + std::to_string(k) + ")";
    }
    return "?";
  }

 private:
  static void validate_budget(int n, double k) {
    if (n <= 0) throw InputError("ConstraintSet: n must be positive");
    if (!(k > 0.0) || k > static_cast<double>(n))
      throw InputError("ConstraintSet: budget k must lie in (0, n]");
  }
};

enum class MirrorMapKind { HalfSquaredEuclidean, ScaledEntropy };

/// Potential driving non-Euclidean projected updates. The entropy map
/// Phi(x) = k * sum x_i log x_i lives on the positive orthant and is
/// 1-strongly convex w.r.t. the l1 norm on bodies with sum x = k.
struct MirrorMap {
  MirrorMapKind kind = MirrorMapKind::HalfSquaredEuclidean;
  double k = 1.0;  // entropy scale; unused for the Euclidean map

  static MirrorMap half_squared_euclidean() {
    return {MirrorMapKind::HalfSquaredEuclidean, 1.0};
  }
  static MirrorMap scaled_entropy(double k) {
    if (!(k > 0.0)) throw InputError("MirrorMap: entropy scale must be positive");
    return {MirrorMapKind::ScaledEntropy, k};
  }
};

namespace detail {

inline void require_finite(std::span<const double> y, const char* op) {
  for (double v : y)
    if (!std::isfinite(v)) throw InputError(std::string(op) + ": non-finite input");
}

/// Solves sum_i clamp(y_i - lambda, 0, 1) = target for lambda. The left side
/// is continuous, piecewise linear and non-increasing with breakpoints at y_i
/// and y_i - 1.
inline double clamp_threshold(std::span<const double> y, double target) {
  const std::size_t n = y.size();
  assert(target >= 0.0 && target <= static_cast<double>(n));
  std::vector<double> bps;
  bps.reserve(2 * n);
  for (double v : y) {
    bps.push_back(v - 1.0);
    bps.push_back(v);
  }
  std::sort(bps.begin(), bps.end());
  auto mass = [&](double lambda) {
    double s = 0.0;
    for (double v : y) s += std::clamp(v - lambda, 0.0, 1.0);
    return s;
  };
  // Largest breakpoint with mass(bp) >= target; the crossing lies in the
  // segment starting there.
  std::size_t lo = 0, hi = bps.size() - 1;
  if (mass(bps[0]) < target) return bps[0];  // target == n at full saturation
  while (lo < hi) {
    const std::size_t mid = (lo + hi + 1) / 2;
    if (mass(bps[mid]) >= target)
      lo = mid;
    else
      hi = mid - 1;
  }
  const double left = bps[lo];
  // Classify coordinates on the open segment right of `left`.
  const double right = (lo + 1 < bps.size()) ? bps[lo + 1] : left + 1.0;
  const double probe = (lo + 1 < bps.size()) ? 0.5 * (left + right) : left;
  double active_sum = 0.0;
  double saturated = 0.0;
  std::size_t active = 0;
  for (double v : y) {
    if (v - probe >= 1.0) {
      saturated += 1.0;
    } else if (v - probe > 0.0) {
      active_sum += v;
      ++active;
    }
  }
  if (active == 0) return left;  // flat segment already meeting the target
  return (active_sum + saturated - target) / static_cast<double>(active);
}

/// Solves sum_i min(beta * y_i, 1) = target for beta > 0, y > 0.
inline double scale_threshold(std::span<const double> y, double target) {
  std::vector<double> sorted(y.begin(), y.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const std::size_t n = sorted.size();
  double suffix = std::accumulate(sorted.begin(), sorted.end(), 0.0);
  // m = number of saturated coordinates (the m largest).
  for (std::size_t m = 0; m < n; ++m) {
    const double beta = (target - static_cast<double>(m)) / suffix;
    if (beta > 0.0 && beta * sorted[m] <= 1.0 &&
        (m == 0 || beta * sorted[m - 1] >= 1.0)) {
      return beta;
    }
    suffix -= sorted[m];
  }
  // target == n: every coordinate saturates.
  return std::max(1.0, 1.0 / sorted.back());
}

}  // namespace detail

/// Euclidean projection onto K. For the sum-constrained bodies this is the
/// threshold form x_i = clamp(y_i - lambda, 0, 1) with lambda chosen so the
/// budget binds (lambda = 0 when the inequality budget is slack).
inline Vec project_euclidean(const ConstraintSet& K, std::span<const double> y) {
  if (static_cast<int>(y.size()) != K.n)
    throw InputError("project_euclidean: dimension mismatch");
  detail::require_finite(y, "project_euclidean");
  Vec x(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) x[i] = std::clamp(y[i], 0.0, 1.0);
  if (K.kind == BodyKind::Box) return x;
  if (K.kind == BodyKind::Cardinality && sum(x) <= K.k) return x;
  const double lambda = detail::clamp_threshold(y, K.k);
  for (std::size_t i = 0; i < y.size(); ++i) x[i] = std::clamp(y[i] - lambda, 0.0, 1.0);
  return x;
}

/// Generalized KL divergence sum_i [x_i log(x_i / y_i) - x_i + y_i] with the
/// convention 0 log 0 = 0. Requires y > 0 and x >= 0.
inline double kl_divergence(std::span<const double> x, std::span<const double> y) {
  assert(x.size() == y.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    assert(y[i] > 0.0 && x[i] >= 0.0);
    if (x[i] > 0.0) acc += x[i] * std::log(x[i] / y[i]) - x[i] + y[i];
    else acc += y[i];
  }
  return acc;
}

/// Bregman (KL) projection onto a sum-constrained body: minimizes
/// kl_divergence(x, y) over K. Without the [0,1] cap the minimizer on the
/// scaled simplex is k * y / sum(y); the cap is handled by saturating the
/// largest coordinates at 1 and rescaling the rest.
inline Vec project_kl(const ConstraintSet& K, std::span<const double> y) {
  if (static_cast<int>(y.size()) != K.n)
    throw InputError("project_kl: dimension mismatch");
  if (K.kind == BodyKind::Box)
    throw InputError("project_kl: defined for sum-constrained bodies only");
  detail::require_finite(y, "project_kl");
  for (double v : y)
    if (!(v > 0.0))
      throw InputError("project_kl: input must be strictly positive (pre-clamp)");
  Vec x(y.size());
  if (K.kind == BodyKind::Cardinality) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      x[i] = std::min(y[i], 1.0);
      s += x[i];
    }
    if (s <= K.k) return x;
  }
  const double beta = detail::scale_threshold(y, K.k);
  for (std::size_t i = 0; i < y.size(); ++i) x[i] = std::min(beta * y[i], 1.0);
  return x;
}

/// A maximizer of <g, v> over K. Cardinality bodies select the top positive
/// entries (at most k of them); the scaled simplex must spend the whole budget
/// and takes the top-k entries regardless of sign. Non-integral budgets place
/// the leftover mass on the next entry in sorted order. Ties break toward the
/// lower index.
inline Vec linear_maximize(const ConstraintSet& K, std::span<const double> g) {
  if (static_cast<int>(g.size()) != K.n)
    throw InputError("linear_maximize: dimension mismatch");
  detail::require_finite(g, "linear_maximize");
  Vec x(g.size(), 0.0);
  if (K.kind == BodyKind::Box) {
    for (std::size_t i = 0; i < g.size(); ++i) x[i] = g[i] > 0.0 ? 1.0 : 0.0;
    return x;
  }
  std::vector<int> order(g.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return g[static_cast<std::size_t>(a)] > g[static_cast<std::size_t>(b)];
  });
  const int whole = static_cast<int>(std::floor(K.k + 1e-12));
  const double frac = K.k - whole;
  int placed = 0;
  for (int idx : order) {
    const double gi = g[static_cast<std::size_t>(idx)];
    if (K.kind == BodyKind::Cardinality && gi <= 0.0) break;
    if (placed < whole) {
      x[static_cast<std::size_t>(idx)] = 1.0;
      ++placed;
    } else if (frac > 1e-12) {
      x[static_cast<std::size_t>(idx)] = frac;
      break;
    } else {
      break;
    }
  }
  return x;
}

/// Squared radius R^2 entering the step-size schedules: for the Euclidean map
/// half the largest squared distance across K (extreme points of the budgeted
/// bodies differ in at most 2k coordinates); for the entropy map the
/// k * log(n) potential range.
inline double diameter_squared(const ConstraintSet& K, const MirrorMap& map) {
  if (map.kind == MirrorMapKind::HalfSquaredEuclidean) {
    if (K.kind == BodyKind::Box) return 0.5 * K.n;
    return 0.5 * std::min(2.0 * K.k, static_cast<double>(K.n));
  }
  if (K.kind == BodyKind::Box)
    throw InputError("diameter_squared: entropy map needs a sum-constrained body");
  return K.k * std::log(static_cast<double>(K.n));
}

/// Bregman divergence D_Phi(x, y) of the given mirror map.
inline double bregman_divergence(const MirrorMap& map, std::span<const double> x,
                                 std::span<const double> y) {
  if (x.size() != y.size()) throw InputError("bregman_divergence: dimension mismatch");
  if (map.kind == MirrorMapKind::HalfSquaredEuclidean) {
    const double d = distance_l2(x, y);
    return 0.5 * d * d;
  }
  return map.k * kl_divergence(x, y);
}

/// argmin of the mirror potential over K; the theoretically mandated start of
/// mirror ascent. Uniform k/n for the entropy map (capped at 1/e when the
/// inequality budget leaves the unconstrained minimum reachable).
inline Vec mirror_start(const ConstraintSet& K, const MirrorMap& map) {
  if (map.kind == MirrorMapKind::HalfSquaredEuclidean) {
    return project_euclidean(K, Vec(static_cast<std::size_t>(K.n), 0.0));
  }
  if (K.kind == BodyKind::Box)
    throw InputError("mirror_start: entropy map needs a sum-constrained body");
  const double uniform = K.k / static_cast<double>(K.n);
  const double level =
      K.kind == BodyKind::Cardinality ? std::min(uniform, 1.0 / std::exp(1.0)) : uniform;
  return Vec(static_cast<std::size_t>(K.n), level);
}

/// Visits every vertex of K as a Subset (its indicator). Requires an integral
/// budget and a small enough n to enumerate.
template <class Fn>
void for_each_vertex(const ConstraintSet& K, Fn&& fn) {
  if (K.n > 25) throw CapabilityError("for_each_vertex: n too large to enumerate");
  const int whole = static_cast<int>(std::llround(K.k));
  if (K.kind != BodyKind::Box && std::abs(K.k - whole) > 1e-9)
    throw CapabilityError("for_each_vertex: non-integral budget has fractional vertices");
  const std::uint32_t limit = 1u << K.n;
  for (std::uint32_t m = 0; m < limit; ++m) {
    const int c = std::popcount(m);
    if (K.kind == BodyKind::Cardinality && c > whole) continue;
    if (K.kind == BodyKind::ScaledSimplex && c != whole) continue;
    fn(Subset::from_mask(K.n, m));
  }
}

}  // namespace submax
