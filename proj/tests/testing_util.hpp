#pragma once

// Shared helpers for the test suites: seeded instance generators and
// implementation-independent oracles (finite differences, exhaustive vertex
// search, grid competitors).

#include <functional>

#include "submax/submax.hpp"

namespace testutil {

using namespace submax;

/// Random coverage function: n sets over a universe of the given size, each
/// element joining each set independently. Monotone submodular by
/// construction.
inline SetFunction random_coverage(int n, int universe, Rng& rng, double density = 0.35) {
  std::vector<std::vector<int>> sets(static_cast<std::size_t>(n));
  for (auto& set : sets) {
    for (int e = 0; e < universe; ++e)
      if (rng.bernoulli(density)) set.push_back(e);
    if (set.empty()) set.push_back(static_cast<int>(rng.uniform_int(universe)));
  }
  return coverage_from_sets(sets, universe);
}

/// Random small ratings matrix with all entries drawn independently.
inline RatingsMatrix random_ratings(int users, int items, Rng& rng, double density = 0.6,
                                    double rmax = 5.0) {
  RatingsMatrix R;
  R.n_users = users;
  R.n_items = items;
  R.rows.assign(static_cast<std::size_t>(users), {});
  for (int u = 0; u < users; ++u)
    for (int i = 0; i < items; ++i)
      if (rng.bernoulli(density)) {
        const double r = 1.0 + rng.uniform01() * (rmax - 1.0);
        R.rows[static_cast<std::size_t>(u)].emplace_back(i, r);
        R.max_rating = std::max(R.max_rating, r);
      }
  return R;
}

/// Rotates through coverage / facility-location / concave-over-modular
/// instances, all monotone submodular.
inline SetFunction random_monotone_submodular(int n, Rng& rng) {
  switch (rng.uniform_int(3)) {
    case 0: return random_coverage(n, n + static_cast<int>(rng.uniform_int(n + 1)), rng);
    case 1: return facility_location(random_ratings(3 + static_cast<int>(rng.uniform_int(4)), n, rng));
    default:
      return concave_over_modular(random_ratings(3 + static_cast<int>(rng.uniform_int(4)), n, rng), 0.5);
  }
}

/// Central finite differences of a value oracle; independent of the
/// closed-form gradient path. The extension is affine per coordinate, so the
/// differences are exact up to rounding.
inline Vec finite_difference_gradient(const std::function<double(std::span<const double>)>& value,
                                      std::span<const double> x, double h = 1e-4) {
  Vec grad(x.size());
  Vec p(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lo = std::max(0.0, x[i] - h);
    const double hi = std::min(1.0, x[i] + h);
    p[i] = hi;
    const double vhi = value(p);
    p[i] = lo;
    const double vlo = value(p);
    p[i] = x[i];
    grad[i] = (vhi - vlo) / (hi - lo);
  }
  return grad;
}

/// Max of f over subsets of size at most (or exactly) k, by exhaustive search.
inline double bruteforce_discrete_opt(const SetFunction& f, int k, bool exact_size = false) {
  double best = 0.0;
  const std::uint32_t limit = 1u << f.n;
  for (std::uint32_t m = 0; m < limit; ++m) {
    const int c = std::popcount(m);
    if (exact_size ? c != k : c > k) continue;
    best = std::max(best, f.eval(Subset::from_mask(f.n, m)));
  }
  return best;
}

/// Random point of K: a convex combination of random vertices (independent of
/// the projection code under test). Requires an integral budget.
inline Vec random_feasible_point(const ConstraintSet& K, Rng& rng, int mixture = 4) {
  std::vector<Vec> verts;
  const int kk = static_cast<int>(std::llround(K.k));
  for (int v = 0; v < mixture; ++v) {
    Subset s(K.n);
    std::vector<int> order(static_cast<std::size_t>(K.n));
    std::iota(order.begin(), order.end(), 0);
    // Fisher-Yates prefix as a random k-subset.
    for (int i = 0; i < kk; ++i) {
      const int j = i + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(K.n - i)));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
      s.insert(order[static_cast<std::size_t>(i)]);
    }
    if (K.kind == BodyKind::Cardinality || K.kind == BodyKind::Box) {
      // Drop members at random so inequality bodies get interior points too.
      Subset t(K.n);
      s.for_each([&](int i) {
        if (rng.bernoulli(0.7)) t.insert(i);
      });
      s = t;
    }
    verts.push_back(s.indicator());
  }
  Vec lambda(verts.size());
  double total = 0.0;
  for (double& l : lambda) {
    l = rng.uniform01() + 1e-3;
    total += l;
  }
  Vec x(static_cast<std::size_t>(K.n), 0.0);
  for (std::size_t v = 0; v < verts.size(); ++v)
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += lambda[v] / total * verts[v][i];
  return x;
}

/// Mean and standard error of a sample.
struct MeanSE {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSE mean_se(std::span<const double> xs) {
  MeanSE out;
  for (double v : xs) out.mean += v;
  out.mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double v : xs) var += (v - out.mean) * (v - out.mean);
  if (xs.size() > 1) var /= static_cast<double>(xs.size() - 1);
  out.se = std::sqrt(var / static_cast<double>(xs.size()));
  return out;
}

}  // namespace testutil
