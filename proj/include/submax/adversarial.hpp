#pragma once

#include "submax/continuous.hpp"
#include "submax/geometry.hpp"

namespace submax {

/// Coverage family on 2k+1 elements whose multilinear extension has a
/// stationary local maximum worth k+1 while the best feasible point on the
/// scaled simplex {sum x = k} is worth 2k: projected ascent can get stuck at a
/// ratio of exactly 1/2 + 1/(2k).
///
/// Sets over the universe {0..2k}: S_i = {i, 2k} for i < k, S_i = {i} for
/// k <= i < 2k, and S_2k = {0..k-1, 2k}. The local maximum x_loc puts 1 on the
/// first k coordinates.
struct AppendixAInstance {
  int k = 0;
  SetFunction f;
  ConstraintSet K;
  Vec x_loc;
  /// Direct polynomial evaluator of the extension; agrees with enumeration.
  std::function<double(std::span<const double>)> closed_form_F;

  int dimension() const { return 2 * k + 1; }

  /// Exact maximum of the extension over K. The extension is convex along
  /// every e_i - e_j direction, so the maximum over the simplex slice is
  /// attained at a vertex and vertex enumeration is exhaustive.
  double opt_bruteforce() const {
    double best = 0.0;
    for_each_vertex(K, [&](const Subset& s) { best = std::max(best, f.eval(s)); });
    return best;
  }
};

inline AppendixAInstance appendix_a_instance(int k) {
  if (k < 1) throw InputError("appendix_a_instance: k must be >= 1");
  const int n = 2 * k + 1;
  std::vector<std::vector<int>> sets(static_cast<std::size_t>(n));
  for (int i = 0; i < k; ++i) sets[static_cast<std::size_t>(i)] = {i, 2 * k};
  for (int i = k; i < 2 * k; ++i) sets[static_cast<std::size_t>(i)] = {i};
  for (int i = 0; i < k; ++i) sets[static_cast<std::size_t>(2 * k)].push_back(i);
  sets[static_cast<std::size_t>(2 * k)].push_back(2 * k);

  AppendixAInstance inst;
  inst.k = k;
  inst.f = coverage_from_sets(sets, n);
  inst.K = ConstraintSet::scaled_simplex(n, static_cast<double>(k));
  inst.x_loc.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < k; ++i) inst.x_loc[static_cast<std::size_t>(i)] = 1.0;
  inst.closed_form_F = [k, n](std::span<const double> x) {
    if (static_cast<int>(x.size()) != n)
      throw InputError("closed_form_F: dimension mismatch");
    const double last = x[static_cast<std::size_t>(2 * k)];
    double prod = 1.0, head = 0.0, mid = 0.0;
    for (int i = 0; i < k; ++i) {
      prod *= 1.0 - x[static_cast<std::size_t>(i)];
      head += x[static_cast<std::size_t>(i)];
    }
    for (int i = k; i < 2 * k; ++i) mid += x[static_cast<std::size_t>(i)];
    return k + 1 - (1.0 - last) * prod - (1.0 - last) * (k - head) + mid;
  };
  return inst;
}

/// Family of n-1 linear objectives F_i(x) = x_i + x_n / 2 (1-based i < n)
/// averaged uniformly, maximized over {sum x <= 1}. A batch-size-1
/// conditional-gradient method always picks vertex e_i for the drawn i, never
/// touches coordinate n, and converges to x_infinity with
/// F(x_infinity) / F(x_star) = 2/(n-1); projected stochastic ascent still
/// drifts to x_star = e_n.
struct AppendixBInstance {
  int n = 0;
  ContinuousObjective F;
  ConstraintSet K;
  Vec x_star;
  Vec x_infinity;
  double failure_ratio = 0.0;  // 2 / (n-1)
  double opt = 0.5;            // F(x_star)
};

inline AppendixBInstance appendix_b_instance(int n) {
  if (n < 3) throw InputError("appendix_b_instance: n must be >= 3");
  AppendixBInstance inst;
  inst.n = n;
  inst.K = ConstraintSet::cardinality_polytope(n, 1.0);
  inst.x_star.assign(static_cast<std::size_t>(n), 0.0);
  inst.x_star.back() = 1.0;
  inst.x_infinity.assign(static_cast<std::size_t>(n), 1.0 / (n - 1));
  inst.x_infinity.back() = 0.0;
  inst.failure_ratio = 2.0 / (n - 1);

  // Mean gradient: 1/(n-1) on the first n-1 coordinates, 1/2 on the last.
  Vec mean_grad(static_cast<std::size_t>(n), 1.0 / (n - 1));
  mean_grad.back() = 0.5;
  auto c = std::make_shared<const Vec>(std::move(mean_grad));

  ContinuousObjective F;
  F.n = n;
  F.value = [c](std::span<const double> x) { return dot(*c, x); };
  F.grad_exact = [c](std::span<const double>) { return *c; };
  F.sample = [n](std::span<const double> x, Rng& rng) {
    const int i = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n - 1)));
    GradDraw d;
    d.grad.assign(static_cast<std::size_t>(n), 0.0);
    d.grad[static_cast<std::size_t>(i)] = 1.0;
    d.grad.back() = 0.5;
    d.value_estimate = x[static_cast<std::size_t>(i)] + 0.5 * x.back();
    return d;
  };
  F.value_estimate = [n](std::span<const double> x, int batch, Rng& rng) {
    double acc = 0.0;
    for (int b = 0; b < batch; ++b) {
      const int i = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n - 1)));
      acc += x[static_cast<std::size_t>(i)] + 0.5 * x.back();
    }
    return acc / batch;
  };
  // E || grad_i - mean ||_2^2 = (n-2)/(n-1), exactly.
  F.sigma_bound = (n - 2.0) / (n - 1.0);
  F.smoothness = Smoothness{0.0, Norm::L2};
  inst.F = std::move(F);
  return inst;
}

}  // namespace submax
