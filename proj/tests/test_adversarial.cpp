#include <catch2/catch_amalgamated.hpp>

#include "testing_util.hpp"

using namespace submax;
using Catch::Matchers::WithinAbs;

namespace {

/// Perturbation of x_loc inside the simplex: the first k coordinates drop by
/// eps_i, the rest rise by matching amounts, all within [0, eps].
Vec perturb_x_loc(const AppendixAInstance& inst, double eps, Rng& rng) {
  const int k = inst.k;
  Vec drop(static_cast<std::size_t>(k)), rise(static_cast<std::size_t>(k + 1));
  double sum_drop = 0.0, sum_rise = 0.0;
  for (double& v : drop) {
    v = rng.uniform01() * eps;
    sum_drop += v;
  }
  for (double& v : rise) {
    v = rng.uniform01() * eps;
    sum_rise += v;
  }
  if (sum_drop > sum_rise && sum_drop > 0.0) {
    for (double& v : drop) v *= sum_rise / sum_drop;
  } else if (sum_rise > 0.0) {
    for (double& v : rise) v *= sum_drop / sum_rise;
  }
  Vec y = inst.x_loc;
  for (int i = 0; i < k; ++i) y[static_cast<std::size_t>(i)] -= drop[static_cast<std::size_t>(i)];
  for (int j = 0; j <= k; ++j)
    y[static_cast<std::size_t>(k + j)] += rise[static_cast<std::size_t>(j)];
  return y;
}

}  // namespace

TEST_CASE("coverage family construction") {
  const AppendixAInstance inst = appendix_a_instance(2);
  CHECK(inst.dimension() == 5);
  CHECK(inst.f.n == 5);
  CHECK(inst.K.kind == BodyKind::ScaledSimplex);
  CHECK(inst.K.k == 2.0);
  CHECK(inst.x_loc == Vec{1.0, 1.0, 0.0, 0.0, 0.0});
  // Set contents: f({1}) = |{1,5}| = 2, f({5}) = |{1,2,5}| = 3, f(V) = 5.
  CHECK(inst.f.eval(Subset::from_indices(5, {0})) == 2.0);
  CHECK(inst.f.eval(Subset::from_indices(5, {4})) == 3.0);
  CHECK(inst.f.eval(Subset::full(5)) == 5.0);
  CHECK(check_submodular_bruteforce(inst.f, true));
  CHECK_THROWS_AS(appendix_a_instance(0), InputError);
}

TEST_CASE("closed form agrees with enumeration") {
  Rng rng(0xc10c);
  for (int k : {1, 2, 3}) {
    const AppendixAInstance inst = appendix_a_instance(k);
    const MultilinearExtension ext(inst.f);
    const int n = inst.dimension();
    for (int trial = 0; trial < 25; ++trial) {
      Vec x(static_cast<std::size_t>(n));
      for (double& v : x) v = rng.uniform01();
      CHECK_THAT(inst.closed_form_F(x), WithinAbs(ext.value(x), 1e-9));
    }
  }
}

TEST_CASE("local maximum value, gradient and stationarity") {
  for (int k : {1, 2, 5}) {
    const AppendixAInstance inst = appendix_a_instance(k);
    const ContinuousObjective F = multilinear_objective(inst.f);
    CHECK_THAT(F.value(inst.x_loc), WithinAbs(k + 1.0, 1e-12));
    const Vec g = F.grad_exact(inst.x_loc);
    if (k >= 2) {
      // k = 1 is degenerate: the head coordinate doubles up because its set
      // coincides with the last one; the point is still stationary.
      for (int i = 0; i < 2 * k; ++i)
        CHECK_THAT(g[static_cast<std::size_t>(i)], WithinAbs(1.0, 1e-12));
    }
    CHECK_THAT(g[static_cast<std::size_t>(2 * k)], WithinAbs(0.0, 1e-12));
    CHECK(std::abs(stationarity_gap(inst.K, inst.x_loc, g)) <= 1e-9);
  }
}

TEST_CASE("brute-force optimum and the stuck ratio") {
  for (int k : {1, 2, 3, 5}) {
    const AppendixAInstance inst = appendix_a_instance(k);
    const double opt = inst.opt_bruteforce();
    CHECK_THAT(opt, WithinAbs(2.0 * k, 1e-12));
    CHECK_THAT((k + 1.0) / opt, WithinAbs(0.5 + 0.5 / k, 1e-9));
  }
}

TEST_CASE("no grid point on the simplex beats the vertex optimum (k=2)") {
  const AppendixAInstance inst = appendix_a_instance(2);
  const double opt = inst.opt_bruteforce();
  // All multiples of 0.05 in [0,1]^5 summing to 2.
  const int steps = 20, total = 2 * steps;
  double best = 0.0;
  Vec x(5);
  for (int a = 0; a <= steps; ++a)
    for (int b = 0; b <= steps; ++b)
      for (int c = 0; c <= steps; ++c)
        for (int d = 0; d <= steps; ++d) {
          const int e = total - a - b - c - d;
          if (e < 0 || e > steps) continue;
          x[0] = a / double(steps);
          x[1] = b / double(steps);
          x[2] = c / double(steps);
          x[3] = d / double(steps);
          x[4] = e / double(steps);
          best = std::max(best, inst.closed_form_F(x));
        }
  CHECK(best <= opt + 1e-9);
  CHECK_THAT(best, WithinAbs(opt, 1e-9));  // the grid contains the best vertices
}

TEST_CASE("x_loc is a local maximum over the perturbation family") {
  Rng rng(0x70c4);
  for (int k : {2, 5}) {
    const AppendixAInstance inst = appendix_a_instance(k);
    const double eps = std::min(0.5 / k, 0.1);
    const double f_loc = inst.closed_form_F(inst.x_loc);
    for (int trial = 0; trial < 1000; ++trial) {
      const Vec y = perturb_x_loc(inst, eps, rng);
      REQUIRE(inst.K.contains(y));
      CHECK(inst.closed_form_F(y) <= f_loc + 1e-9);
    }
  }
}

TEST_CASE("linear family construction") {
  const AppendixBInstance inst = appendix_b_instance(5);
  CHECK(inst.n == 5);
  CHECK(inst.K.kind == BodyKind::Cardinality);
  CHECK(inst.K.k == 1.0);
  CHECK(inst.F.value(inst.x_star) == 0.5);
  CHECK_THAT(inst.F.value(inst.x_infinity), WithinAbs(0.25, 1e-12));
  CHECK_THAT(inst.failure_ratio, WithinAbs(0.5, 1e-12));

  const Vec g = inst.F.grad_exact(Vec(5, 0.0));
  for (int i = 0; i < 4; ++i)
    CHECK_THAT(g[static_cast<std::size_t>(i)], WithinAbs(0.25, 1e-12));
  CHECK_THAT(g[4], WithinAbs(0.5, 1e-12));

  CHECK_THAT(appendix_b_instance(3).failure_ratio, WithinAbs(1.0, 1e-12));
  CHECK_THROWS_AS(appendix_b_instance(2), InputError);
}

TEST_CASE("linear family sampling is unbiased with the stated variance") {
  const AppendixBInstance inst = appendix_b_instance(7);
  Rng rng(0xb0b0);
  const Vec x(7, 0.1);
  Vec mean(7, 0.0);
  const int draws = 40000;
  double sq = 0.0;
  const Vec exact = inst.F.grad_exact(x);
  for (int d = 0; d < draws; ++d) {
    const Vec g = inst.F.grad_sample(x, rng);
    Vec dev(7);
    for (std::size_t i = 0; i < 7; ++i) {
      mean[i] += g[i];
      dev[i] = g[i] - exact[i];
    }
    sq += dot(dev, dev);
  }
  for (std::size_t i = 0; i < 7; ++i) CHECK_THAT(mean[i] / draws, WithinAbs(exact[i], 0.01));
  CHECK_THAT(sq / draws, WithinAbs(*inst.F.sigma_bound, 0.02));
}

TEST_CASE("projected stochastic ascent beats the conditional-gradient stall") {
  const AppendixBInstance inst = appendix_b_instance(11);
  const ConstraintSet& K = inst.K;
  std::vector<double> sga_ratios, fw_ratios;
  for (int seed = 0; seed < 6; ++seed) {
    Rng rng(mix_seed(0xd1ce, static_cast<std::uint64_t>(seed)));
    const Vec x1(11, 1.0 / 11.0);
    const StepSchedule sched = StepSchedule::theoretical(
        0.0, std::sqrt(*inst.F.sigma_bound), std::sqrt(diameter_squared(
                                                 K, MirrorMap::half_squared_euclidean())));
    const Trajectory t1 = sga(inst.F, K, 2000, sched, x1, rng, {});
    sga_ratios.push_back(inst.F.value(t1.last()) / inst.opt);
    Rng rng2(mix_seed(0xd1cf, static_cast<std::uint64_t>(seed)));
    const Trajectory t2 = frank_wolfe(inst.F, K, 2000, rng2, {});
    fw_ratios.push_back(inst.F.value(t2.last()) / inst.opt);
  }
  for (double r : fw_ratios) CHECK_THAT(r, WithinAbs(inst.failure_ratio, 0.02));
  for (double r : sga_ratios) CHECK(r >= 0.48);
}
