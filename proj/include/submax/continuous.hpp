#pragma once

#include <limits>
#include <numeric>

#include "submax/multilinear.hpp"

namespace submax {

struct Smoothness {
  double value = 0.0;
  Norm norm = Norm::L2;
};

/// One stochastic gradient draw plus the value estimate that fell out of the
/// same samples.
struct GradDraw {
  Vec grad;
  double value_estimate = 0.0;
};

/// Value / gradient oracle bundle over [0,1]^n.
///
/// `value` and `grad_exact` may be empty when exact evaluation is intractable
/// (large n); `sample` must always be present and unbiased. All oracles are
/// pure given the Rng handle except for the shared evaluation counter, which
/// is atomic.
struct ContinuousObjective {
  int n = 0;
  std::function<double(std::span<const double>)> value;
  std::function<Vec(std::span<const double>)> grad_exact;
  std::function<GradDraw(std::span<const double>, Rng&)> sample;
  std::function<double(std::span<const double>, int, Rng&)> value_estimate;
  std::optional<double> sigma_bound;
  std::optional<Smoothness> smoothness;
  std::shared_ptr<EvalCounter> evals;

  bool has_exact_gradient() const { return static_cast<bool>(grad_exact); }
  bool has_exact_value() const { return static_cast<bool>(value); }

  Vec grad_sample(std::span<const double> x, Rng& rng) const {
    return sample(x, rng).grad;
  }

  std::uint64_t evaluations() const { return evals ? evals->get() : 0; }
};

/// F(x) = E_{i ~ weights}[F_i(x)] where F_i is the multilinear extension of
/// fs[i]. One stochastic draw picks a component and runs the shared-set
/// gradient estimator on it with `sets_per_draw` sampled sets.
///
/// Exact value/gradient oracles are attached when n permits enumeration;
/// they average the per-component extensions (cached tables for n <= 20).
inline ContinuousObjective stochastic_objective(std::vector<SetFunction> fs,
                                                Vec weights = {},
                                                int sets_per_draw = 1) {
  if (fs.empty()) throw InputError("stochastic_objective: no component functions");
  const int n = fs.front().n;
  for (const auto& f : fs)
    if (f.n != n) throw InputError("stochastic_objective: component dimension mismatch");
  if (weights.empty()) {
    weights.assign(fs.size(), 1.0 / static_cast<double>(fs.size()));
  } else {
    if (weights.size() != fs.size())
      throw InputError("stochastic_objective: weights size mismatch");
    double s = 0.0;
    for (double w : weights) {
      if (w < 0.0) throw InputError("stochastic_objective: negative weight");
      s += w;
    }
    if (std::abs(s - 1.0) > 1e-9)
      throw InputError("stochastic_objective: weights must sum to 1");
  }
  if (sets_per_draw < 1) throw InputError("stochastic_objective: sets_per_draw < 1");

  struct State {
    std::vector<SetFunction> fs;
    Vec weights;
    Vec cumulative;
    int sets_per_draw;
    std::shared_ptr<EvalCounter> counter;
    mutable std::vector<std::unique_ptr<MultilinearExtension>> extensions;

    const MultilinearExtension& extension(std::size_t i) const {
      if (extensions.empty()) extensions.resize(fs.size());
      if (!extensions[i])
        extensions[i] = std::make_unique<MultilinearExtension>(fs[i]);
      return *extensions[i];
    }

    std::size_t draw_component(Rng& rng) const {
      const double u = rng.uniform01();
      const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
      const std::size_t i = static_cast<std::size_t>(it - cumulative.begin());
      return std::min(i, fs.size() - 1);
    }
  };

  auto st = std::make_shared<State>();
  st->fs = std::move(fs);
  st->weights = std::move(weights);
  st->cumulative.resize(st->weights.size());
  std::partial_sum(st->weights.begin(), st->weights.end(), st->cumulative.begin());
  st->sets_per_draw = sets_per_draw;
  st->counter = std::make_shared<EvalCounter>();

  ContinuousObjective F;
  F.n = n;
  F.evals = st->counter;

  // Exact oracles cache one value table per component; keep the footprint
  // bounded (~128 MB of doubles) before offering them.
  const double table_doubles =
      static_cast<double>(st->fs.size()) *
      std::pow(2.0, std::min(n, kMultilinearTableMaxN));
  if (n <= kMultilinearExactMaxN && table_doubles <= 1.7e7) {
    F.value = [st](std::span<const double> x) {
      double acc = 0.0;
      for (std::size_t i = 0; i < st->fs.size(); ++i)
        acc += st->weights[i] * st->extension(i).value(x);
      return acc;
    };
    F.grad_exact = [st, n](std::span<const double> x) {
      Vec grad(static_cast<std::size_t>(n), 0.0);
      for (std::size_t i = 0; i < st->fs.size(); ++i) {
        const Vec gi = st->extension(i).gradient(x);
        for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += st->weights[i] * gi[j];
      }
      return grad;
    };
  }

  F.sample = [st](std::span<const double> x, Rng& rng) {
    const std::size_t i = st->draw_component(rng);
    GradValueEstimate est = multilinear_grad_value_estimate(
        st->fs[i], x, st->sets_per_draw, rng, st->counter.get());
    return GradDraw{std::move(est.grad), est.value};
  };

  F.value_estimate = [st](std::span<const double> x, int batch, Rng& rng) {
    if (batch < 1) throw InputError("value_estimate: batch < 1");
    double acc = 0.0;
    for (int b = 0; b < batch; ++b) {
      const std::size_t i = st->draw_component(rng);
      acc += multilinear_eval_sampled(st->fs[i], x, 1, rng, st->counter.get());
    }
    return acc / batch;
  };

  // The weighted mean of the component functions is itself a set function, so
  // the largest weighted singleton value bounds l1 smoothness of F.
  bool structured = true;
  for (const auto& f : st->fs) structured = structured && f.monotone && f.submodular;
  if (structured) {
    double m = 0.0;
    Subset s(n);
    for (int j = 0; j < n; ++j) {
      s.insert(j);
      double acc = 0.0;
      for (std::size_t i = 0; i < st->fs.size(); ++i)
        acc += st->weights[i] * st->fs[i].eval(s);
      s.erase(j);
      m = std::max(m, acc);
    }
    F.smoothness = Smoothness{m, Norm::L1};
  }
  return F;
}

/// Multilinear extension of a single set function as a ContinuousObjective.
inline ContinuousObjective multilinear_objective(SetFunction f, int sets_per_draw = 1) {
  std::vector<SetFunction> fs;
  fs.push_back(std::move(f));
  return stochastic_objective(std::move(fs), {}, sets_per_draw);
}

/// Finite-difference test that all second partials (cross and diagonal) of F
/// are non-positive at x, up to 1e-6 plus an O(h^2) discretization slack.
/// x must sit at least h away from the box boundary in every coordinate.
inline bool check_dr_crossderiv(const ContinuousObjective& F, std::span<const double> x,
                                double h) {
  if (!F.has_exact_value()) throw InputError("check_dr_crossderiv: no exact value oracle");
  if (static_cast<int>(x.size()) != F.n)
    throw InputError("check_dr_crossderiv: dimension mismatch");
  if (!(h > 0.0)) throw InputError("check_dr_crossderiv: h must be positive");
  for (double v : x)
    if (v < h || v > 1.0 - h)
      throw InputError("check_dr_crossderiv: point too close to the box boundary");

  const double tol = 1e-6 + h * h;
  Vec p(x.begin(), x.end());
  auto at = [&](int i, double di, int j, double dj) {
    p[static_cast<std::size_t>(i)] += di;
    p[static_cast<std::size_t>(j)] += dj;
    const double v = F.value(p);
    p[static_cast<std::size_t>(i)] -= di;
    p[static_cast<std::size_t>(j)] -= dj;
    return v;
  };
  for (int i = 0; i < F.n; ++i) {
    for (int j = i; j < F.n; ++j) {
      double second;
      if (i == j) {
        second = (at(i, h, i, 0.0) - 2.0 * F.value(p) + at(i, -h, i, 0.0)) / (h * h);
      } else {
        second = (at(i, h, j, h) - at(i, h, j, -h) - at(i, -h, j, h) +
                  at(i, -h, j, -h)) /
                 (4.0 * h * h);
      }
      if (second > tol) return false;
    }
  }
  return true;
}

/// Empirical weak-diminishing-returns ratio: the minimum over comparable pairs
/// x <= y and coordinates i of grad(x)_i / grad(y)_i, clamped into [0,1].
/// Always probes the extreme pair (0, 1) in addition to num_pairs random ones.
/// Coordinates with grad(y)_i <= 1e-12 are skipped.
inline double estimate_gamma(const ContinuousObjective& F, int num_pairs, Rng& rng) {
  if (!F.has_exact_gradient()) throw InputError("estimate_gamma: no exact gradient oracle");
  if (num_pairs < 0) throw InputError("estimate_gamma: negative num_pairs");
  const std::size_t n = static_cast<std::size_t>(F.n);
  double ratio = std::numeric_limits<double>::infinity();
  bool any = false;
  auto probe = [&](std::span<const double> lo, std::span<const double> hi) {
    const Vec glo = F.grad_exact(lo);
    const Vec ghi = F.grad_exact(hi);
    for (std::size_t i = 0; i < n; ++i) {
      if (ghi[i] <= 1e-12) continue;
      ratio = std::min(ratio, glo[i] / ghi[i]);
      any = true;
    }
  };
  probe(Vec(n, 0.0), Vec(n, 1.0));
  Vec lo(n), hi(n);
  for (int p = 0; p < num_pairs; ++p) {
    for (std::size_t i = 0; i < n; ++i) {
      const double a = rng.uniform01();
      const double b = rng.uniform01();
      lo[i] = std::min(a, b);
      hi[i] = std::max(a, b);
    }
    probe(lo, hi);
  }
  if (!any)
    throw std::runtime_error(
        "estimate_gamma: every sampled gradient coordinate was near zero");
  return std::clamp(ratio, 0.0, 1.0);
}

}  // namespace submax
