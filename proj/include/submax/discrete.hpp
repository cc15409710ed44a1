#pragma once

#include <limits>
#include <numeric>

#include "submax/multilinear.hpp"

namespace submax {

/// Mean of a sampled batch of set functions, f_hat(S) = (1/B) sum_j f_j(S),
/// with an evaluation counter: every f_hat query costs B single-function
/// computations.
class EmpiricalSetObjective {
 public:
  explicit EmpiricalSetObjective(std::vector<SetFunction> components)
      : components_(std::move(components)), counter_(std::make_shared<EvalCounter>()) {
    if (components_.empty())
      throw InputError("EmpiricalSetObjective: no component functions");
    n = components_.front().n;
    monotone = true;
    submodular = true;
    for (const auto& f : components_) {
      if (f.n != n) throw InputError("EmpiricalSetObjective: dimension mismatch");
      monotone = monotone && f.monotone;
      submodular = submodular && f.submodular;
    }
  }

  /// Draws B components with replacement (uniform by default).
  static EmpiricalSetObjective sample(const std::vector<SetFunction>& pool, int batch,
                                      Rng& rng, std::span<const double> weights = {}) {
    if (pool.empty()) throw InputError("EmpiricalSetObjective: empty pool");
    if (batch < 1) throw InputError("EmpiricalSetObjective: batch < 1");
    std::vector<SetFunction> picked;
    picked.reserve(static_cast<std::size_t>(batch));
    if (weights.empty()) {
      for (int b = 0; b < batch; ++b)
        picked.push_back(pool[rng.uniform_int(pool.size())]);
    } else {
      if (weights.size() != pool.size())
        throw InputError("EmpiricalSetObjective: weights size mismatch");
      Vec cumulative(weights.size());
      std::partial_sum(weights.begin(), weights.end(), cumulative.begin());
      const double total = cumulative.back();
      if (!(total > 0.0)) throw InputError("EmpiricalSetObjective: weights sum to zero");
      for (int b = 0; b < batch; ++b) {
        const double u = rng.uniform01() * total;
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        picked.push_back(pool[std::min(static_cast<std::size_t>(it - cumulative.begin()),
                                       pool.size() - 1)]);
      }
    }
    return EmpiricalSetObjective(std::move(picked));
  }

  int n = 0;
  bool monotone = false;
  bool submodular = false;

  double eval(const Subset& s) const {
    double acc = 0.0;
    for (const auto& f : components_) acc += f.eval(s);
    counter_->add(components_.size());
    return acc / static_cast<double>(components_.size());
  }

  int batch() const { return static_cast<int>(components_.size()); }
  std::uint64_t single_evaluations() const { return counter_->get(); }

 private:
  std::vector<SetFunction> components_;
  std::shared_ptr<EvalCounter> counter_;
};

/// Forward greedy under a cardinality budget: k rounds, each adding the
/// element with the largest marginal gain, ties toward the lower index.
/// Always returns |S| = k. The round-r scan costs n - r + 1 objective
/// evaluations and the running value is carried over, never re-evaluated, so
/// an empirical objective reports exactly B * (n + (n-1) + ... + (n-k+1))
/// single-function computations.
template <class Objective>
Subset greedy(const Objective& f, int k) {
  if (k < 0 || k > f.n) throw InputError("greedy: budget outside [0, n]");
  Subset s(f.n);
  for (int round = 0; round < k; ++round) {
    int best_e = -1;
    double best = -std::numeric_limits<double>::infinity();
    for (int e = 0; e < f.n; ++e) {
      if (s.contains(e)) continue;
      s.insert(e);
      const double v = f.eval(s);
      s.erase(e);
      if (v > best) {
        best = v;
        best_e = e;
      }
    }
    s.insert(best_e);
  }
  return s;
}

/// Randomized pipage rounding of a fractional point with integral coordinate
/// sum onto a size-k set. Each round takes the two lowest-indexed fractional
/// coordinates (i, j) and moves mass along e_i - e_j: by +min(1-x_i, x_j) or
/// -min(x_i, 1-x_j), with probabilities chosen so every coordinate's
/// expectation is preserved. At least one coordinate becomes integral per
/// round, the sum never changes, and no set-function values are consulted.
inline Subset pipage_round(std::span<const double> x, Rng& rng) {
  const std::size_t n = x.size();
  if (n == 0) throw InputError("pipage_round: empty point");
  if (!in_unit_box(x)) throw InputError("pipage_round: point outside [0,1]^n");
  const double total = sum(x);
  const long long k = std::llround(total);
  if (std::abs(total - static_cast<double>(k)) > 1e-9)
    throw InputError("pipage_round: coordinate sum must be integral");
  Vec v(x.begin(), x.end());
  auto fractional = [&](std::size_t i) {
    return std::min(v[i], 1.0 - v[i]) > 1e-9;
  };
  std::size_t scan = 0;
  for (;;) {
    while (scan < n && !fractional(scan)) ++scan;
    if (scan >= n) break;
    std::size_t j = scan + 1;
    while (j < n && !fractional(j)) ++j;
    if (j >= n) {
      // Tolerance residue: a lone near-integral coordinate. Snap it.
      v[scan] = std::round(v[scan]);
      break;
    }
    const std::size_t i = scan;
    const double up = std::min(1.0 - v[i], v[j]);    // move +up along e_i - e_j
    const double down = std::min(v[i], 1.0 - v[j]);  // or -down
    if (rng.uniform01() < down / (up + down)) {
      if (1.0 - v[i] <= v[j]) {
        v[j] -= 1.0 - v[i];
        v[i] = 1.0;
      } else {
        v[i] += v[j];
        v[j] = 0.0;
      }
    } else {
      if (v[i] <= 1.0 - v[j]) {
        v[j] += v[i];
        v[i] = 0.0;
      } else {
        v[i] -= 1.0 - v[j];
        v[j] = 1.0;
      }
    }
  }
  Subset out(static_cast<int>(n));
  for (std::size_t i = 0; i < n; ++i)
    if (v[i] >= 0.5) out.insert(static_cast<int>(i));
  return out;
}

/// Rounds a point of the inequality polytope {sum x <= k} to a size-k set:
/// first pads the coordinate sum up to k by raising coordinates toward 1 in
/// index order (a monotone objective cannot lose value), then pipage-rounds.
inline Subset lift_and_round(const SetFunction& f, std::span<const double> x, int k,
                             Rng& rng) {
  if (f.n != static_cast<int>(x.size()))
    throw InputError("lift_and_round: dimension mismatch");
  if (k < 0 || k > f.n) throw InputError("lift_and_round: budget outside [0, n]");
  if (!in_unit_box(x)) throw InputError("lift_and_round: point outside [0,1]^n");
  Vec v(x.begin(), x.end());
  double deficit = static_cast<double>(k) - sum(v);
  if (deficit < -1e-9) throw InputError("lift_and_round: coordinate sum exceeds k");
  for (std::size_t i = 0; i < v.size() && deficit > 1e-12; ++i) {
    const double room = 1.0 - v[i];
    if (room <= 0.0) continue;
    if (room <= deficit) {
      v[i] = 1.0;
      deficit -= room;
    } else {
      v[i] += deficit;
      deficit = 0.0;
    }
  }
  return pipage_round(v, rng);
}

}  // namespace submax
