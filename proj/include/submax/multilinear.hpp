#pragma once

#include <atomic>
#include <optional>

#include "submax/set_function.hpp"

namespace submax {

/// Counts single set-function evaluations performed by sampling oracles.
struct EvalCounter {
  std::atomic<std::uint64_t> count{0};
  void add(std::uint64_t k) { count.fetch_add(k, std::memory_order_relaxed); }
  std::uint64_t get() const { return count.load(std::memory_order_relaxed); }
};

inline constexpr int kMultilinearTableMaxN = 20;
inline constexpr int kMultilinearExactMaxN = 25;

namespace detail {

inline void require_exact_tractable(int n, const char* op) {
  if (n > kMultilinearExactMaxN)
    throw CapabilityError(std::string(op) +
                          ": exact enumeration capped at n = 25; use "
                          "multilinear_eval_sampled / multilinear_grad_estimate");
}

inline void require_point(int n, std::span<const double> x, const char* op) {
  if (static_cast<int>(x.size()) != n)
    throw InputError(std::string(op) + ": point dimension mismatch");
  if (!in_unit_box(x))
    throw InputError(std::string(op) + ": point outside [0,1]^n");
}

}  // namespace detail

/// Multilinear extension F(x) = sum_S f(S) prod_{i in S} x_i prod_{j not in S}
/// (1-x_j) of a set function, with exact value and gradient oracles.
///
/// For n <= 20 the 2^n function values are cached once and every query runs in
/// O(2^n) arithmetic via coordinate contraction. For 21 <= n <= 25 queries
/// enumerate on the fly (2^n evaluations per call); beyond 25 exact queries
/// throw CapabilityError.
class MultilinearExtension {
 public:
  explicit MultilinearExtension(SetFunction f) : f_(std::move(f)), n_(f_.n) {
    if (n_ <= 0) throw InputError("MultilinearExtension: empty ground set");
  }

  int dimension() const { return n_; }
  const SetFunction& set_function() const { return f_; }

  double value(std::span<const double> x) const {
    detail::require_exact_tractable(n_, "multilinear_eval_exact");
    detail::require_point(n_, x, "multilinear_eval_exact");
    if (n_ <= kMultilinearTableMaxN) {
      ensure_table();
      Vec buf = table_;
      std::size_t len = buf.size();
      for (int d = 0; d < n_; ++d) {
        const double xd = x[static_cast<std::size_t>(d)];
        len >>= 1;
        for (std::size_t m = 0; m < len; ++m)
          buf[m] = (1.0 - xd) * buf[2 * m] + xd * buf[2 * m + 1];
      }
      return buf[0];
    }
    Subset s(n_);
    return value_rec(n_ - 1, s, x);
  }

  Vec gradient(std::span<const double> x) const {
    detail::require_exact_tractable(n_, "multilinear_grad_exact");
    detail::require_point(n_, x, "multilinear_grad_exact");
    Vec grad(static_cast<std::size_t>(n_), 0.0);
    if (n_ <= kMultilinearTableMaxN) {
      ensure_table();
      // buf holds the table with coordinates above c already contracted;
      // before contracting c, fold coordinates below c into a scratch copy to
      // expose the two-point section along c.
      Vec buf = table_;
      Vec scratch(table_.size());
      for (int c = n_ - 1; c >= 0; --c) {
        const std::size_t half = std::size_t{1} << c;
        std::copy(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(half << 1),
                  scratch.begin());
        std::size_t len = half << 1;
        for (int d = 0; d < c; ++d) {
          const double xd = x[static_cast<std::size_t>(d)];
          len >>= 1;
          for (std::size_t m = 0; m < len; ++m)
            scratch[m] = (1.0 - xd) * scratch[2 * m] + xd * scratch[2 * m + 1];
        }
        grad[static_cast<std::size_t>(c)] = scratch[1] - scratch[0];
        const double xc = x[static_cast<std::size_t>(c)];
        for (std::size_t m = 0; m < half; ++m)
          buf[m] = (1.0 - xc) * buf[m] + xc * buf[m + half];
      }
      return grad;
    }
    std::vector<Vec> lo(static_cast<std::size_t>(n_)), hi(static_cast<std::size_t>(n_));
    for (int c = 0; c < n_; ++c) {
      lo[static_cast<std::size_t>(c)].resize(static_cast<std::size_t>(n_));
      hi[static_cast<std::size_t>(c)].resize(static_cast<std::size_t>(n_));
    }
    Subset s(n_);
    value_grad_rec(n_ - 1, s, x, grad.data(), lo, hi);
    return grad;
  }

 private:
  void ensure_table() const {
    if (!table_.empty()) return;
    const std::size_t size = std::size_t{1} << n_;
    Vec table(size);
    Subset s(n_);
    for (std::size_t m = 0; m < size; ++m) {
      // Gray-code walk: exactly one membership toggle per step.
      if (m) s.toggle(std::countr_zero(m));
      table[m ^ (m >> 1)] = f_.eval(s);
    }
    table_ = std::move(table);
  }

  double value_rec(int c, Subset& s, std::span<const double> x) const {
    if (c < 0) return f_.eval(s);
    const double v0 = value_rec(c - 1, s, x);
    s.insert(c);
    const double v1 = value_rec(c - 1, s, x);
    s.erase(c);
    const double xc = x[static_cast<std::size_t>(c)];
    return (1.0 - xc) * v0 + xc * v1;
  }

  double value_grad_rec(int c, Subset& s, std::span<const double> x, double* grad,
                        std::vector<Vec>& lo, std::vector<Vec>& hi) const {
    if (c < 0) return f_.eval(s);
    double* g0 = lo[static_cast<std::size_t>(c)].data();
    double* g1 = hi[static_cast<std::size_t>(c)].data();
    const double v0 = value_grad_rec(c - 1, s, x, g0, lo, hi);
    s.insert(c);
    const double v1 = value_grad_rec(c - 1, s, x, g1, lo, hi);
    s.erase(c);
    const double xc = x[static_cast<std::size_t>(c)];
    for (int j = 0; j < c; ++j) grad[j] = (1.0 - xc) * g0[j] + xc * g1[j];
    grad[c] = v1 - v0;
    return (1.0 - xc) * v0 + xc * v1;
  }

  SetFunction f_;
  int n_;
  mutable Vec table_;
};

/// One-shot exact extension value. Builds no persistent cache; use
/// MultilinearExtension for repeated queries against the same function.
inline double multilinear_eval_exact(const SetFunction& f, std::span<const double> x) {
  return MultilinearExtension(f).value(x);
}

/// One-shot exact extension gradient; component i is F(x; x_i<-1) - F(x; x_i<-0).
inline Vec multilinear_grad_exact(const SetFunction& f, std::span<const double> x) {
  return MultilinearExtension(f).gradient(x);
}

/// Mean of f over `batch` sets sampled with independent inclusion
/// probabilities x_i. Unbiased for the exact extension value.
inline double multilinear_eval_sampled(const SetFunction& f, std::span<const double> x,
                                       int batch, Rng& rng,
                                       EvalCounter* counter = nullptr) {
  detail::require_point(f.n, x, "multilinear_eval_sampled");
  if (batch < 1) throw InputError("multilinear_eval_sampled: batch < 1");
  double acc = 0.0;
  Subset s(f.n);
  for (int b = 0; b < batch; ++b) {
    s.clear();
    for (int i = 0; i < f.n; ++i)
      if (rng.uniform01() < x[static_cast<std::size_t>(i)]) s.insert(i);
    acc += f.eval(s);
  }
  if (counter) counter->add(static_cast<std::uint64_t>(batch));
  return acc / batch;
}

struct GradValueEstimate {
  Vec grad;
  double value = 0.0;
};

/// Sampled extension gradient plus a value estimate from the same draws.
///
/// Each draw samples one set S with inclusion probabilities x and reuses it
/// for every coordinate: component i accumulates f(S | {i}) - f(S \ {i}),
/// i.e. n + 1 evaluations of f per draw. Averaging the draws gives an
/// unbiased estimate of the exact gradient; the mean of the f(S) values is an
/// unbiased estimate of F(x).
inline GradValueEstimate multilinear_grad_value_estimate(const SetFunction& f,
                                                         std::span<const double> x,
                                                         int batch, Rng& rng,
                                                         EvalCounter* counter = nullptr) {
  detail::require_point(f.n, x, "multilinear_grad_estimate");
  if (batch < 1) throw InputError("multilinear_grad_estimate: batch < 1");
  const int n = f.n;
  GradValueEstimate out;
  out.grad.assign(static_cast<std::size_t>(n), 0.0);
  Subset s(n);
  for (int b = 0; b < batch; ++b) {
    s.clear();
    for (int i = 0; i < n; ++i)
      if (rng.uniform01() < x[static_cast<std::size_t>(i)]) s.insert(i);
    const double base = f.eval(s);
    out.value += base;
    for (int i = 0; i < n; ++i) {
      if (s.contains(i)) {
        s.erase(i);
        out.grad[static_cast<std::size_t>(i)] += base - f.eval(s);
        s.insert(i);
      } else {
        s.insert(i);
        out.grad[static_cast<std::size_t>(i)] += f.eval(s) - base;
        s.erase(i);
      }
    }
  }
  if (counter) counter->add(static_cast<std::uint64_t>(batch) * (n + 1));
  const double inv = 1.0 / batch;
  for (double& g : out.grad) g *= inv;
  out.value *= inv;
  return out;
}

/// Sampled extension gradient (value estimate discarded).
inline Vec multilinear_grad_estimate(const SetFunction& f, std::span<const double> x,
                                     int batch, Rng& rng,
                                     EvalCounter* counter = nullptr) {
  return multilinear_grad_value_estimate(f, x, batch, rng, counter).grad;
}

}  // namespace submax
