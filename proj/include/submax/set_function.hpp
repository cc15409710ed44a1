#pragma once

#include <algorithm>
#include <bit>
#include <functional>
#include <memory>
#include <utility>

#include "submax/common.hpp"

namespace submax {

/// Subset of a ground set {0..n-1}, stored as a packed bitmask.
class Subset {
 public:
  Subset() = default;
  explicit Subset(int n) : n_(n), words_((n + 63) / 64, 0) { assert(n >= 0); }

  static Subset from_mask(int n, std::uint64_t mask) {
    assert(n <= 64);
    Subset s(n);
    if (!s.words_.empty()) s.words_[0] = mask;
    return s;
  }

  static Subset from_indices(int n, std::span<const int> indices) {
    Subset s(n);
    for (int i : indices) s.insert(i);
    return s;
  }

  static Subset from_indices(int n, std::initializer_list<int> indices) {
    return from_indices(n, std::span<const int>(indices.begin(), indices.size()));
  }

  static Subset full(int n) {
    Subset s(n);
    for (int i = 0; i < n; ++i) s.insert(i);
    return s;
  }

  int ground_size() const { return n_; }

  bool contains(int i) const {
    assert(i >= 0 && i < n_);
    return (words_[static_cast<std::size_t>(i) >> 6] >> (i & 63)) & 1ULL;
  }

  void insert(int i) {
    assert(i >= 0 && i < n_);
    words_[static_cast<std::size_t>(i) >> 6] |= 1ULL << (i & 63);
  }

  void erase(int i) {
    assert(i >= 0 && i < n_);
    words_[static_cast<std::size_t>(i) >> 6] &= ~(1ULL << (i & 63));
  }

  void toggle(int i) {
    assert(i >= 0 && i < n_);
    words_[static_cast<std::size_t>(i) >> 6] ^= 1ULL << (i & 63);
  }

  void clear() { std::fill(words_.begin(), words_.end(), 0); }

  int size() const {
    int c = 0;
    for (std::uint64_t w : words_) c += std::popcount(w);
    return c;
  }

  bool empty() const {
    for (std::uint64_t w : words_)
      if (w) return false;
    return true;
  }

  template <class Fn>
  void for_each(Fn&& fn) const {
    for (std::size_t wi = 0; wi < words_.size(); ++wi) {
      std::uint64_t w = words_[wi];
      while (w) {
        const int bit = std::countr_zero(w);
        fn(static_cast<int>(wi * 64) + bit);
        w &= w - 1;
      }
    }
  }

  std::vector<int> members() const {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(size()));
    for_each([&](int i) { out.push_back(i); });
    return out;
  }

  std::uint64_t mask64() const {
    assert(n_ <= 64);
    return words_.empty() ? 0 : words_[0];
  }

  bool is_subset_of(const Subset& other) const {
    assert(n_ == other.n_);
    for (std::size_t i = 0; i < words_.size(); ++i)
      if (words_[i] & ~other.words_[i]) return false;
    return true;
  }

  friend Subset operator|(const Subset& a, const Subset& b) {
    assert(a.n_ == b.n_);
    Subset out = a;
    for (std::size_t i = 0; i < out.words_.size(); ++i) out.words_[i] |= b.words_[i];
    return out;
  }

  friend Subset operator&(const Subset& a, const Subset& b) {
    assert(a.n_ == b.n_);
    Subset out = a;
    for (std::size_t i = 0; i < out.words_.size(); ++i) out.words_[i] &= b.words_[i];
    return out;
  }

  /// Indicator vector in [0,1]^n.
  Vec indicator() const {
    Vec x(static_cast<std::size_t>(n_), 0.0);
    for_each([&](int i) { x[static_cast<std::size_t>(i)] = 1.0; });
    return x;
  }

  bool operator==(const Subset&) const = default;

 private:
  int n_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Non-negative set function over subsets of {0..n-1}. The monotone and
/// submodular flags are caller-asserted structure; brute-force checkers below
/// verify them at small n.
struct SetFunction {
  int n = 0;
  bool monotone = false;
  bool submodular = false;
  std::function<double(const Subset&)> eval;

  double operator()(const Subset& s) const { return eval(s); }
};

/// Sparse user-by-item ratings. Missing entries count as rating 0.
struct RatingsMatrix {
  int n_users = 0;
  int n_items = 0;
  /// Per user: (item, rating) sorted by item, deduplicated, ratings >= 0.
  std::vector<std::vector<std::pair<int, double>>> rows;
  double max_rating = 0.0;

  std::size_t entry_count() const {
    std::size_t c = 0;
    for (const auto& r : rows) c += r.size();
    return c;
  }
};

/// f(A) = size of the union of the named subsets of a universe {0..m-1}.
/// Monotone and submodular.
inline SetFunction coverage_from_sets(const std::vector<std::vector<int>>& subsets,
                                      int universe_size) {
  if (universe_size < 0) throw InputError("coverage_from_sets: negative universe size");
  auto masks = std::make_shared<std::vector<Subset>>();
  masks->reserve(subsets.size());
  for (const auto& set : subsets) {
    Subset m(universe_size);
    for (int e : set) {
      if (e < 0 || e >= universe_size)
        throw InputError("coverage_from_sets: element " + std::to_string(e) +
                         " outside universe of size " + std::to_string(universe_size));
      m.insert(e);
    }
    masks->push_back(std::move(m));
  }
  SetFunction f;
  f.n = static_cast<int>(subsets.size());
  f.monotone = true;
  f.submodular = true;
  f.eval = [masks, universe_size](const Subset& s) {
    Subset u(universe_size);
    s.for_each([&](int i) { u = u | (*masks)[static_cast<std::size_t>(i)]; });
    return static_cast<double>(u.size());
  };
  return f;
}

/// f(S) = mean over users of the best rating among items in S (0 on the
/// empty set).
inline SetFunction facility_location(RatingsMatrix ratings) {
  if (ratings.n_users <= 0 || ratings.n_items <= 0)
    throw InputError("facility_location: empty ratings matrix");
  auto R = std::make_shared<const RatingsMatrix>(std::move(ratings));
  SetFunction f;
  f.n = R->n_items;
  f.monotone = true;
  f.submodular = true;
  f.eval = [R](const Subset& s) {
    double total = 0.0;
    for (const auto& row : R->rows) {
      double best = 0.0;
      for (const auto& [item, rating] : row)
        if (rating > best && s.contains(item)) best = rating;
      total += best;
    }
    return total / R->n_users;
  };
  return f;
}

/// Per-user facility-location components; their mean equals
/// facility_location(R).
inline std::vector<SetFunction> facility_location_components(
    std::shared_ptr<const RatingsMatrix> R) {
  if (!R || R->n_users <= 0 || R->n_items <= 0)
    throw InputError("facility_location_components: empty ratings matrix");
  std::vector<SetFunction> fs;
  fs.reserve(static_cast<std::size_t>(R->n_users));
  for (int u = 0; u < R->n_users; ++u) {
    SetFunction f;
    f.n = R->n_items;
    f.monotone = true;
    f.submodular = true;
    f.eval = [R, u](const Subset& s) {
      double best = 0.0;
      for (const auto& [item, rating] : R->rows[static_cast<std::size_t>(u)])
        if (rating > best && s.contains(item)) best = rating;
      return best;
    };
    fs.push_back(std::move(f));
  }
  return fs;
}

/// f(S) = mean over users of (sum of ratings in S)^power, power in (0,1].
inline SetFunction concave_over_modular(RatingsMatrix ratings, double power = 0.5) {
  if (ratings.n_users <= 0 || ratings.n_items <= 0)
    throw InputError("concave_over_modular: empty ratings matrix");
  if (!(power > 0.0 && power <= 1.0))
    throw InputError("concave_over_modular: power must lie in (0,1]");
  auto R = std::make_shared<const RatingsMatrix>(std::move(ratings));
  SetFunction f;
  f.n = R->n_items;
  f.monotone = true;
  f.submodular = true;
  f.eval = [R, power](const Subset& s) {
    double total = 0.0;
    for (const auto& row : R->rows) {
      double acc = 0.0;
      for (const auto& [item, rating] : row)
        if (s.contains(item)) acc += rating;
      total += std::pow(acc, power);
    }
    return total / R->n_users;
  };
  return f;
}

/// Per-user concave-over-modular components.
inline std::vector<SetFunction> concave_over_modular_components(
    std::shared_ptr<const RatingsMatrix> R, double power = 0.5) {
  if (!R || R->n_users <= 0 || R->n_items <= 0)
    throw InputError("concave_over_modular_components: empty ratings matrix");
  if (!(power > 0.0 && power <= 1.0))
    throw InputError("concave_over_modular_components: power must lie in (0,1]");
  std::vector<SetFunction> fs;
  fs.reserve(static_cast<std::size_t>(R->n_users));
  for (int u = 0; u < R->n_users; ++u) {
    SetFunction f;
    f.n = R->n_items;
    f.monotone = true;
    f.submodular = true;
    f.eval = [R, u, power](const Subset& s) {
      double acc = 0.0;
      for (const auto& [item, rating] : R->rows[static_cast<std::size_t>(u)])
        if (s.contains(item)) acc += rating;
      return std::pow(acc, power);
    };
    fs.push_back(std::move(f));
  }
  return fs;
}

/// f(S) = sum of weights over S. Submodular with equality; monotone when all
/// weights are non-negative.
inline SetFunction modular_function(Vec weights) {
  auto w = std::make_shared<const Vec>(std::move(weights));
  SetFunction f;
  f.n = static_cast<int>(w->size());
  f.monotone = std::all_of(w->begin(), w->end(), [](double v) { return v >= 0.0; });
  f.submodular = true;
  f.eval = [w](const Subset& s) {
    double acc = 0.0;
    s.for_each([&](int i) { acc += (*w)[static_cast<std::size_t>(i)]; });
    return acc;
  };
  return f;
}

inline constexpr int kBruteforceCheckMaxN = 12;

/// Exhaustively verifies f(A)+f(B) >= f(A|B)+f(A&B) over all pairs
/// (and A <= B monotonicity when requested). Hard-capped at n = 12.
inline bool check_submodular_bruteforce(const SetFunction& f, bool check_monotone = false,
                                        double tol = 1e-9) {
  if (f.n > kBruteforceCheckMaxN)
    throw CapabilityError(
        "check_submodular_bruteforce: n > 12; use check_submodular_sampled");
  const std::uint32_t limit = 1u << f.n;
  std::vector<double> val(limit);
  for (std::uint32_t m = 0; m < limit; ++m) val[m] = f.eval(Subset::from_mask(f.n, m));
  for (std::uint32_t a = 0; a < limit; ++a)
    for (std::uint32_t b = a; b < limit; ++b)
      if (val[a] + val[b] < val[a | b] + val[a & b] - tol) return false;
  if (check_monotone) {
    for (std::uint32_t m = 0; m < limit; ++m)
      for (int i = 0; i < f.n; ++i)
        if (!(m >> i & 1u) && val[m | (1u << i)] < val[m] - tol) return false;
  }
  return true;
}

/// Randomized fallback for larger ground sets: tests num_pairs sampled pairs.
inline bool check_submodular_sampled(const SetFunction& f, int num_pairs, Rng& rng,
                                     bool check_monotone = false, double tol = 1e-9) {
  if (num_pairs < 1) throw InputError("check_submodular_sampled: num_pairs < 1");
  Subset a(f.n), b(f.n);
  for (int p = 0; p < num_pairs; ++p) {
    a.clear();
    b.clear();
    for (int i = 0; i < f.n; ++i) {
      if (rng.bernoulli(0.5)) a.insert(i);
      if (rng.bernoulli(0.5)) b.insert(i);
    }
    if (f.eval(a) + f.eval(b) < f.eval(a | b) + f.eval(a & b) - tol) return false;
    if (check_monotone && f.eval(a) > f.eval(a | b) + tol) return false;
  }
  return true;
}

/// Largest singleton value max_j f({j}). For monotone submodular f this bounds
/// how fast the gradient of the multilinear extension changes per unit of l1
/// movement.
inline double smoothness_bound_l1(const SetFunction& f) {
  if (!(f.monotone && f.submodular))
    throw InputError("smoothness_bound_l1: requires a monotone submodular function");
  double best = 0.0;
  Subset s(f.n);
  for (int j = 0; j < f.n; ++j) {
    s.insert(j);
    best = std::max(best, f.eval(s));
    s.erase(j);
  }
  return best;
}

}  // namespace submax
