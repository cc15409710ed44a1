#pragma once

#include "submax/continuous.hpp"
#include "submax/geometry.hpp"

namespace submax {

enum class ScheduleKind { Theoretical, InverseSqrt, Constant };

/// Step-size rule mu_t, t = 1, 2, ... Always positive and non-increasing.
struct StepSchedule {
  ScheduleKind kind = ScheduleKind::Constant;
  double L = 0.0, sigma = 0.0, R = 0.0;  // Theoretical: 1 / (L + (sigma/R) sqrt(t))
  double c = 0.0;                        // InverseSqrt: c / sqrt(t)
  double mu_const = 0.0;                 // Constant

  static StepSchedule theoretical(double L, double sigma, double R) {
    if (L < 0.0 || sigma < 0.0 || !(R > 0.0))
      throw InputError("StepSchedule: theoretical needs L,sigma >= 0 and R > 0");
    if (L == 0.0 && sigma == 0.0)
      throw InputError("StepSchedule: theoretical needs L > 0 or sigma > 0");
    StepSchedule s;
    s.kind = ScheduleKind::Theoretical;
    s.L = L;
    s.sigma = sigma;
    s.R = R;
    return s;
  }
  static StepSchedule inverse_sqrt(double c) {
    if (!(c > 0.0)) throw InputError("StepSchedule: c must be positive");
    StepSchedule s;
    s.kind = ScheduleKind::InverseSqrt;
    s.c = c;
    return s;
  }
  static StepSchedule constant(double mu) {
    if (!(mu > 0.0)) throw InputError("StepSchedule: mu must be positive");
    StepSchedule s;
    s.kind = ScheduleKind::Constant;
    s.mu_const = mu;
    return s;
  }

  double mu(int t) const {
    assert(t >= 1);
    switch (kind) {
      case ScheduleKind::Theoretical:
        return 1.0 / (L + sigma / R * std::sqrt(static_cast<double>(t)));
      case ScheduleKind::InverseSqrt:
        return c / std::sqrt(static_cast<double>(t));
      case ScheduleKind::Constant:
        return mu_const;
    }
    return 0.0;
  }

  std::string describe() const {
    char buf[128];
    switch (kind) {
      case ScheduleKind::Theoretical:
        std::snprintf(buf, sizeof buf, "theoretical(L=%g,sigma=%g,R=%g)", L, sigma, R);
        break;
      case ScheduleKind::InverseSqrt:
        std::snprintf(buf, sizeof buf, "inverse-sqrt(c=%g)", c);
        break;
      case ScheduleKind::Constant:
        std::snprintf(buf, sizeof buf, "constant(mu=%g)", mu_const);
        break;
    }
    return buf;
  }
};

enum class GradientMode { Exact, Stochastic };

struct SolverOptions {
  GradientMode mode = GradientMode::Stochastic;
  int batch = 1;  // stochastic draws averaged per step
};

struct StepRecord {
  int t = 0;
  double mu = 0.0;
  Vec grad;
  /// Unbiased estimate of F(x_t) from the same samples as grad (exact value
  /// in exact-gradient mode, NaN when no value oracle exists).
  double objective_estimate = 0.0;
};

/// Iterates x_1 .. x_{T+1} plus per-step metadata. Every stored iterate is
/// feasible for the constraint set the solver ran against.
struct Trajectory {
  std::vector<Vec> iterates;
  std::vector<StepRecord> steps;
  std::uint64_t seed = 0;
  std::string config_echo;

  int horizon() const { return static_cast<int>(steps.size()); }
  const Vec& last() const { return iterates.back(); }
};

enum class OutputRule { UniformOverT, EndpointHalfWeighted };

namespace detail {

inline GradDraw gather_gradient(const ContinuousObjective& F, std::span<const double> x,
                                const SolverOptions& opts, Rng& rng) {
  if (opts.mode == GradientMode::Exact) {
    if (!F.has_exact_gradient())
      throw InputError("solver: exact gradient mode without an exact oracle");
    GradDraw d;
    d.grad = F.grad_exact(x);
    d.value_estimate = F.has_exact_value()
                           ? F.value(x)
                           : std::numeric_limits<double>::quiet_NaN();
    return d;
  }
  if (opts.batch < 1) throw InputError("solver: batch must be >= 1");
  GradDraw acc = F.sample(x, rng);
  for (int b = 1; b < opts.batch; ++b) {
    const GradDraw d = F.sample(x, rng);
    for (std::size_t i = 0; i < acc.grad.size(); ++i) acc.grad[i] += d.grad[i];
    acc.value_estimate += d.value_estimate;
  }
  const double inv = 1.0 / opts.batch;
  for (double& g : acc.grad) g *= inv;
  acc.value_estimate *= inv;
  return acc;
}

}  // namespace detail

/// Projected (stochastic) gradient ascent:
///   x_{t+1} = project_euclidean(K, x_t + mu_t g_t).
inline Trajectory sga(const ContinuousObjective& F, const ConstraintSet& K, int T,
                      const StepSchedule& schedule, std::span<const double> x1, Rng& rng,
                      const SolverOptions& opts = {}) {
  if (T < 1) throw InputError("sga: T must be >= 1");
  if (F.n != K.n) throw InputError("sga: objective/constraint dimension mismatch");
  if (!K.contains(x1)) throw InputError("sga: infeasible start point");
  Trajectory traj;
  traj.seed = rng.seed();
  traj.config_echo = "sga T=" + std::to_string(T) + " batch=" +
                     std::to_string(opts.mode == GradientMode::Exact ? 0 : opts.batch) +
                     " schedule=" + schedule.describe() + " K=" + K.name();
  traj.iterates.reserve(static_cast<std::size_t>(T) + 1);
  traj.steps.reserve(static_cast<std::size_t>(T));
  Vec x(x1.begin(), x1.end());
  traj.iterates.push_back(x);
  Vec y(x.size());
  for (int t = 1; t <= T; ++t) {
    GradDraw draw = detail::gather_gradient(F, x, opts, rng);
    const double mu = schedule.mu(t);
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + mu * draw.grad[i];
    x = project_euclidean(K, y);
    traj.steps.push_back({t, mu, std::move(draw.grad), draw.value_estimate});
    traj.iterates.push_back(x);
  }
  return traj;
}

/// (Stochastic) mirror ascent. With the half-squared-Euclidean map the
/// Bregman projection is the Euclidean one and the run reproduces sga
/// iterate-for-iterate. With the scaled entropy map the updates are
/// multiplicative, y_i = x_i * exp((mu_t / k) g_i), followed by KL projection;
/// iterate coordinates are floored at 1e-12 beforehand because the map's
/// gradient diverges at the boundary.
///
/// Starts from argmin of the mirror potential over K unless start_override is
/// given.
inline Trajectory sma(const ContinuousObjective& F, const ConstraintSet& K, int T,
                      const StepSchedule& schedule, const MirrorMap& map, Rng& rng,
                      const SolverOptions& opts = {},
                      const std::optional<Vec>& start_override = std::nullopt) {
  if (T < 1) throw InputError("sma: T must be >= 1");
  if (F.n != K.n) throw InputError("sma: objective/constraint dimension mismatch");
  const Vec x1 = start_override ? *start_override : mirror_start(K, map);
  if (!K.contains(x1)) throw InputError("sma: infeasible start point");
  if (map.kind == MirrorMapKind::HalfSquaredEuclidean) {
    return sga(F, K, T, schedule, x1, rng, opts);
  }
  if (K.kind == BodyKind::Box)
    throw InputError("sma: entropy map needs a sum-constrained body");
  if (std::abs(map.k - K.k) > 1e-9)
    throw InputError("sma: entropy scale must match the body's budget");
  Trajectory traj;
  traj.seed = rng.seed();
  traj.config_echo = "sma T=" + std::to_string(T) + " batch=" +
                     std::to_string(opts.mode == GradientMode::Exact ? 0 : opts.batch) +
                     " schedule=" + schedule.describe() + " map=entropy K=" + K.name();
  traj.iterates.reserve(static_cast<std::size_t>(T) + 1);
  traj.steps.reserve(static_cast<std::size_t>(T));
  Vec x = x1;
  traj.iterates.push_back(x);
  Vec y(x.size());
  for (int t = 1; t <= T; ++t) {
    GradDraw draw = detail::gather_gradient(F, x, opts, rng);
    const double mu = schedule.mu(t);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double base = std::max(x[i], 1e-12);
      const double expo = std::clamp(mu / map.k * draw.grad[i], -500.0, 500.0);
      y[i] = base * std::exp(expo);
    }
    x = project_kl(K, y);
    traj.steps.push_back({t, mu, std::move(draw.grad), draw.value_estimate});
    traj.iterates.push_back(x);
  }
  return traj;
}

/// Conditional-gradient baseline: x_{t+1} = x_t + (1/T) argmax_{v in K} <v, g_t>
/// from x_1 = 0. Only defined on bodies containing the origin; the equality
/// simplex does not, which is exactly why projected methods are preferred
/// there.
inline Trajectory frank_wolfe(const ContinuousObjective& F, const ConstraintSet& K, int T,
                              Rng& rng, const SolverOptions& opts = {}) {
  if (T < 1) throw InputError("frank_wolfe: T must be >= 1");
  if (F.n != K.n) throw InputError("frank_wolfe: objective/constraint dimension mismatch");
  const Vec origin(static_cast<std::size_t>(K.n), 0.0);
  if (!K.contains(origin))
    throw CapabilityError(
        "frank_wolfe: constraint set must contain the origin (conditional-gradient "
        "updates start at 0 to stay feasible)");
  Trajectory traj;
  traj.seed = rng.seed();
  traj.config_echo = "frank-wolfe T=" + std::to_string(T) + " batch=" +
                     std::to_string(opts.mode == GradientMode::Exact ? 0 : opts.batch) +
                     " K=" + K.name();
  traj.iterates.reserve(static_cast<std::size_t>(T) + 1);
  traj.steps.reserve(static_cast<std::size_t>(T));
  Vec x = origin;
  traj.iterates.push_back(x);
  const double step = 1.0 / T;
  for (int t = 1; t <= T; ++t) {
    GradDraw draw = detail::gather_gradient(F, x, opts, rng);
    const Vec v = linear_maximize(K, draw.grad);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += step * v[i];
    traj.steps.push_back({t, step, std::move(draw.grad), draw.value_estimate});
    traj.iterates.push_back(x);
  }
  return traj;
}

/// Draws the returned iterate index tau and hands back x_tau.
/// UniformOverT: tau uniform on {1..T}. EndpointHalfWeighted: tau = 1 and
/// tau = T each with probability 1/(2(T-1)), interior indices with 1/(T-1).
inline Vec sample_output(const Trajectory& traj, OutputRule rule, Rng& rng) {
  const int T = traj.horizon();
  if (T < 1 || traj.iterates.empty()) throw InputError("sample_output: empty trajectory");
  int tau;
  if (rule == OutputRule::UniformOverT) {
    tau = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(T)));
  } else {
    if (T < 3) throw InputError("sample_output: endpoint rule needs T >= 3");
    const double scaled = rng.uniform01() * (T - 1);
    if (scaled < 0.5)
      tau = 1;
    else if (scaled >= T - 1.5)
      tau = T;
    else
      tau = 2 + static_cast<int>(scaled - 0.5);
  }
  return traj.iterates[static_cast<std::size_t>(tau - 1)];
}

/// max_{y in K} <grad, y - x>: non-positive exactly at stationary points, and
/// an upper bound on how far F(x) can sit below any value reachable along
/// feasible directions.
inline double stationarity_gap(const ConstraintSet& K, std::span<const double> x,
                               std::span<const double> grad) {
  if (!K.contains(x)) throw InputError("stationarity_gap: infeasible point");
  const Vec v = linear_maximize(K, grad);
  return dot(grad, v) - dot(grad, x);
}

inline double stationarity_gap(const ContinuousObjective& F, const ConstraintSet& K,
                               std::span<const double> x) {
  if (!F.has_exact_gradient())
    throw InputError(
        "stationarity_gap: no exact gradient; pass a high-batch estimate to the "
        "gradient overload");
  return stationarity_gap(K, x, F.grad_exact(x));
}

/// Scale-free stationarity certificate: gap <= 1e-6 * (1 + ||grad||_2).
inline bool is_stationary(const ConstraintSet& K, std::span<const double> x,
                          std::span<const double> grad) {
  return stationarity_gap(K, x, grad) <= 1e-6 * (1.0 + norm_l2(grad));
}

/// Guaranteed objective floor at any stationary point of a monotone function
/// with diminishing-returns ratio gamma: gamma^2 / (1 + gamma^2) * opt.
inline double stationary_value_bound(double gamma, double opt) {
  if (!(gamma > 0.0) || gamma > 1.0)
    throw InputError("stationary_value_bound: gamma must lie in (0,1]");
  if (opt < 0.0) throw InputError("stationary_value_bound: opt must be non-negative");
  return gamma * gamma / (1.0 + gamma * gamma) * opt;
}

struct StationaryResult {
  Vec x;
  long long iterations = 0;
  double gap = 0.0;
  bool certified = false;
};

/// Runs exact-gradient projected ascent until the iterate stops moving or the
/// stationarity gap falls below gap_tol (absolute). Lean loop: no trajectory
/// is recorded.
inline StationaryResult ascend_to_stationary(const ContinuousObjective& F,
                                             const ConstraintSet& K,
                                             const StepSchedule& schedule,
                                             std::span<const double> x1,
                                             long long max_iterations = 100000,
                                             double gap_tol = 1e-9) {
  if (!F.has_exact_gradient()) throw InputError("ascend_to_stationary: exact gradient required");
  if (!K.contains(x1)) throw InputError("ascend_to_stationary: infeasible start point");
  StationaryResult res;
  res.x.assign(x1.begin(), x1.end());
  Vec y(res.x.size());
  for (long long it = 1; it <= max_iterations; ++it) {
    const Vec grad = F.grad_exact(res.x);
    res.gap = stationarity_gap(K, res.x, grad);
    res.iterations = it - 1;
    if (res.gap <= gap_tol) {
      res.certified = true;
      return res;
    }
    const double mu = schedule.mu(static_cast<int>(std::min<long long>(
        it, std::numeric_limits<int>::max())));
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = res.x[i] + mu * grad[i];
    Vec next = project_euclidean(K, y);
    const double moved = distance_linf(next, res.x);
    res.x = std::move(next);
    if (moved <= 1e-13) {
      const Vec g2 = F.grad_exact(res.x);
      res.gap = stationarity_gap(K, res.x, g2);
      res.iterations = it;
      res.certified = res.gap <= std::max(gap_tol, 1e-6 * (1.0 + norm_l2(g2)));
      return res;
    }
  }
  res.certified = false;
  return res;
}

/// Empirical standard deviation of the gradient oracle at x: square root of
/// the mean squared deviation from the sample mean, measured in the given
/// norm. Feeds the theoretical step schedule when sigma is unknown.
inline double estimate_sigma(const ContinuousObjective& F, std::span<const double> x,
                             int draws, Norm norm, Rng& rng, int batch = 1) {
  if (draws < 2) throw InputError("estimate_sigma: need at least 2 draws");
  SolverOptions opts;
  opts.mode = GradientMode::Stochastic;
  opts.batch = batch;
  std::vector<Vec> grads;
  grads.reserve(static_cast<std::size_t>(draws));
  Vec mean(x.size(), 0.0);
  for (int d = 0; d < draws; ++d) {
    grads.push_back(detail::gather_gradient(F, x, opts, rng).grad);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += grads.back()[i];
  }
  for (double& m : mean) m /= draws;
  double acc = 0.0;
  Vec dev(x.size());
  for (const Vec& g : grads) {
    for (std::size_t i = 0; i < dev.size(); ++i) dev[i] = g[i] - mean[i];
    double d = 0.0;
    switch (norm) {
      case Norm::L1: d = norm_l1(dev); break;
      case Norm::L2: d = norm_l2(dev); break;
      case Norm::LInf: d = norm_linf(dev); break;
    }
    acc += d * d;
  }
  return std::sqrt(acc / (draws - 1));
}

/// Theoretical schedule with defaults filled in: L from the objective's
/// tagged smoothness (lifted by n when only an l1 constant is known but the
/// run is Euclidean), sigma from a pilot of gradient draws at x1, R from the
/// body/map diameter.
inline StepSchedule theoretical_schedule_for(const ContinuousObjective& F,
                                             const ConstraintSet& K, const MirrorMap& map,
                                             std::span<const double> x1, Rng& rng,
                                             int batch = 1, int pilot_draws = 100,
                                             std::optional<double> L_override = std::nullopt,
                                             std::optional<double> sigma_override = std::nullopt,
                                             std::optional<double> R_override = std::nullopt) {
  double L;
  if (L_override) {
    L = *L_override;
  } else if (F.smoothness) {
    const bool euclidean = map.kind == MirrorMapKind::HalfSquaredEuclidean;
    if (F.smoothness->norm == Norm::L1)
      L = euclidean ? F.smoothness->value * F.n : F.smoothness->value;
    else if (F.smoothness->norm == Norm::L2 && euclidean)
      L = F.smoothness->value;
    else
      throw InputError("theoretical_schedule_for: smoothness norm incompatible with map");
  } else {
    throw InputError("theoretical_schedule_for: objective has no smoothness bound; pass L");
  }
  const double R = R_override ? *R_override : std::sqrt(diameter_squared(K, map));
  double sigma;
  if (sigma_override) {
    sigma = *sigma_override;
  } else {
    const Norm norm =
        map.kind == MirrorMapKind::HalfSquaredEuclidean ? Norm::L2 : Norm::LInf;
    sigma = estimate_sigma(F, x1, pilot_draws, norm, rng, batch);
  }
  return StepSchedule::theoretical(L, sigma, R);
}

}  // namespace submax
