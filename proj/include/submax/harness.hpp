#pragma once

#include <array>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <future>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#include "submax/adversarial.hpp"
#include "submax/discrete.hpp"
#include "submax/solvers.hpp"

namespace submax {

/// Invalid or inconsistent experiment configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Unreadable or malformed data files (CLI exit code 3).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Ratings ingestion
// ---------------------------------------------------------------------------

struct ParseReport {
  long long lines_total = 0;
  long long lines_ok = 0;
  long long lines_skipped = 0;
  int n_users = 0;
  int n_items = 0;
  double max_rating = 0.0;

  std::string describe() const {
    std::ostringstream os;
    os << "lines=" << lines_total << " ok=" << lines_ok << " skipped=" << lines_skipped
       << " users=" << n_users << " items=" << n_items << " max_rating=" << max_rating;
    return os.str();
  }
};

struct LoadedRatings {
  RatingsMatrix matrix;
  ParseReport report;
};

enum class RatingsFormat { MovieLens1M, Tsv };

inline RatingsFormat ratings_format_from_string(const std::string& s) {
  if (s == "movielens-1m") return RatingsFormat::MovieLens1M;
  if (s == "tsv") return RatingsFormat::Tsv;
  throw ConfigError("unknown ratings format '" + s + "' (movielens-1m | tsv)");
}

namespace detail {

inline bool parse_rating_line(const std::string& line, RatingsFormat format,
                              long long& user, long long& item, double& rating) {
  if (format == RatingsFormat::MovieLens1M) {
    // user::item::rating::timestamp
    std::array<std::string, 4> fields;
    std::size_t pos = 0;
    for (int f = 0; f < 3; ++f) {
      const std::size_t next = line.find("::", pos);
      if (next == std::string::npos) return false;
      fields[static_cast<std::size_t>(f)] = line.substr(pos, next - pos);
      pos = next + 2;
    }
    fields[3] = line.substr(pos);
    if (fields[3].find("::") != std::string::npos) return false;
    try {
      std::size_t used = 0;
      user = std::stoll(fields[0], &used);
      if (used != fields[0].size()) return false;
      item = std::stoll(fields[1], &used);
      if (used != fields[1].size()) return false;
      rating = std::stod(fields[2], &used);
      if (used != fields[2].size()) return false;
    } catch (...) {
      return false;
    }
    return rating >= 0.0;
  }
  std::istringstream is(line);
  if (!(is >> user >> item >> rating)) return false;
  std::string extra;
  if (is >> extra) return false;
  return rating >= 0.0;
}

}  // namespace detail

/// Reads a ratings file. Ids are remapped to dense 0-based indices (sorted by
/// original id); duplicate (user, item) entries keep the last value; malformed
/// lines are counted and skipped.
inline LoadedRatings load_ratings(const std::string& path, RatingsFormat format) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open ratings file: " + path);
  LoadedRatings out;
  std::vector<std::tuple<long long, long long, double>> triples;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++out.report.lines_total;
    long long user = 0, item = 0;
    double rating = 0.0;
    if (detail::parse_rating_line(line, format, user, item, rating)) {
      ++out.report.lines_ok;
      triples.emplace_back(user, item, rating);
    } else {
      ++out.report.lines_skipped;
    }
  }
  if (triples.empty()) throw DataError("no valid rating lines in " + path);

  std::vector<long long> users, items;
  users.reserve(triples.size());
  items.reserve(triples.size());
  for (const auto& [u, i, r] : triples) {
    users.push_back(u);
    items.push_back(i);
  }
  auto densify = [](std::vector<long long>& ids) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  };
  densify(users);
  densify(items);
  auto index_of = [](const std::vector<long long>& ids, long long v) {
    return static_cast<int>(std::lower_bound(ids.begin(), ids.end(), v) - ids.begin());
  };

  RatingsMatrix& R = out.matrix;
  R.n_users = static_cast<int>(users.size());
  R.n_items = static_cast<int>(items.size());
  R.rows.assign(static_cast<std::size_t>(R.n_users), {});
  std::vector<std::map<int, double>> dedup(static_cast<std::size_t>(R.n_users));
  for (const auto& [u, i, r] : triples)
    dedup[static_cast<std::size_t>(index_of(users, u))][index_of(items, i)] = r;
  for (int u = 0; u < R.n_users; ++u) {
    auto& row = R.rows[static_cast<std::size_t>(u)];
    row.assign(dedup[static_cast<std::size_t>(u)].begin(),
               dedup[static_cast<std::size_t>(u)].end());
    for (const auto& [item, rating] : row) R.max_rating = std::max(R.max_rating, rating);
  }
  out.report.n_users = R.n_users;
  out.report.n_items = R.n_items;
  out.report.max_rating = R.max_rating;
  return out;
}

/// Seeded synthetic ratings: each (user, item) pair is present with the given
/// density and carries an integer rating in 1..r_max.
inline RatingsMatrix gen_synthetic_ratings(int n_users, int n_items, double density,
                                           int r_max, std::uint64_t seed) {
  if (n_users < 1 || n_items < 1) throw InputError("gen_synthetic_ratings: empty shape");
  if (!(density > 0.0 && density <= 1.0))
    throw InputError("gen_synthetic_ratings: density must lie in (0,1]");
  if (r_max < 1) throw InputError("gen_synthetic_ratings: r_max must be >= 1");
  Rng rng(seed);
  RatingsMatrix R;
  R.n_users = n_users;
  R.n_items = n_items;
  R.rows.assign(static_cast<std::size_t>(n_users), {});
  for (int u = 0; u < n_users; ++u) {
    for (int i = 0; i < n_items; ++i) {
      if (rng.uniform01() < density) {
        const double rating =
            1.0 + static_cast<double>(rng.uniform_int(static_cast<std::uint64_t>(r_max)));
        R.rows[static_cast<std::size_t>(u)].emplace_back(i, rating);
        R.max_rating = std::max(R.max_rating, rating);
      }
    }
  }
  return R;
}

/// Writes `user item rating` lines with 1-based ids, loadable as tsv.
inline void write_ratings_tsv(const RatingsMatrix& R, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write ratings file: " + path);
  char buf[64];
  for (int u = 0; u < R.n_users; ++u) {
    for (const auto& [item, rating] : R.rows[static_cast<std::size_t>(u)]) {
      std::snprintf(buf, sizeof buf, "%d %d %.17g\n", u + 1, item + 1, rating);
      out << buf;
    }
  }
  if (!out) throw DataError("failed while writing " + path);
}

/// Coverage instance file: `universe <m>` then one line of 1-based element ids
/// per set. `#` starts a comment.
inline std::pair<std::vector<std::vector<int>>, int> load_coverage_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open coverage file: " + path);
  std::string line;
  int universe = -1;
  std::vector<std::vector<int>> sets;
  while (std::getline(in, line)) {
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream is(line);
    if (universe < 0) {
      std::string tag;
      if (!(is >> tag)) continue;
      if (tag != "universe" || !(is >> universe) || universe < 1)
        throw DataError("coverage file must start with 'universe <m>': " + path);
      continue;
    }
    std::vector<int> set;
    int e;
    while (is >> e) {
      if (e < 1 || e > universe)
        throw DataError("coverage file: element " + std::to_string(e) +
                        " outside universe in " + path);
      set.push_back(e - 1);
    }
    if (!set.empty()) sets.push_back(std::move(set));
  }
  if (universe < 0 || sets.empty())
    throw DataError("coverage file has no sets: " + path);
  return {std::move(sets), universe};
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

/// Flat key-value experiment description. Unknown keys are rejected at parse
/// time so typos cannot silently change a run.
struct ExperimentConfig {
  std::string config_id;
  std::string objective;  // facility-location | concave-over-modular | coverage-file |
                          // appendix-a | appendix-b
  double power = 0.5;
  std::string ratings_path;
  RatingsFormat ratings_format = RatingsFormat::Tsv;
  std::string coverage_path;
  int a_k = 0;
  int b_n = 0;

  std::string constraint;  // cardinality | scaled-simplex
  std::vector<double> ks;  // budget sweep (singleton for a single run)
  std::vector<int> Ts;     // iteration sweep
  int B = 1;
  std::string solver;  // sg | sm | fw | greedy

  std::string schedule = "theoretical";
  std::optional<double> c, mu, L, sigma, R;
  std::string gradients = "stochastic";  // stochastic | exact
  std::string start;                     // uniform | zero | x-loc (sg; sm override)
  std::string mirror_map = "entropy";    // sm: entropy | euclidean
  std::string output_rule = "final";     // final | uniform | endpoint
  int sets_per_draw = 1;
  int eval_samples = 200;
  int threads = 0;  // 0 = one worker per hardware thread

  std::uint64_t seed = 0;
  std::string output_path;

  bool is_continuous_solver() const { return solver != "greedy"; }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (...) {
    throw ConfigError("config key '" + key + "': cannot parse number '" + v + "'");
  }
}

inline long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long d = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (...) {
    throw ConfigError("config key '" + key + "': cannot parse integer '" + v + "'");
  }
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::string item;
  std::istringstream is(v);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_double(key, item));
  }
  if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
  return out;
}

}  // namespace detail

/// Parses the key=value text of a config. Lines starting with '#' (or inline
/// '#' tails) are comments. Does not validate cross-field consistency; see
/// validate_config.
inline ExperimentConfig parse_config_text(const std::string& text,
                                          const std::string& default_id = "config") {
  ExperimentConfig cfg;
  cfg.config_id = default_id;
  std::istringstream in(text);
  std::string line;
  std::map<std::string, std::string> seen;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key or value");
    if (!seen.emplace(key, value).second)
      throw ConfigError("config: duplicate key '" + key + "'");

    if (key == "config_id") cfg.config_id = value;
    else if (key == "objective") cfg.objective = value;
    else if (key == "power") cfg.power = detail::parse_double(key, value);
    else if (key == "ratings") cfg.ratings_path = value;
    else if (key == "ratings_format") cfg.ratings_format = ratings_format_from_string(value);
    else if (key == "coverage_file") cfg.coverage_path = value;
    else if (key == "a_k") cfg.a_k = static_cast<int>(detail::parse_int(key, value));
    else if (key == "b_n") cfg.b_n = static_cast<int>(detail::parse_int(key, value));
    else if (key == "constraint") cfg.constraint = value;
    else if (key == "k") cfg.ks = {detail::parse_double(key, value)};
    else if (key == "sweep_k") cfg.ks = detail::parse_list(key, value);
    else if (key == "T") cfg.Ts = {static_cast<int>(detail::parse_int(key, value))};
    else if (key == "sweep_T") {
      cfg.Ts.clear();
      for (double v : detail::parse_list(key, value)) cfg.Ts.push_back(static_cast<int>(v));
    }
    else if (key == "B") cfg.B = static_cast<int>(detail::parse_int(key, value));
    else if (key == "solver") cfg.solver = value;
    else if (key == "schedule") cfg.schedule = value;
    else if (key == "c") cfg.c = detail::parse_double(key, value);
    else if (key == "mu") cfg.mu = detail::parse_double(key, value);
    else if (key == "L") cfg.L = detail::parse_double(key, value);
    else if (key == "sigma") cfg.sigma = detail::parse_double(key, value);
    else if (key == "R") cfg.R = detail::parse_double(key, value);
    else if (key == "gradients") cfg.gradients = value;
    else if (key == "start") cfg.start = value;
    else if (key == "mirror_map") cfg.mirror_map = value;
    else if (key == "output_rule") cfg.output_rule = value;
    else if (key == "sets_per_draw")
      cfg.sets_per_draw = static_cast<int>(detail::parse_int(key, value));
    else if (key == "eval_samples")
      cfg.eval_samples = static_cast<int>(detail::parse_int(key, value));
    else if (key == "threads") cfg.threads = static_cast<int>(detail::parse_int(key, value));
    else if (key == "seed")
      cfg.seed = static_cast<std::uint64_t>(detail::parse_int(key, value));
    else if (key == "output") cfg.output_path = value;
    else throw ConfigError("config: unknown key '" + key + "'");
  }
  return cfg;
}

inline std::string config_stem(const std::string& path) {
  std::size_t slash = path.find_last_of("/\\");
  std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
  const std::size_t dot = name.find_last_of('.');
  if (dot != std::string::npos && dot > 0) name.erase(dot);
  return name.empty() ? "config" : name;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str(), config_stem(path));
}

/// Cross-field validation: required keys per objective/solver, constraint
/// defaults, file existence, budget integrality for runs that end in
/// rounding. Throws ConfigError with the offending key in the message.
inline void validate_config(ExperimentConfig& cfg) {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError("config: " + msg);
  };
  require(!cfg.objective.empty(), "missing 'objective'");
  require(!cfg.solver.empty(), "missing 'solver'");
  require(cfg.solver == "sg" || cfg.solver == "sm" || cfg.solver == "fw" ||
              cfg.solver == "greedy",
          "solver must be sg | sm | fw | greedy");
  require(cfg.gradients == "stochastic" || cfg.gradients == "exact",
          "gradients must be stochastic | exact");
  require(cfg.output_rule == "final" || cfg.output_rule == "uniform" ||
              cfg.output_rule == "endpoint",
          "output_rule must be final | uniform | endpoint");
  require(cfg.B >= 1, "B must be >= 1");
  require(cfg.sets_per_draw >= 1, "sets_per_draw must be >= 1");
  require(cfg.eval_samples >= 1, "eval_samples must be >= 1");
  require(cfg.threads >= 0, "threads must be >= 0");

  if (cfg.objective == "facility-location" || cfg.objective == "concave-over-modular") {
    require(!cfg.ratings_path.empty(), "objective needs 'ratings'");
    require(static_cast<bool>(std::ifstream(cfg.ratings_path)),
            "ratings file not readable: " + cfg.ratings_path);
    if (cfg.objective == "concave-over-modular")
      require(cfg.power > 0.0 && cfg.power <= 1.0, "power must lie in (0,1]");
  } else if (cfg.objective == "coverage-file") {
    require(!cfg.coverage_path.empty(), "objective needs 'coverage_file'");
    require(static_cast<bool>(std::ifstream(cfg.coverage_path)),
            "coverage file not readable: " + cfg.coverage_path);
  } else if (cfg.objective == "appendix-a") {
    require(cfg.a_k >= 1, "appendix-a needs a_k >= 1");
    if (cfg.constraint.empty()) cfg.constraint = "scaled-simplex";
    if (cfg.ks.empty()) cfg.ks = {static_cast<double>(cfg.a_k)};
  } else if (cfg.objective == "appendix-b") {
    require(cfg.b_n >= 3, "appendix-b needs b_n >= 3");
    if (cfg.constraint.empty()) cfg.constraint = "cardinality";
    require(cfg.constraint == "cardinality", "appendix-b runs on the cardinality polytope");
    if (cfg.ks.empty()) cfg.ks = {1.0};
    require(cfg.ks.size() == 1 && cfg.ks[0] == 1.0, "appendix-b fixes k = 1");
  } else {
    throw ConfigError("config: unknown objective '" + cfg.objective + "'");
  }

  if (cfg.constraint.empty()) cfg.constraint = "cardinality";
  require(cfg.constraint == "cardinality" || cfg.constraint == "scaled-simplex",
          "constraint must be cardinality | scaled-simplex");
  require(!cfg.ks.empty(), "missing 'k' (or 'sweep_k')");
  for (double k : cfg.ks)
    require(k > 0.0 || (!cfg.is_continuous_solver() && k == 0.0),
            "budgets must be positive (greedy also accepts k = 0)");

  if (cfg.is_continuous_solver()) {
    require(!cfg.Ts.empty(), "continuous solvers need 'T' (or 'sweep_T')");
    for (int T : cfg.Ts) require(T >= 1, "T must be >= 1");
    require(cfg.ks.size() == 1 || cfg.Ts.size() == 1,
            "sweep over k or T, not both");
    for (double k : cfg.ks)
      require(std::abs(k - std::llround(k)) < 1e-9,
              "continuous runs need an integral budget for rounding");
    if (cfg.solver == "sg" || cfg.solver == "sm") {
      require(cfg.schedule == "theoretical" || cfg.schedule == "inverse-sqrt" ||
                  cfg.schedule == "constant",
              "schedule must be theoretical | inverse-sqrt | constant");
      if (cfg.schedule == "inverse-sqrt") require(cfg.c.has_value(), "schedule needs 'c'");
      if (cfg.schedule == "constant") require(cfg.mu.has_value(), "schedule needs 'mu'");
    }
    if (cfg.solver == "sm")
      require(cfg.mirror_map == "entropy" || cfg.mirror_map == "euclidean",
              "mirror_map must be entropy | euclidean");
    if (cfg.solver == "fw")
      require(cfg.constraint == "cardinality",
              "fw needs a body containing the origin (cardinality)");
    if (!cfg.start.empty()) {
      require(cfg.solver == "sg" || cfg.solver == "sm",
              "'start' applies to sg and sm only");
      require(cfg.start == "uniform" || cfg.start == "zero" || cfg.start == "x-loc",
              "start must be uniform | zero | x-loc");
      if (cfg.start == "x-loc")
        require(cfg.objective == "appendix-a", "start=x-loc needs objective=appendix-a");
    }
    if (cfg.gradients == "exact")
      require(cfg.objective != "facility-location" &&
                  cfg.objective != "concave-over-modular",
              "exact gradients are only tractable for small instances");
  } else {
    require(cfg.Ts.empty(), "greedy takes no 'T'");
    require(!cfg.c && !cfg.mu && !cfg.L && !cfg.sigma && !cfg.R,
            "greedy takes no schedule parameters");
    require(cfg.start.empty(), "'start' applies to sg and sm only");
    for (double k : cfg.ks)
      require(std::abs(k - std::llround(k)) < 1e-9, "greedy needs integral budgets");
  }
}

// ---------------------------------------------------------------------------
// Running experiments
// ---------------------------------------------------------------------------

/// One emitted measurement row.
struct RunRecord {
  std::string config_id;
  std::string solver;
  double k = 0.0;
  long long t = 0;  // iteration horizon for continuous solvers, 0 for greedy
  int B = 1;
  std::uint64_t seed = 0;
  double value_continuous = 0.0;
  double value_rounded = 0.0;
  long long evals = 0;
  long long ms = 0;
};

inline constexpr const char* kCsvHeader =
    "config_id,solver,k,t,B,seed,value_continuous,value_rounded,evals,ms";

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct BuiltInstance {
  int n = 0;
  ContinuousObjective F;                 // fresh evaluation counter
  SetFunction f_true;                    // exact discrete objective (uncounted)
  std::vector<SetFunction> components;   // pool for empirical sampling
  std::optional<Vec> x_loc;
};

/// Materializes the configured objective. Called once per sweep point so each
/// run owns a zeroed evaluation counter.
inline BuiltInstance build_instance(const ExperimentConfig& cfg,
                                    const std::shared_ptr<const RatingsMatrix>& ratings) {
  BuiltInstance inst;
  if (cfg.objective == "facility-location" || cfg.objective == "concave-over-modular") {
    inst.components = cfg.objective == "facility-location"
                          ? facility_location_components(ratings)
                          : concave_over_modular_components(ratings, cfg.power);
    inst.f_true = cfg.objective == "facility-location"
                      ? facility_location(*ratings)
                      : concave_over_modular(*ratings, cfg.power);
    inst.n = inst.f_true.n;
    inst.F = stochastic_objective(inst.components, {}, cfg.sets_per_draw);
  } else if (cfg.objective == "coverage-file") {
    auto [sets, universe] = load_coverage_file(cfg.coverage_path);
    inst.f_true = coverage_from_sets(sets, universe);
    inst.n = inst.f_true.n;
    inst.components = {inst.f_true};
    inst.F = stochastic_objective(inst.components, {}, cfg.sets_per_draw);
  } else if (cfg.objective == "appendix-a") {
    AppendixAInstance a = appendix_a_instance(cfg.a_k);
    inst.f_true = a.f;
    inst.n = inst.f_true.n;
    inst.components = {inst.f_true};
    inst.F = stochastic_objective(inst.components, {}, cfg.sets_per_draw);
    inst.x_loc = a.x_loc;
  } else if (cfg.objective == "appendix-b") {
    AppendixBInstance b = appendix_b_instance(cfg.b_n);
    inst.n = b.n;
    inst.F = std::move(b.F);
    // Indicator restriction of the linear objective doubles as the discrete
    // objective for rounding and greedy.
    auto value = inst.F.value;
    SetFunction f;
    f.n = inst.n;
    f.monotone = true;
    f.submodular = true;
    f.eval = [value](const Subset& s) { return value(s.indicator()); };
    inst.f_true = f;
    inst.components = {inst.f_true};
  }
  return inst;
}

inline ConstraintSet make_body(const ExperimentConfig& cfg, int n, double k) {
  if (k > n) throw ConfigError("config: budget k exceeds the ground-set size");
  return cfg.constraint == "scaled-simplex" ? ConstraintSet::scaled_simplex(n, k)
                                            : ConstraintSet::cardinality_polytope(n, k);
}

inline Vec start_point(const ExperimentConfig& cfg, const BuiltInstance& inst,
                       const ConstraintSet& K) {
  const std::string start = cfg.start.empty() ? "uniform" : cfg.start;
  if (start == "zero") {
    Vec x(static_cast<std::size_t>(K.n), 0.0);
    if (!K.contains(x)) throw ConfigError("config: start=zero infeasible for " + K.name());
    return x;
  }
  if (start == "x-loc") {
    if (!inst.x_loc) throw ConfigError("config: start=x-loc without appendix-a objective");
    if (!K.contains(*inst.x_loc))
      throw ConfigError("config: x-loc infeasible for " + K.name());
    return *inst.x_loc;
  }
  return Vec(static_cast<std::size_t>(K.n), K.k / static_cast<double>(K.n));
}

inline RunRecord run_point(const ExperimentConfig& cfg,
                           const std::shared_ptr<const RatingsMatrix>& ratings,
                           double k, int T, std::size_t sweep_index) {
  BuiltInstance inst = build_instance(cfg, ratings);
  const std::uint64_t point_seed = mix_seed(cfg.seed, sweep_index);
  Rng rng(point_seed);
  RunRecord rec;
  rec.config_id = cfg.config_id;
  rec.solver = cfg.solver;
  rec.k = k;
  rec.t = cfg.solver == "greedy" ? 0 : T;
  rec.B = cfg.B;
  rec.seed = point_seed;

  const auto t0 = std::chrono::steady_clock::now();
  if (cfg.solver == "greedy") {
    EmpiricalSetObjective empirical =
        EmpiricalSetObjective::sample(inst.components, cfg.B, rng);
    const Subset s = greedy(empirical, static_cast<int>(std::llround(k)));
    rec.evals = static_cast<long long>(empirical.single_evaluations());
    rec.value_rounded = inst.f_true.eval(s);
    rec.value_continuous = rec.value_rounded;
  } else {
    const ConstraintSet K = make_body(cfg, inst.n, k);
    SolverOptions opts;
    opts.mode = cfg.gradients == "exact" ? GradientMode::Exact : GradientMode::Stochastic;
    opts.batch = cfg.B;
    const MirrorMap map = cfg.solver == "sm" && cfg.mirror_map == "entropy"
                              ? MirrorMap::scaled_entropy(K.k)
                              : MirrorMap::half_squared_euclidean();
    Vec x1 = cfg.solver == "sm" && cfg.start.empty() ? mirror_start(K, map)
                                                     : start_point(cfg, inst, K);
    StepSchedule schedule = StepSchedule::constant(1.0);
    if (cfg.solver != "fw") {
      if (cfg.schedule == "inverse-sqrt")
        schedule = StepSchedule::inverse_sqrt(*cfg.c);
      else if (cfg.schedule == "constant")
        schedule = StepSchedule::constant(*cfg.mu);
      else if (opts.mode == GradientMode::Exact)
        schedule = theoretical_schedule_for(inst.F, K, map, x1, rng, cfg.B, 100, cfg.L,
                                            0.0, cfg.R);
      else
        schedule = theoretical_schedule_for(inst.F, K, map, x1, rng, cfg.B, 100, cfg.L,
                                            cfg.sigma, cfg.R);
    }

    Trajectory traj;
    if (cfg.solver == "sg") {
      traj = sga(inst.F, K, T, schedule, x1, rng, opts);
    } else if (cfg.solver == "sm") {
      traj = sma(inst.F, K, T, schedule, map, rng, opts,
                 cfg.start.empty() ? std::nullopt : std::optional<Vec>(x1));
    } else {
      traj = frank_wolfe(inst.F, K, T, rng, opts);
    }
    rec.evals = static_cast<long long>(inst.F.evaluations());

    Vec x_out;
    if (cfg.output_rule == "final")
      x_out = traj.last();
    else
      x_out = sample_output(traj,
                            cfg.output_rule == "uniform" ? OutputRule::UniformOverT
                                                         : OutputRule::EndpointHalfWeighted,
                            rng);
    rec.value_continuous = inst.F.has_exact_value()
                               ? inst.F.value(x_out)
                               : inst.F.value_estimate(x_out, cfg.eval_samples, rng);
    const Subset s =
        lift_and_round(inst.f_true, x_out, static_cast<int>(std::llround(k)), rng);
    rec.value_rounded = inst.f_true.eval(s);
  }
  rec.ms = std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - t0)
               .count();
  return rec;
}

}  // namespace detail

/// Executes the configured solver over the sweep. Sweep points run on a small
/// worker pool, each with a seed derived from (config seed, sweep index);
/// records are assembled in sweep order regardless of completion order.
inline std::vector<RunRecord> run_experiment(const ExperimentConfig& config) {
  ExperimentConfig cfg = config;
  validate_config(cfg);
  std::shared_ptr<const RatingsMatrix> ratings;
  if (cfg.objective == "facility-location" || cfg.objective == "concave-over-modular")
    ratings = std::make_shared<const RatingsMatrix>(
        load_ratings(cfg.ratings_path, cfg.ratings_format).matrix);

  struct Point {
    double k;
    int T;
  };
  std::vector<Point> points;
  if (cfg.is_continuous_solver() && cfg.Ts.size() > 1) {
    for (int T : cfg.Ts) points.push_back({cfg.ks.front(), T});
  } else {
    const int T = cfg.is_continuous_solver() ? cfg.Ts.front() : 0;
    for (double k : cfg.ks) points.push_back({k, T});
  }

  std::vector<RunRecord> records(points.size());
  unsigned workers = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads)
                                     : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(points.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < points.size(); ++i)
      records[i] = detail::run_point(cfg, ratings, points[i].k, points[i].T, i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::future<void>> futures;
    std::exception_ptr error;
    std::mutex error_mutex;
    for (unsigned w = 0; w < workers; ++w) {
      futures.push_back(std::async(std::launch::async, [&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= points.size()) return;
          try {
            records[i] = detail::run_point(cfg, ratings, points[i].k, points[i].T, i);
          } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
            return;
          }
        }
      }));
    }
    for (auto& f : futures) f.get();
    if (error) std::rethrow_exception(error);
  }
  return records;
}

/// Serializes records to CSV: fixed header, stable order (config id, then row
/// build order), %.17g floats so a round-trip parse recovers every numeric
/// field exactly.
inline std::string format_csv(std::vector<RunRecord> records) {
  std::stable_sort(records.begin(), records.end(),
                   [](const RunRecord& a, const RunRecord& b) {
                     return a.config_id < b.config_id;
                   });
  std::ostringstream os;
  os << kCsvHeader << "\n";
  for (const RunRecord& r : records) {
    os << r.config_id << ',' << r.solver << ',' << detail::format_double(r.k) << ','
       << r.t << ',' << r.B << ',' << r.seed << ','
       << detail::format_double(r.value_continuous) << ','
       << detail::format_double(r.value_rounded) << ',' << r.evals << ',' << r.ms
       << "\n";
  }
  return os.str();
}

inline void emit_csv(const std::vector<RunRecord>& records, const std::string& path) {
  if (records.empty()) throw InputError("emit_csv: no records");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write CSV: " + path);
  out << format_csv(records);
  if (!out) throw DataError("failed while writing CSV: " + path);
}

/// Reads back a CSV produced by emit_csv.
inline std::vector<RunRecord> parse_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open CSV: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader)
    throw DataError("CSV header mismatch in " + path);
  std::vector<RunRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t pos = 0;
    for (;;) {
      const std::size_t comma = line.find(',', pos);
      fields.push_back(line.substr(pos, comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (fields.size() != 10) throw DataError("CSV row with wrong arity in " + path);
    RunRecord r;
    r.config_id = fields[0];
    r.solver = fields[1];
    r.k = std::stod(fields[2]);
    r.t = std::stoll(fields[3]);
    r.B = std::stoi(fields[4]);
    r.seed = std::stoull(fields[5]);
    r.value_continuous = std::stod(fields[6]);
    r.value_rounded = std::stod(fields[7]);
    r.evals = std::stoll(fields[8]);
    r.ms = std::stoll(fields[9]);
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace submax
