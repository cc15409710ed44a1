#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "testing_util.hpp"

using namespace submax;
using Catch::Matchers::WithinAbs;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("submax_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

/// Strips the trailing ms column from every CSV line; wall-clock time is the
/// one field allowed to differ between identical runs.
std::string strip_ms(const std::string& csv) {
  std::istringstream in(csv);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t comma = line.find_last_of(',');
    out << line.substr(0, comma) << "\n";
  }
  return out.str();
}

}  // namespace

TEST_CASE("ratings ingestion") {
  TempDir dir;
  const std::string ml = dir.file("ml.dat");
  write_file(ml,
             "1::10::5::978300760\n"
             "2::10::3::978300760\n");
  const LoadedRatings loaded = load_ratings(ml, RatingsFormat::MovieLens1M);
  CHECK(loaded.report.n_users == 2);
  CHECK(loaded.report.n_items == 1);
  CHECK(loaded.report.max_rating == 5.0);
  CHECK(loaded.report.lines_ok == 2);
  CHECK(loaded.matrix.rows[0] == std::vector<std::pair<int, double>>{{0, 5.0}});

  const std::string tsv = dir.file("r.tsv");
  write_file(tsv, "1 1 4.0\n");
  const LoadedRatings single = load_ratings(tsv, RatingsFormat::Tsv);
  CHECK(single.matrix.n_users == 1);
  CHECK(single.matrix.rows[0] == std::vector<std::pair<int, double>>{{0, 4.0}});

  // Malformed lines are counted and skipped; duplicates keep the last value.
  const std::string messy = dir.file("messy.tsv");
  write_file(messy,
             "1 1 4.0\n"
             "oops\n"
             "2 1 -3\n"
             "1 1 2.5\n");
  const LoadedRatings cleaned = load_ratings(messy, RatingsFormat::Tsv);
  CHECK(cleaned.report.lines_skipped == 2);
  CHECK(cleaned.report.lines_ok == 2);
  CHECK(cleaned.matrix.rows[0] == std::vector<std::pair<int, double>>{{0, 2.5}});

  const std::string empty = dir.file("empty.tsv");
  write_file(empty, "");
  CHECK_THROWS_AS(load_ratings(empty, RatingsFormat::Tsv), DataError);
  CHECK_THROWS_AS(load_ratings(dir.file("missing.tsv"), RatingsFormat::Tsv), DataError);
}

TEST_CASE("synthetic ratings round-trip") {
  const RatingsMatrix R = gen_synthetic_ratings(20, 15, 0.3, 5, 42);
  CHECK(R.n_users == 20);
  CHECK(R.n_items == 15);
  CHECK(R.max_rating <= 5.0);
  const RatingsMatrix again = gen_synthetic_ratings(20, 15, 0.3, 5, 42);
  CHECK(R.rows == again.rows);

  TempDir dir;
  const std::string path = dir.file("synth.tsv");
  write_ratings_tsv(R, path);
  const LoadedRatings loaded = load_ratings(path, RatingsFormat::Tsv);
  CHECK(loaded.matrix.n_users == R.n_users);
  CHECK(loaded.matrix.rows == R.rows);

  CHECK_THROWS_AS(gen_synthetic_ratings(0, 5, 0.5, 5, 1), InputError);
  CHECK_THROWS_AS(gen_synthetic_ratings(5, 5, 0.0, 5, 1), InputError);
}

TEST_CASE("coverage file loading") {
  TempDir dir;
  const std::string path = dir.file("cov.txt");
  write_file(path,
             "# test family\n"
             "universe 5\n"
             "1 5\n"
             "2 5\n"
             "3\n"
             "4\n"
             "1 2 5\n");
  const auto [sets, universe] = load_coverage_file(path);
  CHECK(universe == 5);
  REQUIRE(sets.size() == 5);
  CHECK(sets[0] == std::vector<int>{0, 4});
  const SetFunction f = coverage_from_sets(sets, universe);
  CHECK(f.eval(Subset::from_indices(5, {0})) == 2.0);

  write_file(path, "universe 3\n7\n");
  CHECK_THROWS_AS(load_coverage_file(path), DataError);
  write_file(path, "1 2\n");
  CHECK_THROWS_AS(load_coverage_file(path), DataError);
}

TEST_CASE("config parsing and validation") {
  ExperimentConfig cfg = parse_config_text(
      "# comment\n"
      "objective = appendix-b\n"
      "b_n = 11\n"
      "solver = fw\n"
      "T = 100\n"
      "B = 2\n"
      "seed = 7\n",
      "demo");
  CHECK(cfg.config_id == "demo");
  CHECK(cfg.objective == "appendix-b");
  CHECK(cfg.b_n == 11);
  validate_config(cfg);
  CHECK(cfg.constraint == "cardinality");
  CHECK(cfg.ks == Vec{1.0});

  CHECK_THROWS_AS(parse_config_text("objective = appendix-b\nwat = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("objective\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("T = 5\nT = 6\n"), ConfigError);

  ExperimentConfig missing = parse_config_text("objective = appendix-b\nb_n = 5\n");
  CHECK_THROWS_AS(validate_config(missing), ConfigError);  // no solver

  ExperimentConfig greedy_T = parse_config_text(
      "objective = appendix-b\nb_n = 5\nsolver = greedy\nT = 10\nk = 1\nseed = 1\n");
  CHECK_THROWS_AS(validate_config(greedy_T), ConfigError);

  ExperimentConfig sweep = parse_config_text(
      "objective = appendix-b\nb_n = 5\nsolver = sg\nsweep_k = 1,1,1\nT = 10\nseed = 1\n");
  CHECK_THROWS_AS(validate_config(sweep), ConfigError);  // appendix-b fixes k = 1

  ExperimentConfig frac = parse_config_text(
      "objective = coverage-file\ncoverage_file = /nonexistent\nsolver = sg\nk = 2\n"
      "T = 10\nseed = 1\n");
  CHECK_THROWS_AS(validate_config(frac), ConfigError);  // unreadable file
}

TEST_CASE("csv emission and round trip") {
  TempDir dir;
  RunRecord r;
  r.config_id = "c1";
  r.solver = "sg";
  r.k = 5.0;
  r.t = 2000;
  r.B = 20;
  r.seed = 123456789012345ULL;
  r.value_continuous = 3.0000000000000004;
  r.value_rounded = 1.0 / 3.0;
  r.evals = 99;
  r.ms = 17;

  const std::string path = dir.file("out.csv");
  emit_csv({r}, path);
  const std::string text = read_file(path);
  CHECK(text.rfind(kCsvHeader, 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);

  const auto parsed = parse_csv(path);
  REQUIRE(parsed.size() == 1);
  CHECK(parsed[0].config_id == "c1");
  CHECK(parsed[0].k == r.k);
  CHECK(parsed[0].value_continuous == r.value_continuous);  // bit-exact round trip
  CHECK(parsed[0].value_rounded == r.value_rounded);
  CHECK(parsed[0].seed == r.seed);
  CHECK(parsed[0].evals == 99);

  RunRecord r2 = r;
  r2.seed = 42;
  emit_csv({r, r2}, path);
  const auto two = parse_csv(path);
  REQUIRE(two.size() == 2);
  CHECK(two[0].seed != two[1].seed);

  CHECK_THROWS_AS(emit_csv({}, path), InputError);
  CHECK_THROWS_AS(emit_csv({r}, (dir.path / "no_dir" / "x.csv").string()), DataError);
}

TEST_CASE("adversarial experiment reproduces the stall ratio") {
  TempDir dir;
  ExperimentConfig cfg = parse_config_text(
      "objective = appendix-b\n"
      "b_n = 11\n"
      "solver = fw\n"
      "T = 2000\n"
      "B = 1\n"
      "seed = 5\n",
      "fw_stall");
  const auto records = run_experiment(cfg);
  REQUIRE(records.size() == 1);
  // 2/(n-1) of the optimum 0.5, exactly, for any seed.
  CHECK_THAT(records[0].value_continuous, WithinAbs(0.1, 1e-12));
  CHECK(records[0].t == 2000);
  CHECK(records[0].evals == 0);  // analytic oracle, no set-function queries
}

TEST_CASE("flat trajectory from the stuck point") {
  ExperimentConfig cfg = parse_config_text(
      "objective = appendix-a\n"
      "a_k = 5\n"
      "solver = sg\n"
      "gradients = exact\n"
      "start = x-loc\n"
      "T = 50\n"
      "seed = 3\n",
      "a_flat");
  const auto records = run_experiment(cfg);
  REQUIRE(records.size() == 1);
  CHECK_THAT(records[0].value_continuous, WithinAbs(6.0, 1e-9));
}

TEST_CASE("greedy with a zero budget reports the empty-set value") {
  ExperimentConfig cfg = parse_config_text(
      "objective = appendix-a\n"
      "a_k = 2\n"
      "solver = greedy\n"
      "k = 0\n"
      "B = 1\n"
      "seed = 2\n",
      "greedy0");
  const auto records = run_experiment(cfg);
  REQUIRE(records.size() == 1);
  CHECK(records[0].value_rounded == 0.0);
  CHECK(records[0].evals == 0);
}

TEST_CASE("greedy run uses the empirical objective and counts evaluations") {
  TempDir dir;
  const RatingsMatrix R = gen_synthetic_ratings(30, 12, 0.4, 5, 9);
  const std::string ratings = dir.file("r.tsv");
  write_ratings_tsv(R, ratings);
  ExperimentConfig cfg = parse_config_text(
      "objective = facility-location\n"
      "ratings = " + ratings + "\n"
      "solver = greedy\n"
      "k = 3\n"
      "B = 10\n"
      "seed = 11\n",
      "greedy_fl");
  const auto records = run_experiment(cfg);
  REQUIRE(records.size() == 1);
  CHECK(records[0].t == 0);
  CHECK(records[0].evals == 10 * (12 + 11 + 10));
  CHECK(records[0].value_rounded > 0.0);
  CHECK(records[0].value_continuous == records[0].value_rounded);
}

TEST_CASE("identical configs give identical CSVs up to wall-clock") {
  TempDir dir;
  const RatingsMatrix R = gen_synthetic_ratings(25, 10, 0.4, 5, 100);
  const std::string ratings = dir.file("r.tsv");
  write_ratings_tsv(R, ratings);
  const std::string text =
      "objective = concave-over-modular\n"
      "ratings = " + ratings + "\n"
      "solver = sg\n"
      "schedule = inverse-sqrt\n"
      "c = 0.5\n"
      "sweep_k = 2,4\n"
      "T = 120\n"
      "B = 4\n"
      "threads = 2\n"
      "seed = 21\n";
  ExperimentConfig cfg = parse_config_text(text, "repro");
  const std::string p1 = dir.file("a.csv");
  const std::string p2 = dir.file("b.csv");
  emit_csv(run_experiment(cfg), p1);
  emit_csv(run_experiment(cfg), p2);
  CHECK(strip_ms(read_file(p1)) == strip_ms(read_file(p2)));
  // Sweep points carry distinct derived seeds.
  const auto rows = parse_csv(p1);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].seed != rows[1].seed);

  // The worker count cannot change results.
  ExperimentConfig serial = parse_config_text(text, "repro");
  serial.threads = 1;
  const std::string p3 = dir.file("c.csv");
  emit_csv(run_experiment(serial), p3);
  CHECK(strip_ms(read_file(p1)) == strip_ms(read_file(p3)));
}

TEST_CASE("equal (B, T) gives near-equal sampling cost across solvers") {
  TempDir dir;
  const RatingsMatrix R = gen_synthetic_ratings(40, 15, 0.4, 5, 77);
  const std::string ratings = dir.file("r.tsv");
  write_ratings_tsv(R, ratings);
  auto run_one = [&](const std::string& solver, const std::string& extra) {
    ExperimentConfig cfg = parse_config_text(
        "objective = facility-location\n"
        "ratings = " + ratings + "\n"
        "solver = " + solver + "\n" + extra +
        "k = 3\n"
        "T = 60\n"
        "B = 5\n"
        "seed = 31\n",
        solver);
    const auto records = run_experiment(cfg);
    REQUIRE(records.size() == 1);
    return records[0].evals;
  };
  const long long sg = run_one("sg", "schedule = inverse-sqrt\nc = 0.5\n");
  const long long sm = run_one("sm", "schedule = inverse-sqrt\nc = 0.5\n"
                                     "constraint = scaled-simplex\n");
  const long long fw = run_one("fw", "");
  // Every solver pays (n+1) evaluations per draw, B draws per iteration.
  CHECK(sg == fw);
  CHECK(sm == fw);
  CHECK(fw == 60LL * 5 * (15 + 1));
}

TEST_CASE("continuous sweep over T keeps evaluation counts monotone") {
  ExperimentConfig cfg = parse_config_text(
      "objective = appendix-a\n"
      "a_k = 2\n"
      "solver = sg\n"
      "schedule = inverse-sqrt\n"
      "c = 0.3\n"
      "sweep_T = 20,40,80\n"
      "B = 2\n"
      "seed = 13\n",
      "sweepT");
  const auto records = run_experiment(cfg);
  REQUIRE(records.size() == 3);
  CHECK(records[0].t == 20);
  CHECK(records[2].t == 80);
  CHECK(records[0].evals < records[1].evals);
  CHECK(records[1].evals < records[2].evals);
}
