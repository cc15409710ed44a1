// Command-line front end: validate and run experiment configs, generate
// synthetic ratings, inspect ratings files.
//
// Exit codes: 0 success, 2 configuration error, 3 data error.

#include <CLI11.hpp>
#include <iostream>

#include "submax/submax.hpp"

namespace {

int run_command(const std::string& config_path) {
  submax::ExperimentConfig cfg = submax::parse_config_file(config_path);
  submax::validate_config(cfg);
  if (cfg.output_path.empty())
    throw submax::ConfigError("config: 'run' needs an 'output' path");
  const auto records = submax::run_experiment(cfg);
  submax::emit_csv(records, cfg.output_path);
  std::cout << "wrote " << records.size() << " record(s) to " << cfg.output_path << "\n";
  for (const auto& r : records) {
    std::cout << "  " << r.solver << " k=" << r.k << " t=" << r.t
              << " value_rounded=" << r.value_rounded
              << " value_continuous=" << r.value_continuous << " evals=" << r.evals
              << "\n";
  }
  return 0;
}

int validate_command(const std::string& config_path) {
  submax::ExperimentConfig cfg = submax::parse_config_file(config_path);
  submax::validate_config(cfg);
  std::cout << "config ok: id=" << cfg.config_id << " objective=" << cfg.objective
            << " solver=" << cfg.solver << " constraint=" << cfg.constraint
            << " points=" << std::max(cfg.ks.size(), cfg.Ts.size())
            << " seed=" << cfg.seed << "\n";
  return 0;
}

int gen_synthetic_command(int users, int items, double density, int rmax,
                          std::uint64_t seed, const std::string& out) {
  const submax::RatingsMatrix R =
      submax::gen_synthetic_ratings(users, items, density, rmax, seed);
  submax::write_ratings_tsv(R, out);
  std::cout << "wrote " << R.entry_count() << " ratings (" << R.n_users << " users x "
            << R.n_items << " items, max " << R.max_rating << ") to " << out << "\n";
  return 0;
}

int inspect_command(const std::string& path, const std::string& format) {
  const auto loaded =
      submax::load_ratings(path, submax::ratings_format_from_string(format));
  std::cout << path << ": " << loaded.report.describe() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monotone submodular maximization experiments"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "execute a config and write its CSV");
  run->add_option("config", config_path, "experiment config file")->required();

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "check a config without running it");
  validate->add_option("config", validate_path, "experiment config file")->required();

  int users = 500, items = 200, rmax = 5;
  double density = 0.15;
  std::uint64_t seed = 1;
  std::string out_path = "ratings.tsv";
  auto* gen = app.add_subcommand("gen-synthetic", "generate a seeded ratings file");
  gen->add_option("--users", users, "number of users");
  gen->add_option("--items", items, "number of items");
  gen->add_option("--density", density, "fraction of present ratings");
  gen->add_option("--rmax", rmax, "largest rating");
  gen->add_option("--seed", seed, "generator seed");
  gen->add_option("--out", out_path, "output tsv path");

  std::string inspect_path, inspect_format = "tsv";
  auto* inspect = app.add_subcommand("inspect", "parse a ratings file and report");
  inspect->add_option("file", inspect_path, "ratings file")->required();
  inspect->add_option("--format", inspect_format, "movielens-1m | tsv");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_command(config_path);
    if (validate->parsed()) return validate_command(validate_path);
    if (gen->parsed())
      return gen_synthetic_command(users, items, density, rmax, seed, out_path);
    if (inspect->parsed()) return inspect_command(inspect_path, inspect_format);
  } catch (const submax::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const submax::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const submax::InputError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const submax::CapabilityError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
