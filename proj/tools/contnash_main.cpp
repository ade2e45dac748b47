#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "contnash/errors.h"
#include "contnash/experiment.h"

namespace {

using namespace contnash;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_run(const std::string& config_path, const std::string& out_dir, int trials,
            long long seed) {
  ExperimentConfig config = parse_config(read_file(config_path));
  if (!out_dir.empty()) config.out_dir = out_dir;
  if (trials > 0) config.trials = trials;
  if (seed >= 0) config.seed = static_cast<std::uint64_t>(seed);

  std::fprintf(stderr, "running %s: %d trial(s), %d step(s), batch %d, optimizer %s\n",
               game_family_name(config.game).c_str(), config.trials, config.train.steps,
               config.train.batch_size, optimizer_name(config.train.optimizer).c_str());
  RunArtifacts artifacts = run_experiment(config);
  std::printf("wrote %zu file(s) under %s\n", artifacts.files.size(), config.out_dir.c_str());
  std::printf("manifest: %s\n", artifacts.manifest_path.c_str());
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& checkpoint, int trial) {
  ExperimentConfig config = parse_config(read_file(config_path));
  RegretReport report = evaluate_checkpoint(config, checkpoint, trial);
  std::fputs(csv_to_string(regret_report_to_csv(report)).c_str(), stdout);
  std::printf("mean_regret,%s\n", format_double(report.mean_regret).c_str());
  std::printf("max_regret,%s\n", format_double(report.max_regret).c_str());
  return 0;
}

int cmd_oracle(const std::string& game_name, int grid_n) {
  GameFamily family = game_family_from_name(game_name);
  switch (family) {
    case GameFamily::DistIsing1D: {
      OracleProfile profile = dist_ising_fixed_point(DistIsingOracleParams{}, grid_n);
      std::printf("player_0,action_0\n");
      for (std::size_t k = 0; k < profile.grid.size(); ++k) {
        std::printf("%s,%s\n", format_double(profile.grid[k][0]).c_str(),
                    format_double(profile.actions[k][0]).c_str());
      }
      return 0;
    }
    case GameFamily::Cournot: {
      double q = cournot_aggregate_oracle(CournotOracleParams{}, std::max(grid_n, 1000));
      std::printf("aggregate_output,%s\n", format_double(q).c_str());
      return 0;
    }
    case GameFamily::Ising1D: {
      OracleProfile profile = ising_br_iteration(IsingOracleParams{}, grid_n, 1000);
      std::printf("converged,%s\n", profile.converged ? "true" : "false");
      std::printf("player_0,action_0\n");
      for (std::size_t k = 0; k < profile.grid.size(); ++k) {
        std::printf("%s,%s\n", format_double(profile.grid[k][0]).c_str(),
                    format_double(profile.actions[k][0]).c_str());
      }
      return 0;
    }
    default:
      throw ConfigError("no oracle implemented for game '" + game_name + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"equilibrium solver for continuum-player games"};
  app.require_subcommand(1);

  std::string config_path, out_dir, checkpoint, game_name;
  int trials = 0, trial = 0, grid_n = 201;
  long long seed = -1;

  CLI::App* run = app.add_subcommand("run", "run a multi-trial training experiment");
  run->add_option("config", config_path, "experiment config JSON")->required();
  run->add_option("--out", out_dir, "output directory (overrides config)");
  run->add_option("--trials", trials, "trial count (overrides config)");
  run->add_option("--seed", seed, "root seed (overrides config)");

  CLI::App* eval = app.add_subcommand("eval", "re-run the regret report for a checkpoint");
  eval->add_option("config", config_path, "experiment config JSON")->required();
  eval->add_option("--checkpoint", checkpoint, "parameter checkpoint file")->required();
  eval->add_option("--trial", trial, "trial index whose eval stream to replay");

  CLI::App* oracle = app.add_subcommand("oracle", "print an independent equilibrium oracle");
  oracle->add_option("game", game_name, "game family (dist_ising1d, cournot, ising1d)")
      ->required();
  oracle->add_option("--grid", grid_n, "oracle grid size");

  try {
    app.parse(argc, argv);
    if (run->parsed()) return cmd_run(config_path, out_dir, trials, seed);
    if (eval->parsed()) return cmd_eval(config_path, checkpoint, trial);
    if (oracle->parsed()) return cmd_oracle(game_name, grid_n);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const contnash::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const contnash::NumericError& e) {
    std::fprintf(stderr, "numeric abort: %s\n", e.what());
    return 2;
  } catch (const contnash::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
