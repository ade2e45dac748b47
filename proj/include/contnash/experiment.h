#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "contnash/csvio.h"
#include "contnash/eval.h"
#include "contnash/games.h"
#include "contnash/trainer.h"

namespace contnash {

inline constexpr const char* kVersion = "0.1.0";

struct NetConfig {
  int fourier_features = 64;
  double fourier_init_std = 64.0;
  std::vector<int> hidden = {64, 64};
  int noise_dim = -1;  // -1 = family default; resolved at parse time

  bool operator==(const NetConfig&) const = default;
};

struct EvalConfig {
  int every = 0;  // 0 = endpoints only; resolved to a divisor of steps at parse
  int players = 256;
  int action_grid = 201;
  int samples = 200;
  int profile_samples = 16;   // per-player action draws dumped for noisy nets
  int histogram_bins = 64;    // crowding action histogram resolution

  bool operator==(const EvalConfig&) const = default;
};

struct ExperimentConfig {
  GameFamily game = GameFamily::Ising1D;
  GameParams game_params;
  NetConfig net;
  TrainConfig train;
  EvalConfig eval;
  int trials = 8;
  std::uint64_t seed = 0;
  std::string out_dir;
  int log_every = 100;

  bool operator==(const ExperimentConfig&) const = default;
};

// Parses and validates a JSON config; defaults are filled and recorded so
// parse(serialize(c)) == c. Unknown keys, malformed JSON, and inconsistent
// values throw ConfigError with a field diagnostic.
ExperimentConfig parse_config(const std::string& text);
std::string serialize_config(const ExperimentConfig& config);

// FNV-1a 64 hex digest of the canonical serialized config.
std::string config_hash(const ExperimentConfig& config);

Game game_from_config(const ExperimentConfig& config);
PlayerStrategyNet net_from_config(const ExperimentConfig& config, const Game& game,
                                  std::uint64_t init_seed);

struct RunArtifacts {
  std::vector<std::string> files;
  std::string manifest_path;
  std::string config_hash;
  std::string version;
  std::string status = "ok";
  bool partial = false;
};

// Runs `trials` independent training trials with periodic regret evaluation
// and writes per-trial curve/profile/checkpoint files, the cross-trial
// summary, SVG renderings, and a manifest. Deterministic bytes given
// (config, seed). A numeric abort writes the manifest with partial=true and
// rethrows.
RunArtifacts run_experiment(const ExperimentConfig& config);

// Re-runs the regret report for a stored checkpoint, using the same stream a
// full run would use for `trial` at iteration train.steps; the returned report
// matches that run's final curve row exactly.
RegretReport evaluate_checkpoint(const ExperimentConfig& config, const std::string& checkpoint_path,
                                 int trial = 0);

// Per-player regret CSV (header: player coordinate columns then regret).
CsvTable regret_report_to_csv(const RegretReport& report);

}  // namespace contnash
