#include "contnash/experiment.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "contnash/errors.h"
#include "contnash/measures.h"
#include "contnash/svg.h"
#include "json.hpp"

namespace contnash {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

[[noreturn]] void config_fail(const std::string& where, const std::string& what) {
  throw ConfigError("config error at " + where + ": " + what);
}

void reject_unknown_keys(const json& obj, const std::string& where,
                         std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* key : allowed) {
      if (it.key() == key) { known = true; break; }
    }
    if (!known) config_fail(where + "/" + it.key(), "unknown key \"" + it.key() + "\"");
  }
}

template <typename T>
T get_field(const json& obj, const std::string& where, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    config_fail(where + "/" + key, e.what());
  }
}

int line_of_byte(const std::string& text, std::size_t byte) {
  int line = 1;
  for (std::size_t k = 0; k < byte && k < text.size(); ++k) {
    if (text[k] == '\n') ++line;
  }
  return line;
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t x) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed JSON (line " + std::to_string(line_of_byte(text, e.byte)) +
                      "): " + e.what());
  }
  if (!root.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown_keys(root, "", {"game", "game_params", "net", "train", "eval", "trials", "seed",
                                 "out_dir", "log_every"});

  ExperimentConfig c;
  if (!root.contains("game")) config_fail("/game", "missing required key");
  try {
    c.game = game_family_from_name(root.at("game").get<std::string>());
  } catch (const std::invalid_argument& e) {
    config_fail("/game", e.what());
  } catch (const json::exception& e) {
    config_fail("/game", e.what());
  }

  if (root.contains("game_params")) {
    const json& gp = root.at("game_params");
    reject_unknown_keys(gp, "/game_params",
                        {"nu_scale", "price_intercept", "price_slope", "kernel_scale"});
    c.game_params.nu_scale = get_field(gp, "/game_params", "nu_scale", c.game_params.nu_scale);
    c.game_params.price_intercept =
        get_field(gp, "/game_params", "price_intercept", c.game_params.price_intercept);
    c.game_params.price_slope =
        get_field(gp, "/game_params", "price_slope", c.game_params.price_slope);
    c.game_params.kernel_scale =
        get_field(gp, "/game_params", "kernel_scale", c.game_params.kernel_scale);
    if (c.game_params.nu_scale <= 0.0) config_fail("/game_params/nu_scale", "must be > 0");
    if (c.game_params.kernel_scale <= 0.0) config_fail("/game_params/kernel_scale", "must be > 0");
  }

  if (root.contains("net")) {
    const json& n = root.at("net");
    reject_unknown_keys(n, "/net", {"fourier_features", "fourier_init_std", "hidden", "noise_dim"});
    c.net.fourier_features = get_field(n, "/net", "fourier_features", c.net.fourier_features);
    c.net.fourier_init_std = get_field(n, "/net", "fourier_init_std", c.net.fourier_init_std);
    c.net.hidden = get_field(n, "/net", "hidden", c.net.hidden);
    c.net.noise_dim = get_field(n, "/net", "noise_dim", c.net.noise_dim);
    if (c.net.fourier_features < 1) config_fail("/net/fourier_features", "must be >= 1");
    for (int h : c.net.hidden) {
      if (h < 1) config_fail("/net/hidden", "layer sizes must be >= 1");
    }
    if (c.net.noise_dim < -1) config_fail("/net/noise_dim", "must be >= 0 (or -1 for default)");
  }
  if (c.net.noise_dim < 0) c.net.noise_dim = default_noise_dim(c.game);

  if (root.contains("train")) {
    const json& t = root.at("train");
    reject_unknown_keys(t, "/train",
                        {"optimizer", "alpha", "beta", "batch_size", "steps",
                         "action_smoothing_sigma", "adam_beta1", "adam_beta2", "adam_eps"});
    if (t.contains("optimizer")) {
      try {
        c.train.optimizer = optimizer_from_name(t.at("optimizer").get<std::string>());
      } catch (const std::invalid_argument& e) {
        config_fail("/train/optimizer", e.what());
      } catch (const json::exception& e) {
        config_fail("/train/optimizer", e.what());
      }
    }
    c.train.alpha = get_field(t, "/train", "alpha", c.train.alpha);
    c.train.beta = get_field(t, "/train", "beta", c.train.beta);
    c.train.batch_size = get_field(t, "/train", "batch_size", c.train.batch_size);
    c.train.steps = get_field(t, "/train", "steps", c.train.steps);
    c.train.action_smoothing_sigma =
        get_field(t, "/train", "action_smoothing_sigma", c.train.action_smoothing_sigma);
    c.train.adam_beta1 = get_field(t, "/train", "adam_beta1", c.train.adam_beta1);
    c.train.adam_beta2 = get_field(t, "/train", "adam_beta2", c.train.adam_beta2);
    c.train.adam_eps = get_field(t, "/train", "adam_eps", c.train.adam_eps);
    if (c.train.alpha <= 0.0) config_fail("/train/alpha", "must be > 0");
    if (c.train.beta < 0.0) config_fail("/train/beta", "must be >= 0");
    if (c.train.batch_size < 1) config_fail("/train/batch_size", "must be >= 1");
    if (c.train.steps < 0) config_fail("/train/steps", "must be >= 0");
    if (c.train.action_smoothing_sigma < 0.0)
      config_fail("/train/action_smoothing_sigma", "must be >= 0");
  }

  if (root.contains("eval")) {
    const json& e = root.at("eval");
    reject_unknown_keys(e, "/eval", {"every", "players", "action_grid", "samples",
                                     "profile_samples", "histogram_bins"});
    c.eval.every = get_field(e, "/eval", "every", c.eval.every);
    c.eval.players = get_field(e, "/eval", "players", c.eval.players);
    c.eval.action_grid = get_field(e, "/eval", "action_grid", c.eval.action_grid);
    c.eval.samples = get_field(e, "/eval", "samples", c.eval.samples);
    c.eval.profile_samples = get_field(e, "/eval", "profile_samples", c.eval.profile_samples);
    c.eval.histogram_bins = get_field(e, "/eval", "histogram_bins", c.eval.histogram_bins);
    if (c.eval.every < 0) config_fail("/eval/every", "must be >= 0");
    if (c.eval.players < 2) config_fail("/eval/players", "must be >= 2");
    if (c.eval.action_grid < 2) config_fail("/eval/action_grid", "must be >= 2");
    if (c.eval.samples < 1) config_fail("/eval/samples", "must be >= 1");
    if (c.eval.profile_samples < 1) config_fail("/eval/profile_samples", "must be >= 1");
    if (c.eval.histogram_bins < 1) config_fail("/eval/histogram_bins", "must be >= 1");
  }
  if (c.eval.every == 0) c.eval.every = std::max(c.train.steps, 1);
  if (c.train.steps > 0 && c.train.steps % c.eval.every != 0) {
    config_fail("/eval/every", "must divide train.steps (" + std::to_string(c.eval.every) +
                                   " does not divide " + std::to_string(c.train.steps) + ")");
  }

  c.trials = get_field(root, "", "trials", c.trials);
  if (c.trials < 1) config_fail("/trials", "must be >= 1");
  c.seed = get_field(root, "", "seed", c.seed);
  c.log_every = get_field(root, "", "log_every", c.log_every);
  if (c.log_every < 0) config_fail("/log_every", "must be >= 0");
  c.out_dir = get_field<std::string>(root, "", "out_dir",
                                     "runs/" + game_family_name(c.game));
  return c;
}

std::string serialize_config(const ExperimentConfig& c) {
  json root;
  root["game"] = game_family_name(c.game);
  root["game_params"] = {{"nu_scale", c.game_params.nu_scale},
                         {"price_intercept", c.game_params.price_intercept},
                         {"price_slope", c.game_params.price_slope},
                         {"kernel_scale", c.game_params.kernel_scale}};
  root["net"] = {{"fourier_features", c.net.fourier_features},
                 {"fourier_init_std", c.net.fourier_init_std},
                 {"hidden", c.net.hidden},
                 {"noise_dim", c.net.noise_dim}};
  root["train"] = {{"optimizer", optimizer_name(c.train.optimizer)},
                   {"alpha", c.train.alpha},
                   {"beta", c.train.beta},
                   {"batch_size", c.train.batch_size},
                   {"steps", c.train.steps},
                   {"action_smoothing_sigma", c.train.action_smoothing_sigma},
                   {"adam_beta1", c.train.adam_beta1},
                   {"adam_beta2", c.train.adam_beta2},
                   {"adam_eps", c.train.adam_eps}};
  root["eval"] = {{"every", c.eval.every},
                  {"players", c.eval.players},
                  {"action_grid", c.eval.action_grid},
                  {"samples", c.eval.samples},
                  {"profile_samples", c.eval.profile_samples},
                  {"histogram_bins", c.eval.histogram_bins}};
  root["trials"] = c.trials;
  root["seed"] = c.seed;
  root["out_dir"] = c.out_dir;
  root["log_every"] = c.log_every;
  return root.dump(2) + "\n";
}

std::string config_hash(const ExperimentConfig& config) {
  return hex64(fnv1a64(serialize_config(config)));
}

Game game_from_config(const ExperimentConfig& config) {
  return make_game(config.game, config.game_params, config.net.noise_dim);
}

PlayerStrategyNet net_from_config(const ExperimentConfig& config, const Game& game,
                                  std::uint64_t init_seed) {
  return init_p2sn(game.player_dim, config.net.fourier_features, config.net.hidden,
                   game.noise_dim, game.action_set, init_seed, config.net.fourier_init_std);
}

CsvTable regret_report_to_csv(const RegretReport& report) {
  CsvTable table;
  std::size_t pd = report.player_points.empty() ? 1 : report.player_points[0].size();
  for (std::size_t k = 0; k < pd; ++k) table.header.push_back("player_" + std::to_string(k));
  table.header.push_back("regret");
  for (std::size_t p = 0; p < report.regrets.size(); ++p) {
    std::vector<std::optional<double>> row;
    for (double x : report.player_points[p]) row.push_back(x);
    row.push_back(report.regrets[p]);
    table.add_row(row);
  }
  return table;
}

namespace {

std::string trial_dir_name(int t) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "trial_%02d", t);
  return buf;
}

CsvTable curve_to_csv(const IterationLog& log) {
  CsvTable table;
  table.header = {"iteration", "grad_norm", "mean_regret", "max_regret"};
  for (const IterationRow& row : log) {
    std::vector<std::string> cells;
    cells.push_back(std::to_string(row.iteration));
    cells.push_back(row.iteration == 0 ? "" : format_double(row.grad_norm));
    cells.push_back(row.mean_regret ? format_double(*row.mean_regret) : "");
    cells.push_back(row.max_regret ? format_double(*row.max_regret) : "");
    table.add_row(cells);
  }
  return table;
}

struct TrialResult {
  IterationLog log;
  PlayerStrategyNet final_net;
};

// Per-player strategy dump on the evaluation grid; noisy nets get
// `profile_samples` action draws per player instead of one deterministic row.
CsvTable profile_dump_csv(const ExperimentConfig& config, const Game& game,
                          const PlayerStrategyNet& net, RngStream dump_rng,
                          std::vector<std::vector<double>>* sampled_actions) {
  auto grid = player_grid(game.player_dim, config.eval.players);
  CsvTable table;
  for (int k = 0; k < game.player_dim; ++k) table.header.push_back("player_" + std::to_string(k));
  if (game.noise_dim > 0) table.header.push_back("sample");
  for (int k = 0; k < game.action_dim; ++k) table.header.push_back("action_" + std::to_string(k));

  std::vector<double> noise(game.noise_dim);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    if (game.noise_dim == 0) {
      auto action = forward(net, grid[p], {});
      std::vector<std::optional<double>> row;
      for (double x : grid[p]) row.push_back(x);
      for (double a : action) row.push_back(a);
      table.add_row(row);
      if (sampled_actions) sampled_actions->push_back(action);
    } else {
      RngStream prng = dump_rng.child(p);
      for (int s = 0; s < config.eval.profile_samples; ++s) {
        RngStream srng = prng.child(s);
        for (int k = 0; k < game.noise_dim; ++k) noise[k] = srng.normal();
        auto action = forward(net, grid[p], noise);
        std::vector<std::optional<double>> row;
        for (double x : grid[p]) row.push_back(x);
        row.push_back(static_cast<double>(s));
        for (double a : action) row.push_back(a);
        table.add_row(row);
        if (sampled_actions) sampled_actions->push_back(action);
      }
    }
  }
  return table;
}

CsvTable histogram_csv(const std::vector<std::vector<double>>& actions, int bins,
                       std::vector<double>* counts_out) {
  std::vector<long long> counts(static_cast<std::size_t>(bins) * bins, 0);
  for (const auto& a : actions) {
    int bx = std::min(bins - 1, std::max(0, static_cast<int>(a[0] * bins)));
    int by = std::min(bins - 1, std::max(0, static_cast<int>(a[1] * bins)));
    ++counts[static_cast<std::size_t>(by) * bins + bx];
  }
  CsvTable table;
  table.header = {"bin_x", "bin_y", "count"};
  for (int by = 0; by < bins; ++by) {
    for (int bx = 0; bx < bins; ++bx) {
      table.add_row(std::vector<std::string>{std::to_string(bx), std::to_string(by),
                                             std::to_string(counts[static_cast<std::size_t>(by) * bins + bx])});
    }
  }
  if (counts_out) {
    counts_out->assign(counts.begin(), counts.end());
  }
  return table;
}

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / xs.size();
}

double sem_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / (xs.size() - 1)) / std::sqrt(static_cast<double>(xs.size()));
}

}  // namespace

RunArtifacts run_experiment(const ExperimentConfig& config) {
  Game game = game_from_config(config);
  fs::path out_root(config.out_dir);
  fs::create_directories(out_root);

  RunArtifacts artifacts;
  artifacts.config_hash = config_hash(config);
  artifacts.version = kVersion;
  artifacts.manifest_path = (out_root / "manifest.json").string();

  auto emit = [&artifacts](const std::string& path) { artifacts.files.push_back(path); };

  auto write_manifest = [&]() {
    json m;
    m["config_hash"] = artifacts.config_hash;
    m["version"] = artifacts.version;
    m["status"] = artifacts.status;
    m["partial"] = artifacts.partial;
    m["files"] = artifacts.files;
    std::ofstream out(artifacts.manifest_path, std::ios::binary);
    if (!out) throw IoError("cannot write manifest: " + artifacts.manifest_path);
    out << m.dump(2) << '\n';
  };

  {
    std::string cfg_path = (out_root / "config.json").string();
    std::ofstream out(cfg_path, std::ios::binary);
    if (!out) throw IoError("cannot write config copy: " + cfg_path);
    out << serialize_config(config);
    emit(cfg_path);
  }

  std::vector<TrialResult> results;
  try {
    for (int t = 0; t < config.trials; ++t) {
      RngStream trial_rng = derive_stream(config.seed, {rng_tag::kTrial, static_cast<std::uint64_t>(t)});
      PlayerStrategyNet net = net_from_config(config, game, trial_rng.child(rng_tag::kInit).key());

      TrainConfig tc = config.train;
      tc.seed = trial_rng.child(rng_tag::kTrain).key();

      auto eval_fn = [&](const PlayerStrategyNet& n, int iteration) {
        Profile profile = make_net_profile(n);
        RegretReport report =
            regret_report(game, profile, config.eval.players, config.eval.action_grid,
                          config.eval.samples,
                          trial_rng.child(rng_tag::kEval, static_cast<std::uint64_t>(iteration)));
        return std::make_pair(report.mean_regret, report.max_regret);
      };

      TrialResult result;
      TrainerState state =
          train(net, game, tc, result.log, config.eval.every, eval_fn, config.log_every);
      result.final_net = std::move(state.net);

      fs::path tdir = out_root / trial_dir_name(t);
      fs::create_directories(tdir);

      std::string curve_path = (tdir / "curve.csv").string();
      write_csv(curve_to_csv(result.log), curve_path);
      emit(curve_path);

      std::vector<std::vector<double>> sampled_actions;
      CsvTable dump = profile_dump_csv(config, game, result.final_net,
                                       trial_rng.child(rng_tag::kProfileDump), &sampled_actions);
      std::string profile_path = (tdir / "profile.csv").string();
      write_csv(dump, profile_path);
      emit(profile_path);

      if (game.family == GameFamily::Crowding) {
        std::vector<double> counts;
        CsvTable hist = histogram_csv(sampled_actions, config.eval.histogram_bins, &counts);
        std::string hist_path = (tdir / "histogram.csv").string();
        write_csv(hist, hist_path);
        emit(hist_path);
        if (t == 0) {
          SvgHeatmap map;
          map.title = "action histogram (" + game.name + ", trial 0)";
          map.x_label = "action x";
          map.y_label = "action y";
          map.rows = config.eval.histogram_bins;
          map.cols = config.eval.histogram_bins;
          map.values = counts;
          std::string svg_path = (out_root / "histogram.svg").string();
          write_svg_heatmap(map, svg_path);
          emit(svg_path);
        }
      }

      std::string ckpt_path = (tdir / "checkpoint.bin").string();
      save_checkpoint(result.final_net, ckpt_path);
      emit(ckpt_path);

      results.push_back(std::move(result));
    }
  } catch (const NumericError& e) {
    artifacts.status = std::string("aborted: ") + e.what();
    artifacts.partial = true;
    write_manifest();
    emit(artifacts.manifest_path);
    throw;
  }

  // Cross-trial summary at the shared eval iterations.
  std::vector<int> eval_iters;
  for (const IterationRow& row : results[0].log) {
    if (row.mean_regret) eval_iters.push_back(row.iteration);
  }
  CsvTable summary;
  summary.header = {"iteration", "mean_regret_mean", "mean_regret_sem", "max_regret_mean",
                    "max_regret_sem"};
  std::vector<double> curve_x, curve_mean, curve_lo, curve_hi, curve_max;
  for (int it : eval_iters) {
    std::vector<double> means, maxes;
    for (const TrialResult& r : results) {
      for (const IterationRow& row : r.log) {
        if (row.iteration == it && row.mean_regret) {
          means.push_back(*row.mean_regret);
          maxes.push_back(*row.max_regret);
        }
      }
    }
    double mm = mean_of(means), ms = sem_of(means);
    double xm = mean_of(maxes), xs = sem_of(maxes);
    std::vector<std::string> cells = {std::to_string(it), format_double(mm), format_double(ms),
                                      format_double(xm), format_double(xs)};
    summary.add_row(cells);
    curve_x.push_back(it);
    curve_mean.push_back(mm);
    curve_lo.push_back(mm - ms);
    curve_hi.push_back(mm + ms);
    curve_max.push_back(xm);
  }
  std::string summary_path = (out_root / "summary.csv").string();
  write_csv(summary, summary_path);
  emit(summary_path);

  {
    SvgLinePlot plot;
    plot.title = "regret over training (" + game.name + ", mean of " +
                 std::to_string(config.trials) + " trials)";
    plot.x_label = "iteration";
    plot.y_label = "regret";
    SvgSeries mean_series{"mean regret", "#1f77b4", curve_x, curve_mean, curve_lo, curve_hi};
    SvgSeries max_series{"max regret", "#ff7f0e", curve_x, curve_max, {}, {}};
    plot.series = {mean_series, max_series};
    std::string svg_path = (out_root / "curves.svg").string();
    write_svg_line_plot(plot, svg_path);
    emit(svg_path);
  }

  if (game.noise_dim == 0) {
    std::string svg_path = (out_root / "profile.svg").string();
    if (game.player_dim == 1) {
      auto grid = player_grid(1, config.eval.players);
      SvgLinePlot plot;
      plot.title = "learned strategy profile (" + game.name + ", trial 0)";
      plot.x_label = "player";
      plot.y_label = "action";
      SvgSeries s{"action", "#1f77b4", {}, {}, {}, {}};
      for (const auto& p : grid) {
        s.x.push_back(p[0]);
        s.y.push_back(forward(results[0].final_net, p, {})[0]);
      }
      plot.series = {s};
      write_svg_line_plot(plot, svg_path);
    } else {
      constexpr int kLattice = 64;
      SvgHeatmap map;
      map.title = "learned strategy profile (" + game.name + ", trial 0)";
      map.x_label = "player x";
      map.y_label = "player y";
      map.rows = kLattice;
      map.cols = kLattice;
      map.values.resize(kLattice * kLattice);
      for (int r = 0; r < kLattice; ++r) {
        for (int c = 0; c < kLattice; ++c) {
          std::vector<double> p = {(c + 0.5) / kLattice, (r + 0.5) / kLattice};
          map.values[static_cast<std::size_t>(r) * kLattice + c] =
              forward(results[0].final_net, p, {})[0];
        }
      }
      write_svg_heatmap(map, svg_path);
    }
    emit(svg_path);
  }

  write_manifest();
  emit(artifacts.manifest_path);
  return artifacts;
}

RegretReport evaluate_checkpoint(const ExperimentConfig& config, const std::string& checkpoint_path,
                                 int trial) {
  Game game = game_from_config(config);
  PlayerStrategyNet net = load_checkpoint(checkpoint_path);
  if (net.player_dim != game.player_dim || net.noise_dim != game.noise_dim ||
      net.action_dim() != game.action_dim) {
    throw ConfigError("checkpoint dimensions do not match the configured game");
  }
  RngStream trial_rng =
      derive_stream(config.seed, {rng_tag::kTrial, static_cast<std::uint64_t>(trial)});
  Profile profile = make_net_profile(net);
  return regret_report(game, profile, config.eval.players, config.eval.action_grid,
                       config.eval.samples,
                       trial_rng.child(rng_tag::kEval, static_cast<std::uint64_t>(config.train.steps)));
}

}  // namespace contnash
