#include "contnash/eval.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "contnash/measures.h"

namespace contnash {

std::vector<std::vector<double>> action_grid(const OutputMap& set, int n) {
  if (n < 2) throw std::invalid_argument("action_grid: need at least 2 points");
  switch (set.kind) {
    case OutputMap::Kind::Interval: {
      std::vector<std::vector<double>> grid;
      grid.reserve(n);
      for (double x : linspace(set.lo, set.hi, n)) grid.push_back({x});
      return grid;
    }
    case OutputMap::Kind::Box: {
      if (set.dim == 1) {
        std::vector<std::vector<double>> grid;
        for (double x : linspace(set.lo, set.hi, n)) grid.push_back({x});
        return grid;
      }
      auto pts = roberts_sequence(n, set.dim);
      for (auto& p : pts) {
        for (double& x : p) x = set.lo + (set.hi - set.lo) * x;
      }
      return pts;
    }
    case OutputMap::Kind::Ball:
      throw std::invalid_argument("action_grid: ball strategy sets have no grid search");
  }
  throw std::invalid_argument("action_grid: unknown output map kind");
}

std::vector<std::vector<double>> player_grid(int player_dim, int n) {
  if (n < 2) throw std::invalid_argument("player_grid: need at least 2 points");
  if (player_dim == 1) {
    std::vector<std::vector<double>> grid;
    grid.reserve(n);
    for (double x : linspace(0.0, 1.0, n)) grid.push_back({x});
    return grid;
  }
  return roberts_sequence(n, player_dim);
}

double expected_utility(const Game& game, const Profile& profile, std::span<const double> player,
                        std::span<const double> action, int n_samples, const RngStream& rng) {
  if (n_samples < 1) throw std::invalid_argument("expected_utility: n_samples must be >= 1");
  double sum = 0.0;
  for (int k = 0; k < n_samples; ++k) {
    RngStream sub = rng.child(k);
    UtilityContext ctx = game.sample_context(profile, player, sub);
    sum += game.utility_from_context(ctx, player, action).value;
  }
  return sum / n_samples;
}

double player_regret(const Game& game, const Profile& profile, std::span<const double> player,
                     int n_action_grid, int n_samples, const RngStream& rng) {
  RngStream neighbor_rng = rng.child(0);
  RngStream own_rng = rng.child(1);

  // One context set, shared by every candidate action and the current action.
  std::vector<UtilityContext> ctxs;
  ctxs.reserve(n_samples);
  for (int k = 0; k < n_samples; ++k) {
    RngStream sub = neighbor_rng.child(k);
    ctxs.push_back(game.sample_context(profile, player, sub));
  }

  auto grid = action_grid(game.action_set, n_action_grid);
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& a : grid) {
    double sum = 0.0;
    for (const UtilityContext& ctx : ctxs) sum += game.utility_from_context(ctx, player, a).value;
    best = std::max(best, sum / n_samples);
  }

  std::vector<double> noise(game.noise_dim);
  std::vector<double> current_action(game.action_dim);
  double current = 0.0;
  if (game.noise_dim == 0) {
    profile(player, noise, current_action);
    for (const UtilityContext& ctx : ctxs)
      current += game.utility_from_context(ctx, player, current_action).value;
  } else {
    // Mixed strategy: marginalize over fresh own-noise draws.
    for (int k = 0; k < n_samples; ++k) {
      RngStream sub = own_rng.child(k);
      for (int c = 0; c < game.noise_dim; ++c) noise[c] = sub.normal();
      profile(player, noise, current_action);
      current += game.utility_from_context(ctxs[k], player, current_action).value;
    }
  }
  current /= n_samples;
  return best - current;
}

RegretReport regret_report(const Game& game, const Profile& profile, int n_players,
                           int n_action_grid, int n_samples, const RngStream& rng) {
  if (n_players < 2) throw std::invalid_argument("regret_report: n_players must be >= 2");
  RegretReport report;
  report.player_points = player_grid(game.player_dim, n_players);
  report.n_action_grid = n_action_grid;
  report.n_samples = n_samples;
  report.regrets.reserve(n_players);
  double sum = 0.0;
  double max_r = -std::numeric_limits<double>::infinity();
  for (int p = 0; p < n_players; ++p) {
    double r = player_regret(game, profile, report.player_points[p], n_action_grid, n_samples,
                             rng.child(p));
    report.regrets.push_back(r);
    sum += r;
    max_r = std::max(max_r, r);
  }
  report.mean_regret = sum / n_players;
  report.max_regret = max_r;
  return report;
}

// ---------------------------------------------------------------------------
// Oracles. All 1-D, quadrature-based, Monte-Carlo free.

namespace {

double default_bias_1d(double i) { return ising_bias_1d(i); }

// Trapezoid weights of the truncated Gaussian density around grid point i:
// W[i][j] ~ dx * w_j * phi((x_j - x_i)/sigma)/sigma restricted to [0,1].
// Row sums are the (quadrature) masses.
std::vector<std::vector<double>> trunc_gauss_weights(const std::vector<double>& grid,
                                                     double sigma, double coupling = 1.0) {
  int n = static_cast<int>(grid.size());
  double dx = grid[1] - grid[0];
  std::vector<std::vector<double>> w(n, std::vector<double>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double z = (grid[j] - grid[i]) / sigma;
      double density = std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
      double trap = (j == 0 || j == n - 1) ? 0.5 : 1.0;
      w[i][j] = coupling * dx * trap * density;
    }
  }
  return w;
}

}  // namespace

OracleProfile dist_ising_fixed_point(const DistIsingOracleParams& params, int grid_n) {
  if (grid_n < 3) throw std::invalid_argument("dist_ising_fixed_point: grid_n must be >= 3");
  auto bias = params.bias ? params.bias : default_bias_1d;
  std::vector<double> grid = linspace(0.0, 1.0, grid_n);
  auto w = trunc_gauss_weights(grid, params.nu_scale);
  std::vector<double> mass(grid_n, 0.0);
  for (int i = 0; i < grid_n; ++i) {
    for (double x : w[i]) mass[i] += x;
  }
  std::vector<double> s(grid_n), next(grid_n);
  for (int i = 0; i < grid_n; ++i) s[i] = std::clamp(bias(grid[i]), -1.0, 1.0);

  for (int iter = 0; iter < 100000; ++iter) {
    double sup_change = 0.0;
    for (int i = 0; i < grid_n; ++i) {
      double integral = 0.0;
      for (int j = 0; j < grid_n; ++j) integral += w[i][j] * s[j];
      double x = (bias(grid[i]) + integral) / (1.0 + mass[i]);
      next[i] = std::clamp(x, -1.0, 1.0);
      sup_change = std::max(sup_change, std::abs(next[i] - s[i]));
    }
    s.swap(next);
    if (sup_change <= 1e-10) break;
  }

  OracleProfile out;
  out.method = "fixed_point";
  out.grid.reserve(grid_n);
  out.actions.reserve(grid_n);
  for (int i = 0; i < grid_n; ++i) {
    out.grid.push_back({grid[i]});
    out.actions.push_back({s[i]});
  }
  return out;
}

double dist_ising_quadrature_regret(const DistIsingOracleParams& params,
                                    const OracleProfile& profile) {
  auto bias = params.bias ? params.bias : default_bias_1d;
  int n = static_cast<int>(profile.grid.size());
  std::vector<double> grid(n);
  for (int i = 0; i < n; ++i) grid[i] = profile.grid[i][0];
  auto w = trunc_gauss_weights(grid, params.nu_scale);

  double max_regret = 0.0;
  for (int i = 0; i < n; ++i) {
    double mass = 0.0, integral_s = 0.0, integral_s2 = 0.0;
    for (int j = 0; j < n; ++j) {
      mass += w[i][j];
      integral_s += w[i][j] * profile.actions[j][0];
      integral_s2 += w[i][j] * profile.actions[j][0] * profile.actions[j][0];
    }
    double b = bias(grid[i]);
    auto utility = [&](double a) {
      return -(a - b) * (a - b) - (mass * a * a - 2.0 * a * integral_s + integral_s2);
    };
    double best_a = std::clamp((b + integral_s) / (1.0 + mass), -1.0, 1.0);
    double r = utility(best_a) - utility(profile.actions[i][0]);
    max_regret = std::max(max_regret, r);
  }
  return max_regret;
}

double cournot_threshold_measure(const CournotOracleParams& params, double t, int grid_n) {
  auto cost = params.marginal_cost ? params.marginal_cost
                                   : std::function<double(double)>(cournot_marginal_cost);
  // Cells where c crosses t contribute the linearly interpolated fraction, so
  // the measure is continuous in t and bisection can hit a 1e-6 residual.
  double measure = 0.0;
  double dx = 1.0 / grid_n;
  double c_left = cost(0.0);
  for (int k = 0; k < grid_n; ++k) {
    double c_right = cost((k + 1) * dx);
    bool in_left = c_left < t;
    bool in_right = c_right < t;
    if (in_left && in_right) {
      measure += dx;
    } else if (in_left != in_right) {
      double frac = (t - c_left) / (c_right - c_left);
      measure += dx * (in_left ? frac : 1.0 - frac);
    }
    c_left = c_right;
  }
  return measure;
}

double cournot_aggregate_oracle(const CournotOracleParams& params, int grid_n) {
  if (grid_n < 1000) throw std::invalid_argument("cournot_aggregate_oracle: grid_n must be >= 1000");
  auto residual = [&](double q) {
    return cournot_threshold_measure(params, params.price_intercept - params.price_slope * q,
                                     grid_n) -
           q;
  };
  // residual is decreasing in q; bracket [0,1] always contains the crossing.
  double lo = 0.0, hi = 1.0;
  double r_lo = residual(lo);
  if (r_lo <= 0.0) return 0.0;
  if (residual(hi) >= 0.0) return 1.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    double r = residual(mid);
    if (std::abs(r) <= 1e-7) return mid;
    (r > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

OracleProfile ising_br_iteration(const IsingOracleParams& params, int grid_n, int max_iters) {
  auto bias = params.bias ? params.bias : default_bias_1d;
  std::vector<double> grid = linspace(0.0, 1.0, grid_n);
  auto w = trunc_gauss_weights(grid, params.nu_scale, params.coupling);

  auto sign = [](double x) { return x >= 0.0 ? 1.0 : -1.0; };
  std::vector<double> s(grid_n), next(grid_n);
  for (int i = 0; i < grid_n; ++i) s[i] = sign(bias(grid[i]));

  bool converged = false;
  for (int iter = 0; iter < max_iters && !converged; ++iter) {
    converged = true;
    for (int i = 0; i < grid_n; ++i) {
      double drive = bias(grid[i]);
      for (int j = 0; j < grid_n; ++j) drive += w[i][j] * s[j];
      next[i] = sign(drive);
      if (next[i] != s[i]) converged = false;
    }
    s.swap(next);
  }

  OracleProfile out;
  out.method = "best_response_iteration";
  out.converged = converged;
  out.grid.reserve(grid_n);
  out.actions.reserve(grid_n);
  for (int i = 0; i < grid_n; ++i) {
    out.grid.push_back({grid[i]});
    out.actions.push_back({s[i]});
  }
  return out;
}

double ising_quadrature_regret(const IsingOracleParams& params, const OracleProfile& profile) {
  auto bias = params.bias ? params.bias : default_bias_1d;
  int n = static_cast<int>(profile.grid.size());
  std::vector<double> grid(n);
  for (int i = 0; i < n; ++i) grid[i] = profile.grid[i][0];
  auto w = trunc_gauss_weights(grid, params.nu_scale, params.coupling);

  double max_regret = 0.0;
  for (int i = 0; i < n; ++i) {
    double drive = bias(grid[i]);
    for (int j = 0; j < n; ++j) drive += w[i][j] * profile.actions[j][0];
    // utility is a * drive: the best response is sign(drive) at value |drive|
    double r = std::abs(drive) - profile.actions[i][0] * drive;
    max_regret = std::max(max_regret, r);
  }
  return max_regret;
}

}  // namespace contnash
