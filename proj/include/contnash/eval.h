#pragma once

#include <functional>
#include <string>
#include <vector>

#include "contnash/games.h"
#include "contnash/rng.h"

namespace contnash {

// Per-player regret estimates on a discretized player set plus the mean
// (exploitability) and max aggregates. Raw values are reported unclamped so
// Monte-Carlo bias stays visible.
struct RegretReport {
  std::vector<std::vector<double>> player_points;
  std::vector<double> regrets;
  double mean_regret = 0.0;
  double max_regret = 0.0;
  int n_action_grid = 0;
  int n_samples = 0;
};

// Discretized action grid for a best-response search: equally spaced points
// for 1-D sets, Roberts points rescaled to the box otherwise. Ball sets have
// no implemented game and are rejected.
std::vector<std::vector<double>> action_grid(const OutputMap& set, int n);

// Player evaluation grid: n equally spaced points on [0,1] in 1-D, the first
// n Roberts points in higher dimension.
std::vector<std::vector<double>> player_grid(int player_dim, int n);

// Mean of n_samples single-sample utility estimates at a fixed action.
// Sample k draws its context from rng.child(k), so calls sharing an rng share
// contexts (common random numbers) across actions.
double expected_utility(const Game& game, const Profile& profile, std::span<const double> player,
                        std::span<const double> action, int n_samples, const RngStream& rng);

// Best grid action's expected utility minus the player's current expected
// utility. The same sampled contexts back every candidate action, and the
// current utility marginalizes over n_samples fresh own-noise draws when the
// game is noisy.
double player_regret(const Game& game, const Profile& profile, std::span<const double> player,
                     int n_action_grid, int n_samples, const RngStream& rng);

RegretReport regret_report(const Game& game, const Profile& profile, int n_players,
                           int n_action_grid, int n_samples, const RngStream& rng);

// ---------------------------------------------------------------------------
// Independent equilibrium oracles (verification only; no Monte Carlo).

struct OracleProfile {
  std::vector<std::vector<double>> grid;
  std::vector<std::vector<double>> actions;
  std::string method;
  bool converged = true;
};

struct DistIsingOracleParams {
  double nu_scale = 0.1;
  std::function<double(double)> bias;  // defaults to the 1-D benchmark field
};

// Fixed point of the per-player first-order condition
//   s(i) = clamp( (b(i) + integral s dnu(i)) / (1 + |nu(i)|), -1, 1 )
// on an equally spaced grid with trapezoid quadrature for both the integral
// and the mass (a self-consistent discretized game). The iteration is a
// sup-norm contraction with factor mass/(1+mass) < 1; clamping is
// 1-Lipschitz so convergence is preserved. Stops at sup-change <= 1e-10.
OracleProfile dist_ising_fixed_point(const DistIsingOracleParams& params, int grid_n);

// Grid-regret of an oracle profile under exact trapezoid quadrature (no MC);
// used for oracle self-consistency checks.
double dist_ising_quadrature_regret(const DistIsingOracleParams& params,
                                    const OracleProfile& profile);

struct CournotOracleParams {
  double price_intercept = 2.0;
  double price_slope = 1.8;
  std::function<double(double)> marginal_cost;  // defaults to the benchmark curve
};

// Equilibrium aggregate output: a measure-zero firm best-responds with q = 1
// exactly when c(i) < a - b Q, so Q* solves Q = lambda{ i : c(i) < a - b Q }.
// The threshold measure is computed on a fine grid with linear interpolation
// at crossings, and the unique root is found by bisection to |residual| <= 1e-6.
double cournot_aggregate_oracle(const CournotOracleParams& params, int grid_n);

// Threshold measure lambda{ i in [0,1] : c(i) < t } used by the oracle.
double cournot_threshold_measure(const CournotOracleParams& params, double t, int grid_n);

struct IsingOracleParams {
  double nu_scale = 0.1;
  double coupling = 1.0;  // multiplier on nu; 0 disables the conformity term
  std::function<double(double)> bias;  // defaults to the 1-D benchmark field
};

// Synchronous best-response iteration s <- sign(b + integral s dnu) from
// s = sign(b). BR dynamics need not converge; non-convergence is reported in
// the flag, never thrown.
OracleProfile ising_br_iteration(const IsingOracleParams& params, int grid_n, int max_iters);

double ising_quadrature_regret(const IsingOracleParams& params, const OracleProfile& profile);

}  // namespace contnash
