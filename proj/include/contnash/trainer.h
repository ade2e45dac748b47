#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "contnash/games.h"
#include "contnash/net.h"
#include "contnash/rng.h"

namespace contnash {

enum class OptimizerKind { SGA, OGA, Adam };

OptimizerKind optimizer_from_name(const std::string& name);
std::string optimizer_name(OptimizerKind kind);

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::Adam;
  double alpha = 1e-3;                 // step size
  double beta = 0.0;                   // OGA extrapolation weight
  int batch_size = 256;
  int steps = 1000;
  double action_smoothing_sigma = 0.0; // 0 = analytic action derivative
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
};

struct TrainerState {
  PlayerStrategyNet net;
  std::optional<ParamGradient> previous_gradient;  // OGA, from iteration 2 on
  std::optional<ParamGradient> adam_m;
  std::optional<ParamGradient> adam_v;
  int iteration = 0;
};

struct IterationRow {
  int iteration = 0;
  double wall_time_s = 0.0;
  double grad_norm = 0.0;
  std::optional<double> mean_regret;
  std::optional<double> max_regret;
};

using IterationLog = std::vector<IterationRow>;

// One sampled shared-parameter simultaneous gradient: sample a player (and
// noise), produce the override action from the live parameters, estimate the
// utility against the frozen profile, scale by mu(I), and backpropagate the
// action derivative through the live forward pass only.
ParamGradient spsg_sample(const PlayerStrategyNet& net, const Game& game, RngStream rng,
                          double action_smoothing_sigma = 0.0);

// Same estimator with an explicitly separate frozen profile net (the live and
// frozen parameter sets coincide in training; tests may split them).
ParamGradient spsg_sample(const PlayerStrategyNet& live, const PlayerStrategyNet& frozen,
                          const Game& game, RngStream rng, double action_smoothing_sigma = 0.0);

// Gaussian-smoothing pseudo-gradient sample: (1/sigma) * f(a + sigma z) * z,
// z standard normal of the action's dimension.
std::vector<double> smoothed_action_grad(
    const std::function<double(std::span<const double>)>& value_fn, std::span<const double> action,
    double sigma, RngStream& rng);

// Mean of batch_size spsg samples, each on its own derived substream, summed
// in slot order so the result does not depend on evaluation order.
ParamGradient batch_gradient(const PlayerStrategyNet& net, const Game& game, int batch_size,
                             RngStream rng, double action_smoothing_sigma = 0.0);

// Ascent updates. sga: p += alpha g. oga adds beta (g - g_prev), bootstrapped
// with g_prev := g on the first step. adam is the bias-corrected
// adaptive-moment rule, ascent direction.
void sga_step(TrainerState& state, const ParamGradient& grad, double alpha);
void oga_step(TrainerState& state, const ParamGradient& grad, double alpha, double beta);
void adam_step(TrainerState& state, const ParamGradient& grad, double alpha, double beta1,
               double beta2, double eps);

// eval_fn(net, iteration) -> (mean_regret, max_regret); invoked at iteration 0,
// every eval_every iterations (when > 0), and after the final step. Rows are
// logged every log_every iterations and whenever an eval runs. Throws
// NumericError if parameters or gradients go non-finite.
TrainerState train(
    const PlayerStrategyNet& net, const Game& game, const TrainConfig& config, IterationLog& log,
    int eval_every = 0,
    const std::function<std::pair<double, double>(const PlayerStrategyNet&, int)>& eval_fn = {},
    int log_every = 100);

}  // namespace contnash
