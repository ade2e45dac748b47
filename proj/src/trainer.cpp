#include "contnash/trainer.h"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "contnash/errors.h"

namespace contnash {

OptimizerKind optimizer_from_name(const std::string& name) {
  if (name == "sga") return OptimizerKind::SGA;
  if (name == "oga") return OptimizerKind::OGA;
  if (name == "adam") return OptimizerKind::Adam;
  throw std::invalid_argument("unknown optimizer '" + name + "'");
}

std::string optimizer_name(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::SGA: return "sga";
    case OptimizerKind::OGA: return "oga";
    case OptimizerKind::Adam: return "adam";
  }
  throw std::invalid_argument("unknown optimizer enum");
}

namespace {

// Shared worker: accumulates one SPSG sample, scaled by `scale`, into `acc`.
void spsg_accumulate(const PlayerStrategyNet& live, const PlayerStrategyNet& frozen,
                     const Game& game, RngStream rng, double smoothing_sigma, double scale,
                     ForwardTape& tape, ParamGradient& acc) {
  std::vector<double> player(game.player_dim);
  RngStream player_rng = rng.child(rng_tag::kPlayer);
  game.sample_player(player_rng, player);

  std::vector<double> noise(game.noise_dim);
  RngStream noise_rng = rng.child(rng_tag::kOwnNoise);
  for (int k = 0; k < game.noise_dim; ++k) noise[k] = noise_rng.normal();

  // Live forward pass: the only path the gradient flows through.
  forward_record(live, player, noise, tape);
  std::span<const double> action(tape.action);

  Profile frozen_profile = make_net_profile(frozen);
  RngStream utility_rng = rng.child(rng_tag::kUtility);
  UtilityContext ctx = game.sample_context(frozen_profile, player, utility_rng);

  std::vector<double> dvalue;
  if (smoothing_sigma > 0.0) {
    RngStream z_rng = rng.child(rng_tag::kSmoothing);
    auto value_fn = [&](std::span<const double> a) {
      return game.utility_from_context(ctx, player, a).value;
    };
    dvalue = smoothed_action_grad(value_fn, action, smoothing_sigma, z_rng);
  } else {
    dvalue = game.utility_from_context(ctx, player, action).dvalue_daction;
  }

  for (double& d : dvalue) d *= game.total_mass;
  backward_accumulate(live, tape, player, dvalue, scale, acc);
}

}  // namespace

ParamGradient spsg_sample(const PlayerStrategyNet& live, const PlayerStrategyNet& frozen,
                          const Game& game, RngStream rng, double action_smoothing_sigma) {
  ParamGradient g = zeros_like(live);
  ForwardTape tape;
  spsg_accumulate(live, frozen, game, rng, action_smoothing_sigma, 1.0, tape, g);
  return g;
}

ParamGradient spsg_sample(const PlayerStrategyNet& net, const Game& game, RngStream rng,
                          double action_smoothing_sigma) {
  return spsg_sample(net, net, game, rng, action_smoothing_sigma);
}

std::vector<double> smoothed_action_grad(
    const std::function<double(std::span<const double>)>& value_fn, std::span<const double> action,
    double sigma, RngStream& rng) {
  if (sigma <= 0.0) throw std::invalid_argument("smoothed_action_grad: sigma must be > 0");
  std::size_t d = action.size();
  std::vector<double> z(d), perturbed(d);
  for (std::size_t k = 0; k < d; ++k) {
    z[k] = rng.normal();
    perturbed[k] = action[k] + sigma * z[k];
  }
  double v = value_fn(perturbed);
  std::vector<double> grad(d);
  for (std::size_t k = 0; k < d; ++k) grad[k] = v * z[k] / sigma;
  return grad;
}

ParamGradient batch_gradient(const PlayerStrategyNet& net, const Game& game, int batch_size,
                             RngStream rng, double action_smoothing_sigma) {
  if (batch_size < 1) throw std::invalid_argument("batch_gradient: batch_size must be >= 1");
  ParamGradient acc = zeros_like(net);
  ForwardTape tape;
  for (int slot = 0; slot < batch_size; ++slot) {
    spsg_accumulate(net, net, game, rng.child(slot), action_smoothing_sigma, 1.0, tape, acc);
  }
  acc.scale(1.0 / batch_size);
  return acc;
}

void sga_step(TrainerState& state, const ParamGradient& grad, double alpha) {
  for_each_pair(state.net, grad, [alpha](double& p, double g) { p += alpha * g; });
}

void oga_step(TrainerState& state, const ParamGradient& grad, double alpha, double beta) {
  if (!state.previous_gradient) {
    // v(s_0) := v(s_1); the extrapolation term vanishes on the first step.
    sga_step(state, grad, alpha);
    state.previous_gradient = grad;
    return;
  }
  const ParamGradient& prev = *state.previous_gradient;
  // p += alpha g + beta (g - g_prev), done in one pass over the tree.
  ParamGradient step = grad;
  step.scale(alpha + beta);
  step.axpy(-beta, prev);
  for_each_pair(state.net, step, [](double& p, double g) { p += g; });
  state.previous_gradient = grad;
}

void adam_step(TrainerState& state, const ParamGradient& grad, double alpha, double beta1,
               double beta2, double eps) {
  if (!state.adam_m) {
    state.adam_m = zeros_like(state.net);
    state.adam_v = zeros_like(state.net);
    state.iteration = 0;
  }
  ++state.iteration;
  ParamGradient& m = *state.adam_m;
  ParamGradient& v = *state.adam_v;
  m.scale(beta1);
  m.axpy(1.0 - beta1, grad);
  ParamGradient grad_sq = grad;
  // elementwise square via the pair visitor on a scratch copy
  {
    ParamGradient& gs = grad_sq;
    for (double& x : gs.fourier_matrix) x *= x;
    for (auto& l : gs.layers) {
      for (double& x : l.weights) x *= x;
      for (double& x : l.biases) x *= x;
    }
  }
  v.scale(beta2);
  v.axpy(1.0 - beta2, grad_sq);

  double bc1 = 1.0 - std::pow(beta1, state.iteration);
  double bc2 = 1.0 - std::pow(beta2, state.iteration);

  auto apply = [&](double& p, double mk, double vk) {
    double m_hat = mk / bc1;
    double v_hat = vk / bc2;
    p += alpha * m_hat / (std::sqrt(v_hat) + eps);
  };
  for (std::size_t k = 0; k < state.net.fourier_matrix.size(); ++k)
    apply(state.net.fourier_matrix[k], m.fourier_matrix[k], v.fourier_matrix[k]);
  for (std::size_t l = 0; l < state.net.layers.size(); ++l) {
    for (std::size_t k = 0; k < state.net.layers[l].weights.size(); ++k)
      apply(state.net.layers[l].weights[k], m.layers[l].weights[k], v.layers[l].weights[k]);
    for (std::size_t k = 0; k < state.net.layers[l].biases.size(); ++k)
      apply(state.net.layers[l].biases[k], m.layers[l].biases[k], v.layers[l].biases[k]);
  }
}

TrainerState train(
    const PlayerStrategyNet& net, const Game& game, const TrainConfig& config, IterationLog& log,
    int eval_every,
    const std::function<std::pair<double, double>(const PlayerStrategyNet&, int)>& eval_fn,
    int log_every) {
  TrainerState state;
  state.net = net;
  if (!all_params_finite(state.net)) throw NumericError("train: initial parameters not finite");

  auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&t0]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  RngStream train_rng = RngStream(config.seed).child(rng_tag::kTrain);

  if (eval_fn) {
    IterationRow row;
    row.iteration = 0;
    row.grad_norm = 0.0;
    auto [mean_r, max_r] = eval_fn(state.net, 0);
    row.mean_regret = mean_r;
    row.max_regret = max_r;
    row.wall_time_s = elapsed();
    log.push_back(row);
  }

  for (int t = 1; t <= config.steps; ++t) {
    ParamGradient grad = batch_gradient(state.net, game, config.batch_size, train_rng.child(t),
                                        config.action_smoothing_sigma);
    if (!grad.all_finite()) {
      throw NumericError("train: non-finite gradient at iteration " + std::to_string(t));
    }
    switch (config.optimizer) {
      case OptimizerKind::SGA:
        sga_step(state, grad, config.alpha);
        break;
      case OptimizerKind::OGA:
        oga_step(state, grad, config.alpha, config.beta);
        break;
      case OptimizerKind::Adam:
        adam_step(state, grad, config.alpha, config.adam_beta1, config.adam_beta2,
                  config.adam_eps);
        break;
    }
    if (!all_params_finite(state.net)) {
      throw NumericError("train: non-finite parameters after iteration " + std::to_string(t));
    }

    bool eval_now = eval_fn && eval_every > 0 && (t % eval_every == 0 || t == config.steps);
    bool log_now = (log_every > 0 && t % log_every == 0) || t == config.steps || t == 1;
    if (eval_now || log_now) {
      IterationRow row;
      row.iteration = t;
      row.wall_time_s = elapsed();
      row.grad_norm = grad.norm();
      if (eval_now) {
        auto [mean_r, max_r] = eval_fn(state.net, t);
        row.mean_regret = mean_r;
        row.max_regret = max_r;
      }
      log.push_back(row);
    }
  }
  return state;
}

}  // namespace contnash
