#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "contnash/net.h"
#include "contnash/rng.h"

namespace contnash {

// A strategy profile evaluated with frozen parameters: (player, noise) -> action.
using Profile = std::function<void(std::span<const double> player, std::span<const double> noise,
                                   std::span<double> action)>;

Profile make_net_profile(const PlayerStrategyNet& net);

// Single-sample unbiased estimate of u(s, i) at an override action, together
// with its analytic derivative w.r.t. that action.
struct UtilitySample {
  double value = 0.0;
  std::vector<double> dvalue_daction;
};

// Everything a single utility sample needs that does NOT depend on the acting
// player's action: the sampled neighbor's contribution and the measure mass.
// Sampling the context once and re-evaluating at many candidate actions gives
// common random numbers across a best-response grid for free.
struct UtilityContext {
  double mass = 1.0;            // mass of the neighbor measure at this player
  std::vector<double> data;     // family-specific (neighbor action / aggregate)
};

enum class GameFamily {
  Ising1D,
  Ising2D,
  DistIsing1D,
  DistIsing2D,
  Cournot,
  LocalCournot,
  Crowding,
};

// Overridable constants; field formulas themselves are built in.
struct GameParams {
  double nu_scale = 0.1;        // neighbor Gaussian scale (Ising, local Cournot)
  double price_intercept = 2.0; // Cournot a
  double price_slope = 1.8;     // Cournot b
  double kernel_scale = 0.01;   // crowding Gaussian kernel scale
};

struct Game {
  GameFamily family = GameFamily::Ising1D;
  std::string name;
  GameParams params;
  int player_dim = 1;
  int action_dim = 1;
  int noise_dim = 0;
  OutputMap action_set;
  double total_mass = 1.0;  // mu(I); Lebesgue on unit boxes

  std::function<void(RngStream&, std::span<double>)> sample_player;
  std::function<UtilityContext(const Profile&, std::span<const double> player, RngStream&)>
      sample_context;
  std::function<UtilitySample(const UtilityContext&, std::span<const double> player,
                              std::span<const double> action)>
      utility_from_context;
};

// One unbiased utility sample: draw the context, evaluate at the override action.
UtilitySample sample_utility(const Game& game, const Profile& profile,
                             std::span<const double> player, std::span<const double> action,
                             RngStream& rng);

// Bias / cost fields with the benchmark constants.
double ising_bias_1d(double i);                      // sin(10 pi i) + cos(14 pi i)
double ising_bias_2d(double x, double y);            // sin(4 pi x) + sin(6 pi y) + sin(5 pi (x+y))
double cournot_marginal_cost(double i);              // 1/2 + 1/4 sin(10 pi i) + 1/4 sin(14 pi i)
double crowding_value(std::span<const double> a);    // sum_k -sin(4 pi a_k)/2 - cos(6 pi a_k)/2
void crowding_value_grad(std::span<const double> a, std::span<double> grad);
double gaussian_kernel(std::span<const double> x, std::span<const double> y, double sigma);

GameFamily game_family_from_name(const std::string& name);
std::string game_family_name(GameFamily family);
int default_noise_dim(GameFamily family);

// Build a benchmark game. noise_dim < 0 means the family default
// (0 everywhere except crowding, which uses 2).
Game make_game(GameFamily family, const GameParams& params = {}, int noise_dim = -1);

}  // namespace contnash
