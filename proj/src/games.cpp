#include "contnash/games.h"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "contnash/measures.h"

namespace contnash {

namespace {
constexpr double kPi = std::numbers::pi;
}

Profile make_net_profile(const PlayerStrategyNet& net) {
  return [&net](std::span<const double> player, std::span<const double> noise,
                std::span<double> action) {
    thread_local ForwardTape tape;
    forward_record(net, player, noise, tape);
    for (std::size_t k = 0; k < tape.action.size(); ++k) action[k] = tape.action[k];
  };
}

UtilitySample sample_utility(const Game& game, const Profile& profile,
                             std::span<const double> player, std::span<const double> action,
                             RngStream& rng) {
  UtilityContext ctx = game.sample_context(profile, player, rng);
  return game.utility_from_context(ctx, player, action);
}

double ising_bias_1d(double i) { return std::sin(10.0 * kPi * i) + std::cos(14.0 * kPi * i); }

double ising_bias_2d(double x, double y) {
  return std::sin(4.0 * kPi * x) + std::sin(6.0 * kPi * y) + std::sin(5.0 * kPi * (x + y));
}

double cournot_marginal_cost(double i) {
  return 0.5 + 0.25 * std::sin(10.0 * kPi * i) + 0.25 * std::sin(14.0 * kPi * i);
}

double crowding_value(std::span<const double> a) {
  double v = 0.0;
  for (double s : a) v += -0.5 * std::sin(4.0 * kPi * s) - 0.5 * std::cos(6.0 * kPi * s);
  return v;
}

void crowding_value_grad(std::span<const double> a, std::span<double> grad) {
  for (std::size_t k = 0; k < a.size(); ++k) {
    grad[k] = -2.0 * kPi * std::cos(4.0 * kPi * a[k]) + 3.0 * kPi * std::sin(6.0 * kPi * a[k]);
  }
}

double gaussian_kernel(std::span<const double> x, std::span<const double> y, double sigma) {
  double sq = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    double d = x[k] - y[k];
    sq += d * d;
  }
  return std::exp(-sq / (2.0 * sigma * sigma));
}

GameFamily game_family_from_name(const std::string& name) {
  if (name == "ising1d") return GameFamily::Ising1D;
  if (name == "ising2d") return GameFamily::Ising2D;
  if (name == "dist_ising1d") return GameFamily::DistIsing1D;
  if (name == "dist_ising2d") return GameFamily::DistIsing2D;
  if (name == "cournot") return GameFamily::Cournot;
  if (name == "local_cournot") return GameFamily::LocalCournot;
  if (name == "crowding") return GameFamily::Crowding;
  throw std::invalid_argument("unknown game family '" + name + "'");
}

std::string game_family_name(GameFamily family) {
  switch (family) {
    case GameFamily::Ising1D: return "ising1d";
    case GameFamily::Ising2D: return "ising2d";
    case GameFamily::DistIsing1D: return "dist_ising1d";
    case GameFamily::DistIsing2D: return "dist_ising2d";
    case GameFamily::Cournot: return "cournot";
    case GameFamily::LocalCournot: return "local_cournot";
    case GameFamily::Crowding: return "crowding";
  }
  throw std::invalid_argument("unknown game family enum");
}

int default_noise_dim(GameFamily family) {
  return family == GameFamily::Crowding ? 2 : 0;
}

namespace {

double bias_at(GameFamily family, std::span<const double> i) {
  switch (family) {
    case GameFamily::Ising1D:
    case GameFamily::DistIsing1D:
      return ising_bias_1d(i[0]);
    case GameFamily::Ising2D:
    case GameFamily::DistIsing2D:
      return ising_bias_2d(i[0], i[1]);
    default:
      throw std::logic_error("bias_at: not an Ising family");
  }
}

// Draws neighbor j ~ normalized truncated Gaussian around the player and
// evaluates the frozen profile there. Returned data = {s(j)}, mass = |nu(i)|.
UtilityContext neighbor_context(const Game& game, const Profile& profile,
                                std::span<const double> player, RngStream& rng) {
  UtilityContext ctx;
  TruncGauss tg;
  tg.center.assign(player.begin(), player.end());
  tg.sigma = game.params.nu_scale;
  ctx.mass = trunc_gauss_mass(tg);
  std::vector<double> j(game.player_dim);
  trunc_gauss_sample(tg, rng, j);
  std::vector<double> noise(game.noise_dim);
  for (int k = 0; k < game.noise_dim; ++k) noise[k] = rng.normal();
  ctx.data.resize(game.action_dim);
  profile(j, noise, ctx.data);
  return ctx;
}

UtilityContext uniform_neighbor_context(const Game& game, const Profile& profile,
                                        RngStream& rng) {
  UtilityContext ctx;
  ctx.mass = 1.0;
  std::vector<double> j(game.player_dim);
  sample_uniform_box(game.player_dim, rng, j);
  std::vector<double> noise(game.noise_dim);
  for (int k = 0; k < game.noise_dim; ++k) noise[k] = rng.normal();
  ctx.data.resize(game.action_dim);
  profile(j, noise, ctx.data);
  return ctx;
}

void uniform_player(int d, RngStream& rng, std::span<double> out) {
  sample_uniform_box(d, rng, out);
}

}  // namespace

Game make_game(GameFamily family, const GameParams& params, int noise_dim) {
  Game g;
  g.family = family;
  g.name = game_family_name(family);
  g.params = params;
  g.noise_dim = noise_dim >= 0 ? noise_dim : default_noise_dim(family);
  g.total_mass = 1.0;

  switch (family) {
    case GameFamily::Ising1D:
    case GameFamily::Ising2D: {
      g.player_dim = (family == GameFamily::Ising1D) ? 1 : 2;
      g.action_dim = 1;  // the bias fields are scalar, so spins are scalar
      g.action_set = OutputMap::interval(-1.0, 1.0);
      g.sample_context = [g](const Profile& profile, std::span<const double> i, RngStream& rng) {
        return neighbor_context(g, profile, i, rng);
      };
      g.utility_from_context = [family](const UtilityContext& ctx, std::span<const double> i,
                                        std::span<const double> a) {
        UtilitySample out;
        double b = bias_at(family, i);
        double sj = ctx.data[0];
        out.value = a[0] * b + ctx.mass * a[0] * sj;
        out.dvalue_daction = {b + ctx.mass * sj};
        return out;
      };
      break;
    }
    case GameFamily::DistIsing1D:
    case GameFamily::DistIsing2D: {
      g.player_dim = (family == GameFamily::DistIsing1D) ? 1 : 2;
      g.action_dim = 1;
      g.action_set = OutputMap::interval(-1.0, 1.0);
      g.sample_context = [g](const Profile& profile, std::span<const double> i, RngStream& rng) {
        return neighbor_context(g, profile, i, rng);
      };
      // c(i, j) == 1: unit conformity weight.
      g.utility_from_context = [family](const UtilityContext& ctx, std::span<const double> i,
                                        std::span<const double> a) {
        UtilitySample out;
        double b = bias_at(family, i);
        double sj = ctx.data[0];
        double db = a[0] - b;
        double dj = a[0] - sj;
        out.value = -db * db - ctx.mass * dj * dj;
        out.dvalue_daction = {-2.0 * db - 2.0 * ctx.mass * dj};
        return out;
      };
      break;
    }
    case GameFamily::Cournot: {
      g.player_dim = 1;
      g.action_dim = 1;
      g.action_set = OutputMap::interval(0.0, 1.0);
      g.sample_context = [g](const Profile& profile, std::span<const double>, RngStream& rng) {
        // Aggregate output is linear in the profile, so one uniformly sampled
        // firm's output is an unbiased estimate of Q.
        return uniform_neighbor_context(g, profile, rng);
      };
      g.utility_from_context = [params](const UtilityContext& ctx, std::span<const double> i,
                                        std::span<const double> q) {
        UtilitySample out;
        double q_hat = ctx.data[0];
        double price = params.price_intercept - params.price_slope * q_hat;
        double cost = cournot_marginal_cost(i[0]);
        out.value = q[0] * price - q[0] * cost;
        out.dvalue_daction = {price - cost};
        return out;
      };
      break;
    }
    case GameFamily::LocalCournot: {
      g.player_dim = 1;
      g.action_dim = 1;
      g.action_set = OutputMap::interval(0.0, 1.0);
      g.sample_context = [g](const Profile& profile, std::span<const double> i, RngStream& rng) {
        UtilityContext ctx = neighbor_context(g, profile, i, rng);
        ctx.data[0] *= ctx.mass;  // Q(i) estimate: mass * q(j), j ~ normalized nu(i)
        return ctx;
      };
      g.utility_from_context = [params](const UtilityContext& ctx, std::span<const double> i,
                                        std::span<const double> q) {
        UtilitySample out;
        double q_hat = ctx.data[0];
        double price = params.price_intercept - params.price_slope * q_hat;
        double cost = cournot_marginal_cost(i[0]);
        out.value = q[0] * price - q[0] * cost;
        out.dvalue_daction = {price - cost};
        return out;
      };
      break;
    }
    case GameFamily::Crowding: {
      g.player_dim = 2;
      g.action_dim = 2;
      g.action_set = OutputMap::box(0.0, 1.0, 2);
      g.sample_context = [g](const Profile& profile, std::span<const double>, RngStream& rng) {
        return uniform_neighbor_context(g, profile, rng);
      };
      g.utility_from_context = [params](const UtilityContext& ctx, std::span<const double>,
                                        std::span<const double> a) {
        UtilitySample out;
        std::span<const double> aj(ctx.data.data(), 2);
        double k = gaussian_kernel(a, aj, params.kernel_scale);
        out.value = crowding_value(a) - k;
        out.dvalue_daction.resize(2);
        crowding_value_grad(a, out.dvalue_daction);
        double inv_s2 = 1.0 / (params.kernel_scale * params.kernel_scale);
        for (int c = 0; c < 2; ++c) out.dvalue_daction[c] += k * (a[c] - aj[c]) * inv_s2;
        return out;
      };
      break;
    }
  }

  int pd = g.player_dim;
  g.sample_player = [pd](RngStream& rng, std::span<double> out) { uniform_player(pd, rng, out); };
  return g;
}

}  // namespace contnash
