#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "contnash/errors.h"
#include "contnash/eval.h"
#include "contnash/games.h"
#include "contnash/measures.h"
#include "contnash/net.h"
#include "contnash/rng.h"
#include "contnash/trainer.h"
#include "doctest.h"

using namespace contnash;

namespace {

constexpr double kPi = std::numbers::pi;

// Toy game with a caller-supplied utility rule; contexts are empty so every
// sample depends only on the player and the override action.
Game toy_game(std::function<UtilitySample(std::span<const double> i, std::span<const double> a)>
                  utility) {
  Game g;
  g.name = "toy";
  g.player_dim = 1;
  g.action_dim = 1;
  g.noise_dim = 0;
  g.action_set = OutputMap::interval(-2.0, 2.0);
  g.total_mass = 1.0;
  g.sample_player = [](RngStream& rng, std::span<double> out) { out[0] = rng.uniform(); };
  g.sample_context = [](const Profile&, std::span<const double>, RngStream&) {
    return UtilityContext{};
  };
  g.utility_from_context = [utility](const UtilityContext&, std::span<const double> i,
                                     std::span<const double> a) { return utility(i, a); };
  return g;
}

// Three-parameter net: B (1x1), one linear layer w, b, squashed by `map`.
PlayerStrategyNet tiny_net(double fourier, double weight, double bias,
                           OutputMap map = OutputMap::interval(-2.0, 2.0)) {
  PlayerStrategyNet net;
  net.player_dim = 1;
  net.fourier_dim = 1;
  net.noise_dim = 0;
  net.fourier_matrix = {fourier};
  net.layers.resize(1);
  net.layers[0].in = 1;
  net.layers[0].out = 1;
  net.layers[0].weights = {weight};
  net.layers[0].biases = {bias};
  net.output_map = map;
  return net;
}

ParamGradient constant_gradient(const PlayerStrategyNet& net, double value) {
  ParamGradient g = zeros_like(net);
  for (double& x : g.fourier_matrix) x = value;
  for (auto& l : g.layers) {
    for (double& x : l.weights) x = value;
    for (double& x : l.biases) x = value;
  }
  return g;
}

std::vector<double> flatten(const ParamGradient& g) {
  std::vector<double> out(g.fourier_matrix);
  for (const auto& l : g.layers) {
    out.insert(out.end(), l.weights.begin(), l.weights.end());
    out.insert(out.end(), l.biases.begin(), l.biases.end());
  }
  return out;
}

std::vector<double> flatten(const PlayerStrategyNet& net) {
  std::vector<double> out;
  for_each_param(net, [&out](double x) { out.push_back(x); });
  return out;
}

}  // namespace

TEST_CASE("spsg on action-independent utilities is exactly zero") {
  Game g = toy_game([](std::span<const double>, std::span<const double>) {
    UtilitySample u;
    u.value = 3.5;
    u.dvalue_daction = {0.0};
    return u;
  });
  auto net = init_p2sn(1, 8, {8}, 0, OutputMap::interval(-2, 2), 4);
  auto grad = spsg_sample(net, g, derive_stream(1, {}));
  CHECK(grad.norm() == 0.0);
}

TEST_CASE("spsg is the action derivative times the parameter jacobian") {
  // u = -a^2: the upstream at the produced action is -2a (and exactly -2 at
  // a = 1); each parameter's gradient is that upstream times the forward
  // map's exact jacobian.
  Game g = toy_game([](std::span<const double>, std::span<const double> a) {
    UtilitySample u;
    u.value = -a[0] * a[0];
    u.dvalue_daction = {-2.0 * a[0]};
    return u;
  });
  std::vector<double> probe = {1.0};
  CHECK(g.utility_from_context(UtilityContext{}, probe, probe).dvalue_daction[0] == -2.0);

  auto net = tiny_net(0.7, -0.4, 0.9);
  RngStream rng = derive_stream(5, {});
  auto grad = spsg_sample(net, g, rng);

  // replay the internal player draw and rebuild the gradient by hand
  RngStream player_rng = rng.child(rng_tag::kPlayer);
  std::vector<double> i = {player_rng.uniform()};
  auto a = forward(net, i, {});
  std::vector<double> up = {1.0};
  auto jac = grad_params(net, i, {}, up);
  jac.scale(-2.0 * a[0]);
  jac.axpy(-1.0, grad);
  CHECK(jac.norm() <= 1e-14 * std::max(1.0, grad.norm()));
}

TEST_CASE("spsg mean matches the quadrature functional gradient on 1-D Ising") {
  // affine three-parameter profile net keeps the (i, j) double integral cheap
  Game game = make_game(GameFamily::Ising1D);
  auto net = tiny_net(2.0, 0.8, -0.3, OutputMap::interval(-1.0, 1.0));

  const int n = 401;
  auto grid = linspace(0.0, 1.0, n);
  double dx = grid[1] - grid[0];
  ParamGradient truth = zeros_like(net);
  for (int ii = 0; ii < n; ++ii) {
    double i = grid[ii];
    double nu_s = 0.0;
    for (int jj = 0; jj < n; ++jj) {
      double j = grid[jj];
      double z = (j - i) / 0.1;
      double density = std::exp(-0.5 * z * z) / (0.1 * std::sqrt(2.0 * kPi));
      double trap_j = (jj == 0 || jj == n - 1) ? 0.5 : 1.0;
      std::vector<double> jv = {j};
      nu_s += dx * trap_j * density * forward(net, jv, {})[0];
    }
    std::vector<double> iv = {i};
    std::vector<double> up = {ising_bias_1d(i) + nu_s};
    auto jac = grad_params(net, iv, {}, up);
    double trap_i = (ii == 0 || ii == n - 1) ? 0.5 : 1.0;
    truth.axpy(dx * trap_i, jac);
  }

  const int m = 30000;
  std::vector<double> sum(3, 0.0), sumsq(3, 0.0);
  RngStream root = derive_stream(77, {});
  for (int k = 0; k < m; ++k) {
    auto fs = flatten(spsg_sample(net, game, root.child(k)));
    for (int c = 0; c < 3; ++c) {
      sum[c] += fs[c];
      sumsq[c] += fs[c] * fs[c];
    }
  }
  auto ft = flatten(truth);
  for (int c = 0; c < 3; ++c) {
    double mean = sum[c] / m;
    double var = (sumsq[c] / m - mean * mean) * m / (m - 1.0);
    double se = std::sqrt(var / m);
    CHECK(std::abs(mean - ft[c]) <= 4.0 * se + 1e-12);
  }
}

TEST_CASE("frozen profile parameters only enter through neighbor values") {
  Game game = make_game(GameFamily::Ising1D);
  auto live = tiny_net(1.5, 0.6, 0.2, OutputMap::interval(-1.0, 1.0));
  auto frozen_other = tiny_net(1.5, -0.9, 0.4, OutputMap::interval(-1.0, 1.0));

  RngStream rng = derive_stream(88, {});
  auto g_same = spsg_sample(live, live, game, rng);
  auto g_other = spsg_sample(live, frozen_other, game, rng);

  // replay the sample's internals to recover both upstream derivatives
  std::vector<double> i(1);
  RngStream player_rng = rng.child(rng_tag::kPlayer);
  game.sample_player(player_rng, i);
  auto a = forward(live, i, {});
  auto dvalue_of = [&](const PlayerStrategyNet& frozen) {
    Profile p = make_net_profile(frozen);
    RngStream utility_rng = rng.child(rng_tag::kUtility);
    UtilityContext ctx = game.sample_context(p, i, utility_rng);
    return game.utility_from_context(ctx, i, a).dvalue_daction[0];
  };
  double d_same = dvalue_of(live);
  double d_other = dvalue_of(frozen_other);
  CHECK(d_same != d_other);

  // g = dvalue * J with identical J on both sides: cross products agree
  auto f_same = flatten(g_same);
  auto f_other = flatten(g_other);
  for (std::size_t k = 0; k < f_same.size(); ++k) {
    double lhs = f_same[k] * d_other;
    double rhs = f_other[k] * d_same;
    CHECK(std::abs(lhs - rhs) <= 1e-12 * (std::abs(lhs) + std::abs(rhs) + 1.0));
  }
}

TEST_CASE("smoothed action gradient") {
  SUBCASE("constant functions average to zero") {
    auto f = [](std::span<const double>) { return 4.2; };
    RngStream s = derive_stream(101, {});
    std::vector<double> a = {0.5};
    double sum = 0.0, sumsq = 0.0;
    const int n = 100000;
    for (int k = 0; k < n; ++k) {
      double g = smoothed_action_grad(f, a, 0.1, s)[0];
      sum += g;
      sumsq += g * g;
    }
    double mean = sum / n;
    double se = std::sqrt((sumsq / n - mean * mean) / (n - 1.0));
    CHECK(std::abs(mean) <= 3.0 * se);
  }
  SUBCASE("linear functions are fixed points of smoothing") {
    auto f = [](std::span<const double> x) { return 3.0 * x[0]; };
    RngStream s = derive_stream(102, {});
    std::vector<double> a = {0.0};
    double sum = 0.0;
    const int n = 100000;
    for (int k = 0; k < n; ++k) sum += smoothed_action_grad(f, a, 0.1, s)[0];
    CHECK(std::abs(sum / n - 3.0) <= 0.05);
  }
  SUBCASE("quadratic at a = 1") {
    auto f = [](std::span<const double> x) { return x[0] * x[0]; };
    RngStream s = derive_stream(103, {});
    std::vector<double> a = {1.0};
    double sum = 0.0;
    const int n = 100000;
    for (int k = 0; k < n; ++k) sum += smoothed_action_grad(f, a, 0.1, s)[0];
    CHECK(std::abs(sum / n - 2.0) <= 0.05);
  }
  SUBCASE("bias shrinks quadratically as sigma shrinks") {
    // f = sin: the smoothed derivative is cos(a) exp(-sigma^2/2), a bias of
    // about cos(a) sigma^2/2. The zero-mean Taylor noise terms are subtracted
    // using the same draws so the quadratic trend is visible at this sample
    // size; the shipped estimator is untouched.
    const double a0 = 1.0;
    const double f0 = std::sin(a0), f1 = std::cos(a0), f2 = -std::sin(a0);
    const int n = 1000000;
    std::vector<double> errors;
    for (double sigma : {0.1, 0.05, 0.025}) {
      RngStream s = derive_stream(104, {});  // common draws across sigmas
      auto f = [](std::span<const double> x) { return std::sin(x[0]); };
      std::vector<double> a = {a0};
      double sum = 0.0, zbar = 0.0, z2bar = 0.0, z3bar = 0.0;
      for (int k = 0; k < n; ++k) {
        RngStream sk = s.child(k);
        RngStream probe = sk;  // peek the z the estimator will draw
        double z = probe.normal();
        sum += smoothed_action_grad(f, a, sigma, sk)[0];
        zbar += z;
        z2bar += z * z - 1.0;
        z3bar += z * z * z;
      }
      double mean = sum / n;
      double cleaned = mean - (f0 / sigma) * (zbar / n) - f1 * (z2bar / n) -
                       0.5 * sigma * f2 * (z3bar / n);
      errors.push_back(std::abs(cleaned - f1));
      double truth = f1 * std::exp(-0.5 * sigma * sigma);
      CHECK(std::abs(cleaned - truth) <= 5e-4);
    }
    CHECK(errors[0] / errors[1] == doctest::Approx(4.0).epsilon(0.25));
    CHECK(errors[1] / errors[2] == doctest::Approx(4.0).epsilon(0.35));
  }
}

TEST_CASE("smoothed spsg agrees with the analytic route in expectation") {
  // distance Ising is quadratic in the action, so Gaussian smoothing is
  // unbiased for its derivative at any sigma
  Game game = make_game(GameFamily::DistIsing1D);
  auto net = tiny_net(1.2, 0.5, -0.1, OutputMap::interval(-1.0, 1.0));

  const int m = 60000;
  std::vector<double> sum_a(3, 0.0), sum_s(3, 0.0), sq_a(3, 0.0), sq_s(3, 0.0);
  RngStream root = derive_stream(110, {});
  for (int k = 0; k < m; ++k) {
    auto fa = flatten(spsg_sample(net, game, root.child(2 * k)));
    auto fs = flatten(spsg_sample(net, game, root.child(2 * k + 1), 0.05));
    for (int c = 0; c < 3; ++c) {
      sum_a[c] += fa[c];
      sum_s[c] += fs[c];
      sq_a[c] += fa[c] * fa[c];
      sq_s[c] += fs[c] * fs[c];
    }
  }
  for (int c = 0; c < 3; ++c) {
    double ma = sum_a[c] / m, ms = sum_s[c] / m;
    double va = (sq_a[c] / m - ma * ma) * m / (m - 1.0);
    double vs = (sq_s[c] / m - ms * ms) * m / (m - 1.0);
    double se_diff = std::sqrt(va / m + vs / m);
    CHECK(std::abs(ms - ma) <= 4.0 * se_diff + 1e-12);
  }
}

TEST_CASE("batch gradient") {
  SUBCASE("identical degenerate samples collapse to a single sample") {
    Game g = toy_game([](std::span<const double>, std::span<const double> a) {
      UtilitySample u;
      u.value = -a[0] * a[0];
      u.dvalue_daction = {-2.0 * a[0]};
      return u;
    });
    // dead Fourier path (zero row AND zero weight): the sample is exactly
    // player-independent, so every batch slot produces the same gradient
    auto net = tiny_net(0.0, 0.0, 0.8);
    RngStream rng = derive_stream(120, {});
    auto single = spsg_sample(net, g, rng.child(0));
    auto batch = batch_gradient(net, g, 8, rng);
    auto fs = flatten(single);
    auto fb = flatten(batch);
    for (std::size_t k = 0; k < fs.size(); ++k)
      CHECK(std::abs(fb[k] - fs[k]) <= 1e-12 * (std::abs(fs[k]) + 1.0));
  }
  SUBCASE("bit-identical across repeated calls") {
    Game game = make_game(GameFamily::Ising1D);
    auto net = init_p2sn(1, 16, {16}, 0, OutputMap::interval(-1, 1), 9);
    auto g1 = batch_gradient(net, game, 32, derive_stream(9, {1}));
    auto g2 = batch_gradient(net, game, 32, derive_stream(9, {1}));
    CHECK(flatten(g1) == flatten(g2));
  }
  SUBCASE("batch mean variance scales like one over batch size") {
    Game g = toy_game([](std::span<const double> i, std::span<const double> a) {
      UtilitySample u;
      double target = i[0];
      u.value = -(a[0] - target) * (a[0] - target);
      u.dvalue_daction = {-2.0 * (a[0] - target)};
      return u;
    });
    auto net = tiny_net(0.9, 0.4, 0.1);
    RngStream root = derive_stream(121, {});
    auto variance_at = [&](int batch, int reps, int salt) {
      double m = 0.0, s2 = 0.0;
      for (int r = 0; r < reps; ++r) {
        auto gr = batch_gradient(net, g, batch, root.child(salt, r));
        double v = flatten(gr)[2];  // bias entry: touched by every sample
        m += v;
        s2 += v * v;
      }
      m /= reps;
      return (s2 / reps - m * m) * reps / (reps - 1.0);
    };
    double v1 = variance_at(1, 400, 1);
    double v16 = variance_at(16, 400, 2);
    double ratio = v1 / v16;
    CHECK(ratio > 8.0);
    CHECK(ratio < 32.0);
  }
}

TEST_CASE("optimizer updates") {
  auto net = tiny_net(1.0, 1.0, 1.0);

  SUBCASE("sga arithmetic") {
    TrainerState state{net, {}, {}, {}, 0};
    sga_step(state, constant_gradient(net, -2.0), 0.1);
    for (double p : flatten(state.net)) CHECK(p == doctest::Approx(0.8).epsilon(1e-15));
    sga_step(state, constant_gradient(net, 0.0), 0.1);
    for (double p : flatten(state.net)) CHECK(p == doctest::Approx(0.8).epsilon(1e-15));
    sga_step(state, constant_gradient(net, 5.0), 0.0);
    for (double p : flatten(state.net)) CHECK(p == doctest::Approx(0.8).epsilon(1e-15));
  }

  SUBCASE("oga reduces to sga when beta is zero or gradients repeat") {
    TrainerState a{net, {}, {}, {}, 0};
    TrainerState b{net, {}, {}, {}, 0};
    auto g = constant_gradient(net, 1.7);
    oga_step(a, g, 0.1, 0.0);
    sga_step(b, g, 0.1);
    for (std::size_t k = 0; k < 3; ++k)
      CHECK(std::abs(flatten(a.net)[k] - flatten(b.net)[k]) <= 1e-15);
    oga_step(a, g, 0.1, 0.3);  // same gradient twice: extrapolation vanishes
    sga_step(b, g, 0.1);
    for (std::size_t k = 0; k < 3; ++k)
      CHECK(std::abs(flatten(a.net)[k] - flatten(b.net)[k]) <= 1e-15);
  }

  SUBCASE("oga extrapolation arithmetic") {
    auto zero_net = tiny_net(0.0, 0.0, 0.0);
    TrainerState state{zero_net, constant_gradient(zero_net, 3.0), {}, {}, 1};
    oga_step(state, constant_gradient(zero_net, 1.0), 0.1, 0.1);
    for (double p : flatten(state.net)) CHECK(p == doctest::Approx(-0.1).epsilon(1e-14));
  }

  SUBCASE("adam leaves parameters alone on a zero gradient") {
    TrainerState state{net, {}, {}, {}, 0};
    adam_step(state, constant_gradient(net, 0.0), 1e-3, 0.9, 0.999, 1e-8);
    CHECK(flatten(state.net) == flatten(net));
  }

  SUBCASE("adam first step moves by about alpha in the gradient direction") {
    TrainerState state{net, {}, {}, {}, 0};
    adam_step(state, constant_gradient(net, -2.0), 1e-3, 0.9, 0.999, 1e-8);
    for (double p : flatten(state.net)) CHECK(p == doctest::Approx(1.0 - 1e-3).epsilon(1e-6));
  }

  SUBCASE("adam update is invariant to positive gradient rescaling") {
    TrainerState a{net, {}, {}, {}, 0};
    TrainerState b{net, {}, {}, {}, 0};
    adam_step(a, constant_gradient(net, 0.03), 1e-3, 0.9, 0.999, 1e-8);
    adam_step(b, constant_gradient(net, 3.0), 1e-3, 0.9, 0.999, 1e-8);
    auto fa = flatten(a.net);
    auto fb = flatten(b.net);
    for (std::size_t k = 0; k < fa.size(); ++k)
      CHECK(fa[k] == doctest::Approx(fb[k]).epsilon(1e-5));
  }
}

TEST_CASE("train loop") {
  Game game = make_game(GameFamily::DistIsing1D);

  SUBCASE("zero steps returns the initial net") {
    auto net = init_p2sn(1, 8, {8}, 0, game.action_set, 31);
    TrainConfig cfg;
    cfg.steps = 0;
    cfg.seed = 5;
    IterationLog log;
    auto state = train(net, game, cfg, log);
    CHECK(flatten(state.net) == flatten(net));
    CHECK(log.empty());  // no eval_fn, no rows
  }

  SUBCASE("fixed seeds reproduce parameters bit for bit") {
    auto net = init_p2sn(1, 8, {8}, 0, game.action_set, 32);
    TrainConfig cfg;
    cfg.steps = 20;
    cfg.batch_size = 8;
    cfg.seed = 6;
    IterationLog log1, log2;
    auto s1 = train(net, game, cfg, log1);
    auto s2 = train(net, game, cfg, log2);
    CHECK(flatten(s1.net) == flatten(s2.net));
    REQUIRE(log1.size() == log2.size());
    for (std::size_t k = 0; k < log1.size(); ++k)
      CHECK(log1[k].grad_norm == log2[k].grad_norm);
  }

  SUBCASE("non-finite gradients abort with a diagnostic") {
    Game bad = toy_game([](std::span<const double>, std::span<const double>) {
      UtilitySample u;
      u.value = 1.0;
      u.dvalue_daction = {std::numeric_limits<double>::infinity()};
      return u;
    });
    auto net = tiny_net(1.0, 1.0, 1.0);
    TrainConfig cfg;
    cfg.steps = 3;
    cfg.batch_size = 2;
    IterationLog log;
    CHECK_THROWS_AS((void)train(net, bad, cfg, log), NumericError);
  }

  SUBCASE("regret falls on the distance-Ising toy run") {
    auto net = init_p2sn(1, 32, {32, 32}, 0, game.action_set, 33);
    TrainConfig cfg;
    cfg.optimizer = OptimizerKind::Adam;
    cfg.alpha = 3e-3;
    cfg.batch_size = 64;
    cfg.steps = 800;
    cfg.seed = 7;
    IterationLog log;
    auto eval_fn = [&game](const PlayerStrategyNet& n, int iteration) {
      Profile p = make_net_profile(n);
      RegretReport r = regret_report(game, p, 64, 51, 50,
                                     derive_stream(900, {static_cast<std::uint64_t>(iteration)}));
      return std::make_pair(r.mean_regret, r.max_regret);
    };
    train(net, game, cfg, log, 800, eval_fn);
    REQUIRE(log.size() >= 2);
    REQUIRE(log.front().mean_regret.has_value());
    REQUIRE(log.back().mean_regret.has_value());
    double initial = *log.front().mean_regret;
    double final_r = *log.back().mean_regret;
    CHECK(final_r <= 0.2 * initial);
  }
}
