#include <cmath>
#include <filesystem>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "contnash/net.h"
#include "contnash/rng.h"
#include "doctest.h"

using namespace contnash;

namespace {

// Finite-difference oracle: central differences of upstream . forward(...)
// with respect to every parameter, h = 1e-4 at 64-bit precision.
ParamGradient fd_gradient(PlayerStrategyNet net, std::span<const double> player,
                          std::span<const double> noise, std::span<const double> upstream,
                          double h = 1e-4) {
  auto value = [&]() {
    auto a = forward(net, player, noise);
    double v = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) v += upstream[k] * a[k];
    return v;
  };
  auto fd_at = [&](double& p) {
    double orig = p;
    p = orig + h;
    double up = value();
    p = orig - h;
    double down = value();
    p = orig;
    return (up - down) / (2.0 * h);
  };
  ParamGradient g = zeros_like(net);
  for (std::size_t k = 0; k < net.fourier_matrix.size(); ++k)
    g.fourier_matrix[k] = fd_at(net.fourier_matrix[k]);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    for (std::size_t k = 0; k < net.layers[l].weights.size(); ++k)
      g.layers[l].weights[k] = fd_at(net.layers[l].weights[k]);
    for (std::size_t k = 0; k < net.layers[l].biases.size(); ++k)
      g.layers[l].biases[k] = fd_at(net.layers[l].biases[k]);
  }
  return g;
}

double max_relative_error(const ParamGradient& a, const ParamGradient& b) {
  double worst = 0.0;
  auto cmp = [&worst](double x, double y) {
    double denom = std::max({std::abs(x), std::abs(y), 1e-6});
    worst = std::max(worst, std::abs(x - y) / denom);
  };
  for (std::size_t k = 0; k < a.fourier_matrix.size(); ++k)
    cmp(a.fourier_matrix[k], b.fourier_matrix[k]);
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    for (std::size_t k = 0; k < a.layers[l].weights.size(); ++k)
      cmp(a.layers[l].weights[k], b.layers[l].weights[k]);
    for (std::size_t k = 0; k < a.layers[l].biases.size(); ++k)
      cmp(a.layers[l].biases[k], b.layers[l].biases[k]);
  }
  return worst;
}

}  // namespace

TEST_CASE("swish values") {
  CHECK(swish(0.0) == 0.0);
  CHECK(std::abs(swish(20.0) - 20.0) <= 1e-7);
  // oracle: 1/(1+exp(-1)) evaluated in long double
  long double sigma1 = 1.0L / (1.0L + std::exp(-1.0L));
  CHECK(swish(1.0) == doctest::Approx(static_cast<double>(sigma1)).epsilon(1e-12));
  CHECK(swish(1.0) == doctest::Approx(0.7310585786300049).epsilon(1e-12));
}

TEST_CASE("fourier features") {
  SUBCASE("zero matrix maps to zero") {
    std::vector<double> b(8, 0.0);
    std::vector<double> i = {0.3, -0.7};
    auto f = fourier_features(b, 4, i);
    for (double x : f) CHECK(x == 0.0);
  }
  SUBCASE("single row at pi/2") {
    std::vector<double> b = {std::numbers::pi / 2.0};
    std::vector<double> i = {1.0};
    auto f = fourier_features(b, 1, i);
    CHECK(f[0] == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("2 pi shift of a row dot product is invisible") {
    std::vector<double> b1 = {1.3};
    std::vector<double> b2 = {1.3 + 2.0 * std::numbers::pi};
    std::vector<double> i = {1.0};
    auto f1 = fourier_features(b1, 1, i);
    auto f2 = fourier_features(b2, 1, i);
    CHECK(std::abs(f1[0] - f2[0]) <= 1e-12);
  }
  SUBCASE("dimension mismatch throws") {
    std::vector<double> b(6, 0.0);
    std::vector<double> i = {1.0};
    CHECK_THROWS_AS((void)fourier_features(b, 3, i), std::invalid_argument);
  }
}

TEST_CASE("output maps") {
  SUBCASE("ball fixes the origin") {
    std::vector<double> raw = {0.0, 0.0}, a(2);
    output_map_apply(OutputMap::ball(2), raw, a);
    CHECK(a[0] == 0.0);
    CHECK(a[1] == 0.0);
  }
  SUBCASE("interval saturates toward the bound") {
    std::vector<double> raw = {40.0}, a(1);
    output_map_apply(OutputMap::interval(-1.0, 1.0), raw, a);
    CHECK(a[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(a[0] <= 1.0);
  }
  SUBCASE("ball scales by 1/(1+norm)") {
    std::vector<double> raw = {3.0, 4.0}, a(2);
    output_map_apply(OutputMap::ball(2), raw, a);
    CHECK(a[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(a[1] == doctest::Approx(4.0 / 6.0).epsilon(1e-12));
  }
}

TEST_CASE("init makes the documented shapes and is deterministic") {
  auto net = init_p2sn(1, 64, {64, 64}, 0, OutputMap::interval(-1, 1), 7);
  CHECK(net.fourier_matrix.size() == 64);
  REQUIRE(net.layers.size() == 3);
  CHECK(net.layers[0].in == 64);
  CHECK(net.layers[0].out == 64);
  CHECK(net.layers[1].in == 64);
  CHECK(net.layers[1].out == 64);
  CHECK(net.layers[2].in == 64);
  CHECK(net.layers[2].out == 1);
  for (const auto& l : net.layers) {
    for (double b : l.biases) CHECK(b == 0.0);
  }
  CHECK(all_params_finite(net));

  auto net2 = init_p2sn(1, 64, {64, 64}, 0, OutputMap::interval(-1, 1), 7);
  bool identical = net.fourier_matrix == net2.fourier_matrix;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    identical = identical && net.layers[l].weights == net2.layers[l].weights;
  }
  CHECK(identical);
}

TEST_CASE("fourier init matches the configured scale") {
  // 64 x 64 = 4096 draws; the sample std should land within 5% of 64
  auto net = init_p2sn(64, 64, {8}, 0, OutputMap::interval(-1, 1), 21);
  double ss = 0.0;
  for (double x : net.fourier_matrix) ss += x * x;
  double std_hat = std::sqrt(ss / net.fourier_matrix.size());
  CHECK(std::abs(std_hat - 64.0) <= 0.05 * 64.0);
}

TEST_CASE("forward maps zero nets to set centers") {
  SUBCASE("interval center") {
    auto net = init_p2sn(1, 4, {4}, 0, OutputMap::interval(-1, 1), 3);
    for (auto& l : net.layers) {
      std::fill(l.weights.begin(), l.weights.end(), 0.0);
      std::fill(l.biases.begin(), l.biases.end(), 0.0);
    }
    std::vector<double> i = {0.4};
    CHECK(forward(net, i, {})[0] == 0.0);
  }
  SUBCASE("box midpoint") {
    auto net = init_p2sn(1, 4, {4}, 0, OutputMap::box(0.0, 1.0, 2), 3);
    for (auto& l : net.layers) {
      std::fill(l.weights.begin(), l.weights.end(), 0.0);
      std::fill(l.biases.begin(), l.biases.end(), 0.0);
    }
    std::vector<double> i = {0.4};
    auto a = forward(net, i, {});
    CHECK(a[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(a[1] == doctest::Approx(0.5).epsilon(1e-15));
  }
}

TEST_CASE("forward output stays inside the declared strategy set") {
  RngStream meta = derive_stream(99, {});
  int checked = 0;
  for (int rep = 0; rep < 200; ++rep) {
    int d_i = 1 + static_cast<int>(meta.next_u64() % 2);
    int noise_dim = static_cast<int>(meta.next_u64() % 3);
    OutputMap map;
    switch (meta.next_u64() % 3) {
      case 0: map = OutputMap::interval(-1.0, 1.0); break;
      case 1: map = OutputMap::box(0.0, 1.0, 2); break;
      default: map = OutputMap::ball(2); break;
    }
    auto net = init_p2sn(d_i, 8, {8, 8}, noise_dim, map, meta.next_u64());
    // exaggerate the output layer so raw values reach deep saturation
    for (double& w : net.layers.back().weights) w *= 50.0;
    RngStream s = meta.child(rep);
    for (int k = 0; k < 50; ++k) {
      std::vector<double> i(d_i), z(noise_dim);
      for (double& x : i) x = s.uniform();
      for (double& x : z) x = s.normal();
      auto a = forward(net, i, z);
      ++checked;
      switch (map.kind) {
        case OutputMap::Kind::Interval:
          CHECK(a[0] >= -1.0);
          CHECK(a[0] <= 1.0);
          break;
        case OutputMap::Kind::Box:
          for (double x : a) {
            CHECK(x >= 0.0);
            CHECK(x <= 1.0);
          }
          break;
        case OutputMap::Kind::Ball: {
          double n2 = 0.0;
          for (double x : a) n2 += x * x;
          CHECK(n2 <= 1.0);
          break;
        }
      }
    }
  }
  CHECK(checked == 10000);
}

TEST_CASE("noise is ignored entirely when noise_dim is zero") {
  auto net = init_p2sn(1, 8, {8}, 0, OutputMap::interval(-1, 1), 5);
  std::vector<double> i = {0.7};
  auto a = forward(net, i, {});
  auto b = forward(net, i, std::vector<double>{});
  CHECK(a == b);
  CHECK_THROWS_AS((void)forward(net, i, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("parameter gradients") {
  SUBCASE("zero upstream gives a zero tree") {
    auto net = init_p2sn(1, 8, {8}, 0, OutputMap::interval(-1, 1), 17);
    std::vector<double> i = {0.2}, up = {0.0};
    auto g = grad_params(net, i, {}, up);
    CHECK(g.norm() == 0.0);
  }
  SUBCASE("linearity in upstream") {
    auto net = init_p2sn(2, 8, {8}, 1, OutputMap::ball(2), 18);
    std::vector<double> i = {0.2, 0.9}, z = {0.3}, up = {0.7, -0.4};
    std::vector<double> up2 = {1.4, -0.8};
    auto g1 = grad_params(net, i, z, up);
    auto g2 = grad_params(net, i, z, up2);
    g1.scale(2.0);
    g1.axpy(-1.0, g2);
    CHECK(g1.norm() <= 1e-12 * std::max(1.0, g2.norm()));
  }
  SUBCASE("matches central finite differences on 10 random nets") {
    RngStream meta = derive_stream(123, {});
    for (int rep = 0; rep < 10; ++rep) {
      int d_i = 1 + static_cast<int>(meta.next_u64() % 2);
      int noise_dim = static_cast<int>(meta.next_u64() % 2);
      OutputMap map;
      switch (rep % 3) {
        case 0: map = OutputMap::interval(-1.0, 1.0); break;
        case 1: map = OutputMap::box(0.0, 1.0, 2); break;
        default: map = OutputMap::ball(2); break;
      }
      auto net = init_p2sn(d_i, 8, {8, 8}, noise_dim, map, 1000 + rep, 8.0);
      std::vector<double> i(d_i), z(noise_dim), up(map.action_dim());
      RngStream s = meta.child(rep);
      for (double& x : i) x = s.uniform();
      for (double& x : z) x = s.normal();
      for (double& x : up) x = s.normal();
      auto g = grad_params(net, i, z, up);
      auto fd = fd_gradient(net, i, z, up);
      CHECK(max_relative_error(g, fd) <= 1e-4);
    }
  }
  SUBCASE("pure function of its arguments") {
    auto net = init_p2sn(1, 8, {8}, 0, OutputMap::interval(-1, 1), 19);
    std::vector<double> i = {0.6}, up = {1.3};
    auto g1 = grad_params(net, i, {}, up);
    auto g2 = grad_params(net, i, {}, up);
    g1.axpy(-1.0, g2);
    CHECK(g1.norm() == 0.0);
  }
}

TEST_CASE("checkpoint round-trips parameters bit-exactly") {
  auto net = init_p2sn(2, 16, {8, 8}, 2, OutputMap::box(0.0, 1.0, 2), 77);
  std::string path =
      (std::filesystem::temp_directory_path() / "contnash_test_checkpoint.bin").string();
  save_checkpoint(net, path);
  auto loaded = load_checkpoint(path);
  CHECK(loaded.player_dim == net.player_dim);
  CHECK(loaded.fourier_dim == net.fourier_dim);
  CHECK(loaded.noise_dim == net.noise_dim);
  CHECK(loaded.fourier_matrix == net.fourier_matrix);
  REQUIRE(loaded.layers.size() == net.layers.size());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    CHECK(loaded.layers[l].weights == net.layers[l].weights);
    CHECK(loaded.layers[l].biases == net.layers[l].biases);
    CHECK(loaded.layers[l].in == net.layers[l].in);
    CHECK(loaded.layers[l].out == net.layers[l].out);
  }
  std::vector<double> i = {0.3, 0.8}, z = {0.1, -0.2};
  CHECK(forward(loaded, i, z) == forward(net, i, z));
  std::filesystem::remove(path);
}
