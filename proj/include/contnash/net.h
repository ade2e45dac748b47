#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "contnash/rng.h"

namespace contnash {

double swish(double x);

// Elementwise sine of B*i (B is N_f x d_I row-major). Throws on dimension mismatch.
std::vector<double> fourier_features(const std::vector<double>& fourier_matrix, int rows,
                                     std::span<const double> player);

// Smooth surjections from raw network output onto the interior of a strategy set.
//   Interval: lo + (hi-lo) * (tanh(x)+1)/2, raw dim 1
//   Box:      lo + (hi-lo) * sigmoid(x_k) per coordinate, raw dim d
//   Ball:     x / (1 + |x|), raw dim d
struct OutputMap {
  enum class Kind { Interval, Box, Ball };
  Kind kind = Kind::Interval;
  double lo = -1.0;
  double hi = 1.0;
  int dim = 1;

  int raw_dim() const { return kind == Kind::Interval ? 1 : dim; }
  int action_dim() const { return raw_dim(); }

  static OutputMap interval(double lo, double hi) {
    return {Kind::Interval, lo, hi, 1};
  }
  static OutputMap box(double lo, double hi, int d) { return {Kind::Box, lo, hi, d}; }
  static OutputMap ball(int d) { return {Kind::Ball, -1.0, 1.0, d}; }
};

void output_map_apply(const OutputMap& map, std::span<const double> raw, std::span<double> action);
// Pulls `upstream` (d action) back through the map's Jacobian at `raw`.
void output_map_vjp(const OutputMap& map, std::span<const double> raw,
                    std::span<const double> upstream, std::span<double> d_raw);

struct DenseLayer {
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> biases;   // out
  int out = 0;
  int in = 0;
};

// Player-to-strategy network: player features -> sin(B i) ++ noise -> swish MLP
// -> linear raw output -> output map. All parameters, including the Fourier
// matrix B, are trainable.
struct PlayerStrategyNet {
  int player_dim = 1;
  int fourier_dim = 64;  // N_f rows of B
  int noise_dim = 0;
  std::vector<double> fourier_matrix;  // N_f x d_I row-major
  std::vector<DenseLayer> layers;      // hidden layers (swish) then linear output
  OutputMap output_map;

  int action_dim() const { return output_map.action_dim(); }
  std::size_t param_count() const;
};

// Gradient with the same shape tree as the network's parameters.
struct ParamGradient {
  std::vector<double> fourier_matrix;
  struct LayerGrad {
    std::vector<double> weights;
    std::vector<double> biases;
  };
  std::vector<LayerGrad> layers;

  void zero();
  void scale(double a);
  void axpy(double a, const ParamGradient& other);  // this += a * other
  double norm() const;
  double dot(const ParamGradient& other) const;
  bool all_finite() const;
};

ParamGradient zeros_like(const PlayerStrategyNet& net);

// Visit every parameter (net) or every pair (net, grad-shaped object).
void for_each_param(PlayerStrategyNet& net, const std::function<void(double&)>& fn);
void for_each_param(const PlayerStrategyNet& net, const std::function<void(double)>& fn);
void for_each_pair(PlayerStrategyNet& net, const ParamGradient& g,
                   const std::function<void(double&, double)>& fn);

bool all_params_finite(const PlayerStrategyNet& net);

// He-normal dense weights (std = sqrt(2/fan_in)), zero biases, Fourier entries
// i.i.d. normal with std `fourier_init_std`. Deterministic given seed.
PlayerStrategyNet init_p2sn(int player_dim, int fourier_dim, const std::vector<int>& hidden_sizes,
                            int noise_dim, const OutputMap& output_map, std::uint64_t seed,
                            double fourier_init_std = 64.0);

// Deterministic forward pass; with noise_dim = 0 the (empty) noise argument is
// never read. Throws on dimension mismatch.
std::vector<double> forward(const PlayerStrategyNet& net, std::span<const double> player,
                            std::span<const double> noise);

// Scratch for a recorded forward pass; reusable across calls to avoid
// reallocation in hot loops.
struct ForwardTape {
  std::vector<double> freq;                // B * i
  std::vector<double> h0;                  // sin(freq) ++ noise
  std::vector<std::vector<double>> pre;    // per-layer pre-activations
  std::vector<std::vector<double>> sig;    // sigmoid(pre) for hidden layers
  std::vector<std::vector<double>> act;    // per-layer outputs (last = raw)
  std::vector<double> action;
  std::vector<double> delta, delta_prev;   // backward scratch
};

void forward_record(const PlayerStrategyNet& net, std::span<const double> player,
                    std::span<const double> noise, ForwardTape& tape);

// Accumulates d(upstream . action)/d(params) into `acc` scaled by `scale`.
// Exact reverse mode over the recorded pass, including the Fourier matrix.
// The tape is non-const only for its backward scratch buffers.
void backward_accumulate(const PlayerStrategyNet& net, ForwardTape& tape,
                         std::span<const double> player, std::span<const double> upstream,
                         double scale, ParamGradient& acc);

// Exact reverse-mode gradient of upstream . forward(net, player, noise).
ParamGradient grad_params(const PlayerStrategyNet& net, std::span<const double> player,
                          std::span<const double> noise, std::span<const double> upstream);

// Parameter checkpoint: one-line JSON header (named arrays with shapes and
// byte offsets plus net metadata), then raw little-endian 64-bit floats.
void save_checkpoint(const PlayerStrategyNet& net, const std::string& path);
PlayerStrategyNet load_checkpoint(const std::string& path);

}  // namespace contnash
