#include "contnash/net.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "contnash/errors.h"
#include "json.hpp"

namespace contnash {

namespace {
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

double swish(double x) { return x * sigmoid(x); }

std::vector<double> fourier_features(const std::vector<double>& fourier_matrix, int rows,
                                     std::span<const double> player) {
  if (rows <= 0 || fourier_matrix.size() % rows != 0) {
    throw std::invalid_argument("fourier_features: matrix size not divisible by row count");
  }
  std::size_t cols = fourier_matrix.size() / rows;
  if (cols != player.size()) {
    throw std::invalid_argument("fourier_features: matrix columns != player dimension");
  }
  std::vector<double> out(rows);
  for (int r = 0; r < rows; ++r) {
    double dot = 0.0;
    const double* row = fourier_matrix.data() + static_cast<std::size_t>(r) * cols;
    for (std::size_t c = 0; c < cols; ++c) dot += row[c] * player[c];
    out[r] = std::sin(dot);
  }
  return out;
}

void output_map_apply(const OutputMap& map, std::span<const double> raw, std::span<double> action) {
  switch (map.kind) {
    case OutputMap::Kind::Interval: {
      double center = 0.5 * (map.lo + map.hi);
      double half = 0.5 * (map.hi - map.lo);
      action[0] = center + half * std::tanh(raw[0]);
      break;
    }
    case OutputMap::Kind::Box: {
      for (int k = 0; k < map.dim; ++k) {
        action[k] = map.lo + (map.hi - map.lo) * sigmoid(raw[k]);
      }
      break;
    }
    case OutputMap::Kind::Ball: {
      double sq = 0.0;
      for (int k = 0; k < map.dim; ++k) sq += raw[k] * raw[k];
      double denom = 1.0 + std::sqrt(sq);
      for (int k = 0; k < map.dim; ++k) action[k] = raw[k] / denom;
      break;
    }
  }
}

void output_map_vjp(const OutputMap& map, std::span<const double> raw,
                    std::span<const double> upstream, std::span<double> d_raw) {
  switch (map.kind) {
    case OutputMap::Kind::Interval: {
      double half = 0.5 * (map.hi - map.lo);
      double t = std::tanh(raw[0]);
      d_raw[0] = upstream[0] * half * (1.0 - t * t);
      break;
    }
    case OutputMap::Kind::Box: {
      for (int k = 0; k < map.dim; ++k) {
        double s = sigmoid(raw[k]);
        d_raw[k] = upstream[k] * (map.hi - map.lo) * s * (1.0 - s);
      }
      break;
    }
    case OutputMap::Kind::Ball: {
      // d a_i / d x_j = delta_ij/(1+r) - x_i x_j / (r (1+r)^2), r = |x|;
      // the second term vanishes in the limit r -> 0.
      double sq = 0.0;
      for (int k = 0; k < map.dim; ++k) sq += raw[k] * raw[k];
      double r = std::sqrt(sq);
      double denom = 1.0 + r;
      double udotx = 0.0;
      for (int k = 0; k < map.dim; ++k) udotx += upstream[k] * raw[k];
      for (int k = 0; k < map.dim; ++k) {
        double second = (r > 0.0) ? udotx * raw[k] / (r * denom * denom) : 0.0;
        d_raw[k] = upstream[k] / denom - second;
      }
      break;
    }
  }
}

std::size_t PlayerStrategyNet::param_count() const {
  std::size_t n = fourier_matrix.size();
  for (const auto& l : layers) n += l.weights.size() + l.biases.size();
  return n;
}

void ParamGradient::zero() {
  std::fill(fourier_matrix.begin(), fourier_matrix.end(), 0.0);
  for (auto& l : layers) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0);
    std::fill(l.biases.begin(), l.biases.end(), 0.0);
  }
}

void ParamGradient::scale(double a) {
  for (double& x : fourier_matrix) x *= a;
  for (auto& l : layers) {
    for (double& x : l.weights) x *= a;
    for (double& x : l.biases) x *= a;
  }
}

void ParamGradient::axpy(double a, const ParamGradient& other) {
  for (std::size_t k = 0; k < fourier_matrix.size(); ++k) fourier_matrix[k] += a * other.fourier_matrix[k];
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (std::size_t k = 0; k < layers[l].weights.size(); ++k)
      layers[l].weights[k] += a * other.layers[l].weights[k];
    for (std::size_t k = 0; k < layers[l].biases.size(); ++k)
      layers[l].biases[k] += a * other.layers[l].biases[k];
  }
}

double ParamGradient::dot(const ParamGradient& other) const {
  double s = 0.0;
  for (std::size_t k = 0; k < fourier_matrix.size(); ++k) s += fourier_matrix[k] * other.fourier_matrix[k];
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (std::size_t k = 0; k < layers[l].weights.size(); ++k)
      s += layers[l].weights[k] * other.layers[l].weights[k];
    for (std::size_t k = 0; k < layers[l].biases.size(); ++k)
      s += layers[l].biases[k] * other.layers[l].biases[k];
  }
  return s;
}

double ParamGradient::norm() const { return std::sqrt(dot(*this)); }

bool ParamGradient::all_finite() const {
  for (double x : fourier_matrix)
    if (!std::isfinite(x)) return false;
  for (const auto& l : layers) {
    for (double x : l.weights)
      if (!std::isfinite(x)) return false;
    for (double x : l.biases)
      if (!std::isfinite(x)) return false;
  }
  return true;
}

ParamGradient zeros_like(const PlayerStrategyNet& net) {
  ParamGradient g;
  g.fourier_matrix.assign(net.fourier_matrix.size(), 0.0);
  g.layers.resize(net.layers.size());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    g.layers[l].weights.assign(net.layers[l].weights.size(), 0.0);
    g.layers[l].biases.assign(net.layers[l].biases.size(), 0.0);
  }
  return g;
}

void for_each_param(PlayerStrategyNet& net, const std::function<void(double&)>& fn) {
  for (double& x : net.fourier_matrix) fn(x);
  for (auto& l : net.layers) {
    for (double& x : l.weights) fn(x);
    for (double& x : l.biases) fn(x);
  }
}

void for_each_param(const PlayerStrategyNet& net, const std::function<void(double)>& fn) {
  for (double x : net.fourier_matrix) fn(x);
  for (const auto& l : net.layers) {
    for (double x : l.weights) fn(x);
    for (double x : l.biases) fn(x);
  }
}

void for_each_pair(PlayerStrategyNet& net, const ParamGradient& g,
                   const std::function<void(double&, double)>& fn) {
  for (std::size_t k = 0; k < net.fourier_matrix.size(); ++k) fn(net.fourier_matrix[k], g.fourier_matrix[k]);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    for (std::size_t k = 0; k < net.layers[l].weights.size(); ++k)
      fn(net.layers[l].weights[k], g.layers[l].weights[k]);
    for (std::size_t k = 0; k < net.layers[l].biases.size(); ++k)
      fn(net.layers[l].biases[k], g.layers[l].biases[k]);
  }
}

bool all_params_finite(const PlayerStrategyNet& net) {
  bool ok = true;
  for_each_param(net, [&ok](double x) { ok = ok && std::isfinite(x); });
  return ok;
}

PlayerStrategyNet init_p2sn(int player_dim, int fourier_dim, const std::vector<int>& hidden_sizes,
                            int noise_dim, const OutputMap& output_map, std::uint64_t seed,
                            double fourier_init_std) {
  if (player_dim < 1 || fourier_dim < 1 || noise_dim < 0) {
    throw std::invalid_argument("init_p2sn: sizes must be positive");
  }
  PlayerStrategyNet net;
  net.player_dim = player_dim;
  net.fourier_dim = fourier_dim;
  net.noise_dim = noise_dim;
  net.output_map = output_map;

  RngStream root(seed);
  RngStream bs = root.child(0);
  net.fourier_matrix.resize(static_cast<std::size_t>(fourier_dim) * player_dim);
  for (double& x : net.fourier_matrix) x = fourier_init_std * bs.normal();

  std::vector<int> dims;
  dims.push_back(fourier_dim + noise_dim);
  for (int h : hidden_sizes) {
    if (h < 1) throw std::invalid_argument("init_p2sn: hidden sizes must be positive");
    dims.push_back(h);
  }
  dims.push_back(output_map.raw_dim());

  net.layers.resize(dims.size() - 1);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    DenseLayer& layer = net.layers[l];
    layer.in = dims[l];
    layer.out = dims[l + 1];
    layer.weights.resize(static_cast<std::size_t>(layer.out) * layer.in);
    layer.biases.assign(layer.out, 0.0);
    RngStream ls = root.child(1 + l);
    double std_dev = std::sqrt(2.0 / layer.in);
    for (double& w : layer.weights) w = std_dev * ls.normal();
  }
  return net;
}

void forward_record(const PlayerStrategyNet& net, std::span<const double> player,
                    std::span<const double> noise, ForwardTape& tape) {
  if (static_cast<int>(player.size()) != net.player_dim) {
    throw std::invalid_argument("forward: player dimension mismatch");
  }
  if (static_cast<int>(noise.size()) != net.noise_dim) {
    throw std::invalid_argument("forward: noise dimension mismatch");
  }
  int nf = net.fourier_dim;
  tape.freq.resize(nf);
  tape.h0.resize(nf + net.noise_dim);
  for (int r = 0; r < nf; ++r) {
    double dot = 0.0;
    const double* row = net.fourier_matrix.data() + static_cast<std::size_t>(r) * net.player_dim;
    for (int c = 0; c < net.player_dim; ++c) dot += row[c] * player[c];
    tape.freq[r] = dot;
    tape.h0[r] = std::sin(dot);
  }
  for (int k = 0; k < net.noise_dim; ++k) tape.h0[nf + k] = noise[k];

  std::size_t n_layers = net.layers.size();
  tape.pre.resize(n_layers);
  tape.sig.resize(n_layers);
  tape.act.resize(n_layers);
  const std::vector<double>* input = &tape.h0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const DenseLayer& layer = net.layers[l];
    tape.pre[l].resize(layer.out);
    for (int r = 0; r < layer.out; ++r) {
      double acc = layer.biases[r];
      const double* row = layer.weights.data() + static_cast<std::size_t>(r) * layer.in;
      for (int c = 0; c < layer.in; ++c) acc += row[c] * (*input)[c];
      tape.pre[l][r] = acc;
    }
    bool last = (l + 1 == n_layers);
    if (last) {
      tape.sig[l].clear();
      tape.act[l] = tape.pre[l];  // linear raw output
    } else {
      tape.sig[l].resize(layer.out);
      tape.act[l].resize(layer.out);
      for (int r = 0; r < layer.out; ++r) {
        double s = sigmoid(tape.pre[l][r]);
        tape.sig[l][r] = s;
        tape.act[l][r] = tape.pre[l][r] * s;
      }
    }
    input = &tape.act[l];
  }

  tape.action.resize(net.output_map.action_dim());
  output_map_apply(net.output_map, tape.act.back(), tape.action);
}

std::vector<double> forward(const PlayerStrategyNet& net, std::span<const double> player,
                            std::span<const double> noise) {
  thread_local ForwardTape tape;
  forward_record(net, player, noise, tape);
  return tape.action;
}

void backward_accumulate(const PlayerStrategyNet& net, ForwardTape& tape,
                         std::span<const double> player, std::span<const double> upstream,
                         double scale, ParamGradient& acc) {
  if (static_cast<int>(upstream.size()) != net.action_dim()) {
    throw std::invalid_argument("backward: upstream dimension mismatch");
  }
  std::size_t n_layers = net.layers.size();
  auto& delta = tape.delta;
  auto& delta_prev = tape.delta_prev;

  delta.resize(net.layers.back().out);
  output_map_vjp(net.output_map, tape.act.back(), upstream, delta);
  if (scale != 1.0) {
    for (double& d : delta) d *= scale;
  }

  for (std::size_t li = n_layers; li-- > 0;) {
    const DenseLayer& layer = net.layers[li];
    const std::vector<double>& input = (li == 0) ? tape.h0 : tape.act[li - 1];
    ParamGradient::LayerGrad& lg = acc.layers[li];
    for (int r = 0; r < layer.out; ++r) {
      double d = delta[r];
      lg.biases[r] += d;
      double* wrow = lg.weights.data() + static_cast<std::size_t>(r) * layer.in;
      for (int c = 0; c < layer.in; ++c) wrow[c] += d * input[c];
    }
    // delta for the layer input
    delta_prev.assign(layer.in, 0.0);
    for (int r = 0; r < layer.out; ++r) {
      double d = delta[r];
      const double* wrow = layer.weights.data() + static_cast<std::size_t>(r) * layer.in;
      for (int c = 0; c < layer.in; ++c) delta_prev[c] += wrow[c] * d;
    }
    if (li > 0) {
      // through swish of the previous hidden layer: f'(x) = s (1 + x (1 - s))
      const std::vector<double>& pre = tape.pre[li - 1];
      const std::vector<double>& sig = tape.sig[li - 1];
      for (std::size_t k = 0; k < delta_prev.size(); ++k) {
        delta_prev[k] *= sig[k] * (1.0 + pre[k] * (1.0 - sig[k]));
      }
    }
    std::swap(delta, delta_prev);
  }

  // delta now spans h0 = sin(B i) ++ noise; only the Fourier block carries
  // parameters. d sin(B_r . i)/d B_rc = cos(B_r . i) * i_c.
  for (int r = 0; r < net.fourier_dim; ++r) {
    double d = delta[r] * std::cos(tape.freq[r]);
    double* brow = acc.fourier_matrix.data() + static_cast<std::size_t>(r) * net.player_dim;
    for (int c = 0; c < net.player_dim; ++c) brow[c] += d * player[c];
  }
}

ParamGradient grad_params(const PlayerStrategyNet& net, std::span<const double> player,
                          std::span<const double> noise, std::span<const double> upstream) {
  thread_local ForwardTape tape;
  forward_record(net, player, noise, tape);
  ParamGradient g = zeros_like(net);
  backward_accumulate(net, tape, player, upstream, 1.0, g);
  return g;
}

// ---------------------------------------------------------------------------
// Checkpoint format: one JSON line with array directory and net metadata,
// then the payload as raw little-endian IEEE-754 doubles. Offsets are bytes
// from the start of the payload.

namespace {

using nlohmann::json;

json output_map_to_json(const OutputMap& m) {
  json j;
  switch (m.kind) {
    case OutputMap::Kind::Interval: j["kind"] = "interval"; break;
    case OutputMap::Kind::Box: j["kind"] = "box"; break;
    case OutputMap::Kind::Ball: j["kind"] = "ball"; break;
  }
  j["lo"] = m.lo;
  j["hi"] = m.hi;
  j["dim"] = m.dim;
  return j;
}

OutputMap output_map_from_json(const json& j) {
  OutputMap m;
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "interval") m.kind = OutputMap::Kind::Interval;
  else if (kind == "box") m.kind = OutputMap::Kind::Box;
  else if (kind == "ball") m.kind = OutputMap::Kind::Ball;
  else throw IoError("checkpoint: unknown output map kind '" + kind + "'");
  m.lo = j.at("lo").get<double>();
  m.hi = j.at("hi").get<double>();
  m.dim = j.at("dim").get<int>();
  return m;
}

void append_doubles(std::string& payload, const std::vector<double>& xs) {
  static_assert(std::endian::native == std::endian::little,
                "checkpoint payload is little-endian; big-endian hosts are unsupported");
  std::size_t old = payload.size();
  payload.resize(old + xs.size() * sizeof(double));
  std::memcpy(payload.data() + old, xs.data(), xs.size() * sizeof(double));
}

}  // namespace

void save_checkpoint(const PlayerStrategyNet& net, const std::string& path) {
  json arrays = json::array();
  std::string payload;
  auto add = [&](const std::string& name, std::vector<std::size_t> shape,
                 const std::vector<double>& data) {
    arrays.push_back({{"name", name}, {"shape", shape}, {"offset", payload.size()}});
    append_doubles(payload, data);
  };
  add("fourier_matrix",
      {static_cast<std::size_t>(net.fourier_dim), static_cast<std::size_t>(net.player_dim)},
      net.fourier_matrix);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const DenseLayer& layer = net.layers[l];
    add("layers." + std::to_string(l) + ".weights",
        {static_cast<std::size_t>(layer.out), static_cast<std::size_t>(layer.in)}, layer.weights);
    add("layers." + std::to_string(l) + ".biases", {static_cast<std::size_t>(layer.out)},
        layer.biases);
  }
  json header;
  header["format"] = "contnash-checkpoint-v1";
  header["arrays"] = arrays;
  header["net"] = {{"player_dim", net.player_dim},
                   {"fourier_dim", net.fourier_dim},
                   {"noise_dim", net.noise_dim},
                   {"output_map", output_map_to_json(net.output_map)},
                   {"n_layers", net.layers.size()}};

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  out << header.dump() << '\n';
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw IoError("failed writing checkpoint: " + path);
}

PlayerStrategyNet load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::string header_line;
  if (!std::getline(in, header_line)) throw IoError("checkpoint missing header: " + path);
  json header;
  try {
    header = json::parse(header_line);
  } catch (const json::exception& e) {
    throw IoError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }
  if (header.value("format", "") != "contnash-checkpoint-v1") {
    throw IoError("checkpoint: unexpected format tag");
  }
  std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  PlayerStrategyNet net;
  const json& meta = header.at("net");
  net.player_dim = meta.at("player_dim").get<int>();
  net.fourier_dim = meta.at("fourier_dim").get<int>();
  net.noise_dim = meta.at("noise_dim").get<int>();
  net.output_map = output_map_from_json(meta.at("output_map"));
  net.layers.resize(meta.at("n_layers").get<std::size_t>());

  auto read_array = [&](const json& entry, std::vector<double>& dst, std::size_t expect_rank) {
    std::vector<std::size_t> shape = entry.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != expect_rank) throw IoError("checkpoint: bad array rank");
    std::size_t count = 1;
    for (std::size_t s : shape) count *= s;
    std::size_t offset = entry.at("offset").get<std::size_t>();
    if (offset + count * sizeof(double) > payload.size()) {
      throw IoError("checkpoint: array extends past end of payload");
    }
    dst.resize(count);
    std::memcpy(dst.data(), payload.data() + offset, count * sizeof(double));
    return shape;
  };

  for (const json& entry : header.at("arrays")) {
    std::string name = entry.at("name").get<std::string>();
    if (name == "fourier_matrix") {
      read_array(entry, net.fourier_matrix, 2);
    } else if (name.rfind("layers.", 0) == 0) {
      std::size_t dot = name.find('.', 7);
      std::size_t idx = std::stoul(name.substr(7, dot - 7));
      if (idx >= net.layers.size()) throw IoError("checkpoint: layer index out of range");
      std::string field = name.substr(dot + 1);
      if (field == "weights") {
        auto shape = read_array(entry, net.layers[idx].weights, 2);
        net.layers[idx].out = static_cast<int>(shape[0]);
        net.layers[idx].in = static_cast<int>(shape[1]);
      } else if (field == "biases") {
        read_array(entry, net.layers[idx].biases, 1);
      } else {
        throw IoError("checkpoint: unknown layer field '" + field + "'");
      }
    } else {
      throw IoError("checkpoint: unknown array '" + name + "'");
    }
  }
  if (!all_params_finite(net)) throw IoError("checkpoint: non-finite parameters");
  return net;
}

}  // namespace contnash
