#include "contnash/measures.h"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace contnash {

namespace {
// Standard normal CDF via erfc for tail accuracy.
double phi_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
}  // namespace

double trunc_gauss_mass(const TruncGauss& tg) {
  double mass = 1.0;
  for (double c : tg.center) {
    mass *= phi_cdf((1.0 - c) / tg.sigma) - phi_cdf((0.0 - c) / tg.sigma);
  }
  return mass;
}

void trunc_gauss_sample(const TruncGauss& tg, RngStream& rng, std::span<double> out) {
  assert(out.size() == tg.center.size());
  // Coordinates are independent, so per-coordinate rejection is exact.
  for (std::size_t k = 0; k < tg.center.size(); ++k) {
    double x;
    do {
      x = tg.center[k] + tg.sigma * rng.normal();
    } while (x < 0.0 || x > 1.0);
    out[k] = x;
  }
}

void sample_uniform_box(int d, RngStream& rng, std::span<double> out) {
  assert(static_cast<int>(out.size()) == d);
  for (int k = 0; k < d; ++k) out[k] = rng.uniform();
}

double roberts_phi(int d) {
  if (d < 1) throw std::invalid_argument("roberts_phi: d must be >= 1");
  // Newton on f(x) = x^(d+1) - x - 1, monotone for x > 1.
  double x = 2.0;
  for (int it = 0; it < 200; ++it) {
    double xp = std::pow(x, d);
    double f = xp * x - x - 1.0;
    double df = (d + 1) * xp - 1.0;
    double step = f / df;
    x -= step;
    if (std::abs(step) < 1e-16) break;
  }
  return x;
}

std::vector<double> roberts_alphas(int d) {
  double phi = roberts_phi(d);
  std::vector<double> alphas(d);
  double p = 1.0;
  for (int j = 0; j < d; ++j) {
    p /= phi;
    alphas[j] = p;
  }
  return alphas;
}

std::vector<std::vector<double>> roberts_sequence(int n, int d) {
  if (n < 1 || d < 1) throw std::invalid_argument("roberts_sequence: n, d must be >= 1");
  std::vector<double> alphas = roberts_alphas(d);
  std::vector<std::vector<double>> pts(n, std::vector<double>(d));
  for (int k = 1; k <= n; ++k) {
    for (int j = 0; j < d; ++j) {
      double x = static_cast<double>(k) * alphas[j];
      pts[k - 1][j] = x - std::floor(x);
    }
  }
  return pts;
}

std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 2) throw std::invalid_argument("linspace: n must be >= 2");
  std::vector<double> xs(n);
  for (int k = 0; k < n; ++k) {
    xs[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  }
  return xs;
}

}  // namespace contnash
