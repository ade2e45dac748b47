#pragma once

#include <span>
#include <vector>

#include "contnash/rng.h"

namespace contnash {

// Gaussian measure on [0,1]^d: independent coordinates of scale `sigma`
// centered at `center`, truncated to the unit box WITHOUT renormalization.
// Its total mass is < 1 near the boundary; samplers draw from the normalized
// density and integrand values are rescaled by trunc_gauss_mass.
struct TruncGauss {
  std::vector<double> center;  // inside [0,1]^d
  double sigma = 0.1;
};

// Exact mass of the truncated measure: prod_k Phi((1-c_k)/sigma) - Phi(-c_k/sigma).
double trunc_gauss_mass(const TruncGauss& tg);

// Sample from the truncated Gaussian normalized to a probability measure.
// Per-coordinate rejection from N(c_k, sigma); acceptance >= ~0.5 for
// in-domain centers at sigma = 0.1.
void trunc_gauss_sample(const TruncGauss& tg, RngStream& rng, std::span<double> out);

// i.i.d. uniform coordinates on [0,1)^d.
void sample_uniform_box(int d, RngStream& rng, std::span<double> out);

// Generalized golden ratio: the unique real root > 1 of x^(d+1) = x + 1
// (golden ratio for d = 1, plastic number for d = 2).
double roberts_phi(int d);

// Per-dimension increments alpha_j = phi_d^{-j}, j = 1..d.
std::vector<double> roberts_alphas(int d);

// First n points of the Roberts low-discrepancy sequence in [0,1)^d,
// 1-based: point k has coordinate j equal to frac(k * alpha_j).
std::vector<std::vector<double>> roberts_sequence(int n, int d);

// n equally spaced points on [lo, hi] including both endpoints.
std::vector<double> linspace(double lo, double hi, int n);

}  // namespace contnash
