#pragma once

#include <array>

#include "fbim/geometry.hpp"

namespace fbim {

struct SplitParams {
  double xi = 1.0;   // splitting parameter, 1/length
  double eta = 1.0;  // viscosity
};

// E1(z) = int_z^inf e^-t / t dt. Throws std::domain_error for z <= 0.
double exp_integral_e1(double z);

// (1 + k^2/4xi^2) exp(-k^2/4xi^2)
double hasimoto_hat(double k, double xi);

// 2 pi (k1, k2) / L
Vec2 wave_vector(int k1, int k2, double L);

// (1/4 pi eta) [E1(xi^2 r^2)/2 I + (r r^T / r^2 - I) exp(-xi^2 r^2)]
Mat2 stokeslet_real(const Vec2& r, const SplitParams& sp);

// B(k) = H(k)/k^2 (I - khat khat^T). The wave part of the periodic Stokeslet
// is (1/eta V) sum_{k != 0} B(k) exp(i k.r).
Mat2 stokeslet_wave(const Vec2& k, const SplitParams& sp);

// Periodic rotlet velocity per unit torque:
//   (1/4 pi eta) [ sum_p R_r(x + pL) + (1/V) sum_{k != 0} R_w(k) sin(k.x) ]
// with R_r = x^perp/r^2 (1 - xi^2 r^2) exp(-xi^2 r^2), R_w = 2 pi k^perp/k^2 H(k)
// and x^perp = (-x2, x1).
Vec2 rotlet_real(const Vec2& r, const SplitParams& sp);
Vec2 rotlet_wave(const Vec2& k, const SplitParams& sp);

// Rank-3 tensors stored as T[j][l][m] -> t[4 j + 2 l + m].
using Tensor3 = std::array<double, 8>;

Tensor3 stresslet_free(const Vec2& r);
Tensor3 stresslet_real(const Vec2& r, const SplitParams& sp);
Tensor3 stresslet_wave(const Vec2& k, const SplitParams& sp);
// (4 pi / V) delta_lm x_j
Tensor3 stresslet_mean(const Vec2& x, double V);

// Contractions T_jlm n_m -> 2x2 (j, l).
Mat2 contract_m(const Tensor3& t, const Vec2& n);
// T_jlm S_lm -> vector (j).
Vec2 contract_lm(const Tensor3& t, const Mat2& S);

// Periodic sums by real-space images plus direct wave sums. The real sum
// includes all images with |r + pL| < rcut; the wave sum runs over
// |k| <= kmax. These are reference-quality, O(N_k) per evaluation.
struct PeriodicSumParams {
  double L = 1.0;
  double xi = 1.0;
  double eta = 1.0;
  double rcut = 0.0;
  double kmax = 0.0;
};

// Parameters so both truncations sit below tol for the given real cutoff.
PeriodicSumParams periodic_sum_params(double L, double rcut, double tol, double eta = 1.0);

Mat2 periodic_stokeslet(const Vec2& r, const PeriodicSumParams& p);
Vec2 periodic_rotlet(const Vec2& r, const PeriodicSumParams& p);
// Velocity (1/4pi) sum T_jlm(r + pL) S_lm, without the mean term.
Vec2 periodic_stresslet(const Vec2& r, const Mat2& S, const PeriodicSumParams& p);

}  // namespace fbim
