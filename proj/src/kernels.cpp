#include "fbim/kernels.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace fbim {

using std::numbers::pi;

double exp_integral_e1(double z) {
  if (!(z > 0)) throw std::domain_error("E1 needs z > 0");
  if (z <= 1.0) {
    // -gamma - ln z - sum_{k>=1} (-z)^k / (k k!)
    double term = 1.0, sum = 0.0;
    for (int k = 1; k < 60; ++k) {
      term *= -z / k;
      const double add = term / k;
      sum += add;
      if (std::abs(add) < 1e-18 * std::abs(sum)) break;
    }
    return -std::numbers::egamma - std::log(z) - sum;
  }
  if (z > 745.0) return 0.0;
  // Modified Lentz evaluation of the continued fraction.
  constexpr double tiny = 1e-300;
  double b = z + 1.0, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -static_cast<double>(i) * i;
    b += 2.0;
    d = 1.0 / (an * d + b);
    c = b + an / c;
    const double del = c * d;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return h * std::exp(-z);
}

double hasimoto_hat(double k, double xi) {
  const double t = k * k / (4 * xi * xi);
  return (1 + t) * std::exp(-t);
}

Vec2 wave_vector(int k1, int k2, double L) { return Vec2(2 * pi * k1 / L, 2 * pi * k2 / L); }

Mat2 stokeslet_real(const Vec2& r, const SplitParams& sp) {
  const double r2 = r.squaredNorm();
  if (!(r2 > 0)) throw std::domain_error("stokeslet_real at r = 0");
  const double x = sp.xi * sp.xi * r2;
  const double ex = std::exp(-x);
  const double e1 = exp_integral_e1(x);
  Mat2 G = (r * r.transpose()) * (ex / r2);
  const double diag = 0.5 * e1 - ex;
  G(0, 0) += diag;
  G(1, 1) += diag;
  return G / (4 * pi * sp.eta);
}

Mat2 stokeslet_wave(const Vec2& k, const SplitParams& sp) {
  const double k2 = k.squaredNorm();
  if (!(k2 > 0)) throw std::domain_error("stokeslet_wave at k = 0");
  const double h = hasimoto_hat(std::sqrt(k2), sp.xi);
  Mat2 B = Mat2::Identity() - k * k.transpose() / k2;
  return B * (h / k2);
}

Vec2 rotlet_real(const Vec2& r, const SplitParams& sp) {
  const double r2 = r.squaredNorm();
  if (!(r2 > 0)) throw std::domain_error("rotlet_real at r = 0");
  const double x = sp.xi * sp.xi * r2;
  return perp(r) * ((1 - x) * std::exp(-x) / r2);
}

Vec2 rotlet_wave(const Vec2& k, const SplitParams& sp) {
  const double k2 = k.squaredNorm();
  if (!(k2 > 0)) throw std::domain_error("rotlet_wave at k = 0");
  return perp(k) * (2 * pi * hasimoto_hat(std::sqrt(k2), sp.xi) / k2);
}

Tensor3 stresslet_free(const Vec2& r) {
  const double r2 = r.squaredNorm();
  if (!(r2 > 0)) throw std::domain_error("stresslet at r = 0");
  Tensor3 t{};
  for (int j = 0; j < 2; ++j)
    for (int l = 0; l < 2; ++l)
      for (int m = 0; m < 2; ++m) t[4 * j + 2 * l + m] = -4 * r[j] * r[l] * r[m] / (r2 * r2);
  return t;
}

Tensor3 stresslet_real(const Vec2& r, const SplitParams& sp) {
  const double r2 = r.squaredNorm();
  if (!(r2 > 0)) throw std::domain_error("stresslet_real at r = 0");
  const double xi2 = sp.xi * sp.xi;
  const double ex = std::exp(-xi2 * r2);
  Tensor3 t{};
  for (int j = 0; j < 2; ++j)
    for (int l = 0; l < 2; ++l)
      for (int m = 0; m < 2; ++m) {
        double v = -4 * r[j] * r[l] * r[m] / (r2 * r2) * (1 + xi2 * r2);
        v += 2 * xi2 * ((l == m ? r[j] : 0.0) + (m == j ? r[l] : 0.0));
        t[4 * j + 2 * l + m] = v * ex;
      }
  return t;
}

Tensor3 stresslet_wave(const Vec2& k, const SplitParams& sp) {
  const double k2 = k.squaredNorm();
  if (!(k2 > 0)) throw std::domain_error("stresslet_wave at k = 0");
  const double q = k2 / (4 * sp.xi * sp.xi);
  const double ex = std::exp(-q);
  const double pre = -4 * pi / (k2 * k2);
  Tensor3 t{};
  for (int j = 0; j < 2; ++j)
    for (int l = 0; l < 2; ++l)
      for (int m = 0; m < 2; ++m) {
        const double a = k2 * ((l == m ? k[j] : 0.0) + (m == j ? k[l] : 0.0)) - 2 * k[j] * k[l] * k[m];
        const double v = (1 + q) * a + (j == l ? k2 * k[m] : 0.0);
        t[4 * j + 2 * l + m] = pre * v * ex;
      }
  return t;
}

Tensor3 stresslet_mean(const Vec2& x, double V) {
  Tensor3 t{};
  for (int j = 0; j < 2; ++j)
    for (int l = 0; l < 2; ++l) t[4 * j + 2 * l + l] = 4 * pi / V * x[j];
  return t;
}

Mat2 contract_m(const Tensor3& t, const Vec2& n) {
  Mat2 out;
  for (int j = 0; j < 2; ++j)
    for (int l = 0; l < 2; ++l) out(j, l) = t[4 * j + 2 * l] * n[0] + t[4 * j + 2 * l + 1] * n[1];
  return out;
}

Vec2 contract_lm(const Tensor3& t, const Mat2& S) {
  Vec2 out = Vec2::Zero();
  for (int j = 0; j < 2; ++j)
    for (int l = 0; l < 2; ++l)
      for (int m = 0; m < 2; ++m) out[j] += t[4 * j + 2 * l + m] * S(l, m);
  return out;
}

PeriodicSumParams periodic_sum_params(double L, double rcut, double tol, double eta) {
  PeriodicSumParams p;
  p.L = L;
  p.eta = eta;
  p.rcut = rcut;
  // exp(-xi^2 rc^2) (1 + xi^2 rc^2) <= tol, and the same in k with k^2/4xi^2.
  double t = std::log(1 / tol);
  for (int it = 0; it < 20; ++it) t = std::log((1 + t) / tol);
  p.xi = std::sqrt(t) / rcut;
  p.kmax = 2 * p.xi * std::sqrt(t);
  return p;
}

namespace {

template <class F>
void for_images(const Vec2& r, double L, double rcut, F&& f) {
  const int n = static_cast<int>(std::ceil(rcut / L)) + 1;
  for (int p1 = -n; p1 <= n; ++p1)
    for (int p2 = -n; p2 <= n; ++p2) {
      const Vec2 x = r + Vec2(p1 * L, p2 * L);
      const double d2 = x.squaredNorm();
      if (d2 < rcut * rcut && d2 > 0) f(x);
    }
}

template <class F>
void for_waves(double L, double kmax, F&& f) {
  const int n = static_cast<int>(std::ceil(kmax * L / (2 * pi)));
  for (int k1 = -n; k1 <= n; ++k1)
    for (int k2 = -n; k2 <= n; ++k2) {
      if (k1 == 0 && k2 == 0) continue;
      const Vec2 k = wave_vector(k1, k2, L);
      if (k.norm() <= kmax) f(k);
    }
}

}  // namespace

Mat2 periodic_stokeslet(const Vec2& r, const PeriodicSumParams& p) {
  const SplitParams sp{p.xi, p.eta};
  Mat2 G = Mat2::Zero();
  for_images(r, p.L, p.rcut, [&](const Vec2& x) { G += stokeslet_real(x, sp); });
  const double V = p.L * p.L;
  for_waves(p.L, p.kmax, [&](const Vec2& k) {
    G += stokeslet_wave(k, sp) * (std::cos(k.dot(r)) / (p.eta * V));
  });
  return G;
}

Vec2 periodic_rotlet(const Vec2& r, const PeriodicSumParams& p) {
  const SplitParams sp{p.xi, p.eta};
  Vec2 u = Vec2::Zero();
  for_images(r, p.L, p.rcut, [&](const Vec2& x) { u += rotlet_real(x, sp); });
  const double V = p.L * p.L;
  for_waves(p.L, p.kmax, [&](const Vec2& k) { u += rotlet_wave(k, sp) * (std::sin(k.dot(r)) / V); });
  return u / (4 * pi * p.eta);
}

Vec2 periodic_stresslet(const Vec2& r, const Mat2& S, const PeriodicSumParams& p) {
  const SplitParams sp{p.xi, p.eta};
  Vec2 u = Vec2::Zero();
  for_images(r, p.L, p.rcut, [&](const Vec2& x) { u += contract_lm(stresslet_real(x, sp), S); });
  const double V = p.L * p.L;
  for_waves(p.L, p.kmax, [&](const Vec2& k) {
    u += contract_lm(stresslet_wave(k, sp), S) * (std::sin(k.dot(r)) / V);
  });
  return u / (4 * pi);
}

}  // namespace fbim
