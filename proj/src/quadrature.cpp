#include "fbim/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fbim {

using std::numbers::pi;

namespace {

// Generated by tools/alpert_tables.py (node, weight).
constexpr double kOrder4[3][2] = {
    {0.023796472841189736968, 0.087959426755938866257},
    {0.2935370741501914568, 0.49890171529136991035},
    {1.023715124251890253, 0.9131388579526912234},
};

constexpr double kOrder8[7][2] = {
    {0.0065318157085679182902, 0.024621941989952031578},
    {0.090867445846577286485, 0.17013158668541780983},
    {0.39679665333758776795, 0.46092563586500772359},
    {1.0278566405256457006, 0.79472911486218942682},
    {1.9452885929092660134, 1.0087104143379325893},
    {2.9801479338896396516, 1.0360936497262155814},
    {3.9988613499511230442, 1.0047876565332848375},
};

int wrap_index(int i, int n) { return ((i % n) + n) % n; }

}  // namespace

AlpertRule AlpertRule::get(int order) {
  AlpertRule r;
  r.order = order;
  if (order == 4) {
    r.a = 2;
    for (const auto& e : kOrder4) {
      r.v.push_back(e[0]);
      r.w.push_back(e[1]);
    }
  } else if (order == 8) {
    r.a = 5;
    for (const auto& e : kOrder8) {
      r.v.push_back(e[0]);
      r.w.push_back(e[1]);
    }
  } else {
    throw std::invalid_argument("Alpert order must be 4 or 8");
  }
  for (double v : r.v) {
    std::vector<int> nodes;
    for (int k = -order; k <= 2 * order; ++k) nodes.push_back(k);
    std::stable_sort(nodes.begin(), nodes.end(), [v](int x, int y) {
      const double dx = std::abs(x - v), dy = std::abs(y - v);
      if (std::abs(dx - dy) > 1e-12) return dx < dy;
      return std::abs(x) < std::abs(y);
    });
    nodes.resize(order);
    std::sort(nodes.begin(), nodes.end());
    std::vector<double> c;
    for (int k : nodes) {
      double p = 1;
      for (int i : nodes)
        if (i != k) p *= (v - i) / static_cast<double>(k - i);
      c.push_back(p);
      r.band = std::max(r.band, std::abs(k));
    }
    r.offsets.push_back(std::move(nodes));
    r.interp.push_back(std::move(c));
  }
  return r;
}

double alpert_periodic_integral(const AlpertRule& rule, int Np, int t,
                                const std::function<double(double)>& K,
                                const std::vector<double>& sigma) {
  const double ds = 2 * pi / Np;
  const double st = t * ds;
  double sum = 0;
  for (int k = 1; k < Np; ++k) {
    const int off = k <= Np / 2 ? k : k - Np;
    if (std::abs(off) < rule.a) continue;
    sum += K(st + off * ds) * sigma[wrap_index(t + off, Np)];
  }
  for (int side : {1, -1}) {
    for (std::size_t j = 0; j < rule.v.size(); ++j) {
      double s_interp = 0;
      for (std::size_t q = 0; q < rule.offsets[j].size(); ++q)
        s_interp += rule.interp[j][q] * sigma[wrap_index(t + side * rule.offsets[j][q], Np)];
      sum += rule.w[j] * K(st + side * rule.v[j] * ds) * s_interp;
    }
  }
  return sum * ds;
}

SingularBlock alpert_reference(const BodyShape& shape, const SurfaceMesh& mesh,
                               const AlpertRule& rule, const SplitParams& sp) {
  const int Np = mesh.Np;
  if (Np < rule.min_nodes())
    throw std::invalid_argument("Alpert stencils overlap: need Np >= " +
                                std::to_string(rule.min_nodes()));
  SingularBlock raw;
  raw.Np = Np;
  raw.band = rule.band;
  raw.entries.assign(static_cast<std::size_t>(Np) * (2 * raw.band + 1), Mat2::Zero());
  const double ds = mesh.ds;
  for (int t = 0; t < Np; ++t) {
    const double st = t * ds;
    for (int side : {1, -1}) {
      for (std::size_t j = 0; j < rule.v.size(); ++j) {
        const Vec2 y = curve_point(shape, st + side * rule.v[j] * ds);
        const Mat2 G = stokeslet_real(mesh.x[t] - y, sp) * rule.w[j];
        for (std::size_t q = 0; q < rule.offsets[j].size(); ++q)
          raw.at(t, side * rule.offsets[j][q]) += G * rule.interp[j][q];
      }
      // Dropped trapezoid nodes.
      for (int k = 1; k < rule.a; ++k) {
        const int n = wrap_index(t + side * k, Np);
        raw.at(t, side * k) -= stokeslet_real(mesh.x[t] - mesh.x[n], sp);
      }
    }
  }
  SingularBlock sym = raw;
  for (int t = 0; t < Np; ++t)
    for (int k = -raw.band; k <= raw.band; ++k) {
      const int n = wrap_index(t + k, Np);
      sym.at(t, k) = 0.5 * (raw.at(t, k) + raw.at(n, -k).transpose());
    }
  sym.r_alpert = correction_radius(rule, mesh);
  return sym;
}

void apply_rotated(const SingularBlock& block, double theta, const double* mu, double* out) {
  const Mat2 R = rotation(theta);
  const int Np = block.Np;
  // R A R^T mu = R (A (R^T mu))
  std::vector<Vec2> rmu(Np);
  for (int n = 0; n < Np; ++n) rmu[n] = R.transpose() * Vec2(mu[2 * n], mu[2 * n + 1]);
  for (int t = 0; t < Np; ++t) {
    Vec2 acc = Vec2::Zero();
    for (int k = -block.band; k <= block.band; ++k) {
      acc += block.at(t, k) * rmu[wrap_index(t + k, Np)];
    }
    const Vec2 v = R * acc;
    out[2 * t] += v.x();
    out[2 * t + 1] += v.y();
  }
}

SingularBlock rotate_block(const SingularBlock& block, double theta) {
  const Mat2 R = rotation(theta);
  SingularBlock out = block;
  for (auto& e : out.entries) e = R * e * R.transpose();
  return out;
}

double correction_radius(const AlpertRule& rule, const SurfaceMesh& mesh) {
  double r = 0;
  for (int t = 0; t < mesh.Np; ++t)
    for (int side : {1, -1})
      r = std::max(r, (mesh.x[t] - mesh.x[wrap_index(t + side * rule.band, mesh.Np)]).norm());
  return r;
}

}  // namespace fbim
