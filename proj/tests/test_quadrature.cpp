#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fbim/mobility.hpp"
#include "fbim/quadrature.hpp"

using namespace fbim;
using std::numbers::pi;

namespace {

// Model problem: int_0^{2pi} log|2 sin((s - t)/2)| cos(m t) dt = -pi cos(m s) / m.
double model_error(const AlpertRule& rule, int Np, int m) {
  const double ds = 2 * pi / Np;
  std::vector<double> sigma(Np);
  for (int j = 0; j < Np; ++j) sigma[j] = std::cos(m * j * ds);
  double err = 0;
  for (int t = 0; t < Np; t += std::max(1, Np / 8)) {
    const double st = t * ds;
    const auto K = [st](double s) { return std::log(std::abs(2 * std::sin((s - st) / 2))); };
    const double got = alpert_periodic_integral(rule, Np, t, K, sigma);
    err = std::max(err, std::abs(got + pi * std::cos(m * st) / m));
  }
  return err;
}

}  // namespace

TEST(AlpertRule, OnlyOrdersFourAndEight) {
  EXPECT_EQ(AlpertRule::get(4).order, 4);
  EXPECT_EQ(AlpertRule::get(8).order, 8);
  EXPECT_THROW(AlpertRule::get(6), std::invalid_argument);
  EXPECT_EQ(AlpertRule::get(4).band, 3);
  EXPECT_EQ(AlpertRule::get(8).band, 7);
}

TEST(AlpertRule, InterpolationReproducesPolynomials) {
  for (int order : {4, 8}) {
    const AlpertRule r = AlpertRule::get(order);
    for (std::size_t j = 0; j < r.v.size(); ++j)
      for (int deg = 0; deg < order; ++deg) {
        double s = 0;
        for (std::size_t q = 0; q < r.offsets[j].size(); ++q)
          s += r.interp[j][q] * std::pow(static_cast<double>(r.offsets[j][q]), deg);
        EXPECT_NEAR(s, std::pow(r.v[j], deg), 1e-10 * std::pow(8.0, deg)) << order << " " << j << " " << deg;
      }
  }
}

TEST(AlpertQuadrature, ModelProblemConvergesAtOrder) {
  for (int order : {4, 8}) {
    const AlpertRule r = AlpertRule::get(order);
    for (int m : {1, 3}) {
      const double e32 = model_error(r, 32, m), e64 = model_error(r, 64, m);
      EXPECT_GE(e32 / e64, std::pow(2.0, order) / 2) << "order " << order << " m " << m;
    }
  }
  EXPECT_LT(model_error(AlpertRule::get(8), 64, 1), 1e-10);
}

TEST(AlpertQuadrature, LogMomentOfConstant) {
  // int_0^{2pi} log|2 sin(s/2)| ds = 0.
  for (int order : {4, 8}) {
    const AlpertRule r = AlpertRule::get(order);
    const int Np = 64;
    const std::vector<double> one(Np, 1.0);
    const auto K = [](double s) { return std::log(std::abs(2 * std::sin(s / 2))); };
    EXPECT_NEAR(alpert_periodic_integral(r, Np, 0, K, one), 0.0, order == 4 ? 1e-6 : 1e-11);
  }
}

TEST(SingularBlock, RejectsOverlappingStencils) {
  const BodyShape disk = BodyShape::disk(1.0);
  const AlpertRule r8 = AlpertRule::get(8);
  EXPECT_THROW(alpert_reference(disk, discretize(disk, 14), r8, {5.0, 1.0}), std::invalid_argument);
  EXPECT_NO_THROW(alpert_reference(disk, discretize(disk, 16), r8, {5.0, 1.0}));
}

TEST(SingularBlock, SymmetricAfterSymmetrization) {
  const BodyShape star = BodyShape::starfish(0.3, 0.3);
  const SurfaceMesh mesh = discretize(star, 48);
  const SingularBlock b = alpert_reference(star, mesh, AlpertRule::get(4), {10.0, 1.0});
  for (int t = 0; t < mesh.Np; ++t)
    for (int k = -b.band; k <= b.band; ++k) {
      const int n = (t + k + mesh.Np) % mesh.Np;
      EXPECT_NEAR((b.at(t, k) - b.at(n, -k).transpose()).norm(), 0.0, 1e-15);
    }
}

TEST(SingularBlock, DiskBlockIsRotationCovariant) {
  const BodyShape disk = BodyShape::disk(0.5);
  const SurfaceMesh mesh = discretize(disk, 32);
  const SingularBlock b = alpert_reference(disk, mesh, AlpertRule::get(8), {8.0, 1.0});
  for (int t = 0; t < mesh.Np; ++t) {
    const Mat2 R = rotation(t * mesh.ds);
    for (int k = -b.band; k <= b.band; ++k)
      EXPECT_NEAR((b.at(t, k) - R * b.at(0, k) * R.transpose()).norm(), 0.0, 1e-13);
  }
}

TEST(SingularBlock, RotatedApplicationMatchesRotatedBlock) {
  const BodyShape star = BodyShape::starfish(0.3, 0.3);
  const SurfaceMesh mesh = discretize(star, 32);
  const SingularBlock b = alpert_reference(star, mesh, AlpertRule::get(4), {10.0, 1.0});
  Eigen::VectorXd mu = Eigen::VectorXd::LinSpaced(64, -1.0, 2.0).array().sin();
  for (double theta : {0.0, 0.7}) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(64), c = Eigen::VectorXd::Zero(64);
    apply_rotated(b, theta, mu.data(), a.data());
    const SingularBlock rb = rotate_block(b, theta);
    apply_rotated(rb, 0.0, mu.data(), c.data());
    EXPECT_NEAR((a - c).norm(), 0.0, 1e-14 * a.norm());
  }
}

TEST(CorrectionRadius, BandEdgeDistance) {
  const SurfaceMesh m64 = discretize(BodyShape::disk(1.0), 64);
  const SurfaceMesh m128 = discretize(BodyShape::disk(1.0), 128);
  const double r4 = correction_radius(AlpertRule::get(4), m64);
  const double r8 = correction_radius(AlpertRule::get(8), m64);
  EXPECT_NEAR(r4, 2 * std::sin(3 * pi / 64), 1e-14);
  EXPECT_NEAR(r8, 2 * std::sin(7 * pi / 64), 1e-14);
  EXPECT_NEAR(r8 / r4, 7.0 / 3.0, 0.05);
  EXPECT_NEAR(correction_radius(AlpertRule::get(4), m128) / r4, 0.5, 2e-3);
}

TEST(SingleLayer, DiskNormalModeIsNearNull) {
  // The single layer annihilates the normal traction; the discrete residual is
  // quadrature error and shrinks with Np.
  Configuration cfg;
  cfg.domain.L = 4.0;
  cfg.shapes.push_back(BodyShape::disk(1.0));
  cfg.bodies.push_back(Body{Vec2(2, 2), 0.3, 0});
  const auto residual = [&cfg](int order, int Np) {
    FbimParams p;
    p.Np = Np;
    p.order = order;
    p.plan = select_params(1e-10, cfg.domain.L, 3);
    const FbimContext ctx(cfg, p);
    const SingleLayer layer = ctx.single_layer(cfg);
    const Eigen::VectorXd n = normal_mode(layer.disc().meshes[0]);
    const Eigen::VectorXd t = Eigen::VectorXd::Ones(n.size()) / std::sqrt(static_cast<double>(n.size()));
    return layer.apply(n).norm() / (layer.apply(t).norm() * n.norm());
  };
  const double r4_64 = residual(4, 64), r4_128 = residual(4, 128);
  EXPECT_LT(r4_64, 2e-5);
  EXPECT_GT(r4_64 / r4_128, 8.0);
  EXPECT_LT(residual(8, 128), 1e-8);
}
