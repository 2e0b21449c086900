#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fbim/ewald.hpp"
#include "fbim/mobility.hpp"
#include "fbim/rng.hpp"

using namespace fbim;
using std::numbers::pi;

namespace {

Configuration two_disks(double L = 1.0) {
  Configuration cfg;
  cfg.domain.L = L;
  cfg.shapes.push_back(BodyShape::disk(0.15 * L));
  cfg.bodies.push_back(Body{Vec2(0.3 * L, 0.4 * L), 0.0, 0});
  cfg.bodies.push_back(Body{Vec2(0.72 * L, 0.55 * L), 1.1, 0});
  return cfg;
}

std::vector<Vec2> random_points(int n, double L, std::uint64_t seed) {
  GaussianStream g(seed, 0, 0, Purpose::Test);
  std::vector<Vec2> p;
  for (int i = 0; i < n; ++i) p.emplace_back(L * g.uniform(), L * g.uniform());
  return p;
}

}  // namespace

TEST(SelectParams, WorkedExamples) {
  const EwaldPlan a = select_params(1e-9, 1.0, 4);
  EXPECT_NEAR(a.rc, 0.25, 1e-15);
  EXPECT_NEAR(a.xi, std::sqrt(std::log(100.0 / 1e-9)) / 0.25, 1e-12);
  EXPECT_NEAR(a.xi, 20.13, 0.01);
  EXPECT_EQ(a.P, 15);
  EXPECT_EQ(a.M % 2, 0);
  EXPECT_GE(pi * a.M, 2 * a.xi * std::sqrt(std::log(1e9)));
  EXPECT_LT(pi * (a.M - 2), 2 * a.xi * std::sqrt(std::log(1e9)));

  const EwaldPlan b = select_params(1e-6, 1.0, 10);
  EXPECT_NEAR(b.xi, 42.9, 0.05);
  EXPECT_EQ(b.P % 2, 1);
  EXPECT_GE(b.P, 2 / pi * std::log(1e6));
}

TEST(SelectParams, RejectsBadInput) {
  EXPECT_THROW(select_params(1e-9, 1.0, 2), std::invalid_argument);
  EXPECT_THROW(select_params(0.0, 1.0, 4), std::invalid_argument);
  EXPECT_THROW(select_params(1e-2, 1.0, 4), std::invalid_argument);
  EXPECT_THROW(select_params(1e-13, 1.0, 4), std::invalid_argument);
  EXPECT_THROW(select_params(1e-9, -1.0, 4), std::invalid_argument);
  EXPECT_THROW(plan_for_xi(1e-9, 1.0, 4, 0.0), std::invalid_argument);
}

TEST(AlpertRatio, WarnsAboveThreshold) {
  const EwaldPlan p = select_params(1e-9, 1.0, 4);
  std::string w;
  EXPECT_NEAR(alpert_ratio(p, 0.1, &w), 0.4, 1e-14);
  EXPECT_TRUE(w.empty());
  EXPECT_NEAR(alpert_ratio(p, 0.2, &w), 0.8, 1e-14);
  EXPECT_FALSE(w.empty());
}

TEST(WaveOperator, MatchesDirectSumWhenResolved) {
  // The gridding error falls with the window width and the grid size; with a
  // generous grid the fast sum reproduces the direct k-sum.
  const EwaldPlan base = select_params(1e-10, 1.0, 4);
  const auto pts = random_points(30, 1.0, 3);
  GaussianStream g(4, 0, 0, Purpose::Test);
  const Eigen::VectorXd mu = g.normal_vector(60);
  const Eigen::VectorXd ref = wave_matvec_direct(pts, mu, base.xi, 1.3, 1.0, 14 * base.xi);
  const auto error = [&](int dM, int dP) {
    EwaldPlan p = base;
    p.M += dM;
    p.P += dP;
    p.h = p.L / p.M;
    p.w = p.P * p.h / 2;
    p.m = std::sqrt(pi * p.P);
    p.eta_g = std::pow(2 * p.w * p.xi / p.m, 2);
    const WaveOperator op(p, 1.3);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(60);
    op.apply(pts, mu.data(), out.data());
    return (out - ref).norm() / ref.norm();
  };
  const double e0 = error(0, 0), e1 = error(8, 4), e2 = error(16, 8);
  EXPECT_LT(e0, 1e-7);
  EXPECT_LT(e1, e0 / 10);
  EXPECT_LT(e2, 1e-11);
}

TEST(WaveOperator, SymmetricAndPositive) {
  const EwaldPlan plan = select_params(1e-8, 1.0, 3);
  const WaveOperator op(plan, 1.0);
  const auto pts = random_points(12, 1.0, 5);
  Eigen::MatrixXd W(24, 24);
  for (int c = 0; c < 24; ++c) {
    Eigen::VectorXd e = Eigen::VectorXd::Unit(24, c), col = Eigen::VectorXd::Zero(24);
    op.apply(pts, e.data(), col.data());
    W.col(c) = col;
  }
  EXPECT_LT((W - W.transpose()).norm(), 1e-12 * W.norm());
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(W).eigenvalues();
  EXPECT_GT(ev.minCoeff(), -1e-12 * ev.maxCoeff());
}

TEST(WaveOperator, ZeroDensityAndTranslation) {
  const EwaldPlan plan = select_params(1e-8, 1.0, 3);
  const WaveOperator op(plan, 1.0);
  const auto pts = random_points(8, 1.0, 6);
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(16), out = Eigen::VectorXd::Zero(16);
  op.apply(pts, zero.data(), out.data());
  EXPECT_EQ(out.norm(), 0.0);

  // Shifting all points by a lattice vector leaves the result unchanged.
  GaussianStream g(7, 0, 0, Purpose::Test);
  const Eigen::VectorXd mu = g.normal_vector(16);
  auto shifted = pts;
  for (auto& p : shifted) p += Vec2(1.0, -2.0);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(16), b = Eigen::VectorXd::Zero(16);
  op.apply(pts, mu.data(), a.data());
  op.apply(shifted, mu.data(), b.data());
  EXPECT_LT((a - b).norm(), 1e-12 * a.norm());
}

TEST(WaveOperator, NoiseHasConjugateSymmetry) {
  const EwaldPlan plan = select_params(1e-6, 1.0, 3);
  const WaveOperator op(plan, 1.0);
  GaussianStream g(8, 0, 0, Purpose::Test);
  WaveOperator::Grid zx, zy;
  op.draw_noise(g, zx, zy);
  const int M = plan.M;
  EXPECT_EQ(zx[0], std::complex<double>(0.0));
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j) {
      const int ci = (M - i) % M, cj = (M - j) % M;
      EXPECT_EQ(zx[i * M + j], std::conj(zx[ci * M + cj]));
      EXPECT_EQ(zy[i * M + j], std::conj(zy[ci * M + cj]));
    }
  EXPECT_EQ(zx[(M / 2) * M].imag(), 0.0);
}

TEST(WaveOperator, RejectsNonPositiveViscosity) {
  EXPECT_THROW(WaveOperator(select_params(1e-6, 1.0, 3), 0.0), std::invalid_argument);
}

TEST(SparseNearField, MatchesDenseAssembly) {
  const Configuration cfg = two_disks();
  const Discretization d(cfg, 32);
  const EwaldPlan plan = select_params(1e-9, 1.0, 3);
  const auto blocks = reference_blocks(d, AlpertRule::get(4), {plan.xi, 1.0});
  const SparseNearField sp = near_field_export(d, plan, blocks, 1.0);
  const Eigen::MatrixXd dense = near_field_dense(d, plan, blocks, 1.0);
  // The dense route keeps pairs just beyond r_c, where the kernel is below eps.
  EXPECT_LT((sp.to_dense() - dense).cwiseAbs().maxCoeff(), plan.eps * dense.cwiseAbs().maxCoeff());
  EXPECT_LT(sp.asymmetry(), 1e-14 * dense.norm());
}

TEST(SparseNearField, WellSeparatedBodiesDecouple) {
  Configuration cfg;
  cfg.domain.L = 4.0;
  cfg.shapes.push_back(BodyShape::disk(0.2));
  cfg.bodies.push_back(Body{Vec2(1.0, 1.0), 0.0, 0});
  cfg.bodies.push_back(Body{Vec2(3.0, 3.0), 0.0, 0});
  const Discretization d(cfg, 16);
  const EwaldPlan plan = select_params(1e-9, 4.0, 8);
  const auto blocks = reference_blocks(d, AlpertRule::get(4), {plan.xi, 1.0});
  const Eigen::MatrixXd A = near_field_export(d, plan, blocks, 1.0).to_dense();
  EXPECT_EQ(A.block(0, 32, 32, 32).norm(), 0.0);
  EXPECT_GT(A.block(0, 0, 32, 32).norm(), 0.0);
}

TEST(SparseNearField, ApplyMatchesDense) {
  std::vector<std::tuple<int, int, Mat2>> t;
  Mat2 a, b;
  a << 2, 1, 1, 3;
  b << 0.5, -0.2, 0.1, 0.4;
  t.emplace_back(0, 0, a);
  t.emplace_back(0, 2, b);
  t.emplace_back(2, 0, b.transpose());
  t.emplace_back(1, 1, a);
  const SparseNearField s(3, t);
  EXPECT_EQ(s.nnz_blocks(), 4u);
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(6, -1, 1);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(6);
  s.apply(x.data(), y.data());
  EXPECT_LT((y - s.to_dense() * x).norm(), 1e-15);
  EXPECT_EQ(s.asymmetry(), 0.0);
  EXPECT_THROW(SparseNearField(2, {{0, 2, a}}), std::out_of_range);
}

TEST(SingleLayer, SplitDependenceIsQuadratureError) {
  // M mu for a smooth density, away from the per-body normal modes whose
  // discrete eigenvalue depends on xi. The nbox 3 vs 5 gap is Alpert error
  // and falls with Np.
  const Configuration cfg = two_disks();
  const auto gap = [&cfg](int Np) {
    const Discretization d(cfg, Np);
    const Eigen::MatrixXd B = normal_basis(d);
    Eigen::VectorXd mu(d.dof());
    for (int b = 0; b < 2; ++b)
      for (int j = 0; j < Np; ++j) {
        const double t = 2 * pi * j / Np;
        mu[2 * (b * Np + j)] = std::cos(t) + 0.3 * std::sin(2 * t) + b;
        mu[2 * (b * Np + j) + 1] = std::sin(3 * t);
      }
    std::vector<Eigen::VectorXd> outs;
    for (int nbox : {3, 5}) {
      const SingleLayer layer(d, select_params(1e-11, 1.0, nbox), AlpertRule::get(4), 1.0);
      Eigen::VectorXd v = layer.apply(mu);
      outs.push_back(v - B * (B.transpose() * v));
    }
    return (outs[0] - outs[1]).norm() / outs[0].norm();
  };
  const double g48 = gap(48), g96 = gap(96);
  EXPECT_LT(g96, 1e-6);
  EXPECT_GT(g48 / g96, 8.0);
}

TEST(SingleLayer, DenseIsSymmetric) {
  const Discretization d(two_disks(), 24);
  const SingleLayer layer(d, select_params(1e-9, 1.0, 3), AlpertRule::get(4), 1.0);
  const Eigen::MatrixXd M = layer.dense();
  EXPECT_LT((M - M.transpose()).norm(), 1e-12 * M.norm());
  const Eigen::VectorXd mu = Eigen::VectorXd::LinSpaced(d.dof(), -1, 1);
  EXPECT_LT((M * mu - layer.apply(mu)).norm(), 1e-13 * (M * mu).norm());
}
