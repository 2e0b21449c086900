#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fbim/linalg.hpp"
#include "fbim/mobility.hpp"
#include "fbim/rng.hpp"

using namespace fbim;
using std::numbers::pi;

namespace {

Configuration pair_config() {
  Configuration cfg;
  cfg.domain.L = 1.0;
  cfg.shapes.push_back(BodyShape::disk(0.12));
  cfg.shapes.push_back(BodyShape::starfish(0.12, 0.3));
  cfg.bodies.push_back(Body{Vec2(0.3, 0.35), 0.0, 0});
  cfg.bodies.push_back(Body{Vec2(0.65, 0.6), 0.4, 1});
  return cfg;
}

FbimParams params(int Np, int order, double eps, double L, int nbox) {
  FbimParams p;
  p.Np = Np;
  p.order = order;
  p.plan = select_params(eps, L, nbox);
  return p;
}

Eigen::Matrix3d lift(double theta) {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  R.topLeftCorner<2, 2>() = rotation(theta);
  return R;
}

}  // namespace

TEST(RigidMotion, KAndKTransposeAreAdjoint) {
  const Discretization d(pair_config(), 16);
  GaussianStream g(1, 0, 0, Purpose::Test);
  const RigidMotion U(g.normal_vector(6));
  const Eigen::VectorXd mu = g.normal_vector(d.dof());
  EXPECT_NEAR(apply_K(d, U).dot(mu), U.values.dot(apply_KT(d, mu).values), 1e-12);
  const Eigen::MatrixXd K = dense_K(d);
  EXPECT_LT((K * U.values - apply_K(d, U)).norm(), 1e-14);
  EXPECT_LT((K.transpose() * mu - apply_KT(d, mu).values).norm(), 1e-13);
}

TEST(RigidMotion, WorkedExample) {
  Configuration cfg;
  cfg.domain.L = 2.0;
  cfg.shapes.push_back(BodyShape::disk(0.5));
  cfg.bodies.push_back(Body{Vec2(1.0, 1.0), 0.0, 0});
  const Discretization d(cfg, 4);
  // Nodes at q + 0.5 (cos s, sin s), s = 0, pi/2, pi, 3pi/2.
  RigidMotion U = RigidMotion::zero(1);
  U.set(0, Vec2(1.0, -2.0), 2.0);
  const Eigen::VectorXd v = apply_K(d, U);
  EXPECT_NEAR(v[0], 1.0, 1e-15);
  EXPECT_NEAR(v[1], -1.0, 1e-15);
  EXPECT_NEAR(v[2], 0.0, 1e-15);
  EXPECT_NEAR(v[3], -2.0, 1e-15);

  Eigen::VectorXd mu = Eigen::VectorXd::Zero(8);
  mu[1] = 1.0;  // unit y force at (1.5, 1)
  const ForceTorque F = apply_KT(d, mu);
  EXPECT_NEAR(F.linear(0).x(), 0.0, 1e-15);
  EXPECT_NEAR(F.linear(0).y(), 1.0, 1e-15);
  EXPECT_NEAR(F.angular(0), 0.5, 1e-15);
}

TEST(NormalMode, CarriesNoForceOrTorque) {
  const Discretization d(pair_config(), 32);
  const Eigen::MatrixXd B = normal_basis(d);
  EXPECT_LT((B.transpose() * B - Eigen::MatrixXd::Identity(2, 2)).norm(), 1e-14);
  EXPECT_LT((dense_K(d).transpose() * B).norm(), 1e-13);
}

TEST(NormalMode, ProjectionRemovesIt) {
  const Discretization d(pair_config(), 16);
  const Eigen::MatrixXd B = normal_basis(d);
  GaussianStream g(2, 0, 0, Purpose::Test);
  Eigen::MatrixXd A = Eigen::MatrixXd::Random(d.dof(), d.dof());
  A = A * A.transpose();
  const Eigen::MatrixXd P = project_normal(A, B);
  EXPECT_LT((P * B).norm(), 1e-12 * A.norm());
  const Eigen::MatrixXd Pi = Eigen::MatrixXd::Identity(d.dof(), d.dof()) - B * B.transpose();
  EXPECT_LT((P - Pi * A * Pi).norm(), 1e-12 * A.norm());
}

TEST(Gmres, SolvesAndReportsFailure) {
  const int n = 30;
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) * 3 + Eigen::MatrixXd::Random(n, n) * 0.1;
  const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(n, -1, 1);
  const LinearOperator op = [&A](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = A * x; };
  const GmresResult r = gmres(op, b, {}, 1e-12);
  EXPECT_LT((A * r.x - b).norm(), 1e-11 * b.norm());
  EXPECT_EQ(static_cast<int>(r.residuals.size()), r.iterations);

  const GmresResult z = gmres(op, Eigen::VectorXd::Zero(n), {}, 1e-12);
  EXPECT_EQ(z.x.norm(), 0.0);

  Eigen::MatrixXd hard = Eigen::MatrixXd::Random(n, n);
  const LinearOperator hop = [&hard](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = hard * x; };
  try {
    gmres(hop, b, {}, 1e-14, 3);
    FAIL() << "expected SolverError";
  } catch (const SolverError& e) {
    EXPECT_EQ(e.history().size(), 3u);
  }
}

TEST(ShapePreconditioner, RejectsExtraNullModes) {
  const SurfaceMesh mesh = discretize(BodyShape::disk(0.2), 16);
  EXPECT_THROW(build_shape_preconditioner(Eigen::MatrixXd::Identity(32, 32) * 0.0, mesh),
               std::runtime_error);
  const ShapePreconditioner p = build_shape_preconditioner(Eigen::MatrixXd::Identity(32, 32), mesh);
  EXPECT_EQ(p.dropped, 1);
}

TEST(FbimContext, RejectsMismatchedCell) {
  Configuration cfg = pair_config();
  EXPECT_THROW(FbimContext(cfg, params(16, 4, 1e-8, 2.0, 3)), std::invalid_argument);
}

TEST(SaddleSystem, ZeroForceGivesZeroMotion) {
  const Configuration cfg = pair_config();
  const FbimContext ctx(cfg, params(32, 4, 1e-8, 1.0, 3));
  const SaddleSystem sys(ctx, cfg);
  const SaddleSolution s = sys.solve(ForceTorque::zero(2), nullptr);
  EXPECT_EQ(s.U.values.norm(), 0.0);
  EXPECT_EQ(s.mu.norm(), 0.0);
  EXPECT_THROW(sys.solve(ForceTorque::zero(3), nullptr), std::invalid_argument);
  const Eigen::VectorXd bad = Eigen::VectorXd::Zero(5);
  EXPECT_THROW(sys.solve(ForceTorque::zero(2), &bad), std::invalid_argument);
}

TEST(SaddleSystem, IterativeMatchesDenseRoutes) {
  const Configuration cfg = pair_config();
  const FbimContext ctx(cfg, params(32, 4, 1e-10, 1.0, 3));
  const SaddleSystem sys(ctx, cfg);
  SolveOptions opt;
  opt.tol = 1e-11;
  const Eigen::MatrixXd N = sys.body_mobility(opt);
  const Eigen::MatrixXd Nd = body_mobility_dense(ctx, cfg);
  EXPECT_LT((N - Nd).norm(), 1e-8 * Nd.norm());

  const SingleLayer& layer = sys.single_layer();
  const Eigen::MatrixXd M = project_normal(layer.dense(), normal_basis(layer.disc()));
  const Eigen::MatrixXd K = dense_K(layer.disc());
  // The LU route sees the projected M plus the normal-mode block; N is
  // unaffected because K^T B = 0.
  const Eigen::MatrixXd B = normal_basis(layer.disc());
  const Eigen::MatrixXd Nlu = dense_saddle_mobility(M + B * B.transpose(), K);
  EXPECT_LT((Nlu - Nd).norm(), 1e-9 * Nd.norm());
}

TEST(SaddleSystem, MobilityIsSymmetricPositive) {
  const Configuration cfg = pair_config();
  const FbimContext ctx(cfg, params(32, 8, 1e-9, 1.0, 3));
  const Eigen::MatrixXd N = SaddleSystem(ctx, cfg).body_mobility({1e-11, 500, true});
  EXPECT_LT((N - N.transpose()).norm(), 1e-8 * N.norm());
  EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(N).eigenvalues().minCoeff(), 0.0);
}

TEST(SaddleSystem, PreconditionerChangesOnlyIterationCount) {
  const Configuration cfg = pair_config();
  const FbimContext ctx(cfg, params(32, 4, 1e-9, 1.0, 3));
  const SaddleSystem sys(ctx, cfg);
  ForceTorque F = ForceTorque::zero(2);
  F.set(0, Vec2(1.0, 0.5), 0.2);
  F.set(1, Vec2(-0.3, 0.0), -1.0);
  const SaddleSolution a = sys.solve(F, nullptr, {1e-11, 1000, true});
  const SaddleSolution b = sys.solve(F, nullptr, {1e-11, 1000, false});
  EXPECT_LT((a.U.values - b.U.values).norm(), 1e-8 * a.U.values.norm());
  EXPECT_LT(a.iterations, b.iterations);
}

TEST(SaddleSystem, TranslationAndQuarterTurnCovariance) {
  Configuration cfg;
  cfg.domain.L = 1.0;
  cfg.shapes.push_back(BodyShape::starfish(0.15, 0.3));
  cfg.bodies.push_back(Body{Vec2(0.5, 0.5), 0.3, 0});
  const FbimContext ctx(cfg, params(48, 4, 1e-10, 1.0, 3));
  const SolveOptions opt{1e-12, 500, true};
  const Eigen::MatrixXd N0 = SaddleSystem(ctx, cfg).body_mobility(opt);

  // Off-grid shifts see the gridding error, tens of eps.
  Configuration shifted = cfg;
  shifted.bodies[0].q += Vec2(0.17, -0.31);
  EXPECT_LT((SaddleSystem(ctx, shifted).body_mobility(opt) - N0).norm(), 1e-8 * N0.norm());

  // The square lattice is invariant under quarter turns.
  Configuration turned = cfg;
  turned.bodies[0].theta += pi / 2;
  const Eigen::Matrix3d R = lift(pi / 2);
  const Eigen::MatrixXd N1 = SaddleSystem(ctx, turned).body_mobility(opt);
  EXPECT_LT((N1 - R * N0 * R.transpose()).norm(), 1e-9 * N0.norm());
}

TEST(DenseMobility, SquareRootFactorsMobility) {
  const Configuration cfg = pair_config();
  const FbimContext ctx(cfg, params(24, 4, 1e-8, 1.0, 3));
  const SingleLayer layer = ctx.single_layer(cfg);
  const Eigen::MatrixXd M = project_normal(layer.dense(), normal_basis(layer.disc()));
  const DenseMobility dm = dense_mobility(M, dense_K(layer.disc()));
  EXPECT_GE(dm.dropped, 2);
  EXPECT_LT((dm.N_half * dm.N_half.transpose() - dm.N).norm(), 1e-10 * dm.N.norm());
}
