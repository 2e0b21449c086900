#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "fbim/dynamics.hpp"

using namespace fbim;
using std::numbers::pi;

namespace {

Configuration single_disk(double L = 1.0) {
  Configuration cfg;
  cfg.domain.L = L;
  cfg.shapes.push_back(BodyShape::disk(0.1));
  cfg.bodies.push_back(Body{Vec2(0.3, 0.5), 0.2, 0});
  return cfg;
}

// N(Q) = diag(n(x), 1, 2) with n(x) = 1 + 0.5 sin(2 pi x); the surface
// argument is a body-space velocity added as-is, and sample returns
// sqrt(2 kBT / dt) N^{1/2} W.
double n_of(double x) { return 1 + 0.5 * std::sin(2 * pi * x); }

MobilitySolve closed_form() {
  MobilitySolve m;
  m.solve = [](const Configuration& cfg, const ForceTorque& F, const Eigen::VectorXd* surface,
               double, StepDiagnostics& d) {
    ++d.solves;
    Eigen::VectorXd U(3 * cfg.size());
    for (std::size_t b = 0; b < cfg.size(); ++b) {
      U[3 * b] = n_of(cfg.bodies[b].q.x()) * F.values[3 * b];
      U[3 * b + 1] = F.values[3 * b + 1];
      U[3 * b + 2] = 2 * F.values[3 * b + 2];
    }
    if (surface) U += *surface;
    return RigidMotion(U);
  };
  m.sample = [](const Configuration& cfg, double kBT, double dt, NoiseStreams& s,
                StepDiagnostics&) {
    Eigen::VectorXd v = s.near.normal_vector(3 * static_cast<Eigen::Index>(cfg.size()));
    for (std::size_t b = 0; b < cfg.size(); ++b) {
      v[3 * b] *= std::sqrt(n_of(cfg.bodies[b].q.x()));
      v[3 * b + 2] *= std::sqrt(2.0);
    }
    return Eigen::VectorXd(std::sqrt(2 * kBT / dt) * v);
  };
  return m;
}

}  // namespace

TEST(Coordinates, PackUnpack) {
  Configuration cfg = single_disk();
  const Eigen::VectorXd Q = pack_coordinates(cfg);
  EXPECT_EQ(Q, Eigen::Vector3d(0.3, 0.5, 0.2));
  unpack_coordinates(Eigen::Vector3d(0.1, 0.2, 7.0), cfg);
  EXPECT_EQ(cfg.bodies[0].theta, 7.0);
  EXPECT_THROW(unpack_coordinates(Eigen::VectorXd::Zero(4), cfg), std::invalid_argument);
}

TEST(PairPotential, ForcesAreMinusEnergyGradient) {
  Configuration cfg = single_disk(2.0);
  cfg.bodies.push_back(Body{Vec2(1.7, 1.8), -0.4, 0});
  cfg.bodies[0].q = Vec2(0.2, 0.1);  // nearest image across both walls
  const PairPotential pot({81.0, 0.8, 2.4, 0.5, 1.0, 0, 1});
  const Eigen::VectorXd F = pot.forces(cfg).values;
  const Eigen::VectorXd Q = pack_coordinates(cfg);
  const double h = 1e-6;
  for (int i = 0; i < 6; ++i) {
    Configuration p = cfg, m = cfg;
    Eigen::VectorXd dq = Eigen::VectorXd::Zero(6);
    dq[i] = h;
    unpack_coordinates(Q + dq, p);
    unpack_coordinates(Q - dq, m);
    EXPECT_NEAR(F[i], -(pot.energy(p) - pot.energy(m)) / (2 * h), 1e-6) << i;
  }
  EXPECT_LT((F.segment<2>(0) + F.segment<2>(3)).norm(), 1e-14);
}

TEST(PairPotential, RestStateAndErrors) {
  Configuration cfg = single_disk(4.0);
  cfg.bodies[0].q = Vec2(1.0, 2.0);
  cfg.bodies[0].theta = 0.3;
  cfg.bodies.push_back(Body{Vec2(2.5, 2.0), 0.6, 0});
  const PairPotential pot({5.0, 1.5, 1.0, 0.3, 0.6, 0, 1});
  EXPECT_NEAR(pot.energy(cfg), 0.0, 1e-15);
  EXPECT_LT(pot.forces(cfg).values.norm(), 1e-14);
  cfg.bodies[1].q = cfg.bodies[0].q;
  EXPECT_THROW(pot.forces(cfg), std::domain_error);
  EXPECT_THROW(PairPotential({1.0, 1.0, 1.0, 0.0, 0.0, 1, 1}), std::invalid_argument);
  EXPECT_THROW(PairPotential({-1.0, 1.0, 1.0, 0.0, 0.0, 0, 1}), std::invalid_argument);
}

TEST(Rfd, MeanIsThermalDivergence) {
  const Configuration cfg = single_disk();
  const MobilitySolve mob = closed_form();
  GaussianStream g(11, 0, 0, Purpose::Rfd);
  StepDiagnostics d;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
  const int n = 20000;
  for (int i = 0; i < n; ++i) mean += rfd_drift(mob, cfg, 1e-4, 0.7, g, 1e-6, d) / n;
  EXPECT_EQ(d.solves, 2 * n);
  const double div = 0.7 * pi * std::cos(2 * pi * 0.3);  // kBT n'(x)
  // Per-sample spread is sqrt(2) |div|; the mean is good to about 1%.
  EXPECT_NEAR(mean[0], div, 0.05 * std::abs(div));
  EXPECT_NEAR(mean[1], 0.0, 1e-8);
  EXPECT_NEAR(mean[2], 0.0, 1e-8);
  EXPECT_THROW(rfd_drift(mob, cfg, 0.0, 1.0, g, 1e-6, d), std::invalid_argument);
}

TEST(Integrator, DeterministicStepsAndSolveCounts) {
  const MobilitySolve mob = closed_form();
  ForceTorque F = ForceTorque::zero(1);
  F.set(0, Vec2(1.0, -2.0), 0.5);
  const ConstantForce pot(F);
  for (Scheme scheme : {Scheme::EM, Scheme::AB2}) {
    BDParams p;
    p.dt = 0.01;
    p.kBT = 0.0;
    p.scheme = scheme;
    Configuration cfg = single_disk();
    BrownianIntegrator integ(mob, pot, p, 1, 0);
    const StepDiagnostics d = integ.step(cfg);
    EXPECT_EQ(d.solves, scheme == Scheme::EM ? 3 : 4);
    EXPECT_NEAR(cfg.bodies[0].q.x(), 0.3 + 0.01 * n_of(0.3), 1e-14);
    EXPECT_NEAR(cfg.bodies[0].q.y(), 0.5 - 0.02, 1e-14);
    EXPECT_NEAR(cfg.bodies[0].theta, 0.2 + 0.01, 1e-14);
    EXPECT_EQ(integ.steps_taken(), 1);
    EXPECT_NEAR(integ.time(), 0.01, 1e-16);
  }
  BDParams p;
  p.rfd = false;
  p.scheme = Scheme::AB2;
  Configuration cfg = single_disk();
  EXPECT_EQ(BrownianIntegrator(mob, pot, p, 1, 0).step(cfg).solves, 2);
}

TEST(Integrator, Ab2UsesHistory) {
  // x' = n(x) f: AB2 is second order, EM first order.
  const MobilitySolve mob = closed_form();
  ForceTorque F = ForceTorque::zero(1);
  F.set(0, Vec2(1.0, 0.0), 0.0);
  const ConstantForce pot(F);
  const auto final_x = [&](Scheme s, double dt) {
    BDParams p;
    p.dt = dt;
    p.kBT = 0.0;
    p.rfd = false;
    p.scheme = s;
    Configuration cfg = single_disk();
    BrownianIntegrator integ(mob, pot, p, 1, 0);
    const long n = std::lround(0.2 / dt);
    for (long i = 0; i < n; ++i) integ.step(cfg);
    return cfg.bodies[0].q.x();
  };
  // Reference from a fine RK4 integration.
  double x = 0.3;
  const double h = 1e-5;
  for (int i = 0; i < 20000; ++i) {
    const double k1 = n_of(x), k2 = n_of(x + h / 2 * k1), k3 = n_of(x + h / 2 * k2), k4 = n_of(x + h * k3);
    x += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  const double em1 = std::abs(final_x(Scheme::EM, 0.02) - x), em2 = std::abs(final_x(Scheme::EM, 0.01) - x);
  const double ab1 = std::abs(final_x(Scheme::AB2, 0.02) - x), ab2 = std::abs(final_x(Scheme::AB2, 0.01) - x);
  EXPECT_NEAR(em1 / em2, 2.0, 0.3);
  EXPECT_NEAR(ab1 / ab2, 4.0, 0.8);
  EXPECT_LT(ab2, em2);
}

TEST(Integrator, Ab2EqualsEmWithoutForces) {
  const MobilitySolve mob = closed_form();
  const FreePotential pot;
  std::vector<Eigen::VectorXd> ends;
  for (Scheme s : {Scheme::EM, Scheme::AB2}) {
    BDParams p;
    p.dt = 0.01;
    p.scheme = s;
    p.rfd = false;
    BrownianIntegrator integ(mob, pot, p, 9, 4);
    ends.push_back(run_trajectory(integ, single_disk(), 20).Q.back());
  }
  EXPECT_LT((ends[0] - ends[1]).norm(), 1e-14);
}

TEST(Integrator, ReproducibleFromSeed) {
  const MobilitySolve mob = closed_form();
  const FreePotential pot;
  BDParams p;
  p.dt = 0.01;
  BrownianIntegrator a(mob, pot, p, 3, 1), b(mob, pot, p, 3, 1), c(mob, pot, p, 3, 2);
  const Trajectory ta = run_trajectory(a, single_disk(), 10, 2);
  const Trajectory tb = run_trajectory(b, single_disk(), 10, 2);
  const Trajectory tc = run_trajectory(c, single_disk(), 10, 2);
  ASSERT_EQ(ta.Q.size(), 6u);
  EXPECT_NEAR(ta.dt, 0.02, 1e-16);
  EXPECT_EQ(ta.Q.back(), tb.Q.back());
  EXPECT_NE(ta.Q.back(), tc.Q.back());
  EXPECT_EQ(ta.diag[0].solves, 6);

  const auto path = std::filesystem::temp_directory_path() / "fbim_traj_test.csv";
  ta.write_csv(path.string());
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "step,t,qx0,qy0,theta0,solves,gmres_iterations,lanczos_iterations,retries");
  std::filesystem::remove(path);
  EXPECT_THROW(run_trajectory(a, single_disk(), 1, 0), std::invalid_argument);
}

TEST(Integrator, RejectsBadParameters) {
  const MobilitySolve mob = closed_form();
  const FreePotential pot;
  BDParams p;
  p.dt = 0.0;
  EXPECT_THROW(BrownianIntegrator(mob, pot, p, 1, 0), std::invalid_argument);
  p.dt = 0.1;
  p.kBT = -1.0;
  EXPECT_THROW(BrownianIntegrator(mob, pot, p, 1, 0), std::invalid_argument);
  p.kBT = 1.0;
  EXPECT_NEAR(BrownianIntegrator(mob, pot, p, 1, 0).params().delta, std::cbrt(1e-6), 1e-15);
}

TEST(Integrator, PersistentOverlapRaisesStepError) {
  Configuration cfg = single_disk();
  cfg.bodies.push_back(Body{Vec2(0.55, 0.5), 0.0, 0});
  ForceTorque F = ForceTorque::zero(2);
  F.set(0, Vec2(5.0, 0.0), 0.0);
  F.set(1, Vec2(-5.0, 0.0), 0.0);
  const ConstantForce pot(F);
  BDParams p;
  p.dt = 0.01;
  p.kBT = 0.0;
  p.rfd = false;
  p.max_retries = 2;
  BrownianIntegrator integ(closed_form(), pot, p, 1, 0, 16);
  try {
    integ.step(cfg);
    FAIL() << "expected StepError";
  } catch (const StepError& e) {
    EXPECT_EQ(e.step(), 0);
  }
  EXPECT_NEAR(cfg.bodies[0].q.x(), 0.3, 0.0);
}

TEST(Observables, BlockMeanAndCovariance) {
  const std::vector<std::vector<double>> flat = {std::vector<double>(40, 2.5)};
  const Estimate m = block_mean(flat, 4);
  EXPECT_EQ(m.value, 2.5);
  EXPECT_EQ(m.se, 0.0);

  GaussianStream g(12, 0, 0, Purpose::Test);
  std::vector<std::vector<double>> a(4), b(4), c(4);
  for (int t = 0; t < 4; ++t)
    for (int i = 0; i < 5000; ++i) {
      const double x = g.normal(), y = g.normal();
      a[t].push_back(x);
      b[t].push_back(0.6 * x + 0.8 * y);
      c[t].push_back(y);
    }
  const Estimate cab = block_covariance(a, b, 4), cac = block_covariance(a, c, 4);
  EXPECT_NEAR(cab.value, 0.6, 4 * cab.se + 1e-3);
  EXPECT_NEAR(cac.value, 0.0, 4 * cac.se + 1e-3);
  EXPECT_THROW(block_mean({std::vector<double>(5, 1.0)}, 4), std::invalid_argument);
  EXPECT_THROW(block_covariance(a, {b[0]}, 4), std::invalid_argument);

  const auto seg = stationary_segments({std::vector<double>{1, 2, 3, 4, 5}}, 0.4);
  EXPECT_EQ(seg[0], (std::vector<double>{3, 4, 5}));
  EXPECT_THROW(stationary_segments(flat, 1.0), std::invalid_argument);
}

TEST(Observables, MsdOfRandomWalk) {
  // Free diffusion with D = 0.3 in 2D: MSD = 4 D t, no curvature.
  GaussianStream g(13, 0, 0, Purpose::Test);
  const double D = 0.3, dt = 0.05;
  std::vector<std::vector<Vec2>> pos(8);
  for (auto& traj : pos) {
    Vec2 x = Vec2::Zero();
    for (int i = 0; i < 4000; ++i) {
      traj.push_back(x);
      x += std::sqrt(2 * D * dt) * Vec2(g.normal(), g.normal());
    }
  }
  const MsdCurve c = mean_square_displacement(pos, dt, {1, 2, 3, 4, 5}, 4);
  EXPECT_NEAR(c.slope.value, 4 * D, 3 * c.slope.se);
  EXPECT_LT(c.slope.se, 0.05 * 4 * D);
  EXPECT_TRUE(c.diffusive);
  EXPECT_THROW(mean_square_displacement(pos, dt, {}, 4), std::invalid_argument);
  EXPECT_THROW(mean_square_displacement(pos, dt, {2000}, 4), std::invalid_argument);

  // Ballistic motion is flagged as non-diffusive.
  std::vector<std::vector<Vec2>> drift(4);
  for (auto& traj : drift)
    for (int i = 0; i < 400; ++i) traj.push_back(Vec2(0.1 * i, 0.0) + 0.01 * Vec2(g.normal(), g.normal()));
  EXPECT_FALSE(mean_square_displacement(drift, 1.0, {1, 2, 3, 4, 5}, 4).diffusive);
}

TEST(Observables, Histograms) {
  EXPECT_EQ(histogram({0.0, 0.49, 0.5, 0.99, 1.0, -0.1}, 2, 0.0, 1.0), (std::vector<long>{2, 2}));
  EXPECT_EQ(periodic_histogram({-0.25, 0.25, 1.25, 2.75}, 4, 1.0), (std::vector<long>{0, 2, 0, 2}));
  EXPECT_THROW(histogram({}, 0, 0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(histogram({}, 3, 1.0, 1.0), std::invalid_argument);
}

TEST(Observables, ChiSquareWorkedExamples) {
  const ChiSquare exact = chi_square_fit({25, 25, 50}, {0.25, 0.25, 0.5});
  EXPECT_EQ(exact.statistic, 0.0);
  EXPECT_EQ(exact.dof, 2);
  EXPECT_NEAR(exact.p_value, 1.0, 1e-15);

  // (10 - 15)^2 / 15 * 2 = 10/3 on one degree of freedom.
  const ChiSquare r = chi_square_fit({10, 20}, {0.5, 0.5});
  EXPECT_NEAR(r.statistic, 10.0 / 3.0, 1e-14);
  EXPECT_NEAR(r.p_value, std::erfc(std::sqrt(10.0 / 3.0 / 2.0)), 1e-12);

  const ChiSquare h = chi_square_homogeneity({10, 20, 0}, {20, 10, 0});
  EXPECT_EQ(h.dof, 1);
  EXPECT_NEAR(h.statistic, 4 * 25.0 / 15.0, 1e-12);
  EXPECT_THROW(chi_square_fit({1, 2}, {1.0}), std::invalid_argument);
  EXPECT_THROW(chi_square_fit({1, 2}, {1.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(chi_square_homogeneity({5, 0}, {5, 0}), std::invalid_argument);
}
