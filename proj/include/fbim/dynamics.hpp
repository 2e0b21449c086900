#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fbim/fluctuations.hpp"
#include "fbim/geometry.hpp"
#include "fbim/mobility.hpp"

namespace fbim {

// Q = (q_x, q_y, theta) per body.
Eigen::VectorXd pack_coordinates(const Configuration& cfg);
void unpack_coordinates(const Eigen::VectorXd& Q, Configuration& cfg);

class Potential {
 public:
  virtual ~Potential() = default;
  virtual double energy(const Configuration& cfg) const = 0;
  // -dU/dQ.
  virtual ForceTorque forces(const Configuration& cfg) const = 0;
};

class FreePotential final : public Potential {
 public:
  double energy(const Configuration&) const override { return 0.0; }
  ForceTorque forces(const Configuration& cfg) const override;
};

// Fixed external force and torque per body (energy is not defined).
class ConstantForce final : public Potential {
 public:
  explicit ConstantForce(ForceTorque F) : F_(std::move(F)) {}
  double energy(const Configuration&) const override { return 0.0; }
  ForceTorque forces(const Configuration& cfg) const override;

 private:
  ForceTorque F_;
};

// (k_s/2)(|q_i - q_j| - l_s)^2 + (k_theta/2)(theta_i - t_i)^2 + (k_theta/2)(theta_j - t_j)^2,
// with the minimum-image separation.
class PairPotential final : public Potential {
 public:
  struct Params {
    double spring = 1.0;
    double rest = 1.0;
    double stiffness_rot = 1.0;
    double angle_i = 0.0;
    double angle_j = 0.0;
    int i = 0;
    int j = 1;
  };

  explicit PairPotential(Params p);
  const Params& params() const { return p_; }

  double energy(const Configuration& cfg) const override;
  // Throws std::domain_error when the tracking points coincide.
  ForceTorque forces(const Configuration& cfg) const override;

 private:
  Params p_;
};

enum class Scheme { EM, AB2 };

struct BDParams {
  double dt = 0.01;
  double kBT = 1.0;
  double delta = 0.0;  // RFD displacement; resolved from rfd_length when <= 0
  double rfd_length = 1.0;
  Scheme scheme = Scheme::EM;
  bool rfd = true;
  double tol_det = 1e-6;
  double tol_rfd = 1e-3;
  double lanczos_tol = 1e-6;
  int max_retries = 3;
};

// length * eps^{1/3}.
double default_rfd_delta(double length, double eps);

class OverlapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StepError : public std::runtime_error {
 public:
  StepError(const std::string& what, long step) : std::runtime_error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

struct StepDiagnostics {
  int solves = 0;
  int gmres_iterations = 0;
  int lanczos_iterations = 0;
  int retries = 0;
};

// Mobility-matrix-vector products used by the integrator. The default is the
// first-kind saddle solve; tests substitute closed-form mobilities.
struct MobilitySolve {
  // Returns N(cfg) F + (surface term); surface may be null.
  std::function<RigidMotion(const Configuration&, const ForceTorque&, const Eigen::VectorXd*,
                            double tol, StepDiagnostics&)>
      solve;
  // Random surface velocity for cfg; receives (kBT, dt, streams).
  std::function<Eigen::VectorXd(const Configuration&, double, double, NoiseStreams&,
                                StepDiagnostics&)>
      sample;
};

MobilitySolve fbim_mobility(const FbimContext& ctx, double lanczos_tol);

// (kBT/delta)[N(Q + delta/2 W) W - N(Q - delta/2 W) W]. Two solves.
// Throws OverlapError if a displaced configuration overlaps.
Eigen::VectorXd rfd_drift(const MobilitySolve& mob, const Configuration& cfg, double delta,
                          double kBT, GaussianStream& stream, double tol, StepDiagnostics& diag,
                          int overlap_Np = 0);

// Advances one trajectory. Noise for step n comes from streams keyed by
// (seed, traj, n), so a trajectory is reproducible from its seed alone.
class BrownianIntegrator {
 public:
  BrownianIntegrator(MobilitySolve mob, const Potential& pot, BDParams params, std::uint64_t seed,
                     std::uint64_t traj, int overlap_Np = 0);

  const BDParams& params() const { return params_; }
  long steps_taken() const { return step_; }
  double time() const { return static_cast<double>(step_) * params_.dt; }

  // One step with overlap rejection and retry. Throws StepError.
  StepDiagnostics step(Configuration& cfg);

  // Single attempts with explicit streams; no retry.
  StepDiagnostics step_em(Configuration& cfg, NoiseStreams& noise, GaussianStream& rfd);
  StepDiagnostics step_ab2(Configuration& cfg, NoiseStreams& noise, GaussianStream& rfd);

 private:
  Eigen::VectorXd drift_term(const Configuration& cfg, GaussianStream& rfd, StepDiagnostics& d);
  void commit(Configuration& cfg, const Eigen::VectorXd& dQ);

  MobilitySolve mob_;
  const Potential* pot_;
  BDParams params_;
  std::uint64_t seed_, traj_;
  int overlap_Np_;
  long step_ = 0;
  std::optional<Eigen::VectorXd> prev_NF_;
};

struct Trajectory {
  double dt = 0.0;
  std::vector<Eigen::VectorXd> Q;  // Q[0] is the initial state
  std::vector<StepDiagnostics> diag;

  long steps() const { return static_cast<long>(Q.size()) - 1; }
  void write_csv(const std::string& path) const;
};

// Runs nsteps, recording the initial state and then every record_every steps.
Trajectory run_trajectory(BrownianIntegrator& integ, Configuration cfg, long nsteps,
                          int record_every = 1);

// ---- observables ----

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

// Segments of a scalar series per trajectory after discarding burn_in of each.
std::vector<std::vector<double>> stationary_segments(
    const std::vector<std::vector<double>>& series, double burn_in = 0.2);

// Mean and covariance with standard errors from nblocks contiguous blocks
// per trajectory.
Estimate block_mean(const std::vector<std::vector<double>>& series, int nblocks = 4);
Estimate block_covariance(const std::vector<std::vector<double>>& a,
                          const std::vector<std::vector<double>>& b, int nblocks = 4);

struct MsdCurve {
  std::vector<double> lag;
  std::vector<double> msd, se;
  // Linear fit through the origin and a quadratic fit a t + c t^2, with
  // standard errors from per-block fits.
  Estimate slope, quad_linear, quad_curvature;
  bool diffusive = true;  // curvature within 3 SE of 0
};

// positions[traj][sample] with sample spacing sample_dt; lags in sample units.
MsdCurve mean_square_displacement(const std::vector<std::vector<Vec2>>& positions,
                                  double sample_dt, const std::vector<int>& lags,
                                  int nblocks = 4);

std::vector<long> histogram(const std::vector<double>& values, int nbins, double lo, double hi);
// Folds values into [0, period) first.
std::vector<long> periodic_histogram(const std::vector<double>& values, int nbins, double period);

struct ChiSquare {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};
ChiSquare chi_square_fit(const std::vector<long>& counts, const std::vector<double>& probs);
ChiSquare chi_square_homogeneity(const std::vector<long>& a, const std::vector<long>& b);

}  // namespace fbim
