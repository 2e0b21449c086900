#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fbim/ewald.hpp"
#include "fbim/geometry.hpp"
#include "fbim/kernels.hpp"
#include "fbim/mobility.hpp"

namespace fbim {

struct RefOptions {
  double eta = 1.0;
  double gmres_tol = 1e-13;
  int max_iter = 400;
  double sum_tol = 1e-15;  // truncation of the split periodic sums
  int nbox = 3;            // real-space cutoff L / nbox (nearest image only)
};

// Completed double-layer (second-kind) formulation with direct k-sums. The
// unknown phi is a velocity-like density at the trapezoid nodes.
class SecondKindOperator {
 public:
  SecondKindOperator(const Configuration& cfg, int Np, const RefOptions& opt = {});

  const Discretization& disc() const { return disc_; }
  const PeriodicSumParams& sums() const { return sums_; }
  int dof() const { return disc_.dof(); }

  // Principal-value double layer at the nodes: real, wave, curvature self
  // term and the zero-mean-flow correction.
  Eigen::VectorXd double_layer(const Eigen::VectorXd& phi) const;
  // Stokeslet and rotlet completion flows at the nodes.
  Eigen::VectorXd completion(const ForceTorque& F) const;
  // u = mean of phi, omega = phi . (x - q)^perp / int |x - q|^2.
  RigidMotion closure(const Eigen::VectorXd& phi) const;

  // phi/2 + D phi + G f + R tau - K U.
  Eigen::VectorXd residual(const Eigen::VectorXd& phi, const RigidMotion& U,
                           const ForceTorque& F) const;
  // phi/2 + D phi - K closure(phi).
  Eigen::VectorXd apply(const Eigen::VectorXd& phi) const;

  // Representation evaluated off the boundary.
  Vec2 velocity_at(const Vec2& x, const Eigen::VectorXd& phi, const ForceTorque& F) const;

 private:
  Eigen::VectorXd wave_part(const Eigen::VectorXd& phi) const;
  Vec2 mean_flow(const Eigen::VectorXd& phi) const;
  // The double layer is written with the normal pointing into the body.
  Vec2 inward_normal(int node) const { return -disc_.meshes[node / disc_.Np].normal[node % disc_.Np]; }

  Discretization disc_;
  RefOptions opt_;
  PeriodicSumParams sums_;
  std::vector<double> weight_;        // |gamma'| ds per node
  std::vector<double> perimeter_, moment_;  // per body
  SparseNearField near_;              // real-space stresslet and self term
  Eigen::MatrixXd completion_;        // 2 Nn x 3 N
  std::vector<Vec2> waves_;           // half-plane k list
  std::vector<Tensor3> wave_tensors_;
  std::vector<std::pair<int, int>> wave_index_;
};

struct RefSolution {
  RigidMotion U;
  Eigen::VectorXd phi;
  int iterations = 0;
};

// surface, if given, is a prescribed slip velocity on the left-hand side
// (mixed first/second-kind mode; not used for fluctuation-balance checks).
RefSolution solve_mobility_ref(const Configuration& cfg, const ForceTorque& F, int Np,
                               const RefOptions& opt = {},
                               const Eigen::VectorXd* surface = nullptr);
// 3N x 3N body mobility from unit solves.
Eigen::MatrixXd mobility_ref(const Configuration& cfg, int Np, const RefOptions& opt = {});

// N(theta) of a single body, sampled at n angles in [0, period).
struct OrientationTable {
  std::vector<double> theta;
  std::vector<Eigen::Matrix3d> N;

  // Periodic trigonometric interpolation of N_thth.
  double rot(double th) const;
  double period = 0.0;
};

// Cached to dir/<key>.csv when dir is non-empty.
OrientationTable orientation_table(const BodyShape& shape, double L, int Np, int n, double period,
                                   const RefOptions& opt = {}, const std::string& cache_dir = "");

}  // namespace fbim
