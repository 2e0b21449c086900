#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "fbim/ewald.hpp"
#include "fbim/geometry.hpp"
#include "fbim/linalg.hpp"
#include "fbim/quadrature.hpp"

namespace fbim {

// Per-body triples (x, y, angular) stacked into a 3N vector.
template <class Tag>
struct BodyVector {
  Eigen::VectorXd values;

  BodyVector() = default;
  explicit BodyVector(Eigen::VectorXd v) : values(std::move(v)) {}
  static BodyVector zero(int nbodies) { return BodyVector(Eigen::VectorXd::Zero(3 * nbodies)); }

  int nbodies() const { return static_cast<int>(values.size() / 3); }
  Vec2 linear(int b) const { return values.segment<2>(3 * b); }
  double angular(int b) const { return values[3 * b + 2]; }
  void set(int b, const Vec2& lin, double ang) {
    values.segment<2>(3 * b) = lin;
    values[3 * b + 2] = ang;
  }
};

// {u, omega} per body.
using RigidMotion = BodyVector<struct RigidMotionTag>;
// {f, tau} per body.
using ForceTorque = BodyVector<struct ForceTorqueTag>;

// (K U)_j = u + omega (x_j - q)^perp on every node.
Eigen::VectorXd apply_K(const Discretization& d, const RigidMotion& U);
// Net force and torque of nodal forces mu.
ForceTorque apply_KT(const Discretization& d, const Eigen::VectorXd& mu);
// 2 N Np x 3 N matrix of K.
Eigen::MatrixXd dense_K(const Discretization& d);

// Discrete null direction of M for one body: n_j |gamma'_j| ds, normalized.
Eigen::VectorXd normal_mode(const SurfaceMesh& mesh);
// dof x N matrix whose columns are the per-body normal modes.
Eigen::MatrixXd normal_basis(const Discretization& d);
// P M P with P = I - B B^T for orthonormal columns B.
Eigen::MatrixXd project_normal(const Eigen::MatrixXd& M, const Eigen::MatrixXd& B);

struct FbimParams {
  int Np = 64;
  int order = 4;
  double eta = 1.0;
  EwaldPlan plan;
};

// Dense single-body data used by the block-diagonal preconditioner.
struct ShapePreconditioner {
  Eigen::MatrixXd m_ref;       // P M P for one body at the origin, theta = 0, alone in the cell
  Eigen::MatrixXd m_ref_pinv;  // pseudo-inverse without the normal mode
  Eigen::Matrix3d n_ref;       // (K^T M^+ K)^{-1} in the reference pose
  int dropped = 0;             // modes removed from the pseudo-inverse
};

// Relative eigenvalue floor of the reference pseudo-inverses.
constexpr double kPinvFloor = 1e-12;

// Projects the normal mode out of a single-body M_ref and builds its
// pseudo-inverse. Throws std::runtime_error if any other eigenvalue falls
// below the floor.
ShapePreconditioner build_shape_preconditioner(const Eigen::MatrixXd& m_ref,
                                               const SurfaceMesh& ref_mesh);

// Everything that depends on the shapes, the cell and the numerical
// parameters but not on body positions. Immutable after construction.
class FbimContext {
 public:
  FbimContext(const Configuration& prototype, const FbimParams& params);

  const FbimParams& params() const { return params_; }
  const EwaldPlan& plan() const { return params_.plan; }
  const AlpertRule& rule() const { return rule_; }
  const std::vector<BodyShape>& shapes() const { return shapes_; }
  const PeriodicDomain& domain() const { return domain_; }
  const std::vector<SurfaceMesh>& ref_meshes() const { return ref_meshes_; }
  const std::vector<SingularBlock>& blocks() const { return blocks_; }
  std::shared_ptr<const WaveOperator> wave() const { return wave_; }
  const ShapePreconditioner& preconditioner(int shape) const { return precond_.at(shape); }

  // Single-layer operator of one configuration using the shared data.
  SingleLayer single_layer(const Configuration& cfg) const;
  // Dense M of one body of the given shape alone in the cell at the origin.
  Eigen::MatrixXd reference_single_layer(int shape) const;

 private:
  FbimParams params_;
  AlpertRule rule_;
  std::vector<BodyShape> shapes_;
  PeriodicDomain domain_;
  std::vector<SurfaceMesh> ref_meshes_;
  std::vector<SingularBlock> blocks_;
  std::shared_ptr<const WaveOperator> wave_;
  std::vector<ShapePreconditioner> precond_;
};

struct SolveOptions {
  double tol = 1e-9;
  int max_iter = 500;
  bool precondition = true;
};

struct SaddleSolution {
  Eigen::VectorXd mu;
  RigidMotion U;
  int iterations = 0;
  std::vector<double> residuals;
  double projected = 0.0;  // norm of the normal-mode component removed from the surface velocity
};

// [P M P  -K; -K^T 0][mu; U] = -[P v; F] for one configuration, where P
// removes the per-body normal modes (the null space of the continuum M). The
// discrete M carries a small spurious eigenvalue near each normal mode; the
// projection makes it exact so the system is consistent.
class SaddleSystem {
 public:
  SaddleSystem(const FbimContext& ctx, const Configuration& cfg);

  const FbimContext& context() const { return *ctx_; }
  const SingleLayer& single_layer() const { return layer_; }
  const Discretization& disc() const { return layer_.disc(); }
  int nbodies() const { return disc().nbodies(); }
  int size() const { return disc().dof() + 3 * nbodies(); }

  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const;
  // Exact solve with the block-diagonal approximation of M.
  void precondition(const Eigen::VectorXd& r, Eigen::VectorXd& z) const;

  // surface may be null (no surface velocity). Throws SolverError.
  SaddleSolution solve(const ForceTorque& F, const Eigen::VectorXd* surface,
                       const SolveOptions& opt = {}) const;

  // Removes the normal-mode component per body; returns its norm.
  double project_normal_modes(Eigen::VectorXd& v) const;

  // Columns from unit force/torque solves.
  Eigen::MatrixXd body_mobility(const SolveOptions& opt = {}) const;

 private:
  const FbimContext* ctx_;
  SingleLayer layer_;
  std::vector<Eigen::MatrixXd> pinv_;  // rotated per body
  std::vector<Eigen::Matrix3d> nblk_;
  std::vector<Eigen::VectorXd> normals_;
};

// N = (K^T M^+ K)^{-1} and N^{1/2} = N K^T M^+ M^{1/2} from dense M, with
// M^+ and M^{1/2} sharing the eigenvalues above floor_rel * lambda_max.
struct DenseMobility {
  Eigen::MatrixXd N;
  Eigen::MatrixXd N_half;
  int dropped = 0;
};
DenseMobility dense_mobility(const Eigen::MatrixXd& M, const Eigen::MatrixXd& K,
                             double floor_rel = kPinvFloor);

// N from an LU solve of the dense saddle matrix; independent of the eigen route.
Eigen::MatrixXd dense_saddle_mobility(const Eigen::MatrixXd& M, const Eigen::MatrixXd& K);

// Dense first-kind body mobility of a configuration (small systems).
Eigen::MatrixXd body_mobility_dense(const FbimContext& ctx, const Configuration& cfg);

}  // namespace fbim
