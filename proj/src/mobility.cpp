#include "fbim/mobility.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace fbim {

Eigen::VectorXd apply_K(const Discretization& d, const RigidMotion& U) {
  Eigen::VectorXd out(d.dof());
  for (int b = 0; b < d.nbodies(); ++b) {
    const Vec2 q = d.cfg.bodies[b].q;
    const Vec2 u = U.linear(b);
    const double w = U.angular(b);
    for (int j = 0; j < d.Np; ++j) {
      const int n = b * d.Np + j;
      out.segment<2>(2 * n) = u + w * perp(d.nodes[n] - q);
    }
  }
  return out;
}

ForceTorque apply_KT(const Discretization& d, const Eigen::VectorXd& mu) {
  ForceTorque F = ForceTorque::zero(d.nbodies());
  for (int b = 0; b < d.nbodies(); ++b) {
    const Vec2 q = d.cfg.bodies[b].q;
    Vec2 f = Vec2::Zero();
    double tau = 0;
    for (int j = 0; j < d.Np; ++j) {
      const int n = b * d.Np + j;
      const Vec2 m = mu.segment<2>(2 * n);
      f += m;
      tau += cross(d.nodes[n] - q, m);
    }
    F.set(b, f, tau);
  }
  return F;
}

Eigen::MatrixXd dense_K(const Discretization& d) {
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(d.dof(), 3 * d.nbodies());
  for (int b = 0; b < d.nbodies(); ++b)
    for (int j = 0; j < d.Np; ++j) {
      const int n = b * d.Np + j;
      const Vec2 r = perp(d.nodes[n] - d.cfg.bodies[b].q);
      K(2 * n, 3 * b) = 1;
      K(2 * n + 1, 3 * b + 1) = 1;
      K(2 * n, 3 * b + 2) = r.x();
      K(2 * n + 1, 3 * b + 2) = r.y();
    }
  return K;
}

Eigen::VectorXd normal_mode(const SurfaceMesh& mesh) {
  Eigen::VectorXd v(2 * mesh.Np);
  for (int j = 0; j < mesh.Np; ++j) v.segment<2>(2 * j) = mesh.normal[j] * mesh.speed[j] * mesh.ds;
  return v.normalized();
}

namespace {

Eigen::MatrixXd reference_K(const SurfaceMesh& mesh) {
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(2 * mesh.Np, 3);
  for (int j = 0; j < mesh.Np; ++j) {
    const Vec2 r = perp(mesh.x[j]);
    K(2 * j, 0) = 1;
    K(2 * j + 1, 1) = 1;
    K(2 * j, 2) = r.x();
    K(2 * j + 1, 2) = r.y();
  }
  return K;
}

Eigen::Matrix3d lift_rotation(double theta) {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  R.topLeftCorner<2, 2>() = rotation(theta);
  return R;
}

// v -> (R^T v_j) per node, or R v_j when forward.
void rotate_nodes(const Mat2& R, Eigen::Ref<Eigen::VectorXd> v, bool forward) {
  const Mat2 Q = forward ? R : Mat2(R.transpose());
  for (Eigen::Index j = 0; j < v.size() / 2; ++j) v.segment<2>(2 * j) = Q * v.segment<2>(2 * j);
}

}  // namespace

Eigen::MatrixXd normal_basis(const Discretization& d) {
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(d.dof(), d.nbodies());
  for (int b = 0; b < d.nbodies(); ++b) B.block(2 * d.Np * b, b, 2 * d.Np, 1) = normal_mode(d.meshes[b]);
  return B;
}

Eigen::MatrixXd project_normal(const Eigen::MatrixXd& M, const Eigen::MatrixXd& B) {
  const Eigen::MatrixXd MB = M * B;
  const Eigen::MatrixXd BtMB = B.transpose() * MB;
  return M - MB * B.transpose() - B * MB.transpose() + B * BtMB * B.transpose();
}

ShapePreconditioner build_shape_preconditioner(const Eigen::MatrixXd& m_ref,
                                               const SurfaceMesh& ref_mesh) {
  ShapePreconditioner p;
  p.m_ref = project_normal(m_ref, normal_mode(ref_mesh));
  const SymmetricEigen e = symmetric_eigen(p.m_ref);
  const double floor = kPinvFloor * e.values.cwiseAbs().maxCoeff();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(e.values.size());
  for (Eigen::Index i = 0; i < e.values.size(); ++i) {
    if (e.values[i] <= floor) {
      ++p.dropped;
      continue;
    }
    inv[i] = 1 / e.values[i];
  }
  if (p.dropped != 1) {
    std::ostringstream os;
    os << "reference single-layer block has " << p.dropped - 1
       << " null modes besides the normal field; refine the mesh or check the shape";
    throw std::runtime_error(os.str());
  }
  p.m_ref_pinv = e.vectors * inv.asDiagonal() * e.vectors.transpose();
  const Eigen::MatrixXd K = reference_K(ref_mesh);
  p.n_ref = (K.transpose() * p.m_ref_pinv * K).inverse();
  return p;
}

FbimContext::FbimContext(const Configuration& prototype, const FbimParams& params)
    : params_(params),
      rule_(AlpertRule::get(params.order)),
      shapes_(prototype.shapes),
      domain_(prototype.domain) {
  if (std::abs(params_.plan.L - domain_.L) > 1e-12 * domain_.L)
    throw std::invalid_argument("Ewald plan and configuration have different cell sizes");
  const SplitParams sp{params_.plan.xi, params_.eta};
  for (const auto& s : shapes_) {
    ref_meshes_.push_back(discretize(s, params_.Np));
    blocks_.push_back(alpert_reference(s, ref_meshes_.back(), rule_, sp));
  }
  wave_ = std::make_shared<WaveOperator>(params_.plan, params_.eta);
  for (std::size_t s = 0; s < shapes_.size(); ++s)
    precond_.push_back(build_shape_preconditioner(reference_single_layer(static_cast<int>(s)),
                                                  ref_meshes_[s]));
}

SingleLayer FbimContext::single_layer(const Configuration& cfg) const {
  return SingleLayer(Discretization(cfg, params_.Np), params_.plan, rule_, params_.eta, wave_,
                     &blocks_);
}

Eigen::MatrixXd FbimContext::reference_single_layer(int shape) const {
  Configuration c;
  c.domain = domain_;
  c.shapes = shapes_;
  c.bodies.push_back(Body{Vec2::Zero(), 0.0, shape});
  return single_layer(c).dense();
}

SaddleSystem::SaddleSystem(const FbimContext& ctx, const Configuration& cfg)
    : ctx_(&ctx), layer_(ctx.single_layer(cfg)) {
  const auto& d = layer_.disc();
  for (int b = 0; b < d.nbodies(); ++b) normals_.push_back(normal_mode(d.meshes[b]));
}

void SaddleSystem::apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
  const auto& d = disc();
  const int n = d.dof();
  y.resize(size());
  Eigen::VectorXd mu = x.head(n);
  project_normal_modes(mu);
  Eigen::VectorXd Mmu(n);
  layer_.apply(mu.data(), Mmu.data());
  Eigen::VectorXd top = Mmu - apply_K(d, RigidMotion(x.tail(3 * nbodies())));
  project_normal_modes(top);
  y.head(n) = top;
  y.tail(3 * nbodies()) = -apply_KT(d, mu).values;
}

void SaddleSystem::precondition(const Eigen::VectorXd& r, Eigen::VectorXd& z) const {
  const auto& d = disc();
  const int Np = d.Np, n = d.dof();
  z.resize(size());
  for (int b = 0; b < d.nbodies(); ++b) {
    const Body& body = d.cfg.bodies[b];
    const ShapePreconditioner& P = ctx_->preconditioner(body.shape);
    const Mat2 R = rotation(body.theta);
    const Eigen::Matrix3d R3 = lift_rotation(body.theta);
    const Eigen::MatrixXd K = reference_K(ctx_->ref_meshes()[body.shape]);

    // Work in the reference frame of the body.
    Eigen::VectorXd a = r.segment(2 * Np * b, 2 * Np);
    rotate_nodes(R, a, false);
    const Eigen::Vector3d bb = R3.transpose() * r.segment<3>(n + 3 * b);
    const Eigen::VectorXd Ma = P.m_ref_pinv * a;
    const Eigen::Vector3d U = -P.n_ref * (bb + K.transpose() * Ma);
    Eigen::VectorXd mu = P.m_ref_pinv * (a + K * U);
    rotate_nodes(R, mu, true);
    z.segment(2 * Np * b, 2 * Np) = mu;
    z.segment<3>(n + 3 * b) = R3 * U;
  }
}

double SaddleSystem::project_normal_modes(Eigen::VectorXd& v) const {
  const int Np = disc().Np;
  double removed = 0;
  for (int b = 0; b < nbodies(); ++b) {
    auto seg = v.segment(2 * Np * b, 2 * Np);
    const double c = normals_[b].dot(seg);
    seg -= c * normals_[b];
    removed += c * c;
  }
  return std::sqrt(removed);
}

SaddleSolution SaddleSystem::solve(const ForceTorque& F, const Eigen::VectorXd* surface,
                                   const SolveOptions& opt) const {
  const int n = disc().dof();
  if (F.values.size() != 3 * nbodies())
    throw std::invalid_argument("force/torque vector has the wrong length");
  SaddleSolution sol;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(size());
  if (surface) {
    if (surface->size() != n) throw std::invalid_argument("surface velocity has the wrong length");
    Eigen::VectorXd v = *surface;
    sol.projected = project_normal_modes(v);
    rhs.head(n) = -v;
  }
  rhs.tail(3 * nbodies()) = -F.values;

  const LinearOperator A = [this](const Eigen::VectorXd& x, Eigen::VectorXd& y) { apply(x, y); };
  LinearOperator P;
  if (opt.precondition)
    P = [this](const Eigen::VectorXd& x, Eigen::VectorXd& y) { precondition(x, y); };
  GmresResult g = gmres(A, rhs, P, opt.tol, opt.max_iter);
  sol.mu = g.x.head(n);
  sol.U = RigidMotion(g.x.tail(3 * nbodies()));
  sol.iterations = g.iterations;
  sol.residuals = std::move(g.residuals);
  return sol;
}

Eigen::MatrixXd SaddleSystem::body_mobility(const SolveOptions& opt) const {
  const int m = 3 * nbodies();
  Eigen::MatrixXd N(m, m);
  for (int c = 0; c < m; ++c) {
    ForceTorque F = ForceTorque::zero(nbodies());
    F.values[c] = 1;
    N.col(c) = solve(F, nullptr, opt).U.values;
  }
  return N;
}

DenseMobility dense_mobility(const Eigen::MatrixXd& M, const Eigen::MatrixXd& K, double floor_rel) {
  const SymmetricEigen e = symmetric_eigen(M);
  const double floor = floor_rel * e.values.cwiseAbs().maxCoeff();
  DenseMobility out;
  for (Eigen::Index i = 0; i < e.values.size(); ++i)
    if (e.values[i] <= floor) ++out.dropped;
  const Eigen::MatrixXd Mp = eigen_pinv(e, floor);
  const Eigen::MatrixXd Mh = eigen_sqrt(e, floor);
  const Eigen::MatrixXd S = K.transpose() * Mp * K;
  out.N = S.ldlt().solve(Eigen::MatrixXd::Identity(S.rows(), S.cols()));
  out.N_half = out.N * K.transpose() * Mp * Mh;
  return out;
}

Eigen::MatrixXd dense_saddle_mobility(const Eigen::MatrixXd& M, const Eigen::MatrixXd& K) {
  const Eigen::Index n = M.rows(), m = K.cols();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + m, n + m);
  A.topLeftCorner(n, n) = M;
  A.topRightCorner(n, m) = -K;
  A.bottomLeftCorner(m, n) = -K.transpose();
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n + m, m);
  rhs.bottomRows(m) = -Eigen::MatrixXd::Identity(m, m);
  const Eigen::MatrixXd x = A.fullPivLu().solve(rhs);
  return x.bottomRows(m);
}

Eigen::MatrixXd body_mobility_dense(const FbimContext& ctx, const Configuration& cfg) {
  const SingleLayer layer = ctx.single_layer(cfg);
  const Eigen::MatrixXd M = project_normal(layer.dense(), normal_basis(layer.disc()));
  return dense_mobility(M, dense_K(layer.disc())).N;
}

}  // namespace fbim
