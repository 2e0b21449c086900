#include "fbim/fluctuations.hpp"

#include <cmath>
#include <stdexcept>

namespace fbim {

WaveSample sample_wave_sqrt(const WaveOperator& wave, const std::vector<Vec2>& nodes,
                            GaussianStream& stream, double scale) {
  WaveSample s;
  s.v = Eigen::VectorXd::Zero(2 * static_cast<Eigen::Index>(nodes.size()));
  if (scale == 0) return s;
  s.imag_ratio = wave.sample(nodes, stream, scale, s.v.data());
  return s;
}

SqrtPreconditioner build_sqrt_preconditioner(const Eigen::MatrixXd& near_ref) {
  const SymmetricEigen e = symmetric_eigen(near_ref);
  const double floor = kPinvFloor * e.values.cwiseAbs().maxCoeff();
  const Eigen::Index m = e.values.size();
  Eigen::VectorXd root = Eigen::VectorXd::Zero(m), inv_root = Eigen::VectorXd::Zero(m);
  SqrtPreconditioner p;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (e.values[i] <= floor) {
      ++p.dropped;
      continue;
    }
    root[i] = std::sqrt(e.values[i]);
    inv_root[i] = 1 / root[i];
  }
  p.G = inv_root.asDiagonal() * e.vectors.transpose();
  p.G_pinv = e.vectors * root.asDiagonal();
  return p;
}

namespace {

// y = blockdiag(R_b A_ref R_b^T) x for A_ref per shape.
void apply_rotated_blocks(const Discretization& d, const std::vector<SqrtPreconditioner>& shapes,
                          bool pinv, bool transpose, const Eigen::VectorXd& x, Eigen::VectorXd& y) {
  const int Np = d.Np;
  y.resize(x.size());
  for (int b = 0; b < d.nbodies(); ++b) {
    const Body& body = d.cfg.bodies[b];
    const Mat2 R = rotation(body.theta);
    const SqrtPreconditioner& P = shapes.at(body.shape);
    const Eigen::MatrixXd& A = pinv ? P.G_pinv : P.G;
    Eigen::VectorXd xr = x.segment(2 * Np * b, 2 * Np);
    for (int j = 0; j < Np; ++j) xr.segment<2>(2 * j) = R.transpose() * xr.segment<2>(2 * j);
    Eigen::VectorXd yr = transpose ? Eigen::VectorXd(A.transpose() * xr) : Eigen::VectorXd(A * xr);
    for (int j = 0; j < Np; ++j) yr.segment<2>(2 * j) = R * yr.segment<2>(2 * j);
    y.segment(2 * Np * b, 2 * Np) = yr;
  }
}

}  // namespace

NearSample lanczos_sqrt_preconditioned(const SingleLayer& layer,
                                       const std::vector<SqrtPreconditioner>& shapes,
                                       const Eigen::VectorXd& w, double tol, int max_iter) {
  const Discretization& d = layer.disc();
  const LinearOperator op = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    Eigen::VectorXd gx, ax = Eigen::VectorXd::Zero(x.size());
    apply_rotated_blocks(d, shapes, false, true, x, gx);
    layer.apply_near(gx.data(), ax.data());
    apply_rotated_blocks(d, shapes, false, false, ax, y);
  };
  const LanczosResult r = lanczos_sqrt(op, w, tol, max_iter);
  NearSample s;
  apply_rotated_blocks(d, shapes, true, false, r.y, s.v);
  s.iterations = r.iterations;
  return s;
}

NoiseStreams noise_streams(std::uint64_t seed, std::uint64_t traj, std::uint64_t step) {
  return NoiseStreams{GaussianStream(seed, traj, step, Purpose::NearNoise),
                      GaussianStream(seed, traj, step, Purpose::WaveNoise)};
}

SurfaceVelocitySampler::SurfaceVelocitySampler(const FbimContext& ctx, double lanczos_tol)
    : ctx_(&ctx), tol_(lanczos_tol) {
  for (std::size_t s = 0; s < ctx.shapes().size(); ++s) {
    Configuration c;
    c.domain = ctx.domain();
    c.shapes = ctx.shapes();
    c.bodies.push_back(Body{Vec2::Zero(), 0.0, static_cast<int>(s)});
    const Discretization d(c, ctx.params().Np);
    const Eigen::MatrixXd near = near_field_dense(d, ctx.plan(), ctx.blocks(), ctx.params().eta);
    shapes_.push_back(build_sqrt_preconditioner(near));
  }
}

SurfaceSample SurfaceVelocitySampler::sample(const SingleLayer& layer, double kBT, double dt,
                                             NoiseStreams& streams) const {
  if (kBT < 0 || !(dt > 0)) throw std::invalid_argument("sampling needs kBT >= 0 and dt > 0");
  const int n = layer.disc().dof();
  SurfaceSample out;
  // Draw both noises even when kBT = 0 so streams advance identically.
  const Eigen::VectorXd w = streams.near.normal_vector(n);
  const double scale = std::sqrt(2 * kBT / dt);
  if (scale == 0) {
    out.v = Eigen::VectorXd::Zero(n);
    return out;
  }
  const NearSample nr = lanczos_sqrt_preconditioned(layer, shapes_, w, tol_);
  const WaveSample ws = sample_wave_sqrt(layer.wave(), layer.disc().nodes, streams.wave, scale);
  out.v = scale * nr.v + ws.v;
  out.lanczos_iterations = nr.iterations;
  out.imag_ratio = ws.imag_ratio;
  return out;
}

}  // namespace fbim
