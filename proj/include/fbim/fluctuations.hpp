#pragma once

#include <vector>

#include <Eigen/Dense>

#include "fbim/ewald.hpp"
#include "fbim/linalg.hpp"
#include "fbim/mobility.hpp"
#include "fbim/rng.hpp"

namespace fbim {

struct WaveSample {
  Eigen::VectorXd v;
  double imag_ratio = 0.0;  // largest imaginary part relative to the real part on the grid
};

// scale (M^(w))^{1/2} W on the nodes, with W drawn on the Fourier grid.
WaveSample sample_wave_sqrt(const WaveOperator& wave, const std::vector<Vec2>& nodes,
                            GaussianStream& stream, double scale);

// Per-shape square-root preconditioner of the near field,
// G = (S^+)^{1/2} V^T and G^+ = V S^{1/2} from M^(r)_ref = V S V^T, with
// eigenvalues below kPinvFloor * max|S| (including negative ones) zeroed.
struct SqrtPreconditioner {
  Eigen::MatrixXd G, G_pinv;
  int dropped = 0;
};
SqrtPreconditioner build_sqrt_preconditioner(const Eigen::MatrixXd& near_ref);

struct NearSample {
  Eigen::VectorXd v;
  int iterations = 0;
};

// G^+ (G A G^T)^{1/2} w with block-diagonal G rotated per body.
NearSample lanczos_sqrt_preconditioned(const SingleLayer& layer,
                                       const std::vector<SqrtPreconditioner>& shapes,
                                       const Eigen::VectorXd& w, double tol, int max_iter = 200);

struct SurfaceSample {
  Eigen::VectorXd v;
  int lanczos_iterations = 0;
  double imag_ratio = 0.0;
};

// Independent noise for the two halves of the split square root.
struct NoiseStreams {
  GaussianStream near;
  GaussianStream wave;
};
NoiseStreams noise_streams(std::uint64_t seed, std::uint64_t traj, std::uint64_t step);

// Samples the random surface velocity sqrt(2 kBT / dt) M^{1/2} W from one
// configuration. Owns the per-shape preconditioners.
class SurfaceVelocitySampler {
 public:
  explicit SurfaceVelocitySampler(const FbimContext& ctx, double lanczos_tol = 1e-6);

  const std::vector<SqrtPreconditioner>& preconditioners() const { return shapes_; }
  double tol() const { return tol_; }

  SurfaceSample sample(const SingleLayer& layer, double kBT, double dt, NoiseStreams& streams) const;

 private:
  const FbimContext* ctx_;
  double tol_;
  std::vector<SqrtPreconditioner> shapes_;
};

}  // namespace fbim
