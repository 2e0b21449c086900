#pragma once

#include <complex>
#include <memory>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "fbim/geometry.hpp"
#include "fbim/kernels.hpp"
#include "fbim/quadrature.hpp"

namespace fbim {

class GaussianStream;

struct EwaldPlan {
  double eps = 1e-9;
  double L = 1.0;
  int nbox = 3;
  double rc = 0.0;
  double xi = 0.0;
  int M = 0;         // grid points per dimension (even)
  int P = 0;         // Gaussian support in grid points (odd)
  double h = 0.0;    // L / M
  double w = 0.0;    // P h / 2
  double m = 0.0;    // sqrt(pi P)
  double eta_g = 0.0;  // Gaussian shape, (2 w xi / m)^2

  std::string describe() const;
};

constexpr double kEwaldCr = 100.0;
constexpr double kEwaldCw = 1.0;

// xi = sqrt(ln(C_r/eps))/r_c, smallest even M with pi M/L >= 2 xi sqrt(ln(C_w/eps)),
// smallest odd P >= (2/pi) ln(1/eps).
EwaldPlan select_params(double eps, double L, int nbox);
// Same grid rules for an explicit xi.
EwaldPlan plan_for_xi(double eps, double L, int nbox, double xi);

// Returns r_alpert/r_c and, if above 0.6, a warning string.
double alpert_ratio(const EwaldPlan& plan, double r_alpert, std::string* warning = nullptr);

// Spectral Ewald gridding with Gaussian g(x) = (2 xi^2/(pi eta_g)) exp(-2 xi^2 |x|^2/eta_g),
// whose Fourier transform is exp(-eta_g k^2/(8 xi^2)). Grid node (i1, i2)
// sits at (i1 h, i2 h); array index i1 M + i2; mode index kappa = n or n - M.
class WaveOperator {
 public:
  using Grid = std::vector<std::complex<double>>;

  WaveOperator(const EwaldPlan& plan, double eta);
  ~WaveOperator();
  WaveOperator(const WaveOperator&) = delete;
  WaveOperator& operator=(const WaveOperator&) = delete;

  const EwaldPlan& plan() const { return plan_; }
  int M() const { return plan_.M; }

  // Type-1: h^2 FFT of the spread strengths, approximating ghat(k) sum_s f_s e^{-ik.x_s}.
  // Two grids (x and y components).
  void forward(const std::vector<Vec2>& pts, const double* f, Grid& gx, Grid& gy) const;
  // Type-2 adjoint: out_t = h^2 sum_y g(x_t - y) Re(IFFT(G))(y), unnormalized inverse.
  void adjoint(const Grid& gx, const Grid& gy, const std::vector<Vec2>& pts, double* out) const;

  // out += M^(w) mu
  void apply(const std::vector<Vec2>& pts, const double* mu, double* out) const;
  // out += scale (M^(w))^{1/2} W with W drawn from the stream. Returns the
  // largest imaginary part after the inverse transform relative to the real part.
  double sample(const std::vector<Vec2>& pts, GaussianStream& stream, double scale,
                double* out) const;

  // Fill complex noise with the conjugate-symmetry rules (zero mode 0,
  // self-conjugate Nyquist modes real N(0,1), others a+ib with variance 1/2).
  void draw_noise(GaussianStream& stream, Grid& zx, Grid& zy) const;

  // Mode helpers.
  int kappa(int n) const { return n < plan_.M / 2 ? n : n - plan_.M; }
  Vec2 k_of(int idx) const;

 private:
  void fft(Grid& g, int sign) const;
  void spread_one(const Vec2& x, double fx, double fy, Grid& gx, Grid& gy) const;
  Vec2 interp_one(const Vec2& x, const Grid& gx, const Grid& gy) const;

  EwaldPlan plan_;
  double eta_;
  void* plan_fwd_ = nullptr;
  void* plan_bwd_ = nullptr;
  // Per-mode symmetric multipliers (b11, b12, b22) for apply and sample.
  std::vector<double> b11_, b12_, b22_, s11_, s12_, s22_;
};

// Block-CSR symmetric sparse matrix with 2x2 blocks.
class SparseNearField {
 public:
  SparseNearField() = default;
  SparseNearField(int nnodes, std::vector<std::tuple<int, int, Mat2>> triplets);

  int nnodes() const { return n_; }
  std::size_t nnz_blocks() const { return col_.size(); }
  void apply(const double* x, double* y) const;  // y += A x
  Eigen::MatrixXd to_dense() const;
  double asymmetry() const;  // max |A_ij - A_ji^T|

 private:
  int n_ = 0;
  std::vector<int> rowptr_, col_;
  std::vector<Mat2> val_;
};

// Surface nodes of a configuration (body-major, Np per body).
struct Discretization {
  Configuration cfg;
  int Np = 0;
  std::vector<SurfaceMesh> ref_meshes;  // per shape
  std::vector<SurfaceMesh> meshes;      // per body, placed
  std::vector<Vec2> nodes;              // flattened, unwrapped

  Discretization() = default;
  Discretization(const Configuration& c, int Np);
  int nbodies() const { return static_cast<int>(cfg.size()); }
  int nnodes() const { return static_cast<int>(nodes.size()); }
  int dof() const { return 2 * nnodes(); }
};

// Reference singular blocks per shape for a given split.
std::vector<SingularBlock> reference_blocks(const Discretization& d, const AlpertRule& rule,
                                            const SplitParams& sp);

// Near field M^(t) + M^(a) via cell lists (nearest image only).
SparseNearField near_field_export(const Discretization& d, const EwaldPlan& plan,
                                  const std::vector<SingularBlock>& blocks, double eta);
// All-pairs minimum-image assembly of the same matrix.
Eigen::MatrixXd near_field_dense(const Discretization& d, const EwaldPlan& plan,
                                 const std::vector<SingularBlock>& blocks, double eta);

// Direct truncated k-sum of the wave part, |k| <= kmax.
Eigen::VectorXd wave_matvec_direct(const std::vector<Vec2>& pts, const Eigen::VectorXd& mu,
                                   double xi, double eta, double L, double kmax);

// M = M^(a) + M^(t) + M^(w) for one configuration.
class SingleLayer {
 public:
  SingleLayer(const Discretization& d, const EwaldPlan& plan, const AlpertRule& rule,
              double eta, std::shared_ptr<const WaveOperator> wave = nullptr,
              const std::vector<SingularBlock>* blocks = nullptr);

  const Discretization& disc() const { return disc_; }
  const SparseNearField& near() const { return near_; }
  const WaveOperator& wave() const { return *wave_; }
  std::shared_ptr<const WaveOperator> wave_ptr() const { return wave_; }
  const EwaldPlan& plan() const { return plan_; }

  void apply(const double* mu, double* out) const;  // out = M mu
  Eigen::VectorXd apply(const Eigen::VectorXd& mu) const;
  void apply_near(const double* mu, double* out) const;  // out += M^(r) mu
  void apply_wave(const double* mu, double* out) const;  // out += M^(w) mu
  Eigen::MatrixXd dense() const;

 private:
  Discretization disc_;
  EwaldPlan plan_;
  std::shared_ptr<const WaveOperator> wave_;
  SparseNearField near_;
};

}  // namespace fbim
