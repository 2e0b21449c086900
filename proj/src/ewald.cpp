#include "fbim/ewald.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <fftw3.h>

#include "fbim/rng.hpp"

namespace fbim {

using std::numbers::pi;
using cplx = std::complex<double>;

std::string EwaldPlan::describe() const {
  std::ostringstream os;
  os.precision(10);
  os << "eps=" << eps << " L=" << L << " nbox=" << nbox << " rc=" << rc << " xi=" << xi
     << " M=" << M << " P=" << P << " eta_g=" << eta_g;
  return os.str();
}

EwaldPlan plan_for_xi(double eps, double L, int nbox, double xi) {
  if (!(eps > 0 && eps < 1)) throw std::invalid_argument("tolerance must lie in (0, 1)");
  if (nbox < 3) throw std::invalid_argument("nbox must be >= 3");
  if (!(L > 0) || !(xi > 0)) throw std::invalid_argument("L and xi must be positive");
  EwaldPlan p;
  p.eps = eps;
  p.L = L;
  p.nbox = nbox;
  p.rc = L / nbox;
  p.xi = xi;
  const double kneed = 2 * xi * std::sqrt(std::log(kEwaldCw / eps));
  p.M = 2 * static_cast<int>(std::ceil(kneed * L / (2 * pi)));
  p.M = std::max(p.M, 4);
  const double pmin = 2 / pi * std::log(1 / eps);
  p.P = static_cast<int>(std::ceil(pmin - 1e-12));
  if (p.P % 2 == 0) ++p.P;
  p.h = L / p.M;
  p.w = p.P * p.h / 2;
  p.m = std::sqrt(pi * p.P);
  p.eta_g = std::pow(2 * p.w * xi / p.m, 2);
  return p;
}

EwaldPlan select_params(double eps, double L, int nbox) {
  if (!(eps >= 1e-12 * (1 - 1e-9) && eps <= 1e-3 * (1 + 1e-9)))
    throw std::invalid_argument("tolerance must lie in [1e-12, 1e-3]");
  const double rc = L / nbox;
  return plan_for_xi(eps, L, nbox, std::sqrt(std::log(kEwaldCr / eps)) / rc);
}

double alpert_ratio(const EwaldPlan& plan, double r_alpert, std::string* warning) {
  const double ratio = r_alpert / plan.rc;
  if (warning) {
    warning->clear();
    if (ratio > 0.6) {
      std::ostringstream os;
      os << "r_alpert/r_c = " << ratio << " exceeds 0.6; near-field accuracy will degrade";
      *warning = os.str();
    }
  }
  return ratio;
}

WaveOperator::WaveOperator(const EwaldPlan& plan, double eta) : plan_(plan), eta_(eta) {
  if (!(eta > 0)) throw std::invalid_argument("viscosity must be positive");
  const int M = plan.M;
  fftw_complex* tmp = fftw_alloc_complex(static_cast<std::size_t>(M) * M);
  plan_fwd_ = fftw_plan_dft_2d(M, M, tmp, tmp, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  plan_bwd_ = fftw_plan_dft_2d(M, M, tmp, tmp, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(tmp);
  const std::size_t n = static_cast<std::size_t>(M) * M;
  b11_.assign(n, 0);
  b12_.assign(n, 0);
  b22_.assign(n, 0);
  s11_.assign(n, 0);
  s12_.assign(n, 0);
  s22_.assign(n, 0);
  const double xi2 = plan.xi * plan.xi;
  for (std::size_t idx = 1; idx < n; ++idx) {
    // Nyquist rows and columns have no conjugate partner with the same
    // multiplier (b12 is odd in each component); they carry below-eps weight
    // and are dropped from both apply and sample.
    if (static_cast<int>(idx) / M == M / 2 || static_cast<int>(idx) % M == M / 2) continue;
    const Vec2 k = k_of(static_cast<int>(idx));
    const double k2 = k.squaredNorm();
    const double q = k2 / (4 * xi2);
    const double p11 = 1 - k.x() * k.x() / k2, p12 = -k.x() * k.y() / k2, p22 = 1 - k.y() * k.y() / k2;
    const double c = (1 + q) * std::exp(-(1 - plan.eta_g) * q) / k2;
    const double s = std::sqrt((1 + q) * std::exp(-q)) * std::exp(0.5 * plan.eta_g * q) / std::sqrt(k2);
    b11_[idx] = c * p11;
    b12_[idx] = c * p12;
    b22_[idx] = c * p22;
    s11_[idx] = s * p11;
    s12_[idx] = s * p12;
    s22_[idx] = s * p22;
  }
}

WaveOperator::~WaveOperator() {
  fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(plan_bwd_));
}

Vec2 WaveOperator::k_of(int idx) const {
  const int M = plan_.M;
  return wave_vector(kappa(idx / M), kappa(idx % M), plan_.L);
}

void WaveOperator::fft(Grid& g, int sign) const {
  auto* p = reinterpret_cast<fftw_complex*>(g.data());
  fftw_execute_dft(static_cast<fftw_plan>(sign < 0 ? plan_fwd_ : plan_bwd_), p, p);
}

namespace {

struct Stencil1D {
  int i0;
  std::vector<double> wts;
};

Stencil1D stencil(double x, const EwaldPlan& p) {
  Stencil1D s;
  s.i0 = static_cast<int>(std::lround(x / p.h));
  const int half = (p.P - 1) / 2;
  const double alpha = 2 * p.xi * p.xi / p.eta_g;
  s.wts.resize(p.P);
  for (int j = -half; j <= half; ++j) {
    const double d = x - (s.i0 + j) * p.h;
    s.wts[j + half] = std::exp(-alpha * d * d);
  }
  return s;
}

}  // namespace

void WaveOperator::spread_one(const Vec2& xin, double fx, double fy, Grid& gx, Grid& gy) const {
  const int M = plan_.M, half = (plan_.P - 1) / 2;
  const Vec2 x = wrap_point(xin, PeriodicDomain{plan_.L});
  const Stencil1D sx = stencil(x.x(), plan_), sy = stencil(x.y(), plan_);
  const double c = 2 * plan_.xi * plan_.xi / (pi * plan_.eta_g);
  for (int a = 0; a < plan_.P; ++a) {
    const int i1 = ((sx.i0 + a - half) % M + M) % M;
    const double wa = c * sx.wts[a];
    for (int b = 0; b < plan_.P; ++b) {
      const int i2 = ((sy.i0 + b - half) % M + M) % M;
      const double wgt = wa * sy.wts[b];
      gx[i1 * M + i2] += wgt * fx;
      gy[i1 * M + i2] += wgt * fy;
    }
  }
}

Vec2 WaveOperator::interp_one(const Vec2& xin, const Grid& gx, const Grid& gy) const {
  const int M = plan_.M, half = (plan_.P - 1) / 2;
  const Vec2 x = wrap_point(xin, PeriodicDomain{plan_.L});
  const Stencil1D sx = stencil(x.x(), plan_), sy = stencil(x.y(), plan_);
  const double c = 2 * plan_.xi * plan_.xi / (pi * plan_.eta_g);
  double ux = 0, uy = 0;
  for (int a = 0; a < plan_.P; ++a) {
    const int i1 = ((sx.i0 + a - half) % M + M) % M;
    double rx = 0, ry = 0;
    for (int b = 0; b < plan_.P; ++b) {
      const int i2 = ((sy.i0 + b - half) % M + M) % M;
      rx += sy.wts[b] * gx[i1 * M + i2].real();
      ry += sy.wts[b] * gy[i1 * M + i2].real();
    }
    ux += sx.wts[a] * rx;
    uy += sx.wts[a] * ry;
  }
  return Vec2(c * ux, c * uy);
}

void WaveOperator::forward(const std::vector<Vec2>& pts, const double* f, Grid& gx,
                           Grid& gy) const {
  const std::size_t n = static_cast<std::size_t>(plan_.M) * plan_.M;
  gx.assign(n, 0.0);
  gy.assign(n, 0.0);
  for (std::size_t s = 0; s < pts.size(); ++s) spread_one(pts[s], f[2 * s], f[2 * s + 1], gx, gy);
  fft(gx, -1);
  fft(gy, -1);
  const double h2 = plan_.h * plan_.h;
  for (std::size_t i = 0; i < n; ++i) {
    gx[i] *= h2;
    gy[i] *= h2;
  }
}

void WaveOperator::adjoint(const Grid& gxin, const Grid& gyin, const std::vector<Vec2>& pts,
                           double* out) const {
  Grid gx = gxin, gy = gyin;
  fft(gx, +1);
  fft(gy, +1);
  const double h2 = plan_.h * plan_.h;
  for (std::size_t t = 0; t < pts.size(); ++t) {
    const Vec2 u = interp_one(pts[t], gx, gy);
    out[2 * t] += h2 * u.x();
    out[2 * t + 1] += h2 * u.y();
  }
}

void WaveOperator::apply(const std::vector<Vec2>& pts, const double* mu, double* out) const {
  Grid gx, gy;
  forward(pts, mu, gx, gy);
  for (std::size_t i = 0; i < gx.size(); ++i) {
    const cplx a = gx[i], b = gy[i];
    gx[i] = b11_[i] * a + b12_[i] * b;
    gy[i] = b12_[i] * a + b22_[i] * b;
  }
  const double scale = 1 / (eta_ * plan_.L * plan_.L);
  std::vector<double> tmp(2 * pts.size(), 0.0);
  adjoint(gx, gy, pts, tmp.data());
  for (std::size_t i = 0; i < tmp.size(); ++i) out[i] += scale * tmp[i];
}

void WaveOperator::draw_noise(GaussianStream& stream, Grid& zx, Grid& zy) const {
  const int M = plan_.M;
  const std::size_t n = static_cast<std::size_t>(M) * M;
  zx.assign(n, 0.0);
  zy.assign(n, 0.0);
  const double r2 = std::sqrt(0.5);
  for (int i1 = 0; i1 < M; ++i1) {
    for (int i2 = 0; i2 < M; ++i2) {
      const int idx = i1 * M + i2;
      const int pdx = ((M - i1) % M) * M + (M - i2) % M;
      if (pdx == idx) {
        if (idx == 0) continue;
        zx[idx] = stream.normal();
        zy[idx] = stream.normal();
      } else if (idx < pdx) {
        const double ax = r2 * stream.normal(), bx = r2 * stream.normal();
        const double ay = r2 * stream.normal(), by = r2 * stream.normal();
        zx[idx] = cplx(ax, bx);
        zx[pdx] = cplx(ax, -bx);
        zy[idx] = cplx(ay, by);
        zy[pdx] = cplx(ay, -by);
      }
    }
  }
}

double WaveOperator::sample(const std::vector<Vec2>& pts, GaussianStream& stream, double scale,
                            double* out) const {
  Grid zx, zy;
  draw_noise(stream, zx, zy);
  for (std::size_t i = 0; i < zx.size(); ++i) {
    const cplx a = zx[i], b = zy[i];
    zx[i] = s11_[i] * a + s12_[i] * b;
    zy[i] = s12_[i] * a + s22_[i] * b;
  }
  fft(zx, +1);
  fft(zy, +1);
  double re = 0, im = 0;
  for (std::size_t i = 0; i < zx.size(); ++i) {
    re = std::max({re, std::abs(zx[i].real()), std::abs(zy[i].real())});
    im = std::max({im, std::abs(zx[i].imag()), std::abs(zy[i].imag())});
  }
  const double c = scale * plan_.h * plan_.h / std::sqrt(eta_ * plan_.L * plan_.L);
  for (std::size_t t = 0; t < pts.size(); ++t) {
    const Vec2 u = interp_one(pts[t], zx, zy);
    out[2 * t] += c * u.x();
    out[2 * t + 1] += c * u.y();
  }
  return re > 0 ? im / re : 0.0;
}

SparseNearField::SparseNearField(int nnodes, std::vector<std::tuple<int, int, Mat2>> trip)
    : n_(nnodes) {
  for (const auto& [r, c, v] : trip)
    if (r < 0 || c < 0 || r >= n_ || c >= n_) throw std::out_of_range("near-field block index");
  std::sort(trip.begin(), trip.end(), [](const auto& a, const auto& b) {
    return std::get<0>(a) != std::get<0>(b) ? std::get<0>(a) < std::get<0>(b)
                                            : std::get<1>(a) < std::get<1>(b);
  });
  rowptr_.assign(n_ + 1, 0);
  for (std::size_t i = 0; i < trip.size(); ++i) {
    const auto& [r, c, v] = trip[i];
    if (!col_.empty() && i > 0 && std::get<0>(trip[i - 1]) == r && col_.back() == c) {
      val_.back() += v;
      continue;
    }
    col_.push_back(c);
    val_.push_back(v);
    rowptr_[r + 1] = static_cast<int>(col_.size());
  }
  for (int r = 0; r < n_; ++r) rowptr_[r + 1] = std::max(rowptr_[r + 1], rowptr_[r]);
}

void SparseNearField::apply(const double* x, double* y) const {
  for (int r = 0; r < n_; ++r) {
    double a = 0, b = 0;
    for (int p = rowptr_[r]; p < rowptr_[r + 1]; ++p) {
      const Mat2& m = val_[p];
      const double x0 = x[2 * col_[p]], x1 = x[2 * col_[p] + 1];
      a += m(0, 0) * x0 + m(0, 1) * x1;
      b += m(1, 0) * x0 + m(1, 1) * x1;
    }
    y[2 * r] += a;
    y[2 * r + 1] += b;
  }
}

Eigen::MatrixXd SparseNearField::to_dense() const {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * n_, 2 * n_);
  for (int r = 0; r < n_; ++r)
    for (int p = rowptr_[r]; p < rowptr_[r + 1]; ++p) A.block<2, 2>(2 * r, 2 * col_[p]) += val_[p];
  return A;
}

double SparseNearField::asymmetry() const {
  const Eigen::MatrixXd A = to_dense();
  return (A - A.transpose()).cwiseAbs().maxCoeff();
}

Discretization::Discretization(const Configuration& c, int np) : cfg(c), Np(np) {
  for (const auto& s : cfg.shapes) ref_meshes.push_back(discretize(s, Np));
  for (const auto& b : cfg.bodies) {
    meshes.push_back(place(ref_meshes.at(b.shape), b.q, b.theta));
    for (const auto& x : meshes.back().x) nodes.push_back(x);
  }
}

std::vector<SingularBlock> reference_blocks(const Discretization& d, const AlpertRule& rule,
                                            const SplitParams& sp) {
  std::vector<SingularBlock> out;
  for (std::size_t s = 0; s < d.cfg.shapes.size(); ++s)
    out.push_back(alpert_reference(d.cfg.shapes[s], d.ref_meshes[s], rule, sp));
  return out;
}

namespace {

void add_alpert(const Discretization& d, const std::vector<SingularBlock>& blocks,
                std::vector<std::tuple<int, int, Mat2>>& trip) {
  for (int b = 0; b < d.nbodies(); ++b) {
    const auto& body = d.cfg.bodies[b];
    const SingularBlock& blk = blocks.at(body.shape);
    const Mat2 R = rotation(body.theta);
    const int off = b * d.Np;
    for (int t = 0; t < d.Np; ++t)
      for (int k = -blk.band; k <= blk.band; ++k) {
        const int n = ((t + k) % d.Np + d.Np) % d.Np;
        trip.emplace_back(off + t, off + n, R * blk.at(t, k) * R.transpose());
      }
  }
}

}  // namespace

SparseNearField near_field_export(const Discretization& d, const EwaldPlan& plan,
                                  const std::vector<SingularBlock>& blocks, double eta) {
  const SplitParams sp{plan.xi, eta};
  std::vector<std::tuple<int, int, Mat2>> trip;
  CellList cl(d.nodes, d.cfg.domain, plan.nbox);
  cl.for_each_pair([&](int i, int j, const Vec2& r) {
    const Mat2 G = stokeslet_real(r, sp);
    trip.emplace_back(i, j, G);
    trip.emplace_back(j, i, G);
  });
  add_alpert(d, blocks, trip);
  return SparseNearField(d.nnodes(), std::move(trip));
}

Eigen::MatrixXd near_field_dense(const Discretization& d, const EwaldPlan& plan,
                                 const std::vector<SingularBlock>& blocks, double eta) {
  const SplitParams sp{plan.xi, eta};
  const int n = d.nnodes();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      A.block<2, 2>(2 * i, 2 * j) = stokeslet_real(min_image(d.nodes[i] - d.nodes[j], d.cfg.domain), sp);
    }
  std::vector<std::tuple<int, int, Mat2>> trip;
  add_alpert(d, blocks, trip);
  for (const auto& [r, c, v] : trip) A.block<2, 2>(2 * r, 2 * c) += v;
  return A;
}

Eigen::VectorXd wave_matvec_direct(const std::vector<Vec2>& pts, const Eigen::VectorXd& mu,
                                   double xi, double eta, double L, double kmax) {
  const SplitParams sp{xi, eta};
  const int n = static_cast<int>(std::ceil(kmax * L / (2 * pi)));
  Eigen::VectorXd out = Eigen::VectorXd::Zero(2 * pts.size());
  const double V = L * L;
  for (int k1 = -n; k1 <= n; ++k1)
    for (int k2 = -n; k2 <= n; ++k2) {
      if (k1 == 0 && k2 == 0) continue;
      const Vec2 k = wave_vector(k1, k2, L);
      if (k.norm() > kmax) continue;
      const Mat2 B = stokeslet_wave(k, sp) / (eta * V);
      cplx cx = 0, cy = 0;
      for (std::size_t s = 0; s < pts.size(); ++s) {
        const cplx e = std::polar(1.0, -k.dot(pts[s]));
        cx += mu[2 * s] * e;
        cy += mu[2 * s + 1] * e;
      }
      for (std::size_t t = 0; t < pts.size(); ++t) {
        const cplx e = std::polar(1.0, k.dot(pts[t]));
        const Vec2 c((e * cx).real(), (e * cy).real());
        out.segment<2>(2 * t) += B * c;
      }
    }
  return out;
}

SingleLayer::SingleLayer(const Discretization& d, const EwaldPlan& plan, const AlpertRule& rule,
                         double eta, std::shared_ptr<const WaveOperator> wave,
                         const std::vector<SingularBlock>* blocks)
    : disc_(d), plan_(plan), wave_(std::move(wave)) {
  if (!wave_) wave_ = std::make_shared<WaveOperator>(plan, eta);
  if (blocks) {
    near_ = near_field_export(disc_, plan_, *blocks, eta);
  } else {
    near_ = near_field_export(disc_, plan_, reference_blocks(disc_, rule, SplitParams{plan.xi, eta}), eta);
  }
}

void SingleLayer::apply_near(const double* mu, double* out) const { near_.apply(mu, out); }

void SingleLayer::apply_wave(const double* mu, double* out) const {
  wave_->apply(disc_.nodes, mu, out);
}

void SingleLayer::apply(const double* mu, double* out) const {
  std::fill(out, out + disc_.dof(), 0.0);
  apply_near(mu, out);
  apply_wave(mu, out);
}

Eigen::VectorXd SingleLayer::apply(const Eigen::VectorXd& mu) const {
  Eigen::VectorXd out(mu.size());
  apply(mu.data(), out.data());
  return out;
}

Eigen::MatrixXd SingleLayer::dense() const {
  const int n = disc_.dof();
  Eigen::MatrixXd A(n, n);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) {
    e[j] = 1;
    A.col(j) = apply(e);
    e[j] = 0;
  }
  return A;
}

}  // namespace fbim
