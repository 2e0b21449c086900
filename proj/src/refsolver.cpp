#include "fbim/refsolver.hpp"

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "fbim/linalg.hpp"

namespace fbim {

using std::numbers::pi;
using cplx = std::complex<double>;

SecondKindOperator::SecondKindOperator(const Configuration& cfg, int Np, const RefOptions& opt)
    : disc_(cfg, Np), opt_(opt) {
  const double L = cfg.domain.L;
  const int nb = std::max(opt.nbox, 3);
  sums_ = periodic_sum_params(L, L / nb, opt.sum_tol, opt.eta);
  const SplitParams sp{sums_.xi, opt.eta};
  const int nn = disc_.nnodes();

  weight_.resize(nn);
  for (int b = 0; b < disc_.nbodies(); ++b) {
    const SurfaceMesh& m = disc_.meshes[b];
    double per = 0, mom = 0;
    for (int j = 0; j < Np; ++j) {
      const double w = m.speed[j] * m.ds;
      weight_[b * Np + j] = w;
      per += w;
      mom += w * (m.x[j] - cfg.bodies[b].q).squaredNorm();
    }
    perimeter_.push_back(per);
    moment_.push_back(mom);
  }
  auto node_normal = [&](int i) { return inward_normal(i); };

  std::vector<std::tuple<int, int, Mat2>> trip;
  CellList cl(disc_.nodes, cfg.domain, nb);
  const double c4 = 1 / (4 * pi);
  cl.for_each_pair([&](int i, int j, const Vec2& r) {
    const Tensor3 T = stresslet_real(r, sp);
    // T is odd in r, so the reverse pair uses -T.
    trip.emplace_back(i, j, c4 * weight_[j] * contract_m(T, node_normal(j)));
    trip.emplace_back(j, i, -c4 * weight_[i] * contract_m(T, node_normal(i)));
  });
  // Limit of T n along the curve is -2 kappa t t^T for the inward normal.
  for (int i = 0; i < nn; ++i) {
    const SurfaceMesh& m = disc_.meshes[i / Np];
    const Vec2 t = m.tangent[i % Np];
    trip.emplace_back(i, i, -m.kappa[i % Np] * weight_[i] / (2 * pi) * t * t.transpose());
  }
  near_ = SparseNearField(nn, std::move(trip));

  const int n = static_cast<int>(std::ceil(sums_.kmax * L / (2 * pi)));
  for (int k1 = 0; k1 <= n; ++k1)
    for (int k2 = -n; k2 <= n; ++k2) {
      if (k1 == 0 && k2 <= 0) continue;
      const Vec2 k = wave_vector(k1, k2, L);
      if (k.norm() > sums_.kmax) continue;
      waves_.push_back(k);
      wave_tensors_.push_back(stresslet_wave(k, sp));
      wave_index_.emplace_back(k1, k2);
    }

  completion_ = Eigen::MatrixXd::Zero(2 * nn, 3 * disc_.nbodies());
  for (int t = 0; t < nn; ++t)
    for (int b = 0; b < disc_.nbodies(); ++b) {
      const Vec2 r = min_image(disc_.nodes[t] - cfg.bodies[b].q, cfg.domain);
      completion_.block<2, 2>(2 * t, 3 * b) = periodic_stokeslet(r, sums_);
      completion_.block<2, 1>(2 * t, 3 * b + 2) = periodic_rotlet(r, sums_);
    }
}

Eigen::VectorXd SecondKindOperator::wave_part(const Eigen::VectorXd& phi) const {
  const int nn = disc_.nnodes();
  const double L = disc_.cfg.domain.L;
  int nmax = 0;
  for (const auto& [a, b] : wave_index_) nmax = std::max({nmax, a, std::abs(b)});
  // e^{i 2 pi k x / L} for integer k via per-node power tables.
  const int width = 2 * nmax + 1;
  std::vector<cplx> ex(static_cast<std::size_t>(nn) * width), ey(ex.size());
  for (int s = 0; s < nn; ++s) {
    const cplx bx = std::polar(1.0, 2 * pi * disc_.nodes[s].x() / L);
    const cplx by = std::polar(1.0, 2 * pi * disc_.nodes[s].y() / L);
    cplx px = 1, py = 1;
    ex[s * width + nmax] = 1;
    ey[s * width + nmax] = 1;
    for (int k = 1; k <= nmax; ++k) {
      px *= bx;
      py *= by;
      ex[s * width + nmax + k] = px;
      ex[s * width + nmax - k] = std::conj(px);
      ey[s * width + nmax + k] = py;
      ey[s * width + nmax - k] = std::conj(py);
    }
  }
  std::vector<Mat2> S(nn);
  for (int s = 0; s < nn; ++s)
    S[s] = weight_[s] * phi.segment<2>(2 * s) * inward_normal(s).transpose();

  Eigen::VectorXd out = Eigen::VectorXd::Zero(2 * nn);
  const double V = L * L;
  std::vector<cplx> e(nn);
  for (std::size_t q = 0; q < waves_.size(); ++q) {
    const auto [k1, k2] = wave_index_[q];
    cplx c[2][2] = {{0, 0}, {0, 0}};
    for (int s = 0; s < nn; ++s) {
      e[s] = ex[s * width + nmax + k1] * ey[s * width + nmax + k2];
      const cplx em = std::conj(e[s]);
      for (int l = 0; l < 2; ++l)
        for (int m = 0; m < 2; ++m) c[l][m] += S[s](l, m) * em;
    }
    const Tensor3& T = wave_tensors_[q];
    cplx v[2] = {0, 0};
    for (int j = 0; j < 2; ++j)
      for (int l = 0; l < 2; ++l)
        for (int m = 0; m < 2; ++m) v[j] += T[4 * j + 2 * l + m] * c[l][m];
    // Both k and -k: 2 Im(e^{ik.x_t} v).
    for (int t = 0; t < nn; ++t) {
      out[2 * t] += 2 * (e[t] * v[0]).imag();
      out[2 * t + 1] += 2 * (e[t] * v[1]).imag();
    }
  }
  return out / (4 * pi * V);
}

Vec2 SecondKindOperator::mean_flow(const Eigen::VectorXd& phi) const {
  // Zero mean velocity over the whole cell with rigid interiors:
  // (1/V) sum (x_s - q) (phi_s . n_s) w_s.
  const int Np = disc_.Np;
  Vec2 acc = Vec2::Zero();
  for (int s = 0; s < disc_.nnodes(); ++s) {
    const int b = s / Np;
    acc += (disc_.nodes[s] - disc_.cfg.bodies[b].q) *
           (phi.segment<2>(2 * s).dot(inward_normal(s)) * weight_[s]);
  }
  const double L = disc_.cfg.domain.L;
  return acc / (L * L);
}

Eigen::VectorXd SecondKindOperator::double_layer(const Eigen::VectorXd& phi) const {
  Eigen::VectorXd out = wave_part(phi);
  near_.apply(phi.data(), out.data());
  const Vec2 m = mean_flow(phi);
  for (int t = 0; t < disc_.nnodes(); ++t) out.segment<2>(2 * t) += m;
  return out;
}

Eigen::VectorXd SecondKindOperator::completion(const ForceTorque& F) const {
  return completion_ * F.values;
}

RigidMotion SecondKindOperator::closure(const Eigen::VectorXd& phi) const {
  const int Np = disc_.Np;
  RigidMotion U = RigidMotion::zero(disc_.nbodies());
  for (int b = 0; b < disc_.nbodies(); ++b) {
    Vec2 u = Vec2::Zero();
    double w = 0;
    for (int j = 0; j < Np; ++j) {
      const int s = b * Np + j;
      const Vec2 p = phi.segment<2>(2 * s);
      u += weight_[s] * p;
      w += weight_[s] * p.dot(perp(disc_.nodes[s] - disc_.cfg.bodies[b].q));
    }
    U.set(b, u / perimeter_[b], w / moment_[b]);
  }
  return U;
}

Eigen::VectorXd SecondKindOperator::residual(const Eigen::VectorXd& phi, const RigidMotion& U,
                                             const ForceTorque& F) const {
  return 0.5 * phi + double_layer(phi) + completion(F) - apply_K(disc_, U);
}

Eigen::VectorXd SecondKindOperator::apply(const Eigen::VectorXd& phi) const {
  return 0.5 * phi + double_layer(phi) - apply_K(disc_, closure(phi));
}

Vec2 SecondKindOperator::velocity_at(const Vec2& x, const Eigen::VectorXd& phi,
                                     const ForceTorque& F) const {
  const SplitParams sp{sums_.xi, opt_.eta};
  const PeriodicDomain& dom = disc_.cfg.domain;
  const double L = dom.L, V = L * L;
  Vec2 u = Vec2::Zero();
  for (int s = 0; s < disc_.nnodes(); ++s) {
    const Vec2 r = min_image(x - disc_.nodes[s], dom);
    if (r.norm() >= sums_.rcut) continue;
    const Mat2 S = weight_[s] * phi.segment<2>(2 * s) * inward_normal(s).transpose();
    u += contract_lm(stresslet_real(r, sp), S) / (4 * pi);
  }
  for (std::size_t q = 0; q < waves_.size(); ++q) {
    const Vec2& k = waves_[q];
    for (int s = 0; s < disc_.nnodes(); ++s) {
      const Mat2 S = weight_[s] * phi.segment<2>(2 * s) * inward_normal(s).transpose();
      u += contract_lm(wave_tensors_[q], S) * (2 * std::sin(k.dot(x - disc_.nodes[s])) / (4 * pi * V));
    }
  }
  u += mean_flow(phi);
  for (int b = 0; b < disc_.nbodies(); ++b) {
    const Vec2 r = min_image(x - disc_.cfg.bodies[b].q, dom);
    u += periodic_stokeslet(r, sums_) * F.linear(b) + periodic_rotlet(r, sums_) * F.angular(b);
  }
  return u;
}

RefSolution solve_mobility_ref(const Configuration& cfg, const ForceTorque& F, int Np,
                               const RefOptions& opt, const Eigen::VectorXd* surface) {
  const SecondKindOperator op(cfg, Np, opt);
  Eigen::VectorXd rhs = -op.completion(F);
  if (surface) rhs += *surface;
  const LinearOperator A = [&op](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = op.apply(x); };
  const GmresResult g = gmres(A, rhs, LinearOperator{}, opt.gmres_tol, opt.max_iter);
  RefSolution sol;
  sol.phi = g.x;
  sol.U = op.closure(g.x);
  sol.iterations = g.iterations;
  return sol;
}

Eigen::MatrixXd mobility_ref(const Configuration& cfg, int Np, const RefOptions& opt) {
  const SecondKindOperator op(cfg, Np, opt);
  const int m = 3 * static_cast<int>(cfg.size());
  const LinearOperator A = [&op](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = op.apply(x); };
  Eigen::MatrixXd N(m, m);
  for (int c = 0; c < m; ++c) {
    ForceTorque F = ForceTorque::zero(m / 3);
    F.values[c] = 1;
    const GmresResult g = gmres(A, -op.completion(F), LinearOperator{}, opt.gmres_tol, opt.max_iter);
    N.col(c) = op.closure(g.x).values;
  }
  return N;
}

double OrientationTable::rot(double th) const {
  // Trigonometric interpolation on the equispaced samples over one period.
  const int n = static_cast<int>(theta.size());
  const double x = 2 * pi * (th - theta.front()) / period;
  double acc = 0;
  for (int j = 0; j < n; ++j) {
    const double d = x - 2 * pi * j / n;
    double basis;
    if (std::abs(std::sin(d / 2)) < 1e-14) {
      basis = 1;
    } else if (n % 2 == 1) {
      basis = std::sin(n * d / 2) / (n * std::sin(d / 2));
    } else {
      basis = std::sin(n * d / 2) / (n * std::tan(d / 2));
    }
    acc += basis * N[j](2, 2);
  }
  return acc;
}

namespace {

std::string table_key(const BodyShape& shape, double L, int Np, int n, double period,
                      const RefOptions& opt) {
  std::ostringstream os;
  os << std::setprecision(12) << "ntheta_" << shape.kind_name() << "_rs" << shape.rs << "_b"
     << shape.b << "_a" << shape.a << "_l" << shape.lobes << "_L" << L << "_Np" << Np << "_n" << n
     << "_P" << period << "_tol" << opt.gmres_tol;
  std::string s = os.str();
  for (char& c : s)
    if (c == '.' || c == '-' || c == '+') c = c == '.' ? 'p' : (c == '-' ? 'm' : 'P');
  return s + ".csv";
}

}  // namespace

OrientationTable orientation_table(const BodyShape& shape, double L, int Np, int n, double period,
                                   const RefOptions& opt, const std::string& cache_dir) {
  OrientationTable tab;
  tab.period = period;
  std::filesystem::path file;
  if (!cache_dir.empty()) {
    file = std::filesystem::path(cache_dir) / table_key(shape, L, Np, n, period, opt);
    std::ifstream in(file);
    if (in) {
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 't') continue;
        std::istringstream ls(line);
        double th;
        char comma;
        Eigen::Matrix3d N;
        ls >> th;
        for (int i = 0; i < 9; ++i) ls >> comma >> N(i / 3, i % 3);
        if (!ls) throw std::runtime_error("corrupt orientation table cache: " + file.string());
        tab.theta.push_back(th);
        tab.N.push_back(N);
      }
      if (static_cast<int>(tab.theta.size()) == n) return tab;
      tab.theta.clear();
      tab.N.clear();
    }
  }
  for (int j = 0; j < n; ++j) {
    const double th = period * j / n;
    Configuration c;
    c.domain.L = L;
    c.shapes = {shape};
    c.bodies = {Body{Vec2(L / 2, L / 2), th, 0}};
    tab.theta.push_back(th);
    tab.N.push_back(mobility_ref(c, Np, opt));
  }
  if (!file.empty()) {
    std::filesystem::create_directories(file.parent_path());
    std::ofstream out(file);
    out << "# second-kind reference N(theta); " << shape.kind_name() << " L=" << L << " Np=" << Np
        << "\n";
    out << "theta,N00,N01,N02,N10,N11,N12,N20,N21,N22\n";
    out << std::setprecision(17);
    for (int j = 0; j < n; ++j) {
      out << tab.theta[j];
      for (int i = 0; i < 9; ++i) out << ',' << tab.N[j](i / 3, i % 3);
      out << '\n';
    }
  }
  return tab;
}

}  // namespace fbim
