#include "fbim/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>

namespace fbim {

Eigen::VectorXd pack_coordinates(const Configuration& cfg) {
  Eigen::VectorXd Q(3 * cfg.size());
  for (std::size_t b = 0; b < cfg.size(); ++b) {
    Q.segment<2>(3 * b) = cfg.bodies[b].q;
    Q[3 * b + 2] = cfg.bodies[b].theta;
  }
  return Q;
}

void unpack_coordinates(const Eigen::VectorXd& Q, Configuration& cfg) {
  if (Q.size() != 3 * static_cast<Eigen::Index>(cfg.size()))
    throw std::invalid_argument("coordinate vector does not match the body count");
  for (std::size_t b = 0; b < cfg.size(); ++b) {
    cfg.bodies[b].q = Q.segment<2>(3 * b);
    cfg.bodies[b].theta = Q[3 * b + 2];
  }
}

ForceTorque FreePotential::forces(const Configuration& cfg) const {
  return ForceTorque::zero(static_cast<int>(cfg.size()));
}

ForceTorque ConstantForce::forces(const Configuration& cfg) const {
  if (F_.nbodies() != static_cast<int>(cfg.size()))
    throw std::invalid_argument("constant force does not match the body count");
  return F_;
}

PairPotential::PairPotential(Params p) : p_(p) {
  if (p_.i == p_.j || p_.i < 0 || p_.j < 0) throw std::invalid_argument("pair needs two bodies");
  if (p_.spring < 0 || p_.stiffness_rot < 0 || p_.rest < 0)
    throw std::invalid_argument("pair potential parameters must be non-negative");
}

double PairPotential::energy(const Configuration& cfg) const {
  const Body& bi = cfg.bodies.at(p_.i);
  const Body& bj = cfg.bodies.at(p_.j);
  const double d = min_image(bi.q - bj.q, cfg.domain).norm();
  const double ti = bi.theta - p_.angle_i, tj = bj.theta - p_.angle_j;
  return 0.5 * p_.spring * (d - p_.rest) * (d - p_.rest) +
         0.5 * p_.stiffness_rot * (ti * ti + tj * tj);
}

ForceTorque PairPotential::forces(const Configuration& cfg) const {
  const Body& bi = cfg.bodies.at(p_.i);
  const Body& bj = cfg.bodies.at(p_.j);
  const Vec2 r = min_image(bi.q - bj.q, cfg.domain);
  const double d = r.norm();
  if (d == 0) throw std::domain_error("coincident tracking points");
  const Vec2 fi = -p_.spring * (d - p_.rest) * r / d;
  ForceTorque F = ForceTorque::zero(static_cast<int>(cfg.size()));
  F.set(p_.i, fi, -p_.stiffness_rot * (bi.theta - p_.angle_i));
  F.set(p_.j, -fi, -p_.stiffness_rot * (bj.theta - p_.angle_j));
  return F;
}

double default_rfd_delta(double length, double eps) { return length * std::cbrt(eps); }

MobilitySolve fbim_mobility(const FbimContext& ctx, double lanczos_tol) {
  auto sampler = std::make_shared<SurfaceVelocitySampler>(ctx, lanczos_tol);
  MobilitySolve m;
  m.solve = [&ctx](const Configuration& cfg, const ForceTorque& F, const Eigen::VectorXd* surface,
                   double tol, StepDiagnostics& d) {
    const SaddleSystem sys(ctx, cfg);
    SolveOptions opt;
    opt.tol = tol;
    const SaddleSolution s = sys.solve(F, surface, opt);
    ++d.solves;
    d.gmres_iterations += s.iterations;
    return s.U;
  };
  m.sample = [&ctx, sampler](const Configuration& cfg, double kBT, double dt,
                             NoiseStreams& streams, StepDiagnostics& d) {
    const SingleLayer layer = ctx.single_layer(cfg);
    const SurfaceSample s = sampler->sample(layer, kBT, dt, streams);
    d.lanczos_iterations += s.lanczos_iterations;
    return s.v;
  };
  return m;
}

Eigen::VectorXd rfd_drift(const MobilitySolve& mob, const Configuration& cfg, double delta,
                          double kBT, GaussianStream& stream, double tol, StepDiagnostics& diag,
                          int overlap_Np) {
  if (!(delta > 0)) throw std::invalid_argument("RFD needs delta > 0");
  const int n = static_cast<int>(cfg.size());
  const Eigen::VectorXd W = stream.normal_vector(3 * n);
  const Eigen::VectorXd Q = pack_coordinates(cfg);
  Configuration plus = cfg, minus = cfg;
  unpack_coordinates(Q + 0.5 * delta * W, plus);
  unpack_coordinates(Q - 0.5 * delta * W, minus);
  if (overlap_Np > 0 && (bodies_overlap(plus, overlap_Np) || bodies_overlap(minus, overlap_Np)))
    throw OverlapError("RFD displacement overlaps");
  const ForceTorque probe(W);
  const RigidMotion up = mob.solve(plus, probe, nullptr, tol, diag);
  const RigidMotion um = mob.solve(minus, probe, nullptr, tol, diag);
  return (kBT / delta) * (up.values - um.values);
}

BrownianIntegrator::BrownianIntegrator(MobilitySolve mob, const Potential& pot, BDParams params,
                                       std::uint64_t seed, std::uint64_t traj, int overlap_Np)
    : mob_(std::move(mob)), pot_(&pot), params_(params), seed_(seed), traj_(traj),
      overlap_Np_(overlap_Np) {
  if (!(params_.dt > 0)) throw std::invalid_argument("dt must be positive");
  if (params_.kBT < 0) throw std::invalid_argument("kBT must be non-negative");
  if (params_.delta <= 0) params_.delta = default_rfd_delta(params_.rfd_length, params_.tol_det);
}

Eigen::VectorXd BrownianIntegrator::drift_term(const Configuration& cfg, GaussianStream& rfd,
                                               StepDiagnostics& d) {
  if (!params_.rfd) return Eigen::VectorXd::Zero(3 * static_cast<Eigen::Index>(cfg.size()));
  return rfd_drift(mob_, cfg, params_.delta, params_.kBT, rfd, params_.tol_rfd, d, overlap_Np_);
}

void BrownianIntegrator::commit(Configuration& cfg, const Eigen::VectorXd& dQ) {
  Configuration next = cfg;
  unpack_coordinates(pack_coordinates(cfg) + dQ, next);
  if (overlap_Np_ > 0 && bodies_overlap(next, overlap_Np_))
    throw OverlapError("step produces overlapping bodies");
  cfg = std::move(next);
}

StepDiagnostics BrownianIntegrator::step_em(Configuration& cfg, NoiseStreams& noise,
                                            GaussianStream& rfd) {
  StepDiagnostics d;
  const ForceTorque F = pot_->forces(cfg);
  const Eigen::VectorXd v = mob_.sample(cfg, params_.kBT, params_.dt, noise, d);
  const RigidMotion U = mob_.solve(cfg, F, &v, params_.tol_det, d);
  const Eigen::VectorXd drift = drift_term(cfg, rfd, d);
  commit(cfg, params_.dt * (U.values + drift));
  return d;
}

StepDiagnostics BrownianIntegrator::step_ab2(Configuration& cfg, NoiseStreams& noise,
                                             GaussianStream& rfd) {
  StepDiagnostics d;
  const ForceTorque F = pot_->forces(cfg);
  const RigidMotion NF = mob_.solve(cfg, F, nullptr, params_.tol_det, d);
  const Eigen::VectorXd v = mob_.sample(cfg, params_.kBT, params_.dt, noise, d);
  const RigidMotion Uf =
      mob_.solve(cfg, ForceTorque::zero(static_cast<int>(cfg.size())), &v, params_.tol_det, d);
  const Eigen::VectorXd drift = drift_term(cfg, rfd, d);
  // The first step has no history and reduces to the EM deterministic term.
  const Eigen::VectorXd prev = prev_NF_ ? *prev_NF_ : NF.values;
  commit(cfg, params_.dt * (1.5 * NF.values - 0.5 * prev + Uf.values + drift));
  prev_NF_ = NF.values;
  return d;
}

StepDiagnostics BrownianIntegrator::step(Configuration& cfg) {
  for (int attempt = 0; attempt <= params_.max_retries; ++attempt) {
    const std::uint64_t seed =
        attempt == 0 ? seed_
                     : stream_id(seed_, traj_, static_cast<std::uint64_t>(step_),
                                 static_cast<std::uint64_t>(Purpose::Retry)) +
                           static_cast<std::uint64_t>(attempt);
    const auto n = static_cast<std::uint64_t>(step_);
    NoiseStreams noise = noise_streams(seed, traj_, n);
    GaussianStream rfd(seed, traj_, n, Purpose::Rfd);
    try {
      StepDiagnostics d = params_.scheme == Scheme::EM ? step_em(cfg, noise, rfd)
                                                       : step_ab2(cfg, noise, rfd);
      d.retries = attempt;
      ++step_;
      return d;
    } catch (const OverlapError&) {
      continue;
    } catch (const std::exception& e) {
      throw StepError(std::string("step failed: ") + e.what(), step_);
    }
  }
  throw StepError("overlap persists after retries", step_);
}

void Trajectory::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  const Eigen::Index nb = Q.empty() ? 0 : Q.front().size() / 3;
  out << "step,t";
  for (Eigen::Index b = 0; b < nb; ++b) out << ",qx" << b << ",qy" << b << ",theta" << b;
  out << ",solves,gmres_iterations,lanczos_iterations,retries\n";
  out.precision(17);
  for (std::size_t s = 0; s < Q.size(); ++s) {
    out << s << ',' << static_cast<double>(s) * dt;
    for (Eigen::Index i = 0; i < Q[s].size(); ++i) out << ',' << Q[s][i];
    const StepDiagnostics d = s == 0 ? StepDiagnostics{} : diag[s - 1];
    out << ',' << d.solves << ',' << d.gmres_iterations << ',' << d.lanczos_iterations << ','
        << d.retries << '\n';
  }
}

Trajectory run_trajectory(BrownianIntegrator& integ, Configuration cfg, long nsteps,
                          int record_every) {
  if (record_every < 1) throw std::invalid_argument("record_every must be >= 1");
  Trajectory t;
  t.dt = integ.params().dt * record_every;
  t.Q.push_back(pack_coordinates(cfg));
  StepDiagnostics acc;
  for (long s = 1; s <= nsteps; ++s) {
    const StepDiagnostics d = integ.step(cfg);
    acc.solves += d.solves;
    acc.gmres_iterations += d.gmres_iterations;
    acc.lanczos_iterations += d.lanczos_iterations;
    acc.retries += d.retries;
    if (s % record_every == 0) {
      t.Q.push_back(pack_coordinates(cfg));
      t.diag.push_back(acc);
      acc = StepDiagnostics{};
    }
  }
  return t;
}

// ---- observables ----

std::vector<std::vector<double>> stationary_segments(
    const std::vector<std::vector<double>>& series, double burn_in) {
  if (burn_in < 0 || burn_in >= 1) throw std::invalid_argument("burn-in fraction in [0, 1)");
  std::vector<std::vector<double>> out;
  for (const auto& s : series) {
    const auto skip = static_cast<std::size_t>(burn_in * static_cast<double>(s.size()));
    out.emplace_back(s.begin() + static_cast<std::ptrdiff_t>(skip), s.end());
  }
  return out;
}

namespace {

// Splits every trajectory into nblocks contiguous blocks and applies f to
// each block; returns the mean and standard error across blocks.
Estimate across_blocks(std::size_t ntraj, const std::function<std::size_t(std::size_t)>& length,
                       int nblocks,
                       const std::function<double(std::size_t, std::size_t, std::size_t)>& f) {
  std::vector<double> vals;
  for (std::size_t t = 0; t < ntraj; ++t) {
    const std::size_t n = length(t);
    const std::size_t bl = n / static_cast<std::size_t>(nblocks);
    if (bl < 2) throw std::invalid_argument("series too short for the block count");
    for (int b = 0; b < nblocks; ++b) vals.push_back(f(t, b * bl, (b + 1) * bl));
  }
  const double m = std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(vals.size());
  double var = 0;
  for (double v : vals) var += (v - m) * (v - m);
  const auto k = static_cast<double>(vals.size());
  return Estimate{m, k > 1 ? std::sqrt(var / (k - 1) / k) : 0.0};
}

}  // namespace

Estimate block_mean(const std::vector<std::vector<double>>& series, int nblocks) {
  return across_blocks(
      series.size(), [&](std::size_t t) { return series[t].size(); }, nblocks,
      [&](std::size_t t, std::size_t lo, std::size_t hi) {
        double s = 0;
        for (std::size_t i = lo; i < hi; ++i) s += series[t][i];
        return s / static_cast<double>(hi - lo);
      });
}

Estimate block_covariance(const std::vector<std::vector<double>>& a,
                          const std::vector<std::vector<double>>& b, int nblocks) {
  if (a.size() != b.size()) throw std::invalid_argument("series count mismatch");
  for (std::size_t t = 0; t < a.size(); ++t)
    if (a[t].size() != b[t].size()) throw std::invalid_argument("series length mismatch");
  // Deviations are taken from the pooled means so block estimates share a centre.
  double ma = 0, mb = 0;
  std::size_t n = 0;
  for (std::size_t t = 0; t < a.size(); ++t)
    for (std::size_t i = 0; i < a[t].size(); ++i) {
      ma += a[t][i];
      mb += b[t][i];
      ++n;
    }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  return across_blocks(
      a.size(), [&](std::size_t t) { return a[t].size(); }, nblocks,
      [&](std::size_t t, std::size_t lo, std::size_t hi) {
        double s = 0;
        for (std::size_t i = lo; i < hi; ++i) s += (a[t][i] - ma) * (b[t][i] - mb);
        return s / static_cast<double>(hi - lo);
      });
}

namespace {

// Least squares of y on the given basis columns evaluated at t.
Eigen::VectorXd lsq(const std::vector<double>& t, const std::vector<double>& y, int ncols) {
  Eigen::MatrixXd A(static_cast<Eigen::Index>(t.size()), ncols);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(t.size()));
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (int c = 0; c < ncols; ++c) A(static_cast<Eigen::Index>(i), c) = std::pow(t[i], c + 1);
    rhs[static_cast<Eigen::Index>(i)] = y[i];
  }
  return A.colPivHouseholderQr().solve(rhs);
}

Estimate mean_se(const std::vector<double>& v) {
  const auto k = static_cast<double>(v.size());
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / k;
  double var = 0;
  for (double x : v) var += (x - m) * (x - m);
  return Estimate{m, k > 1 ? std::sqrt(var / (k - 1) / k) : 0.0};
}

}  // namespace

MsdCurve mean_square_displacement(const std::vector<std::vector<Vec2>>& positions,
                                  double sample_dt, const std::vector<int>& lags, int nblocks) {
  if (lags.empty()) throw std::invalid_argument("no lags");
  std::vector<std::vector<double>> blocks;  // per block, msd at each lag
  for (const auto& traj : positions) {
    const std::size_t bl = traj.size() / static_cast<std::size_t>(nblocks);
    for (int b = 0; b < nblocks; ++b) {
      const std::size_t lo = b * bl, hi = (b + 1) * bl;
      std::vector<double> m;
      for (int lag : lags) {
        if (lag < 1 || static_cast<std::size_t>(lag) >= bl)
          throw std::invalid_argument("lag out of range for the block length");
        double s = 0;
        std::size_t c = 0;
        for (std::size_t i = lo; i + lag < hi; ++i, ++c) s += (traj[i + lag] - traj[i]).squaredNorm();
        m.push_back(s / static_cast<double>(c));
      }
      blocks.push_back(std::move(m));
    }
  }
  MsdCurve out;
  std::vector<double> t;
  for (int lag : lags) t.push_back(lag * sample_dt);
  out.lag = t;
  for (std::size_t l = 0; l < lags.size(); ++l) {
    std::vector<double> v;
    for (const auto& b : blocks) v.push_back(b[l]);
    const Estimate e = mean_se(v);
    out.msd.push_back(e.value);
    out.se.push_back(e.se);
  }
  std::vector<double> s1, a2, c2;
  for (const auto& b : blocks) {
    s1.push_back(lsq(t, b, 1)[0]);
    if (lags.size() >= 2) {
      const Eigen::VectorXd q = lsq(t, b, 2);
      a2.push_back(q[0]);
      c2.push_back(q[1]);
    }
  }
  out.slope = mean_se(s1);
  if (!c2.empty()) {
    out.quad_linear = mean_se(a2);
    out.quad_curvature = mean_se(c2);
    const Estimate& c = out.quad_curvature;
    const double scale = std::abs(out.slope.value) / t.back();
    out.diffusive = std::abs(c.value) <= 3 * c.se + 1e-12 * scale;
  }
  return out;
}

std::vector<long> histogram(const std::vector<double>& values, int nbins, double lo, double hi) {
  if (nbins < 1 || !(hi > lo)) throw std::invalid_argument("bad histogram range");
  std::vector<long> c(static_cast<std::size_t>(nbins), 0);
  for (double v : values) {
    if (v < lo || v >= hi) continue;
    const int i = std::min(nbins - 1, static_cast<int>((v - lo) / (hi - lo) * nbins));
    ++c[static_cast<std::size_t>(i)];
  }
  return c;
}

std::vector<long> periodic_histogram(const std::vector<double>& values, int nbins, double period) {
  std::vector<double> folded;
  folded.reserve(values.size());
  for (double v : values) {
    double f = std::fmod(v, period);
    if (f < 0) f += period;
    if (f >= period) f = 0;
    folded.push_back(f);
  }
  return histogram(folded, nbins, 0.0, period);
}

ChiSquare chi_square_fit(const std::vector<long>& counts, const std::vector<double>& probs) {
  if (counts.size() != probs.size() || counts.size() < 2)
    throw std::invalid_argument("chi-square needs matching bins");
  const double n = static_cast<double>(std::accumulate(counts.begin(), counts.end(), 0L));
  const double ptot = std::accumulate(probs.begin(), probs.end(), 0.0);
  ChiSquare r;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double e = n * probs[i] / ptot;
    if (e <= 0) throw std::invalid_argument("expected count must be positive");
    r.statistic += (static_cast<double>(counts[i]) - e) * (static_cast<double>(counts[i]) - e) / e;
  }
  r.dof = static_cast<int>(counts.size()) - 1;
  r.p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared(r.dof), r.statistic));
  return r;
}

ChiSquare chi_square_homogeneity(const std::vector<long>& a, const std::vector<long>& b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("bins differ");
  const double na = static_cast<double>(std::accumulate(a.begin(), a.end(), 0L));
  const double nb = static_cast<double>(std::accumulate(b.begin(), b.end(), 0L));
  ChiSquare r;
  int used = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double col = static_cast<double>(a[i] + b[i]);
    if (col == 0) continue;
    ++used;
    const double ea = col * na / (na + nb), eb = col * nb / (na + nb);
    r.statistic += (a[i] - ea) * (a[i] - ea) / ea + (b[i] - eb) * (b[i] - eb) / eb;
  }
  r.dof = used - 1;
  if (r.dof < 1) throw std::invalid_argument("homogeneity test needs two occupied bins");
  r.p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared(r.dof), r.statistic));
  return r;
}

}  // namespace fbim
