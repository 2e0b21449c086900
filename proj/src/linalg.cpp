#include "fbim/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fbim {

namespace {

// One Arnoldi cycle on A P^-1 starting from r0. Writes the correction to x
// into dx and returns the number of iterations taken.
int gmres_cycle(const LinearOperator& A, const Eigen::VectorXd& r0, const LinearOperator& precond,
                double target, int max_iter, double bnorm, Eigen::VectorXd& dx,
                std::vector<double>& history) {
  const Eigen::Index n = r0.size();
  const double rnorm = r0.norm();
  const int m = static_cast<int>(std::min<Eigen::Index>(max_iter, n));
  Eigen::MatrixXd V(n, m + 1);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
  Eigen::VectorXd cs(m), sn(m), g = Eigen::VectorXd::Zero(m + 1);
  V.col(0) = r0 / rnorm;
  g[0] = rnorm;

  Eigen::VectorXd z(n), w(n);
  int k = 0;
  while (k < m) {
    if (precond) {
      precond(V.col(k), z);
      A(z, w);
    } else {
      A(V.col(k), w);
    }
    // Modified Gram-Schmidt, done twice.
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i <= k; ++i) {
        const double h = V.col(i).dot(w);
        H(i, k) += h;
        w -= h * V.col(i);
      }
    H(k + 1, k) = w.norm();
    const bool lucky = H(k + 1, k) <= 1e-15 * bnorm;
    if (!lucky) V.col(k + 1) = w / H(k + 1, k);

    for (int i = 0; i < k; ++i) {
      const double t = cs[i] * H(i, k) + sn[i] * H(i + 1, k);
      H(i + 1, k) = -sn[i] * H(i, k) + cs[i] * H(i + 1, k);
      H(i, k) = t;
    }
    const double r = std::hypot(H(k, k), H(k + 1, k));
    cs[k] = H(k, k) / r;
    sn[k] = H(k + 1, k) / r;
    H(k, k) = r;
    H(k + 1, k) = 0;
    g[k + 1] = -sn[k] * g[k];
    g[k] = cs[k] * g[k];
    ++k;
    const double rel = std::abs(g[k]) / bnorm;
    history.push_back(rel);
    if (rel <= target || lucky) break;
  }
  const Eigen::VectorXd y = H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
  const Eigen::VectorXd u = V.leftCols(k) * y;
  if (precond) {
    dx.resize(n);
    precond(u, dx);
  } else {
    dx = u;
  }
  return k;
}

}  // namespace

GmresResult gmres(const LinearOperator& A, const Eigen::VectorXd& b, const LinearOperator& precond,
                  double tol, int max_iter) {
  const Eigen::Index n = b.size();
  GmresResult res;
  res.x = Eigen::VectorXd::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0) return res;

  Eigen::VectorXd r = b, Ax(n), dx;
  double rel = 1.0;
  // The Arnoldi estimate can drift from the true residual, so each cycle aims
  // at tol/2 and a new cycle restarts from the true residual if needed.
  while (res.iterations < max_iter) {
    res.iterations += gmres_cycle(A, r, precond, 0.5 * tol, max_iter - res.iterations, bnorm, dx,
                                  res.residuals);
    res.x += dx;
    A(res.x, Ax);
    r = b - Ax;
    rel = r.norm() / bnorm;
    res.residuals.back() = rel;
    if (rel <= tol) return res;
  }
  std::ostringstream os;
  os << "GMRES did not converge: relative residual " << rel << " after " << res.iterations
     << " iterations (tol " << tol << ")";
  throw SolverError(os.str(), res.residuals);
}

LanczosResult lanczos_sqrt(const LinearOperator& A, const Eigen::VectorXd& w, double tol,
                           int max_iter) {
  const Eigen::Index n = w.size();
  LanczosResult res;
  res.y = Eigen::VectorXd::Zero(n);
  const double wnorm = w.norm();
  if (wnorm == 0) return res;

  const int m = static_cast<int>(std::min<Eigen::Index>(max_iter, n));
  Eigen::MatrixXd V(n, m + 1);
  std::vector<double> alpha, beta;
  V.col(0) = w / wnorm;
  Eigen::VectorXd u(n), prev = Eigen::VectorXd::Zero(n);

  for (int k = 0; k < m; ++k) {
    A(V.col(k), u);
    const double a = V.col(k).dot(u);
    alpha.push_back(a);
    u -= a * V.col(k);
    if (k > 0) u -= beta.back() * V.col(k - 1);
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i <= k; ++i) u -= V.col(i).dot(u) * V.col(i);
    const double bk = u.norm();

    const int dim = k + 1;
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) {
      T(i, i) = alpha[i];
      if (i + 1 < dim) T(i, i + 1) = T(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    const Eigen::VectorXd s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const Eigen::VectorXd e1 = es.eigenvectors().row(0).transpose();
    const Eigen::VectorXd coef = es.eigenvectors() * s.cwiseProduct(e1) * wnorm;
    res.y = V.leftCols(dim) * coef;
    res.iterations = dim;

    const double ynorm = res.y.norm();
    const double change = ynorm > 0 ? (res.y - prev).norm() / ynorm : 0.0;
    res.changes.push_back(change);
    if (k > 0 && change <= tol) return res;
    // A relative floor on beta catches invariant subspaces.
    double scale = 0;
    for (double x : alpha) scale = std::max(scale, std::abs(x));
    if (bk <= 1e-13 * std::max(scale, 1e-300)) {
      res.breakdown = true;
      return res;
    }
    beta.push_back(bk);
    V.col(k + 1) = u / bk;
    prev = res.y;
  }
  if (res.iterations == n) return res;  // full space: exact
  std::ostringstream os;
  os << "Lanczos square root did not converge in " << max_iter << " iterations";
  throw SolverError(os.str(), res.changes);
}

SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& A) {
  const Eigen::MatrixXd S = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  return {es.eigenvalues(), es.eigenvectors()};
}

Eigen::MatrixXd eigen_pinv(const SymmetricEigen& e, double floor) {
  Eigen::VectorXd d = e.values;
  for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = d[i] > floor ? 1 / d[i] : 0.0;
  return e.vectors * d.asDiagonal() * e.vectors.transpose();
}

Eigen::MatrixXd eigen_sqrt(const SymmetricEigen& e, double floor) {
  Eigen::VectorXd d = e.values;
  for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = d[i] > floor ? std::sqrt(d[i]) : 0.0;
  return e.vectors * d.asDiagonal() * e.vectors.transpose();
}

}  // namespace fbim
