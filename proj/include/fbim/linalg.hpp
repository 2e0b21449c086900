#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fbim {

// y = A x. y is sized by the caller.
using LinearOperator = std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& y)>;

// Iterative method that failed to converge; carries the residual history.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, std::vector<double> history)
      : std::runtime_error(what), history_(std::move(history)) {}
  const std::vector<double>& history() const { return history_; }

 private:
  std::vector<double> history_;
};

struct GmresResult {
  Eigen::VectorXd x;
  int iterations = 0;
  std::vector<double> residuals;  // relative, unpreconditioned, one per iteration
};

// Full-basis GMRES with right preconditioning. Stops when
// |b - A x| <= tol |b|. precond may be empty. Throws SolverError.
GmresResult gmres(const LinearOperator& A, const Eigen::VectorXd& b, const LinearOperator& precond,
                  double tol, int max_iter = 500);

struct LanczosResult {
  Eigen::VectorXd y;
  int iterations = 0;
  std::vector<double> changes;  // relative change between successive iterates
  bool breakdown = false;
};

// y ~ A^{1/2} w by the Lanczos process with full reorthogonalization.
// Converged when the relative change between successive iterates is <= tol.
// Negative Ritz values are clamped to zero. Throws SolverError past max_iter.
LanczosResult lanczos_sqrt(const LinearOperator& A, const Eigen::VectorXd& w, double tol,
                           int max_iter = 200);

// Symmetric eigendecomposition of (A + A^T)/2.
struct SymmetricEigen {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // columns
};
SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& A);

// Pseudo-inverse and square root from an eigendecomposition, keeping the
// eigenvalues with lambda > floor.
Eigen::MatrixXd eigen_pinv(const SymmetricEigen& e, double floor);
Eigen::MatrixXd eigen_sqrt(const SymmetricEigen& e, double floor);

}  // namespace fbim
