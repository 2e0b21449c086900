#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "fbim/geometry.hpp"
#include "fbim/mobility.hpp"
#include "fbim/refsolver.hpp"

namespace fbim {

// Everything that determines a suite run. Suite-specific settings live in
// params and fall back to the defaults documented per suite.
struct ExperimentSpec {
  std::string suite;
  double eta = 1.0;
  double kBT = 1.0;
  double tol = 1e-9;  // Ewald tolerance and GMRES tolerance
  int order = 4;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  nlohmann::json params = nlohmann::json::object();

  template <class T>
  T get(const std::string& key, T fallback) const {
    return params.contains(key) ? params.at(key).get<T>() : fallback;
  }
  nlohmann::json to_json() const;
};

// Reads a JSON object with optional keys suite, eta, kBT, tol, order, seed,
// out and params.
ExperimentSpec load_spec(const std::string& path);
ExperimentSpec spec_from_json(const nlohmann::json& j);

using Cell = std::variant<double, long long, std::string>;

class ResultTable {
 public:
  ResultTable(std::string name, std::vector<std::string> columns);

  const std::string& name() const { return name_; }
  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t rows() const { return rows_.size(); }
  const Cell& at(std::size_t row, const std::string& column) const;
  double number(std::size_t row, const std::string& column) const;

  void add_row(std::vector<Cell> row);
  void add_header(const std::string& line) { header_.push_back(line); }
  // Commented header lines, then a CSV header and the rows.
  void write(const std::string& path) const;

 private:
  std::string name_;
  std::vector<std::string> columns_;
  std::vector<std::string> header_;
  std::vector<std::vector<Cell>> rows_;
};

struct Assertion {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SuiteResult {
  std::string suite;
  ExperimentSpec spec;
  std::vector<ResultTable> tables;
  std::vector<Assertion> assertions;
  nlohmann::json summary = nlohmann::json::object();

  bool passed() const;
  const ResultTable& table(const std::string& name) const;
  const Assertion& assertion(const std::string& name) const;
  void check(const std::string& name, bool ok, const std::string& detail);
};

// Writes <dir>/<suite>_<table>.csv per table and <dir>/<suite>_summary.json.
void write_outputs(const SuiteResult& r, const std::string& dir);

// ---- shared helpers ----

// One disk of radius a centred in a square cell with packing fraction phi.
Configuration lattice_config(double phi, double a = 1.0);
// pi a^2 / l^2 for the relative gap eps = 1 - 2a/l.
double phi_for_gap(double gap);
// 4 pi / (-ln sqrt(phi) - 0.738 + phi - 0.887 phi^2 + 2.039 phi^3).
double dilute_drag(double phi);
// 9 pi / (2 sqrt 2) eps^{-5/2}.
double lubrication_drag(double gap);
// Smallest even Np with node spacing 2 pi a / Np no larger than the gap l - 2a.
int np_for_gap(double phi, double a = 1.0);

FbimParams make_params(int Np, int order, double eps, double L, int nbox, double eta = 1.0);
// ||A - B||_2 / ||B||_2.
double relative_2norm_error(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);
// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Entrywise z-scores of the sample covariance of rows of X (samples x dim)
// against C, using the per-entry sample variance of the centred products.
Eigen::MatrixXd covariance_zscores(const Eigen::MatrixXd& X, const Eigen::MatrixXd& C);
Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& X);

// Equilibrium moments of d = |min-image(q1 - q2)| for a Hookean spring in a
// periodic square cell: returns (mean, variance).
std::pair<double, double> spring_distance_moments(double k_spring, double rest, double kBT, double L);

// ---- suites ----

SuiteResult run_lattice_drag(const ExperimentSpec& spec);
SuiteResult run_xi_accuracy(const ExperimentSpec& spec);
SuiteResult run_dfdb(const ExperimentSpec& spec);
SuiteResult run_convergence(const ExperimentSpec& spec);
SuiteResult run_bd_starfish(const ExperimentSpec& spec);
SuiteResult run_bd_pair(const ExperimentSpec& spec);
SuiteResult run_scaling(const ExperimentSpec& spec);

const std::vector<std::string>& suite_names();
// Dispatches on spec.suite; throws std::invalid_argument for unknown names.
SuiteResult run_suite(const ExperimentSpec& spec);

}  // namespace fbim
