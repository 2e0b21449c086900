#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "fbim/bench.hpp"
#include "fbim/rng.hpp"

using namespace fbim;
using std::numbers::pi;

TEST(LatticeFormulas, QuotedValues) {
  EXPECT_NEAR(dilute_drag(pi / 16), 49.56, 0.01);
  EXPECT_NEAR(lubrication_drag(0.1), 9 * pi / (2 * std::sqrt(2.0)) * std::pow(10.0, 2.5), 1e-9);
  EXPECT_NEAR(lubrication_drag(0.1), 3161.17, 0.01);
  EXPECT_NEAR(phi_for_gap(0.1), pi * 0.81 / 4, 1e-15);
  EXPECT_THROW(phi_for_gap(0.0), std::invalid_argument);
}

TEST(LatticeFormulas, ConfigAndNodeRule) {
  const Configuration c = lattice_config(pi / 16, 1.0);
  EXPECT_NEAR(c.domain.L, 4.0, 1e-14);
  EXPECT_EQ(c.bodies[0].q, Vec2(2.0, 2.0));
  EXPECT_THROW(lattice_config(0.8), std::invalid_argument);

  // l = sqrt(pi / 0.76), gap l - 2 = 0.0331, 2 pi / gap = 189.8.
  EXPECT_EQ(np_for_gap(0.76), 190);
  for (double phi : {0.3, 0.5, 0.7}) {
    const int n = np_for_gap(phi);
    const double gap = std::sqrt(pi / phi) - 2;
    EXPECT_EQ(n % 2, 0);
    EXPECT_LE(2 * pi / n, gap);
    EXPECT_GT(2 * pi / (n - 2), gap);
  }
}

TEST(Helpers, SlopeAndNorms) {
  EXPECT_NEAR(loglog_slope({1, 2, 4, 8}, {3, 24, 192, 1536}), 3.0, 1e-12);
  EXPECT_THROW(loglog_slope({1}, {1}), std::invalid_argument);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(3, 3);
  EXPECT_NEAR(relative_2norm_error(2 * I, I), 1.0, 1e-14);
  Eigen::MatrixXd D = I;
  D(2, 2) = 1.5;
  EXPECT_NEAR(relative_2norm_error(D, I), 0.5, 1e-14);
}

TEST(Helpers, CovarianceZscores) {
  GaussianStream g(3, 0, 0, Purpose::Test);
  Eigen::Matrix2d C;
  C << 2.0, 0.6, 0.6, 1.0;
  const Eigen::Matrix2d Lc = C.llt().matrixL();
  const int n = 20000;
  Eigen::MatrixXd X(n, 2);
  for (int i = 0; i < n; ++i) X.row(i) = (Lc * Eigen::Vector2d(g.normal(), g.normal())).transpose();
  EXPECT_LT(covariance_zscores(X, C).cwiseAbs().maxCoeff(), 4.0);
  EXPECT_LT((sample_covariance(X) - C).norm(), 0.1);
  EXPECT_GT(covariance_zscores(X, 1.1 * C).cwiseAbs().maxCoeff(), 5.0);
  EXPECT_THROW(covariance_zscores(X, Eigen::MatrixXd::Identity(3, 3)), std::invalid_argument);
}

TEST(Helpers, SpringMomentsMatchCartesianQuadrature) {
  // Weight exp(-k (r - l)^2 / 2 kBT) over the min-image square, by nested
  // Gauss-Kronrod in x and y.
  const double k = 81.0, l = 5.0 / 6.0, kT = 1.0, L = 2.0;
  const auto moment = [&](int p) {
    const auto inner = [&](double y) {
      return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
          [&](double x) {
            const double r = std::hypot(x, y);
            return std::pow(r, p) * std::exp(-0.5 * k * (r - l) * (r - l) / kT);
          },
          -L / 2, L / 2, 10, 1e-13);
    };
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(inner, -L / 2, L / 2, 10,
                                                                         1e-13);
  };
  const double z = moment(0), m1 = moment(1) / z, m2 = moment(2) / z;
  const auto [mean, var] = spring_distance_moments(k, l, kT, L);
  EXPECT_NEAR(mean, m1, 1e-6 * m1);
  EXPECT_NEAR(var, m2 - m1 * m1, 1e-4 * (m2 - m1 * m1));
}

TEST(ExperimentSpec, JsonRoundTripAndValidation) {
  ExperimentSpec s;
  s.suite = "dfdb";
  s.tol = 1e-7;
  s.order = 8;
  s.seed = 42;
  s.params["samples"] = 100;
  const ExperimentSpec t = spec_from_json(s.to_json());
  EXPECT_EQ(t.suite, "dfdb");
  EXPECT_EQ(t.tol, 1e-7);
  EXPECT_EQ(t.order, 8);
  EXPECT_EQ(t.seed, 42u);
  EXPECT_EQ(t.get("samples", 0), 100);
  EXPECT_EQ(t.get("missing", 7), 7);

  EXPECT_THROW(spec_from_json({{"order", 6}}), std::invalid_argument);
  EXPECT_THROW(spec_from_json({{"tol", 0.0}}), std::invalid_argument);
  EXPECT_THROW(load_spec("/nonexistent/spec.json"), std::runtime_error);
}

TEST(ResultTable, RowsAndOutput) {
  ResultTable t("drag", {"phi", "Np", "method"});
  t.add_row({0.05, 64LL, std::string("first_kind")});
  EXPECT_THROW(t.add_row({1.0}), std::invalid_argument);
  EXPECT_EQ(t.rows(), 1u);
  EXPECT_EQ(t.number(0, "Np"), 64.0);
  EXPECT_THROW(t.at(0, "missing"), std::out_of_range);
  EXPECT_THROW(t.number(0, "method"), std::invalid_argument);

  t.add_header("plan eps=1e-9");
  const auto path = std::filesystem::temp_directory_path() / "fbim_table.csv";
  t.write(path.string());
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str().substr(0, 16), "# plan eps=1e-9\n");
  EXPECT_NE(ss.str().find("phi,Np,method\n0.05,64,first_kind\n"), std::string::npos);
  std::filesystem::remove(path);
}

TEST(SuiteResult, ChecksAndOutputs) {
  SuiteResult r;
  r.suite = "demo";
  r.check("a", true, "fine");
  EXPECT_TRUE(r.passed());
  r.check("b", false, "broken");
  EXPECT_FALSE(r.passed());
  EXPECT_EQ(r.assertion("b").detail, "broken");
  EXPECT_THROW(r.assertion("c"), std::out_of_range);
  EXPECT_THROW(r.table("none"), std::out_of_range);

  r.tables.emplace_back("t", std::vector<std::string>{"x"});
  r.tables.back().add_row({1.0});
  const auto dir = std::filesystem::temp_directory_path() / "fbim_suite_out";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  write_outputs(r, dir.string());
  EXPECT_TRUE(std::filesystem::exists(dir / "demo_t.csv"));
  std::ifstream in(dir / "demo_summary.json");
  const nlohmann::json j = nlohmann::json::parse(in);
  EXPECT_EQ(j.at("passed"), false);
  std::filesystem::remove_all(dir);
}

TEST(Suites, NamesAndDispatch) {
  const auto& names = suite_names();
  EXPECT_EQ(names.size(), 7u);
  ExperimentSpec s;
  s.suite = "no-such-suite";
  EXPECT_THROW(run_suite(s), std::invalid_argument);
}

TEST(Suites, SmallLatticeDragRun) {
  ExperimentSpec s;
  s.suite = "lattice-drag";
  s.params = {{"phis", {0.05}}, {"gaps", std::vector<double>{}}, {"np", 32}, {"ref_np", 64}};
  const SuiteResult r = run_suite(s);
  const ResultTable& t = r.table("dilute");
  ASSERT_EQ(t.rows(), 1u);
  EXPECT_EQ(r.table("dense").rows(), 0u);
  EXPECT_NEAR(t.number(0, "drag_first_kind"), dilute_drag(0.05), 0.01 * dilute_drag(0.05));
  EXPECT_LT(t.number(0, "rel_vs_ref"), 1e-5);
  EXPECT_TRUE(r.assertion("node_rule_phi_0.76").passed);
}
