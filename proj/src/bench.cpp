#include "fbim/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "fbim/dynamics.hpp"
#include "fbim/fluctuations.hpp"
#include "fbim/rng.hpp"

namespace fbim {

using std::numbers::pi;
using nlohmann::json;

// ---- spec and tables ----

json ExperimentSpec::to_json() const {
  return json{{"suite", suite}, {"eta", eta},   {"kBT", kBT},        {"tol", tol},
              {"order", order}, {"seed", seed}, {"out", out_dir},    {"params", params}};
}

ExperimentSpec spec_from_json(const json& j) {
  ExperimentSpec s;
  if (!j.is_object()) throw std::invalid_argument("experiment config must be a JSON object");
  s.suite = j.value("suite", s.suite);
  s.eta = j.value("eta", s.eta);
  s.kBT = j.value("kBT", s.kBT);
  s.tol = j.value("tol", s.tol);
  s.order = j.value("order", s.order);
  s.seed = j.value("seed", s.seed);
  s.out_dir = j.value("out", s.out_dir);
  if (j.contains("params")) s.params = j.at("params");
  if (s.order != 4 && s.order != 8) throw std::invalid_argument("order must be 4 or 8");
  if (!(s.tol > 0)) throw std::invalid_argument("tol must be positive");
  return s;
}

ExperimentSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  return spec_from_json(json::parse(in));
}

ResultTable::ResultTable(std::string name, std::vector<std::string> columns)
    : name_(std::move(name)), columns_(std::move(columns)) {}

void ResultTable::add_row(std::vector<Cell> row) {
  if (row.size() != columns_.size()) throw std::invalid_argument("row width mismatch in " + name_);
  rows_.push_back(std::move(row));
}

const Cell& ResultTable::at(std::size_t row, const std::string& column) const {
  const auto it = std::find(columns_.begin(), columns_.end(), column);
  if (it == columns_.end()) throw std::out_of_range("no column " + column + " in " + name_);
  return rows_.at(row).at(static_cast<std::size_t>(it - columns_.begin()));
}

double ResultTable::number(std::size_t row, const std::string& column) const {
  const Cell& c = at(row, column);
  if (const auto* d = std::get_if<double>(&c)) return *d;
  if (const auto* i = std::get_if<long long>(&c)) return static_cast<double>(*i);
  throw std::invalid_argument("column " + column + " is not numeric");
}

void ResultTable::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& h : header_) out << "# " << h << '\n';
  for (std::size_t i = 0; i < columns_.size(); ++i) out << (i ? "," : "") << columns_[i];
  out << '\n' << std::setprecision(12);
  for (const auto& r : rows_) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out << ',';
      std::visit([&out](const auto& v) { out << v; }, r[i]);
    }
    out << '\n';
  }
}

bool SuiteResult::passed() const {
  return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.passed; });
}

const ResultTable& SuiteResult::table(const std::string& name) const {
  for (const auto& t : tables)
    if (t.name() == name) return t;
  throw std::out_of_range("no table " + name);
}

const Assertion& SuiteResult::assertion(const std::string& name) const {
  for (const auto& a : assertions)
    if (a.name == name) return a;
  throw std::out_of_range("no assertion " + name);
}

void SuiteResult::check(const std::string& name, bool ok, const std::string& detail) {
  assertions.push_back(Assertion{name, ok, detail});
}

void write_outputs(const SuiteResult& r, const std::string& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& t : r.tables) t.write(dir + "/" + r.suite + "_" + t.name() + ".csv");
  json s = r.summary;
  s["suite"] = r.suite;
  s["spec"] = r.spec.to_json();
  s["passed"] = r.passed();
  s["assertions"] = json::array();
  for (const auto& a : r.assertions)
    s["assertions"].push_back({{"name", a.name}, {"passed", a.passed}, {"detail", a.detail}});
  std::ofstream out(dir + "/" + r.suite + "_summary.json");
  if (!out) throw std::runtime_error("cannot write summary in " + dir);
  out << s.dump(2) << '\n';
}

// ---- helpers ----

namespace {

std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

SuiteResult start(const ExperimentSpec& spec, const std::string& name) {
  SuiteResult r;
  r.suite = name;
  r.spec = spec;
  r.spec.suite = name;
  return r;
}

void stamp(ResultTable& t, const ExperimentSpec& spec) {
  t.add_header("spec " + spec.to_json().dump());
}

void stamp_plan(ResultTable& t, const std::string& label, const EwaldPlan& plan) {
  t.add_header("plan " + label + " " + plan.describe());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

ForceTorque random_forces(int nbodies, std::uint64_t seed) {
  GaussianStream g(seed, 0, 0, Purpose::Test);
  return ForceTorque(g.normal_vector(3 * nbodies));
}

double first_kind_drag(const Configuration& cfg, int Np, int order, double eps, int nbox,
                       double eta, int* iterations = nullptr) {
  const FbimContext ctx(cfg, make_params(Np, order, eps, cfg.domain.L, nbox, eta));
  const SaddleSystem sys(ctx, cfg);
  SolveOptions opt;
  opt.tol = eps;
  ForceTorque F = ForceTorque::zero(1);
  F.values[0] = 1;
  const SaddleSolution s = sys.solve(F, nullptr, opt);
  if (iterations) *iterations = s.iterations;
  return 1 / (eta * s.U.values[0]);
}

double second_kind_drag(const Configuration& cfg, int Np, double eta) {
  RefOptions opt;
  opt.eta = eta;
  ForceTorque F = ForceTorque::zero(1);
  F.values[0] = 1;
  return 1 / (eta * solve_mobility_ref(cfg, F, Np, opt).U.values[0]);
}

constexpr double kMaxAlpertRatio = 0.6;
constexpr double kGciSafety = 1.25;

double ratio_for(const FbimParams& p, const BodyShape& shape) {
  const SurfaceMesh mesh = discretize(shape, p.Np);
  return alpert_ratio(p.plan, correction_radius(AlpertRule::get(p.order), mesh));
}

}  // namespace

Configuration lattice_config(double phi, double a) {
  if (!(phi > 0 && phi < pi / 4)) throw std::invalid_argument("lattice packing must be in (0, pi/4)");
  Configuration c;
  c.domain.L = a * std::sqrt(pi / phi);
  c.shapes.push_back(BodyShape::disk(a));
  c.bodies.push_back(Body{Vec2(c.domain.L / 2, c.domain.L / 2), 0.0, 0});
  return c;
}

double phi_for_gap(double gap) {
  if (!(gap > 0 && gap < 1)) throw std::invalid_argument("relative gap must be in (0, 1)");
  const double r = 1 - gap;  // 2a / l
  return pi * r * r / 4;
}

double dilute_drag(double phi) {
  return 4 * pi / (-std::log(std::sqrt(phi)) - 0.738 + phi - 0.887 * phi * phi + 2.039 * phi * phi * phi);
}

double lubrication_drag(double gap) { return 9 * pi / (2 * std::sqrt(2.0)) * std::pow(gap, -2.5); }

int np_for_gap(double phi, double a) {
  const double L = a * std::sqrt(pi / phi);
  const double gap = L - 2 * a;
  if (!(gap > 0)) throw std::invalid_argument("disks touch at this packing fraction");
  int n = static_cast<int>(std::ceil(2 * pi * a / gap - 1e-12));
  return n + (n % 2);
}

FbimParams make_params(int Np, int order, double eps, double L, int nbox, double eta) {
  FbimParams p;
  p.Np = Np;
  p.order = order;
  p.eta = eta;
  p.plan = select_params(eps, L, nbox);
  return p;
}

double relative_2norm_error(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> d(A - B), b(B);
  return d.singularValues()[0] / b.singularValues()[0];
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("slope needs two points");
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& X) {
  const Eigen::RowVectorXd m = X.colwise().mean();
  const Eigen::MatrixXd Y = X.rowwise() - m;
  return Y.transpose() * Y / static_cast<double>(X.rows() - 1);
}

Eigen::MatrixXd covariance_zscores(const Eigen::MatrixXd& X, const Eigen::MatrixXd& C) {
  const Eigen::Index n = X.rows(), d = X.cols();
  if (C.rows() != d || C.cols() != d) throw std::invalid_argument("covariance size mismatch");
  const Eigen::RowVectorXd m = X.colwise().mean();
  const Eigen::MatrixXd Y = X.rowwise() - m;
  Eigen::MatrixXd z(d, d);
  const double nn = static_cast<double>(n);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i; j < d; ++j) {
      const Eigen::VectorXd p = Y.col(i).cwiseProduct(Y.col(j));
      const double mean = p.sum() / nn;
      const double var = (p.array() - mean).square().sum() / (nn - 1);
      const double se = std::sqrt(var / nn);
      z(i, j) = z(j, i) = se > 0 ? (mean * nn / (nn - 1) - C(i, j)) / se : 0.0;
    }
  return z;
}

std::pair<double, double> spring_distance_moments(double k_spring, double rest, double kBT, double L) {
  // The minimum-image separation is uniform on [-L/2, L/2]^2 before weighting.
  // Polar quadrature over one eighth of the square, r in [0, (L/2)/cos(t)].
  const int nt = 400, nr = 4000;
  double z = 0, m1 = 0, m2 = 0;
  const double h = L / 2;
  for (int i = 0; i < nt; ++i) {
    const double t = (i + 0.5) * (pi / 4) / nt;
    const double rmax = h / std::cos(t);
    const double dr = rmax / nr;
    for (int j = 0; j < nr; ++j) {
      const double r = (j + 0.5) * dr;
      const double w = r * std::exp(-0.5 * k_spring * (r - rest) * (r - rest) / kBT) * dr;
      z += w;
      m1 += w * r;
      m2 += w * r * r;
    }
  }
  const double mean = m1 / z;
  return {mean, m2 / z - mean * mean};
}

// ---- lattice-drag ----

SuiteResult run_lattice_drag(const ExperimentSpec& spec) {
  SuiteResult r = start(spec, "lattice-drag");
  const auto phis = spec.get<std::vector<double>>("phis", {0.05, 0.10, pi / 16});
  const auto gaps = spec.get<std::vector<double>>("gaps", {0.10, 0.05});
  const int np_dilute = spec.get("np", 64);
  const int np_min_dense = spec.get("np_min_dense", 64);
  const int nbox = spec.get("nbox", 4);
  const int nbox_dense = spec.get("nbox_dense", 3);
  const int ref_np = spec.get("ref_np", 128);
  const int ref_np_dense = spec.get("ref_np_dense", 256);
  const double dilute_tol = spec.get("dilute_rel_tol", 0.01);
  const double ref_tol = spec.get("ref_rel_tol", 1e-5);
  const double dense_tol = spec.get("dense_rel_tol", 0.10);

  ResultTable dil("dilute", {"phi", "L", "Np", "order", "ratio", "iterations", "drag_first_kind",
                             "drag_second_kind", "drag_dilute_formula", "rel_vs_formula", "rel_vs_ref"});
  stamp(dil, spec);
  for (double phi : phis) {
    const Configuration cfg = lattice_config(phi);
    const FbimParams p = make_params(np_dilute, spec.order, spec.tol, cfg.domain.L, nbox, spec.eta);
    int its = 0;
    const double fk = first_kind_drag(cfg, np_dilute, spec.order, spec.tol, nbox, spec.eta, &its);
    const double sk = second_kind_drag(cfg, ref_np, spec.eta);
    const double th = dilute_drag(phi);
    const double e_th = std::abs(fk - th) / th, e_ref = std::abs(fk - sk) / sk;
    dil.add_row({phi, cfg.domain.L, static_cast<long long>(np_dilute),
                 static_cast<long long>(spec.order), ratio_for(p, cfg.shapes[0]),
                 static_cast<long long>(its), fk, sk, th, e_th, e_ref});
    r.check("dilute_formula_phi_" + fmt(phi, 4), e_th <= dilute_tol,
            "first-kind " + fmt(fk, 10) + " vs formula " + fmt(th, 10) + ", rel " + fmt(e_th, 3));
    r.check("dilute_reference_phi_" + fmt(phi, 4), e_ref <= ref_tol,
            "first-kind " + fmt(fk, 10) + " vs second-kind " + fmt(sk, 12) + ", rel " + fmt(e_ref, 3));
    if (phi == phis.front()) stamp_plan(dil, "phi=" + fmt(phi), p.plan);
  }

  ResultTable den("dense", {"gap", "phi", "L", "Np", "Np_rule", "ratio", "drag_first_kind",
                            "drag_first_kind_2Np", "drag_second_kind", "drag_lubrication",
                            "rel_vs_lubrication", "err_vs_ref", "alpert_error_estimate"});
  stamp(den, spec);
  const int p_order = spec.order;
  for (double gap : gaps) {
    const double phi = phi_for_gap(gap);
    const Configuration cfg = lattice_config(phi);
    const int rule = np_for_gap(phi);
    // Refine until the correction stencil sits inside the real-space cutoff.
    int Np = std::max(np_min_dense, rule);
    while (ratio_for(make_params(Np, spec.order, spec.tol, cfg.domain.L, nbox_dense, spec.eta),
                     cfg.shapes[0]) > kMaxAlpertRatio)
      Np *= 2;
    const FbimParams p = make_params(Np, spec.order, spec.tol, cfg.domain.L, nbox_dense, spec.eta);
    const double fk = first_kind_drag(cfg, Np, spec.order, spec.tol, nbox_dense, spec.eta);
    const double fk2 = first_kind_drag(cfg, 2 * Np, spec.order, spec.tol, nbox_dense, spec.eta);
    const double sk = second_kind_drag(cfg, ref_np_dense, spec.eta);
    const double lub = lubrication_drag(gap);
    const double e_lub = std::abs(fk - lub) / lub;
    const double err = std::abs(fk - sk);
    // Richardson estimate of the coarse-level error at the rule's order, with
    // the usual grid-convergence safety factor.
    const double est = kGciSafety * std::abs(fk - fk2) / (1 - std::pow(2.0, -p_order));
    den.add_row({gap, phi, cfg.domain.L, static_cast<long long>(Np), static_cast<long long>(rule),
                 ratio_for(p, cfg.shapes[0]), fk, fk2, sk, lub, e_lub, err, est});
    r.check("dense_lubrication_gap_" + fmt(gap, 3), e_lub <= dense_tol,
            "first-kind " + fmt(fk, 10) + " vs lubrication " + fmt(lub, 10) + ", rel " + fmt(e_lub, 3));
    r.check("dense_reference_gap_" + fmt(gap, 3), err <= est,
            "|first-kind - second-kind| = " + fmt(err, 3) + " vs order-" + std::to_string(p_order) +
                " estimate " + fmt(est, 3));
    if (gap == gaps.front()) stamp_plan(den, "gap=" + fmt(gap), p.plan);
  }
  const int np76 = np_for_gap(0.76);
  r.check("node_rule_phi_0.76", np76 >= 180 && np76 <= 200,
          "Np from d_s/d_g = 1 at phi = 0.76 is " + std::to_string(np76));
  r.tables.push_back(std::move(dil));
  r.tables.push_back(std::move(den));
  return r;
}

// ---- xi-accuracy ----

SuiteResult run_xi_accuracy(const ExperimentSpec& spec) {
  SuiteResult r = start(spec, "xi-accuracy");
  const double phi = spec.get("phi", pi / 16);
  const int Np = spec.get("np", 64);
  const auto orders = spec.get<std::vector<int>>("orders", {4, 8});
  const int nbox_min = spec.get("nbox_min", 3), nbox_max = spec.get("nbox_max", 20);
  const int ref_np = spec.get("ref_np", 256), ref_np_check = spec.get("ref_np_check", 288);
  const double growth = spec.get("min_growth", 100.0);
  const Configuration cfg = lattice_config(phi);

  RefOptions ro;
  ro.eta = spec.eta;
  const Eigen::MatrixXd Nref = mobility_ref(cfg, ref_np, ro);
  const Eigen::MatrixXd Ncheck = mobility_ref(cfg, ref_np_check, ro);
  const double ref_stab = relative_2norm_error(Ncheck, Nref);
  r.check("reference_12_digits", ref_stab <= 1e-12,
          "||N(" + std::to_string(ref_np_check) + ") - N(" + std::to_string(ref_np) +
              ")|| / ||N|| = " + fmt(ref_stab, 3));

  ResultTable t("sweep", {"order", "nbox", "xi", "rc", "r_alpert", "ratio", "error"});
  stamp(t, spec);
  for (int order : orders) {
    std::vector<double> ratios, errors;
    for (int nbox = nbox_min; nbox <= nbox_max; ++nbox) {
      const FbimParams p = make_params(Np, order, spec.tol, cfg.domain.L, nbox, spec.eta);
      const FbimContext ctx(cfg, p);
      SolveOptions opt;
      opt.tol = spec.tol;
      const Eigen::MatrixXd N = SaddleSystem(ctx, cfg).body_mobility(opt);
      const double ra = correction_radius(ctx.rule(), ctx.ref_meshes()[0]);
      const double ratio = alpert_ratio(p.plan, ra);
      const double err = relative_2norm_error(N, Nref);
      t.add_row({static_cast<long long>(order), static_cast<long long>(nbox), p.plan.xi, p.plan.rc,
                 ra, ratio, err});
      ratios.push_back(ratio);
      errors.push_back(err);
    }
    const double g = errors.back() / errors.front();
    r.check("growth_order_" + std::to_string(order), g >= growth,
            "error grows from " + fmt(errors.front(), 3) + " (ratio " + fmt(ratios.front(), 3) +
                ") to " + fmt(errors.back(), 3) + " (ratio " + fmt(ratios.back(), 3) + "), factor " +
                fmt(g, 3));
    // Plateau: the point nearest ratio 0.3.
    std::size_t k = 0;
    for (std::size_t i = 1; i < ratios.size(); ++i)
      if (std::abs(ratios[i] - 0.3) < std::abs(ratios[k] - 0.3)) k = i;
    r.check("plateau_order_" + std::to_string(order), errors.front() <= 10 * errors[k],
            "smallest-ratio error " + fmt(errors.front(), 3) + " vs error " + fmt(errors[k], 3) +
                " at ratio " + fmt(ratios[k], 3));
  }
  r.summary["reference_stability"] = ref_stab;
  r.tables.push_back(std::move(t));
  return r;
}

// ---- dfdb ----

namespace {

Configuration small_disks(int n, double L, double a, std::uint64_t seed) {
  Configuration c;
  c.domain.L = L;
  c.shapes.push_back(BodyShape::disk(a));
  GaussianStream g(seed, 0, 0, Purpose::Config);
  while (static_cast<int>(c.size()) < n) {
    const Vec2 p(L * g.uniform(), L * g.uniform());
    bool ok = true;
    for (const auto& b : c.bodies)
      if (min_image(p - b.q, c.domain).norm() < 3 * a) ok = false;
    if (ok) c.bodies.push_back(Body{p, 2 * pi * g.uniform(), 0});
  }
  return c;
}

Eigen::MatrixXd dense_wave(const SingleLayer& layer) {
  const int n = layer.disc().dof();
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd e = Eigen::VectorXd::Unit(n, i);
    Eigen::VectorXd col = Eigen::VectorXd::Zero(n);
    layer.apply_wave(e.data(), col.data());
    W.col(i) = col;
  }
  return 0.5 * (W + W.transpose());
}

double median_abs(const Eigen::MatrixXd& E) {
  std::vector<double> v;
  for (Eigen::Index i = 0; i < E.rows(); ++i)
    for (Eigen::Index j = i; j < E.cols(); ++j) v.push_back(std::abs(E(i, j)));
  return median(v);
}

}  // namespace

SuiteResult run_dfdb(const ExperimentSpec& spec) {
  SuiteResult r = start(spec, "dfdb");
  const double L = spec.get("L", 1.0), a = spec.get("a", 0.15);
  const int nbox = spec.get("nbox", 3);
  const double dt = spec.get("dt", 1.0);
  const double eps = spec.get("eps", 1e-6);
  const double zmax = spec.get("z_max", 5.0);

  // Algebraic balance from dense matrices.
  ResultTable alg("algebraic", {"bodies", "Np", "defect", "dropped", "eigen_vs_lu"});
  stamp(alg, spec);
  double worst = 0;
  for (int nb : spec.get<std::vector<int>>("bodies", {1, 2, 3}))
    for (int Np : spec.get<std::vector<int>>("nps", {8, 16})) {
      const Configuration cfg = small_disks(nb, L, a, spec.seed + 17 * nb);
      const FbimContext ctx(cfg, make_params(Np, 4, spec.tol, L, nbox, spec.eta));
      const SingleLayer layer = ctx.single_layer(cfg);
      const Eigen::MatrixXd M = project_normal(layer.dense(), normal_basis(layer.disc()));
      const Eigen::MatrixXd K = dense_K(layer.disc());
      const DenseMobility dm = dense_mobility(M, K);
      const double defect =
          (dm.N_half * dm.N_half.transpose() - dm.N).norm() / dm.N.norm();
      const Eigen::MatrixXd B = normal_basis(layer.disc());
      const double scale = M.norm() / std::sqrt(static_cast<double>(M.rows()));
      const Eigen::MatrixXd Nlu = dense_saddle_mobility(M + scale * B * B.transpose(), K);
      const double lu = (Nlu - dm.N).norm() / dm.N.norm();
      alg.add_row({static_cast<long long>(nb), static_cast<long long>(Np), defect,
                   static_cast<long long>(dm.dropped), lu});
      worst = std::max(worst, defect);
    }
  r.check("algebraic_defect", worst <= 1e-10, "max ||N^1/2 N^1/2^T - N|| / ||N|| = " + fmt(worst, 3));

  // Sampler and end-to-end statistics on two disks.
  const int Np = spec.get("np", 16);
  const int samples = spec.get("samples", 10000);
  const int sampler_samples = spec.get("sampler_samples", 20000);
  const Configuration cfg = small_disks(2, L, a, spec.seed);
  const FbimContext ctx(cfg, make_params(Np, 4, eps, L, nbox, spec.eta));
  const SaddleSystem sys(ctx, cfg);
  const SingleLayer& layer = sys.single_layer();
  const SurfaceVelocitySampler sampler(ctx, spec.get("lanczos_tol", 1e-10));
  const double kBT = spec.kBT;
  const double scale2 = 2 * kBT / dt;
  const int n = layer.disc().dof();

  ResultTable st("statistics", {"quantity", "samples", "entries", "max_abs_z", "median_abs_error"});
  stamp(st, spec);
  stamp_plan(st, "two-disk", ctx.plan());

  // Wave-space sampler against dense M^(w).
  {
    const Eigen::MatrixXd Mw = dense_wave(layer);
    Eigen::MatrixXd X(sampler_samples, n);
    for (int s = 0; s < sampler_samples; ++s) {
      GaussianStream g(spec.seed, 1, static_cast<std::uint64_t>(s), Purpose::WaveNoise);
      X.row(s) = sample_wave_sqrt(layer.wave(), layer.disc().nodes, g, 1.0).v.transpose();
    }
    const double z = covariance_zscores(X, Mw).cwiseAbs().maxCoeff();
    st.add_row({std::string("wave_sampler"), static_cast<long long>(sampler_samples),
                static_cast<long long>(n * (n + 1) / 2), z, median_abs(sample_covariance(X) - Mw)});
    r.check("wave_sampler_covariance", z <= zmax, "max |z| = " + fmt(z, 3));
  }
  // Combined sampler against dense M.
  {
    const Eigen::MatrixXd M = 0.5 * (layer.dense() + layer.dense().transpose());
    Eigen::MatrixXd X(sampler_samples, n);
    for (int s = 0; s < sampler_samples; ++s) {
      NoiseStreams ns = noise_streams(spec.seed, 2, static_cast<std::uint64_t>(s));
      X.row(s) = sampler.sample(layer, 0.5, 1.0, ns).v.transpose();  // 2 kBT / dt = 1
    }
    const double z = covariance_zscores(X, M).cwiseAbs().maxCoeff();
    st.add_row({std::string("combined_sampler"), static_cast<long long>(sampler_samples),
                static_cast<long long>(n * (n + 1) / 2), z, median_abs(sample_covariance(X) - M)});
    r.check("combined_sampler_covariance", z <= zmax, "max |z| = " + fmt(z, 3));
  }
  // End-to-end body velocities with F = 0.
  {
    const Eigen::MatrixXd N = body_mobility_dense(ctx, cfg);
    SolveOptions opt;
    opt.tol = spec.get("gmres_tol", 1e-10);
    Eigen::MatrixXd X(samples, 6);
    double flux = 0;
    for (int s = 0; s < samples; ++s) {
      NoiseStreams ns = noise_streams(spec.seed, 3, static_cast<std::uint64_t>(s));
      const Eigen::VectorXd v = sampler.sample(layer, kBT, dt, ns).v;
      const SaddleSolution sol = sys.solve(ForceTorque::zero(2), &v, opt);
      flux = std::max(flux, sol.projected / v.norm());
      X.row(s) = sol.U.values.transpose();
    }
    const Eigen::MatrixXd C = scale2 * N;
    const double z = covariance_zscores(X, C).cwiseAbs().maxCoeff();
    const double e_full = median_abs(sample_covariance(X) - C);
    const double e_half = median_abs(sample_covariance(X.topRows(samples / 2)) - C);
    st.add_row({std::string("body_velocity"), static_cast<long long>(samples), 21LL, z, e_full});
    st.add_row({std::string("body_velocity_half"), static_cast<long long>(samples / 2), 21LL,
                covariance_zscores(X.topRows(samples / 2), C).cwiseAbs().maxCoeff(), e_half});
    r.check("end_to_end_covariance", z <= zmax, "max |z| = " + fmt(z, 3));
    const double shrink = e_half / e_full;
    r.check("monte_carlo_scaling", shrink >= 1.0 && shrink <= 2.0,
            "median error ratio half/full = " + fmt(shrink, 3) + " (sqrt 2 expected)");
    r.summary["normal_flux_fraction"] = flux;
  }
  r.tables.push_back(std::move(alg));
  r.tables.push_back(std::move(st));
  return r;
}

// ---- convergence ----

SuiteResult run_convergence(const ExperimentSpec& spec) {
  SuiteResult r = start(spec, "convergence");
  const int N = spec.get("bodies", 20);
  const auto nps = spec.get<std::vector<int>>("nps", {16, 32, 64, 128});
  const auto orders = spec.get<std::vector<int>>("orders", {4, 8});
  const int nbox = spec.get("nbox", 3);
  const double eps = spec.get("eps", 1e-12);
  const double gmres_tol = spec.get("gmres_tol", 1e-11);
  const int ref_np = spec.get("ref_np", 256);
  const std::vector<std::pair<std::string, std::pair<double, double>>> cases = {
      {"dilute", {spec.get("phi_dilute", 0.25), spec.get("phi0_dilute", 0.4)}},
      {"dense", {spec.get("phi_dense", 0.5), spec.get("phi0_dense", 0.6)}}};

  ResultTable t("errors", {"case", "method", "order", "Np", "ratio", "iterations", "error"});
  stamp(t, spec);
  std::map<std::string, std::map<std::string, std::map<int, double>>> err;
  for (const auto& [name, ph] : cases) {
    const Configuration cfg = generate_random_config(N, ph.first, ph.second, spec.seed);
    const ForceTorque F = random_forces(N, spec.seed);
    RefOptions ro;
    ro.eta = spec.eta;
    const Eigen::VectorXd Uref = solve_mobility_ref(cfg, F, ref_np, ro).U.values;
    for (int Np : nps) {
      const RefSolution s = solve_mobility_ref(cfg, F, Np, ro);
      const double e = (s.U.values - Uref).norm() / Uref.norm();
      err[name]["second"][Np] = e;
      t.add_row({name, std::string("second_kind"), 0LL, static_cast<long long>(Np), 0.0,
                 static_cast<long long>(s.iterations), e});
    }
    for (int order : orders)
      for (int Np : nps) {
        const FbimParams p = make_params(Np, order, eps, cfg.domain.L, nbox, spec.eta);
        const FbimContext ctx(cfg, p);
        SolveOptions opt;
        opt.tol = gmres_tol;
        const SaddleSolution s = SaddleSystem(ctx, cfg).solve(F, nullptr, opt);
        const double e = (s.U.values - Uref).norm() / Uref.norm();
        err[name]["first" + std::to_string(order)][Np] = e;
        t.add_row({name, std::string("first_kind"), static_cast<long long>(order),
                   static_cast<long long>(Np), ratio_for(p, cfg.shapes[0]),
                   static_cast<long long>(s.iterations), e});
        if (Np == nps.front() && order == orders.front()) stamp_plan(t, name, p.plan);
      }
  }
  const std::vector<double> x = {16, 32, 64};
  for (int order : orders) {
    const auto& e = err["dilute"]["first" + std::to_string(order)];
    const double slope = -loglog_slope(x, {e.at(16), e.at(32), e.at(64)});
    const double need = order == 4 ? 3.5 : 7.0;
    r.check("slope_order_" + std::to_string(order), slope >= need,
            "log-log slope over Np 16..64 = " + fmt(slope, 3) + " (need " + fmt(need, 2) + ")");
    r.summary["slope_order_" + std::to_string(order)] = slope;
  }
  if (err["dilute"]["second"].count(128)) {
    const double s = err["dilute"]["second"].at(128);
    bool ok = true;
    std::string d = "second-kind " + fmt(s, 3);
    for (int order : orders) {
      const double f = err["dilute"]["first" + std::to_string(order)].at(128);
      ok = ok && s < f;
      d += ", order " + std::to_string(order) + " " + fmt(f, 3);
    }
    r.check("dilute_second_kind_wins_at_128", ok, d);
  }
  {
    const double s = err["dense"]["second"].at(16);
    const double f = err["dense"]["first" + std::to_string(orders.front())].at(16);
    r.check("dense_first_kind_wins_at_16", f < s,
            "first-kind " + fmt(f, 3) + " vs second-kind " + fmt(s, 3));
  }
  r.tables.push_back(std::move(t));
  return r;
}

// ---- bd-starfish ----

namespace {

Configuration starfish_cell(double a, double b, double L) {
  Configuration c;
  c.domain.L = L;
  c.shapes.push_back(BodyShape::starfish(a / (1 + b), b));
  c.bodies.push_back(Body{Vec2(L / 2, L / 2), 0.0, 0});
  return c;
}

struct EnsembleRun {
  std::vector<std::vector<Vec2>> positions;
  std::vector<std::vector<double>> angles;
  std::vector<std::vector<double>> extra;  // suite-specific scalar series
  long solves = 0, steps = 0, retries = 0;
};

}  // namespace

SuiteResult run_bd_starfish(const ExperimentSpec& spec) {
  SuiteResult r = start(spec, "bd-starfish");
  const double a = spec.get("a", 0.45), b = spec.get("b", 0.3), L = spec.get("L", 1.0);
  const int Np = spec.get("np", 64);
  const double eps = spec.get("eps", 1e-7);
  const int nbox = spec.get("nbox", 3);
  const double dt = spec.get("dt", 0.02);
  const double T = spec.get("T", 100.0);
  const int ensemble = spec.get("ensemble", 16);
  const int thin = spec.get("thin", 50);
  const int nbins = spec.get("bins", 12);
  const double burn = spec.get("burn_in", 0.2);
  const int table_n = spec.get("table_angles", 32);
  const int table_np = spec.get("table_np", 64);
  const auto variants = spec.get<std::vector<std::string>>("variants", {"unbiased", "biased"});
  const double period = pi / 2;
  const Configuration cfg0 = starfish_cell(a, b, L);
  const BodyShape& shape = cfg0.shapes[0];

  RefOptions ro;
  ro.eta = spec.eta;
  const OrientationTable tab =
      orientation_table(shape, L, table_np, table_n, period, ro, spec.out_dir + "/cache");
  // Uniform and biased averages of N_xx, and bin probabilities.
  double nxx_u = 0, nxx_b = 0, zb = 0, nrot_u = 0;
  for (std::size_t i = 0; i < tab.theta.size(); ++i) {
    nxx_u += tab.N[i](0, 0);
    nrot_u += tab.N[i](2, 2);
    nxx_b += tab.N[i](0, 0) / tab.N[i](2, 2);
    zb += 1 / tab.N[i](2, 2);
  }
  nxx_u /= static_cast<double>(tab.theta.size());
  nrot_u /= static_cast<double>(tab.theta.size());
  nxx_b /= zb;
  std::vector<double> p_biased(nbins), p_uniform(nbins, 1.0 / nbins);
  {
    const int sub = 64;
    double tot = 0;
    for (int k = 0; k < nbins; ++k) {
      double s = 0;
      for (int j = 0; j < sub; ++j) s += 1 / tab.rot((k + (j + 0.5) / sub) * period / nbins);
      p_biased[k] = s;
      tot += s;
    }
    for (double& p : p_biased) p /= tot;
  }
  r.summary["chi_trans"] = spec.kBT * nxx_u;
  r.summary["chi_rot"] = spec.kBT * nrot_u;

  const FbimContext ctx(cfg0, make_params(Np, spec.order, eps, L, nbox, spec.eta));
  const MobilitySolve mob = fbim_mobility(ctx, spec.get("lanczos_tol", 1e-6));
  const FreePotential free;
  const long nsteps = std::lround(T / dt);

  ResultTable hist("histograms", {"variant", "bin_lo", "bin_hi", "count", "p_uniform", "p_biased"});
  ResultTable msd("msd", {"variant", "lag", "msd", "se", "einstein"});
  ResultTable tt("table", {"theta", "N_xx", "N_yy", "N_thth", "N_xy"});
  stamp(hist, spec);
  stamp(msd, spec);
  stamp(tt, spec);
  stamp_plan(hist, "starfish", ctx.plan());
  for (std::size_t i = 0; i < tab.theta.size(); ++i)
    tt.add_row({tab.theta[i], tab.N[i](0, 0), tab.N[i](1, 1), tab.N[i](2, 2), tab.N[i](0, 1)});

  std::map<std::string, std::vector<long>> counts;
  for (const auto& variant : variants) {
    if (variant != "biased" && variant != "unbiased")
      throw std::invalid_argument("variant must be biased or unbiased");
    BDParams bp;
    bp.dt = dt;
    bp.kBT = spec.kBT;
    bp.rfd = variant == "unbiased";
    bp.tol_det = eps;
    bp.tol_rfd = spec.get("tol_rfd", eps);
    bp.rfd_length = a;
    bp.lanczos_tol = spec.get("lanczos_tol", 1e-6);
    const std::uint64_t offset = variant == "biased" ? 1000 : 0;
    std::vector<std::vector<Vec2>> pos;
    std::vector<double> angles;
    long solves = 0;
    for (int k = 0; k < ensemble; ++k) {
      Configuration cfg = cfg0;
      GaussianStream init(spec.seed, offset + k, 0, Purpose::Config);
      cfg.bodies[0].q = Vec2(L * init.uniform(), L * init.uniform());
      cfg.bodies[0].theta = period * init.uniform();
      BrownianIntegrator integ(mob, free, bp, spec.seed, offset + k, Np);
      const Trajectory traj = run_trajectory(integ, cfg, nsteps, thin);
      std::vector<Vec2> p;
      for (const auto& Q : traj.Q) p.push_back(Q.head<2>());
      const auto skip = static_cast<std::size_t>(burn * static_cast<double>(traj.Q.size()));
      for (std::size_t i = skip; i < traj.Q.size(); ++i) angles.push_back(traj.Q[i][2]);
      pos.push_back(std::vector<Vec2>(p.begin() + static_cast<std::ptrdiff_t>(skip), p.end()));
      for (const auto& d : traj.diag) solves += d.solves;
      if (spec.get("write_trajectories", false))
        traj.write_csv(spec.out_dir + "/bd-starfish_" + variant + "_traj" + std::to_string(k) + ".csv");
    }
    const std::vector<long> c = periodic_histogram(angles, nbins, period);
    counts[variant] = c;
    for (int k = 0; k < nbins; ++k)
      hist.add_row({variant, k * period / nbins, (k + 1) * period / nbins, static_cast<long long>(c[k]),
                    p_uniform[k], p_biased[k]});
    const ChiSquare fit = chi_square_fit(c, variant == "biased" ? p_biased : p_uniform);
    r.check(variant + "_histogram_fit", fit.p_value >= 0.01,
            "chi-square " + fmt(fit.statistic, 4) + " on " + std::to_string(fit.dof) + " dof, p = " +
                fmt(fit.p_value, 3) + " against the " + (variant == "biased" ? "biased" : "uniform") +
                " density");
    const double nxx = variant == "biased" ? nxx_b : nxx_u;
    const std::vector<int> lags = spec.get<std::vector<int>>("msd_lags", {1, 2, 3, 4, 5});
    const MsdCurve m = mean_square_displacement(pos, dt * thin, lags, spec.get("msd_blocks", 2));
    for (std::size_t i = 0; i < m.lag.size(); ++i)
      msd.add_row({variant, m.lag[i], m.msd[i], m.se[i], 4 * spec.kBT * nxx * m.lag[i]});
    const double einstein = 4 * spec.kBT * nxx;
    const bool ok = std::abs(m.slope.value - einstein) <= 3 * m.slope.se;
    r.check(variant + "_msd_slope", ok,
            "slope " + fmt(m.slope.value, 4) + " +- " + fmt(m.slope.se, 2) + " vs 4 kBT <N_xx> = " +
                fmt(einstein, 4));
    r.summary[variant + "_solves_per_step"] =
        static_cast<double>(solves) / static_cast<double>(ensemble * nsteps);
  }
  if (counts.count("biased") && counts.count("unbiased")) {
    const ChiSquare h = chi_square_homogeneity(counts["biased"], counts["unbiased"]);
    r.check("histograms_distinguishable", h.p_value <= 0.01,
            "two-sample chi-square " + fmt(h.statistic, 4) + ", p = " + fmt(h.p_value, 3));
  }
  r.tables.push_back(std::move(hist));
  r.tables.push_back(std::move(msd));
  r.tables.push_back(std::move(tt));
  return r;
}

// ---- bd-pair ----

SuiteResult run_bd_pair(const ExperimentSpec& spec) {
  SuiteResult r = start(spec, "bd-pair");
  const double L = spec.get("L", 2.0);
  const double a = spec.get("a", L / 12), b = spec.get("b", 0.3);
  const int Np = spec.get("np", 48);
  const int nbox = spec.get("nbox", 4);
  const double tol_det = spec.get("tol_det", 1e-6), tol_rfd = spec.get("tol_rfd", 1e-3);
  const double ks = spec.get("k_spring", 81.0), ktheta = spec.get("k_theta", 2.446);
  const double rest = spec.get("rest", 5 * a);
  const double tau = spec.get("tau", 0.1189);
  const auto dts = spec.get<std::vector<double>>("dts", {tau / 10, tau / 4});
  const auto schemes = spec.get<std::vector<std::string>>("schemes", {"EM", "AB2"});
  const double T = spec.get("T", 14.86);
  const int ensemble = spec.get("ensemble", 16);
  const double burn = spec.get("burn_in", 0.2);
  const int blocks = spec.get("blocks", 4);
  const double kBT = spec.kBT;

  Configuration cfg0;
  cfg0.domain.L = L;
  cfg0.shapes.push_back(BodyShape::starfish(a / (1 + b), b));
  const double t1 = pi / 4, t2 = pi / 2;
  cfg0.bodies.push_back(Body{Vec2(L / 2 - rest / 2, L / 2), t1, 0});
  cfg0.bodies.push_back(Body{Vec2(L / 2 + rest / 2, L / 2), t2, 0});
  PairPotential::Params pp;
  pp.spring = ks;
  pp.rest = rest;
  pp.stiffness_rot = ktheta;
  pp.angle_i = t1;
  pp.angle_j = t2;
  const PairPotential pot(pp);

  const auto [d_mean, d_var] = spring_distance_moments(ks, rest, kBT, L);
  const double th_var = kBT / ktheta;
  const FbimContext ctx(cfg0, make_params(Np, spec.order, tol_det, L, nbox, spec.eta));
  const MobilitySolve mob = fbim_mobility(ctx, spec.get("lanczos_tol", 1e-6));

  ResultTable t("moments", {"scheme", "dt", "steps", "quantity", "value", "se", "reference", "z"});
  stamp(t, spec);
  stamp_plan(t, "pair", ctx.plan());
  t.add_header("reference d mean " + fmt(d_mean, 10) + " var " + fmt(d_var, 10));

  struct RunStats {
    std::map<std::string, Estimate> est;
  };
  std::map<std::pair<std::string, double>, RunStats> runs;
  for (double dt : dts)
    for (const auto& scheme : schemes) {
      BDParams bp;
      bp.dt = dt;
      bp.kBT = kBT;
      bp.scheme = scheme == "AB2" ? Scheme::AB2 : Scheme::EM;
      if (scheme != "AB2" && scheme != "EM") throw std::invalid_argument("scheme must be EM or AB2");
      bp.tol_det = tol_det;
      bp.tol_rfd = tol_rfd;
      bp.rfd_length = a;
      const long nsteps = std::lround(T / dt);
      std::vector<std::vector<double>> ds, th1, th2;
      for (int k = 0; k < ensemble; ++k) {
        BrownianIntegrator integ(mob, pot, bp, spec.seed, static_cast<std::uint64_t>(k), Np);
        const Trajectory traj = run_trajectory(integ, cfg0, nsteps, 1);
        std::vector<double> d, a1, a2;
        for (const auto& Q : traj.Q) {
          d.push_back(min_image(Vec2(Q.segment<2>(0) - Q.segment<2>(3)), cfg0.domain).norm());
          a1.push_back(Q[2]);
          a2.push_back(Q[5]);
        }
        ds.push_back(d);
        th1.push_back(a1);
        th2.push_back(a2);
      }
      ds = stationary_segments(ds, burn);
      th1 = stationary_segments(th1, burn);
      th2 = stationary_segments(th2, burn);
      RunStats s;
      s.est["mean_d"] = block_mean(ds, blocks);
      s.est["mean_theta1"] = block_mean(th1, blocks);
      s.est["mean_theta2"] = block_mean(th2, blocks);
      s.est["cov_d_d"] = block_covariance(ds, ds, blocks);
      s.est["cov_theta1_theta1"] = block_covariance(th1, th1, blocks);
      s.est["cov_theta2_theta2"] = block_covariance(th2, th2, blocks);
      s.est["cov_d_theta1"] = block_covariance(ds, th1, blocks);
      s.est["cov_d_theta2"] = block_covariance(ds, th2, blocks);
      s.est["cov_theta1_theta2"] = block_covariance(th1, th2, blocks);
      const std::map<std::string, double> ref = {
          {"mean_d", d_mean},          {"mean_theta1", t1},         {"mean_theta2", t2},
          {"cov_d_d", d_var},          {"cov_theta1_theta1", th_var}, {"cov_theta2_theta2", th_var},
          {"cov_d_theta1", 0.0},       {"cov_d_theta2", 0.0},       {"cov_theta1_theta2", 0.0}};
      for (const auto& [q, e] : s.est) {
        const double z = e.se > 0 ? (e.value - ref.at(q)) / e.se : 0.0;
        t.add_row({scheme, dt, static_cast<long long>(nsteps), q, e.value, e.se, ref.at(q), z});
      }
      runs[{scheme, dt}] = s;
    }

  const double dt_min = *std::min_element(dts.begin(), dts.end());
  const double dt_max = *std::max_element(dts.begin(), dts.end());
  const std::string best = std::find(schemes.begin(), schemes.end(), "AB2") != schemes.end()
                               ? "AB2"
                               : schemes.front();
  const RunStats& s = runs.at({best, dt_min});
  const auto within = [&](const std::string& q, double ref) {
    const Estimate& e = s.est.at(q);
    r.check(q + "_" + best, std::abs(e.value - ref) <= 3 * e.se,
            fmt(e.value, 5) + " +- " + fmt(e.se, 2) + " vs " + fmt(ref, 5) + " at dt " + fmt(dt_min, 4));
  };
  within("mean_theta1", t1);
  within("mean_theta2", t2);
  within("cov_theta1_theta1", th_var);
  within("cov_theta2_theta2", th_var);
  within("cov_d_theta1", 0.0);
  within("cov_d_theta2", 0.0);
  within("cov_theta1_theta2", 0.0);
  if (runs.count({"EM", dt_max}) && runs.count({"AB2", dt_max})) {
    const double em = std::abs(runs.at({"EM", dt_max}).est.at("cov_d_d").value - d_var);
    const double ab = std::abs(runs.at({"AB2", dt_max}).est.at("cov_d_d").value - d_var);
    r.check("ab2_beats_em_cov_d_d", ab <= em,
            "|cov(d,d) error| AB2 " + fmt(ab, 3) + " vs EM " + fmt(em, 3) + " at dt " + fmt(dt_max, 4));
  }
  r.tables.push_back(std::move(t));
  return r;
}

// ---- scaling ----

SuiteResult run_scaling(const ExperimentSpec& spec) {
  SuiteResult r = start(spec, "scaling");
  const double eps = spec.get("eps", 1e-6);
  const int Np = spec.get("np", 32);
  const double a = spec.get("a", 0.0282);
  const double phi = spec.get("phi", 0.25), phi0 = spec.get("phi0", 0.4);
  const auto counts = spec.get<std::vector<int>>("bodies", {25, 100, 400});
  const double rc = spec.get("rc", 0.1);
  const int reps = spec.get("repetitions", 5);
  const double kBT = spec.kBT;

  ResultTable t("timing", {"bodies", "L", "nbox", "xi", "median_seconds", "gmres_iterations",
                           "lanczos_iterations"});
  stamp(t, spec);
  std::vector<double> ns, times;
  for (int N : counts) {
    const double L = std::sqrt(N * pi * a * a / phi);
    const int nbox = std::max(3, static_cast<int>(std::lround(L / rc)));
    const Configuration cfg = generate_random_config(N, phi, phi0, spec.seed, L);
    const FbimContext ctx(cfg, make_params(Np, spec.order, eps, L, nbox, spec.eta));
    const SurfaceVelocitySampler sampler(ctx, eps);
    const ForceTorque F = random_forces(N, spec.seed);
    std::vector<double> rt;
    int its = 0, lz = 0;
    for (int k = 0; k < reps + 1; ++k) {
      const auto t0 = std::chrono::steady_clock::now();
      const SaddleSystem sys(ctx, cfg);
      NoiseStreams streams = noise_streams(spec.seed, 0, static_cast<std::uint64_t>(k));
      const SurfaceSample v = sampler.sample(sys.single_layer(), kBT, 1.0, streams);
      SolveOptions opt;
      opt.tol = eps;
      const SaddleSolution s = sys.solve(F, &v.v, opt);
      if (k > 0) rt.push_back(seconds_since(t0));  // first run warms caches
      its = s.iterations;
      lz = v.lanczos_iterations;
    }
    const double med = median(rt);
    t.add_row({static_cast<long long>(N), L, static_cast<long long>(nbox), ctx.plan().xi, med,
               static_cast<long long>(its), static_cast<long long>(lz)});
    ns.push_back(N);
    times.push_back(med);
  }
  const double expo = loglog_slope(ns, times);
  r.check("linear_scaling", expo >= 0.85 && expo <= 1.3, "fitted exponent " + fmt(expo, 3));
  r.summary["exponent"] = expo;

  // Iteration counts on the 100-disk configurations.
  const int Nit = spec.get("iteration_bodies", 100);
  const int Np_it = spec.get("iteration_np", 64);
  const auto nboxes = spec.get<std::vector<int>>("iteration_nbox", {5, 10, 15});
  ResultTable it("iterations", {"phi", "nbox", "xi", "preconditioned", "gmres_iterations",
                                "lanczos_iterations"});
  stamp(it, spec);
  std::map<double, std::vector<int>> gm, lz;
  std::map<double, int> unpre;
  for (const auto& [ph, ph0] : std::vector<std::pair<double, double>>{{0.25, 0.4}, {0.5, 0.6}}) {
    const Configuration cfg = generate_random_config(Nit, ph, ph0, spec.seed, 1.0);
    const ForceTorque F = random_forces(Nit, spec.seed);
    for (int nb : nboxes) {
      const FbimContext ctx(cfg, make_params(Np_it, spec.order, eps, 1.0, nb, spec.eta));
      const SaddleSystem sys(ctx, cfg);
      const SurfaceVelocitySampler sampler(ctx, eps);
      NoiseStreams streams = noise_streams(spec.seed, 1, 0);
      const SurfaceSample v = sampler.sample(sys.single_layer(), kBT, 1.0, streams);
      SolveOptions opt;
      opt.tol = eps;
      const SaddleSolution s = sys.solve(F, &v.v, opt);
      gm[ph].push_back(s.iterations);
      lz[ph].push_back(v.lanczos_iterations);
      it.add_row({ph, static_cast<long long>(nb), ctx.plan().xi, 1LL,
                  static_cast<long long>(s.iterations), static_cast<long long>(v.lanczos_iterations)});
      if (nb == nboxes.front()) {
        opt.precondition = false;
        opt.max_iter = spec.get("max_unpreconditioned", 3000);
        const SaddleSolution u = sys.solve(F, &v.v, opt);
        unpre[ph] = u.iterations;
        it.add_row({ph, static_cast<long long>(nb), ctx.plan().xi, 0LL,
                    static_cast<long long>(u.iterations), 0LL});
      }
    }
  }
  const double dense = 0.5;
  r.check("preconditioner_halves_iterations", 2 * gm[dense].front() <= unpre[dense],
          "preconditioned " + std::to_string(gm[dense].front()) + " vs unpreconditioned " +
              std::to_string(unpre[dense]));
  const auto [mn, mx] = std::minmax_element(gm[dense].begin(), gm[dense].end());
  r.check("gmres_iterations_independent_of_xi", *mx - *mn <= 2,
          "GMRES iterations over xi range from " + std::to_string(*mn) + " to " + std::to_string(*mx));
  bool mono = true;
  for (const double ph : {0.25, 0.5})
    for (std::size_t i = 1; i < lz[ph].size(); ++i) mono = mono && lz[ph][i] <= lz[ph][i - 1];
  r.check("lanczos_decreases_with_xi", mono, "Lanczos iterations non-increasing in xi for both packings");
  r.check("dense_needs_more_gmres", gm[0.5].front() > gm[0.25].front(),
          "phi=0.5: " + std::to_string(gm[0.5].front()) + ", phi=0.25: " + std::to_string(gm[0.25].front()));
  r.tables.push_back(std::move(t));
  r.tables.push_back(std::move(it));
  return r;
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"lattice-drag", "xi-accuracy", "dfdb",
                                                 "convergence",  "bd-starfish", "bd-pair",
                                                 "scaling"};
  return names;
}

SuiteResult run_suite(const ExperimentSpec& spec) {
  if (spec.suite == "lattice-drag") return run_lattice_drag(spec);
  if (spec.suite == "xi-accuracy") return run_xi_accuracy(spec);
  if (spec.suite == "dfdb") return run_dfdb(spec);
  if (spec.suite == "convergence") return run_convergence(spec);
  if (spec.suite == "bd-starfish") return run_bd_starfish(spec);
  if (spec.suite == "bd-pair") return run_bd_pair(spec);
  if (spec.suite == "scaling") return run_scaling(spec);
  throw std::invalid_argument("unknown suite '" + spec.suite + "'");
}

}  // namespace fbim
