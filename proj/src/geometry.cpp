#include "fbim/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "fbim/rng.hpp"

namespace fbim {

using std::numbers::pi;

Vec2 min_image(const Vec2& r, const PeriodicDomain& dom) {
  const double L = dom.L;
  Vec2 out;
  for (int d = 0; d < 2; ++d) {
    double v = r[d] - L * std::floor(r[d] / L + 0.5);
    if (v >= 0.5 * L) v -= L;
    if (v < -0.5 * L) v += L;
    out[d] = v;
  }
  return out;
}

Vec2 wrap_point(const Vec2& x, const PeriodicDomain& dom) {
  const double L = dom.L;
  Vec2 out;
  for (int d = 0; d < 2; ++d) {
    double v = x[d] - L * std::floor(x[d] / L);
    if (v >= L) v -= L;
    out[d] = v;
  }
  return out;
}

Mat2 rotation(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Mat2 R;
  R << c, -s, s, c;
  return R;
}

BodyShape BodyShape::disk(double a) {
  if (!(a > 0)) throw std::invalid_argument("disk radius must be positive");
  BodyShape s;
  s.kind = Kind::Disk;
  s.a = a;
  return s;
}

BodyShape BodyShape::starfish(double rs, double b, int lobes) {
  if (!(rs > 0) || !(std::abs(b) < 1) || lobes < 1)
    throw std::invalid_argument("starfish needs rs > 0, |b| < 1, lobes >= 1");
  BodyShape s;
  s.kind = Kind::Starfish;
  s.rs = rs;
  s.b = b;
  s.lobes = lobes;
  s.a = rs * (1 + std::abs(b));
  return s;
}

BodyShape BodyShape::fourier(double r0, std::vector<double> ca, std::vector<double> sa) {
  BodyShape s;
  s.kind = Kind::Fourier;
  s.r0 = r0;
  s.ca = std::move(ca);
  s.sa = std::move(sa);
  // A radial curve is simple exactly when r(s) > 0; check on a fine grid.
  const int n = 64 * static_cast<int>(std::max(s.ca.size(), s.sa.size()) + 4);
  for (int j = 0; j < n; ++j) {
    if (!(s.radius(2 * pi * j / n) > 0))
      throw std::invalid_argument("fourier curve radius must stay positive");
  }
  s.a = s.max_radius();
  return s;
}

double BodyShape::radius(double s) const {
  switch (kind) {
    case Kind::Disk:
      return a;
    case Kind::Starfish:
      return rs * (1 + b * std::cos(lobes * s));
    case Kind::Fourier: {
      double r = r0;
      for (std::size_t n = 0; n < ca.size(); ++n) r += ca[n] * std::cos((n + 1) * s);
      for (std::size_t n = 0; n < sa.size(); ++n) r += sa[n] * std::sin((n + 1) * s);
      return r;
    }
  }
  return 0;
}

double BodyShape::dradius(double s) const {
  switch (kind) {
    case Kind::Disk:
      return 0;
    case Kind::Starfish:
      return -rs * b * lobes * std::sin(lobes * s);
    case Kind::Fourier: {
      double r = 0;
      for (std::size_t n = 0; n < ca.size(); ++n) r -= (n + 1.0) * ca[n] * std::sin((n + 1) * s);
      for (std::size_t n = 0; n < sa.size(); ++n) r += (n + 1.0) * sa[n] * std::cos((n + 1) * s);
      return r;
    }
  }
  return 0;
}

double BodyShape::d2radius(double s) const {
  switch (kind) {
    case Kind::Disk:
      return 0;
    case Kind::Starfish:
      return -rs * b * lobes * lobes * std::cos(lobes * s);
    case Kind::Fourier: {
      double r = 0;
      for (std::size_t n = 0; n < ca.size(); ++n)
        r -= (n + 1.0) * (n + 1.0) * ca[n] * std::cos((n + 1) * s);
      for (std::size_t n = 0; n < sa.size(); ++n)
        r -= (n + 1.0) * (n + 1.0) * sa[n] * std::sin((n + 1) * s);
      return r;
    }
  }
  return 0;
}

double BodyShape::max_radius() const {
  if (kind == Kind::Disk) return a;
  if (kind == Kind::Starfish) return rs * (1 + std::abs(b));
  double m = 0;
  for (int j = 0; j < 4096; ++j) m = std::max(m, radius(2 * pi * j / 4096));
  return m;
}

double BodyShape::min_radius() const {
  if (kind == Kind::Disk) return a;
  if (kind == Kind::Starfish) return rs * (1 - std::abs(b));
  double m = radius(0);
  for (int j = 1; j < 4096; ++j) m = std::min(m, radius(2 * pi * j / 4096));
  return m;
}

std::string BodyShape::kind_name() const {
  switch (kind) {
    case Kind::Disk:
      return "disk";
    case Kind::Starfish:
      return "starfish";
    case Kind::Fourier:
      return "fourier";
  }
  return "?";
}

double SurfaceMesh::perimeter() const {
  double p = 0;
  for (double v : speed) p += v;
  return p * ds;
}

Vec2 curve_point(const BodyShape& shape, double s) {
  const double r = shape.radius(s);
  return Vec2(r * std::cos(s), r * std::sin(s));
}

SurfaceMesh discretize(const BodyShape& shape, int Np) {
  if (Np < 4 || Np % 2 != 0) throw std::invalid_argument("Np must be even and >= 4");
  SurfaceMesh m;
  m.Np = Np;
  m.ds = 2 * pi / Np;
  m.x.resize(Np);
  m.tangent.resize(Np);
  m.normal.resize(Np);
  m.kappa.resize(Np);
  m.speed.resize(Np);
  for (int j = 0; j < Np; ++j) {
    const double s = j * m.ds;
    const double r = shape.radius(s), dr = shape.dradius(s), d2r = shape.d2radius(s);
    const double c = std::cos(s), sn = std::sin(s);
    const Vec2 dg(dr * c - r * sn, dr * sn + r * c);
    const double sp = std::sqrt(r * r + dr * dr);
    m.x[j] = Vec2(r * c, r * sn);
    m.speed[j] = sp;
    m.tangent[j] = dg / sp;
    m.normal[j] = Vec2(m.tangent[j].y(), -m.tangent[j].x());
    m.kappa[j] = (r * r + 2 * dr * dr - r * d2r) / (sp * sp * sp);
  }
  return m;
}

SurfaceMesh place(const SurfaceMesh& ref, const Vec2& q, double theta) {
  const Mat2 R = rotation(theta);
  SurfaceMesh m = ref;
  for (int j = 0; j < ref.Np; ++j) {
    m.x[j] = q + R * ref.x[j];
    m.tangent[j] = R * ref.tangent[j];
    m.normal[j] = R * ref.normal[j];
  }
  return m;
}

namespace {

// Is the point p (relative to the tracking point, body frame) inside the curve?
bool inside(const BodyShape& shape, const Vec2& p) {
  const double s = std::atan2(p.y(), p.x());
  return p.norm() < shape.radius(s < 0 ? s + 2 * pi : s);
}

}  // namespace

bool bodies_overlap(const Configuration& cfg, int Np) {
  const auto& dom = cfg.domain;
  const std::size_t n = cfg.size();
  std::vector<SurfaceMesh> refs;
  for (const auto& sh : cfg.shapes) refs.push_back(discretize(sh, Np));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& bi = cfg.bodies[i];
      const auto& bj = cfg.bodies[j];
      const auto& si = cfg.shapes[bi.shape];
      const auto& sj = cfg.shapes[bj.shape];
      const Vec2 d = min_image(bj.q - bi.q, dom);
      const double dist = d.norm();
      if (dist >= si.max_radius() + sj.max_radius()) continue;
      if (si.kind == BodyShape::Kind::Disk && sj.kind == BodyShape::Kind::Disk) return true;
      if (dist <= si.min_radius() + sj.min_radius()) return true;
      const Mat2 Ri = rotation(bi.theta), Rj = rotation(bj.theta);
      for (int k = 0; k < Np; ++k) {
        // node of j seen from i, and node of i seen from j
        const Vec2 pj = Ri.transpose() * (d + Rj * refs[bj.shape].x[k]);
        if (inside(si, pj)) return true;
        const Vec2 pi_ = Rj.transpose() * (-d + Ri * refs[bi.shape].x[k]);
        if (inside(sj, pi_)) return true;
      }
    }
  }
  return false;
}

CellList::CellList(const std::vector<Vec2>& nodes, const PeriodicDomain& dom, int nbox)
    : pts_(nodes), dom_(dom), nbox_(nbox) {
  if (nbox < 3) throw std::invalid_argument("CellList needs nbox >= 3");
  rc_ = dom.L / nbox;
  cells_.assign(static_cast<std::size_t>(nbox) * nbox, {});
  cell_of_.resize(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Vec2 w = wrap_point(nodes[i], dom);
    const int cx = std::min(nbox - 1, static_cast<int>(w.x() / rc_));
    const int cy = std::min(nbox - 1, static_cast<int>(w.y() / rc_));
    const int c = cy * nbox + cx;
    cells_[c].push_back(static_cast<int>(i));
    cell_of_[i] = c;
  }
}

const std::vector<int>& CellList::bucket(int cx, int cy) const {
  cx = ((cx % nbox_) + nbox_) % nbox_;
  cy = ((cy % nbox_) + nbox_) % nbox_;
  return cells_[cy * nbox_ + cx];
}

void CellList::for_each_pair(const std::function<void(int, int, const Vec2&)>& f) const {
  const double rc2 = rc_ * rc_;
  for (int cy = 0; cy < nbox_; ++cy) {
    for (int cx = 0; cx < nbox_; ++cx) {
      const auto& home = cells_[cy * nbox_ + cx];
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const auto& other = bucket(cx + dx, cy + dy);
          for (int i : home) {
            for (int j : other) {
              if (i >= j) continue;
              const Vec2 r = min_image(pts_[i] - pts_[j], dom_);
              if (r.squaredNorm() < rc2) f(i, j, r);
            }
          }
        }
      }
    }
  }
}

double gap_ratio(double phi, double phi0) { return 2 * (std::sqrt(phi0 / phi) - 1); }

namespace {

double min_center_distance(const std::vector<Vec2>& c, const PeriodicDomain& dom) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t j = i + 1; j < c.size(); ++j)
      m = std::min(m, min_image(c[i] - c[j], dom).norm());
  return m;
}

// Grows the diameter from the current clearance to dia in stages, resolving
// overlaps after each stage with sequential pairwise pushes.
bool relax_overlaps(std::vector<Vec2>& c, const PeriodicDomain& dom, double dia) {
  const std::size_t n = c.size();
  const double start = n > 1 ? min_center_distance(c, dom) : dia;
  constexpr int stages = 200;
  for (int stage = 1; stage <= stages; ++stage) {
    const double d_stage = start + (dia - start) * stage / stages;
    const double target = d_stage * (1 + 1e-9);
    bool clear = false;
    for (int sweep = 0; sweep < 20000 && !clear; ++sweep) {
      clear = true;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          const Vec2 r = min_image(c[i] - c[j], dom);
          const double d = r.norm();
          if (d >= d_stage) continue;
          clear = false;
          const Vec2 u = d > 0 ? Vec2(r / d) : Vec2(1, 0);
          const double shift = 0.5 * (target - d);
          c[i] = wrap_point(c[i] + shift * u, dom);
          c[j] = wrap_point(c[j] - shift * u, dom);
        }
      }
    }
    if (!clear) return false;
  }
  return true;
}

}  // namespace

Configuration generate_random_config(int N, double phi, double phi0, std::uint64_t seed,
                                     double L) {
  if (N < 1) throw std::invalid_argument("need at least one body");
  if (!(0 < phi && phi < phi0 && phi0 < 0.7))
    throw std::invalid_argument("need 0 < phi < phi0 < 0.7");
  PeriodicDomain dom{L};
  const double a = L * std::sqrt(phi / (N * pi));
  const double a0 = a * std::sqrt(phi0 / phi);
  // Insertion jams well below phi0 = 0.54; beyond a cap we insert at the cap
  // and compress by overlap relaxation.
  constexpr double rsa_cap = 0.45;
  const double a_ins = phi0 <= 0.54 ? a0 : a * std::sqrt(rsa_cap / phi);
  GaussianStream rng(seed, 0, 0, Purpose::Config);
  std::vector<Vec2> c;
  const long max_attempts = 20000L * N + 100000L;
  long attempts = 0;
  while (static_cast<int>(c.size()) < N && attempts < max_attempts) {
    ++attempts;
    const Vec2 p(L * rng.uniform(), L * rng.uniform());
    bool ok = true;
    for (const auto& o : c) {
      if (min_image(p - o, dom).norm() < 2 * a_ins) {
        ok = false;
        break;
      }
    }
    if (ok) c.push_back(p);
  }
  if (static_cast<int>(c.size()) < N) {
    std::ostringstream os;
    os << "random insertion placed only " << c.size() << " of " << N << " disks";
    throw std::runtime_error(os.str());
  }
  if (a_ins < a0 && !relax_overlaps(c, dom, 2 * a0)) {
    throw std::runtime_error("overlap relaxation did not reach the generation packing");
  }
  Configuration cfg;
  cfg.domain = dom;
  cfg.shapes.push_back(BodyShape::disk(a));
  for (const auto& p : c) cfg.bodies.push_back(Body{p, 0.0, 0});
  if (N > 1 && min_center_distance(c, dom) < 2 * a0 * (1 - 1e-12))
    throw std::runtime_error("generated configuration violates the minimum gap");
  return cfg;
}

double min_pair_gap(const Configuration& cfg) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    for (std::size_t j = i + 1; j < cfg.size(); ++j) {
      const double d = min_image(cfg.bodies[i].q - cfg.bodies[j].q, cfg.domain).norm();
      m = std::min(m, d - cfg.shape_of(i).max_radius() - cfg.shape_of(j).max_radius());
    }
  }
  return m;
}

std::string config_to_json(const Configuration& cfg) {
  using nlohmann::json;
  json j;
  j["L"] = cfg.domain.L;
  j["shapes"] = json::array();
  for (const auto& s : cfg.shapes) {
    json js;
    js["kind"] = s.kind_name();
    switch (s.kind) {
      case BodyShape::Kind::Disk:
        js["a"] = s.a;
        break;
      case BodyShape::Kind::Starfish:
        js["rs"] = s.rs;
        js["b"] = s.b;
        js["lobes"] = s.lobes;
        break;
      case BodyShape::Kind::Fourier:
        js["r0"] = s.r0;
        js["ca"] = s.ca;
        js["sa"] = s.sa;
        break;
    }
    j["shapes"].push_back(js);
  }
  j["bodies"] = json::array();
  for (const auto& b : cfg.bodies) {
    j["bodies"].push_back({{"shape", b.shape}, {"q", {b.q.x(), b.q.y()}}, {"theta", b.theta}});
  }
  return j.dump(2);
}

Configuration config_from_json(const std::string& text) {
  using nlohmann::json;
  const json j = json::parse(text);
  Configuration cfg;
  cfg.domain.L = j.at("L").get<double>();
  if (!(cfg.domain.L > 0)) throw std::invalid_argument("L must be positive");
  for (const auto& js : j.at("shapes")) {
    const std::string k = js.at("kind").get<std::string>();
    if (k == "disk") {
      cfg.shapes.push_back(BodyShape::disk(js.at("a").get<double>()));
    } else if (k == "starfish") {
      cfg.shapes.push_back(BodyShape::starfish(js.at("rs").get<double>(), js.at("b").get<double>(),
                                               js.value("lobes", 4)));
    } else if (k == "fourier") {
      cfg.shapes.push_back(BodyShape::fourier(js.at("r0").get<double>(),
                                              js.at("ca").get<std::vector<double>>(),
                                              js.at("sa").get<std::vector<double>>()));
    } else {
      throw std::invalid_argument("unknown shape kind: " + k);
    }
  }
  for (const auto& jb : j.at("bodies")) {
    Body b;
    b.shape = jb.value("shape", 0);
    const auto q = jb.at("q").get<std::vector<double>>();
    if (q.size() != 2) throw std::invalid_argument("q must have two components");
    b.q = Vec2(q[0], q[1]);
    b.theta = jb.value("theta", 0.0);
    if (b.shape < 0 || b.shape >= static_cast<int>(cfg.shapes.size()))
      throw std::invalid_argument("body references a missing shape");
    cfg.bodies.push_back(b);
  }
  return cfg;
}

void save_config(const Configuration& cfg, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << config_to_json(cfg) << "\n";
}

Configuration load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return config_from_json(ss.str());
}

}  // namespace fbim
