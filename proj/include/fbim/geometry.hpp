#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fbim {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

struct PeriodicDomain {
  double L = 1.0;
  double area() const { return L * L; }
};

// Components mapped into [-L/2, L/2).
Vec2 min_image(const Vec2& r, const PeriodicDomain& dom);
// Point mapped into [0, L)^2.
Vec2 wrap_point(const Vec2& x, const PeriodicDomain& dom);
Mat2 rotation(double theta);

// Counterclockwise perpendicular (-x2, x1); omega x r in the plane.
inline Vec2 perp(const Vec2& v) { return Vec2(-v.y(), v.x()); }
inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Star-shaped curve r(s)(cos s, sin s), s in [0, 2pi).
struct BodyShape {
  enum class Kind { Disk, Starfish, Fourier };

  Kind kind = Kind::Disk;
  double a = 1.0;    // disk radius
  double rs = 1.0;   // starfish base radius
  double b = 0.0;    // starfish lobe amplitude
  int lobes = 4;
  double r0 = 1.0;   // fourier mean radius
  std::vector<double> ca, sa;  // fourier coefficients of cos(ns), sin(ns), n = 1..

  static BodyShape disk(double a);
  static BodyShape starfish(double rs, double b, int lobes = 4);
  // Throws std::invalid_argument if r(s) is not strictly positive.
  static BodyShape fourier(double r0, std::vector<double> ca, std::vector<double> sa);

  double radius(double s) const;
  double dradius(double s) const;
  double d2radius(double s) const;
  double max_radius() const;
  double min_radius() const;
  std::string kind_name() const;
};

struct SurfaceMesh {
  int Np = 0;
  double ds = 0.0;
  std::vector<Vec2> x, tangent, normal;
  std::vector<double> kappa, speed;  // curvature, |gamma'(s_j)|

  double perimeter() const;
};

// Throws std::invalid_argument for odd or too small Np.
SurfaceMesh discretize(const BodyShape& shape, int Np);
// Point on the reference curve at an arbitrary parameter.
Vec2 curve_point(const BodyShape& shape, double s);
SurfaceMesh place(const SurfaceMesh& ref, const Vec2& q, double theta);

struct Body {
  Vec2 q = Vec2::Zero();
  double theta = 0.0;  // unwrapped
  int shape = 0;
};

struct Configuration {
  PeriodicDomain domain;
  std::vector<BodyShape> shapes;
  std::vector<Body> bodies;

  std::size_t size() const { return bodies.size(); }
  const BodyShape& shape_of(std::size_t i) const { return shapes.at(bodies[i].shape); }
};

// True if any node of one body lies inside another (radial test, minimum image).
bool bodies_overlap(const Configuration& cfg, int Np);

class CellList {
 public:
  CellList(const std::vector<Vec2>& nodes, const PeriodicDomain& dom, int nbox);

  int nbox() const { return nbox_; }
  double cutoff() const { return rc_; }
  const std::vector<int>& bucket(int cx, int cy) const;
  int bucket_of(int node) const { return cell_of_[node]; }

  // Calls f(i, j, r_ij) once per unordered pair i < j with |r_ij| < r_c (minimum image).
  void for_each_pair(const std::function<void(int, int, const Vec2&)>& f) const;

 private:
  std::vector<Vec2> pts_;
  PeriodicDomain dom_;
  int nbox_;
  double rc_;
  std::vector<std::vector<int>> cells_;
  std::vector<int> cell_of_;
};

// Relative minimum gap d_min / a for generation at phi0 and shrink to phi.
double gap_ratio(double phi, double phi0);

// N disks of radius a = L sqrt(phi / (N pi)) with pairwise gaps >= d_min.
// Throws std::runtime_error naming the achieved count on failure.
Configuration generate_random_config(int N, double phi, double phi0, std::uint64_t seed,
                                     double L = 1.0);

double min_pair_gap(const Configuration& cfg);

std::string config_to_json(const Configuration& cfg);
Configuration config_from_json(const std::string& text);
void save_config(const Configuration& cfg, const std::string& path);
Configuration load_config(const std::string& path);

}  // namespace fbim
