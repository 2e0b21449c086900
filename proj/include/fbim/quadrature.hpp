#pragma once

#include <functional>
#include <vector>

#include "fbim/geometry.hpp"
#include "fbim/kernels.hpp"

namespace fbim {

// Hybrid Gauss-trapezoidal end correction for a logarithmic singularity.
// With unit spacing: trapezoid nodes with 0 < |k| < a are dropped, auxiliary
// nodes at +-v_j carry weights w_j, and the smooth density at v_j is
// interpolated from the `order` trapezoid nodes nearest to v_j (ties go to
// the node nearer the singular point). The target node itself may be used.
struct AlpertRule {
  int order = 0;
  int a = 0;
  int band = 0;  // largest |offset| touched by any stencil
  std::vector<double> v, w;
  std::vector<std::vector<int>> offsets;     // interpolation nodes for v_j
  std::vector<std::vector<double>> interp;   // Lagrange weights on offsets[j]

  // Throws std::invalid_argument unless order is 4 or 8.
  static AlpertRule get(int order);
  int min_nodes() const { return 2 * band + 2; }
};

// Corrected periodic integral of K(s) sigma(s) over [0, 2pi) where K has a log
// singularity at s_t = t ds. K is evaluated at arbitrary parameters; sigma is
// known only at the nodes.
double alpert_periodic_integral(const AlpertRule& rule, int Np, int t,
                                const std::function<double(double)>& K,
                                const std::vector<double>& sigma);

// Banded correction for one body in reference pose. Entry (t, k) couples target
// node t to source node t + k (mod Np), k in [-band, band].
struct SingularBlock {
  int Np = 0;
  int band = 0;
  double r_alpert = 0.0;
  std::vector<Mat2> entries;  // size Np * (2 band + 1)

  const Mat2& at(int t, int k) const { return entries[t * (2 * band + 1) + k + band]; }
  Mat2& at(int t, int k) { return entries[t * (2 * band + 1) + k + band]; }
};

// Throws std::invalid_argument if Np < rule.min_nodes().
SingularBlock alpert_reference(const BodyShape& shape, const SurfaceMesh& mesh_ref,
                               const AlpertRule& rule, const SplitParams& sp);

// out_t += R A_ref(t,k) R^T mu_{t+k}; mu and out hold 2 Np entries.
void apply_rotated(const SingularBlock& block, double theta, const double* mu, double* out);

// Rotated block entries in the same banded layout.
SingularBlock rotate_block(const SingularBlock& block, double theta);

double correction_radius(const AlpertRule& rule, const SurfaceMesh& mesh);

}  // namespace fbim
