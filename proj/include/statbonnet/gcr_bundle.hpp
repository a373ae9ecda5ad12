#pragma once

// Extrinsic data of a statistical submanifold, the Gauss-Codazzi-Ricci
// residuals, and the pair of dual connections on E = TM + R^r whose flatness
// they express.
//
// Normal indices a, b range over an orthonormal frame of R^r, which is
// identified with its dual; they are never raised or lowered.

#include "statbonnet/grid.hpp"
#include "statbonnet/structures.hpp"

namespace statbonnet {

/// h^a_ij (shape [r,n,n]), h*_aij ([r,n,n]) and tau^a_bi ([r,r,n]).
struct ExtrinsicData {
  int r = 0;
  Field h;
  Field h_star;
  Field tau;

  /// All-zero data of codimension r on `chart`.
  static ExtrinsicData zero(const Chart& chart, int r);
  /// Throws ShapeMismatch on bad shapes and InvalidArgument if h or h* is
  /// not symmetric in its last two indices to 1e-12.
  void validate(const Chart& chart) const;
};

struct ResidualNorm {
  double max = 0.0;
  double rms = 0.0;
};

struct GcrReport {
  Field gauss;          // [n,n,n,n] (i,j,k,l)
  Field codazzi_h;      // [r,n,n,n] (a,i,j,l)
  Field codazzi_hstar;  // [r,n,n,n] (a,i,j,k), k raised
  Field ricci;          // [r,r,n,n] (a,b,i,j)
  ResidualNorm gauss_norm, codazzi_h_norm, codazzi_hstar_norm, ricci_norm;
  /// max |second Codazzi via nabla (k lowered) - its nabla* formulation|.
  double codazzi_hstar_cross_check = 0.0;

  double max() const;
  /// Sum of the four max-norms.
  double total() const;
};

/// Gauss:      R_ijkl - (h*_aik h^a_jl - h*_ajk h^a_il)
/// Codazzi h:  d_i h^a_jl - d_j h^a_il - G_il^m h^a_jm + G_jl^m h^a_im + tau^a_bi h^b_jl - tau^a_bj h^b_il
/// Codazzi h*: d_i h*_aj^k - d_j h*_ai^k + G_im^k h*_aj^m - G_jm^k h*_ai^m + h*_bi^k tau^b_aj - h*_bj^k tau^b_ai
/// Ricci:      d_i tau^a_bj - d_j tau^a_bi + tau^a_ci tau^c_bj - tau^a_cj tau^c_bi - h^a_il h*_bj^l + h^a_jl h*_bi^l
/// For a torsion-free connection the derivative terms are the antisymmetrized
/// covariant derivatives of the equations.
GcrReport gcr_residuals(const StatisticalStructure& s, const ExtrinsicData& e);

/// Matrix-valued connection forms on E in the frame (d_j, nu_a):
/// nabla_i s = d_i s + A_i s and nabla*_i s = d_i s + A*_i s.
struct BundleConnection {
  int n = 0;
  int r = 0;
  Field A;       // [n, n+r, n+r], A(i, K, L)
  Field A_star;  // [n, n+r, n+r]
  Field g;       // metric block of the fiber metric

  const Chart& chart() const noexcept { return g.chart(); }
  int rank() const noexcept { return n + r; }
};

/// A_i:  [[G_il^j, h*_bi^j], [-h^a_ik, tau^a_bi]]
/// A*_i: [[G*_il^j, h^b_i^j], [-h*_aik, -tau^b_ai]]
BundleConnection bundle_connection(const StatisticalStructure& s, const ExtrinsicData& e);

/// G = blockdiag(g, I) at every grid point, shape [n+r, n+r].
Field fiber_metric(const BundleConnection& c);

/// max |A_i^T G + G A*_i - d_i G|: zero when the two connections are dual.
double bundle_duality_residual(const BundleConnection& c);

struct BundleCurvature {
  Field F;  // [n, n, n+r, n+r], F_ij = d_i A_j - d_j A_i + [A_i, A_j]
  double max = 0.0;
};

BundleCurvature bundle_curvature(const BundleConnection& c);
/// Curvature of the dual connection A*.
BundleCurvature dual_bundle_curvature(const BundleConnection& c);

/// max |(G F_ij)_KL + (G F*_ij)_LK|.
double bundle_curvature_duality_residual(const BundleConnection& c);

}  // namespace statbonnet
