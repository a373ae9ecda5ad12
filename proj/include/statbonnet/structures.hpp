#pragma once

// Statistical structures (g, nabla): axiom checks, dual and alpha-connections,
// curvature in the Ricci-identity convention and the curvature duality
// relation between a connection and its dual.

#include <cstddef>
#include <vector>

#include "statbonnet/grid.hpp"

namespace statbonnet {

/// Metric g_ij (value shape [n,n]) and connection coefficients Gamma_ij^k
/// (value shape [n,n,n], lower-lower-upper) on a shared chart.
struct StatisticalStructure {
  Field g;
  Field gamma;

  int dim() const noexcept { return g.chart().dim(); }
  const Chart& chart() const noexcept { return g.chart(); }
  /// Throws ShapeMismatch unless g is [n,n] and gamma is [n,n,n] on one chart.
  void validate() const;
};

inline constexpr double kDefaultAxiomTolerance = 1e-6;

struct StatisticalReport {
  double torsion_residual = 0.0;
  double nabla_g_residual = 0.0;
  double min_metric_eigenvalue = 0.0;
  MultiIndex worst_metric_point;  // where the smallest eigenvalue occurs

  bool passes(double tolerance = kDefaultAxiomTolerance) const {
    return torsion_residual <= tolerance && nabla_g_residual <= tolerance && min_metric_eigenvalue > 0.0;
  }
};

/// torsion = max |G_ij^k - G_ji^k|;
/// nabla_g = max |nabla_i g_jk - nabla_j g_ik| with
/// nabla_i g_jk = d_i g_jk - G_ij^l g_lk - G_ik^l g_jl.
StatisticalReport check_statistical(const StatisticalStructure& s);

/// Pointwise inverse g^ij; throws NumericalFailure at the first point where
/// g is not positive definite.
Field inverse_metric(const Field& g);

/// Gamma_ijk = g_kl Gamma_ij^l.
Field lower_connection(const Field& gamma, const Field& g);
/// Gamma_ij^k = g^kl Gamma_ijl.
Field raise_connection(const Field& gamma_lower, const Field& g_inverse);

/// Coefficients of nabla* defined by X g(Y,Z) = g(nabla_X Y, Z) + g(Y, nabla*_X Z):
/// Gamma*_ijk = d_i g_jk - Gamma_ikj, returned with the last index raised.
Field dual_connection(const StatisticalStructure& s);

/// (1+alpha)/2 Gamma + (1-alpha)/2 Gamma*.
Field alpha_connection(const StatisticalStructure& s, double alpha);

/// Christoffel symbols of g, computed directly from derivatives of the metric.
Field levi_civita(const Field& g);

struct CurvatureField {
  Field R;      // R_ij^k_l, value shape [n,n,n,n]
  Field R_low;  // R_ijkl = g_km R_ij^m_l
};

/// R_ij^k_l = d_i G_jl^k - d_j G_il^k + G_im^k G_jl^m - G_jm^k G_il^m,
/// so that (nabla_i nabla_j - nabla_j nabla_i) X^k = R_ij^k_l X^l.
CurvatureField curvature(const Field& gamma, const Field& g);

/// max |R_ijkl + R*_ijlk| where R* is the curvature of the dual connection.
double curvature_duality_residual(const StatisticalStructure& s);

}  // namespace statbonnet
