#pragma once

// Codimension-1 and -2 affine immersions: decomposition of D in the frame
// (d_i f, xi[, eta = f]), the equiaffine test, the conormal map and the
// resulting Lauritzen pair.

#include <optional>

#include "statbonnet/grid.hpp"
#include "statbonnet/lauritzen.hpp"
#include "statbonnet/structures.hpp"

namespace statbonnet {

struct AffineImmersion {
  int codim = 1;  // 1 or 2; for 2 the position field eta = f is the second transversal
  Field f;        // [n+codim]
  Field xi;       // [n+codim]

  const Chart& chart() const noexcept { return f.chart(); }
  void validate() const;
};

struct AffineDecomposition {
  Field gamma;  // [n,n,n]  Gamma_ij^k
  Field g;      // [n,n]    affine fundamental form
  Field S;      // [n,n]    S_i^k: d_i xi = S_i^k d_k f + tau_i xi [+ mu_i eta]
  Field tau;    // [n]
  std::optional<Field> k;   // [n,n], codim 2
  std::optional<Field> mu;  // [n], codim 2
  double reconstruction_residual = 0.0;
  double max_condition = 0.0;  // of the frame matrix
};

/// d_i d_j f = Gamma_ij^k d_k f - g_ij xi [- k_ij eta], solved per point with
/// partial pivoting. NumericalFailure at the first point where the frame is
/// singular; InvalidArgument when eta = f vanishes (chart through the origin).
AffineDecomposition decompose(const AffineImmersion& im);

struct AffineStatisticalReport {
  double tau_max = 0.0;
  std::optional<double> mu_max;
  double min_metric_eigenvalue = 0.0;
  StatisticalReport statistical;
  bool equiaffine(double tolerance) const { return tau_max <= tolerance; }
};

AffineStatisticalReport check_statistical_affine(const AffineDecomposition& d);

struct ConormalMap {
  Field phi;                          // [n+codim]
  double tangency_residual = 0.0;     // max |phi . d_i f|
  double normalization_residual = 0.0;  // max |phi . xi - 1|
  std::optional<double> position_residual;  // max |phi . eta|, codim 2
  double xi_phi_residual = 0.0;       // max |xi . d_i phi|
  std::optional<double> eta_phi_residual;  // max |eta . d_i phi|, codim 2
  double min_rank_ratio = 0.0;        // of d phi
};

ConormalMap conormal_map(const AffineImmersion& im);

inline constexpr double kDefaultEquiaffineTolerance = 1e-6;

struct AffineLauritzen {
  LauritzenPair pair;
  AffineDecomposition decomposition;
  AffineStatisticalReport check;
  ConormalMap conormal;
  LauritzenReport report;  // against the decomposed (g, Gamma)
};

/// (f, conormal); IntegrabilityError when max |tau| exceeds `tau_tolerance`.
AffineLauritzen affine_to_lauritzen(const AffineImmersion& im, double tau_tolerance = kDefaultEquiaffineTolerance);

}  // namespace statbonnet
