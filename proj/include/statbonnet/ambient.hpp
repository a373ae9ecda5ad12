#pragma once

// Ambient Hessian potential around the image of a Lauritzen pair: the
// pulled-back potential psi0, a tubular chart (x, t) -> f(x) + t^a nu_a(x),
// the extension psi(x,t) = psi0 + t^a <phi, nu_a> + C |t|^2 and the structure
// it induces back on M.

#include <optional>

#include "statbonnet/grid.hpp"
#include "statbonnet/lauritzen.hpp"
#include "statbonnet/structures.hpp"

namespace statbonnet {

struct PullbackPotential {
  Field omega;  // [n], omega_i = d_i f . phi
  Field psi0;   // scalar, psi0(base) = 0
  double closedness = 0.0;
  MultiIndex base;
};

inline constexpr double kDefaultClosednessTolerance = 1e-3;

/// IntegrabilityError when closedness_residual(omega) exceeds `tolerance`.
PullbackPotential pullback_potential(const LauritzenPair& p, std::optional<MultiIndex> base = std::nullopt,
                                     double tolerance = kDefaultClosednessTolerance);

struct TubularChart {
  Chart tube;          // base axes followed by r normal axes t^a in [-epsilon, epsilon]
  Field normal_frame;  // on the base chart, [r, N]: Euclidean-orthonormal complement of span d_i f
  double epsilon = 0.0;
  int r = 0;
  /// Smallest ambient distance between distinct tube points, and the
  /// separation threshold it was certified against.
  double min_separation = 0.0;
  double separation_threshold = 0.0;

  const Chart& base() const noexcept { return normal_frame.chart(); }
  /// Tube point at (base point q, t = 0).
  std::size_t on_manifold(std::size_t q) const;
};

/// Normal frame nu = P W (W^T P W)^(-1/2), where P projects onto the
/// orthogonal complement of the tangent plane and W is the complement at the
/// chart center; smooth in x without sign choices. InvalidArgument if the
/// tube map is not injective on the grid (shrink epsilon) or its Jacobian is
/// singular.
TubularChart build_tube(const LauritzenPair& p, double epsilon, int normal_points = 5);

struct AmbientPotential {
  TubularChart tube;
  Field psi0;
  double C = 0.0;
  Field psi;          // on the tube chart
  Field gradient_xi;  // [N] on the tube chart
  Field hessian_xi;   // [N,N] on the tube chart
  double min_eigenvalue = 0.0;
  double margin = 0.0;
  /// max |psi(x,0) - psi0(x)| and max |d psi/d xi (x,0) - phi(x)|.
  double restriction_error = 0.0;
  double gradient_condition = 0.0;
};

/// Extension for one fixed C (no positivity requirement).
AmbientPotential evaluate_extension(const LauritzenPair& p, const Field& psi0, const TubularChart& tube, double C);

inline constexpr double kMaxExtensionConstant = 1073741824.0;  // 2^30

/// Doubles C from 1 until the xi-Hessian exceeds `margin` on the whole tube
/// (default 0.05 * min eigenvalue of the pairing metric). NumericalFailure
/// when C would exceed 2^30.
AmbientPotential extend_potential(const LauritzenPair& p, const Field& psi0, double epsilon,
                                  std::optional<double> margin = std::nullopt);

/// extend_potential, halving epsilon up to `halvings` times while no C
/// reaches the margin. The half-width used is returned in tube.epsilon.
AmbientPotential extend_potential_shrinking(const LauritzenPair& p, const Field& psi0, double epsilon,
                                            std::optional<double> margin = std::nullopt, int halvings = 3);

struct InducedReport {
  StatisticalStructure induced;
  double metric_residual = 0.0;      // max |g~ - g|
  double connection_residual = 0.0;  // max |Gamma~_ijk - Gamma_ijk| (all lower)
};

/// g~_ij = d_i f H d_j f and Gamma~_ijk = d_i d_j f H d_k f with H the
/// xi-Hessian on M, compared with `s`.
InducedReport induced_structure(const AmbientPotential& a, const LauritzenPair& p, const StatisticalStructure& s);

}  // namespace statbonnet
