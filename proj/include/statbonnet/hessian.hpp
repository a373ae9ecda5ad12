#pragma once

// Hessian (flat statistical) structures: potentials in affine coordinates,
// their Hessian metrics, the Legendre transform to dual coordinates and
// flatness checks.

#include <functional>
#include <optional>

#include "statbonnet/grid.hpp"
#include "statbonnet/structures.hpp"
#include "statbonnet/tensor.hpp"

namespace statbonnet {

/// A smooth strictly convex function with closed-form derivatives.
struct ConvexFunction {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  std::function<Matrix(const Vector&)> hessian;
};

/// Legendre conjugate psi*(eta) = sup_xi (xi.eta - psi(xi)), evaluated by a
/// damped Newton solve of grad psi(xi) = eta started from `initial_guess`.
/// Its gradient is the maximizer xi(eta) and its Hessian the inverse of the
/// Hessian of psi there, so the result can be conjugated again.
ConvexFunction convex_conjugate(const ConvexFunction& psi, const Vector& initial_guess);

/// Potential psi sampled on a chart of affine coordinates, optionally with
/// analytic evaluators (psi and, when known in closed form, psi*) used by the
/// exact-derivative diagnostics.
struct HessePotential {
  Field psi;
  std::optional<ConvexFunction> analytic;
  std::optional<ConvexFunction> analytic_conjugate;

  const Chart& chart() const noexcept { return psi.chart(); }
};

/// g_ij = d_i d_j psi by finite differences and Gamma = 0. Throws
/// NumericalFailure naming the grid point where the Hessian is not
/// positive definite.
StatisticalStructure hessian_metric(const HessePotential& p);

struct LegendreDiagnostics {
  /// max |d psi*/d eta - xi| on an eta-grid re-gridded by interpolation.
  double gradient_residual_interpolated = 0.0;
  /// max |(d2 psi*/d eta2)(d2 psi/d xi2) - I| at corresponding points.
  double inverse_hessian_residual = 0.0;
  /// Exact-derivative versions, present when an analytic evaluator exists.
  std::optional<double> gradient_residual_analytic;
  std::optional<double> inverse_hessian_residual_analytic;
  /// max |psi** - psi - c| over the grid (Legendre applied twice).
  std::optional<double> double_legendre_residual;
  /// max |numeric conjugate - closed-form psi*| at eta(grid).
  std::optional<double> conjugate_value_residual;
  /// Every eta_A strictly increases along axis A (gradient map injective
  /// on the chart).
  bool monotone = true;
  std::optional<Chart> eta_grid;  // regular grid used by the interpolated check
};

struct LegendreResult {
  Field eta;        // eta_A = d psi / d xi^A at every grid point, value shape [n]
  Field psi_star;   // xi.eta - psi, reported at the scattered points eta(grid)
  LegendreDiagnostics diagnostics;
};

/// Throws NumericalFailure when the gradient map fails to be injective
/// (non-positive Hessian or non-monotone along an axis).
LegendreResult legendre_transform(const HessePotential& p);

/// max |R_ij^k_l| of a torsion-free connection.
double flatness_residual(const Field& gamma, const Chart& chart);

}  // namespace statbonnet
