#pragma once

// Reconstruction of a statistical embedding from GCR data: parallel dual
// frames of the flat bundle connection, the closed forms theta and theta*,
// and their potentials f and phi.

#include <optional>
#include <vector>

#include "statbonnet/gcr_bundle.hpp"
#include "statbonnet/grid.hpp"
#include "statbonnet/lauritzen.hpp"
#include "statbonnet/tensor.hpp"

namespace statbonnet {

/// Parallel frames: column A of E (value shape [N,N]) holds the components
/// of e_A in the product frame (d_j, nu_a); likewise E_star for e*_A.
struct FrameField {
  Field E;
  Field E_star;
  MultiIndex base;
  Matrix base_frame;
  Matrix base_dual;
  /// max over unit 2-faces of |H - I| for transport around the face, taken
  /// over both connections.
  double holonomy_residual = 0.0;
  /// max over the grid of |E^T G E* - I|.
  double duality_deviation = 0.0;
  /// Largest condition number of E over the grid.
  double max_condition = 0.0;
};

inline constexpr double kDefaultIntegrabilityTolerance = 1e-3;
inline constexpr double kMaxFrameCondition = 1e8;

/// Transports base_frame with nabla and its G-dual with nabla* along the
/// staircase sweep for `axis_order` (classical 4-stage Runge-Kutta, A
/// interpolated at half-steps). When `integrability_tolerance` is given the
/// bundle curvature is checked first and IntegrabilityError raised above it.
FrameField parallel_frame(const BundleConnection& c, const MultiIndex& base, const Matrix& base_frame,
                          std::span<const int> axis_order = {},
                          std::optional<double> integrability_tolerance = std::nullopt);

/// B* = G^-1 B^-T, so that G(e_A, e*_B) = delta_AB at the base point.
Matrix dual_base_frame(const Matrix& base_frame, const Matrix& fiber_metric);

struct ThetaForms {
  Field theta;       // [N, n]: E theta_i = (delta_i, 0)
  Field theta_star;  // [N, n]: E* theta*_i = (delta_i, 0)
  double closedness = 0.0;
  double closedness_star = 0.0;
};

/// Per-point linear solves; NumericalFailure where cond(E) > 1e8.
ThetaForms theta_form(const FrameField& frames, int n);

struct BonnetOptions {
  std::optional<MultiIndex> base;          // default: chart center
  std::optional<Matrix> base_frame;        // default: identity
  std::vector<int> axis_order;             // default: 0, 1, ...
  double integrability_tolerance = kDefaultIntegrabilityTolerance;
};

struct BonnetResult {
  LauritzenPair pair;
  LauritzenReport report;
  FrameField frames;
  ThetaForms theta;
  double gcr_max = 0.0;
  /// Max difference of f (resp. phi) between the two staircase orders.
  double path_dependence_f = 0.0;
  double path_dependence_phi = 0.0;
};

/// Full pipeline; IntegrabilityError when the GCR residuals exceed the
/// integrability tolerance. Verification residuals are reported, not raised.
BonnetResult bonnet_embed(const StatisticalStructure& s, const ExtrinsicData& e, const BonnetOptions& options = {});

}  // namespace statbonnet
