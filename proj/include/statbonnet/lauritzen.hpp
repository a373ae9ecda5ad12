#pragma once

// Pairs of maps (f, phi): M -> V x V* and the equations that make them a
// statistical embedding: g_ij = d_i f^A d_j phi_A, Gamma_ijk = d_i d_j f^A d_k phi_A.

#include "statbonnet/grid.hpp"
#include "statbonnet/structures.hpp"

namespace statbonnet {

struct LauritzenPair {
  Field f;    // [N] components f^A
  Field phi;  // [N] components phi_A

  const Chart& chart() const noexcept { return f.chart(); }
  int ambient_dim() const { return f.value_shape().empty() ? 0 : f.value_shape()[0]; }
  /// Throws ShapeMismatch unless f and phi are [N] fields on one chart.
  void validate() const;
};

/// Rank certificate threshold: sigma_min > kRankThreshold * sigma_max.
inline constexpr double kRankThreshold = 1e-8;

struct LauritzenReport {
  double metric_residual = 0.0;      // max |g_ij - d_i f . d_j phi|
  double connection_residual = 0.0;  // max |Gamma_ijk - d_i d_j f . d_k phi|
  double pairing_asymmetry = 0.0;    // max |d_i f . d_j phi - d_j f . d_i phi|
  double min_rank_ratio_f = 0.0;     // min over the grid of sigma_min / sigma_max of df
  double min_rank_ratio_phi = 0.0;
  bool immersion() const { return min_rank_ratio_f > kRankThreshold; }
};

LauritzenReport verify_lauritzen(const LauritzenPair& p, const StatisticalStructure& s);

/// (f, phi) -> (phi, f), which embeds the dual structure (g, Gamma*).
LauritzenPair dual_pair(const LauritzenPair& p);

/// F = (f, (1-alpha)/2 phi), Phi = ((1+alpha)/2 phi, f) into V + V*, which
/// embeds (g, Gamma^(alpha)). The input is first verified against `s`;
/// InvalidArgument if either residual exceeds `tolerance`, NumericalFailure
/// if F is not an immersion.
LauritzenPair alpha_pair(const LauritzenPair& p, const StatisticalStructure& s, double alpha, double tolerance);

}  // namespace statbonnet
