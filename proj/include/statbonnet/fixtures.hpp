#pragma once

// Analytic test manifolds. Closed-form values in the comments are
// reproduced by tools/oracles/derive_fixture_values.py.

#include <optional>
#include <string>
#include <vector>

#include "statbonnet/affine.hpp"
#include "statbonnet/gcr_bundle.hpp"
#include "statbonnet/grid.hpp"
#include "statbonnet/hessian.hpp"
#include "statbonnet/lauritzen.hpp"
#include "statbonnet/structures.hpp"

namespace statbonnet {

struct Fixture {
  std::string name;
  Chart chart;
  StatisticalStructure structure;                // sampled from closed forms
  ExtrinsicData extrinsic;                       // codimension 0 when the fixture has none
  Field::PointFunction metric_derivative;        // [n,n,n]: d_i g_jk
  std::optional<HessePotential> potential;       // Hessian fixtures
  std::optional<LauritzenPair> pair;             // closed-form statistical embedding
  std::optional<AffineImmersion> immersion;      // affine fixtures
};

/// euclidean(n):     [-1,1]^n, g = delta, Gamma = 0, r = 1 zero extrinsic data, pair (x, x)
/// exp_potential(n): [-1,1]^n, psi = sum e^xi, g = diag e^xi, Gamma = 0, pair (xi, e^xi)
/// sphere2:          [pi/4, 3pi/4] x [0, pi/2], round metric, Levi-Civita, r = 1,
///                   h = h* = g, tau = 0; immersion f = unit sphere, xi = -f
/// paraboloid(n):    [-1,1]^n, f = (x, |x|^2/2), xi = -e_{n+1}, g = delta, Gamma = 0
/// cone_codim2:      u in [0,1], f = (cos s, sin s, 1), s = u + 0.3 u^2, xi = -e_z, eta = f
/// gaussian1d:       natural parameters theta1 in [-1,1], theta2 in [-3,-2],
///                   psi = -theta1^2/(4 theta2) - log(-2 theta2)/2
/// Names accept an optional dimension, "exp_potential(3)"; the default is 2.
/// `resolution` points per axis. InvalidArgument for unknown names.
Fixture fixture(const std::string& name, int resolution = 33);

std::vector<std::string> fixture_names();

}  // namespace statbonnet
