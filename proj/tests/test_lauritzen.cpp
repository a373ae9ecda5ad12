#include <cmath>

#include "doctest.h"
#include "statbonnet/errors.hpp"
#include "statbonnet/fixtures.hpp"
#include "statbonnet/lauritzen.hpp"
#include "statbonnet/structures.hpp"

using namespace statbonnet;

namespace {

Field shifted(Field f, double c) {
  for (double& v : f.data()) v += c;
  return f;
}

double worst(const LauritzenReport& r) { return std::max(r.metric_residual, r.connection_residual); }

}  // namespace

TEST_CASE("verify_lauritzen on closed-form pairs") {
  const Fixture e = fixture("euclidean", 17);
  const LauritzenReport re = verify_lauritzen(*e.pair, e.structure);
  CHECK(re.metric_residual <= 1e-9);
  CHECK(re.connection_residual <= 1e-9);
  CHECK(re.immersion());

  const Fixture x = fixture("exp_potential(2)", 33);
  const LauritzenReport rx = verify_lauritzen(*x.pair, x.structure);
  CHECK(rx.metric_residual <= 1e-5);
  CHECK(rx.connection_residual <= 1e-5);
  CHECK(rx.pairing_asymmetry <= 1e-6);
  CHECK(rx.min_rank_ratio_phi > kRankThreshold);

  const LauritzenPair doubled{x.pair->f, 2.0 * x.pair->phi};
  CHECK(verify_lauritzen(doubled, x.structure).metric_residual == doctest::Approx(std::exp(1.0)).epsilon(1e-5));

  for (const char* name : {"paraboloid(2)", "cone_codim2"}) {
    CAPTURE(name);
    const Fixture fx = fixture(name, 33);
    const LauritzenReport r = verify_lauritzen(*fx.pair, fx.structure);
    CHECK(worst(r) <= 1e-5);
    CHECK(r.immersion());
  }
}

TEST_CASE("translation invariance") {
  const Fixture x = fixture("exp_potential(2)", 33);
  const LauritzenReport a = verify_lauritzen(*x.pair, x.structure);
  const LauritzenPair moved{shifted(x.pair->f, 3.5), shifted(x.pair->phi, -1.25)};
  const LauritzenReport b = verify_lauritzen(moved, x.structure);
  CHECK(std::abs(a.metric_residual - b.metric_residual) <= 1e-12);
  CHECK(std::abs(a.connection_residual - b.connection_residual) <= 1e-12);
}

TEST_CASE("dual pair") {
  const Fixture x = fixture("exp_potential(2)", 33);
  const LauritzenPair d = dual_pair(*x.pair);
  const LauritzenPair dd = dual_pair(d);
  CHECK(max_abs_difference(dd.f, x.pair->f) == 0.0);
  CHECK(max_abs_difference(dd.phi, x.pair->phi) == 0.0);
  const StatisticalStructure dual{x.structure.g, dual_connection(x.structure)};
  CHECK(worst(verify_lauritzen(d, dual)) <= 1e-5);

  const Fixture e = fixture("euclidean", 17);
  CHECK(worst(verify_lauritzen(dual_pair(*e.pair), e.structure)) <= 1e-9);
}

TEST_CASE("alpha pairs") {
  const Fixture x = fixture("exp_potential(2)", 33);
  const StatisticalStructure& s = x.structure;
  const double input = worst(verify_lauritzen(*x.pair, s));
  for (double alpha : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
    CAPTURE(alpha);
    const LauritzenPair a = alpha_pair(*x.pair, s, alpha, 1e-5);
    CHECK(a.ambient_dim() == 2 * x.pair->ambient_dim());
    const LauritzenReport r = verify_lauritzen(a, {s.g, alpha_connection(s, alpha)});
    CHECK(worst(r) <= std::max(10.0 * input, 1e-12));
    CHECK(worst(r) <= 1e-5);
    CHECK(r.immersion());

    // mutually dual: alpha_pair at -alpha, swapped, embeds the dual of Gamma^(-alpha)
    const LauritzenPair b = dual_pair(alpha_pair(*x.pair, s, -alpha, 1e-5));
    const StatisticalStructure minus{s.g, alpha_connection(s, -alpha)};
    const LauritzenReport rb = verify_lauritzen(b, {s.g, dual_connection(minus)});
    CHECK(worst(rb) <= 2.0 * worst(r) + 1e-10);
    CHECK(worst(r) <= 2.0 * worst(rb) + 1e-10);
  }

  const LauritzenPair one = alpha_pair(*x.pair, s, 1.0, 1e-5);
  const int N = x.pair->ambient_dim();
  for (std::size_t p = 0; p < x.chart.size(); ++p) {
    for (int A = 0; A < N; ++A) {
      CHECK(one.f(p, A) == x.pair->f(p, A));
      CHECK(one.f(p, N + A) == 0.0);
      CHECK(one.phi(p, A) == x.pair->phi(p, A));
      CHECK(one.phi(p, N + A) == x.pair->f(p, A));
    }
  }
}

TEST_CASE("errors") {
  const Fixture x = fixture("exp_potential(2)", 33);
  const Fixture y = fixture("exp_potential(2)", 17);
  CHECK_THROWS_AS(verify_lauritzen(LauritzenPair{x.pair->f, y.pair->phi}, x.structure), ShapeMismatch);
  CHECK_THROWS_AS(verify_lauritzen(*y.pair, x.structure), ShapeMismatch);

  const LauritzenPair doubled{x.pair->f, 2.0 * x.pair->phi};
  CHECK_THROWS_AS(alpha_pair(doubled, x.structure, 0.0, 1e-5), InvalidArgument);

  // f constant along axis 1: not an immersion
  Field flat = x.pair->f;
  for (std::size_t p = 0; p < x.chart.size(); ++p) flat(p, 1) = 0.0;
  const LauritzenReport r = verify_lauritzen(LauritzenPair{flat, x.pair->phi}, x.structure);
  CHECK_FALSE(r.immersion());
}
