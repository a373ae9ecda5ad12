#include <cmath>
#include <numbers>
#include <string>

#include "doctest.h"
#include "statbonnet/errors.hpp"
#include "statbonnet/fixtures.hpp"
#include "statbonnet/gcr_bundle.hpp"
#include "statbonnet/structures.hpp"
#include "statbonnet/tensor.hpp"

using namespace statbonnet;

namespace {

// max |d_i g_jk(FD) - d_i g_jk(closed form)|
double metric_derivative_error(const Fixture& fx) {
  const int n = fx.chart.dim();
  const Field exact = Field::sample(fx.chart, {n, n, n}, fx.metric_derivative);
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    const Field d = partial(fx.structure.g, i);
    for (std::size_t p = 0; p < fx.chart.size(); ++p)
      for (int jk = 0; jk < n * n; ++jk)
        worst = std::max(worst, std::abs(d(p, jk) - exact(p, static_cast<std::size_t>(i * n * n + jk))));
  }
  return worst;
}

}  // namespace

TEST_CASE("fixture names") {
  CHECK(fixture_names().size() == 6);
  for (const std::string& name : fixture_names()) {
    CAPTURE(name);
    const Fixture fx = fixture(name, 9);
    CHECK(fx.name.rfind(name, 0) == 0);
    CHECK(fx.structure.g.chart().size() == fx.chart.size());
  }
  CHECK(fixture("exp_potential(3)", 5).chart.dim() == 3);
  CHECK(fixture(" euclidean ( 1 ) ", 5).chart.dim() == 1);
  CHECK(fixture("paraboloid(1)", 5).immersion->f.value_shape() == std::vector<int>{2});
  CHECK_THROWS_AS(fixture("torus", 9), InvalidArgument);
  CHECK_THROWS_AS(fixture("sphere2(3)", 9), InvalidArgument);
  CHECK_THROWS_AS(fixture("euclidean(0)", 9), InvalidArgument);
  CHECK_THROWS_AS(fixture("euclidean(", 9), InvalidArgument);
}

TEST_CASE("closed-form values") {
  using std::numbers::pi;
  const Fixture s = fixture("sphere2", 33);
  const std::size_t p = s.chart.flat({8, 5});
  const double th = s.chart.point(p)[0];
  CHECK(th == doctest::Approx(3.0 * pi / 8.0));
  CHECK(s.structure.g(p, 3) == doctest::Approx(std::pow(std::sin(th), 2)));
  CHECK(s.structure.gamma(p, idx3(2, 1, 1, 0)) == doctest::Approx(-std::sin(2.0 * th) / 2.0));
  CHECK(s.structure.gamma(p, idx3(2, 0, 1, 1)) == doctest::Approx(1.0 / std::tan(th)));
  CHECK(max_abs_difference(s.extrinsic.h, s.extrinsic.h_star) == 0.0);
  CHECK(s.extrinsic.tau.max_abs() == 0.0);
  // R_thph th ph = sin^2; 1/2 at theta = pi/4
  const Field R = curvature(s.structure.gamma, s.structure.g).R_low;
  const std::size_t edge = s.chart.flat({0, 16});
  CHECK(R(edge, idx4(2, 0, 1, 0, 1)) == doctest::Approx(0.5).epsilon(1e-5));

  const Fixture e = fixture("exp_potential(1)", 17);
  const std::size_t zero = e.chart.flat(e.chart.center());
  CHECK(e.structure.g(zero, 0) == 1.0);
  CHECK(e.potential->psi(zero, 0) == 1.0);
  CHECK(e.pair->phi(zero, 0) == 1.0);

  const Fixture gauss = fixture("gaussian1d", 33);
  const std::size_t q = gauss.chart.flat({24, 16});
  CHECK(gauss.structure.g(q, 0) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(gauss.structure.g(q, 1) == doctest::Approx(0.04).epsilon(1e-14));
  CHECK(gauss.structure.g(q, 3) == doctest::Approx(0.088).epsilon(1e-14));
  CHECK(gauss.potential->psi(q, 0) == doctest::Approx(-0.77971895621705019).epsilon(1e-14));

  const Fixture par = fixture("paraboloid(2)", 9);
  const std::size_t corner = par.chart.flat({8, 0});
  CHECK(par.immersion->f(corner, 2) == 1.0);
  CHECK(par.pair->phi(corner, 0) == 1.0);
  CHECK(par.pair->phi(corner, 2) == -1.0);
}

TEST_CASE("fixture evaluators agree with their samplings") {
  for (const std::string& name : fixture_names()) {
    CAPTURE(name);
    const double coarse = metric_derivative_error(fixture(name, 33));
    const double fine = metric_derivative_error(fixture(name, 65));
    CHECK(fine <= 1e-6);
    // polynomial metrics are differentiated exactly
    if (coarse > 1e-12) CHECK(std::log2(coarse / fine) >= 3.5);
  }
}

TEST_CASE("fixture structures") {
  CHECK(gcr_residuals(fixture("euclidean", 17).structure, fixture("euclidean", 17).extrinsic).total() == 0.0);
  const Fixture s = fixture("sphere2", 65);
  const GcrReport rep = gcr_residuals(s.structure, s.extrinsic);
  CHECK(rep.gauss_norm.max <= 1e-5);
  CHECK(rep.codazzi_h_norm.max <= 1e-5);
  CHECK(rep.codazzi_hstar_norm.max <= 1e-5);
  CHECK(rep.ricci_norm.max <= 1e-5);
  for (const std::string& name : fixture_names()) {
    CAPTURE(name);
    const Fixture fx = fixture(name, 65);
    CHECK(check_statistical(fx.structure).passes());
    if (fx.pair) {
      const LauritzenReport rep = verify_lauritzen(*fx.pair, fx.structure);
      CHECK(rep.metric_residual <= 1e-6);
      CHECK(rep.connection_residual <= 1e-6);
    }
  }
}
