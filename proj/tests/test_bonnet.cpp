#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "statbonnet/bonnet.hpp"
#include "statbonnet/errors.hpp"
#include "statbonnet/fixtures.hpp"
#include "statbonnet/tensor.hpp"

using namespace statbonnet;

namespace {

double worst(const LauritzenReport& r) { return std::max(r.metric_residual, r.connection_residual); }

// max | |f - c|^2 - R^2 | for the least-squares sphere through f.
double sphere_fit_residual(const Field& f) {
  const std::size_t m = f.points();
  Matrix A(static_cast<Eigen::Index>(m), 4);
  Vector b(static_cast<Eigen::Index>(m));
  for (std::size_t p = 0; p < m; ++p) {
    double sq = 0.0;
    for (int k = 0; k < 3; ++k) {
      A(static_cast<Eigen::Index>(p), k) = 2.0 * f(p, k);
      sq += f(p, k) * f(p, k);
    }
    A(static_cast<Eigen::Index>(p), 3) = 1.0;
    b[static_cast<Eigen::Index>(p)] = sq;
  }
  const Vector x = A.colPivHouseholderQr().solve(b);
  const Vector c = x.head(3);
  const double R2 = x[3] + c.squaredNorm();
  double out = 0.0;
  for (std::size_t p = 0; p < m; ++p) {
    double d = 0.0;
    for (int k = 0; k < 3; ++k) d += std::pow(f(p, k) - c[k], 2);
    out = std::max(out, std::abs(d - R2));
  }
  return out;
}

Matrix gauge() {
  Matrix M(3, 3);
  M << 1.2, 0.3, -0.1, 0.0, 0.9, 0.4, 0.2, -0.3, 1.1;
  return M;
}

}  // namespace

TEST_CASE("transport with a zero connection keeps the base frame") {
  const Fixture fx = fixture("euclidean", 9);
  const BundleConnection c = bundle_connection(fx.structure, fx.extrinsic);
  Matrix B(3, 3);
  B << 2.0, 0.1, 0.0, 0.0, 1.0, 0.3, 0.5, 0.0, 1.0;
  const FrameField fr = parallel_frame(c, fx.chart.center(), B);
  for (std::size_t p = 0; p < fx.chart.size(); ++p) CHECK((to_matrix(fr.E.at(p), 3, 3) - B).cwiseAbs().maxCoeff() == 0.0);
  CHECK(fr.holonomy_residual == 0.0);
  CHECK(fr.duality_deviation <= 1e-14);

  const ThetaForms th = theta_form(parallel_frame(c, fx.chart.center(), Matrix::Identity(3, 3)), 2);
  for (std::size_t p = 0; p < fx.chart.size(); ++p) {
    CHECK(th.theta(p, idx2(2, 0, 0)) == 1.0);
    CHECK(th.theta(p, idx2(2, 0, 1)) == 0.0);
    CHECK(th.theta(p, idx2(2, 1, 1)) == 1.0);
    CHECK(th.theta(p, idx2(2, 2, 0)) == 0.0);
    CHECK(th.theta(p, idx2(2, 2, 1)) == 0.0);
  }
  CHECK(th.closedness == 0.0);
  CHECK(th.closedness_star == 0.0);
}

TEST_CASE("scalar constant connection") {
  const Chart chart({{0.0, 2.0}}, {65});
  const double a = 0.7;
  BundleConnection c{1, 0, Field(chart, {1, 1, 1}), Field(chart, {1, 1, 1}), Field(chart, {1, 1})};
  for (std::size_t p = 0; p < chart.size(); ++p) {
    c.A(p, 0) = a;
    c.A_star(p, 0) = -a;
    c.g(p, 0) = 1.0;
  }
  CHECK(bundle_duality_residual(c) == 0.0);
  Matrix e0(1, 1);
  e0(0, 0) = 1.5;
  const MultiIndex base{20};
  const FrameField fr = parallel_frame(c, base, e0);
  double err = 0.0;
  for (std::size_t p = 0; p < chart.size(); ++p) {
    const double x = chart.point(p)[0], x0 = chart.coordinate(0, 20);
    err = std::max(err, std::abs(fr.E(p, 0) - 1.5 * std::exp(-a * (x - x0))));
    CHECK(fr.E_star(p, 0) * fr.E(p, 0) == doctest::Approx(1.0).epsilon(1e-8));
  }
  CHECK(err <= 1e-8);
}

TEST_CASE("dual base frame") {
  const Matrix I = Matrix::Identity(3, 3);
  CHECK((dual_base_frame(I, I) - I).cwiseAbs().maxCoeff() == 0.0);
  Matrix G = I;
  G(1, 1) = 4.0;
  Matrix B = I;
  B(1, 1) = 0.5;  // G-orthonormal
  CHECK((dual_base_frame(B, G) - B).cwiseAbs().maxCoeff() <= 1e-15);
  Matrix D = I;
  D(0, 0) = 2.0;
  const Matrix Ds = dual_base_frame(D, I);
  CHECK(Ds(0, 0) == doctest::Approx(0.5));
  CHECK(Ds(1, 1) == doctest::Approx(1.0));
  CHECK_THROWS_AS(dual_base_frame(Matrix::Zero(3, 3), I), NumericalFailure);
  CHECK_THROWS_AS(dual_base_frame(I, Matrix::Identity(2, 2)), ShapeMismatch);

  const Fixture fx = fixture("sphere2", 33);
  const BundleConnection c = bundle_connection(fx.structure, fx.extrinsic);
  const FrameField fr = parallel_frame(c, {7, 21}, gauge());
  CHECK(fr.duality_deviation <= 1e-5);
}

TEST_CASE("sphere transport, theta and holonomy") {
  std::vector<double> hol, closed;
  for (int m : {33, 65}) {
    const Fixture fx = fixture("sphere2", m);
    const BundleConnection c = bundle_connection(fx.structure, fx.extrinsic);
    const FrameField fr = parallel_frame(c, fx.chart.center(), Matrix::Identity(3, 3), {}, kDefaultIntegrabilityTolerance);
    const ThetaForms th = theta_form(fr, 2);
    hol.push_back(fr.holonomy_residual);
    closed.push_back(std::max(th.closedness, th.closedness_star));
    if (m == 65) {
      CHECK(fr.holonomy_residual <= 1e-5);
      CHECK(std::max(th.closedness, th.closedness_star) <= 1e-4);
      const double h = fx.chart.spacing(0);
      CHECK(fr.holonomy_residual <= 10.0 * (gcr_residuals(fx.structure, fx.extrinsic).max() + h * h * h));
    }
  }
  CHECK(measured_order(hol[0], hol[1]) >= 3.0);
  CHECK(measured_order(closed[0], closed[1]) >= 2.5);
}

TEST_CASE("euclidean reconstruction") {
  const Fixture fx = fixture("euclidean", 17);
  const BonnetResult r = bonnet_embed(fx.structure, fx.extrinsic);
  CHECK(worst(r.report) <= 1e-9);
  const auto base = fx.chart.point(fx.chart.flat(fx.chart.center()));
  for (std::size_t p = 0; p < fx.chart.size(); ++p) {
    const auto x = fx.chart.point(p);
    for (int i = 0; i < 2; ++i) {
      CHECK(r.pair.f(p, i) == doctest::Approx(x[i] - base[i]).epsilon(1e-12).scale(1.0));
      CHECK(r.pair.phi(p, i) == doctest::Approx(x[i] - base[i]).epsilon(1e-12).scale(1.0));
    }
    CHECK(std::abs(r.pair.f(p, 2)) <= 1e-14);
  }
}

TEST_CASE("sphere reconstruction") {
  std::vector<double> res;
  for (int m : {33, 65}) {
    const Fixture fx = fixture("sphere2", m);
    const BonnetResult r = bonnet_embed(fx.structure, fx.extrinsic);
    res.push_back(worst(r.report));
    if (m == 65) {
      CHECK(r.report.metric_residual <= 5e-3);
      CHECK(r.report.connection_residual <= 5e-3);
      CHECK(r.report.immersion());
      CHECK(sphere_fit_residual(r.pair.f) <= 1e-2);
      const std::size_t b = fx.chart.flat(fx.chart.center());
      for (int A = 0; A < 3; ++A) {
        CHECK(r.pair.f(b, A) == 0.0);
        CHECK(r.pair.phi(b, A) == 0.0);
      }
      const double bound = 10.0 * std::max(r.theta.closedness, r.theta.closedness_star) * fx.chart.diameter();
      CHECK(r.path_dependence_f <= bound);
      CHECK(r.path_dependence_phi <= bound);

      BonnetOptions swapped;
      swapped.axis_order = {1, 0};
      const BonnetResult s = bonnet_embed(fx.structure, fx.extrinsic, swapped);
      CHECK(max_abs_difference(s.pair.f, r.pair.f) <= 1e-3);
      CHECK(max_abs_difference(s.pair.phi, r.pair.phi) <= 1e-3);

      const StatisticalStructure dual{fx.structure.g, dual_connection(fx.structure)};
      const LauritzenReport d = verify_lauritzen(dual_pair(r.pair), dual);
      CHECK(worst(d) <= 2.0 * worst(r.report));
      CHECK(worst(r.report) <= 2.0 * worst(d));
    }
  }
  CHECK(measured_order(res[0], res[1]) >= 1.5);
}

TEST_CASE("gauge covariance") {
  const Fixture fx = fixture("sphere2", 33);
  const BonnetResult r = bonnet_embed(fx.structure, fx.extrinsic);
  BonnetOptions opt;
  opt.base_frame = gauge();
  const BonnetResult g = bonnet_embed(fx.structure, fx.extrinsic, opt);
  const Matrix Minv = gauge().inverse();
  const Matrix Mt = gauge().transpose();
  double df = 0.0, dphi = 0.0;
  for (std::size_t p = 0; p < fx.chart.size(); ++p) {
    const Vector f = Eigen::Map<const Vector>(r.pair.f.at(p).data(), 3);
    const Vector phi = Eigen::Map<const Vector>(r.pair.phi.at(p).data(), 3);
    const Vector gf = Eigen::Map<const Vector>(g.pair.f.at(p).data(), 3);
    const Vector gphi = Eigen::Map<const Vector>(g.pair.phi.at(p).data(), 3);
    df = std::max(df, (gf - Minv * f).cwiseAbs().maxCoeff());
    dphi = std::max(dphi, (gphi - Mt * phi).cwiseAbs().maxCoeff());
  }
  CHECK(df <= 1e-10);
  CHECK(dphi <= 1e-10);
  CHECK(worst(g.report) <= 2.0 * worst(r.report));
  CHECK(worst(r.report) <= 2.0 * worst(g.report));
}

TEST_CASE("hessian reconstruction with r = 0") {
  const Fixture fx = fixture("exp_potential(2)", 33);
  REQUIRE(fx.extrinsic.r == 0);
  const BonnetResult r = bonnet_embed(fx.structure, fx.extrinsic);
  CHECK(r.pair.ambient_dim() == 2);
  CHECK(worst(r.report) <= 1e-5);
  // f = xi - xi_base exactly, phi = eta - eta_base up to quadrature error
  const std::size_t b = fx.chart.flat(fx.chart.center());
  for (std::size_t p = 0; p < fx.chart.size(); ++p) {
    const auto x = fx.chart.point(p);
    for (int i = 0; i < 2; ++i) {
      CHECK(r.pair.f(p, i) == doctest::Approx(x[i]).epsilon(1e-12).scale(1.0));
      CHECK(r.pair.phi(p, i) == doctest::Approx(std::exp(x[i]) - 1.0).epsilon(1e-6).scale(1.0));
    }
  }
  CHECK(r.pair.f(b, 0) == 0.0);
}

TEST_CASE("integrability gate") {
  const Fixture fx = fixture("sphere2", 33);
  ExtrinsicData e = fx.extrinsic;
  e.h = 1.1 * e.h;
  CHECK_THROWS_AS(bonnet_embed(fx.structure, e), IntegrabilityError);
  const BundleConnection c = bundle_connection(fx.structure, e);
  CHECK_THROWS_AS(parallel_frame(c, fx.chart.center(), Matrix::Identity(3, 3), {}, 1e-3), IntegrabilityError);
  CHECK_THROWS_AS(parallel_frame(c, {40, 0}, Matrix::Identity(3, 3)), InvalidArgument);
  CHECK_THROWS_AS(parallel_frame(c, fx.chart.center(), Matrix::Identity(2, 2)), ShapeMismatch);
}
