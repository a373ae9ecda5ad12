#include <cmath>
#include <numbers>

#include "doctest.h"
#include "statbonnet/errors.hpp"
#include "statbonnet/grid.hpp"

using namespace statbonnet;

namespace {

Field scalar(const Chart& chart, double (*fn)(std::span<const double>)) {
  return Field::sample(chart, {}, [fn](std::span<const double> x, std::span<double> out) { out[0] = fn(x); });
}

double max_error(const Field& f, double (*exact)(std::span<const double>)) {
  double worst = 0.0;
  for (std::size_t p = 0; p < f.points(); ++p) {
    const auto x = f.chart().point(p);
    worst = std::max(worst, std::abs(f(p, 0) - exact(x)));
  }
  return worst;
}

}  // namespace

TEST_CASE("chart rejects degenerate axes") {
  CHECK_THROWS_AS(Chart({{0.0, 1.0}}, {4}), InvalidArgument);
  CHECK_THROWS_AS(Chart({{1.0, 1.0}}, {9}), InvalidArgument);
  const Chart c({{0.0, 1.0}, {-1.0, 1.0}}, {5, 9});
  CHECK(c.size() == 45);
  CHECK(c.spacing(1) == doctest::Approx(0.25));
  CHECK(c.flat(c.multi(17)) == 17);
  CHECK(c.center() == MultiIndex{2, 4});
}

TEST_CASE("partial: constants, cubics, convergence order") {
  const Chart c9 = Chart::uniform(1, {0.0, 1.0}, 9);
  const Field one = scalar(c9, [](std::span<const double>) { return 3.0; });
  CHECK(partial(one, 0).max_abs() <= 1e-12);

  const Field cube = scalar(c9, [](std::span<const double> x) { return x[0] * x[0] * x[0]; });
  CHECK(max_error(partial(cube, 0), [](std::span<const double> x) { return 3.0 * x[0] * x[0]; }) <= 1e-10);

  auto err = [](int m) {
    const Chart c = Chart::uniform(1, {0.0, std::numbers::pi}, m);
    const Field f = scalar(c, [](std::span<const double> x) { return std::sin(x[0]); });
    return max_error(partial(f, 0), [](std::span<const double> x) { return std::cos(x[0]); });
  };
  CHECK(measured_order(err(17), err(33)) >= 3.5);
  CHECK_THROWS_AS(partial(one, 1), InvalidArgument);
}

TEST_CASE("partial is linear") {
  const Chart c = Chart::uniform(2, {0.0, 1.0}, 11);
  const Field a = scalar(c, [](std::span<const double> x) { return std::sin(x[0]) * x[1]; });
  const Field b = scalar(c, [](std::span<const double> x) { return std::exp(x[1] - x[0]); });
  const Field lhs = partial(2.0 * a + (-3.0) * b, 1);
  const Field rhs = 2.0 * partial(a, 1) + (-3.0) * partial(b, 1);
  CHECK(max_abs_difference(lhs, rhs) <= 1e-12);
}

TEST_CASE("second_partial") {
  const Chart c2 = Chart::uniform(2, {0.0, 1.0}, 9);
  const Field xy = scalar(c2, [](std::span<const double> x) { return x[0] * x[1]; });
  CHECK(max_error(second_partial(xy, 0, 1), [](std::span<const double>) { return 1.0; }) <= 1e-9);
  const Field x2 = scalar(c2, [](std::span<const double> x) { return x[0] * x[0]; });
  CHECK(max_error(second_partial(x2, 0, 0), [](std::span<const double>) { return 2.0; }) <= 1e-9);

  auto err = [](int m) {
    const Chart c = Chart::uniform(1, {0.0, 1.0}, m);
    const Field f = scalar(c, [](std::span<const double> x) { return std::exp(x[0]); });
    return max_error(second_partial(f, 0, 0), [](std::span<const double> x) { return std::exp(x[0]); });
  };
  CHECK(err(33) <= 1e-5);
  CHECK(measured_order(err(33), err(65)) >= 3.5);
  CHECK(measured_order(err(33), err(65)) <= 4.5);

  const Chart c = Chart::uniform(2, {0.0, 1.0}, 17);
  const Field s = scalar(c, [](std::span<const double> x) { return std::sin(x[0]) * std::exp(x[1]); });
  CHECK(max_abs_difference(second_partial(s, 0, 1), second_partial(s, 1, 0)) <= 1e-9);
}

TEST_CASE("path_integrate") {
  const Chart c = Chart::uniform(2, {0.0, 1.0}, 9);
  const Field constant = Field::sample(c, {2}, [](std::span<const double>, std::span<double> w) {
    w[0] = 2.5;
    w[1] = 0.0;
  });
  CHECK(path_integrate(constant, {{0, 0}, {{0, 1}}})[0] == doctest::Approx(2.5 * 0.125).epsilon(1e-14));

  const Field exact = Field::sample(c, {2}, [](std::span<const double> x, std::span<double> w) {
    w[0] = x[1];
    w[1] = x[0];
  });
  const LatticePath loop{{3, 4}, {{0, 1}, {1, 1}, {0, -1}, {1, -1}}};
  CHECK(std::abs(path_integrate(exact, loop)[0]) <= 1e-12);

  const Chart line = Chart::uniform(1, {0.0, 1.0}, 17);
  const Field two_x = Field::sample(line, {1}, [](std::span<const double> x, std::span<double> w) { w[0] = 2 * x[0]; });
  LatticePath full{{0}, {}};
  for (int k = 0; k < 16; ++k) full.steps.push_back({0, 1});
  CHECK(std::abs(path_integrate(two_x, full)[0] - 1.0) <= 1e-10);

  // reversal gives exactly the opposite value
  const Field curl = Field::sample(c, {2}, [](std::span<const double> x, std::span<double> w) {
    w[0] = std::sin(3 * x[1]) * x[0];
    w[1] = std::cos(x[0] * x[1]);
  });
  const LatticePath wander{{1, 1}, {{0, 1}, {0, 1}, {1, 1}, {0, -1}, {1, 1}, {1, 1}, {0, 1}}};
  CHECK(path_integrate(curl, wander)[0] + path_integrate(curl, wander.reversed(c))[0] == 0.0);

  CHECK_THROWS_AS(path_integrate(exact, {{0, 0}, {{0, -1}}}), InvalidArgument);
}

TEST_CASE("potential_from_closed_form and closedness") {
  const Chart c = Chart::uniform(2, {0.0, 1.0}, 17);
  const Field dx = Field::sample(c, {2}, [](std::span<const double>, std::span<double> w) {
    w[0] = 1.0;
    w[1] = 0.0;
  });
  const Field fx = potential_from_closed_form(dx, {0, 0});
  CHECK(max_error(fx, [](std::span<const double> x) { return x[0]; }) <= 1e-12);

  const MultiIndex base{5, 3};
  const double x0 = c.coordinate(0, 5), y0 = c.coordinate(1, 3);
  const Field exact = Field::sample(c, {2}, [](std::span<const double> x, std::span<double> w) {
    w[0] = x[1];
    w[1] = x[0];
  });
  const Field fxy = potential_from_closed_form(exact, base);
  double worst = 0.0;
  for (std::size_t p = 0; p < c.size(); ++p) {
    const auto x = c.point(p);
    worst = std::max(worst, std::abs(fxy(p, 0) - (x[0] * x[1] - x0 * y0)));
  }
  CHECK(worst <= 1e-8);
  CHECK(closedness_residual(exact) <= 1e-12);

  // y dx: the two staircase orders differ by the enclosed area
  const Field ydx = Field::sample(c, {2}, [](std::span<const double> x, std::span<double> w) {
    w[0] = x[1];
    w[1] = 0.0;
  });
  CHECK(path_dependence(ydx, {0, 0}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(closedness_residual(ydx) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(closedness_residual(Field(c, {2})) == 0.0);

  const Chart c33 = Chart::uniform(2, {0.0, 1.0}, 33);
  const Field dF = Field::sample(c33, {2}, [](std::span<const double> x, std::span<double> w) {
    w[0] = std::cos(x[0]) * std::cos(x[1]);
    w[1] = -std::sin(x[0]) * std::sin(x[1]);
  });
  CHECK(closedness_residual(dF) <= 1e-6);
  const Field F = potential_from_closed_form(dF, c33.center());
  double recover = 0.0;
  for (int a = 0; a < 2; ++a) {
    const Field d = partial(F, a);
    for (std::size_t p = 0; p < c33.size(); ++p) recover = std::max(recover, std::abs(d(p, 0) - dF(p, a)));
  }
  CHECK(recover <= 1e-6);
}

TEST_CASE("vector-valued forms integrate per component") {
  const Chart c = Chart::uniform(2, {-1.0, 1.0}, 9);
  const Field w = Field::sample(c, {2, 2}, [](std::span<const double> x, std::span<double> out) {
    out[0] = 1.0;
    out[1] = 0.0;
    out[2] = 2 * x[0];
    out[3] = 3.0;
  });
  const Field F = potential_from_closed_form(w, c.center());
  CHECK(F.value_shape() == std::vector<int>{2});
  const std::size_t p = c.flat({8, 0});
  CHECK(F(p, 0) == doctest::Approx(1.0));
  CHECK(F(p, 1) == doctest::Approx(1.0 - 3.0));
}

TEST_CASE("Lagrange interpolation reproduces quintics") {
  const Chart c = Chart::uniform(2, {0.0, 2.0}, 9);
  auto poly = [](double x, double y) { return std::pow(x, 5) - 2 * x * y * y + std::pow(y, 4); };
  const Field f = Field::sample(c, {}, [&](std::span<const double> x, std::span<double> o) { o[0] = poly(x[0], x[1]); });
  const LagrangeInterpolator interp(f, 6);
  double out[1];
  const double at[2] = {0.37, 1.91};
  REQUIRE(interp.evaluate(at, out));
  CHECK(out[0] == doctest::Approx(poly(0.37, 1.91)).epsilon(1e-12));
  const double outside[2] = {2.5, 0.0};
  CHECK_FALSE(interp.evaluate(outside, out));
}
