#include "statbonnet/fixtures.hpp"

#include <cmath>
#include <numbers>
#include <regex>

#include "statbonnet/errors.hpp"
#include "statbonnet/tensor.hpp"

namespace statbonnet {

namespace {

using Span = std::span<const double>;
using Out = std::span<double>;

Field zero_connection(const Chart& c) {
  const int n = c.dim();
  return Field(c, {n, n, n});
}

void zero(Span, Out out) { std::fill(out.begin(), out.end(), 0.0); }

ConvexFunction quadratic_potential() {
  return {[](const Vector& x) { return 0.5 * x.squaredNorm(); }, [](const Vector& x) -> Vector { return x; },
          [](const Vector& x) -> Matrix { return Matrix::Identity(x.size(), x.size()); }};
}

ConvexFunction exp_potential_fn() {
  return {[](const Vector& x) { return x.array().exp().sum(); },
          [](const Vector& x) -> Vector { return x.array().exp().matrix(); },
          [](const Vector& x) -> Matrix { return x.array().exp().matrix().asDiagonal(); }};
}

// sum (eta log eta - eta); +infinity outside eta > 0
ConvexFunction exp_conjugate_fn() {
  return {[](const Vector& e) {
            if ((e.array() <= 0.0).any()) return std::numeric_limits<double>::infinity();
            return (e.array() * e.array().log() - e.array()).sum();
          },
          [](const Vector& e) -> Vector { return e.array().log().matrix(); },
          [](const Vector& e) -> Matrix { return e.array().inverse().matrix().asDiagonal(); }};
}

ConvexFunction gaussian_fn() {
  return {[](const Vector& t) {
            if (!(t[1] < 0.0)) return std::numeric_limits<double>::infinity();
            return -t[0] * t[0] / (4.0 * t[1]) - 0.5 * std::log(-2.0 * t[1]);
          },
          [](const Vector& t) -> Vector {
            Vector g(2);
            g << -t[0] / (2.0 * t[1]), t[0] * t[0] / (4.0 * t[1] * t[1]) - 1.0 / (2.0 * t[1]);
            return g;
          },
          [](const Vector& t) -> Matrix {
            const double a = t[0], b = t[1];
            Matrix h(2, 2);
            h << -1.0 / (2.0 * b), a / (2.0 * b * b), a / (2.0 * b * b), (b - a * a) / (2.0 * b * b * b);
            return h;
          }};
}

// psi*(eta) = -1/2 - log(eta2 - eta1^2)/2
ConvexFunction gaussian_conjugate_fn() {
  return {[](const Vector& e) {
            const double d = e[1] - e[0] * e[0];
            if (!(d > 0.0)) return std::numeric_limits<double>::infinity();
            return -0.5 - 0.5 * std::log(d);
          },
          [](const Vector& e) -> Vector {
            const double d = e[1] - e[0] * e[0];
            Vector g(2);
            g << e[0] / d, -0.5 / d;
            return g;
          },
          [](const Vector& e) -> Matrix {
            const double d = e[1] - e[0] * e[0];
            Matrix h(2, 2);
            h << (d + 2.0 * e[0] * e[0]) / (d * d), -e[0] / (d * d), -e[0] / (d * d), 0.5 / (d * d);
            return h;
          }};
}

Vector as_vector(Span x) { return Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size())); }

Fixture hessian_fixture(std::string name, const Chart& chart, const ConvexFunction& psi,
                        std::optional<ConvexFunction> conjugate, Field::PointFunction dmetric) {
  const int n = chart.dim();
  Field g = Field::sample(chart, {n, n}, [&](Span x, Out out) { from_matrix(psi.hessian(as_vector(x)), out); });
  Field potential = Field::sample(chart, {}, [&](Span x, Out out) { out[0] = psi.value(as_vector(x)); });
  Field eta = Field::sample(chart, {n}, [&](Span x, Out out) {
    const Vector v = psi.gradient(as_vector(x));
    std::copy(v.data(), v.data() + n, out.begin());
  });
  Field coords = Field::sample(chart, {n}, [](Span x, Out out) { std::copy(x.begin(), x.end(), out.begin()); });
  return {std::move(name),
          chart,
          {std::move(g), zero_connection(chart)},
          ExtrinsicData::zero(chart, 0),
          std::move(dmetric),
          HessePotential{std::move(potential), psi, std::move(conjugate)},
          LauritzenPair{std::move(coords), std::move(eta)},
          std::nullopt};
}

Fixture euclidean(int n, int m) {
  const Chart chart = Chart::uniform(n, {-1.0, 1.0}, m);
  Field g = Field::sample(chart, {n, n}, [n](Span, Out out) {
    for (int i = 0; i < n; ++i) out[idx2(n, i, i)] = 1.0;
  });
  Field coords = Field::sample(chart, {n}, [](Span x, Out out) { std::copy(x.begin(), x.end(), out.begin()); });
  Field potential = Field::sample(chart, {}, [](Span x, Out out) {
    double s = 0.0;
    for (double v : x) s += v * v;
    out[0] = 0.5 * s;
  });
  return {"euclidean(" + std::to_string(n) + ")",
          chart,
          {std::move(g), zero_connection(chart)},
          ExtrinsicData::zero(chart, 1),
          zero,
          HessePotential{std::move(potential), quadratic_potential(), quadratic_potential()},
          LauritzenPair{coords, coords},
          std::nullopt};
}

Fixture exp_potential(int n, int m) {
  const Chart chart = Chart::uniform(n, {-1.0, 1.0}, m);
  return hessian_fixture("exp_potential(" + std::to_string(n) + ")", chart, exp_potential_fn(), exp_conjugate_fn(),
                         [n](Span x, Out out) {
                           std::fill(out.begin(), out.end(), 0.0);
                           for (int i = 0; i < n; ++i) out[idx3(n, i, i, i)] = std::exp(x[i]);
                         });
}

Fixture gaussian1d(int m) {
  const Chart chart({{-1.0, 1.0}, {-3.0, -2.0}}, {m, m});
  return hessian_fixture("gaussian1d", chart, gaussian_fn(), gaussian_conjugate_fn(), [](Span x, Out out) {
    const double a = x[0], b = x[1];
    // d_0 g, then d_1 g, row-major [2,2] blocks
    out[0] = 0.0;
    out[1] = 1.0 / (2.0 * b * b);
    out[2] = out[1];
    out[3] = -a / (b * b * b);
    out[4] = 1.0 / (2.0 * b * b);
    out[5] = -a / (b * b * b);
    out[6] = out[5];
    out[7] = (1.5 * a * a - b) / (b * b * b * b);
  });
}

Fixture sphere2(int m) {
  using std::numbers::pi;
  const Chart chart({{pi / 4.0, 3.0 * pi / 4.0}, {0.0, pi / 2.0}}, {m, m});
  auto metric = [](Span x, Out out) {
    const double s = std::sin(x[0]);
    out[0] = 1.0;
    out[1] = 0.0;
    out[2] = 0.0;
    out[3] = s * s;
  };
  Field g = Field::sample(chart, {2, 2}, metric);
  Field gamma = Field::sample(chart, {2, 2, 2}, [](Span x, Out out) {
    std::fill(out.begin(), out.end(), 0.0);
    const double s = std::sin(x[0]), c = std::cos(x[0]);
    out[idx3(2, 1, 1, 0)] = -s * c;
    out[idx3(2, 0, 1, 1)] = c / s;
    out[idx3(2, 1, 0, 1)] = c / s;
  });
  Field h = Field::sample(chart, {1, 2, 2}, metric);
  Field tau(chart, {1, 1, 2});
  Field f = Field::sample(chart, {3}, [](Span x, Out out) {
    out[0] = std::sin(x[0]) * std::cos(x[1]);
    out[1] = std::sin(x[0]) * std::sin(x[1]);
    out[2] = std::cos(x[0]);
  });
  Field xi = -1.0 * f;
  return {"sphere2",
          chart,
          {std::move(g), std::move(gamma)},
          ExtrinsicData{1, h, h, std::move(tau)},
          [](Span x, Out out) {
            std::fill(out.begin(), out.end(), 0.0);
            out[idx3(2, 0, 1, 1)] = 2.0 * std::sin(x[0]) * std::cos(x[0]);
          },
          std::nullopt,
          std::nullopt,
          AffineImmersion{1, std::move(f), std::move(xi)}};
}

Fixture paraboloid(int n, int m) {
  const Chart chart = Chart::uniform(n, {-1.0, 1.0}, m);
  Field g = Field::sample(chart, {n, n}, [n](Span, Out out) {
    for (int i = 0; i < n; ++i) out[idx2(n, i, i)] = 1.0;
  });
  Field f = Field::sample(chart, {n + 1}, [n](Span x, Out out) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      out[i] = x[i];
      s += x[i] * x[i];
    }
    out[n] = 0.5 * s;
  });
  Field xi = Field::sample(chart, {n + 1}, [n](Span, Out out) { out[n] = -1.0; });
  Field phi = Field::sample(chart, {n + 1}, [n](Span x, Out out) {
    for (int i = 0; i < n; ++i) out[i] = x[i];
    out[n] = -1.0;
  });
  return {"paraboloid(" + std::to_string(n) + ")",
          chart,
          {std::move(g), zero_connection(chart)},
          ExtrinsicData::zero(chart, 0),
          zero,
          std::nullopt,
          LauritzenPair{f, std::move(phi)},
          AffineImmersion{1, f, std::move(xi)}};
}

Fixture cone_codim2(int m) {
  const Chart chart({{0.0, 1.0}}, {m});
  // s(u) = u + 0.3 u^2: g = k = s'^2 = (3u+5)^2/25, Gamma = s''/s' = 3/(3u+5)
  Field g = Field::sample(chart, {1, 1}, [](Span x, Out out) { out[0] = std::pow((3.0 * x[0] + 5.0) / 5.0, 2); });
  Field gamma = Field::sample(chart, {1, 1, 1}, [](Span x, Out out) { out[0] = 3.0 / (3.0 * x[0] + 5.0); });
  auto s = [](double u) { return u + 0.3 * u * u; };
  Field f = Field::sample(chart, {3}, [&](Span x, Out out) {
    out[0] = std::cos(s(x[0]));
    out[1] = std::sin(s(x[0]));
    out[2] = 1.0;
  });
  Field xi = Field::sample(chart, {3}, [](Span, Out out) { out[2] = -1.0; });
  Field phi = Field::sample(chart, {3}, [&](Span x, Out out) {
    out[0] = std::cos(s(x[0]));
    out[1] = std::sin(s(x[0]));
    out[2] = -1.0;
  });
  return {"cone_codim2",
          chart,
          {std::move(g), std::move(gamma)},
          ExtrinsicData::zero(chart, 0),
          [](Span x, Out out) { out[0] = 6.0 * (3.0 * x[0] + 5.0) / 25.0; },
          std::nullopt,
          LauritzenPair{f, std::move(phi)},
          AffineImmersion{2, f, std::move(xi)}};
}

}  // namespace

std::vector<std::string> fixture_names() {
  return {"euclidean", "exp_potential", "sphere2", "paraboloid", "cone_codim2", "gaussian1d"};
}

Fixture fixture(const std::string& name, int resolution) {
  static const std::regex pattern(R"(^\s*([a-z_0-9]+?)\s*(?:\(\s*(\d+)\s*\))?\s*$)");
  std::smatch match;
  if (!std::regex_match(name, match, pattern)) throw InvalidArgument("unknown fixture '" + name + "'");
  const std::string base = match[1];
  const bool has_dim = match[2].matched;
  const int n = has_dim ? std::stoi(match[2]) : 2;
  if (n < 1 || n > 4) throw InvalidArgument("fixture dimension must be between 1 and 4");
  auto fixed = [&](const char* what) {
    if (has_dim) throw InvalidArgument(std::string("fixture ") + what + " has a fixed dimension");
  };
  if (base == "euclidean") return euclidean(n, resolution);
  if (base == "exp_potential") return exp_potential(n, resolution);
  if (base == "paraboloid") return paraboloid(n, resolution);
  if (base == "sphere2") {
    fixed("sphere2");
    return sphere2(resolution);
  }
  if (base == "cone_codim2") {
    fixed("cone_codim2");
    return cone_codim2(resolution);
  }
  if (base == "gaussian1d") {
    fixed("gaussian1d");
    return gaussian1d(resolution);
  }
  throw InvalidArgument("unknown fixture '" + name + "'");
}

}  // namespace statbonnet
