#include "statbonnet/hessian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "statbonnet/errors.hpp"

namespace statbonnet {

namespace {

constexpr int kNewtonIterations = 100;
constexpr int kMaxHalvings = 60;

// Minimizes psi(xi) - xi.eta by damped Newton; nullopt when no stationary
// point is reached (eta outside the gradient image).
std::optional<Vector> solve_gradient(const ConvexFunction& psi, const Vector& eta, const Vector& guess) {
  Vector xi = guess;
  auto objective = [&](const Vector& x) { return psi.value(x) - x.dot(eta); };
  double obj = objective(xi);
  if (!std::isfinite(obj)) return std::nullopt;
  const double target = 1e-13 * (1.0 + eta.norm());
  for (int it = 0; it < kNewtonIterations; ++it) {
    const Vector r = psi.gradient(xi) - eta;
    if (!r.allFinite()) return std::nullopt;
    if (r.norm() <= target) return xi;
    Eigen::LLT<Matrix> llt(psi.hessian(xi));
    if (llt.info() != Eigen::Success) return std::nullopt;
    const Vector d = llt.solve(r);
    const double slope = r.dot(d);
    double t = 1.0;
    bool accepted = false;
    for (int k = 0; k < kMaxHalvings; ++k, t *= 0.5) {
      const Vector trial = xi - t * d;
      const double v = objective(trial);
      if (std::isfinite(v) && v <= obj - 1e-4 * t * slope) {
        xi = trial;
        obj = v;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // The objective no longer resolves the decrease; accept if the
      // gradient is already at roundoff level.
      return r.norm() <= 1e-8 * (1.0 + eta.norm()) ? std::optional<Vector>(xi) : std::nullopt;
    }
  }
  const Vector r = psi.gradient(xi) - eta;
  return r.norm() <= 1e-8 * (1.0 + eta.norm()) ? std::optional<Vector>(xi) : std::nullopt;
}

Vector require_solution(const ConvexFunction& psi, const Vector& eta, const Vector& guess) {
  auto xi = solve_gradient(psi, eta, guess);
  if (!xi) throw NumericalFailure("convex_conjugate: gradient map cannot be inverted at the requested point");
  return *xi;
}

Vector coordinates(const Chart& chart, std::size_t p) {
  Vector x(chart.dim());
  for (int a = 0; a < chart.dim(); ++a) x[a] = chart.coordinate(a, chart.index_along(p, a));
  return x;
}

}  // namespace

ConvexFunction convex_conjugate(const ConvexFunction& psi, const Vector& initial_guess) {
  ConvexFunction out;
  out.value = [psi, initial_guess](const Vector& eta) {
    auto xi = solve_gradient(psi, eta, initial_guess);
    // sup is +infinity outside the image of the gradient map
    if (!xi) return std::numeric_limits<double>::infinity();
    return xi->dot(eta) - psi.value(*xi);
  };
  out.gradient = [psi, initial_guess](const Vector& eta) -> Vector {
    return require_solution(psi, eta, initial_guess);
  };
  out.hessian = [psi, initial_guess](const Vector& eta) -> Matrix {
    const Vector xi = require_solution(psi, eta, initial_guess);
    const Matrix h = psi.hessian(xi);
    return h.llt().solve(Matrix::Identity(h.rows(), h.cols()));
  };
  return out;
}

StatisticalStructure hessian_metric(const HessePotential& p) {
  const Chart& chart = p.chart();
  const int n = chart.dim();
  if (!p.psi.value_shape().empty()) throw ShapeMismatch("hessian_metric: potential must be scalar");
  Field g(chart, {n, n});
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const Field d = second_partial(p.psi, i, j);
      for (std::size_t q = 0; q < chart.size(); ++q) {
        g(q, idx2(n, i, j)) = d(q, 0);
        g(q, idx2(n, j, i)) = d(q, 0);
      }
    }
  }
  for (std::size_t q = 0; q < chart.size(); ++q) {
    const Matrix h = to_matrix(g.at(q), n, n);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(h, Eigen::EigenvaluesOnly);
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    if (!(eig.eigenvalues().minCoeff() > 1e-12 * scale)) {
      std::string where;
      for (double x : chart.point(q)) where += (where.empty() ? "" : ", ") + std::to_string(x);
      throw NumericalFailure("hessian_metric: Hessian of the potential is not positive definite at (" + where + ")", q);
    }
  }
  return {std::move(g), Field(chart, {n, n, n})};
}

namespace {

// Checks that eta_A strictly increases along axis A on every grid line.
bool gradient_map_monotone(const Field& eta) {
  const Chart& chart = eta.chart();
  const int n = chart.dim();
  for (std::size_t q = 0; q < chart.size(); ++q) {
    for (int a = 0; a < n; ++a) {
      if (chart.index_along(q, a) + 1 >= chart.count(a)) continue;
      if (!(eta(q + chart.stride(a), a) > eta(q, a))) return false;
    }
  }
  return true;
}

struct InterpolatedCheck {
  Chart grid;
  double residual;
};

// Re-grids psi* onto a regular eta-grid inside the image: each node is
// mapped back to xi by Newton on the interpolated gradient map, psi* is
// formed there and differentiated on the eta-grid.
InterpolatedCheck interpolated_gradient_check(const Field& psi, const Field& eta, const Field& g) {
  const Chart& chart = psi.chart();
  const int n = chart.dim();
  const int width = 1 + n + n * n;
  Field packed(chart, {width});
  for (std::size_t q = 0; q < chart.size(); ++q) {
    packed(q, 0) = psi(q, 0);
    for (int a = 0; a < n; ++a) packed(q, 1 + a) = eta(q, a);
    for (int c = 0; c < n * n; ++c) packed(q, 1 + n + c) = g(q, c);
  }
  const LagrangeInterpolator interp(packed, 6);

  const std::size_t center = chart.flat(chart.center());
  const Vector xi_center = coordinates(chart, center);
  Vector lo = Vector::Constant(n, std::numeric_limits<double>::infinity());
  Vector hi = -lo;
  for (std::size_t q = 0; q < chart.size(); ++q) {
    for (int a = 0; a < n; ++a) {
      lo[a] = std::min(lo[a], eta(q, a));
      hi[a] = std::max(hi[a], eta(q, a));
    }
  }
  Vector eta_center(n);
  for (int a = 0; a < n; ++a) eta_center[a] = eta(center, a);

  std::vector<double> buf(static_cast<std::size_t>(width));
  auto invert = [&](const Vector& target, Vector& xi, double& psi_value) {
    xi = xi_center;
    for (int it = 0; it < 200; ++it) {
      if (!interp.evaluate({xi.data(), static_cast<std::size_t>(n)}, buf)) return false;
      Vector r(n);
      for (int a = 0; a < n; ++a) r[a] = buf[1 + a] - target[a];
      if (r.norm() <= 1e-14 * (1.0 + target.norm())) break;
      const Matrix jac = Eigen::Map<const RowMajorMatrix>(buf.data() + 1 + n, n, n);
      const Vector step = jac.partialPivLu().solve(r);
      double t = 1.0;
      bool inside = false;
      for (int k = 0; k < 30 && !inside; ++k, t *= 0.5) {
        const Vector trial = xi - t * step;
        inside = interp.evaluate({trial.data(), static_cast<std::size_t>(n)}, buf);
        if (inside) xi = trial;
      }
      if (!inside) return false;
      if (it == 199) return false;
    }
    if (!interp.evaluate({xi.data(), static_cast<std::size_t>(n)}, buf)) return false;
    Vector r(n);
    for (int a = 0; a < n; ++a) r[a] = buf[1 + a] - target[a];
    if (r.norm() > 1e-10 * (1.0 + target.norm())) return false;
    psi_value = buf[0];
    return true;
  };

  std::vector<int> counts(n);
  for (int a = 0; a < n; ++a) counts[a] = 2 * (chart.count(a) - 1) + 1;
  double shrink = 0.8;
  for (int attempt = 0; attempt < 20; ++attempt, shrink *= 0.8) {
    std::vector<Interval> ranges(n);
    for (int a = 0; a < n; ++a) {
      ranges[a] = {eta_center[a] + shrink * (lo[a] - eta_center[a]), eta_center[a] + shrink * (hi[a] - eta_center[a])};
    }
    Chart grid(ranges, counts);
    Field psi_star(grid, {});
    Field xi_at(grid, {n});
    bool ok = true;
    for (std::size_t q = 0; q < grid.size() && ok; ++q) {
      const Vector target = coordinates(grid, q);
      Vector xi;
      double psi_value = 0.0;
      ok = invert(target, xi, psi_value);
      if (!ok) break;
      psi_star(q, 0) = xi.dot(target) - psi_value;
      for (int a = 0; a < n; ++a) xi_at(q, a) = xi[a];
    }
    if (!ok) continue;
    double worst = 0.0;
    for (int a = 0; a < n; ++a) {
      const Field d = partial(psi_star, a);
      for (std::size_t q = 0; q < grid.size(); ++q) worst = std::max(worst, std::abs(d(q, 0) - xi_at(q, a)));
    }
    return {std::move(grid), worst};
  }
  throw NumericalFailure("legendre_transform: no eta-grid inside the gradient image could be inverted");
}

}  // namespace

LegendreResult legendre_transform(const HessePotential& p) {
  const Chart& chart = p.chart();
  const int n = chart.dim();
  const StatisticalStructure metric = hessian_metric(p);

  Field eta(chart, {n});
  if (p.analytic) {
    for (std::size_t q = 0; q < chart.size(); ++q) {
      const Vector grad = p.analytic->gradient(coordinates(chart, q));
      for (int a = 0; a < n; ++a) eta(q, a) = grad[a];
    }
  } else {
    for (int a = 0; a < n; ++a) {
      const Field d = partial(p.psi, a);
      for (std::size_t q = 0; q < chart.size(); ++q) eta(q, a) = d(q, 0);
    }
  }

  LegendreDiagnostics diag;
  diag.monotone = gradient_map_monotone(eta);
  if (!diag.monotone) {
    throw NumericalFailure("legendre_transform: gradient map is not monotone along the coordinate axes");
  }

  Field psi_star(chart, {});
  for (std::size_t q = 0; q < chart.size(); ++q) {
    const Vector xi = coordinates(chart, q);
    double v = -p.psi(q, 0);
    for (int a = 0; a < n; ++a) v += xi[a] * eta(q, a);
    psi_star(q, 0) = v;
  }

  auto check = interpolated_gradient_check(p.psi, eta, metric.g);
  diag.gradient_residual_interpolated = check.residual;
  diag.eta_grid = std::move(check.grid);

  // Hessian of psi* in eta by the chain rule on the xi-grid:
  // H_eta = J^-T (d2 psi* - sum_A d2 eta_A dpsi*/deta_A) J^-1 with J = d eta / d xi.
  {
    std::vector<Field> deta, dpsi_star;
    for (int i = 0; i < n; ++i) {
      deta.push_back(partial(eta, i));
      dpsi_star.push_back(partial(psi_star, i));
    }
    std::vector<Field> d2psi_star, d2eta;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        d2psi_star.push_back(second_partial(psi_star, i, j));
        d2eta.push_back(second_partial(eta, i, j));
      }
    }
    double worst = 0.0;
    for (std::size_t q = 0; q < chart.size(); ++q) {
      Matrix jac(n, n);  // jac(A, i) = d_i eta_A
      Vector grad(n);
      for (int i = 0; i < n; ++i) {
        grad[i] = dpsi_star[i](q, 0);
        for (int a = 0; a < n; ++a) jac(a, i) = deta[i](q, a);
      }
      const Eigen::PartialPivLU<Matrix> lu(jac);
      const Vector dpsi_deta = lu.transpose().solve(grad);
      Matrix inner(n, n);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          double v = d2psi_star[i * n + j](q, 0);
          for (int a = 0; a < n; ++a) v -= d2eta[i * n + j](q, a) * dpsi_deta[a];
          inner(i, j) = v;
        }
      }
      const Matrix jinv = lu.inverse();
      const Matrix h_eta = jinv.transpose() * inner * jinv;
      const Matrix h_xi = to_matrix(metric.g.at(q), n, n);
      worst = std::max(worst, (h_eta * h_xi - Matrix::Identity(n, n)).cwiseAbs().maxCoeff());
    }
    diag.inverse_hessian_residual = worst;
  }

  if (p.analytic) {
    const ConvexFunction& psi = *p.analytic;
    const std::size_t center = chart.flat(chart.center());
    const Vector xi_center = coordinates(chart, center);
    const ConvexFunction numeric_star = convex_conjugate(psi, xi_center);
    const ConvexFunction& star = p.analytic_conjugate ? *p.analytic_conjugate : numeric_star;
    const ConvexFunction star_star = convex_conjugate(numeric_star, psi.gradient(xi_center));
    double grad_worst = 0.0, hess_worst = 0.0, conj_worst = 0.0;
    double offset = 0.0, double_worst = 0.0;
    for (std::size_t q = 0; q < chart.size(); ++q) {
      const Vector xi = coordinates(chart, q);
      const Vector e = psi.gradient(xi);
      grad_worst = std::max(grad_worst, (star.gradient(e) - xi).cwiseAbs().maxCoeff());
      hess_worst = std::max(hess_worst, (star.hessian(e) * psi.hessian(xi) - Matrix::Identity(n, n)).cwiseAbs().maxCoeff());
      if (p.analytic_conjugate) {
        conj_worst = std::max(conj_worst, std::abs(numeric_star.value(e) - p.analytic_conjugate->value(e)));
      }
      const double diff = star_star.value(xi) - psi.value(xi);
      if (q == 0) offset = diff;
      double_worst = std::max(double_worst, std::abs(diff - offset));
    }
    diag.gradient_residual_analytic = grad_worst;
    diag.inverse_hessian_residual_analytic = hess_worst;
    diag.double_legendre_residual = double_worst;
    if (p.analytic_conjugate) diag.conjugate_value_residual = conj_worst;
  }

  return {std::move(eta), std::move(psi_star), std::move(diag)};
}

double flatness_residual(const Field& gamma, const Chart& chart) {
  if (!(gamma.chart() == chart)) throw ShapeMismatch("flatness_residual: connection lives on a different chart");
  const int n = chart.dim();
  Field identity(chart, {n, n});
  for (std::size_t q = 0; q < chart.size(); ++q)
    for (int i = 0; i < n; ++i) identity(q, idx2(n, i, i)) = 1.0;
  return curvature(gamma, identity).R.max_abs();
}

}  // namespace statbonnet
