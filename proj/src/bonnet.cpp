#include "statbonnet/bonnet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "statbonnet/errors.hpp"

namespace statbonnet {

namespace {

// Connection matrix A_axis at a grid point.
Matrix block(const Field& A, std::size_t p, int axis, int N) {
  return to_matrix(A.at(p), N, N, static_cast<std::size_t>(axis * N * N));
}

// A_axis halfway between `lower` and its successor along `axis`, by cubic
// interpolation of the grid values (one-sided next to the boundary).
Matrix midpoint(const Field& A, std::size_t lower, int axis, int N) {
  const Chart& chart = A.chart();
  const int m = chart.count(axis);
  const int k = chart.index_along(lower, axis);
  const long s = static_cast<long>(chart.stride(axis));
  auto at = [&](int offset) { return block(A, static_cast<std::size_t>(static_cast<long>(lower) + s * offset), axis, N); };
  if (k == 0) return (5.0 * at(0) + 15.0 * at(1) - 5.0 * at(2) + at(3)) / 16.0;
  if (k == m - 2) return (at(-2) - 5.0 * at(-1) + 15.0 * at(0) + 5.0 * at(1)) / 16.0;
  return (-at(-1) + 9.0 * at(0) + 9.0 * at(1) - at(2)) / 16.0;
}

// One classical Runge-Kutta step of dE/dx = -A_axis E from `from` to `to`.
Matrix transport_step(const Field& A, std::size_t from, std::size_t to, int axis, int direction, int N,
                      const Matrix& E) {
  const double h = direction * A.chart().spacing(axis);
  const Matrix a0 = block(A, from, axis, N);
  const Matrix am = midpoint(A, direction > 0 ? from : to, axis, N);
  const Matrix a1 = block(A, to, axis, N);
  const Matrix k1 = -a0 * E;
  const Matrix k2 = -am * (E + 0.5 * h * k1);
  const Matrix k3 = -am * (E + 0.5 * h * k2);
  const Matrix k4 = -a1 * (E + h * k3);
  return E + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

double condition_number(const Matrix& E) {
  const Eigen::JacobiSVD<Matrix> svd(E);
  const auto& s = svd.singularValues();
  if (s.size() == 0) return 1.0;
  const double lo = s[s.size() - 1];
  return lo > 0.0 ? s[0] / lo : std::numeric_limits<double>::infinity();
}

Field transport(const Field& A, const MultiIndex& base, const Matrix& start, std::span<const int> axis_order, int N) {
  const Chart& chart = A.chart();
  Field E(chart, {N, N});
  from_matrix(start, E.at(chart.flat(base)));
  for_each_staircase_step(chart, base, axis_order, [&](std::size_t from, std::size_t to, int axis, int direction) {
    const Matrix next = transport_step(A, from, to, axis, direction, N, to_matrix(E.at(from), N, N));
    from_matrix(next, E.at(to));
  });
  E.require_finite("parallel_frame");
  return E;
}

double plaquette_holonomy(const Field& A, int N) {
  const Chart& chart = A.chart();
  const int n = chart.dim();
  double worst = 0.0;
  const Matrix I = Matrix::Identity(N, N);
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const std::size_t sa = chart.stride(a), sb = chart.stride(b);
      for (std::size_t p = 0; p < chart.size(); ++p) {
        if (chart.index_along(p, a) + 1 >= chart.count(a) || chart.index_along(p, b) + 1 >= chart.count(b)) continue;
        Matrix H = I;
        H = transport_step(A, p, p + sa, a, +1, N, H);
        H = transport_step(A, p + sa, p + sa + sb, b, +1, N, H);
        H = transport_step(A, p + sa + sb, p + sb, a, -1, N, H);
        H = transport_step(A, p + sb, p, b, -1, N, H);
        worst = std::max(worst, (H - I).cwiseAbs().maxCoeff());
      }
    }
  }
  return worst;
}

}  // namespace

Matrix dual_base_frame(const Matrix& base_frame, const Matrix& fiber_metric) {
  if (base_frame.rows() != base_frame.cols() || fiber_metric.rows() != base_frame.rows() ||
      fiber_metric.cols() != base_frame.cols()) {
    throw ShapeMismatch("dual_base_frame: frame and fiber metric must be square of the same size");
  }
  const Eigen::FullPivLU<Matrix> lu(base_frame);
  if (!lu.isInvertible()) throw NumericalFailure("dual_base_frame: base frame is singular");
  const Matrix inv_t = lu.inverse().transpose();
  return fiber_metric.partialPivLu().solve(inv_t);
}

FrameField parallel_frame(const BundleConnection& c, const MultiIndex& base, const Matrix& base_frame,
                          std::span<const int> axis_order, std::optional<double> integrability_tolerance) {
  const Chart& chart = c.chart();
  const int N = c.rank();
  if (!chart.contains(base)) throw InvalidArgument("parallel_frame: base point outside the chart");
  if (base_frame.rows() != N || base_frame.cols() != N) throw ShapeMismatch("parallel_frame: base frame must be N x N");
  if (integrability_tolerance) {
    const double F = bundle_curvature(c).max;
    if (F > *integrability_tolerance) {
      throw IntegrabilityError("parallel_frame: bundle curvature " + std::to_string(F) +
                               " exceeds the integrability tolerance");
    }
  }
  const Field G = fiber_metric(c);
  const std::size_t b = chart.flat(base);
  FrameField out{Field(chart, {N, N}), Field(chart, {N, N}), base, base_frame,
                 dual_base_frame(base_frame, to_matrix(G.at(b), N, N)), 0.0, 0.0, 0.0};
  out.E = transport(c.A, base, out.base_frame, axis_order, N);
  out.E_star = transport(c.A_star, base, out.base_dual, axis_order, N);
  out.holonomy_residual = std::max(plaquette_holonomy(c.A, N), plaquette_holonomy(c.A_star, N));

  const Matrix I = Matrix::Identity(N, N);
  for (std::size_t p = 0; p < chart.size(); ++p) {
    const Matrix E = to_matrix(out.E.at(p), N, N);
    const Matrix Es = to_matrix(out.E_star.at(p), N, N);
    const double cond = condition_number(E);
    if (!std::isfinite(cond) || cond > 1e12) {
      throw NumericalFailure("parallel_frame: transported frame is singular at grid point " + std::to_string(p), p);
    }
    out.max_condition = std::max(out.max_condition, cond);
    out.duality_deviation =
        std::max(out.duality_deviation, (E.transpose() * to_matrix(G.at(p), N, N) * Es - I).cwiseAbs().maxCoeff());
  }
  return out;
}

ThetaForms theta_form(const FrameField& frames, int n) {
  const Chart& chart = frames.E.chart();
  const int N = frames.E.value_shape()[0];
  ThetaForms out{Field(chart, {N, n}), Field(chart, {N, n}), 0.0, 0.0};
  Matrix rhs = Matrix::Zero(N, n);
  rhs.topRows(n) = Matrix::Identity(n, n);
  for (std::size_t p = 0; p < chart.size(); ++p) {
    for (int which = 0; which < 2; ++which) {
      const Matrix E = to_matrix((which == 0 ? frames.E : frames.E_star).at(p), N, N);
      const double cond = condition_number(E);
      if (!(cond <= kMaxFrameCondition)) {
        throw NumericalFailure("theta_form: frame is ill-conditioned (condition " + std::to_string(cond) +
                                   ") at grid point " + std::to_string(p),
                               p);
      }
      from_matrix(E.partialPivLu().solve(rhs), (which == 0 ? out.theta : out.theta_star).at(p));
    }
  }
  out.closedness = closedness_residual(out.theta);
  out.closedness_star = closedness_residual(out.theta_star);
  return out;
}

BonnetResult bonnet_embed(const StatisticalStructure& s, const ExtrinsicData& e, const BonnetOptions& options) {
  const GcrReport gcr = gcr_residuals(s, e);
  if (gcr.max() > options.integrability_tolerance) {
    throw IntegrabilityError("bonnet_embed: Gauss-Codazzi-Ricci residual " + std::to_string(gcr.max()) +
                             " exceeds the integrability tolerance " + std::to_string(options.integrability_tolerance));
  }
  const Chart& chart = s.chart();
  const BundleConnection c = bundle_connection(s, e);
  const int N = c.rank();
  const MultiIndex base = options.base ? *options.base : chart.center();
  const Matrix B = options.base_frame ? *options.base_frame : Matrix::Identity(N, N);

  FrameField frames = parallel_frame(c, base, B, options.axis_order);
  ThetaForms theta = theta_form(frames, s.dim());
  LauritzenPair pair{potential_from_closed_form(theta.theta, base, options.axis_order),
                     potential_from_closed_form(theta.theta_star, base, options.axis_order)};
  LauritzenReport report = verify_lauritzen(pair, s);
  BonnetResult out{std::move(pair), report, std::move(frames), std::move(theta), gcr.max(), 0.0, 0.0};
  out.path_dependence_f = path_dependence(out.theta.theta, base);
  out.path_dependence_phi = path_dependence(out.theta.theta_star, base);
  return out;
}

}  // namespace statbonnet
