#include "statbonnet/ambient.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

#include "statbonnet/errors.hpp"
#include "statbonnet/tensor.hpp"

namespace statbonnet {

PullbackPotential pullback_potential(const LauritzenPair& p, std::optional<MultiIndex> base, double tolerance) {
  p.validate();
  const Chart& chart = p.chart();
  const int n = chart.dim();
  const int N = p.ambient_dim();
  const auto df = gradients(p.f);
  Field omega(chart, {n});
  for (std::size_t q = 0; q < chart.size(); ++q)
    for (int i = 0; i < n; ++i) {
      double v = 0.0;
      for (int A = 0; A < N; ++A) v += df[i](q, A) * p.phi(q, A);
      omega(q, i) = v;
    }
  const double closed = closedness_residual(omega);
  if (closed > tolerance) {
    throw IntegrabilityError("pullback_potential: <df, phi> is not closed (residual " + std::to_string(closed) +
                             "); the pair does not come from a statistical structure");
  }
  const MultiIndex b = base ? *base : chart.center();
  Field psi0 = potential_from_closed_form(omega, b);
  return {std::move(omega), std::move(psi0), closed, b};
}

std::size_t TubularChart::on_manifold(std::size_t q) const {
  MultiIndex m = base().multi(q);
  for (int a = 0; a < r; ++a) m.push_back(tube.count(base().dim() + a) / 2);
  return tube.flat(m);
}

namespace {

Matrix jacobian_at(const std::vector<Field>& d, std::size_t q, int n, int N) {
  Matrix J(N, n);
  for (int i = 0; i < n; ++i)
    for (int A = 0; A < N; ++A) J(A, i) = d[i](q, A);
  return J;
}

struct VectorHash {
  std::size_t operator()(const std::vector<long>& v) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (long x : v) h = (h ^ static_cast<std::size_t>(x)) * 1099511628211ull;
    return h;
  }
};

// Per-tube-point base index and normal offsets.
struct TubePoint {
  std::size_t q;
  Vector t;
};

TubePoint split(const TubularChart& tube, std::size_t p) {
  const int n = tube.base().dim();
  const MultiIndex m = tube.tube.multi(p);
  TubePoint out{tube.base().flat(MultiIndex(m.begin(), m.begin() + n)), Vector(tube.r)};
  for (int a = 0; a < tube.r; ++a) out.t[a] = tube.tube.coordinate(n + a, m[n + a]);
  return out;
}

Matrix tube_jacobian(const std::vector<Field>& df, const std::vector<Field>& dnu, const Field& nu, const TubePoint& tp,
                     int n, int r, int N) {
  Matrix J(N, N);
  for (int i = 0; i < n; ++i)
    for (int A = 0; A < N; ++A) {
      double v = df[i](tp.q, A);
      for (int a = 0; a < r; ++a) v += tp.t[a] * dnu[i](tp.q, static_cast<std::size_t>(a * N + A));
      J(A, i) = v;
    }
  for (int a = 0; a < r; ++a)
    for (int A = 0; A < N; ++A) J(A, n + a) = nu(tp.q, static_cast<std::size_t>(a * N + A));
  return J;
}

}  // namespace

TubularChart build_tube(const LauritzenPair& p, double epsilon, int normal_points) {
  p.validate();
  const Chart& base = p.chart();
  const int n = base.dim();
  const int N = p.ambient_dim();
  const int r = N - n;
  if (r < 0) throw InvalidArgument("build_tube: ambient dimension smaller than the manifold dimension");
  if (r > 0 && !(epsilon > 0.0)) throw InvalidArgument("build_tube: epsilon must be positive");
  const auto df = gradients(p.f);

  Field nu(base, {r, N});
  if (r > 0) {
    const Matrix Jc = jacobian_at(df, base.flat(base.center()), n, N);
    const Eigen::JacobiSVD<Matrix> svd(Jc, Eigen::ComputeFullU);
    const Matrix W = svd.matrixU().rightCols(r);
    for (std::size_t q = 0; q < base.size(); ++q) {
      const Matrix J = jacobian_at(df, q, n, N);
      const Matrix P = Matrix::Identity(N, N) - J * (J.transpose() * J).ldlt().solve(J.transpose());
      const Matrix PW = P * W;
      const Eigen::SelfAdjointEigenSolver<Matrix> eig(W.transpose() * PW);
      if (!(eig.eigenvalues().minCoeff() > 1e-12)) {
        throw NumericalFailure("build_tube: normal complement degenerates at grid point " + std::to_string(q), q);
      }
      const Matrix frame = PW * eig.operatorInverseSqrt();  // N x r
      for (int a = 0; a < r; ++a)
        for (int A = 0; A < N; ++A) nu(q, static_cast<std::size_t>(a * N + A)) = frame(A, a);
    }
  }

  std::vector<Interval> ranges = base.ranges();
  std::vector<int> counts = base.counts();
  for (int a = 0; a < r; ++a) {
    ranges.push_back({-epsilon, epsilon});
    counts.push_back(normal_points);
  }
  TubularChart out{Chart(ranges, counts), std::move(nu), epsilon, r, 0.0, 0.0};
  const Chart& tube = out.tube;

  // Tube points in V and their Jacobians.
  const auto dnu = gradients(out.normal_frame);
  std::vector<Vector> image(tube.size());
  for (std::size_t p_ = 0; p_ < tube.size(); ++p_) {
    const TubePoint tp = split(out, p_);
    Vector x(N);
    for (int A = 0; A < N; ++A) {
      double v = p.f(tp.q, A);
      for (int a = 0; a < r; ++a) v += tp.t[a] * out.normal_frame(tp.q, static_cast<std::size_t>(a * N + A));
      x[A] = v;
    }
    image[p_] = x;
    const Matrix J = tube_jacobian(df, dnu, out.normal_frame, tp, n, r, N);
    const Eigen::JacobiSVD<Matrix> svd(J);
    const auto& sv = svd.singularValues();
    if (!(sv[N - 1] > 1e-12 * sv[0])) {
      throw InvalidArgument("build_tube: tube map has a singular Jacobian at tube point " + std::to_string(p_) +
                            "; shrink epsilon");
    }
  }

  // Injectivity on the grid: no two distinct tube points closer than half the
  // grid spacing, measured on M and along the normals. Measuring it on the
  // whole tube would let a collapsing layer certify itself.
  double min_adjacent = std::numeric_limits<double>::infinity();
  double spacing = r > 0 ? 2.0 * epsilon / (normal_points - 1) : std::numeric_limits<double>::infinity();
  for (std::size_t p_ = 0; p_ < tube.size(); ++p_)
    for (int axis = 0; axis < tube.dim(); ++axis)
      if (tube.index_along(p_, axis) + 1 < tube.count(axis)) {
        const double d = (image[p_ + tube.stride(axis)] - image[p_]).norm();
        min_adjacent = std::min(min_adjacent, d);
        if (axis < n && split(out, p_).t.isZero()) spacing = std::min(spacing, d);
      }
  const double threshold = 0.5 * spacing;
  out.separation_threshold = threshold;
  out.min_separation = min_adjacent;
  if (!(threshold > 0.0)) throw InvalidArgument("build_tube: tube map collapses neighbouring grid points");
  std::unordered_map<std::vector<long>, std::vector<std::size_t>, VectorHash> cells;
  auto cell_of = [&](const Vector& x) {
    std::vector<long> c(static_cast<std::size_t>(N));
    for (int A = 0; A < N; ++A) c[A] = static_cast<long>(std::floor(x[A] / threshold));
    return c;
  };
  for (std::size_t p_ = 0; p_ < tube.size(); ++p_) cells[cell_of(image[p_])].push_back(p_);
  long neighbours = 1;
  for (int A = 0; A < N; ++A) neighbours *= 3;
  for (std::size_t p_ = 0; p_ < tube.size(); ++p_) {
    const auto c = cell_of(image[p_]);
    for (long k = 0; k < neighbours; ++k) {
      auto key = c;
      long rem = k;
      for (int A = 0; A < N; ++A) {
        key[A] += rem % 3 - 1;
        rem /= 3;
      }
      const auto it = cells.find(key);
      if (it == cells.end()) continue;
      for (std::size_t other : it->second) {
        if (other <= p_) continue;
        const double d = (image[other] - image[p_]).norm();
        out.min_separation = std::min(out.min_separation, d);
        if (d < threshold) {
          throw InvalidArgument("build_tube: tube map is not injective (tube points " + std::to_string(p_) + " and " +
                                std::to_string(other) + " nearly coincide); shrink epsilon");
        }
      }
    }
  }
  return out;
}

AmbientPotential evaluate_extension(const LauritzenPair& p, const Field& psi0, const TubularChart& tube, double C) {
  const Chart& base = tube.base();
  const int n = base.dim();
  const int N = p.ambient_dim();
  const int r = tube.r;
  require_shape(psi0, base, {}, "evaluate_extension psi0");
  const Field& nu = tube.normal_frame;

  // <phi, nu_a> and the base-chart derivatives used by the chain rule.
  Field s(base, {r});
  for (std::size_t q = 0; q < base.size(); ++q)
    for (int a = 0; a < r; ++a) {
      double v = 0.0;
      for (int A = 0; A < N; ++A) v += p.phi(q, A) * nu(q, static_cast<std::size_t>(a * N + A));
      s(q, a) = v;
    }
  const auto df = gradients(p.f);
  const auto dnu = gradients(nu);
  const auto ds = gradients(s);
  const auto dpsi0 = gradients(psi0);
  // dpsi0 = omega, so the psi0 block of the Hessian is sym(d omega); second
  // differences of psi0 would amplify its quadrature error by 1/h^2.
  Field omega(base, {n});
  for (std::size_t q = 0; q < base.size(); ++q)
    for (int i = 0; i < n; ++i) {
      double v = 0.0;
      for (int A = 0; A < N; ++A) v += df[i](q, A) * p.phi(q, A);
      omega(q, i) = v;
    }
  const auto domega = gradients(omega);
  std::vector<Field> ddf, ddnu, dds, ddpsi0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      ddf.push_back(second_partial(p.f, i, j));
      ddnu.push_back(second_partial(nu, i, j));
      dds.push_back(second_partial(s, i, j));
      Field h(base, {});
      for (std::size_t q = 0; q < base.size(); ++q) h(q, 0) = 0.5 * (domega[j](q, i) + domega[i](q, j));
      ddpsi0.push_back(std::move(h));
    }
  auto sym = [n](int i, int j) { return static_cast<std::size_t>(std::min(i, j) * n + std::max(i, j)); };

  AmbientPotential out{tube, psi0, C, Field(tube.tube, {}), Field(tube.tube, {N}), Field(tube.tube, {N, N}),
                       std::numeric_limits<double>::infinity(), 0.0, 0.0, 0.0};
  for (std::size_t pt = 0; pt < tube.tube.size(); ++pt) {
    const TubePoint tp = split(tube, pt);
    const std::size_t q = tp.q;
    const Vector& t = tp.t;
    const Matrix J = tube_jacobian(df, dnu, nu, tp, n, r, N);

    double value = psi0(q, 0) + C * t.squaredNorm();
    Vector grad_y(N);
    Matrix H_y = Matrix::Zero(N, N);
    for (int a = 0; a < r; ++a) {
      value += t[a] * s(q, a);
      grad_y[n + a] = s(q, a) + 2.0 * C * t[a];
      H_y(n + a, n + a) = 2.0 * C;
    }
    for (int i = 0; i < n; ++i) {
      double v = dpsi0[i](q, 0);
      for (int a = 0; a < r; ++a) v += t[a] * ds[i](q, a);
      grad_y[i] = v;
      for (int j = 0; j < n; ++j) {
        double h = ddpsi0[sym(i, j)](q, 0);
        for (int a = 0; a < r; ++a) h += t[a] * dds[sym(i, j)](q, a);
        H_y(i, j) = h;
      }
      for (int a = 0; a < r; ++a) {
        H_y(i, n + a) = ds[i](q, a);
        H_y(n + a, i) = ds[i](q, a);
      }
    }

    const Eigen::PartialPivLU<Matrix> lu(J);
    const Vector g_xi = lu.transpose().solve(grad_y);
    // second derivatives of the tube map, contracted with the xi-gradient
    Matrix curv = Matrix::Zero(N, N);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        double v = 0.0;
        for (int A = 0; A < N; ++A) {
          double d2 = ddf[sym(i, j)](q, A);
          for (int a = 0; a < r; ++a) d2 += t[a] * ddnu[sym(i, j)](q, static_cast<std::size_t>(a * N + A));
          v += d2 * g_xi[A];
        }
        curv(i, j) = v;
      }
      for (int a = 0; a < r; ++a) {
        double v = 0.0;
        for (int A = 0; A < N; ++A) v += dnu[i](q, static_cast<std::size_t>(a * N + A)) * g_xi[A];
        curv(i, n + a) = v;
        curv(n + a, i) = v;
      }
    }
    const Matrix Jinv = lu.inverse();
    Matrix H = Jinv.transpose() * (H_y - curv) * Jinv;
    H = 0.5 * (H + H.transpose());

    out.psi(pt, 0) = value;
    for (int A = 0; A < N; ++A) out.gradient_xi(pt, A) = g_xi[A];
    from_matrix(H, out.hessian_xi.at(pt));
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(H, Eigen::EigenvaluesOnly);
    out.min_eigenvalue = std::min(out.min_eigenvalue, eig.eigenvalues().minCoeff());
  }
  for (std::size_t q = 0; q < base.size(); ++q) {
    const std::size_t pt = tube.on_manifold(q);
    out.restriction_error = std::max(out.restriction_error, std::abs(out.psi(pt, 0) - psi0(q, 0)));
    for (int A = 0; A < N; ++A) {
      out.gradient_condition = std::max(out.gradient_condition, std::abs(out.gradient_xi(pt, A) - p.phi(q, A)));
    }
  }
  out.hessian_xi.require_finite("extend_potential");
  return out;
}

AmbientPotential extend_potential(const LauritzenPair& p, const Field& psi0, double epsilon, std::optional<double> margin) {
  const Chart& base = p.chart();
  const int n = base.dim();
  const int N = p.ambient_dim();
  double m = 0.0;
  if (margin) {
    m = *margin;
  } else {
    const auto df = gradients(p.f);
    const auto dphi = gradients(p.phi);
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < base.size(); ++q) {
      Matrix g(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double v = 0.0;
          for (int A = 0; A < N; ++A) v += df[i](q, A) * dphi[j](q, A);
          g(i, j) = v;
        }
      const Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (g + g.transpose()), Eigen::EigenvaluesOnly);
      lo = std::min(lo, eig.eigenvalues().minCoeff());
    }
    m = 0.05 * lo;
  }
  const TubularChart tube = build_tube(p, epsilon);
  if (tube.r == 0) {
    AmbientPotential a = evaluate_extension(p, psi0, tube, 0.0);
    a.margin = m;
    if (!(a.min_eigenvalue > m)) {
      throw NumericalFailure("extend_potential: Hessian of the potential is not positive definite on M");
    }
    return a;
  }
  for (double C = 1.0; C <= kMaxExtensionConstant; C *= 2.0) {
    AmbientPotential a = evaluate_extension(p, psi0, tube, C);
    a.margin = m;
    if (a.min_eigenvalue > m) return a;
  }
  throw NumericalFailure("extend_potential: no C up to 2^30 makes the Hessian positive definite; shrink epsilon");
}

AmbientPotential extend_potential_shrinking(const LauritzenPair& p, const Field& psi0, double epsilon,
                                            std::optional<double> margin, int halvings) {
  for (int k = 0;; ++k, epsilon *= 0.5) {
    try {
      return extend_potential(p, psi0, epsilon, margin);
    } catch (const NumericalFailure&) {
      // without normal directions epsilon plays no role
      if (k == halvings || p.ambient_dim() == p.chart().dim()) throw;
    }
  }
}

InducedReport induced_structure(const AmbientPotential& a, const LauritzenPair& p, const StatisticalStructure& s) {
  const Chart& base = a.tube.base();
  if (!(s.chart() == base)) throw ShapeMismatch("induced_structure: structure lives on a different chart");
  const int n = base.dim();
  const int N = p.ambient_dim();
  const auto df = gradients(p.f);
  std::vector<Field> ddf;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) ddf.push_back(second_partial(p.f, i, j));

  Field g(base, {n, n});
  Field gamma_low(base, {n, n, n});
  for (std::size_t q = 0; q < base.size(); ++q) {
    const Matrix H = to_matrix(a.hessian_xi.at(a.tube.on_manifold(q)), N, N);
    const Matrix J = jacobian_at(df, q, n, N);
    const Matrix HJ = H * J;
    from_matrix(J.transpose() * HJ, g.at(q));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double v = 0.0;
          for (int A = 0; A < N; ++A) v += ddf[static_cast<std::size_t>(i * n + j)](q, A) * HJ(A, k);
          gamma_low(q, idx3(n, i, j, k)) = v;
        }
  }
  const Field expected_low = lower_connection(s.gamma, s.g);
  InducedReport rep{{g, raise_connection(gamma_low, inverse_metric(g))}, max_abs_difference(g, s.g),
                    max_abs_difference(gamma_low, expected_low)};
  return rep;
}

}  // namespace statbonnet
