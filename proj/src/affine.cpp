#include "statbonnet/affine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "statbonnet/errors.hpp"
#include "statbonnet/tensor.hpp"

namespace statbonnet {

void AffineImmersion::validate() const {
  if (codim != 1 && codim != 2) throw InvalidArgument("affine immersion: codimension must be 1 or 2");
  const int D = f.chart().dim() + codim;
  require_shape(f, f.chart(), {D}, "affine immersion f");
  require_shape(xi, f.chart(), {D}, "affine immersion xi");
}

namespace {

constexpr double kMaxFrameCondition = 1e12;

// Columns d_1 f .. d_n f, xi [, f].
Matrix frame_at(const AffineImmersion& im, const std::vector<Field>& df, std::size_t q) {
  const int n = im.chart().dim();
  const int D = n + im.codim;
  Matrix M(D, D);
  for (int A = 0; A < D; ++A) {
    for (int i = 0; i < n; ++i) M(A, i) = df[i](q, A);
    M(A, n) = im.xi(q, A);
    if (im.codim == 2) M(A, n + 1) = im.f(q, A);
  }
  return M;
}

double condition(const Matrix& M) {
  const Eigen::JacobiSVD<Matrix> svd(M);
  const auto& s = svd.singularValues();
  const double lo = s[s.size() - 1];
  return lo > 0.0 ? s[0] / lo : std::numeric_limits<double>::infinity();
}

void require_transversal(const AffineImmersion& im, const Matrix& M, std::size_t q, double& worst) {
  if (im.codim == 2) {
    double norm = 0.0;
    for (int A = 0; A < M.rows(); ++A) norm = std::max(norm, std::abs(im.f(q, A)));
    if (norm < 1e-12) {
      throw InvalidArgument("affine immersion: position field vanishes at grid point " + std::to_string(q) +
                            "; charts through the origin are not transversal");
    }
  }
  const double c = condition(M);
  if (!(c <= kMaxFrameCondition)) {
    throw NumericalFailure("affine immersion: frame (df, xi" + std::string(im.codim == 2 ? ", eta" : "") +
                               ") is singular at grid point " + std::to_string(q) + " (transversality fails)",
                           q);
  }
  worst = std::max(worst, c);
}

}  // namespace

AffineDecomposition decompose(const AffineImmersion& im) {
  im.validate();
  const Chart& chart = im.chart();
  const int n = chart.dim();
  const int D = n + im.codim;
  const bool two = im.codim == 2;
  const auto df = gradients(im.f);
  const auto dxi = gradients(im.xi);
  std::vector<Field> ddf;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) ddf.push_back(second_partial(im.f, i, j));

  AffineDecomposition d{Field(chart, {n, n, n}), Field(chart, {n, n}), Field(chart, {n, n}), Field(chart, {n}),
                        std::nullopt, std::nullopt, 0.0, 0.0};
  if (two) {
    d.k = Field(chart, {n, n});
    d.mu = Field(chart, {n});
  }
  for (std::size_t q = 0; q < chart.size(); ++q) {
    const Matrix M = frame_at(im, df, q);
    require_transversal(im, M, q, d.max_condition);
    const Eigen::PartialPivLU<Matrix> lu(M);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        Vector rhs(D);
        for (int A = 0; A < D; ++A) rhs[A] = ddf[static_cast<std::size_t>(i * n + j)](q, A);
        const Vector c = lu.solve(rhs);
        for (int k = 0; k < n; ++k) d.gamma(q, idx3(n, i, j, k)) = c[k];
        d.g(q, idx2(n, i, j)) = -c[n];
        if (two) (*d.k)(q, idx2(n, i, j)) = -c[n + 1];
        d.reconstruction_residual = std::max(d.reconstruction_residual, (M * c - rhs).cwiseAbs().maxCoeff());
      }
      Vector rhs(D);
      for (int A = 0; A < D; ++A) rhs[A] = dxi[i](q, A);
      const Vector c = lu.solve(rhs);
      for (int k = 0; k < n; ++k) d.S(q, idx2(n, i, k)) = c[k];
      d.tau(q, i) = c[n];
      if (two) (*d.mu)(q, i) = c[n + 1];
    }
  }
  d.gamma.require_finite("decompose");
  return d;
}

AffineStatisticalReport check_statistical_affine(const AffineDecomposition& d) {
  AffineStatisticalReport rep;
  rep.tau_max = d.tau.max_abs();
  if (d.mu) rep.mu_max = d.mu->max_abs();
  StatisticalStructure s{d.g, d.gamma};
  rep.statistical = check_statistical(s);
  rep.min_metric_eigenvalue = rep.statistical.min_metric_eigenvalue;
  return rep;
}

ConormalMap conormal_map(const AffineImmersion& im) {
  im.validate();
  const Chart& chart = im.chart();
  const int n = chart.dim();
  const int D = n + im.codim;
  const bool two = im.codim == 2;
  const auto df = gradients(im.f);
  ConormalMap out{Field(chart, {D}), 0.0, 0.0, std::nullopt, 0.0, std::nullopt, 0.0};
  if (two) {
    out.position_residual = 0.0;
    out.eta_phi_residual = 0.0;
  }
  Vector rhs = Vector::Zero(D);
  rhs[n] = 1.0;
  double unused = 0.0;
  for (std::size_t q = 0; q < chart.size(); ++q) {
    const Matrix M = frame_at(im, df, q);
    require_transversal(im, M, q, unused);
    const Vector phi = M.transpose().partialPivLu().solve(rhs);
    for (int A = 0; A < D; ++A) out.phi(q, A) = phi[A];
    const Vector pairing = M.transpose() * phi;
    for (int i = 0; i < n; ++i) out.tangency_residual = std::max(out.tangency_residual, std::abs(pairing[i]));
    out.normalization_residual = std::max(out.normalization_residual, std::abs(pairing[n] - 1.0));
    if (two) out.position_residual = std::max(*out.position_residual, std::abs(pairing[n + 1]));
  }
  const auto dphi = gradients(out.phi);
  out.min_rank_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t q = 0; q < chart.size(); ++q) {
    Matrix J(D, n);
    for (int i = 0; i < n; ++i) {
      double a = 0.0, b = 0.0;
      for (int A = 0; A < D; ++A) {
        J(A, i) = dphi[i](q, A);
        a += im.xi(q, A) * dphi[i](q, A);
        b += im.f(q, A) * dphi[i](q, A);
      }
      out.xi_phi_residual = std::max(out.xi_phi_residual, std::abs(a));
      if (two) out.eta_phi_residual = std::max(*out.eta_phi_residual, std::abs(b));
    }
    const Eigen::JacobiSVD<Matrix> svd(J);
    const auto& s = svd.singularValues();
    out.min_rank_ratio = std::min(out.min_rank_ratio, s[0] > 0.0 ? s[s.size() - 1] / s[0] : 0.0);
  }
  return out;
}

AffineLauritzen affine_to_lauritzen(const AffineImmersion& im, double tau_tolerance) {
  AffineDecomposition d = decompose(im);
  AffineStatisticalReport check = check_statistical_affine(d);
  if (!check.equiaffine(tau_tolerance)) {
    throw IntegrabilityError("affine_to_lauritzen: immersion is not equiaffine (max |tau| = " +
                             std::to_string(check.tau_max) + ")");
  }
  ConormalMap conormal = conormal_map(im);
  LauritzenPair pair{im.f, conormal.phi};
  const LauritzenReport report = verify_lauritzen(pair, StatisticalStructure{d.g, d.gamma});
  return {std::move(pair), std::move(d), check, std::move(conormal), report};
}

}  // namespace statbonnet
