#include "statbonnet/lauritzen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "statbonnet/errors.hpp"
#include "statbonnet/tensor.hpp"

namespace statbonnet {

void LauritzenPair::validate() const {
  if (f.value_shape().size() != 1) throw ShapeMismatch("Lauritzen pair: f must be vector-valued");
  require_shape(phi, f.chart(), f.value_shape(), "Lauritzen pair phi");
}

namespace {

double min_rank_ratio(const std::vector<Field>& d, std::size_t p, int n, int N) {
  Matrix jac(N, n);
  for (int i = 0; i < n; ++i)
    for (int A = 0; A < N; ++A) jac(A, i) = d[i](p, A);
  const Eigen::JacobiSVD<Matrix> svd(jac);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s[0] == 0.0) return 0.0;
  return s[s.size() - 1] / s[0];
}

}  // namespace

LauritzenReport verify_lauritzen(const LauritzenPair& p, const StatisticalStructure& s) {
  p.validate();
  s.validate();
  if (!(p.chart() == s.chart())) throw ShapeMismatch("verify_lauritzen: pair and structure live on different charts");
  const int n = s.dim();
  const int N = p.ambient_dim();
  const auto df = gradients(p.f);
  const auto dphi = gradients(p.phi);
  std::vector<Field> ddf;
  ddf.reserve(static_cast<std::size_t>(n * n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) ddf.push_back(i <= j ? second_partial(p.f, i, j) : ddf[static_cast<std::size_t>(j * n + i)]);
  const Field gamma_low = lower_connection(s.gamma, s.g);

  LauritzenReport rep;
  rep.min_rank_ratio_f = std::numeric_limits<double>::infinity();
  rep.min_rank_ratio_phi = std::numeric_limits<double>::infinity();
  for (std::size_t q = 0; q < s.chart().size(); ++q) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double pairing = 0.0, swapped = 0.0;
        for (int A = 0; A < N; ++A) {
          pairing += df[i](q, A) * dphi[j](q, A);
          swapped += df[j](q, A) * dphi[i](q, A);
        }
        rep.metric_residual = std::max(rep.metric_residual, std::abs(s.g(q, idx2(n, i, j)) - pairing));
        rep.pairing_asymmetry = std::max(rep.pairing_asymmetry, std::abs(pairing - swapped));
        for (int k = 0; k < n; ++k) {
          double c = 0.0;
          for (int A = 0; A < N; ++A) c += ddf[static_cast<std::size_t>(i * n + j)](q, A) * dphi[k](q, A);
          rep.connection_residual = std::max(rep.connection_residual, std::abs(gamma_low(q, idx3(n, i, j, k)) - c));
        }
      }
    rep.min_rank_ratio_f = std::min(rep.min_rank_ratio_f, min_rank_ratio(df, q, n, N));
    rep.min_rank_ratio_phi = std::min(rep.min_rank_ratio_phi, min_rank_ratio(dphi, q, n, N));
  }
  return rep;
}

LauritzenPair dual_pair(const LauritzenPair& p) { return {p.phi, p.f}; }

LauritzenPair alpha_pair(const LauritzenPair& p, const StatisticalStructure& s, double alpha, double tolerance) {
  const LauritzenReport input = verify_lauritzen(p, s);
  if (input.metric_residual > tolerance || input.connection_residual > tolerance) {
    throw InvalidArgument("alpha_pair: input pair does not embed the structure (metric residual " +
                          std::to_string(input.metric_residual) + ", connection residual " +
                          std::to_string(input.connection_residual) + ")");
  }
  const int N = p.ambient_dim();
  const Chart& chart = p.chart();
  const double lower = 0.5 * (1.0 - alpha);
  const double upper = 0.5 * (1.0 + alpha);
  LauritzenPair out{Field(chart, {2 * N}), Field(chart, {2 * N})};
  for (std::size_t q = 0; q < chart.size(); ++q) {
    for (int A = 0; A < N; ++A) {
      out.f(q, A) = p.f(q, A);
      out.f(q, N + A) = lower * p.phi(q, A);
      out.phi(q, A) = upper * p.phi(q, A);
      out.phi(q, N + A) = p.f(q, A);
    }
  }
  const auto dF = gradients(out.f);
  for (std::size_t q = 0; q < chart.size(); ++q) {
    if (!(min_rank_ratio(dF, q, chart.dim(), 2 * N) > kRankThreshold)) {
      throw NumericalFailure("alpha_pair: F is not an immersion at grid point " + std::to_string(q), q);
    }
  }
  return out;
}

}  // namespace statbonnet
