#include "statbonnet/structures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "statbonnet/errors.hpp"
#include "statbonnet/tensor.hpp"

namespace statbonnet {

std::vector<Field> gradients(const Field& field) {
  std::vector<Field> out;
  out.reserve(field.chart().dim());
  for (int a = 0; a < field.chart().dim(); ++a) out.push_back(partial(field, a));
  return out;
}

void require_shape(const Field& field, const Chart& chart, const std::vector<int>& shape, const char* what) {
  if (!(field.chart() == chart)) throw ShapeMismatch(std::string(what) + ": field lives on a different chart");
  if (field.value_shape() != shape) throw ShapeMismatch(std::string(what) + ": unexpected value shape");
}

void StatisticalStructure::validate() const {
  const int n = dim();
  require_shape(g, g.chart(), {n, n}, "statistical structure metric");
  require_shape(gamma, g.chart(), {n, n, n}, "statistical structure connection");
}

StatisticalReport check_statistical(const StatisticalStructure& s) {
  s.validate();
  const int n = s.dim();
  const auto dg = gradients(s.g);
  StatisticalReport report;
  report.min_metric_eigenvalue = std::numeric_limits<double>::infinity();
  std::size_t worst = 0;
  std::vector<double> nabla_g(static_cast<std::size_t>(n * n * n));
  for (std::size_t p = 0; p < s.g.points(); ++p) {
    const auto g = s.g.at(p);
    const auto G = s.gamma.at(p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          report.torsion_residual =
              std::max(report.torsion_residual, std::abs(G[idx3(n, i, j, k)] - G[idx3(n, j, i, k)]));
          double v = dg[i](p, idx2(n, j, k));
          for (int l = 0; l < n; ++l) {
            v -= G[idx3(n, i, j, l)] * g[idx2(n, l, k)] + G[idx3(n, i, k, l)] * g[idx2(n, j, l)];
          }
          nabla_g[idx3(n, i, j, k)] = v;
        }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          report.nabla_g_residual = std::max(report.nabla_g_residual,
                                             std::abs(nabla_g[idx3(n, i, j, k)] - nabla_g[idx3(n, j, i, k)]));

    const Matrix gm = to_matrix(g, n, n);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (gm + gm.transpose()), Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    if (lo < report.min_metric_eigenvalue) {
      report.min_metric_eigenvalue = lo;
      worst = p;
    }
  }
  report.worst_metric_point = s.chart().multi(worst);
  return report;
}

Field inverse_metric(const Field& g) {
  const int n = g.chart().dim();
  require_shape(g, g.chart(), {n, n}, "inverse_metric");
  Field out(g.chart(), {n, n});
  for (std::size_t p = 0; p < g.points(); ++p) {
    const Matrix gm = to_matrix(g.at(p), n, n);
    Eigen::LLT<Matrix> llt(gm);
    if (llt.info() != Eigen::Success) {
      throw NumericalFailure("metric is not positive definite at grid point " + std::to_string(p), p);
    }
    from_matrix(llt.solve(Matrix::Identity(n, n)), out.at(p));
  }
  return out;
}

Field lower_connection(const Field& gamma, const Field& g) {
  const int n = g.chart().dim();
  require_shape(gamma, g.chart(), {n, n, n}, "lower_connection");
  Field out(g.chart(), {n, n, n});
  for (std::size_t p = 0; p < g.points(); ++p) {
    const auto G = gamma.at(p);
    const auto m = g.at(p);
    auto o = out.at(p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double v = 0.0;
          for (int l = 0; l < n; ++l) v += m[idx2(n, k, l)] * G[idx3(n, i, j, l)];
          o[idx3(n, i, j, k)] = v;
        }
  }
  return out;
}

Field raise_connection(const Field& gamma_lower, const Field& g_inverse) {
  // Same contraction pattern with the inverse metric.
  return lower_connection(gamma_lower, g_inverse);
}

Field dual_connection(const StatisticalStructure& s) {
  s.validate();
  const int n = s.dim();
  const auto dg = gradients(s.g);
  const Field low = lower_connection(s.gamma, s.g);
  Field dual_low(s.chart(), {n, n, n});
  for (std::size_t p = 0; p < s.g.points(); ++p) {
    const auto L = low.at(p);
    auto o = dual_low.at(p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) o[idx3(n, i, j, k)] = dg[i](p, idx2(n, j, k)) - L[idx3(n, i, k, j)];
  }
  Field out = raise_connection(dual_low, inverse_metric(s.g));
  out.require_finite("dual_connection");
  return out;
}

Field alpha_connection(const StatisticalStructure& s, double alpha) {
  const Field dual = dual_connection(s);
  Field out(s.chart(), s.gamma.value_shape());
  const double a = 0.5 * (1.0 + alpha);
  const double b = 0.5 * (1.0 - alpha);
  for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] = a * s.gamma.data()[i] + b * dual.data()[i];
  return out;
}

Field levi_civita(const Field& g) {
  const int n = g.chart().dim();
  const auto dg = gradients(g);
  const Field ginv = inverse_metric(g);
  Field out(g.chart(), {n, n, n});
  for (std::size_t p = 0; p < g.points(); ++p) {
    const auto gi = ginv.at(p);
    auto o = out.at(p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double v = 0.0;
          for (int l = 0; l < n; ++l) {
            v += gi[idx2(n, k, l)] *
                 (dg[i](p, idx2(n, j, l)) + dg[j](p, idx2(n, i, l)) - dg[l](p, idx2(n, i, j)));
          }
          o[idx3(n, i, j, k)] = 0.5 * v;
        }
  }
  return out;
}

CurvatureField curvature(const Field& gamma, const Field& g) {
  const int n = g.chart().dim();
  require_shape(gamma, g.chart(), {n, n, n}, "curvature");
  const auto dG = gradients(gamma);
  CurvatureField out{Field(g.chart(), {n, n, n, n}), Field(g.chart(), {n, n, n, n})};
  for (std::size_t p = 0; p < g.points(); ++p) {
    const auto G = gamma.at(p);
    const auto m = g.at(p);
    auto R = out.R.at(p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            double v = dG[i](p, idx3(n, j, l, k)) - dG[j](p, idx3(n, i, l, k));
            for (int q = 0; q < n; ++q) {
              v += G[idx3(n, i, q, k)] * G[idx3(n, j, l, q)] - G[idx3(n, j, q, k)] * G[idx3(n, i, l, q)];
            }
            R[idx4(n, i, j, k, l)] = v;
          }
    auto Rl = out.R_low.at(p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            double v = 0.0;
            for (int q = 0; q < n; ++q) v += m[idx2(n, k, q)] * R[idx4(n, i, j, q, l)];
            Rl[idx4(n, i, j, k, l)] = v;
          }
  }
  out.R.require_finite("curvature");
  return out;
}

double curvature_duality_residual(const StatisticalStructure& s) {
  const int n = s.dim();
  const CurvatureField R = curvature(s.gamma, s.g);
  const CurvatureField Rs = curvature(dual_connection(s), s.g);
  double worst = 0.0;
  for (std::size_t p = 0; p < s.g.points(); ++p) {
    const auto a = R.R_low.at(p);
    const auto b = Rs.R_low.at(p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l)
            worst = std::max(worst, std::abs(a[idx4(n, i, j, k, l)] + b[idx4(n, i, j, l, k)]));
  }
  return worst;
}

}  // namespace statbonnet
