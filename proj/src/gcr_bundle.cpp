#include "statbonnet/gcr_bundle.hpp"

#include <algorithm>
#include <cmath>

#include "statbonnet/errors.hpp"
#include "statbonnet/tensor.hpp"

namespace statbonnet {

ExtrinsicData ExtrinsicData::zero(const Chart& chart, int r) {
  const int n = chart.dim();
  return {r, Field(chart, {r, n, n}), Field(chart, {r, n, n}), Field(chart, {r, r, n})};
}

void ExtrinsicData::validate(const Chart& chart) const {
  const int n = chart.dim();
  if (r < 0) throw InvalidArgument("extrinsic data: negative codimension");
  require_shape(h, chart, {r, n, n}, "extrinsic h");
  require_shape(h_star, chart, {r, n, n}, "extrinsic h*");
  require_shape(tau, chart, {r, r, n}, "extrinsic tau");
  for (std::size_t p = 0; p < chart.size(); ++p)
    for (int a = 0; a < r; ++a)
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
          const std::size_t ij = idx3(n, a, i, j), ji = idx3(n, a, j, i);
          if (std::abs(h(p, ij) - h(p, ji)) > 1e-12 || std::abs(h_star(p, ij) - h_star(p, ji)) > 1e-12) {
            throw InvalidArgument("extrinsic data: h and h* must be symmetric in their tangent indices");
          }
        }
}

double GcrReport::max() const {
  return std::max({gauss_norm.max, codazzi_h_norm.max, codazzi_hstar_norm.max, ricci_norm.max});
}

double GcrReport::total() const {
  return gauss_norm.max + codazzi_h_norm.max + codazzi_hstar_norm.max + ricci_norm.max;
}

namespace {

ResidualNorm norm_of(const Field& f) { return {f.max_abs(), f.rms()}; }

// Offsets for [r,n,n] and [r,r,n] components.
struct Layout {
  int n, r;
  std::size_t h(int a, int i, int j) const { return static_cast<std::size_t>((a * n + i) * n + j); }
  std::size_t tau(int a, int b, int i) const { return static_cast<std::size_t>((a * r + b) * n + i); }
};

}  // namespace

GcrReport gcr_residuals(const StatisticalStructure& s, const ExtrinsicData& e) {
  s.validate();
  const Chart& chart = s.chart();
  e.validate(chart);
  const int n = s.dim();
  const int r = e.r;
  const Layout L{n, r};

  const Field ginv = inverse_metric(s.g);
  const CurvatureField R = curvature(s.gamma, s.g);
  const Field gamma_star = dual_connection(s);
  const auto dg = gradients(s.g);
  const auto dh = gradients(e.h);
  const auto dhs = gradients(e.h_star);
  const auto dtau = gradients(e.tau);

  GcrReport out{Field(chart, {n, n, n, n}), Field(chart, {r, n, n, n}), Field(chart, {r, n, n, n}),
                Field(chart, {r, r, n, n}), {}, {}, {}, {}, 0.0};

  std::vector<double> hs_up(static_cast<std::size_t>(r * n * n));      // h*_ai^k
  std::vector<double> dhs_up(static_cast<std::size_t>(n * r * n * n));  // d_i h*_aj^k
  for (std::size_t p = 0; p < chart.size(); ++p) {
    const auto gi = ginv.at(p);
    const auto G = s.gamma.at(p);
    const auto Gs = gamma_star.at(p);
    const auto h = e.h.at(p);
    const auto hs = e.h_star.at(p);
    const auto tau = e.tau.at(p);
    const Matrix gim = to_matrix(gi, n, n);

    for (int a = 0; a < r; ++a)
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
          double v = 0.0;
          for (int m = 0; m < n; ++m) v += gi[idx2(n, k, m)] * hs[L.h(a, i, m)];
          hs_up[L.h(a, i, k)] = v;
        }
    // Leibniz rule: d_i (g^km h*_ajm) = g^km d_i h*_ajm - (g^-1 d_i g g^-1)^km h*_ajm
    for (int i = 0; i < n; ++i) {
      const Matrix dgi = gim * to_matrix(dg[i].at(p), n, n) * gim;
      for (int a = 0; a < r; ++a)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) {
            double v = 0.0;
            for (int m = 0; m < n; ++m) v += gi[idx2(n, k, m)] * dhs[i](p, L.h(a, j, m)) - dgi(k, m) * hs[L.h(a, j, m)];
            dhs_up[static_cast<std::size_t>(i) * r * n * n + L.h(a, j, k)] = v;
          }
    }

    auto gauss = out.gauss.at(p);
    const auto Rl = R.R_low.at(p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            double v = Rl[idx4(n, i, j, k, l)];
            for (int a = 0; a < r; ++a) v -= hs[L.h(a, i, k)] * h[L.h(a, j, l)] - hs[L.h(a, j, k)] * h[L.h(a, i, l)];
            gauss[idx4(n, i, j, k, l)] = v;
          }

    auto cod = out.codazzi_h.at(p);
    auto cods = out.codazzi_hstar.at(p);
    for (int a = 0; a < r; ++a)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int l = 0; l < n; ++l) {
            double v = dh[i](p, L.h(a, j, l)) - dh[j](p, L.h(a, i, l));
            for (int m = 0; m < n; ++m) {
              v += -G[idx3(n, i, l, m)] * h[L.h(a, j, m)] + G[idx3(n, j, l, m)] * h[L.h(a, i, m)];
            }
            for (int b = 0; b < r; ++b) v += tau[L.tau(a, b, i)] * h[L.h(b, j, l)] - tau[L.tau(a, b, j)] * h[L.h(b, i, l)];
            cod[static_cast<std::size_t>(a * n * n * n) + idx3(n, i, j, l)] = v;

            const int k = l;
            double w = dhs_up[static_cast<std::size_t>(i) * r * n * n + L.h(a, j, k)] -
                       dhs_up[static_cast<std::size_t>(j) * r * n * n + L.h(a, i, k)];
            for (int m = 0; m < n; ++m) {
              w += G[idx3(n, i, m, k)] * hs_up[L.h(a, j, m)] - G[idx3(n, j, m, k)] * hs_up[L.h(a, i, m)];
            }
            for (int b = 0; b < r; ++b) {
              w += hs_up[L.h(b, i, k)] * tau[L.tau(b, a, j)] - hs_up[L.h(b, j, k)] * tau[L.tau(b, a, i)];
            }
            cods[static_cast<std::size_t>(a * n * n * n) + idx3(n, i, j, k)] = w;
          }

    // Same equation with k lowered, written with nabla*:
    // d_i h*_ajk - d_j h*_aik - G*_ik^m h*_ajm + G*_jk^m h*_aim + h*_bki tau^b_aj - h*_bkj tau^b_ai
    const auto gm = s.g.at(p);
    for (int a = 0; a < r; ++a)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) {
            double x = dhs[i](p, L.h(a, j, k)) - dhs[j](p, L.h(a, i, k));
            for (int m = 0; m < n; ++m) {
              x += -Gs[idx3(n, i, k, m)] * hs[L.h(a, j, m)] + Gs[idx3(n, j, k, m)] * hs[L.h(a, i, m)];
            }
            for (int b = 0; b < r; ++b) {
              x += hs[L.h(b, k, i)] * tau[L.tau(b, a, j)] - hs[L.h(b, k, j)] * tau[L.tau(b, a, i)];
            }
            double lowered = 0.0;
            for (int m = 0; m < n; ++m) {
              lowered += gm[idx2(n, k, m)] * cods[static_cast<std::size_t>(a * n * n * n) + idx3(n, i, j, m)];
            }
            out.codazzi_hstar_cross_check = std::max(out.codazzi_hstar_cross_check, std::abs(lowered - x));
          }

    auto ric = out.ricci.at(p);
    for (int a = 0; a < r; ++a)
      for (int b = 0; b < r; ++b)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            double v = dtau[i](p, L.tau(a, b, j)) - dtau[j](p, L.tau(a, b, i));
            for (int c = 0; c < r; ++c) v += tau[L.tau(a, c, i)] * tau[L.tau(c, b, j)] - tau[L.tau(a, c, j)] * tau[L.tau(c, b, i)];
            for (int l = 0; l < n; ++l) v += -h[L.h(a, i, l)] * hs_up[L.h(b, j, l)] + h[L.h(a, j, l)] * hs_up[L.h(b, i, l)];
            ric[static_cast<std::size_t>((a * r + b) * n * n) + idx2(n, i, j)] = v;
          }
  }

  out.gauss_norm = norm_of(out.gauss);
  out.codazzi_h_norm = norm_of(out.codazzi_h);
  out.codazzi_hstar_norm = norm_of(out.codazzi_hstar);
  out.ricci_norm = norm_of(out.ricci);
  return out;
}

BundleConnection bundle_connection(const StatisticalStructure& s, const ExtrinsicData& e) {
  s.validate();
  const Chart& chart = s.chart();
  e.validate(chart);
  const int n = s.dim();
  const int r = e.r;
  const int N = n + r;
  const Layout L{n, r};
  const Field ginv = inverse_metric(s.g);
  const Field gamma_star = dual_connection(s);

  BundleConnection c{n, r, Field(chart, {n, N, N}), Field(chart, {n, N, N}), s.g};
  auto at = [N](int i, int K, int M) { return static_cast<std::size_t>((i * N + K) * N + M); };
  for (std::size_t p = 0; p < chart.size(); ++p) {
    const auto gi = ginv.at(p);
    const auto G = s.gamma.at(p);
    const auto Gs = gamma_star.at(p);
    const auto h = e.h.at(p);
    const auto hs = e.h_star.at(p);
    const auto tau = e.tau.at(p);
    auto A = c.A.at(p);
    auto As = c.A_star.at(p);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l) {
          A[at(i, j, l)] = G[idx3(n, i, l, j)];
          As[at(i, j, l)] = Gs[idx3(n, i, l, j)];
        }
      for (int a = 0; a < r; ++a) {
        for (int j = 0; j < n; ++j) {
          double up = 0.0, up_star = 0.0;
          for (int m = 0; m < n; ++m) {
            up_star += gi[idx2(n, j, m)] * hs[L.h(a, i, m)];
            up += gi[idx2(n, j, m)] * h[L.h(a, i, m)];
          }
          A[at(i, j, n + a)] = up_star;
          As[at(i, j, n + a)] = up;
          A[at(i, n + a, j)] = -h[L.h(a, i, j)];
          As[at(i, n + a, j)] = -hs[L.h(a, i, j)];
        }
        for (int b = 0; b < r; ++b) {
          A[at(i, n + a, n + b)] = tau[L.tau(a, b, i)];
          As[at(i, n + a, n + b)] = -tau[L.tau(b, a, i)];
        }
      }
    }
  }
  c.A.require_finite("bundle_connection");
  c.A_star.require_finite("bundle_connection");
  return c;
}

Field fiber_metric(const BundleConnection& c) {
  const int n = c.n, N = c.rank();
  Field G(c.chart(), {N, N});
  for (std::size_t p = 0; p < c.chart().size(); ++p) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) G(p, idx2(N, i, j)) = c.g(p, idx2(n, i, j));
    for (int a = n; a < N; ++a) G(p, idx2(N, a, a)) = 1.0;
  }
  return G;
}

double bundle_duality_residual(const BundleConnection& c) {
  const int n = c.n, N = c.rank();
  const Field G = fiber_metric(c);
  const auto dG = gradients(G);
  double worst = 0.0;
  for (std::size_t p = 0; p < c.chart().size(); ++p) {
    const Matrix Gm = to_matrix(G.at(p), N, N);
    for (int i = 0; i < n; ++i) {
      const Matrix A = to_matrix(c.A.at(p), N, N, static_cast<std::size_t>(i * N * N));
      const Matrix As = to_matrix(c.A_star.at(p), N, N, static_cast<std::size_t>(i * N * N));
      const Matrix res = A.transpose() * Gm + Gm * As - to_matrix(dG[i].at(p), N, N);
      worst = std::max(worst, res.cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

namespace {

BundleCurvature curvature_of(const Field& A, int n, int N) {
  const auto dA = gradients(A);
  BundleCurvature out{Field(A.chart(), {n, n, N, N}), 0.0};
  const std::size_t block = static_cast<std::size_t>(N * N);
  for (std::size_t p = 0; p < A.chart().size(); ++p) {
    auto F = out.F.at(p);
    for (int i = 0; i < n; ++i) {
      const Matrix Ai = to_matrix(A.at(p), N, N, i * block);
      for (int j = 0; j < n; ++j) {
        const Matrix Aj = to_matrix(A.at(p), N, N, j * block);
        const Matrix Fij = to_matrix(dA[i].at(p), N, N, j * block) - to_matrix(dA[j].at(p), N, N, i * block) +
                           Ai * Aj - Aj * Ai;
        from_matrix(Fij, F, static_cast<std::size_t>(i * n + j) * block);
      }
    }
  }
  out.max = out.F.max_abs();
  return out;
}

}  // namespace

BundleCurvature bundle_curvature(const BundleConnection& c) { return curvature_of(c.A, c.n, c.rank()); }

BundleCurvature dual_bundle_curvature(const BundleConnection& c) { return curvature_of(c.A_star, c.n, c.rank()); }

double bundle_curvature_duality_residual(const BundleConnection& c) {
  const int n = c.n, N = c.rank();
  const Field G = fiber_metric(c);
  const BundleCurvature F = bundle_curvature(c);
  const BundleCurvature Fs = dual_bundle_curvature(c);
  const std::size_t block = static_cast<std::size_t>(N * N);
  double worst = 0.0;
  for (std::size_t p = 0; p < c.chart().size(); ++p) {
    const Matrix Gm = to_matrix(G.at(p), N, N);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const std::size_t off = static_cast<std::size_t>(i * n + j) * block;
        const Matrix lhs = Gm * to_matrix(F.F.at(p), N, N, off);
        const Matrix rhs = Gm * to_matrix(Fs.F.at(p), N, N, off);
        worst = std::max(worst, (lhs + rhs.transpose()).cwiseAbs().maxCoeff());
      }
  }
  return worst;
}

}  // namespace statbonnet
