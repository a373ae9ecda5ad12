// acceptance: one PASS/FAIL line per acceptance criterion, with the measured
// values. Exit status 0 when the set of failing criteria equals
// --known-failures (empty by default).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "statbonnet/affine.hpp"
#include "statbonnet/ambient.hpp"
#include "statbonnet/bonnet.hpp"
#include "statbonnet/cli.hpp"
#include "statbonnet/errors.hpp"
#include "statbonnet/fixtures.hpp"
#include "statbonnet/gcr_bundle.hpp"
#include "statbonnet/hessian.hpp"
#include "statbonnet/lauritzen.hpp"
#include "statbonnet/structures.hpp"
#include "statbonnet/tensor.hpp"

using namespace statbonnet;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Collects named measurements against their bounds.
class Outcome {
 public:
  void at_most(const std::string& name, double value, double bound) { add(name, value, "<=", bound, value <= bound); }
  void above(const std::string& name, double value, double bound) { add(name, value, ">", bound, value > bound); }
  void holds(const std::string& name, bool ok) {
    text_ << ' ' << name << '=' << (ok ? "yes" : "NO");
    ok_ = ok_ && ok;
  }
  void note(const std::string& name, double value) { text_ << ' ' << name << '=' << value; }

  bool ok() const { return ok_; }
  std::string text() const { return text_.str(); }

 private:
  void add(const std::string& name, double value, const char* op, double bound, bool ok) {
    text_ << ' ' << name << '=' << value << (ok ? "" : "!") << '(' << op << bound << ')';
    ok_ = ok_ && ok;
  }
  std::ostringstream text_ = [] {
    std::ostringstream s;
    s.precision(3);
    return s;
  }();
  bool ok_ = true;
};

template <class F>
bool throws_as(F&& f, const std::function<bool(const std::exception&)>& is_expected) {
  try {
    f();
  } catch (const std::exception& e) {
    return is_expected(e);
  }
  return false;
}

double order(double coarse, double fine) { return std::log2(coarse / fine); }

// max |d_i g_jk (FD) - d_i g_jk (closed form)|
double metric_derivative_error(const Fixture& fx) {
  const int n = fx.chart.dim();
  const Field exact = Field::sample(fx.chart, {n, n, n}, fx.metric_derivative);
  double out = 0.0;
  for (int i = 0; i < n; ++i) {
    const Field d = partial(fx.structure.g, i);
    for (std::size_t p = 0; p < fx.chart.size(); ++p)
      for (int jk = 0; jk < n * n; ++jk)
        out = std::max(out, std::abs(d(p, jk) - exact(p, static_cast<std::size_t>(i * n * n + jk))));
  }
  return out;
}

double worst(const LauritzenReport& r) { return std::max(r.metric_residual, r.connection_residual); }

// Structure axioms at 65 points; orders from 33 of the nabla g residual and of
// the metric derivative, where either is above roundoff.
void structure_axioms(Outcome& out) {
  for (const char* name : {"euclidean", "exp_potential(2)", "sphere2", "gaussian1d"}) {
    const auto start = Clock::now();
    const Fixture fx = fixture(name, 65);
    const StatisticalReport fine = check_statistical(fx.structure);
    const double elapsed = seconds_since(start);
    const Fixture fx33 = fixture(name, 33);
    const StatisticalReport coarse = check_statistical(fx33.structure);
    const std::string tag = std::string(name) + '.';
    out.at_most(tag + "torsion", fine.torsion_residual, 1e-6);
    out.at_most(tag + "nabla_g", fine.nabla_g_residual, 1e-6);
    out.above(tag + "min_eig", fine.min_metric_eigenvalue, 0.0);
    if (coarse.nabla_g_residual > 1e-11)
      out.above(tag + "order", order(coarse.nabla_g_residual, fine.nabla_g_residual), 3.5);
    const double dg33 = metric_derivative_error(fx33);
    if (dg33 > 1e-11) out.above(tag + "dg_order", order(dg33, metric_derivative_error(fx)), 3.5);
    out.at_most(tag + "seconds", elapsed, 10.0);
  }
}

void duality_suite(Outcome& out) {
  double involution = 0.0, alpha_dual = 0.0;
  for (const char* name : {"euclidean", "exp_potential(2)", "sphere2", "gaussian1d"}) {
    const StatisticalStructure s = fixture(name, 65).structure;
    const StatisticalStructure dual{s.g, dual_connection(s)};
    involution = std::max(involution, max_abs_difference(dual_connection(dual), s.gamma));
    const double lc_here = max_abs_difference(alpha_connection(s, 0.0), levi_civita(s.g));
    const double r_here = curvature_duality_residual(s);
    out.at_most(std::string(name) + ".R_relation", r_here, 1e-6);
    for (double alpha : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
      const StatisticalStructure sa{s.g, alpha_connection(s, alpha)};
      alpha_dual = std::max(alpha_dual, max_abs_difference(dual_connection(sa), alpha_connection(s, -alpha)));
    }
    out.at_most(std::string(name) + ".levi_civita", lc_here, 1e-7);
  }
  out.at_most("dual_of_dual", involution, 1e-8);
  out.at_most("alpha_dual", alpha_dual, 1e-8);
}

void legendre_suite(Outcome& out) {
  for (const char* name : {"exp_potential(2)", "gaussian1d"}) {
    const LegendreDiagnostics d = legendre_transform(*fixture(name, 33).potential).diagnostics;
    const std::string tag = std::string(name) + '.';
    out.at_most(tag + "gradient_interp", d.gradient_residual_interpolated, 1e-4);
    out.at_most(tag + "gradient_analytic", d.gradient_residual_analytic.value_or(INFINITY), 1e-7);
    out.at_most(tag + "inverse_hessian", d.inverse_hessian_residual, 1e-5);
    out.at_most(tag + "double_legendre", d.double_legendre_residual.value_or(INFINITY), 1e-7);
  }
}

// Smooth bump of height `amplitude` added to h^1_00 and h^1_11.
ExtrinsicData bumped(const Fixture& fx, double amplitude) {
  ExtrinsicData e = fx.extrinsic;
  for (std::size_t p = 0; p < fx.chart.size(); ++p) {
    const auto x = fx.chart.point(p);
    const double b = amplitude * std::exp(-4.0 * (std::pow(x[0] - std::numbers::pi / 2, 2) + std::pow(x[1] - 0.7, 2)));
    e.h(p, idx2(2, 0, 0)) += b;
    e.h(p, idx2(2, 1, 1)) += 0.5 * b;
  }
  return e;
}

void gcr_flatness(Outcome& out) {
  const Fixture fx = fixture("sphere2", 65);
  const GcrReport clean = gcr_residuals(fx.structure, fx.extrinsic);
  const double clean_flat = bundle_curvature(bundle_connection(fx.structure, fx.extrinsic)).max;
  out.at_most("gauss", clean.gauss_norm.max, 1e-5);
  out.at_most("codazzi_h", clean.codazzi_h_norm.max, 1e-5);
  out.at_most("codazzi_hstar", clean.codazzi_hstar_norm.max, 1e-5);
  out.at_most("ricci", clean.ricci_norm.max, 1e-5);
  out.at_most("bundle_curvature", clean_flat, 1e-5);

  const ExtrinsicData e = bumped(fx, 1e-2);
  const double gcr_factor = gcr_residuals(fx.structure, e).total() / clean.total();
  const double flat_factor = bundle_curvature(bundle_connection(fx.structure, e)).max / clean_flat;
  out.note("gcr_factor", gcr_factor);
  out.note("flatness_factor", flat_factor);
  out.above("gcr_raised", gcr_factor, 10.0);
  out.above("flatness_raised", flat_factor, 10.0);
  out.at_most("factor_disagreement", std::max(gcr_factor / flat_factor, flat_factor / gcr_factor), 10.0);
}

Matrix gauge() {
  Matrix M(3, 3);
  M << 1.2, 0.3, -0.1, 0.0, 0.9, 0.4, 0.2, -0.3, 1.1;
  return M;
}

void bonnet_pipeline(Outcome& out) {
  const Fixture coarse = fixture("sphere2", 33);
  const double worst33 = worst(bonnet_embed(coarse.structure, coarse.extrinsic).report);
  const auto start = Clock::now();
  const Fixture fx = fixture("sphere2", 65);
  const BonnetResult r = bonnet_embed(fx.structure, fx.extrinsic);
  const double elapsed = seconds_since(start);
  out.at_most("metric", r.report.metric_residual, 5e-3);
  out.at_most("connection", r.report.connection_residual, 5e-3);
  out.above("order", order(worst33, worst(r.report)), 1.5);
  out.at_most("holonomy", r.frames.holonomy_residual, 1e-5);
  out.at_most("closedness", std::max(r.theta.closedness, r.theta.closedness_star), 1e-4);
  out.at_most("path_dependence", std::max(r.path_dependence_f, r.path_dependence_phi), 1e-3);
  BonnetOptions opt;
  opt.base_frame = gauge();
  const double gauged = worst(bonnet_embed(fx.structure, fx.extrinsic, opt).report);
  out.at_most("gauge_ratio", std::max(gauged / worst(r.report), worst(r.report) / gauged), 2.0);
  out.at_most("seconds", elapsed, 60.0);
}

void equivalence_pipeline(Outcome& out) {
  const auto start = Clock::now();
  const Fixture fx = fixture("sphere2", 65);
  const BonnetResult b = bonnet_embed(fx.structure, fx.extrinsic);
  const AmbientPotential a = extend_potential(b.pair, pullback_potential(b.pair).psi0, 0.1);
  const InducedReport ind = induced_structure(a, b.pair, fx.structure);
  out.note("C", a.C);
  out.above("min_eig", a.min_eigenvalue, a.margin);
  out.at_most("gradient", a.gradient_condition, 5e-3);
  out.at_most("induced_metric", ind.metric_residual, 5e-3);
  out.at_most("induced_connection", ind.connection_residual, 5e-3);
  out.at_most("seconds", seconds_since(start), 60.0);
}

void alpha_pairs(Outcome& out) {
  const Fixture fx = fixture("exp_potential(2)", 33);
  for (double alpha : {-1.0, 0.0, 0.5, 1.0}) {
    std::ostringstream tag;
    tag << "alpha=" << alpha << '.';
    const StatisticalStructure sa{fx.structure.g, alpha_connection(fx.structure, alpha)};
    const LauritzenPair ap = alpha_pair(*fx.pair, fx.structure, alpha, 1e-5);
    const LauritzenReport rep = verify_lauritzen(ap, sa);
    out.at_most(tag.str() + "metric", rep.metric_residual, 1e-5);
    out.at_most(tag.str() + "connection", rep.connection_residual, 1e-5);
    const AmbientPotential a = extend_potential_shrinking(ap, pullback_potential(ap).psi0, 0.1);
    out.note(tag.str() + "epsilon", a.tube.epsilon);
    out.above(tag.str() + "min_eig", a.min_eigenvalue, a.margin);
  }
}

void affine_pipelines(Outcome& out) {
  const Fixture par = fixture("paraboloid(2)", 17);
  const AffineLauritzen pl = affine_to_lauritzen(*par.immersion);
  out.at_most("paraboloid.tau", pl.decomposition.tau.max_abs(), 1e-10);
  out.at_most("paraboloid.lauritzen", worst(pl.report), 1e-8);
  const Fixture fine = fixture("paraboloid(2)", 33);
  const AffineLauritzen fl = affine_to_lauritzen(*fine.immersion);
  const AmbientPotential a = extend_potential(fl.pair, pullback_potential(fl.pair).psi0, 0.1);
  const InducedReport ind = induced_structure(a, fl.pair, fine.structure);
  out.at_most("paraboloid.ambient", std::max(ind.metric_residual, ind.connection_residual), 1e-4);

  const Fixture sph = fixture("sphere2", 65);
  const AffineLauritzen sl = affine_to_lauritzen(*sph.immersion);
  out.at_most("sphere.tau", sl.decomposition.tau.max_abs(), 1e-5);
  out.at_most("sphere.lauritzen", worst(sl.report), 1e-5);

  const Fixture cone = fixture("cone_codim2", 65);
  const ConormalMap cm = conormal_map(*cone.immersion);
  out.at_most("cone.phi_eta", cm.position_residual.value_or(INFINITY), 1e-10);
  out.at_most("cone.phi_xi", cm.normalization_residual, 1e-10);
  out.at_most("cone.lauritzen", worst(affine_to_lauritzen(*cone.immersion).report), 1e-4);
}

void negative_controls(Outcome& out) {
  const Fixture sph = fixture("sphere2", 33);
  StatisticalStructure twisted = sph.structure;
  for (std::size_t p = 0; p < sph.chart.size(); ++p) {
    const auto x = sph.chart.point(p);
    const double b = 1e-2 * std::exp(-std::pow(x[0] - std::numbers::pi / 2, 2) - std::pow(x[1] - 0.8, 2));
    twisted.gamma(p, idx3(2, 0, 1, 0)) += b;
    twisted.gamma(p, idx3(2, 1, 0, 0)) -= b;
  }
  const StatisticalReport tr = check_statistical(twisted);
  out.note("torsion", tr.torsion_residual);
  out.holds("antisymmetric_detected", !tr.passes());

  const Fixture ex = fixture("exp_potential(2)", 33);
  const Field generic = Field::sample(ex.chart, {2}, [](std::span<const double> y, std::span<double> v) {
    v[0] = y[1] * y[1] + y[0];
    v[1] = std::sin(2.0 * y[0]);
  });
  out.holds("nonclosed_omega_rejected", throws_as([&] { pullback_potential(LauritzenPair{ex.pair->f, generic}); },
                                             [](const std::exception& e) {
                                               return dynamic_cast<const IntegrabilityError*>(&e) != nullptr;
                                             }));

  const LauritzenReport scaled = verify_lauritzen(LauritzenPair{ex.pair->f, 2.0 * ex.pair->phi}, ex.structure);
  out.at_most("scaled_phi_vs_max_g", std::abs(scaled.metric_residual / ex.structure.g.max_abs() - 1.0), 1e-3);

  ExtrinsicData mismatched = sph.extrinsic;
  mismatched.h = 1.1 * mismatched.h;
  out.holds("gate_aborts", throws_as([&] { bonnet_embed(sph.structure, mismatched); },
                                     [](const std::exception& e) {
                                       return dynamic_cast<const IntegrabilityError*>(&e) != nullptr;
                                     }));
}

struct Criterion {
  int id;
  std::string title;
  std::function<void(Outcome&)> body;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance: checks every acceptance criterion and prints one line each"};
  std::vector<int> known;
  app.add_option("--known-failures", known, "Criteria expected to fail; exit 0 iff exactly these fail");
  CLI11_PARSE(app, argc, argv);

  const auto suite_start = Clock::now();
  std::vector<Criterion> criteria = {
      {1, "structure axioms", structure_axioms},
      {2, "duality suite", duality_suite},
      {3, "legendre suite", legendre_suite},
      {4, "gcr and bundle flatness", gcr_flatness},
      {5, "bonnet pipeline", bonnet_pipeline},
      {6, "equivalence pipeline", equivalence_pipeline},
      {7, "alpha pairs", alpha_pairs},
      {8, "affine immersions", affine_pipelines},
      {9, "negative controls", negative_controls},
  };

  std::set<int> failed;
  auto report = [&](int id, const std::string& title, bool ok, const std::string& text, double elapsed) {
    if (!ok) failed.insert(id);
    std::cout << "ACCEPTANCE " << id << (ok ? " PASS " : " FAIL ") << title << ':' << text << " [" << elapsed
              << " s]" << std::endl;
  };
  for (const Criterion& c : criteria) {
    const auto start = Clock::now();
    Outcome out;
    bool ok = false;
    std::string text;
    try {
      c.body(out);
      ok = out.ok();
      text = out.text();
    } catch (const std::exception& e) {
      text = out.text() + " raised: " + e.what();
    }
    report(c.id, c.title, ok, text, seconds_since(start));
  }

  {
    const auto start = Clock::now();
    Outcome out;
    RunSpec spec;
    spec.command = "embed";
    spec.fixture = "sphere2";
    spec.resolution = std::vector<int>{65};
    const std::string first = run(spec).to_json().dump();
    out.holds("report_reproducible", run(spec).to_json().dump() == first);
    spec.command = "check-structure";
    out.holds("structure_reproducible", run(spec).to_json().dump() == run(spec).to_json().dump());
    out.at_most("suite_seconds", seconds_since(suite_start), 300.0);
    report(10, "wall clock and reproducibility", out.ok(), out.text(), seconds_since(start));
  }

  const std::set<int> expected(known.begin(), known.end());
  std::cout << "failed:";
  for (int id : failed) std::cout << ' ' << id;
  std::cout << (failed.empty() ? " none" : "") << '\n';
  return failed == expected ? 0 : 1;
}
