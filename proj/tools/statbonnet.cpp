// statbonnet: command-line front end. See README.md for the run-spec format.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "statbonnet/cli.hpp"

using namespace statbonnet;

namespace {

Interval parse_range(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw SpecError("--range expects lo:hi, got '" + text + "'");
  try {
    std::size_t used = 0;
    const std::string lo = text.substr(0, colon), hi = text.substr(colon + 1);
    const double a = std::stod(lo, &used);
    if (used != lo.size()) throw std::invalid_argument(lo);
    const double b = std::stod(hi, &used);
    if (used != hi.size()) throw std::invalid_argument(hi);
    return {a, b};
  } catch (const std::logic_error&) {
    throw SpecError("--range expects lo:hi, got '" + text + "'");
  }
}

// Which tolerance --tol sets for a command.
double& main_tolerance(RunSpec& spec) {
  const std::string& c = spec.command == "convergence" ? spec.of : spec.command;
  if (c == "check-structure") return spec.tolerances.axiom;
  if (c == "check-gcr") return spec.tolerances.gcr;
  if (c == "legendre") throw SpecError("legendre checks use fixed tolerances; --tol does not apply");
  return spec.tolerances.embed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"statbonnet: statistical manifolds, Gauss-Codazzi-Ricci data and their embeddings"};
  app.set_help_flag("-h,--help", "Print this help and exit");

  std::string command, spec_file, fixture_name, out_dir, of;
  std::vector<std::string> data, ranges;
  std::vector<int> resolution, base_point, ladder;
  std::vector<double> alphas;
  double tol = 0, axiom_tol = 0, gcr_tol = 0, integrability_tol = 0, embed_tol = 0, min_order = 0;
  double epsilon = 0, margin = 0;
  int codim = 1;

  std::string commands;
  for (const auto& c : command_names()) commands += (commands.empty() ? "" : ", ") + c;
  app.add_option("command", command, "One of: " + commands);
  app.add_option("--spec", spec_file, "Run spec (JSON); flags override its fields");
  auto* o_fixture = app.add_option("--fixture", fixture_name, "Built-in fixture, e.g. sphere2 or exp_potential(2)");
  auto* o_data = app.add_option("--data", data, "Data file as name=path (g, gamma, h, hstar, tau, f, xi, phi, psi)");
  auto* o_res = app.add_option("--res", resolution, "Points per axis (one value, or one per axis)");
  auto* o_range = app.add_option("--range", ranges, "Chart range lo:hi, once per axis (data input)");
  auto* o_tol = app.add_option("--tol", tol, "Main tolerance of the command");
  auto* o_axiom = app.add_option("--axiom-tol", axiom_tol, "Torsion and nabla g tolerance");
  auto* o_gcr = app.add_option("--gcr-tol", gcr_tol, "Gauss-Codazzi-Ricci tolerance");
  auto* o_integ = app.add_option("--integrability-tol", integrability_tol, "GCR gate before reconstruction");
  auto* o_embed = app.add_option("--embed-tol", embed_tol, "Lauritzen and induced-structure tolerance");
  auto* o_order = app.add_option("--min-order", min_order, "convergence: smallest accepted order");
  auto* o_base = app.add_option("--base-point", base_point, "Base grid index (one per axis)");
  auto* o_out = app.add_option("--out", out_dir, "Directory for report.json, timings.json and CSV tables");
  auto* o_eps = app.add_option("--epsilon", epsilon, "ambient: half-width of the normal box");
  auto* o_margin = app.add_option("--margin", margin, "ambient: required Hessian eigenvalue margin");
  auto* o_alpha = app.add_option("--alpha", alphas, "alpha-embed: values of alpha");
  auto* o_codim = app.add_option("--codim", codim, "affine: codimension of data input (1 or 2)");
  auto* o_ladder = app.add_option("--ladder", ladder, "convergence: increasing resolutions");
  auto* o_of = app.add_option("--of", of, "convergence: command to refine");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  RunSpec spec;
  try {
    if (!spec_file.empty()) spec = load_run_spec(spec_file);
    if (!command.empty()) spec.command = command;
    if (o_fixture->count()) {
      spec.fixture = fixture_name;
      spec.data.clear();
    }
    if (o_data->count()) {
      spec.data.clear();
      spec.fixture.reset();
      for (const std::string& item : data) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) throw SpecError("--data expects name=path, got '" + item + "'");
        spec.data[item.substr(0, eq)] = item.substr(eq + 1);
      }
    }
    if (o_res->count()) spec.resolution = resolution;
    if (o_range->count()) {
      spec.ranges.clear();
      for (const std::string& r : ranges) spec.ranges.push_back(parse_range(r));
    }
    if (o_axiom->count()) spec.tolerances.axiom = axiom_tol;
    if (o_gcr->count()) spec.tolerances.gcr = gcr_tol;
    if (o_integ->count()) spec.tolerances.integrability = integrability_tol;
    if (o_embed->count()) spec.tolerances.embed = embed_tol;
    if (o_order->count()) spec.tolerances.min_order = min_order;
    if (o_base->count()) spec.base_point = base_point;
    if (o_out->count()) spec.out_dir = out_dir;
    if (o_eps->count()) spec.epsilon = epsilon;
    if (o_margin->count()) spec.margin = margin;
    if (o_alpha->count()) spec.alphas = alphas;
    if (o_codim->count()) spec.codim = codim;
    if (o_ladder->count()) spec.ladder = ladder;
    if (o_of->count()) spec.of = of;
    if (o_tol->count()) {
      if (spec.command.empty()) throw SpecError("--tol needs a command");
      main_tolerance(spec) = tol;
    }
  } catch (const SpecError& e) {
    std::cerr << "statbonnet: " << e.what() << '\n';
    return 2;
  }

  const Report report = run(spec);
  std::cout << summary(report);
  if (spec.out_dir) {
    try {
      write_outputs(report, *spec.out_dir);
    } catch (const std::exception& e) {
      std::cerr << "statbonnet: " << e.what() << '\n';
      return 1;
    }
  }
  return report.exit_status();
}
