#pragma once

// Run specifications, CSV field I/O and the subcommand runner behind the
// statbonnet command-line tool.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "statbonnet/errors.hpp"
#include "statbonnet/grid.hpp"
#include "statbonnet/tensor.hpp"

namespace statbonnet {

using OrderedJson = nlohmann::ordered_json;

/// A run specification that cannot be interpreted (exit status 2).
class SpecError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

struct Tolerances {
  double axiom = 1e-6;           // torsion and nabla g
  double gcr = 1e-5;             // Gauss-Codazzi-Ricci residuals
  double integrability = 1e-3;   // gate in front of bonnet_embed
  double embed = 5e-3;           // Lauritzen and induced-structure residuals
  std::optional<double> min_order;  // convergence: smallest accepted order
};

struct RunSpec {
  std::string command;
  std::optional<std::string> fixture;
  /// Data file per field name: g, gamma, h, hstar, tau, f, xi, phi, psi.
  std::map<std::string, std::string> data;
  std::optional<std::vector<int>> resolution;  // one entry, or one per axis
  std::vector<Interval> ranges;                // required with data files
  Tolerances tolerances;
  std::optional<MultiIndex> base_point;
  std::optional<Matrix> base_frame;
  std::optional<std::string> out_dir;
  // command-specific options
  double epsilon = 0.1;
  std::optional<double> margin;
  std::vector<double> alphas = {-1.0, 0.0, 0.5, 1.0};
  int codim = 1;
  std::vector<int> ladder = {17, 33, 65};
  std::string of = "check-structure";  // inner command of `convergence`
};

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"check-structure", "check-gcr", "embed",       "ambient",
                                                 "affine",          "legendre",  "alpha-embed", "convergence"};
  return names;
}

/// Reads the JSON form {command, fixture | data:{...}, chart:{ranges,
/// resolution}, tolerances:{...}, gauge:{base_point, base_frame}, out_dir,
/// options:{...}}. Unknown keys and wrong types raise SpecError.
RunSpec parse_run_spec(const OrderedJson& document);
RunSpec load_run_spec(const std::filesystem::path& file);
OrderedJson to_json(const RunSpec& spec);
/// SpecError unless the command, the input source and the tolerances make sense.
void validate(const RunSpec& spec);

/// Header names of a field's components: "g_00", "gamma_010", "f_2"; indices
/// are joined by '_' when an extent exceeds 9 ("f_1_0").
std::vector<std::string> component_names(const std::string& name, const std::vector<int>& value_shape);

/// One row per grid point in row-major order, shortest round-trip decimals.
void write_field_csv(const Field& field, const std::string& name, const std::filesystem::path& file);
/// Reads a field on `chart`. `value_shape` may contain one -1 extent, which
/// is inferred from the column count. SpecError on malformed files.
Field read_field_csv(const std::filesystem::path& file, const std::string& name, const Chart& chart,
                     std::vector<int> value_shape);

struct Check {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool lower_bound = false;  // value must exceed tolerance instead
  bool pass() const { return lower_bound ? value > tolerance : value <= tolerance; }
};

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

struct RunFailure {
  std::string kind;   // "malformed" or "numerical"
  std::string stage;  // operation that raised
  std::string message;
};

struct Report {
  std::string command;
  OrderedJson input;
  std::vector<Check> checks;
  std::vector<std::pair<std::string, double>> metrics;  // informational
  std::vector<Table> tables;
  std::vector<std::pair<std::string, Field>> fields;    // exported component tables
  std::optional<RunFailure> failure;
  std::vector<std::pair<std::string, double>> timings;  // seconds per stage

  bool pass() const;
  /// 0 pass, 1 failed check or numerical failure, 2 malformed input.
  int exit_status() const;
  /// Everything except the timings, so reruns are byte-identical.
  OrderedJson to_json() const;
};

/// Runs one subcommand. Library errors are caught and recorded in
/// Report::failure; nothing is written to disk.
Report run(const RunSpec& spec);

/// report.json, timings.json, <table>.csv and <field>.csv in `dir`.
void write_outputs(const Report& report, const std::filesystem::path& dir);

/// One line per check, then the failure if any.
std::string summary(const Report& report);

}  // namespace statbonnet
