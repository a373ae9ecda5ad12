#include "statbonnet/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "statbonnet/affine.hpp"
#include "statbonnet/ambient.hpp"
#include "statbonnet/bonnet.hpp"
#include "statbonnet/fixtures.hpp"
#include "statbonnet/gcr_bundle.hpp"
#include "statbonnet/hessian.hpp"
#include "statbonnet/lauritzen.hpp"
#include "statbonnet/structures.hpp"

namespace statbonnet {

namespace {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

bool is_command(const std::string& c) {
  const auto& names = command_names();
  return std::find(names.begin(), names.end(), c) != names.end();
}

void check_keys(const OrderedJson& obj, const std::vector<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw SpecError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw SpecError("unknown key '" + key + "' in " + where);
    }
  }
}

const std::vector<std::string>& data_keys() {
  static const std::vector<std::string> keys = {"g", "gamma", "h", "hstar", "tau", "f", "xi", "phi", "psi"};
  return keys;
}

}  // namespace

// ---------------------------------------------------------------------------
// Run specifications

RunSpec parse_run_spec(const OrderedJson& doc) {
  RunSpec s;
  try {
    check_keys(doc, {"command", "fixture", "data", "chart", "tolerances", "gauge", "out_dir", "options"}, "run spec");
    if (doc.contains("command")) s.command = doc.at("command").get<std::string>();
    if (doc.contains("fixture")) s.fixture = doc.at("fixture").get<std::string>();
    if (doc.contains("data")) {
      check_keys(doc.at("data"), data_keys(), "data");
      for (const auto& [key, value] : doc.at("data").items()) s.data[key] = value.get<std::string>();
    }
    if (doc.contains("chart")) {
      const auto& chart = doc.at("chart");
      check_keys(chart, {"ranges", "resolution"}, "chart");
      if (chart.contains("resolution")) {
        const auto& r = chart.at("resolution");
        s.resolution = r.is_array() ? r.get<std::vector<int>>() : std::vector<int>{r.get<int>()};
      }
      if (chart.contains("ranges")) {
        for (const auto& range : chart.at("ranges")) {
          const auto v = range.get<std::vector<double>>();
          if (v.size() != 2) throw SpecError("chart.ranges entries must be [lo, hi]");
          s.ranges.push_back({v[0], v[1]});
        }
      }
    }
    if (doc.contains("tolerances")) {
      const auto& t = doc.at("tolerances");
      check_keys(t, {"axiom", "gcr", "integrability", "embed", "min_order"}, "tolerances");
      if (t.contains("axiom")) s.tolerances.axiom = t.at("axiom").get<double>();
      if (t.contains("gcr")) s.tolerances.gcr = t.at("gcr").get<double>();
      if (t.contains("integrability")) s.tolerances.integrability = t.at("integrability").get<double>();
      if (t.contains("embed")) s.tolerances.embed = t.at("embed").get<double>();
      if (t.contains("min_order")) s.tolerances.min_order = t.at("min_order").get<double>();
    }
    if (doc.contains("gauge")) {
      const auto& g = doc.at("gauge");
      check_keys(g, {"base_point", "base_frame"}, "gauge");
      if (g.contains("base_point")) s.base_point = g.at("base_point").get<std::vector<int>>();
      if (g.contains("base_frame")) {
        const auto rows = g.at("base_frame").get<std::vector<std::vector<double>>>();
        Matrix m(static_cast<int>(rows.size()), rows.empty() ? 0 : static_cast<int>(rows[0].size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
          if (rows[i].size() != rows[0].size()) throw SpecError("gauge.base_frame rows differ in length");
          for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
        }
        s.base_frame = m;
      }
    }
    if (doc.contains("out_dir")) s.out_dir = doc.at("out_dir").get<std::string>();
    if (doc.contains("options")) {
      const auto& o = doc.at("options");
      check_keys(o, {"epsilon", "margin", "alphas", "codim", "ladder", "of"}, "options");
      if (o.contains("epsilon")) s.epsilon = o.at("epsilon").get<double>();
      if (o.contains("margin")) s.margin = o.at("margin").get<double>();
      if (o.contains("alphas")) s.alphas = o.at("alphas").get<std::vector<double>>();
      if (o.contains("codim")) s.codim = o.at("codim").get<int>();
      if (o.contains("ladder")) s.ladder = o.at("ladder").get<std::vector<int>>();
      if (o.contains("of")) s.of = o.at("of").get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("run spec: ") + e.what());
  }
  return s;
}

RunSpec load_run_spec(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw SpecError("cannot open run spec '" + file.string() + "'");
  OrderedJson doc;
  try {
    doc = OrderedJson::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SpecError("run spec '" + file.string() + "' is not valid JSON: " + e.what());
  }
  return parse_run_spec(doc);
}

OrderedJson to_json(const RunSpec& s) {
  OrderedJson j;
  j["command"] = s.command;
  if (s.fixture) j["fixture"] = *s.fixture;
  if (!s.data.empty()) {
    OrderedJson d = OrderedJson::object();
    for (const auto& [key, path] : s.data) d[key] = path;
    j["data"] = d;
  }
  OrderedJson chart = OrderedJson::object();
  if (s.resolution) chart["resolution"] = *s.resolution;
  if (!s.ranges.empty()) {
    OrderedJson ranges = OrderedJson::array();
    for (const Interval& r : s.ranges) ranges.push_back({r.lo, r.hi});
    chart["ranges"] = ranges;
  }
  j["chart"] = chart;
  OrderedJson tol;
  tol["axiom"] = s.tolerances.axiom;
  tol["gcr"] = s.tolerances.gcr;
  tol["integrability"] = s.tolerances.integrability;
  tol["embed"] = s.tolerances.embed;
  if (s.tolerances.min_order) tol["min_order"] = *s.tolerances.min_order;
  j["tolerances"] = tol;
  OrderedJson gauge = OrderedJson::object();
  if (s.base_point) gauge["base_point"] = *s.base_point;
  if (s.base_frame) {
    OrderedJson rows = OrderedJson::array();
    for (int i = 0; i < s.base_frame->rows(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(s.base_frame->cols()));
      for (int k = 0; k < s.base_frame->cols(); ++k) row[static_cast<std::size_t>(k)] = (*s.base_frame)(i, k);
      rows.push_back(row);
    }
    gauge["base_frame"] = rows;
  }
  j["gauge"] = gauge;
  OrderedJson opt;
  opt["epsilon"] = s.epsilon;
  if (s.margin) opt["margin"] = *s.margin;
  opt["alphas"] = s.alphas;
  opt["codim"] = s.codim;
  opt["ladder"] = s.ladder;
  opt["of"] = s.of;
  j["options"] = opt;
  return j;
}

void validate(const RunSpec& s) {
  if (s.command.empty()) throw SpecError("no command given");
  if (!is_command(s.command)) throw SpecError("unknown command '" + s.command + "'");
  if (s.fixture.has_value() == !s.data.empty()) throw SpecError("give exactly one of a fixture or data files");
  if (s.fixture && !s.ranges.empty()) throw SpecError("chart ranges are fixed by the fixture");
  if (s.resolution) {
    if (s.resolution->empty()) throw SpecError("chart.resolution is empty");
    for (int m : *s.resolution)
      if (m < kMinPointsPerAxis) throw SpecError("resolution below " + std::to_string(kMinPointsPerAxis) + " points");
    if (s.fixture && std::adjacent_find(s.resolution->begin(), s.resolution->end(), std::not_equal_to<>()) !=
                         s.resolution->end()) {
      throw SpecError("fixtures use one resolution on every axis");
    }
  }
  if (!s.data.empty()) {
    if (s.ranges.empty() || !s.resolution) throw SpecError("data input needs chart.ranges and chart.resolution");
    if (s.resolution->size() != 1 && s.resolution->size() != s.ranges.size()) {
      throw SpecError("chart.resolution needs one entry or one per range");
    }
    if (s.command == "convergence") throw SpecError("convergence resamples a fixture; data files cannot be refined");
  }
  for (const Interval& r : s.ranges)
    if (!(r.lo < r.hi)) throw SpecError("chart range with lo >= hi");
  const Tolerances& t = s.tolerances;
  for (double v : {t.axiom, t.gcr, t.integrability, t.embed})
    if (!(v > 0.0)) throw SpecError("tolerances must be positive");
  if (t.min_order && !(*t.min_order > 0.0)) throw SpecError("tolerances.min_order must be positive");
  if (!(s.epsilon > 0.0)) throw SpecError("options.epsilon must be positive");
  if (s.margin && !(*s.margin > 0.0)) throw SpecError("options.margin must be positive");
  if (s.codim != 1 && s.codim != 2) throw SpecError("options.codim must be 1 or 2");
  if (s.alphas.empty()) throw SpecError("options.alphas is empty");
  if (s.base_frame && s.base_frame->rows() != s.base_frame->cols()) throw SpecError("gauge.base_frame is not square");
  if (s.command == "convergence") {
    if (s.of == "convergence" || !is_command(s.of)) throw SpecError("options.of must name another command");
    if (s.ladder.size() < 2) throw SpecError("options.ladder needs at least two resolutions");
    for (std::size_t k = 0; k < s.ladder.size(); ++k) {
      if (s.ladder[k] < kMinPointsPerAxis || (k > 0 && s.ladder[k] <= s.ladder[k - 1])) {
        throw SpecError("options.ladder must increase and start at " + std::to_string(kMinPointsPerAxis) +
                        " points or more");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// CSV fields

std::vector<std::string> component_names(const std::string& name, const std::vector<int>& shape) {
  if (shape.empty()) return {name};
  const bool wide = std::any_of(shape.begin(), shape.end(), [](int e) { return e > 9; });
  std::size_t count = 1;
  for (int e : shape) count *= static_cast<std::size_t>(e);
  std::vector<std::string> out;
  out.reserve(count);
  std::vector<int> idx(shape.size(), 0);
  for (std::size_t c = 0; c < count; ++c) {
    std::string s = name + "_";
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (wide && k > 0) s += "_";
      s += std::to_string(idx[k]);
    }
    out.push_back(std::move(s));
    for (int k = static_cast<int>(idx.size()) - 1; k >= 0; --k) {
      if (++idx[static_cast<std::size_t>(k)] < shape[static_cast<std::size_t>(k)]) break;
      idx[static_cast<std::size_t>(k)] = 0;
    }
  }
  return out;
}

void write_field_csv(const Field& field, const std::string& name, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error("cannot write '" + file.string() + "'");
  const auto names = component_names(name, field.value_shape());
  for (std::size_t c = 0; c < names.size(); ++c) out << (c ? "," : "") << names[c];
  out << '\n';
  for (std::size_t p = 0; p < field.points(); ++p) {
    for (std::size_t c = 0; c < field.components(); ++c) out << (c ? "," : "") << format_double(field(p, c));
    out << '\n';
  }
}

namespace {

std::vector<std::string> split_csv_line(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string cell = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    const auto first = cell.find_first_not_of(" \t");
    const auto last = cell.find_last_not_of(" \t");
    cells.push_back(first == std::string::npos ? std::string() : cell.substr(first, last - first + 1));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

}  // namespace

Field read_field_csv(const std::filesystem::path& file, const std::string& name, const Chart& chart,
                     std::vector<int> shape) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw SpecError("cannot open data file '" + file.string() + "' for " + name);
  const std::string where = "data file '" + file.string() + "'";
  std::string line;
  if (!std::getline(in, line)) throw SpecError(where + " is empty");
  const auto header = split_csv_line(line);

  const auto unknown = std::find(shape.begin(), shape.end(), -1);
  if (unknown != shape.end()) {
    std::size_t known = 1;
    for (int e : shape)
      if (e != -1) known *= static_cast<std::size_t>(e);
    if (known == 0 || header.size() % known != 0 || header.size() == 0) {
      throw SpecError(where + ": " + std::to_string(header.size()) + " columns do not fit the shape of " + name);
    }
    *unknown = static_cast<int>(header.size() / known);
  }
  const auto expected = component_names(name, shape);
  if (header != expected) {
    throw SpecError(where + ": header does not match " + name + " (expected " + expected.front() + ", ..., " +
                    expected.back() + ")");
  }

  Field field(chart, shape);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    if (row >= chart.size()) throw SpecError(where + " has more rows than the chart has points");
    const auto cells = split_csv_line(line);
    if (cells.size() != field.components()) {
      throw SpecError(where + ": row " + std::to_string(row + 1) + " has " + std::to_string(cells.size()) +
                      " cells");
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = 0.0;
      const char* b = cells[c].data();
      const char* e = b + cells[c].size();
      if (!cells[c].empty() && *b == '+') ++b;
      const auto res = std::from_chars(b, e, v);
      if (res.ec != std::errc() || res.ptr != e) {
        throw SpecError(where + ": row " + std::to_string(row + 1) + " cell '" + cells[c] + "' is not a number");
      }
      field(row, c) = v;
    }
    ++row;
  }
  if (row != chart.size()) {
    throw SpecError(where + " has " + std::to_string(row) + " rows, the chart has " + std::to_string(chart.size()) +
                    " points");
  }
  return field;
}

// ---------------------------------------------------------------------------
// Reports

bool Report::pass() const {
  return !failure && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass(); });
}

int Report::exit_status() const {
  if (failure) return failure->kind == "malformed" ? 2 : 1;
  return pass() ? 0 : 1;
}

OrderedJson Report::to_json() const {
  OrderedJson j;
  j["command"] = command;
  j["input"] = input;
  j["pass"] = pass();
  OrderedJson cs = OrderedJson::array();
  for (const Check& c : checks) {
    OrderedJson o;
    o["name"] = c.name;
    o["value"] = c.value;
    o["tolerance"] = c.tolerance;
    o["relation"] = c.lower_bound ? ">" : "<=";
    o["pass"] = c.pass();
    cs.push_back(o);
  }
  j["checks"] = cs;
  OrderedJson ms = OrderedJson::object();
  for (const auto& [name, value] : metrics) ms[name] = value;
  j["metrics"] = ms;
  OrderedJson ts = OrderedJson::array();
  for (const Table& t : tables) {
    OrderedJson o;
    o["name"] = t.name;
    o["columns"] = t.columns;
    o["rows"] = t.rows;
    ts.push_back(o);
  }
  j["tables"] = ts;
  OrderedJson fs = OrderedJson::array();
  for (const auto& [name, field] : fields) fs.push_back(name + ".csv");
  j["exported_fields"] = fs;
  if (failure) {
    OrderedJson f;
    f["kind"] = failure->kind;
    f["stage"] = failure->stage;
    f["message"] = failure->message;
    j["failure"] = f;
  }
  return j;
}

void write_outputs(const Report& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "report.json", std::ios::binary);
    out << report.to_json().dump(2) << '\n';
  }
  {
    OrderedJson t = OrderedJson::object();
    double total = 0.0;
    for (const auto& [stage, seconds] : report.timings) {
      t[stage] = seconds;
      total += seconds;
    }
    OrderedJson j;
    j["command"] = report.command;
    j["total_seconds"] = total;
    j["stages"] = t;
    std::ofstream out(dir / "timings.json", std::ios::binary);
    out << j.dump(2) << '\n';
  }
  for (const Table& t : report.tables) {
    std::ofstream out(dir / (t.name + ".csv"), std::ios::binary);
    for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << t.columns[c];
    out << '\n';
    for (const auto& row : t.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
      out << '\n';
    }
  }
  for (const auto& [name, field] : report.fields) write_field_csv(field, name, dir / (name + ".csv"));
}

std::string summary(const Report& report) {
  std::ostringstream out;
  for (const Check& c : report.checks) {
    out << (c.pass() ? "PASS " : "FAIL ") << c.name << " = " << format_double(c.value)
        << (c.lower_bound ? " > " : " <= ") << format_double(c.tolerance) << '\n';
  }
  if (report.failure) {
    out << "ERROR (" << report.failure->kind << ") in " << report.failure->stage << ": " << report.failure->message
        << '\n';
  }
  out << report.command << ": " << (report.pass() ? "pass" : "fail") << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Subcommands

namespace {

struct Inputs {
  Chart chart;
  std::optional<StatisticalStructure> structure;
  std::optional<ExtrinsicData> extrinsic;
  std::optional<LauritzenPair> pair;
  std::optional<AffineImmersion> immersion;
  std::optional<HessePotential> potential;
};

Inputs load_inputs(const RunSpec& s) {
  if (s.fixture) {
    Fixture fx = fixture(*s.fixture, s.resolution ? s.resolution->front() : 33);
    Inputs in{fx.chart, std::move(fx.structure), std::nullopt, std::move(fx.pair), std::move(fx.immersion),
              std::move(fx.potential)};
    in.extrinsic = std::move(fx.extrinsic);
    return in;
  }
  std::vector<int> counts = *s.resolution;
  if (counts.size() == 1) counts.assign(s.ranges.size(), counts.front());
  Inputs in{Chart(s.ranges, counts), std::nullopt, std::nullopt, std::nullopt, std::nullopt, std::nullopt};
  const int n = in.chart.dim();
  auto read = [&](const std::string& key, std::vector<int> shape) -> std::optional<Field> {
    const auto it = s.data.find(key);
    if (it == s.data.end()) return std::nullopt;
    return read_field_csv(it->second, key, in.chart, std::move(shape));
  };
  auto g = read("g", {n, n});
  auto gamma = read("gamma", {n, n, n});
  if (g.has_value() != gamma.has_value()) throw SpecError("data: g and gamma must be given together");
  if (g) in.structure = StatisticalStructure{std::move(*g), std::move(*gamma)};
  if (auto h = read("h", {-1, n, n})) {
    const int r = h->value_shape()[0];
    auto hs = read("hstar", {r, n, n});
    if (!hs) throw SpecError("data: h needs hstar");
    auto tau = read("tau", {r, r, n});
    in.extrinsic = ExtrinsicData{r, std::move(*h), std::move(*hs), tau ? std::move(*tau) : Field(in.chart, {r, r, n})};
  } else if (s.data.count("hstar") || s.data.count("tau")) {
    throw SpecError("data: hstar and tau need h");
  }
  auto f = read("f", {-1});
  if (f) {
    const int N = f->value_shape()[0];
    if (auto phi = read("phi", {N})) in.pair = LauritzenPair{*f, std::move(*phi)};
    if (auto xi = read("xi", {N})) in.immersion = AffineImmersion{s.codim, *f, std::move(*xi)};
  } else if (s.data.count("phi") || s.data.count("xi")) {
    throw SpecError("data: phi and xi need f");
  }
  if (auto psi = read("psi", {})) in.potential = HessePotential{std::move(*psi), std::nullopt, std::nullopt};
  return in;
}

template <class T>
const T& need(const std::optional<T>& v, const std::string& command, const char* what) {
  if (!v) throw SpecError(command + " needs " + what);
  return *v;
}

class Runner {
 public:
  Runner(const RunSpec& spec, Report& report) : spec_(spec), report_(report) {}

  template <class F>
  auto stage(const std::string& name, F&& fn) {
    current = name;
    const auto t0 = std::chrono::steady_clock::now();
    auto result = fn();
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    report_.timings.emplace_back(name, dt.count());
    return result;
  }

  void check(const std::string& name, double value, double tolerance) {
    report_.checks.push_back({name, value, tolerance, false});
  }
  void check_above(const std::string& name, double value, double bound) {
    report_.checks.push_back({name, value, bound, true});
  }
  void metric(const std::string& name, double value) { report_.metrics.emplace_back(name, value); }
  void field(const std::string& name, const Field& f) { report_.fields.emplace_back(name, f); }

  void run() {
    const std::string& c = spec_.command;
    Inputs in = stage("load", [&] { return load_inputs(spec_); });
    if (spec_.base_point && static_cast<int>(spec_.base_point->size()) != in.chart.dim()) {
      throw SpecError("gauge.base_point has " + std::to_string(spec_.base_point->size()) + " entries, the chart has " +
                      std::to_string(in.chart.dim()) + " axes");
    }
    if (spec_.base_point && !in.chart.contains(*spec_.base_point)) throw SpecError("gauge.base_point is off the grid");
    if (c == "check-structure") check_structure(in);
    else if (c == "check-gcr") check_gcr(in);
    else if (c == "embed") embed(in);
    else if (c == "ambient") ambient(in);
    else if (c == "affine") affine(in);
    else if (c == "legendre") legendre(in);
    else if (c == "alpha-embed") alpha_embed(in);
  }

  std::string current = "load";

 private:
  void check_structure(const Inputs& in) {
    const StatisticalStructure& s = need(in.structure, spec_.command, "g and gamma");
    const StatisticalReport rep = stage("check_statistical", [&] { return check_statistical(s); });
    check("torsion", rep.torsion_residual, spec_.tolerances.axiom);
    check("nabla_g", rep.nabla_g_residual, spec_.tolerances.axiom);
    check_above("min_metric_eigenvalue", rep.min_metric_eigenvalue, 0.0);
    stage("duality", [&] {
      const Field dual = dual_connection(s);
      metric("dual_involution", max_abs_difference(dual_connection({s.g, dual}), s.gamma));
      metric("alpha0_levi_civita", max_abs_difference(alpha_connection(s, 0.0), levi_civita(s.g)));
      metric("curvature_duality", curvature_duality_residual(s));
      return 0;
    });
    field("g", s.g);
    field("gamma", s.gamma);
  }

  void check_gcr(const Inputs& in) {
    const StatisticalStructure& s = need(in.structure, spec_.command, "g and gamma");
    const ExtrinsicData& e = need(in.extrinsic, spec_.command, "h, hstar and tau");
    const GcrReport rep = stage("gcr_residuals", [&] { return gcr_residuals(s, e); });
    const double tol = spec_.tolerances.gcr;
    check("gauss", rep.gauss_norm.max, tol);
    check("codazzi_h", rep.codazzi_h_norm.max, tol);
    check("codazzi_hstar", rep.codazzi_hstar_norm.max, tol);
    check("ricci", rep.ricci_norm.max, tol);
    metric("gauss_rms", rep.gauss_norm.rms);
    metric("codazzi_h_rms", rep.codazzi_h_norm.rms);
    metric("codazzi_hstar_rms", rep.codazzi_hstar_norm.rms);
    metric("ricci_rms", rep.ricci_norm.rms);
    metric("codazzi_hstar_cross_check", rep.codazzi_hstar_cross_check);
    stage("bundle", [&] {
      const BundleConnection bc = bundle_connection(s, e);
      metric("bundle_curvature", bundle_curvature(bc).max);
      metric("bundle_duality", bundle_duality_residual(bc));
      return 0;
    });
  }

  BonnetResult bonnet(const Inputs& in) {
    const StatisticalStructure& s = need(in.structure, spec_.command, "g and gamma");
    const ExtrinsicData& e = need(in.extrinsic, spec_.command, "h, hstar and tau");
    BonnetOptions opt;
    opt.base = spec_.base_point;
    opt.base_frame = spec_.base_frame;
    opt.integrability_tolerance = spec_.tolerances.integrability;
    BonnetResult b = stage("bonnet_embed", [&] { return bonnet_embed(s, e, opt); });
    metric("gcr_max", b.gcr_max);
    metric("holonomy", b.frames.holonomy_residual);
    metric("frame_duality", b.frames.duality_deviation);
    metric("frame_condition", b.frames.max_condition);
    metric("theta_closedness", std::max(b.theta.closedness, b.theta.closedness_star));
    metric("path_dependence", std::max(b.path_dependence_f, b.path_dependence_phi));
    metric("pairing_asymmetry", b.report.pairing_asymmetry);
    return b;
  }

  void embed(const Inputs& in) {
    const BonnetResult b = bonnet(in);
    check("lauritzen_metric", b.report.metric_residual, spec_.tolerances.embed);
    check("lauritzen_connection", b.report.connection_residual, spec_.tolerances.embed);
    check_above("immersion_rank_ratio", b.report.min_rank_ratio_f, kRankThreshold);
    field("f", b.pair.f);
    field("phi", b.pair.phi);
  }

  // Bonnet pair when there is extrinsic data of positive codimension,
  // otherwise the pair given with the input.
  LauritzenPair source_pair(const Inputs& in) {
    if (in.extrinsic && in.extrinsic->r > 0 && in.structure) {
      const BonnetResult b = bonnet(in);
      check("lauritzen_metric", b.report.metric_residual, spec_.tolerances.embed);
      check("lauritzen_connection", b.report.connection_residual, spec_.tolerances.embed);
      return b.pair;
    }
    return need(in.pair, spec_.command, "extrinsic data or an (f, phi) pair");
  }

  void ambient(const Inputs& in) {
    const StatisticalStructure& s = need(in.structure, spec_.command, "g and gamma");
    const LauritzenPair p = source_pair(in);
    const PullbackPotential pp = stage("pullback_potential", [&] { return pullback_potential(p, spec_.base_point); });
    const AmbientPotential a =
        stage("extend_potential", [&] { return extend_potential(p, pp.psi0, spec_.epsilon, spec_.margin); });
    const InducedReport ind = stage("induced_structure", [&] { return induced_structure(a, p, s); });
    metric("omega_closedness", pp.closedness);
    metric("C", a.C);
    metric("margin", a.margin);
    metric("tube_min_separation", a.tube.min_separation);
    check_above("min_hessian_eigenvalue", a.min_eigenvalue, 0.0);
    check("restriction_error", a.restriction_error, 1e-10);
    check("gradient_condition", a.gradient_condition, spec_.tolerances.embed);
    check("induced_metric", ind.metric_residual, spec_.tolerances.embed);
    check("induced_connection", ind.connection_residual, spec_.tolerances.embed);
    field("psi0", pp.psi0);
  }

  void affine(const Inputs& in) {
    const AffineImmersion& im = need(in.immersion, spec_.command, "f and xi");
    const AffineDecomposition d = stage("decompose", [&] { return decompose(im); });
    const AffineStatisticalReport chk = check_statistical_affine(d);
    const ConormalMap cm = stage("conormal_map", [&] { return conormal_map(im); });
    check("tau", chk.tau_max, spec_.tolerances.axiom);
    check("reconstruction", d.reconstruction_residual, spec_.tolerances.embed);
    check("conormal_tangency", cm.tangency_residual, 1e-10);
    check("conormal_normalization", cm.normalization_residual, 1e-10);
    if (cm.position_residual) check("conormal_position", *cm.position_residual, 1e-10);
    metric("min_metric_eigenvalue", chk.min_metric_eigenvalue);
    metric("frame_condition", d.max_condition);
    metric("xi_phi", cm.xi_phi_residual);
    if (cm.eta_phi_residual) metric("eta_phi", *cm.eta_phi_residual);
    if (chk.mu_max) metric("mu_max", *chk.mu_max);
    metric("torsion", chk.statistical.torsion_residual);
    metric("nabla_g", chk.statistical.nabla_g_residual);
    const AffineLauritzen al =
        stage("affine_to_lauritzen", [&] { return affine_to_lauritzen(im, spec_.tolerances.axiom); });
    check("lauritzen_metric", al.report.metric_residual, spec_.tolerances.embed);
    check("lauritzen_connection", al.report.connection_residual, spec_.tolerances.embed);
    field("phi", cm.phi);
    field("g", d.g);
    field("gamma", d.gamma);
  }

  void legendre(const Inputs& in) {
    const HessePotential& p = need(in.potential, spec_.command, "a potential psi");
    const LegendreResult r = stage("legendre_transform", [&] { return legendre_transform(p); });
    const LegendreDiagnostics& d = r.diagnostics;
    check_above("monotone", d.monotone ? 1.0 : 0.0, 0.5);
    check("gradient_interpolated", d.gradient_residual_interpolated, 1e-4);
    check("inverse_hessian", d.inverse_hessian_residual, 1e-5);
    if (d.gradient_residual_analytic) check("gradient_analytic", *d.gradient_residual_analytic, 1e-7);
    if (d.inverse_hessian_residual_analytic) {
      check("inverse_hessian_analytic", *d.inverse_hessian_residual_analytic, 1e-7);
    }
    if (d.double_legendre_residual) check("double_legendre", *d.double_legendre_residual, 1e-7);
    if (d.conjugate_value_residual) metric("conjugate_value", *d.conjugate_value_residual);
    field("eta", r.eta);
    field("psi_star", r.psi_star);
  }

  void alpha_embed(const Inputs& in) {
    const StatisticalStructure& s = need(in.structure, spec_.command, "g and gamma");
    const LauritzenPair p = in.pair ? *in.pair : source_pair(in);
    for (double alpha : spec_.alphas) {
      const std::string tag = "alpha=" + format_double(alpha) + ".";
      const LauritzenPair ap =
          stage(tag + "pair", [&] { return alpha_pair(p, s, alpha, spec_.tolerances.embed); });
      const LauritzenReport rep = verify_lauritzen(ap, {s.g, alpha_connection(s, alpha)});
      check(tag + "metric", rep.metric_residual, spec_.tolerances.embed);
      check(tag + "connection", rep.connection_residual, spec_.tolerances.embed);
      const AmbientPotential a = stage(tag + "ambient", [&] {
        const PullbackPotential pp = pullback_potential(ap, spec_.base_point);
        return extend_potential_shrinking(ap, pp.psi0, spec_.epsilon, spec_.margin);
      });
      check_above(tag + "ambient_min_eigenvalue", a.min_eigenvalue, 0.0);
      metric(tag + "epsilon", a.tube.epsilon);
      metric(tag + "C", a.C);
    }
  }

  const RunSpec& spec_;
  Report& report_;
};

void run_convergence(const RunSpec& spec, Report& report) {
  struct Series {
    std::string name;
    bool lower_bound = false;
    std::vector<double> values;
  };
  std::vector<Series> series;
  std::vector<double> spacing;
  for (int m : spec.ladder) {
    RunSpec inner = spec;
    inner.command = spec.of;
    inner.resolution = std::vector<int>{m};
    inner.out_dir.reset();
    const Report r = run(inner);
    for (const auto& [stage, seconds] : r.timings) report.timings.emplace_back(std::to_string(m) + "." + stage, seconds);
    if (r.failure) {
      report.failure = r.failure;
      report.failure->stage = spec.of + " at " + std::to_string(m) + ": " + r.failure->stage;
      return;
    }
    spacing.push_back(1.0 / (m - 1));
    for (const Check& c : r.checks) {
      auto it = std::find_if(series.begin(), series.end(), [&](const Series& s) { return s.name == c.name; });
      if (it == series.end()) {
        series.push_back({c.name, c.lower_bound, {}});
        it = series.end() - 1;
      }
      it->values.push_back(c.value);
    }
    if (m == spec.ladder.back()) {
      for (const Check& c : r.checks) report.checks.push_back({c.name + "@" + std::to_string(m), c.value, c.tolerance,
                                                               c.lower_bound});
    }
  }
  Table t{"convergence", {"quantity", "resolution", "value", "order"}, {}};
  for (const Series& s : series) {
    if (s.values.size() != spec.ladder.size()) continue;
    for (std::size_t k = 0; k < s.values.size(); ++k) {
      std::string order;
      // lower-bound quantities (eigenvalues, ranks) do not converge to zero
      const bool measurable = !s.lower_bound && k > 0 && s.values[k - 1] > 1e-13 && s.values[k] > 1e-13;
      double o = 0.0;
      if (measurable) {
        o = std::log(s.values[k - 1] / s.values[k]) / std::log(spacing[k - 1] / spacing[k]);
        order = format_double(o);
      }
      t.rows.push_back({s.name, std::to_string(spec.ladder[k]), format_double(s.values[k]), order});
      if (measurable && k + 1 == s.values.size()) {
        report.metrics.emplace_back("order." + s.name, o);
        if (spec.tolerances.min_order) {
          report.checks.push_back({"order." + s.name, o, *spec.tolerances.min_order, true});
        }
      }
    }
  }
  report.tables.push_back(std::move(t));
}

}  // namespace

Report run(const RunSpec& spec) {
  Report report;
  report.command = spec.command;
  report.input = to_json(spec);
  std::string stage = "validate";
  try {
    validate(spec);
    if (spec.command == "convergence") {
      stage = "convergence";
      run_convergence(spec, report);
    } else {
      Runner runner(spec, report);
      try {
        runner.run();
      } catch (...) {
        stage = runner.current;
        throw;
      }
    }
  } catch (const InvalidArgument& e) {
    report.failure = RunFailure{"malformed", stage, e.what()};
  } catch (const std::exception& e) {
    report.failure = RunFailure{"numerical", stage, e.what()};
  }
  return report;
}

}  // namespace statbonnet
