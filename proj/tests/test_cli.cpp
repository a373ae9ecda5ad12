#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "statbonnet/cli.hpp"
#include "statbonnet/fixtures.hpp"

using namespace statbonnet;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "statbonnet_test_cli";
  std::filesystem::create_directories(dir);
  return dir / name;
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  out << text;
}

RunSpec fixture_spec(const std::string& command, const std::string& name, int m) {
  RunSpec s;
  s.command = command;
  s.fixture = name;
  s.resolution = std::vector<int>{m};
  return s;
}

}  // namespace

TEST_CASE("run spec parsing") {
  const auto doc = OrderedJson::parse(R"({
    "command": "embed",
    "fixture": "sphere2",
    "chart": {"resolution": 33},
    "tolerances": {"embed": 1e-3, "integrability": 1e-2},
    "gauge": {"base_point": [16, 16], "base_frame": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]},
    "out_dir": "out",
    "options": {"epsilon": 0.05, "alphas": [0.5]}
  })");
  const RunSpec s = parse_run_spec(doc);
  CHECK(s.command == "embed");
  CHECK(*s.fixture == "sphere2");
  CHECK(*s.resolution == std::vector<int>{33});
  CHECK(s.tolerances.embed == 1e-3);
  CHECK(s.tolerances.axiom == 1e-6);
  CHECK(*s.base_point == MultiIndex{16, 16});
  CHECK(s.base_frame->isIdentity());
  CHECK(s.epsilon == 0.05);
  CHECK(s.alphas == std::vector<double>{0.5});
  CHECK_NOTHROW(validate(s));
  // the echoed input parses back to the same run, minus the output directory
  const RunSpec echo = parse_run_spec(to_json(s));
  CHECK(to_json(echo).dump() == to_json(s).dump());
  CHECK_FALSE(echo.out_dir.has_value());

  CHECK_THROWS_AS(parse_run_spec(OrderedJson::parse(R"({"command": "embed", "colour": 1})")), SpecError);
  CHECK_THROWS_AS(parse_run_spec(OrderedJson::parse(R"({"tolerances": {"embed": "small"}})")), SpecError);
  CHECK_THROWS_AS(parse_run_spec(OrderedJson::parse(R"({"chart": {"ranges": [[0, 1, 2]]}})")), SpecError);
  CHECK_THROWS_AS(parse_run_spec(OrderedJson::parse(R"([1, 2])")), SpecError);
  write_text(scratch("broken.json"), "{\"command\": ");
  CHECK_THROWS_AS(load_run_spec(scratch("broken.json")), SpecError);
  CHECK_THROWS_AS(load_run_spec(scratch("missing.json")), SpecError);
}

TEST_CASE("run spec validation") {
  RunSpec s = fixture_spec("check-gcr", "euclidean", 9);
  CHECK_NOTHROW(validate(s));
  auto rejects = [](RunSpec bad) { CHECK_THROWS_AS(validate(bad), SpecError); };
  RunSpec t = s;
  t.command = "frobnicate";
  rejects(t);
  t = s;
  t.data["g"] = "g.csv";
  rejects(t);
  t = s;
  t.fixture.reset();
  rejects(t);
  t = s;
  t.tolerances.gcr = 0.0;
  rejects(t);
  t = s;
  t.resolution = std::vector<int>{3};
  rejects(t);
  t = s;
  t.resolution = std::vector<int>{9, 17};
  rejects(t);
  t = s;
  t.command = "convergence";
  t.of = "convergence";
  rejects(t);
  t.of = "check-gcr";
  t.ladder = {17, 9};
  rejects(t);
  t.ladder = {9, 17};
  CHECK_NOTHROW(validate(t));
  t = s;
  t.fixture.reset();
  t.data["g"] = "g.csv";
  rejects(t);  // no chart
}

TEST_CASE("component names") {
  CHECK(component_names("psi", {}) == std::vector<std::string>{"psi"});
  CHECK(component_names("g", {2, 2}) == std::vector<std::string>{"g_00", "g_01", "g_10", "g_11"});
  const auto wide = component_names("f", {11});
  CHECK(wide[10] == "f_10");
  const auto h = component_names("h", {1, 12, 2});
  CHECK(h[3] == "h_0_1_1");
}

TEST_CASE("csv fields round trip") {
  const Fixture fx = fixture("sphere2", 9);
  write_field_csv(fx.structure.gamma, "gamma", scratch("gamma.csv"));
  const Field back = read_field_csv(scratch("gamma.csv"), "gamma", fx.chart, {2, 2, 2});
  CHECK(back.data() == fx.structure.gamma.data());

  write_field_csv(fx.extrinsic.h, "h", scratch("h.csv"));
  const Field h = read_field_csv(scratch("h.csv"), "h", fx.chart, {-1, 2, 2});
  CHECK(h.value_shape() == std::vector<int>{1, 2, 2});

  const Chart small({{0.0, 1.0}}, {5});
  write_text(scratch("bad_header.csv"), "g_00,g_02\n1,0\n");
  CHECK_THROWS_AS(read_field_csv(scratch("bad_header.csv"), "g", small, {1, 2}), SpecError);
  write_text(scratch("short.csv"), "psi\n1\n2\n");
  CHECK_THROWS_AS(read_field_csv(scratch("short.csv"), "psi", small, {}), SpecError);
  write_text(scratch("nan.csv"), "psi\n1\n2\nx\n4\n5\n");
  CHECK_THROWS_AS(read_field_csv(scratch("nan.csv"), "psi", small, {}), SpecError);
  write_text(scratch("crlf.csv"), "psi\r\n1\r\n+2\r\n3e0\r\n 4 \r\n-5\r\n");
  CHECK(read_field_csv(scratch("crlf.csv"), "psi", small, {}).data() == std::vector<double>{1, 2, 3, 4, -5});
}

TEST_CASE("runs and exit statuses") {
  const Report ok = run(fixture_spec("check-gcr", "euclidean", 9));
  CHECK(ok.pass());
  CHECK(ok.exit_status() == 0);
  CHECK(ok.checks.size() == 4);

  const Report unknown = run(fixture_spec("check-gcr", "torus", 9));
  REQUIRE(unknown.failure.has_value());
  CHECK(unknown.failure->kind == "malformed");
  CHECK(unknown.exit_status() == 2);

  RunSpec gate = fixture_spec("embed", "sphere2", 9);
  gate.tolerances.integrability = 1e-12;
  const Report gated = run(gate);
  REQUIRE(gated.failure.has_value());
  CHECK(gated.failure->stage == "bonnet_embed");
  CHECK(gated.exit_status() == 1);

  RunSpec strict = fixture_spec("check-structure", "sphere2", 17);
  strict.tolerances.axiom = 1e-12;
  const Report failed = run(strict);
  CHECK_FALSE(failed.failure.has_value());
  CHECK(failed.exit_status() == 1);

  RunSpec data = fixture_spec("check-structure", "exp_potential(2)", 9);
  const Report first = run(data);
  write_outputs(first, scratch("exp"));
  data.fixture.reset();
  data.ranges = {{-1.0, 1.0}, {-1.0, 1.0}};
  data.data = {{"g", scratch("exp/g.csv").string()}, {"gamma", scratch("exp/gamma.csv").string()}};
  const Report second = run(data);
  CHECK(second.pass());
  CHECK(second.to_json()["checks"] == first.to_json()["checks"]);
}

TEST_CASE("reports are reproducible") {
  const RunSpec s = fixture_spec("embed", "sphere2", 17);
  CHECK(run(s).to_json().dump() == run(s).to_json().dump());

  RunSpec c = fixture_spec("convergence", "sphere2", 17);
  c.resolution.reset();
  c.ladder = {17, 33};
  c.tolerances.min_order = 3.5;
  c.tolerances.axiom = 1e-5;  // nabla_g is 3e-6 at 33 points
  const Report r = run(c);
  CHECK(r.pass());
  REQUIRE(r.tables.size() == 1);
  CHECK(r.tables[0].columns == std::vector<std::string>{"quantity", "resolution", "value", "order"});
  bool has_order = false;
  for (const Check& k : r.checks) has_order = has_order || k.name == "order.nabla_g";
  CHECK(has_order);
}
