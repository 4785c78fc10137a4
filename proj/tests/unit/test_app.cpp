#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "nsctl/app.hpp"

using namespace nsctl;
using namespace nsctl::app;
using nlohmann::json;

namespace {

bool has_issue_at(const std::vector<SchemaIssue>& issues, const std::string& path) {
  for (const auto& i : issues)
    if (i.path == path) return true;
  return false;
}

std::vector<SchemaIssue> issues_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.issues();
  }
  return {};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("schema validator keywords") {
  const SchemaValidator v(json::parse(R"({
    "type": "object", "required": ["n"], "additionalProperties": false,
    "properties": {
      "n": {"type": "integer", "minimum": 1, "maximum": 5},
      "x": {"type": "number", "exclusiveMinimum": 0},
      "s": {"type": "string", "pattern": "^a+$", "minLength": 2},
      "e": {"enum": ["p", "q"]},
      "l": {"type": "array", "minItems": 1, "maxItems": 2, "uniqueItems": true, "items": {"$ref": "#/$defs/i"}},
      "o": {"oneOf": [{"type": "integer"}, {"type": "string"}]},
      "m": {"type": "object", "additionalProperties": {"type": "number"}}
    },
    "$defs": {"i": {"type": "integer"}}
  })"));
  CHECK(v.validate(json{{"n", 3}}).empty());
  CHECK(v.validate(json{{"n", 3.0}}).empty());  // integral floats count as integers
  CHECK(has_issue_at(v.validate(json{{"n", 3.5}}), "/n"));
  CHECK(has_issue_at(v.validate(json{{"n", 0}}), "/n"));
  CHECK(has_issue_at(v.validate(json{{"n", 6}}), "/n"));
  CHECK(has_issue_at(v.validate(json::object()), "/"));
  CHECK(has_issue_at(v.validate(json{{"n", 1}, {"zzz", 1}}), "/zzz"));
  CHECK(has_issue_at(v.validate(json{{"n", 1}, {"x", 0}}), "/x"));
  CHECK(has_issue_at(v.validate(json{{"n", 1}, {"s", "ab"}}), "/s"));
  CHECK(has_issue_at(v.validate(json{{"n", 1}, {"s", "a"}}), "/s"));
  CHECK(has_issue_at(v.validate(json{{"n", 1}, {"e", "r"}}), "/e"));
  CHECK(has_issue_at(v.validate(json{{"n", 1}, {"l", json::array()}}), "/l"));
  CHECK(has_issue_at(v.validate(json{{"n", 1}, {"l", {1, 1}}}), "/l/1"));
  CHECK(has_issue_at(v.validate(json{{"n", 1}, {"l", {1, "a"}}}), "/l/1"));
  CHECK(has_issue_at(v.validate(json{{"n", 1}, {"l", {1, 2, 3}}}), "/l"));
  CHECK(v.validate(json{{"n", 1}, {"o", "a"}}).empty());
  CHECK(has_issue_at(v.validate(json{{"n", 1}, {"o", 1.5}}), "/o"));
  CHECK(has_issue_at(v.validate(json{{"n", 1}, {"m", {{"a", "b"}}}}), "/m/a"));
  CHECK_THROWS_AS(SchemaValidator(json{{"type", "object"}, {"if", true}}), Error);
}

TEST_CASE("run-config schema accepts the shipped configs and rejects unknown keys") {
  const std::filesystem::path dir = NSCTL_SOURCE_DIR "/configs";
  std::size_t seen = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    INFO(entry.path().string());
    CHECK(issues_of(slurp(entry.path())).empty());
    ++seen;
  }
  CHECK(seen >= 5);
  CHECK(has_issue_at(issues_of(R"({"domain": "torus", "bogus": 1})"), "/bogus"));
  CHECK(has_issue_at(issues_of(R"({"domain": "disk"})"), "/domain"));
  CHECK(has_issue_at(issues_of(R"({"domain": "torus", "observed": {"modes": []}})"), "/observed/modes"));
  CHECK(has_issue_at(issues_of(R"({"domain": "torus", "controlled": ["x_1_0"]})"), "/controlled/0"));
  CHECK(has_issue_at(issues_of(R"({"domain": "torus", "simulate": {"horizon": 0}})"), "/simulate/horizon"));
  CHECK(has_issue_at(issues_of(R"({"domain": "torus", "saturate": {"set": [[1, 2, 3]]}})"), "/saturate/set/0"));
  CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
}

TEST_CASE("format_double uses 17 significant digits") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(0.0) == "0");
  CHECK(format_double(-2.5) == "-2.5");
  CHECK(format_double(1e-20) == "9.9999999999999995e-21");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("sha256_hex") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("write_atomic replaces the target and leaves no temporary") {
  const auto dir = std::filesystem::temp_directory_path() / "nsctl_unit_atomic";
  std::filesystem::remove_all(dir);
  const auto file = dir / "sub" / "out.txt";
  write_atomic(file, "first");
  write_atomic(file, "second");
  CHECK(slurp(file) == "second");
  std::size_t count = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir / "sub")) ++count;
  CHECK(count == 1);
  std::filesystem::remove_all(dir);
}

TEST_CASE("build_table and build_system semantic checks") {
  auto cfg = json::parse(R"({"domain": "torus", "table": {"box": 2}, "controlled": ["c_1_0"], "nu": 0.5})");
  const auto t = build_table(cfg);
  CHECK(t->size() == 24);
  const auto sys = build_system(cfg, t);
  CHECK(sys.dimension() == 24);
  CHECK(sys.controlled().size() == 1);
  CHECK(sys.nu() == 0.5);

  CHECK_THROWS_AS(build_table(json::parse(R"({"domain": "torus"})")), ConfigError);
  CHECK_THROWS_AS(build_table(json::parse(R"({"domain": "sphere", "table": {"box": 2}})")), ConfigError);
  CHECK(build_table(json::parse(R"({"domain": "rectangle", "table": {"box": 3, "a": 2.0}})"))->params().geometry.a ==
        2.0);

  auto sub = json::parse(R"({"domain": "torus", "observed": {"modes": ["c_1_0", "s_1_0"]}, "controlled": ["c_1_1"]})");
  CHECK_THROWS_AS(build_system(sub, t), ConfigError);
  sub = json::parse(R"({"domain": "torus", "observed": {"modes": ["c_3_0"]}})");
  CHECK_THROWS_AS(build_system(sub, t), ConfigError);
  sub = json::parse(R"({"domain": "torus", "observed": {"modes": ["r_1_1"]}})");
  CHECK_THROWS_AS(build_system(sub, t), ConfigError);

  const auto small = build_system(json::parse(R"({"domain": "torus", "observed": {"box": 1}})"), t);
  CHECK(small.dimension() == 8);
  const auto q = state_from_map(small, json{{"s_1_1", 2.0}}, "/q0");
  CHECK(q[small.require_local(t->require_index(ModeId::torus(1, 1, Parity::sin)))] == 2.0);
  CHECK_THROWS_AS(state_from_map(small, json{{"c_2_0", 1.0}}, "/q0"), ConfigError);
}

TEST_CASE("trajectory CSV layout") {
  const auto t = std::make_shared<const StructureTable>(StructureTable::torus(1));
  const GalerkinSystem sys(t, modes_within(*t, 0), {}, 1.0);
  std::vector<double> q0(sys.dimension(), 0.0);
  q0[0] = 1.0;
  const auto traj = integrate(sys, q0, ControlSignal{}, 1.0, {.samples = 2});
  const auto csv = trajectory_csv(sys, traj, "hello");
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "# hello");
  std::getline(in, line);
  std::string expect = "t";
  for (const auto& l : sys.labels()) expect += ",q_" + l;
  CHECK(line == expect + ",E,Z");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3);
}

TEST_CASE("command names round trip") {
  for (const auto& n : command_names()) {
    const auto c = parse_command(n);
    REQUIRE(c);
    CHECK(std::string(to_string(*c)) == n);
  }
  CHECK(!parse_command("frobnicate"));
}
