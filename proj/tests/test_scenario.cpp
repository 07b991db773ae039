#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include <twobody/commands.hpp>

using namespace twobody;
namespace fs = std::filesystem;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinRel;

namespace {

const char* kSmallMirror = R"(# small mirror run
[units]
mode = "dimensionless"

[particle]
mass = 1
v0 = 1
dv = 0.05

[reflector]
mass = 10
v0 = 0.2   # slow
dv = 0.01

[system]
kind = "mirror"

[spectrum]
nodes_particle = 12
nodes_reflector = 12

[grid]
x1_min = -40
x1_max = 10
nx1 = 51
x2_min = -10
x2_max = 10
nx2 = 21

[times]
t = [-10, 0]

[output]
prefix = "small"
)";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "twobody_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string replace_once(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  return s.replace(pos, from.size(), to);
}

// Runs the command-line tool and returns its exit status; stderr goes to `err`.
int run_cli(const std::string& args, const fs::path& err) {
  const std::string cmd = std::string("\"") + TWOBODY_CLI + "\" " + args + " > /dev/null 2> \"" + err.string() + "\"";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("parser reads sections, arrays, strings, booleans and comments", "[scenario][parser]") {
  const Document d = parse_document(kSmallMirror);
  CHECK(d.has_section("grid"));
  CHECK(std::get<double>(d.sections.at("reflector").at("v0").data) == 0.2);
  CHECK(std::get<std::string>(d.sections.at("system").at("kind").data) == "mirror");
  CHECK(std::get<std::vector<double>>(d.sections.at("times").at("t").data) == std::vector<double>{-10, 0});
  CHECK(d.section_lines.at("units") == 2);
  const Document b = parse_document("[a]\nflag = true\nname = \"x # y\"\n");
  CHECK(std::get<bool>(b.sections.at("a").at("flag").data));
  CHECK(std::get<std::string>(b.sections.at("a").at("name").data) == "x # y");
}

TEST_CASE("parse errors name the offending line", "[scenario][parser]") {
  CHECK_THROWS_WITH(parse_document("[a]\nx = 1\nx = 2\n"), ContainsSubstring("line 3") && ContainsSubstring("duplicate key"));
  CHECK_THROWS_WITH(parse_document("[a]\n\nbogus line\n"), ContainsSubstring("line 3"));
  CHECK_THROWS_WITH(parse_document("x = 1\n"), ContainsSubstring("outside any section"));
  CHECK_THROWS_WITH(parse_document("[a\n"), ContainsSubstring("line 1"));
  CHECK_THROWS_WITH(parse_document("[a]\ns = \"open\n"), ContainsSubstring("unterminated string"));
  CHECK_THROWS_WITH(parse_document("[a]\nv = [1, two]\n"), ContainsSubstring("'two'"));
  CHECK_THROWS_AS(parse_document("[a]\n[a]\n"), SchemaError);
}

TEST_CASE("unknown and misplaced keys are rejected with their line", "[scenario][schema]") {
  const std::string typo = replace_once(kSmallMirror, "nx2 = 21", "nx2 = 21\nny2 = 21");
  CHECK_THROWS_WITH(load_scenario(parse_document(typo)),
                    ContainsSubstring("unknown key 'grid.ny2'") && ContainsSubstring("line 29"));
  const std::string si_key = replace_once(kSmallMirror, "dv = 0.01", "dv = 0.01\ntemperature_K = 3");
  CHECK_THROWS_WITH(load_scenario(parse_document(si_key)), ContainsSubstring("units.mode"));
  const std::string missing = replace_once(kSmallMirror, "mass = 10", "mass_kg = 10");
  CHECK_THROWS_WITH(load_scenario(parse_document(missing)), ContainsSubstring("missing key 'reflector.mass'"));
  const std::string bad_type = replace_once(kSmallMirror, "nx1 = 51", "nx1 = 51.5");
  CHECK_THROWS_WITH(load_scenario(parse_document(bad_type)), ContainsSubstring("integer"));
}

TEST_CASE("loaded scenario carries every field", "[scenario][schema]") {
  const Scenario sc = load_scenario(parse_document(kSmallMirror));
  CHECK(sc.kind == ScenarioKind::Mirror);
  CHECK(sc.wave.reflector.mass == 10.0);
  CHECK(sc.wave.quad.nodes_particle == 12);
  CHECK(sc.grid.x1.n == 51);
  CHECK(sc.times == std::vector<double>{-10.0, 0.0});
  CHECK(sc.prefix == "small");
  CHECK(sc.resolved["reflector"]["dv"]["source"] == "file");
  CHECK(sc.resolved["units"]["mode"]["source"] == "file");
}

TEST_CASE("overrides replace values and are recorded", "[scenario][schema]") {
  Document d = parse_document(kSmallMirror);
  apply_override(d, "reflector.mass=20");
  const Scenario sc = load_scenario(d);
  CHECK(sc.wave.reflector.mass == 20.0);
  CHECK(sc.resolved["reflector"]["mass"]["source"] == "override");
  CHECK_THROWS_AS(apply_override(d, "nodot=1"), SchemaError);
  apply_override(d, "grid.bogus=1");
  CHECK_THROWS_WITH(load_scenario(d), ContainsSubstring("override") && ContainsSubstring("grid.bogus"));
}

TEST_CASE("snapshot CSV round-trips bit for bit", "[scenario][io]") {
  const Scenario sc = load_scenario(parse_document(kSmallMirror));
  GridSnapshot s = evaluate_snapshot(sc.wave, sc.grid, 0.0);
  s.warnings.push_back("test warning");
  const fs::path dir = scratch("csv");
  write_snapshot_csv(dir / "s.csv", s);
  const GridSnapshot r = read_snapshot_csv(dir / "s.csv");
  CHECK(r.t == s.t);
  CHECK(r.x1.min == s.x1.min);
  CHECK(r.x2.max == s.x2.max);
  CHECK(r.x1.n == s.x1.n);
  CHECK(r.pdf == s.pdf);
  CHECK(r.norm == s.norm);
  CHECK(r.warnings == s.warnings);
  std::ofstream(dir / "bad.csv") << "# t=0 x1_min=0 x1_max=1 nx1=2 x2_min=0 x2_max=1 nx2=2\n1,2\n3\n";
  CHECK_THROWS_AS(read_snapshot_csv(dir / "bad.csv"), SchemaError);
}

TEST_CASE("report files round-trip", "[scenario][io]") {
  const Report rep{{"a", 0.1}, {"b@2", -3.5e-300}, {"c", 1.0 / 3.0}};
  const fs::path dir = scratch("report");
  write_report(dir / "r.txt", rep);
  CHECK(read_report(dir / "r.txt") == rep);
  CHECK(lookup(rep, "b@2") == -3.5e-300);
  CHECK_FALSE(lookup(rep, "zz").has_value());
}

TEST_CASE("reruns are bit-identical and the manifest records provenance", "[scenario][cli]") {
  Document d = parse_document(kSmallMirror);
  apply_override(d, "particle.dv=0.04");
  const Scenario sc = load_scenario(d);
  const fs::path a = scratch("rerun_a"), b = scratch("rerun_b");
  const RunInfo info{"wavegroup", "inline", {"particle.dv=0.04"}};
  const RunResult ra = run_command("wavegroup", sc, a, info);
  const RunResult rb = run_command("wavegroup", sc, b, info);
  REQUIRE(ra.files.size() >= 2);
  for (std::size_t i = 0; i < ra.files.size(); ++i) CHECK(slurp(ra.files[i]) == slurp(rb.files[i]));
  CHECK(ra.report == rb.report);

  const auto j = nlohmann::json::parse(slurp(a / "manifest.json"));
  CHECK(j["command"] == "wavegroup");
  CHECK(j["overrides"][0] == "particle.dv=0.04");
  CHECK(j["parameters"]["particle"]["dv"]["source"] == "override");
  CHECK(j["parameters"]["particle"]["dv"]["value"] == 0.04);
  CHECK(j["parameters"]["particle"]["mass"]["source"] == "file");
  CHECK(j["files"].size() == ra.files.size());
  CHECK(j["observables"].contains("norm@0"));
  CHECK(j["versions"].contains("fftw"));
  // Defaults appear with their source.
  bool any_default = false;
  for (const auto& [sec, keys] : j["parameters"].items())
    for (const auto& [k, v] : keys.items()) any_default = any_default || v["source"] == "default";
  CHECK(any_default);
}

TEST_CASE("sweep writes one row per point", "[scenario][sweep]") {
  const Document d = parse_document(kSmallMirror);
  const SweepParam sp = parse_sweep_param("particle.v0=0.8:1.2:3");
  CHECK(sp.value(1) == 1.0);
  const fs::path dir = scratch("sweep");
  const auto rows = run_sweep("wavegroup", d, sp, dir, {"wavegroup", "inline", {}}, 2);
  REQUIRE(rows.size() == 3);
  CHECK(rows[2].value == 1.2);
  CHECK(fs::exists(dir / "point_0002" / "manifest.json"));
  std::ifstream in(dir / "sweep.csv");
  std::string line;
  int n = 0;
  while (std::getline(in, line)) ++n;
  CHECK(n == 5);
  CHECK_THROWS_AS(parse_sweep_param("particle.v0=1:2"), SchemaError);
  CHECK_THROWS_AS(parse_sweep_param("v0=1:2:3"), SchemaError);
}

TEST_CASE("command-line exit codes", "[scenario][cli]") {
  const fs::path dir = scratch("cli");
  const std::string no_grid = replace_once(kSmallMirror, "[grid]", "[gridd]");
  std::ofstream(dir / "no_grid.toml") << no_grid;
  CHECK(run_cli("wavegroup \"" + (dir / "no_grid.toml").string() + "\" --out \"" + dir.string() + "\"", dir / "err1") == 2);
  CHECK_THAT(slurp(dir / "err1"), ContainsSubstring("[grid]"));

  std::ofstream(dir / "ok.toml") << kSmallMirror;
  const std::string ok = "\"" + (dir / "ok.toml").string() + "\" --out \"" + dir.string() + "\"";
  CHECK(run_cli("wavegroup " + ok, dir / "err2") == 0);
  CHECK(fs::exists(dir / "small" / "wavegroup" / "snapshot_1.csv"));
  // Reflector faster than the particle: no collision.
  CHECK(run_cli("wavegroup " + ok + " --set reflector.v0=2", dir / "err3") == 3);
  CHECK_THAT(slurp(dir / "err3"), ContainsSubstring("v0 > V0"));
  CHECK(run_cli("barrier " + ok, dir / "err4") == 3);
  CHECK(run_cli("no-such-command", dir / "err5") == 2);
}
