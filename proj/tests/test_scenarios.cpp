#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "catch_amalgamated.hpp"
#include "spmlab/parallel.hpp"
#include "spmlab/scenario.hpp"

using namespace spm;
using Catch::Matchers::ContainsSubstring;

namespace {

const char* kMinimal = R"({
  "schema_version": 1,
  "name": "tiny",
  "suite": "heat_oracle",
  "grid": {"half_width": 6.0, "points": 128, "boundary": "periodic"},
  "nonlinearity": {"name": "linear"},
  "time": {"dt": 1e-3, "horizon": 0.1, "stride": 50},
  "particles": {"count": 1000, "seed": 3},
  "noise_seed": 5
})";

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto at = s.find(from);
  REQUIRE(at != std::string::npos);
  return s.replace(at, from.size(), to);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("minimal scenario parses with defaults") {
  const Scenario s = parse_scenario(kMinimal);
  CHECK(s.name == "tiny");
  CHECK(s.points == 128);
  CHECK(s.time.steps() == 100);
  CHECK(s.realizations == 1);
  CHECK(s.tolerance("variance_rel") == 0.01);
  CHECK(s.tolerance("particle_l1") == 0.05);
  CHECK(s.fingerprint().size() == 16);
  CHECK_THROWS(s.tolerance("no_such_key"));
}

TEST_CASE("schema violations name the field") {
  CHECK_THROWS_WITH(parse_scenario(replace(kMinimal, "\"linear\"", "\"foo\"")), ContainsSubstring("nonlinearity.name"));
  CHECK_THROWS_WITH(parse_scenario(replace(kMinimal, "\"dt\": 1e-3", "\"dt\": 0")), ContainsSubstring("time.dt"));
  CHECK_THROWS_WITH(parse_scenario(replace(kMinimal, "\"dt\": 1e-3", "\"dt\": -1e-3")), ContainsSubstring("time.dt"));
  CHECK_THROWS_WITH(parse_scenario(replace(kMinimal, "\"seed\": 3", "\"seed\": 3, \"colour\": 1")),
                    ContainsSubstring("particles.colour"));
  CHECK_THROWS_WITH(parse_scenario(replace(kMinimal, "\"periodic\"", "\"dirichlet\"")), ContainsSubstring("grid.boundary"));
  CHECK_THROWS_WITH(parse_scenario(replace(kMinimal, "\"schema_version\": 1", "\"schema_version\": 7")),
                    ContainsSubstring("schema_version"));
  CHECK_THROWS_WITH(parse_scenario(replace(kMinimal, "\"noise_seed\": 5", "\"noise_seed\": 5,\n  \"tolerances\": {\"ks_final\": 0.1}")),
                    ContainsSubstring("tolerances"));
  CHECK_THROWS_WITH(parse_scenario(replace(kMinimal, "\"suite\": \"heat_oracle\"", "\"suite\": \"bogus\"")),
                    ContainsSubstring("suite"));
  CHECK_THROWS_WITH(parse_scenario("{\n  \"name\": \"x\",,\n}"), ContainsSubstring("line 2"));
}

TEST_CASE("fingerprint ignores whitespace and key order") {
  const Scenario a = parse_scenario(kMinimal);
  std::string compact;
  for (char c : std::string(kMinimal))
    if (c != '\n' && c != ' ') compact += c;
  CHECK(parse_scenario(compact).fingerprint() == a.fingerprint());
  const std::string reordered = R"({"noise_seed": 5, "particles": {"seed": 3, "count": 1000},
    "time": {"stride": 50, "horizon": 0.1, "dt": 0.001}, "nonlinearity": {"name": "linear"},
    "grid": {"boundary": "periodic", "points": 128, "half_width": 6}, "suite": "heat_oracle",
    "name": "tiny", "schema_version": 1})";
  CHECK(parse_scenario(reordered).fingerprint() == a.fingerprint());
  CHECK(parse_scenario(replace(kMinimal, "\"noise_seed\": 5", "\"noise_seed\": 6")).fingerprint() != a.fingerprint());
}

TEST_CASE("shipped catalog") {
  const auto entries = list_suite();
  CHECK(entries.size() >= 8);
  std::set<std::string> prints, names;
  for (const auto& e : entries) {
    prints.insert(e.fingerprint);
    names.insert(e.name);
    CHECK_FALSE(e.description.empty());
    CHECK_FALSE(e.exercises.empty());
    CHECK(load_scenario(e.path).fingerprint() == e.fingerprint);
  }
  CHECK(prints.size() == entries.size());
  CHECK(names.count("heat_baseline") == 1);
  const Scenario heat = find_scenario("heat_baseline");
  CHECK(heat.suite == "heat_oracle");
  CHECK(heat.particles.count == 20000);
  CHECK_THROWS(find_scenario("no_such_scenario"));
}

TEST_CASE("same scenario twice gives identical output") {
  const auto root = std::filesystem::temp_directory_path() / "spmlab_test_scenarios";
  std::filesystem::remove_all(root);
  const Scenario s = parse_scenario(kMinimal);
  RunOptions o;
  o.out_dir = root / "a";
  const auto first = run_scenario(s, o);
  o.out_dir = root / "b";
  set_thread_count(3);
  const auto second = run_scenario(s, o);
  set_thread_count(1);
  CHECK(first.to_jsonl() == second.to_jsonl());
  const auto dir = output_directory(s, o).filename();
  CHECK(dir.string() == "tiny-" + s.fingerprint());
  CHECK(slurp(root / "a" / dir / "report.jsonl") == slurp(root / "b" / dir / "report.jsonl"));
  CHECK(std::filesystem::exists(root / "a" / dir / "summary.txt"));
  std::filesystem::remove_all(root);
}

TEST_CASE("strict mode turns warnings into failure") {
  DiagnosticsReport rep("x", "0");
  rep.check("a", 1.0, "<=", 2.0);
  CHECK(report_passes(rep, true));
  rep.warn("boundary-mass: something");
  CHECK(report_passes(rep, false));
  CHECK_FALSE(report_passes(rep, true));
  rep.check("b", 3.0, "<=", 2.0);
  CHECK_FALSE(report_passes(rep, false));
}
