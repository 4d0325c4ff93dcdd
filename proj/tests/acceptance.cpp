// Acceptance runner: one PASS/FAIL line per criterion.
//   acceptance [--criterion N]... [--out-dir DIR]

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "spmlab/parallel.hpp"
#include "spmlab/scenario.hpp"

namespace fs = std::filesystem;

namespace {

fs::path g_out = "acceptance_out";

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& note) {
    pass = pass && ok;
    notes.push_back((ok ? "" : "[fail] ") + note);
  }
};

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(4);
  o << v;
  return o.str();
}

struct Timed {
  spm::DiagnosticsReport report;
  double seconds = 0.0;
};

Timed run(const std::string& name, unsigned threads = 1, const fs::path& sub = "t1") {
  spm::set_thread_count(threads);
  spm::RunOptions o;
  o.out_dir = g_out / sub;
  const spm::Scenario s = spm::find_scenario(name);
  const auto start = std::chrono::steady_clock::now();
  Timed t{spm::run_scenario(s, o), 0.0};
  t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  spm::set_thread_count(1);
  return t;
}

// Named check must exist, pass, and carry the stated threshold (when given)
// so a scenario override cannot loosen it.
void expect(Outcome& out, const spm::DiagnosticsReport& rep, const std::string& check, std::optional<double> threshold = {}) {
  const auto c = rep.find_check(check);
  if (!c) {
    out.require(false, rep.scenario() + ":" + check + " missing");
    return;
  }
  const bool pinned = !threshold || std::abs(c->threshold - *threshold) <= 1e-15 * std::max(1.0, std::abs(*threshold));
  out.require(c->pass && pinned, rep.scenario() + ":" + check + " " + fmt(c->value) + " " + c->relation + " " +
                                     fmt(c->threshold) + (pinned ? "" : " (threshold not the stated one)"));
}

void expect_tolerance(Outcome& out, const std::string& scenario, const std::string& key, double stated) {
  const double v = spm::find_scenario(scenario).tolerance(key);
  out.require(v == stated, scenario + " " + key + " = " + fmt(v));
}

void runtime(Outcome& out, double seconds, double limit) {
  out.require(seconds <= limit, "runtime " + fmt(seconds) + " s <= " + fmt(limit) + " s");
}

Outcome criterion1() {
  Outcome out;
  const Timed t = run("heat_baseline");
  expect(out, t.report, "grid_variance_rel_error", 0.01);
  expect(out, t.report, "particle_l1_terminal", 0.05);
  runtime(out, t.seconds, 60.0);
  return out;
}

Outcome criterion2() {
  Outcome out;
  const Timed t = run("barenblatt_pme2");
  expect(out, t.report, "grid_l1_terminal", 5e-3);
  expect(out, t.report, "particle_l1_terminal", 0.08);
  return out;
}

Outcome criterion3() {
  Outcome out;
  const Timed t = run("linear_factorization");
  expect(out, t.report, "grid_l1_max", 0.02);
  expect(out, t.report, "particle_l1_max", 0.08);
  return out;
}

Outcome criterion4() {
  Outcome out;
  const Timed t = run("doleans_moments");
  expect_tolerance(out, "doleans_moments", "sigmas", 4.0);
  expect(out, t.report, "martingale_mean_gap");
  expect(out, t.report, "second_moment_terminal", std::exp(0.75));
  runtime(out, t.seconds, 120.0);
  return out;
}

Outcome criterion5() {
  Outcome out;
  const Timed t = run("pme_m2_noise");
  expect_tolerance(out, "pme_m2_noise", "sigmas", 3.0);
  expect(out, t.report, "grid_mass_gap");
  expect(out, t.report, "particle_mass_gap");
  return out;
}

Outcome criterion6() {
  Outcome out;
  const Timed t = run("multiplier_catalog");
  for (const auto& c : t.report.checks()) {
    if (c.name.find("_violations") != std::string::npos) expect(out, t.report, c.name, 0.0);
  }
  out.require(t.report.checks().size() >= 4, "modes covered: " + std::to_string(t.report.checks().size()));
  return out;
}

Outcome criterion7() {
  Outcome out;
  const Timed t = run("fp_uniqueness");
  expect(out, t.report, "empirical_order_256", 1.0);
  expect(out, t.report, "identical_discretization_g_max", 0.0);
  expect(out, t.report, "gronwall_identical_excess", 0.0);
  expect(out, t.report, "gronwall_perturbed_excess", 0.0);
  return out;
}

Outcome criterion8() {
  Outcome out;
  const Timed t = run("kappa_sweep_pme2");
  expect_tolerance(out, "kappa_sweep_pme2", "sigmas", 4.0);
  expect(out, t.report, "column_a_monotone_violations", 0.0);
  expect(out, t.report, "log_log_slope_min", 0.6);
  expect(out, t.report, "log_log_slope_max", 1.2);
  expect(out, t.report, "bound_violations", 0.0);
  expect(out, t.report, "column_b_monotone_violations", 0.0);
  expect(out, t.report, "column_c_monotone_violations", 0.0);
  runtime(out, t.seconds, 600.0);
  return out;
}

Outcome criterion9() {
  Outcome out;
  for (const char* name : {"cross_heat_noisy", "cross_pme_noisy"}) {
    const Timed t = run(name);
    expect_tolerance(out, name, "sigmas", 4.0);
    expect(out, t.report, "particles_5000_to_20000");
    expect(out, t.report, "dt_0.002_to_0.001");
    if (std::string(name) == "cross_heat_noisy") expect(out, t.report, "h_minus1_reference", 0.05);
  }
  return out;
}

Outcome criterion10() {
  Outcome out;
  const Timed t = run("mollified_sde");
  expect(out, t.report, "ks_monotone_violations", 0.0);
  expect(out, t.report, "ks_final", 0.02);
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Every regular file under the two output trees must match byte for byte.
bool same_tree(const fs::path& a, const fs::path& b, std::string& why) {
  std::set<fs::path> files;
  for (const auto& root : {a, b}) {
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      if (e.is_regular_file()) files.insert(fs::relative(e.path(), root));
    }
  }
  for (const auto& f : files) {
    if (!fs::exists(a / f) || !fs::exists(b / f) || slurp(a / f) != slurp(b / f)) {
      why = f.string();
      return false;
    }
  }
  return !files.empty();
}

Outcome criterion11() {
  Outcome out;
  for (const auto& entry : spm::list_suite()) {
    run(entry.name, 1, "det1");
    run(entry.name, 8, "det8");
    const std::string dir = entry.name + "-" + entry.fingerprint;
    std::string why;
    const bool same = same_tree(g_out / "det1" / dir, g_out / "det8" / dir, why);
    out.require(same, entry.name + (same ? " identical" : " differs in " + why));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--criterion" && i + 1 < argc) {
      wanted.insert(std::atoi(argv[++i]));
    } else if (a == "--out-dir" && i + 1 < argc) {
      g_out = argv[++i];
    } else {
      std::cerr << "usage: acceptance [--criterion N]... [--out-dir DIR]\n";
      return 2;
    }
  }
  const std::map<int, std::pair<const char*, std::function<Outcome()>>> criteria = {
      {1, {"heat reduction", criterion1}},
      {2, {"Barenblatt profile", criterion2}},
      {3, {"linear factorization", criterion3}},
      {4, {"Doleans moments", criterion4}},
      {5, {"mass in expectation", criterion5}},
      {6, {"multiplier inequality", criterion6}},
      {7, {"Fokker-Planck uniqueness echo", criterion7}},
      {8, {"kappa sweep", criterion8}},
      {9, {"cross-validation convergence", criterion9}},
      {10, {"mollified-coefficient experiment", criterion10}},
      {11, {"determinism across thread counts", criterion11}},
  };
  bool all = true;
  for (const auto& [id, item] : criteria) {
    if (!wanted.empty() && !wanted.count(id)) continue;
    Outcome o;
    try {
      o = item.second();
    } catch (const std::exception& e) {
      o.require(false, std::string("error: ") + e.what());
    }
    all = all && o.pass;
    std::cout << "criterion " << (id < 10 ? " " : "") << id << "  " << (o.pass ? "PASS" : "FAIL") << "  " << item.first
              << ":";
    for (std::size_t i = 0; i < o.notes.size(); ++i) std::cout << (i ? "; " : " ") << o.notes[i];
    std::cout << std::endl;
  }
  return all ? 0 : 1;
}
