#include <chrono>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "spmlab/parallel.hpp"
#include "spmlab/scenario.hpp"

namespace {

constexpr int kExitFail = 1;
constexpr int kExitError = 2;

struct Globals {
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::string out_dir = "out";
  bool strict = false;
  bool no_dumps = false;
};

int execute(const Globals& g, const std::string& target, const std::string& what,
            spm::DiagnosticsReport (*runner)(const spm::Scenario&, const spm::RunOptions&)) {
  spm::Scenario s = spm::find_scenario(target);
  if (g.seed) s.noise_seed = *g.seed;
  spm::RunOptions options;
  options.out_dir = g.out_dir;
  options.strict = g.strict;
  options.dumps = !g.no_dumps;
  const auto start = std::chrono::steady_clock::now();
  const spm::DiagnosticsReport rep = runner(s, options);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << rep.summary();
  const bool ok = spm::report_passes(rep, g.strict);
  if (g.strict && !rep.warnings().empty()) std::cout << "strict: warnings count as failures\n";
  std::cerr << what << ' ' << s.name << " finished in " << seconds << " s, output in "
            << spm::output_directory(s, options).string() << '\n';
  return ok ? 0 : kExitFail;
}

spm::DiagnosticsReport suite_runner(const std::string& suite, const spm::Scenario& s, const spm::RunOptions& o) {
  return spm::run_suite(suite, s, o);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spmlab: grid and weighted-particle solvers for the stochastic porous-media equation"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "override the scenario's noise seed");
  app.add_option("--threads", g.threads, "worker threads (results do not depend on this)")->check(CLI::PositiveNumber);
  app.add_option("--out-dir", g.out_dir, "root of the output tree");
  app.add_flag("--strict", g.strict, "fail on any warning, including clipped-mass and boundary-mass warnings");
  app.add_flag("--no-dumps", g.no_dumps, "skip trajectory and ensemble dumps");

  std::string target;
  struct Command {
    const char* name;
    const char* help;
    spm::DiagnosticsReport (*runner)(const spm::Scenario&, const spm::RunOptions&);
  };
  static const Command commands[] = {
      {"solve-spde", "run the grid solver on one noise realization", spm::run_solve_spde},
      {"run-particles", "run the weighted particle system on one noise realization", spm::run_particles},
      {"compare", "run both solvers on one realization and compare them", spm::run_compare},
      {"kappa-sweep", "kappa-regularization sweep",
       [](const spm::Scenario& s, const spm::RunOptions& o) { return suite_runner("kappa_sweep", s, o); }},
      {"fp-uniqueness", "Fokker-Planck resolution and Gronwall study",
       [](const spm::Scenario& s, const spm::RunOptions& o) { return suite_runner("fp_uniqueness", s, o); }},
      {"mollify-sde", "mollified-coefficient convergence in law",
       [](const spm::Scenario& s, const spm::RunOptions& o) { return suite_runner("mollified_sde", s, o); }},
      {"validate", "run the scenario's full diagnostic suite", spm::run_scenario},
  };
  for (const Command& c : commands) {
    app.add_subcommand(c.name, c.help)->add_option("scenario", target, "scenario file or shipped name")->required();
  }
  auto* list = app.add_subcommand("list", "list shipped scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitError;
  }
  if (*seed_opt) g.seed = seed;
  spm::set_thread_count(g.threads);

  try {
    if (*list) {
      for (const auto& e : spm::list_suite()) {
        std::cout << e.name << "  [" << e.suite << "]  " << e.fingerprint << "\n    " << e.description << "\n    exercises: "
                  << e.exercises << '\n';
      }
      return 0;
    }
    for (const Command& c : commands) {
      if (app.got_subcommand(c.name)) return execute(g, target, c.name, c.runner);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
