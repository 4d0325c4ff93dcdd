#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spmlab/grid.hpp"
#include "spmlab/initial.hpp"
#include "spmlab/noise.hpp"
#include "spmlab/nonlinearity.hpp"
#include "spmlab/report.hpp"

namespace spm {

inline constexpr int kSchemaVersion = 1;

struct NonlinearityConfig {
  std::string name = "linear";  // linear | porous_medium | threshold | clipped_linear
  double slope = 1.0;
  double m = 2.0;
  double clip = 10.0;
  double u_c = 0.5;
  double knee = 1.0;
  double ratio = 0.5;
};

// Scalar coefficient for the Fokker-Planck and mollified-SDE suites:
// step: base + amplitude * sign(x - center); sine: base + amplitude * sin(wavenumber x).
struct CoefficientConfig {
  std::string shape = "sine";
  double base = 0.5;
  double amplitude = 0.25;
  double center = 0.0;
  double wavenumber = 1.0;

  double operator()(double x) const;
};

struct TimeConfig {
  double dt = 1e-3;
  double horizon = 0.5;
  std::size_t stride = 100;
  std::size_t steps() const;
};

struct ParticleConfig {
  std::size_t count = 20000;
  std::optional<double> bandwidth;  // unset: Silverman rule
  std::uint64_t seed = 7;
  bool picard = false;
};

// Suite-specific sweeps. Only the keys a suite reads are meaningful.
struct SweepConfig {
  std::vector<double> kappas;
  std::vector<std::size_t> resolutions;
  std::vector<std::size_t> particle_counts;
  std::vector<int> mollifier_levels;
  std::vector<double> dts;
  std::size_t samples = 0;
  std::size_t particle_seeds = 1;
  double perturbation = 0.0;
  std::size_t reference_points = 1024;
  std::size_t random_fields = 100;
};

struct Scenario {
  int schema_version = kSchemaVersion;
  std::string name;
  std::string description;
  std::string exercises;
  std::string suite = "none";
  double half_width = 10.0;
  std::size_t points = 512;
  Boundary boundary = Boundary::periodic;
  NonlinearityConfig nonlinearity;
  double kappa = 0.0;
  std::vector<ModeDescriptor> modes;
  std::optional<ModeDescriptor> drift;
  InitialCondition initial;
  TimeConfig time;
  ParticleConfig particles;
  std::uint64_t noise_seed = 1;
  std::size_t realizations = 1;
  std::optional<CoefficientConfig> coefficient;
  SweepConfig sweep;
  std::map<std::string, double> tolerances;  // overrides of suite defaults

  Grid grid() const { return Grid(half_width, points, boundary); }
  NonlinearitySpec spec() const;
  ModeSet mode_set(const Grid& grid) const;
  ModeSet mode_set() const { return mode_set(grid()); }
  // Tolerance with the suite default filled in.
  double tolerance(const std::string& key) const;

  // Canonical JSON text: sorted keys, defaults filled.
  std::string canonical() const;
  // First 16 hex digits of SHA-256 over canonical().
  std::string fingerprint() const;
};

// Suites and the tolerance keys they accept (with defaults).
const std::map<std::string, std::map<std::string, double>>& suite_catalog();

Scenario parse_scenario(const std::string& text, const std::string& origin = "<string>");
Scenario load_scenario(const std::filesystem::path& path);
// Resolves a shipped name ("heat_baseline") or a path.
Scenario find_scenario(const std::string& name_or_path);

struct CatalogEntry {
  std::string name;
  std::string description;
  std::string exercises;
  std::string suite;
  std::string fingerprint;
  std::filesystem::path path;
};

std::filesystem::path shipped_scenario_dir();
std::vector<CatalogEntry> list_suite(const std::filesystem::path& dir = shipped_scenario_dir());

struct RunOptions {
  std::filesystem::path out_dir = "out";
  bool write = true;   // write report.jsonl, summary.txt, dumps/
  bool dumps = true;
  bool strict = false;  // warnings count as failures
};

// Directory out/<name>-<fingerprint>.
std::filesystem::path output_directory(const Scenario& s, const RunOptions& options);

// Runs the scenario's configured suite.
DiagnosticsReport run_scenario(const Scenario& s, const RunOptions& options = {});

// Single pieces behind the CLI subcommands. Each writes under the same
// output layout as run_scenario.
DiagnosticsReport run_solve_spde(const Scenario& s, const RunOptions& options = {});
DiagnosticsReport run_particles(const Scenario& s, const RunOptions& options = {});
DiagnosticsReport run_compare(const Scenario& s, const RunOptions& options = {});
DiagnosticsReport run_suite(const std::string& suite, const Scenario& s, const RunOptions& options = {});

// Turns warnings into a failing check when strict.
bool report_passes(const DiagnosticsReport& report, bool strict);

}  // namespace spm
