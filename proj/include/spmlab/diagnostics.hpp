#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "spmlab/grid.hpp"
#include "spmlab/noise.hpp"
#include "spmlab/nonlinearity.hpp"
#include "spmlab/spde.hpp"

namespace spm {

// Mean and standard error of each column of samples[r][k].
struct SeriesStats {
  std::vector<double> mean;
  std::vector<double> standard_error;
};
SeriesStats column_stats(const std::vector<std::vector<double>>& samples);

// g(t_k) = ||X1_k - X2_k||^2_{H^-1}. Grids may differ; the coarser field is
// interpolated onto the finer grid. Recorded times must agree.
std::vector<double> h_minus1_distance(const SpdeTrajectory& a, const SpdeTrajectory& b);
std::vector<double> l1_distance_series(const SpdeTrajectory& a, const SpdeTrajectory& b);

// 2 + sum_i C(e^i)^2
double gronwall_constant(const ModeSet& modes);

struct GronwallReport {
  std::vector<double> mean;
  std::vector<double> standard_error;
  std::vector<double> envelope;  // gbar(0) e^{Ct} + margin
  double constant = 0.0;
  double fitted_rate = 0.0;      // log-linear fit of gbar(t); 0 when gbar has no positive values
  double max_excess = 0.0;       // max_t (gbar - envelope)
  bool pass = false;
};

// gbar(t) <= gbar(0) e^{Ct} + sigmas * SE(t). g[r][k] over >= min_realizations.
GronwallReport gronwall_check(const std::vector<std::vector<double>>& g,
                              const std::vector<double>& times, double constant,
                              double sigmas = 4.0, std::size_t min_realizations = 100);

struct KappaSweepConfig {
  GridField x0;
  NonlinearitySpec spec;
  ModeSet modes;
  double dt = 1e-3;
  std::size_t steps = 0;
  std::vector<double> kappas;         // strictly decreasing
  std::vector<std::uint64_t> seeds;   // one noise realization per entry
  double sigmas = 4.0;
};

struct KappaRow {
  double kappa = 0.0;
  double sup_mean_g = 0.0;        // (a) sup_t mean ||X^k - X^ref||^2_{H^-1}
  double sup_standard_error = 0.0;
  double psi_l2 = 0.0;            // (b) mean int ||psi(X^k) - psi(X^ref)||^2_{L2} dt
  double kappa_l2 = 0.0;          // (c) kappa mean int ||X^k - X^ref||^2_{L2} dt
  double bound = 0.0;             // 2 kappa E int ||X^ref||^2 dt e^{(C(e) + alpha + 3 kappa) T}
  double cauchy = 0.0;            // sup_t mean ||X^k - X^{next k}||^2_{H^-1}; 0 for the last row
  bool within_bound = false;
};

struct KappaSweepTable {
  std::vector<KappaRow> rows;
  double reference_kappa = 0.0;
  double slope = 0.0;  // least-squares log-log slope of (a) against kappa
  bool a_decreasing = false;
  bool psi_decreasing = false;
  bool kappa_l2_decreasing = false;
  bool all_within_bound = false;
  bool nonnegative = false;
};

KappaSweepTable kappa_sweep(const KappaSweepConfig& config);

struct CrossValidation {
  std::vector<double> times;
  std::vector<double> h_minus1;  // ||X - Xhat||_{H^-1} (not squared)
  std::vector<double> l1;
  double terminal_h_minus1() const { return h_minus1.back(); }
  double terminal_l1() const { return l1.back(); }
};

// Both trajectories must come from the same noise realization and record on
// the same time grid.
CrossValidation cross_validate(const SpdeTrajectory& grid_solution,
                               const SpdeTrajectory& particle_density);

// Two-sample Kolmogorov-Smirnov statistic.
double ks_distance(std::vector<double> a, std::vector<double> b);

struct MollifiedSdeConfig {
  std::function<double(double)> coefficient;
  std::vector<int> levels;  // n: mollifier scale 1/n
  std::size_t samples = 100000;
  double dt = 1e-3;
  double horizon = 0.5;
  double start = 0.0;
  std::uint64_t seed = 1;
  double domain_half_width = 6.0;
  std::size_t table_points = 8192;
};

struct MollifiedSdeReport {
  std::vector<double> ks;  // KS(level_i, level_{i+1})
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  bool strictly_decreasing = false;
};

// Euler samples of dY = sqrt(2 a_n(Y)) dB with a_n = a * phi_{1/n}, common
// drivers across levels. Rejects coefficients that are not bounded away from 0.
MollifiedSdeReport mollified_coefficient_experiment(const MollifiedSdeConfig& config);

}  // namespace spm
