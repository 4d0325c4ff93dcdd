#include "spmlab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "spmlab/parallel.hpp"
#include "spmlab/philox.hpp"

namespace spm {

namespace {

void require_same_times(const SpdeTrajectory& a, const SpdeTrajectory& b, const char* who) {
  if (a.times.size() != b.times.size()) {
    std::ostringstream msg;
    msg << who << ": time grids differ (" << a.times.size() << " vs " << b.times.size() << " records)";
    throw std::invalid_argument(msg.str());
  }
  for (std::size_t k = 0; k < a.times.size(); ++k) {
    if (std::abs(a.times[k] - b.times[k]) > 1e-9 * std::max(1.0, std::abs(a.times[k]))) {
      std::ostringstream msg;
      msg << who << ": time grids differ at record " << k << " (" << a.times[k] << " vs " << b.times[k] << ")";
      throw std::invalid_argument(msg.str());
    }
  }
}

// Both fields on the finer of the two grids.
std::pair<GridField, GridField> aligned(const GridField& f, const GridField& g) {
  if (f.grid() == g.grid()) return {f, g};
  if (f.grid().size() >= g.grid().size()) return {f, resample(g, f.grid())};
  return {resample(f, g.grid()), g};
}

template <class Metric>
std::vector<double> series(const SpdeTrajectory& a, const SpdeTrajectory& b, const char* who, Metric metric) {
  require_same_times(a, b, who);
  std::vector<double> out(a.times.size());
  parallel_for(out.size(), [&](std::size_t k) {
    const auto [f, g] = aligned(a.fields[k], b.fields[k]);
    out[k] = metric(f, g);
  });
  return out;
}

double squared_l2(const GridField& f, const GridField& g) {
  const GridField d = f - g;
  return inner(d, d);
}

double psi_gap_squared(const GridField& f, const GridField& g, const NonlinearitySpec& spec) {
  double s = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) {
    const double d = spec.base_psi(f[j]) - spec.base_psi(g[j]);
    s += d * d;
  }
  return s * f.grid().spacing();
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] < v[i - 1])) return false;
  }
  return true;
}

}  // namespace

SeriesStats column_stats(const std::vector<std::vector<double>>& samples) {
  SeriesStats out;
  if (samples.empty()) return out;
  const std::size_t cols = samples.front().size();
  const auto r = static_cast<double>(samples.size());
  out.mean.assign(cols, 0.0);
  out.standard_error.assign(cols, 0.0);
  for (std::size_t k = 0; k < cols; ++k) {
    double s = 0.0;
    for (const auto& row : samples) s += row.at(k);
    const double mean = s / r;
    double ss = 0.0;
    for (const auto& row : samples) ss += (row[k] - mean) * (row[k] - mean);
    out.mean[k] = mean;
    out.standard_error[k] = samples.size() > 1 ? std::sqrt(ss / (r - 1.0) / r) : 0.0;
  }
  return out;
}

std::vector<double> h_minus1_distance(const SpdeTrajectory& a, const SpdeTrajectory& b) {
  return series(a, b, "h_minus1_distance",
                [](const GridField& f, const GridField& g) { return h_minus1_norm_squared(f - g); });
}

std::vector<double> l1_distance_series(const SpdeTrajectory& a, const SpdeTrajectory& b) {
  return series(a, b, "l1_distance_series",
                [](const GridField& f, const GridField& g) { return l1_distance(f, g); });
}

double gronwall_constant(const ModeSet& modes) { return 2.0 + modes.sum_multiplier_squared(); }

GronwallReport gronwall_check(const std::vector<std::vector<double>>& g,
                              const std::vector<double>& times, double constant, double sigmas,
                              std::size_t min_realizations) {
  if (g.size() < min_realizations) {
    std::ostringstream msg;
    msg << "gronwall_check: " << g.size() << " realizations, need at least " << min_realizations;
    throw std::invalid_argument(msg.str());
  }
  for (const auto& row : g) {
    if (row.size() != times.size()) throw std::invalid_argument("gronwall_check: series length mismatch");
  }
  if (times.empty()) throw std::invalid_argument("gronwall_check: empty time grid");

  const SeriesStats stats = column_stats(g);
  GronwallReport rep;
  rep.mean = stats.mean;
  rep.standard_error = stats.standard_error;
  rep.constant = constant;
  rep.max_excess = -std::numeric_limits<double>::infinity();
  const double g0 = rep.mean.front();
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double env = g0 * std::exp(constant * (times[k] - times.front())) + sigmas * rep.standard_error[k];
    rep.envelope.push_back(env);
    rep.max_excess = std::max(rep.max_excess, rep.mean[k] - env);
  }
  rep.pass = rep.max_excess <= 0.0;
  // Tightest rate lambda with gbar(t) <= gbar(0) e^{lambda t}.
  if (g0 > 0.0) {
    rep.fitted_rate = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < times.size(); ++k) {
      const double dt = times[k] - times.front();
      if (dt > 0.0 && rep.mean[k] > 0.0) rep.fitted_rate = std::max(rep.fitted_rate, std::log(rep.mean[k] / g0) / dt);
    }
    if (!std::isfinite(rep.fitted_rate)) rep.fitted_rate = 0.0;
  }
  return rep;
}

KappaSweepTable kappa_sweep(const KappaSweepConfig& c) {
  const std::size_t nk = c.kappas.size();
  if (nk < 4) throw std::invalid_argument("kappa_sweep: need at least 4 kappa values");
  for (std::size_t i = 0; i < nk; ++i) {
    if (!(c.kappas[i] > 0.0)) throw std::invalid_argument("kappa_sweep: kappa values must be positive");
    if (i > 0 && !(c.kappas[i] < c.kappas[i - 1])) {
      throw std::invalid_argument("kappa_sweep: kappa list must be strictly decreasing");
    }
  }
  if (c.kappas.front() / c.kappas.back() < 100.0 * (1.0 - 1e-12)) {
    throw std::invalid_argument("kappa_sweep: kappa list must span at least two decades");
  }
  if (c.seeds.empty()) throw std::invalid_argument("kappa_sweep: no realizations");
  if (c.steps == 0) throw std::invalid_argument("kappa_sweep: no time steps");

  KappaSweepTable table;
  table.reference_kappa = c.spec.degeneracy() == Degeneracy::non_degenerate ? 0.0 : c.kappas.back() / 10.0;
  const NonlinearitySpec reference = regularize(c.spec, table.reference_kappa);
  std::vector<NonlinearitySpec> specs;
  for (double k : c.kappas) specs.push_back(regularize(c.spec, k));

  const std::size_t nr = c.seeds.size();
  const std::size_t nt = c.steps + 1;
  // Per realization: g[i][t], cauchy[i][t], psi[i], l2[i], ref_l2.
  struct Sample {
    std::vector<std::vector<double>> g, cauchy;
    std::vector<double> psi, l2;
    double ref_l2 = 0.0;
  };
  std::vector<Sample> samples(nr);
  SpdeOptions options;
  options.stride = 1;

  parallel_for(nr, [&](std::size_t r) {
    const NoiseRealization w = sample_noise(c.seeds[r], c.modes.count(), c.dt, c.steps);
    const SpdeTrajectory ref = solve_spde(c.x0, reference, c.modes, w, c.dt, c.steps, options);
    Sample& s = samples[r];
    for (std::size_t k = 0; k + 1 < nt; ++k) s.ref_l2 += c.dt * inner(ref.fields[k], ref.fields[k]);
    std::optional<SpdeTrajectory> previous;
    for (std::size_t i = 0; i < nk; ++i) {
      SpdeTrajectory run = solve_spde(c.x0, specs[i], c.modes, w, c.dt, c.steps, options);
      s.g.push_back(h_minus1_distance(run, ref));
      double psi = 0.0, l2 = 0.0;
      for (std::size_t k = 0; k + 1 < nt; ++k) {
        psi += c.dt * psi_gap_squared(run.fields[k], ref.fields[k], c.spec);
        l2 += c.dt * squared_l2(run.fields[k], ref.fields[k]);
      }
      s.psi.push_back(psi);
      s.l2.push_back(c.kappas[i] * l2);
      if (previous) s.cauchy.push_back(h_minus1_distance(*previous, run));
      previous = std::move(run);
    }
  });

  const double horizon = c.dt * static_cast<double>(c.steps);
  const double alpha = monotonicity_constant(c.spec);
  const double ce = gronwall_constant(c.modes);
  double ref_l2 = 0.0;
  for (const Sample& s : samples) ref_l2 += s.ref_l2;
  ref_l2 /= static_cast<double>(nr);

  std::vector<double> col_a, col_b, col_c;
  for (std::size_t i = 0; i < nk; ++i) {
    KappaRow row;
    row.kappa = c.kappas[i];
    std::vector<std::vector<double>> g(nr), cauchy;
    double psi = 0.0, l2 = 0.0;
    for (std::size_t r = 0; r < nr; ++r) {
      g[r] = samples[r].g[i];
      psi += samples[r].psi[i];
      l2 += samples[r].l2[i];
      if (i + 1 < nk) cauchy.push_back(samples[r].cauchy[i]);
    }
    const SeriesStats st = column_stats(g);
    const auto top = std::max_element(st.mean.begin(), st.mean.end());
    row.sup_mean_g = *top;
    row.sup_standard_error = st.standard_error[static_cast<std::size_t>(top - st.mean.begin())];
    row.psi_l2 = psi / static_cast<double>(nr);
    row.kappa_l2 = l2 / static_cast<double>(nr);
    row.bound = 2.0 * row.kappa * ref_l2 * std::exp((ce + alpha + 3.0 * row.kappa) * horizon);
    row.within_bound = row.sup_mean_g <= row.bound + c.sigmas * row.sup_standard_error;
    if (!cauchy.empty()) {
      const SeriesStats cs = column_stats(cauchy);
      row.cauchy = *std::max_element(cs.mean.begin(), cs.mean.end());
    }
    col_a.push_back(row.sup_mean_g);
    col_b.push_back(row.psi_l2);
    col_c.push_back(row.kappa_l2);
    table.rows.push_back(row);
  }

  table.a_decreasing = strictly_decreasing(col_a);
  table.psi_decreasing = strictly_decreasing(col_b);
  table.kappa_l2_decreasing = strictly_decreasing(col_c);
  table.all_within_bound = std::all_of(table.rows.begin(), table.rows.end(), [](const KappaRow& r) { return r.within_bound; });
  table.nonnegative = std::all_of(table.rows.begin(), table.rows.end(), [](const KappaRow& r) {
    return r.sup_mean_g >= 0.0 && r.psi_l2 >= 0.0 && r.kappa_l2 >= 0.0 && r.cauchy >= 0.0;
  });

  if (std::all_of(col_a.begin(), col_a.end(), [](double v) { return v > 0.0; })) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < nk; ++i) {
      const double x = std::log(c.kappas[i]);
      const double y = std::log(col_a[i]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double n = static_cast<double>(nk);
    table.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  } else {
    table.slope = std::numeric_limits<double>::quiet_NaN();
  }
  return table;
}

CrossValidation cross_validate(const SpdeTrajectory& grid_solution, const SpdeTrajectory& particle_density) {
  if (grid_solution.noise_seed != particle_density.noise_seed) {
    throw std::invalid_argument("cross_validate: trajectories were driven by different noise realizations");
  }
  if (grid_solution.grid.boundary() != particle_density.grid.boundary() ||
      grid_solution.grid.half_width() != particle_density.grid.half_width()) {
    throw std::invalid_argument("cross_validate: incompatible domains");
  }
  CrossValidation out;
  out.times = grid_solution.times;
  out.h_minus1 = h_minus1_distance(grid_solution, particle_density);
  for (double& v : out.h_minus1) v = std::sqrt(std::max(v, 0.0));
  out.l1 = l1_distance_series(grid_solution, particle_density);
  return out;
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_distance: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const auto na = static_cast<double>(a.size());
  const auto nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

MollifiedSdeReport mollified_coefficient_experiment(const MollifiedSdeConfig& c) {
  if (!c.coefficient) throw std::invalid_argument("mollified_coefficient_experiment: no coefficient");
  if (c.levels.size() < 2) throw std::invalid_argument("mollified_coefficient_experiment: need at least two levels");
  if (c.samples == 0 || c.samples > 0xffffffffu) {
    throw std::invalid_argument("mollified_coefficient_experiment: sample count out of range");
  }
  if (!(c.dt > 0.0) || !(c.horizon > 0.0)) {
    throw std::invalid_argument("mollified_coefficient_experiment: dt and horizon must be positive");
  }
  const Grid grid(c.domain_half_width, c.table_points, Boundary::neumann);
  const GridField a = GridField::sample(grid, c.coefficient);
  MollifiedSdeReport rep;
  rep.lower_bound = *std::min_element(a.values().begin(), a.values().end());
  rep.upper_bound = *std::max_element(a.values().begin(), a.values().end());
  if (!(rep.lower_bound > 1e-12) || !std::isfinite(rep.upper_bound)) {
    std::ostringstream msg;
    msg << "mollified_coefficient_experiment: coefficient must satisfy 0 < c <= a <= C (min " << rep.lower_bound
        << ", max " << rep.upper_bound << ")";
    throw std::invalid_argument(msg.str());
  }
  const auto steps = static_cast<std::size_t>(std::llround(c.horizon / c.dt));
  const double escape = 0.999 * c.domain_half_width;

  std::vector<std::vector<double>> terminal;
  for (int n : c.levels) {
    if (n <= 0) throw std::invalid_argument("mollified_coefficient_experiment: levels must be positive");
    const GridField an = mollify(a, Mollifier{KernelShape::bump, 1.0 / n});
    std::vector<double> y(c.samples);
    parallel_for(c.samples, [&](std::size_t s) {
      double x = c.start;
      for (std::size_t k = 0; k < steps; ++k) {
        x += std::sqrt(2.0 * interpolate(an, x) * c.dt) *
             standard_normal(c.seed, k, static_cast<std::uint32_t>(s), StreamTag::mollified_sde);
      }
      y[s] = x;
    });
    for (double v : y) {
      if (!(std::abs(v) <= escape)) throw std::runtime_error("mollified_coefficient_experiment: sample left the table domain");
    }
    terminal.push_back(std::move(y));
  }
  for (std::size_t i = 0; i + 1 < terminal.size(); ++i) rep.ks.push_back(ks_distance(terminal[i], terminal[i + 1]));
  rep.strictly_decreasing = strictly_decreasing(rep.ks);
  return rep;
}

}  // namespace spm
