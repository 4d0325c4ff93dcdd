// Diagnostic suites behind run_scenario and the CLI subcommands.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "spmlab/diagnostics.hpp"
#include "spmlab/initial.hpp"
#include "spmlab/parallel.hpp"
#include "spmlab/particles.hpp"
#include "spmlab/philox.hpp"
#include "spmlab/scenario.hpp"
#include "spmlab/spde.hpp"

namespace spm {

namespace {

std::uint64_t noise_seed(const Scenario& s, std::size_t r) { return derive_seed(s.noise_seed, r); }

std::uint64_t particle_seed(const Scenario& s, std::size_t r, std::size_t q = 0) {
  return derive_seed(derive_seed(s.particles.seed, r), q);
}

DiagnosticsReport new_report(const Scenario& s) {
  DiagnosticsReport rep(s.name, s.fingerprint());
  rep.add_seed("noise", s.noise_seed);
  rep.add_seed("particles", s.particles.seed);
  return rep;
}

DsnldOptions dsnld_options(const Scenario& s, std::size_t stride) {
  DsnldOptions o;
  o.stride = stride;
  o.bandwidth = s.particles.bandwidth;
  o.picard = s.particles.picard;
  return o;
}

SpdeOptions spde_options(std::size_t stride) {
  SpdeOptions o;
  o.stride = stride;
  return o;
}

struct Mean {
  double mean = 0.0;
  double se = 0.0;
};

Mean mean_se(const std::vector<double>& v) {
  Mean m;
  if (v.empty()) return m;
  const auto n = static_cast<double>(v.size());
  for (double x : v) m.mean += x;
  m.mean /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - m.mean) * (x - m.mean);
  m.se = v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return m;
}

void absorb(DiagnosticsReport& rep, const SpdeTrajectory& traj) {
  for (const std::string& w : traj.warnings) rep.warn(w);
}

void positivity(DiagnosticsReport& rep, const Scenario& s, const std::string& label, double clipped, double mass,
                std::size_t n = 1) {
  rep.check(label + "clipped_fraction", mass > 0.0 ? clipped / mass : 0.0, "<", s.tolerance("clipped_fraction"), n);
}

double first_moment(const GridField& f) {
  double m0 = 0.0, m1 = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) {
    m0 += f[j];
    m1 += f.grid().node(j) * f[j];
  }
  return m1 / m0;
}

double variance(const GridField& f) {
  const double mu = first_moment(f);
  double m0 = 0.0, m2 = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) {
    const double d = f.grid().node(j) - mu;
    m0 += f[j];
    m2 += d * d * f[j];
  }
  return m2 / m0;
}

void write_outputs(const DiagnosticsReport& rep, const Scenario& s, const RunOptions& options,
                   const std::function<void(const std::filesystem::path&)>& dumps = {}) {
  if (!options.write) return;
  const auto dir = output_directory(s, options);
  rep.write(dir);
  if (options.dumps && dumps) {
    std::filesystem::create_directories(dir / "dumps");
    dumps(dir / "dumps");
  }
}

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

// --- single runs ----------------------------------------------------------

DiagnosticsReport solve_spde_report(const Scenario& s, const RunOptions& options) {
  DiagnosticsReport rep = new_report(s);
  const Grid grid = s.grid();
  const ModeSet modes = s.mode_set(grid);
  const std::size_t steps = s.time.steps();
  const NoiseRealization w = sample_noise(noise_seed(s, 0), modes.count(), s.time.dt, steps);
  const SpdeTrajectory traj =
      solve_spde(s.initial.on_grid(grid), s.spec(), modes, w, s.time.dt, steps, spde_options(s.time.stride));
  for (std::size_t k = 0; k < traj.times.size(); ++k) rep.add_metric("grid_mass", integral(traj.fields[k]), traj.times[k]);
  rep.add_metric("max_boundary_fraction", traj.max_boundary_fraction);
  rep.add_metric("clipped_mass", traj.clipped_mass);
  positivity(rep, s, "", traj.clipped_mass, traj.initial_mass);
  absorb(rep, traj);
  write_outputs(rep, s, options, [&](const std::filesystem::path& d) {
    traj.save_csv(d / "trajectory.csv");
    traj.save_binary(d / "trajectory.bin");
    w.save_csv(d / "noise.csv");
    w.save_binary(d / "noise.bin");
  });
  return rep;
}

DiagnosticsReport particles_report(const Scenario& s, const RunOptions& options) {
  DiagnosticsReport rep = new_report(s);
  const Grid grid = s.grid();
  const ModeSet modes = s.mode_set(grid);
  const std::size_t steps = s.time.steps();
  const NoiseRealization w = sample_noise(noise_seed(s, 0), modes.count(), s.time.dt, steps);
  const DsnldResult res = run_dsnld(s.initial, s.spec(), modes, w, s.time.dt, steps, s.particles.count,
                                    particle_seed(s, 0), dsnld_options(s, s.time.stride));
  for (std::size_t k = 0; k < res.density.times.size(); ++k) rep.add_metric("particle_mass", res.mass[k], res.density.times[k]);
  rep.add_metric("density_l2_integral", res.density_l2_integral);
  rep.check("initial_weighted_mass_error", std::abs(res.mass.front() - 1.0), "<=", 0.0, s.particles.count);
  const auto& lw = res.final_ensemble.log_weight;
  const bool positive = std::all_of(lw.begin(), lw.end(), [](double v) { return std::isfinite(v); });
  rep.check("nonpositive_weights", positive ? 0.0 : 1.0, "<=", 0.0, s.particles.count);
  absorb(rep, res.density);
  write_outputs(rep, s, options, [&](const std::filesystem::path& d) {
    res.density.save_csv(d / "density.csv");
    res.density.save_binary(d / "density.bin");
    res.final_ensemble.save_csv(d / "ensemble.csv");
    w.save_csv(d / "noise.csv");
  });
  return rep;
}

DiagnosticsReport compare_report(const Scenario& s, const RunOptions& options) {
  DiagnosticsReport rep = new_report(s);
  const Grid grid = s.grid();
  const ModeSet modes = s.mode_set(grid);
  const NonlinearitySpec spec = s.spec();
  const std::size_t steps = s.time.steps();
  const NoiseRealization w = sample_noise(noise_seed(s, 0), modes.count(), s.time.dt, steps);
  const SpdeTrajectory traj =
      solve_spde(s.initial.on_grid(grid), spec, modes, w, s.time.dt, steps, spde_options(s.time.stride));
  const DsnldResult res = run_dsnld(s.initial, spec, modes, w, s.time.dt, steps, s.particles.count,
                                    particle_seed(s, 0), dsnld_options(s, s.time.stride));
  const CrossValidation cv = cross_validate(traj, res.density);
  for (std::size_t k = 0; k < cv.times.size(); ++k) {
    rep.add_metric("h_minus1_distance", cv.h_minus1[k], cv.times[k]);
    rep.add_metric("l1_distance", cv.l1[k], cv.times[k]);
  }
  rep.check("terminal_h_minus1", cv.terminal_h_minus1(), "<=", s.tolerance("compare_h_minus1"));
  positivity(rep, s, "", traj.clipped_mass, traj.initial_mass);
  absorb(rep, traj);
  absorb(rep, res.density);
  write_outputs(rep, s, options, [&](const std::filesystem::path& d) {
    traj.save_csv(d / "trajectory.csv");
    res.density.save_csv(d / "density.csv");
    w.save_csv(d / "noise.csv");
  });
  return rep;
}

// --- oracle suites --------------------------------------------------------

DiagnosticsReport heat_oracle(const Scenario& s, const RunOptions& options) {
  require(s.nonlinearity.name == "linear" && s.kappa == 0.0 && s.modes.empty() && !s.drift,
          "heat_oracle needs a linear nonlinearity and no noise");
  DiagnosticsReport rep = new_report(s);
  const Grid grid = s.grid();
  const ModeSet modes = s.mode_set(grid);
  const NonlinearitySpec spec = s.spec();
  const std::size_t steps = s.time.steps();
  const NoiseRealization w = sample_noise(noise_seed(s, 0), 0, s.time.dt, steps);
  const SpdeTrajectory traj =
      solve_spde(s.initial.on_grid(grid), spec, modes, w, s.time.dt, steps, spde_options(s.time.stride));
  // d_t u = (slope/2) u'' spreads the variance by slope * t.
  const double slope = s.nonlinearity.slope;
  const double var0 = s.initial.variance_of_law();
  const bool gaussian = s.initial.shape == "gaussian";
  auto exact = [&](double t) {
    return GridField::sample(grid, [&](double x) { return gaussian_density(s.initial.mean, var0 + slope * t, x); });
  };
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    rep.add_metric("grid_variance", variance(traj.fields[k]), traj.times[k]);
    if (gaussian) rep.add_metric("grid_l1", l1_distance(traj.fields[k], exact(traj.times[k])), traj.times[k]);
  }
  const double expected = var0 + slope * s.time.horizon;
  rep.check("grid_variance_rel_error", std::abs(variance(traj.final_field()) - expected) / expected, "<=",
            s.tolerance("variance_rel"));
  if (grid.boundary() == Boundary::periodic) {
    rep.check("grid_mass_defect", traj.max_diffusion_mass_defect, "<=", s.tolerance("mass_defect"), steps);
  }
  positivity(rep, s, "grid_", traj.clipped_mass, traj.initial_mass);

  const DsnldResult res = run_dsnld(s.initial, spec, modes, w, s.time.dt, steps, s.particles.count,
                                    particle_seed(s, 0), dsnld_options(s, s.time.stride));
  rep.check("particle_initial_mass_error", std::abs(res.mass.front() - 1.0), "<=", 0.0, s.particles.count);
  rep.add_metric("particle_variance", variance(res.density.final_field()));
  rep.add_metric("density_l2_integral", res.density_l2_integral);
  if (gaussian) {
    for (std::size_t k = 0; k < res.density.times.size(); ++k) {
      rep.add_metric("particle_l1", l1_distance(res.density.fields[k], exact(res.density.times[k])), res.density.times[k]);
    }
    rep.check("particle_l1_terminal", l1_distance(res.density.final_field(), exact(s.time.horizon)), "<=",
              s.tolerance("particle_l1"), s.particles.count);
  }
  absorb(rep, traj);
  absorb(rep, res.density);
  write_outputs(rep, s, options, [&](const std::filesystem::path& d) {
    traj.save_csv(d / "trajectory.csv");
    traj.save_binary(d / "trajectory.bin");
    res.density.save_csv(d / "density.csv");
    res.final_ensemble.save_csv(d / "ensemble.csv");
  });
  return rep;
}

DiagnosticsReport barenblatt_suite(const Scenario& s, const RunOptions& options) {
  require(s.nonlinearity.name == "porous_medium" && s.initial.shape == "barenblatt" && s.modes.empty() && !s.drift &&
              s.kappa == 0.0,
          "barenblatt suite needs a porous-medium nonlinearity, a Barenblatt initial condition and no noise");
  require(std::abs(s.initial.m - s.nonlinearity.m) < 1e-12, "barenblatt suite: initial exponent differs from m");
  DiagnosticsReport rep = new_report(s);
  const Grid grid = s.grid();
  const ModeSet modes = s.mode_set(grid);
  const NonlinearitySpec spec = s.spec();
  const std::size_t steps = s.time.steps();
  const NoiseRealization w = sample_noise(noise_seed(s, 0), 0, s.time.dt, steps);
  const Barenblatt profile(s.nonlinearity.m);
  const double t0 = s.initial.time;
  auto exact = [&](double t) {
    return GridField::sample(grid, [&](double x) { return profile(t0 + t, x - s.initial.mean); });
  };
  rep.add_metric("front_terminal", profile.front(t0 + s.time.horizon));
  rep.add_metric("max_profile_height", sup_norm(exact(s.time.horizon)));
  if (sup_norm(exact(0.0)) > s.nonlinearity.clip) rep.warn("barenblatt: profile exceeds the nonlinearity clip level");

  const SpdeTrajectory traj =
      solve_spde(s.initial.on_grid(grid), spec, modes, w, s.time.dt, steps, spde_options(s.time.stride));
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    rep.add_metric("grid_l1", l1_distance(traj.fields[k], exact(traj.times[k])), traj.times[k]);
  }
  rep.check("grid_l1_terminal", l1_distance(traj.final_field(), exact(s.time.horizon)), "<=", s.tolerance("grid_l1"));
  positivity(rep, s, "grid_", traj.clipped_mass, traj.initial_mass);

  const DsnldResult res = run_dsnld(s.initial, spec, modes, w, s.time.dt, steps, s.particles.count,
                                    particle_seed(s, 0), dsnld_options(s, s.time.stride));
  for (std::size_t k = 0; k < res.density.times.size(); ++k) {
    rep.add_metric("particle_l1", l1_distance(res.density.fields[k], exact(res.density.times[k])), res.density.times[k]);
  }
  rep.check("particle_l1_terminal", l1_distance(res.density.final_field(), exact(s.time.horizon)), "<=",
            s.tolerance("particle_l1"), s.particles.count);
  rep.add_metric("density_l2_integral", res.density_l2_integral);
  rep.add_metric("degenerate_unregularized", spec.degeneracy() == Degeneracy::degenerate ? 1.0 : 0.0);
  absorb(rep, traj);
  absorb(rep, res.density);
  write_outputs(rep, s, options, [&](const std::filesystem::path& d) {
    traj.save_csv(d / "trajectory.csv");
    res.density.save_csv(d / "density.csv");
    res.final_ensemble.save_csv(d / "ensemble.csv");
  });
  return rep;
}

DiagnosticsReport factorization_suite(const Scenario& s, const RunOptions& options) {
  require(s.nonlinearity.name == "linear" && s.kappa == 0.0 && s.modes.size() == 1 && s.modes[0].name == "constant" &&
              !s.drift && s.initial.shape == "gaussian",
          "factorization suite needs a linear nonlinearity, one constant mode and a Gaussian initial condition");
  DiagnosticsReport rep = new_report(s);
  const Grid grid = s.grid();
  const ModeSet modes = s.mode_set(grid);
  const NonlinearitySpec spec = s.spec();
  const std::size_t steps = s.time.steps();
  const NoiseRealization w = sample_noise(noise_seed(s, 0), 1, s.time.dt, steps);
  const std::vector<double> path = w.path(0);
  const double c = s.modes[0].amplitude;
  const double slope = s.nonlinearity.slope;
  // X(t) = E_t(cW) u(t) with u the deterministic heat solution.
  auto factor = [&](double t) {
    const auto k = static_cast<std::size_t>(std::llround(t / s.time.dt));
    return std::exp(c * path[k] - 0.5 * c * c * t);
  };
  auto exact = [&](double t) {
    const double f = factor(t);
    return GridField::sample(grid, [&](double x) {
      return f * gaussian_density(s.initial.mean, s.initial.variance + slope * t, x);
    });
  };

  const SpdeTrajectory traj =
      solve_spde(s.initial.on_grid(grid), spec, modes, w, s.time.dt, steps, spde_options(s.time.stride));
  double grid_worst = 0.0;
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const double t = traj.times[k];
    const double l1 = l1_distance(traj.fields[k], exact(t));
    grid_worst = std::max(grid_worst, l1);
    rep.add_metric("factor", factor(t), t);
    rep.add_metric("grid_l1", l1, t);
  }
  rep.check("grid_l1_max", grid_worst, "<=", s.tolerance("grid_l1"), traj.times.size());
  positivity(rep, s, "grid_", traj.clipped_mass, traj.initial_mass);

  const DsnldResult res = run_dsnld(s.initial, spec, modes, w, s.time.dt, steps, s.particles.count,
                                    particle_seed(s, 0), dsnld_options(s, s.time.stride));
  double particle_worst = 0.0;
  for (std::size_t k = 0; k < res.density.times.size(); ++k) {
    const double t = res.density.times[k];
    const double l1 = l1_distance(res.density.fields[k], exact(t));
    particle_worst = std::max(particle_worst, l1);
    rep.add_metric("particle_l1", l1, t);
  }
  rep.check("particle_l1_max", particle_worst, "<=", s.tolerance("particle_l1"), s.particles.count);
  const auto& lw = res.final_ensemble.log_weight;
  const auto [lo, hi] = std::minmax_element(lw.begin(), lw.end());
  rep.check("particle_weight_spread", *hi - *lo, "<=", s.tolerance("weight_spread"), s.particles.count);
  rep.add_metric("particle_weight_terminal", std::exp(*lo));
  absorb(rep, traj);
  absorb(rep, res.density);
  write_outputs(rep, s, options, [&](const std::filesystem::path& d) {
    traj.save_csv(d / "trajectory.csv");
    res.density.save_csv(d / "density.csv");
    w.save_csv(d / "noise.csv");
  });
  return rep;
}

// --- Doleans weights ------------------------------------------------------

DiagnosticsReport doleans_suite(const Scenario& s, const RunOptions& options) {
  require(!s.modes.empty(), "doleans_moments suite needs at least one mode");
  DiagnosticsReport rep = new_report(s);
  const Grid grid = s.grid();
  const ModeSet modes = s.mode_set(grid);
  const NonlinearitySpec spec = s.spec();
  const std::size_t steps = s.time.steps();
  const std::size_t stride = s.time.stride;
  const std::size_t r_count = s.realizations;
  const double dt = s.time.dt;
  // Y moves with diffusion Phi(1); the weight moments hold for any
  // adapted path.
  const double sigma = spec.phi(1.0) * std::sqrt(dt);
  const auto quantile = s.initial.quantile_function();

  std::vector<double> times;
  for (std::size_t k = 0; k <= steps; k += stride) times.push_back(static_cast<double>(k) * dt);
  if (steps % stride != 0) times.push_back(static_cast<double>(steps) * dt);
  const std::size_t nt = times.size();

  std::vector<std::vector<double>> martingale(r_count, std::vector<double>(nt)), weight(r_count, std::vector<double>(nt));
  parallel_for(r_count, [&](std::size_t r) {
    const NoiseRealization w = sample_noise(noise_seed(s, r), modes.count(), dt, steps);
    const std::uint64_t ps = particle_seed(s, r);
    std::vector<double> y(steps);
    double pos = quantile(uniform_open(ps, 0, 0, StreamTag::initial));
    for (std::size_t k = 0; k < steps; ++k) {
      y[k] = pos;
      pos += sigma * standard_normal(ps, k, 0, StreamTag::particle);
    }
    const std::vector<LineIncrement> inc = path_line_integral(y, modes, w);
    DoleansWeight z;
    double drift_log = 0.0;
    std::size_t slot = 0;
    for (std::size_t k = 0; k <= steps; ++k) {
      if (slot < nt && std::llround(times[slot] / dt) == static_cast<long long>(k)) {
        weight[r][slot] = z.value();
        martingale[r][slot] = std::exp(z.log_value - drift_log);
        ++slot;
      }
      if (k == steps) break;
      z = doleans_step(std::move(z), inc[k].dm, inc[k].dqv);
      z.ledger.clear();
      if (modes.has_drift()) drift_log += interpolate(modes.drift(), y[k]) * dt;
    }
  });

  const double sigmas = s.tolerance("sigmas");
  std::vector<double> m_terminal(r_count), z_terminal(r_count);
  double min_weight = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < r_count; ++r) {
    m_terminal[r] = martingale[r].back();
    z_terminal[r] = weight[r].back();
    for (double v : weight[r]) min_weight = std::min(min_weight, v);
  }
  const Mean m = mean_se(m_terminal);
  rep.add_metric("martingale_mean_terminal", m.mean);
  rep.add_metric("martingale_se_terminal", m.se);
  rep.check("martingale_mean_gap", std::abs(m.mean - 1.0), "<=", sigmas * m.se, r_count);
  rep.check("weight_min", min_weight, ">", 0.0, r_count);

  if (r_count >= 1000) {
    const SecondMomentReport sm = second_moment_check(martingale, times, modes.sum_sup_squared());
    double excess = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < nt; ++k) {
      rep.add_metric("second_moment", sm.mean[k], times[k]);
      rep.add_metric("second_moment_bound", sm.bound[k], times[k]);
      excess = std::max(excess, sm.mean[k] - sigmas * sm.standard_error[k] - sm.bound[k]);
    }
    rep.check("second_moment_terminal", sm.mean.back() - sigmas * sm.standard_error.back(), "<=", sm.bound.back(),
              r_count);
    rep.check("second_moment_excess_all_t", excess, "<=", 0.0, r_count);
  } else {
    rep.warn("doleans: fewer than 1000 realizations, second-moment check skipped");
  }
  if (modes.has_drift()) {
    const Mean z = mean_se(z_terminal);
    rep.add_metric("weight_mean_terminal", z.mean);
    rep.check("weight_mean_drift_bound", z.mean - sigmas * z.se, "<=", std::exp(s.time.horizon * modes.drift_sup()),
              r_count);
  }
  write_outputs(rep, s, options, [&](const std::filesystem::path& d) {
    std::ofstream out(d / "terminal_weights.csv");
    out.precision(17);
    out << "r,Z,M\n";
    for (std::size_t r = 0; r < r_count; ++r) out << r << ',' << z_terminal[r] << ',' << m_terminal[r] << '\n';
  });
  return rep;
}

// --- mass in expectation --------------------------------------------------

DiagnosticsReport mass_suite(const Scenario& s, const RunOptions& options) {
  require(!s.drift, "mass_expectation suite needs e0 = 0");
  DiagnosticsReport rep = new_report(s);
  const Grid grid = s.grid();
  const ModeSet modes = s.mode_set(grid);
  const NonlinearitySpec spec = s.spec();
  const std::size_t steps = s.time.steps();
  const std::size_t r_count = s.realizations;
  const GridField x0 = s.initial.on_grid(grid);
  std::vector<double> grid_mass(r_count), particle_mass(r_count), clipped(r_count);
  std::vector<std::vector<std::string>> warnings(r_count);
  parallel_for(r_count, [&](std::size_t r) {
    const NoiseRealization w = sample_noise(noise_seed(s, r), modes.count(), s.time.dt, steps);
    const SpdeTrajectory traj = solve_spde(x0, spec, modes, w, s.time.dt, steps, spde_options(steps));
    grid_mass[r] = integral(traj.final_field());
    clipped[r] = traj.clipped_mass / traj.initial_mass;
    const DsnldResult res = run_dsnld(s.initial, spec, modes, w, s.time.dt, steps, s.particles.count,
                                      particle_seed(s, r), dsnld_options(s, steps));
    particle_mass[r] = res.mass.back();
    warnings[r] = traj.warnings;
    warnings[r].insert(warnings[r].end(), res.density.warnings.begin(), res.density.warnings.end());
  });
  const double sigmas = s.tolerance("sigmas");
  const Mean g = mean_se(grid_mass), p = mean_se(particle_mass);
  rep.add_metric("grid_mass_mean", g.mean);
  rep.add_metric("grid_mass_se", g.se);
  rep.add_metric("particle_mass_mean", p.mean);
  rep.add_metric("particle_mass_se", p.se);
  rep.check("grid_mass_gap", std::abs(g.mean - 1.0), "<=", sigmas * g.se, r_count);
  rep.check("particle_mass_gap", std::abs(p.mean - 1.0), "<=", sigmas * p.se, r_count);
  rep.check("grid_clipped_fraction_max", *std::max_element(clipped.begin(), clipped.end()), "<",
            s.tolerance("clipped_fraction"), r_count);
  rep.add_metric("degenerate_unregularized", spec.degeneracy() == Degeneracy::degenerate ? 1.0 : 0.0);
  for (const auto& list : warnings) {
    for (const auto& w : list) rep.warn(w);
  }
  write_outputs(rep, s, options, [&](const std::filesystem::path& d) {
    std::ofstream out(d / "terminal_mass.csv");
    out.precision(17);
    out << "r,grid,particles\n";
    for (std::size_t r = 0; r < r_count; ++r) out << r << ',' << grid_mass[r] << ',' << particle_mass[r] << '\n';
  });
  return rep;
}

// --- multiplier inequality ------------------------------------------------

GridField random_field(const Grid& grid, std::uint64_t seed, std::size_t q) {
  const double L = grid.half_width();
  const double h = grid.spacing();
  auto u = [&](std::uint32_t c) { return uniform_open(seed, q, c, StreamTag::test_field); };
  auto z = [&](std::uint32_t c) { return standard_normal(seed, q, c, StreamTag::test_field); };
  GridField f(grid);
  switch (q % 3) {
    case 0: {  // a few Fourier modes across the resolvable band
      const double kmax = std::numbers::pi / h;
      for (std::uint32_t i = 0; i < 8; ++i) {
        const double k = std::numbers::pi / L * std::ceil(u(3 * i) * kmax * L / std::numbers::pi);
        const double a = z(3 * i + 1), phase = 2.0 * std::numbers::pi * u(3 * i + 2);
        for (std::size_t j = 0; j < f.size(); ++j) f[j] += a * std::sin(k * grid.node(j) + phase);
      }
      break;
    }
    case 1:  // white noise
      for (std::size_t j = 0; j < f.size(); ++j) f[j] = z(static_cast<std::uint32_t>(100 + j));
      break;
    default: {  // narrow or wide bump
      const double c = -0.8 * L + 1.6 * L * u(0);
      const double w = 2.0 * h + (0.25 * L - 2.0 * h) * u(1);
      f = GridField::sample(grid, [&](double x) { return std::exp(-0.5 * (x - c) * (x - c) / (w * w)); });
      break;
    }
  }
  return f;
}

DiagnosticsReport multiplier_suite(const Scenario& s, const RunOptions& options) {
  require(!s.modes.empty(), "multiplier suite needs at least one catalog mode");
  DiagnosticsReport rep = new_report(s);
  const Grid grid = s.grid();
  const std::size_t fields = s.sweep.random_fields;
  require(fields > 0, "multiplier suite needs sweep.random_fields > 0");
  std::vector<GridField> tests;
  for (std::size_t q = 0; q < fields; ++q) tests.push_back(random_field(grid, s.noise_seed, q));
  for (std::size_t i = 0; i < s.modes.size(); ++i) {
    const GridField e = GridField::sample(grid, s.modes[i]);
    const double bound = multiplier_norm_bound(e);
    std::vector<double> ratio(fields);
    parallel_for(fields, [&](std::size_t q) {
      ratio[q] = sobolev_norm(hadamard(e, tests[q]), -1) / sobolev_norm(tests[q], -1);
    });
    const double worst = *std::max_element(ratio.begin(), ratio.end());
    const auto violations = static_cast<double>(
        std::count_if(ratio.begin(), ratio.end(), [&](double r) { return r > bound * (1.0 + 1e-12); }));
    const std::string label = "mode" + std::to_string(i) + "_" + s.modes[i].name;
    rep.add_row(SweepRow{"multiplier", {{"mode", static_cast<double>(i)}, {"bound", bound}, {"max_ratio", worst}}});
    rep.add_metric(label + "_bound", bound);
    rep.add_metric(label + "_max_ratio", worst);
    rep.check(label + "_violations", violations, "<=", s.tolerance("violations"), fields);
  }
  write_outputs(rep, s, options);
  return rep;
}

// --- Fokker-Planck uniqueness ---------------------------------------------

DiagnosticsReport fp_suite(const Scenario& s, const RunOptions& options) {
  require(s.coefficient.has_value(), "fp_uniqueness suite needs a coefficient");
  const auto& res_list = s.sweep.resolutions;
  require(res_list.size() >= 3, "fp_uniqueness suite needs at least three resolutions");
  for (std::size_t i = 1; i < res_list.size(); ++i) require(res_list[i] > res_list[i - 1], "resolutions must increase");
  DiagnosticsReport rep = new_report(s);
  const CoefficientConfig a = *s.coefficient;
  const std::size_t steps = s.time.steps();
  const std::size_t r_count = s.realizations;
  const std::size_t nres = res_list.size();
  const std::size_t mid = nres / 2;
  const double delta = s.sweep.perturbation;
  SpdeOptions o = spde_options(s.time.stride);
  o.clip_negative = false;  // linear equation, no sign constraint

  struct Level {
    Grid grid;
    ModeSet modes;
    GridField z0, coeff;
  };
  std::vector<Level> levels;
  for (std::size_t n : res_list) {
    const Grid g(s.half_width, n, s.boundary);
    levels.push_back({g, s.mode_set(g), s.initial.on_grid(g), GridField::sample(g, a)});
    require(*std::min_element(levels.back().coeff.values().begin(), levels.back().coeff.values().end()) >= 0.0,
            "fp_uniqueness: coefficient must be nonnegative");
  }
  const Level& ref = levels[mid];
  const GridField bump = GridField::sample(ref.grid, [&](double x) { return std::exp(-0.5 * x * x) * std::cos(2.0 * x); });
  const GridField z0_perturbed = ref.z0 + delta * bump;

  std::vector<std::vector<std::vector<double>>> pair_g(nres - 1, std::vector<std::vector<double>>(r_count));
  std::vector<std::vector<double>> same_g(r_count), pert_g(r_count);
  std::vector<double> times;
  parallel_for(r_count, [&](std::size_t r) {
    const NoiseRealization w = sample_noise(noise_seed(s, r), ref.modes.count(), s.time.dt, steps);
    std::vector<SpdeTrajectory> runs;
    for (const Level& lv : levels) {
      const GridField& coeff = lv.coeff;
      runs.push_back(solve_fokker_planck([&](std::size_t) { return coeff; }, lv.z0, lv.modes, w, s.time.dt, steps, o));
    }
    for (std::size_t i = 0; i + 1 < nres; ++i) pair_g[i][r] = h_minus1_distance(runs[i], runs[i + 1]);
    const GridField& coeff = ref.coeff;
    auto a_ref = [&](std::size_t) { return coeff; };
    const SpdeTrajectory again = solve_fokker_planck(a_ref, ref.z0, ref.modes, w, s.time.dt, steps, o);
    same_g[r] = h_minus1_distance(runs[mid], again);
    const SpdeTrajectory pert = solve_fokker_planck(a_ref, z0_perturbed, ref.modes, w, s.time.dt, steps, o);
    pert_g[r] = h_minus1_distance(runs[mid], pert);
    if (r == 0) times = runs[mid].times;
  });

  std::vector<double> distance;
  for (std::size_t i = 0; i + 1 < nres; ++i) {
    const SeriesStats st = column_stats(pair_g[i]);
    const double d = std::sqrt(*std::max_element(st.mean.begin(), st.mean.end()));
    distance.push_back(d);
    rep.add_row(SweepRow{"resolution", {{"n_coarse", static_cast<double>(res_list[i])},
                                        {"n_fine", static_cast<double>(res_list[i + 1])},
                                        {"sup_h_minus1", d}}});
  }
  for (std::size_t i = 0; i + 1 < distance.size(); ++i) {
    const double order = std::log(distance[i] / distance[i + 1]) /
                         std::log(static_cast<double>(res_list[i + 1]) / static_cast<double>(res_list[i]));
    rep.check("empirical_order_" + std::to_string(res_list[i + 1]), order, ">=", s.tolerance("order"), r_count);
  }
  double same_max = 0.0;
  for (const auto& row : same_g) {
    for (double v : row) same_max = std::max(same_max, v);
  }
  rep.check("identical_discretization_g_max", same_max, "<=", s.tolerance("identical_g"), r_count);

  const double c = gronwall_constant(ref.modes);
  const double sigmas = s.tolerance("sigmas");
  const GronwallReport identical = gronwall_check(same_g, times, c, sigmas);
  rep.check("gronwall_identical_excess", identical.max_excess, "<=", 0.0, r_count);
  const GronwallReport gr = gronwall_check(pert_g, times, c, sigmas);
  for (std::size_t k = 0; k < times.size(); ++k) {
    rep.add_metric("perturbed_g_mean", gr.mean[k], times[k]);
    rep.add_metric("perturbed_g_envelope", gr.envelope[k], times[k]);
  }
  rep.add_metric("gronwall_constant", c);
  rep.add_metric("gronwall_fitted_rate", gr.fitted_rate);
  rep.check("gronwall_perturbed_excess", gr.max_excess, "<=", 0.0, r_count);
  write_outputs(rep, s, options);
  return rep;
}

// --- kappa sweep ----------------------------------------------------------

DiagnosticsReport kappa_suite(const Scenario& s, const RunOptions& options) {
  require(!s.sweep.kappas.empty(), "kappa_sweep suite needs sweep.kappas");
  DiagnosticsReport rep = new_report(s);
  const Grid grid = s.grid();
  KappaSweepConfig cfg{s.initial.on_grid(grid), s.spec(), s.mode_set(grid), s.time.dt, s.time.steps(),
                       s.sweep.kappas, {}, s.tolerance("sigmas")};
  for (std::size_t r = 0; r < s.realizations; ++r) cfg.seeds.push_back(noise_seed(s, r));
  const KappaSweepTable t = kappa_sweep(cfg);
  const std::size_t n = s.realizations;
  rep.add_metric("reference_kappa", t.reference_kappa);
  std::size_t outside = 0;
  for (const KappaRow& row : t.rows) {
    rep.add_row(SweepRow{"kappa_sweep",
                         {{"kappa", row.kappa},
                          {"sup_mean_g", row.sup_mean_g},
                          {"sup_se", row.sup_standard_error},
                          {"psi_l2", row.psi_l2},
                          {"kappa_l2", row.kappa_l2},
                          {"bound", row.bound},
                          {"cauchy", row.cauchy}}});
    if (!row.within_bound) ++outside;
  }
  rep.add_metric("log_log_slope", t.slope);
  rep.check("column_a_monotone_violations", t.a_decreasing ? 0.0 : 1.0, "<=", 0.0, n);
  rep.check("log_log_slope_min", t.slope, ">=", s.tolerance("slope_min"), n);
  rep.check("log_log_slope_max", t.slope, "<=", s.tolerance("slope_max"), n);
  rep.check("bound_violations", static_cast<double>(outside), "<=", 0.0, n);
  rep.check("column_b_monotone_violations", t.psi_decreasing ? 0.0 : 1.0, "<=", 0.0, n);
  rep.check("column_c_monotone_violations", t.kappa_l2_decreasing ? 0.0 : 1.0, "<=", 0.0, n);
  rep.check("negative_entries", t.nonnegative ? 0.0 : 1.0, "<=", 0.0, n);
  write_outputs(rep, s, options, [&](const std::filesystem::path& d) {
    std::ofstream out(d / "kappa_sweep.csv");
    out.precision(17);
    out << "kappa,sup_mean_g,sup_se,psi_l2,kappa_l2,bound,cauchy\n";
    for (const KappaRow& r : t.rows) {
      out << r.kappa << ',' << r.sup_mean_g << ',' << r.sup_standard_error << ',' << r.psi_l2 << ',' << r.kappa_l2
          << ',' << r.bound << ',' << r.cauchy << '\n';
    }
  });
  return rep;
}

// --- cross-validation ----------------------------------------------------

DiagnosticsReport cross_suite(const Scenario& s, const RunOptions& options) {
  const auto& counts = s.sweep.particle_counts;
  const auto& dts = s.sweep.dts;
  require(counts.size() >= 2 && dts.size() >= 2, "cross_validation suite needs particle_counts and dts sweeps");
  for (std::size_t i = 1; i < dts.size(); ++i) require(dts[i] < dts[i - 1], "dts must decrease");
  DiagnosticsReport rep = new_report(s);
  const Grid grid = s.grid();
  const ModeSet modes = s.mode_set(grid);
  const NonlinearitySpec spec = s.spec();
  const double fine_dt = dts.back();
  const std::size_t fine_steps = static_cast<std::size_t>(std::llround(s.time.horizon / fine_dt));
  std::vector<std::size_t> factor;
  for (double d : dts) {
    const double f = d / fine_dt;
    require(std::abs(f - std::round(f)) < 1e-9 * f, "dts must be integer multiples of the finest step");
    factor.push_back(static_cast<std::size_t>(std::llround(f)));
    const double k = s.time.horizon / d;
    require(std::abs(k - std::round(k)) < 1e-9 * k, "horizon must be a whole number of steps for every dt");
  }
  const std::size_t r_count = s.realizations;
  const std::size_t q_count = s.sweep.particle_seeds;
  const std::size_t nc = counts.size(), nd = dts.size();
  const GridField x0 = s.initial.on_grid(grid);

  // Terminal distances, indexed [setting][r * q_count + q]. Settings: counts
  // at dts[0], then dts[1..] at counts[0].
  const std::size_t settings = nc + nd - 1;
  std::vector<std::vector<double>> hm(settings, std::vector<double>(r_count * q_count));
  std::vector<std::vector<double>> l1 = hm;
  std::vector<double> clipped(r_count);
  std::vector<std::vector<std::string>> warnings(r_count);
  CrossValidation reference_series;
  parallel_for(r_count, [&](std::size_t r) {
    const NoiseRealization fine = sample_noise(noise_seed(s, r), modes.count(), fine_dt, fine_steps);
    std::vector<SpdeTrajectory> grid_runs;
    std::vector<NoiseRealization> noises;
    for (std::size_t j = 0; j < nd; ++j) {
      noises.push_back(factor[j] == 1 ? fine : fine.coarsen(factor[j]));
      const std::size_t steps = noises.back().steps();
      const std::size_t stride = s.time.stride * factor[0] / factor[j];
      grid_runs.push_back(solve_spde(x0, spec, modes, noises.back(), dts[j], steps, spde_options(stride)));
      for (const auto& w : grid_runs.back().warnings) warnings[r].push_back(w);
      clipped[r] = std::max(clipped[r], grid_runs.back().clipped_mass / grid_runs.back().initial_mass);
    }
    for (std::size_t q = 0; q < q_count; ++q) {
      const std::uint64_t ps = particle_seed(s, r, q);
      for (std::size_t set = 0; set < settings; ++set) {
        const std::size_t ci = set < nc ? set : 0;
        const std::size_t dj = set < nc ? 0 : set - nc + 1;
        const std::size_t stride = s.time.stride * factor[0] / factor[dj];
        const DsnldResult res = run_dsnld(s.initial, spec, modes, noises[dj], dts[dj], noises[dj].steps(), counts[ci],
                                          ps, dsnld_options(s, stride));
        for (const auto& w : res.density.warnings) warnings[r].push_back(w);
        const CrossValidation cv = cross_validate(grid_runs[dj], res.density);
        hm[set][r * q_count + q] = cv.terminal_h_minus1();
        l1[set][r * q_count + q] = cv.terminal_l1();
        if (r == 0 && q == 0 && set == 0) reference_series = cv;
      }
    }
  });

  const std::size_t n = r_count * q_count;
  const double sigmas = s.tolerance("sigmas");
  auto setting_row = [&](std::size_t set) {
    const std::size_t ci = set < nc ? set : 0;
    const std::size_t dj = set < nc ? 0 : set - nc + 1;
    const Mean h = mean_se(hm[set]), l = mean_se(l1[set]);
    rep.add_row(SweepRow{"cross_validation",
                         {{"particles", static_cast<double>(counts[ci])},
                          {"dt", dts[dj]},
                          {"h_minus1_mean", h.mean},
                          {"h_minus1_se", h.se},
                          {"l1_mean", l.mean}}});
    return h;
  };
  std::vector<Mean> means;
  for (std::size_t set = 0; set < settings; ++set) means.push_back(setting_row(set));
  for (std::size_t k = 0; k < reference_series.times.size(); ++k) {
    rep.add_metric("reference_h_minus1", reference_series.h_minus1[k], reference_series.times[k]);
    rep.add_metric("reference_l1", reference_series.l1[k], reference_series.times[k]);
  }
  rep.check("h_minus1_reference", means[0].mean, "<", s.tolerance("h_minus1"), n);

  // Paired differences: refinement must not increase the distance beyond
  // the statistical margin.
  auto paired = [&](std::size_t from, std::size_t to, const std::string& name) {
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = hm[to][i] - hm[from][i];
    const Mean m = mean_se(d);
    rep.check(name, m.mean, "<=", sigmas * m.se, n);
  };
  for (std::size_t i = 1; i < nc; ++i) {
    paired(i - 1, i, "particles_" + std::to_string(counts[i - 1]) + "_to_" + std::to_string(counts[i]));
  }
  for (std::size_t j = 1; j < nd; ++j) {
    std::ostringstream name;
    name << "dt_" << dts[j - 1] << "_to_" << dts[j];
    paired(j == 1 ? 0 : nc + j - 2, nc + j - 1, name.str());
  }
  rep.check("grid_clipped_fraction_max", *std::max_element(clipped.begin(), clipped.end()), "<",
            s.tolerance("clipped_fraction"), r_count);
  for (const auto& list : warnings) {
    for (const auto& w : list) rep.warn(w);
  }
  write_outputs(rep, s, options);
  return rep;
}

// --- mollified coefficients ----------------------------------------------

DiagnosticsReport mollified_suite(const Scenario& s, const RunOptions& options) {
  require(s.coefficient.has_value(), "mollified_sde suite needs a coefficient");
  require(s.sweep.mollifier_levels.size() >= 2, "mollified_sde suite needs at least two mollifier levels");
  require(s.sweep.samples > 0, "mollified_sde suite needs sweep.samples");
  DiagnosticsReport rep = new_report(s);
  MollifiedSdeConfig cfg;
  cfg.coefficient = *s.coefficient;
  cfg.levels = s.sweep.mollifier_levels;
  cfg.samples = s.sweep.samples;
  cfg.dt = s.time.dt;
  cfg.horizon = s.time.horizon;
  cfg.start = s.initial.shape == "point" ? s.initial.at : s.initial.mean;
  cfg.seed = s.noise_seed;
  cfg.domain_half_width = s.half_width;
  cfg.table_points = s.points;
  const MollifiedSdeReport res = mollified_coefficient_experiment(cfg);
  rep.add_metric("coefficient_min", res.lower_bound);
  rep.add_metric("coefficient_max", res.upper_bound);
  for (std::size_t i = 0; i < res.ks.size(); ++i) {
    rep.add_row(SweepRow{"mollified_sde", {{"n", static_cast<double>(cfg.levels[i])},
                                           {"n_next", static_cast<double>(cfg.levels[i + 1])},
                                           {"ks", res.ks[i]}}});
  }
  rep.check("ks_monotone_violations", res.strictly_decreasing ? 0.0 : 1.0, "<=", 0.0, cfg.samples);
  rep.check("ks_final", res.ks.back(), "<=", s.tolerance("ks_final"), cfg.samples);
  write_outputs(rep, s, options);
  return rep;
}

// --- filtering demo -------------------------------------------------------

DiagnosticsReport zakai_suite(const Scenario& s, const RunOptions& options) {
  require(s.nonlinearity.name == "linear" && s.kappa == 0.0 && s.modes.size() == 1 && !s.drift,
          "zakai_filter suite needs a linear nonlinearity and one observation mode");
  DiagnosticsReport rep = new_report(s);
  const Grid grid = s.grid();
  const ModeSet modes = s.mode_set(grid);
  const NonlinearitySpec spec = s.spec();
  const std::size_t steps = s.time.steps();
  const double dt = s.time.dt;
  const ModeDescriptor& h = s.modes[0];

  // Hidden signal dX = Phi dB and observations dY = h(X) dt + dW.
  const NoiseRealization obs_noise = sample_noise(noise_seed(s, 0), 1, dt, steps);
  const std::uint64_t sig_seed = derive_seed(s.noise_seed, 0x5167);
  rep.add_seed("signal", sig_seed);
  const double sigma = std::sqrt(spec.phi_squared(1.0) * dt);
  std::vector<double> signal(steps + 1), increments(steps);
  signal[0] = s.initial.quantile(uniform_open(sig_seed, 0, 0, StreamTag::signal));
  for (std::size_t k = 0; k < steps; ++k) {
    increments[k] = h(signal[k]) * dt + obs_noise.increment(0, k);
    signal[k + 1] = signal[k] + sigma * standard_normal(sig_seed, k, 1, StreamTag::signal);
  }
  const NoiseRealization obs(obs_noise.seed(), 1, dt, steps, increments);

  const Grid dense(s.half_width, s.sweep.reference_points, s.boundary);
  const SpdeTrajectory reference = solve_spde(s.initial.on_grid(dense), spec, modes.on_grid(dense), obs, dt, steps,
                                              spde_options(s.time.stride));
  const DsnldResult res = run_dsnld(s.initial, spec, modes, obs, dt, steps, s.particles.count, particle_seed(s, 0),
                                    dsnld_options(s, s.time.stride));
  double worst = 0.0;
  for (std::size_t k = 0; k < reference.times.size(); ++k) {
    const double t = reference.times[k];
    const double grid_mean = first_moment(reference.fields[k]);
    const double particle_mean = first_moment(res.density.fields[k]);
    worst = std::max(worst, std::abs(grid_mean - particle_mean));
    rep.add_metric("signal", signal[static_cast<std::size_t>(std::llround(t / dt))], t);
    rep.add_metric("filter_mean_grid", grid_mean, t);
    rep.add_metric("filter_mean_particles", particle_mean, t);
    rep.add_metric("unnormalized_mass_particles", res.mass[k], t);
  }
  rep.check("filter_mean_gap_max", worst, "<=", s.tolerance("mean_gap"), s.particles.count);
  positivity(rep, s, "reference_", reference.clipped_mass, reference.initial_mass);
  absorb(rep, reference);
  absorb(rep, res.density);
  write_outputs(rep, s, options, [&](const std::filesystem::path& d) {
    std::ofstream out(d / "filter.csv");
    out.precision(17);
    out << "t,signal,grid_mean,particle_mean\n";
    for (std::size_t k = 0; k < reference.times.size(); ++k) {
      const double t = reference.times[k];
      out << t << ',' << signal[static_cast<std::size_t>(std::llround(t / dt))] << ','
          << first_moment(reference.fields[k]) << ',' << first_moment(res.density.fields[k]) << '\n';
    }
    obs.save_csv(d / "observations.csv");
  });
  return rep;
}

template <class F>
DiagnosticsReport with_context(const Scenario& s, F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw std::runtime_error("scenario " + s.name + ": " + e.what());
  }
}

}  // namespace

DiagnosticsReport run_suite(const std::string& suite, const Scenario& s, const RunOptions& options) {
  using Runner = DiagnosticsReport (*)(const Scenario&, const RunOptions&);
  static const std::map<std::string, Runner> runners = {
      {"none", compare_report},
      {"heat_oracle", heat_oracle},
      {"barenblatt", barenblatt_suite},
      {"factorization", factorization_suite},
      {"doleans_moments", doleans_suite},
      {"mass_expectation", mass_suite},
      {"multiplier", multiplier_suite},
      {"fp_uniqueness", fp_suite},
      {"kappa_sweep", kappa_suite},
      {"cross_validation", cross_suite},
      {"mollified_sde", mollified_suite},
      {"zakai_filter", zakai_suite},
  };
  const auto it = runners.find(suite);
  if (it == runners.end()) throw std::invalid_argument("unknown suite '" + suite + "'");
  return with_context(s, [&] { return it->second(s, options); });
}

DiagnosticsReport run_scenario(const Scenario& s, const RunOptions& options) { return run_suite(s.suite, s, options); }

DiagnosticsReport run_solve_spde(const Scenario& s, const RunOptions& options) {
  return with_context(s, [&] { return solve_spde_report(s, options); });
}

DiagnosticsReport run_particles(const Scenario& s, const RunOptions& options) {
  return with_context(s, [&] { return particles_report(s, options); });
}

DiagnosticsReport run_compare(const Scenario& s, const RunOptions& options) {
  return with_context(s, [&] { return compare_report(s, options); });
}

}  // namespace spm
