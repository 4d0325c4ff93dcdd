#include "spmlab/particles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "spmlab/parallel.hpp"
#include "spmlab/philox.hpp"

namespace spm {

double ParticleEnsemble::weight(std::size_t j) const { return std::exp(log_weight[j]); }

double ParticleEnsemble::total_mass() const {
  double s = 0.0;
  for (double lw : log_weight) s += std::exp(lw);
  return position.empty() ? 0.0 : s / static_cast<double>(position.size());
}

double ParticleEnsemble::mean_position() const {
  double s = 0.0;
  for (double y : position) s += y;
  return position.empty() ? 0.0 : s / static_cast<double>(position.size());
}

void ParticleEnsemble::save_csv(const std::filesystem::path& file) const {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out.precision(17);
  out << "j,Y,Z\n";
  for (std::size_t j = 0; j < size(); ++j) out << j << ',' << position[j] << ',' << weight(j) << '\n';
}

ParticleEnsemble init_ensemble(const InitialCondition& x0, std::size_t count, std::uint64_t seed) {
  if (count < 100) throw std::invalid_argument("init_ensemble: need at least 100 particles");
  const auto quantile = x0.quantile_function();
  ParticleEnsemble ens;
  ens.position.resize(count);
  ens.log_weight.assign(count, 0.0);
  ens.drift_log.assign(count, 0.0);
  ens.seed = seed;
  parallel_for(count, [&](std::size_t j) {
    ens.position[j] = quantile(uniform_open(seed, j, 0, StreamTag::initial));
  });
  return ens;
}

WeightedDensity weighted_density(const ParticleEnsemble& ens, double bandwidth, const Grid& grid) {
  const double h = grid.spacing();
  if (bandwidth < h * (1.0 - 1e-12)) {
    throw std::invalid_argument("weighted_density: bandwidth below the grid spacing");
  }
  const std::size_t n = grid.size();
  const std::size_t m = ens.size();
  if (m == 0) throw std::invalid_argument("weighted_density: empty ensemble");
  const bool periodic = grid.boundary() == Boundary::periodic;
  const double inv_m = 1.0 / static_cast<double>(m);

  std::vector<std::vector<double>> partial(kReductionChunks, std::vector<double>(n, 0.0));
  std::vector<double> weight_sum(kReductionChunks, 0.0);
  parallel_for(kReductionChunks, [&](std::size_t c) {
    std::vector<double>& bins = partial[c];
    const std::size_t begin = m * c / kReductionChunks;
    const std::size_t end = m * (c + 1) / kReductionChunks;
    for (std::size_t j = begin; j < end; ++j) {
      const double z = std::exp(ens.log_weight[j]);
      weight_sum[c] += z;
      const double mass = z * inv_m;
      double u = (ens.position[j] + grid.half_width()) / h;
      if (periodic) {
        const double nn = static_cast<double>(n);
        u = std::fmod(u, nn);
        if (u < 0.0) u += nn;
        auto i = static_cast<std::size_t>(u);
        if (i >= n) i = n - 1;
        const double frac = u - static_cast<double>(i);
        bins[i] += (1.0 - frac) * mass;
        bins[(i + 1) % n] += frac * mass;
      } else if (u <= 0.0) {
        bins[0] += mass;
      } else if (u >= static_cast<double>(n - 1)) {
        bins[n - 1] += mass;
      } else {
        const auto i = static_cast<std::size_t>(u);
        const double frac = u - static_cast<double>(i);
        bins[i] += (1.0 - frac) * mass;
        bins[i + 1] += frac * mass;
      }
    }
  });

  GridField binned(grid);
  double total = 0.0;
  for (std::size_t c = 0; c < kReductionChunks; ++c) {
    total += weight_sum[c];
    for (std::size_t i = 0; i < n; ++i) binned[i] += partial[c][i];
  }
  total /= static_cast<double>(m);
  for (std::size_t i = 0; i < n; ++i) binned[i] /= h;
  WeightedDensity out{mollify(binned, Mollifier{KernelShape::gaussian, bandwidth}), total};
  for (double& v : out.density.values()) v = std::max(v, 0.0);
  return out;
}

double silverman_bandwidth(const ParticleEnsemble& ens, const Grid& grid) {
  const std::size_t m = ens.size();
  double wsum = 0.0, mean = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double w = ens.weight(j);
    wsum += w;
    mean += w * ens.position[j];
  }
  if (!(wsum > 0.0)) return grid.spacing();
  mean /= wsum;
  double var = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double d = ens.position[j] - mean;
    var += ens.weight(j) * d * d;
  }
  var /= wsum;
  const double eps = 1.06 * std::sqrt(var) * std::pow(static_cast<double>(m), -0.2);
  return std::max(grid.spacing(), eps);
}

ParticleEnsemble step_particles(const ParticleEnsemble& ens, const GridField& density,
                                const NonlinearitySpec& spec, const ModeSet& modes,
                                const NoiseRealization& w, std::size_t k, double dt) {
  if (k >= w.steps()) throw std::out_of_range("step_particles: noise step out of range");
  if (modes.count() > w.channels()) throw std::invalid_argument("step_particles: more modes than channels");
  ParticleEnsemble next = ens;
  const double sdt = std::sqrt(dt);
  const std::size_t nmodes = modes.count();
  std::vector<double> dw(nmodes);
  for (std::size_t i = 0; i < nmodes; ++i) dw[i] = w.increment(i, k);
  const bool drift = modes.has_drift();

  parallel_for(ens.size(), [&](std::size_t j) {
    const double y = ens.position[j];
    const double diffusion = spec.phi(interpolate(density, y));
    double dm = 0.0, dqv = 0.0;
    for (std::size_t i = 0; i < nmodes; ++i) {
      const double e = interpolate(modes.mode(i), y);
      dm += e * dw[i];
      dqv += e * e * dt;
    }
    if (drift) {
      const double e0dt = interpolate(modes.drift(), y) * dt;
      dm += e0dt;
      next.drift_log[j] += e0dt;
    }
    next.log_weight[j] += dm - 0.5 * dqv;
    if (diffusion != 0.0) {
      const double xi = standard_normal(ens.seed, ens.step, static_cast<std::uint32_t>(j), StreamTag::particle);
      next.position[j] = y + diffusion * sdt * xi;
    }
  });
  next.time = ens.time + dt;
  next.step = ens.step + 1;
  return next;
}

DsnldResult run_dsnld(ParticleEnsemble ens, const NonlinearitySpec& spec, const ModeSet& modes,
                      const NoiseRealization& w, double dt, std::size_t steps,
                      const DsnldOptions& options) {
  const Grid& grid = modes.grid();
  if (options.stride == 0) throw std::invalid_argument("run_dsnld: stride must be positive");
  if (std::abs(w.dt() - dt) > 1e-12 * dt || w.steps() < steps) {
    throw std::invalid_argument("run_dsnld: noise realization does not match the time grid");
  }
  const double escape = options.escape_fraction * grid.half_width();
  auto bandwidth = [&](const ParticleEnsemble& e) {
    return options.bandwidth ? std::max(*options.bandwidth, grid.spacing()) : silverman_bandwidth(e, grid);
  };

  DsnldResult result{SpdeTrajectory(grid), {}, {}, 0.0};
  result.density.noise_seed = w.seed();
  result.density.dt = dt;
  result.density.stride = options.stride;
  result.density.initial_mass = ens.total_mass();

  auto record = [&](double t, const WeightedDensity& d) {
    result.density.times.push_back(t);
    result.density.fields.push_back(d.density);
    result.mass.push_back(d.total_mass);
    result.density.max_boundary_fraction =
        std::max(result.density.max_boundary_fraction, boundary_mass_fraction(d.density));
  };

  for (std::size_t k = 0; k < steps; ++k) {
    WeightedDensity d = weighted_density(ens, bandwidth(ens), grid);
    result.density_l2_integral += dt * inner(d.density, d.density);
    if (k % options.stride == 0) record(static_cast<double>(k) * dt, d);
    if (options.picard) {
      const ParticleEnsemble trial = step_particles(ens, d.density, spec, modes, w, k, dt);
      const WeightedDensity d2 = weighted_density(trial, bandwidth(trial), grid);
      d.density = 0.5 * (d.density + d2.density);
    }
    ens = step_particles(ens, d.density, spec, modes, w, k, dt);
    for (std::size_t j = 0; j < ens.size(); ++j) {
      if (!(std::abs(ens.position[j]) <= escape)) {
        std::ostringstream msg;
        msg << "particle " << j << " escaped to " << ens.position[j] << " at step " << k + 1
            << " (limit " << escape << ")";
        throw std::runtime_error(msg.str());
      }
    }
  }
  const WeightedDensity last = weighted_density(ens, bandwidth(ens), grid);
  if (steps % options.stride != 0 || result.density.times.empty() ||
      result.density.times.back() != static_cast<double>(steps) * dt) {
    record(static_cast<double>(steps) * dt, last);
  }
  if (result.density.max_boundary_fraction > 1e-8) {
    std::ostringstream msg;
    msg << "boundary-mass: particle density fraction " << result.density.max_boundary_fraction
        << " in the outer 10% of the domain";
    result.density.warnings.push_back(msg.str());
  }
  result.final_ensemble = std::move(ens);
  return result;
}

DsnldResult run_dsnld(const InitialCondition& x0, const NonlinearitySpec& spec,
                      const ModeSet& modes, const NoiseRealization& w, double dt,
                      std::size_t steps, std::size_t count, std::uint64_t particle_seed,
                      const DsnldOptions& options) {
  return run_dsnld(init_ensemble(x0, count, particle_seed), spec, modes, w, dt, steps, options);
}

GridField normalize_density(const WeightedDensity& d) {
  const double mass = integral(d.density);
  if (!(mass > 0.0)) throw std::invalid_argument("normalize_density: zero total mass");
  return d.density * (1.0 / mass);
}

SecondMomentReport second_moment_check(const std::vector<std::vector<double>>& samples,
                                       const std::vector<double>& times, double sum_sup_squared,
                                       bool samples_are_squared) {
  const std::size_t r = samples.size();
  if (r < 1000) throw std::invalid_argument("second_moment_check: need at least 1000 realizations");
  SecondMomentReport rep;
  for (std::size_t k = 0; k < times.size(); ++k) {
    double s = 0.0, s2 = 0.0;
    for (const auto& row : samples) {
      const double v = samples_are_squared ? row.at(k) : row.at(k) * row.at(k);
      s += v;
      s2 += v * v;
    }
    const double mean = s / static_cast<double>(r);
    const double var = std::max(0.0, (s2 - s * mean) / static_cast<double>(r - 1));
    const double se = std::sqrt(var / static_cast<double>(r));
    const double bound = std::exp(3.0 * times[k] * sum_sup_squared);
    rep.mean.push_back(mean);
    rep.standard_error.push_back(se);
    rep.bound.push_back(bound);
    if (mean - 4.0 * se > bound) rep.pass = false;
  }
  return rep;
}

}  // namespace spm
