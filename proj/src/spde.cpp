#include "spmlab/spde.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "spmlab/tridiagonal.hpp"

namespace spm {

GridField implicit_diffusion_solve(const GridField& x, const GridField& a, double c) {
  const Grid& grid = x.grid();
  if (!(a.grid() == grid)) throw std::invalid_argument("implicit_diffusion_solve: grid mismatch");
  const std::size_t n = grid.size();
  const double r = c / (grid.spacing() * grid.spacing());
  std::vector<double> lower(n), diag(n), upper(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (a[j] < 0.0 || !std::isfinite(a[j])) {
      throw std::invalid_argument("implicit_diffusion_solve: coefficient must be finite and nonnegative");
    }
    diag[j] = 1.0 + 2.0 * r * a[j];
    lower[j] = j > 0 ? -r * a[j - 1] : -r * a[n - 1];
    upper[j] = j + 1 < n ? -r * a[j + 1] : -r * a[0];
  }
  if (grid.boundary() == Boundary::periodic) {
    return GridField(grid, solve_cyclic_tridiagonal(lower, diag, upper, x.values()));
  }
  diag[0] = 1.0 + r * a[0];
  diag[n - 1] = 1.0 + r * a[n - 1];
  return GridField(grid, solve_tridiagonal(lower, diag, upper, x.values()));
}

namespace {

GridField phi_squared_field(const GridField& x, const NonlinearitySpec& spec) {
  GridField a(x.grid());
  for (std::size_t j = 0; j < x.size(); ++j) a[j] = spec.phi_squared(x[j]);
  return a;
}

void check_noise(const ModeSet& modes, const NoiseRealization& w, double dt, std::size_t steps) {
  if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
  if (std::abs(w.dt() - dt) > 1e-12 * dt) {
    throw std::invalid_argument("noise realization time step does not match the solver step");
  }
  if (w.steps() < steps) throw std::invalid_argument("noise realization has too few steps");
  if (modes.count() > w.channels()) throw std::invalid_argument("more modes than noise channels");
}

void record(SpdeTrajectory& traj, double t, const GridField& x, const SpdeOptions& options) {
  traj.times.push_back(t);
  traj.fields.push_back(x);
  const double frac = boundary_mass_fraction(x);
  traj.max_boundary_fraction = std::max(traj.max_boundary_fraction, frac);
  if (frac > options.boundary_warning_fraction &&
      std::none_of(traj.warnings.begin(), traj.warnings.end(),
                   [](const std::string& s) { return s.rfind("boundary-mass", 0) == 0; })) {
    std::ostringstream msg;
    msg << "boundary-mass: fraction " << frac << " in the outer 10% of the domain at t=" << t;
    traj.warnings.push_back(msg.str());
  }
}

void check_blowup(const GridField& x, double threshold, std::size_t k, double dt) {
  const double sup = sup_norm(x);
  if (!(sup <= threshold)) {
    std::ostringstream msg;
    msg << "blow-up detected at step " << k << " (t=" << static_cast<double>(k) * dt
        << "): sup norm " << sup;
    throw std::runtime_error(msg.str());
  }
}

void finish(SpdeTrajectory& traj) {
  if (traj.initial_mass > 0.0 && traj.clipped_mass > 1e-4 * traj.initial_mass) {
    std::ostringstream msg;
    msg << "clipped-mass: " << traj.clipped_mass << " exceeds 1e-4 of the initial mass";
    traj.warnings.push_back(msg.str());
  }
}

}  // namespace

GridField step_diffusion(const GridField& x, const NonlinearitySpec& spec, double dt,
                         int picard_iterations, double picard_tolerance) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_diffusion: dt must be positive");
  GridField y = implicit_diffusion_solve(x, phi_squared_field(x, spec), 0.5 * dt);
  for (int it = 0; it < picard_iterations; ++it) {
    GridField next = implicit_diffusion_solve(x, phi_squared_field(y, spec), 0.5 * dt);
    double change = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j) change = std::max(change, std::abs(next[j] - y[j]));
    y = std::move(next);
    if (change <= picard_tolerance) break;
  }
  return y;
}

GridField apply_noise(const GridField& x, const ModeSet& modes, const NoiseRealization& w,
                      std::size_t k) {
  const GridField inc = noise_increment_field(modes, w, k);
  GridField out(x.grid());
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = x[j] * (1.0 + inc[j]);
  return out;
}

NoiseStep step_noise(const GridField& x, const ModeSet& modes, const NoiseRealization& w,
                     std::size_t k, bool clip) {
  NoiseStep step{apply_noise(x, modes, w, k), 0.0};
  if (clip) {
    double clipped = 0.0;
    for (double& v : step.field.values()) {
      if (v < 0.0) {
        clipped -= v;
        v = 0.0;
      }
    }
    step.clipped_mass = clipped * x.grid().spacing();
  }
  return step;
}

SpdeTrajectory solve_spde(const GridField& x0, const NonlinearitySpec& spec, const ModeSet& modes,
                          const NoiseRealization& w, double dt, std::size_t steps,
                          const SpdeOptions& options) {
  check_noise(modes, w, dt, steps);
  if (!(modes.grid() == x0.grid())) throw std::invalid_argument("solve_spde: modes on a different grid");
  if (std::any_of(x0.values().begin(), x0.values().end(), [](double v) { return v < 0.0; })) {
    throw std::invalid_argument("solve_spde: initial condition must be nonnegative");
  }
  const double mass0 = integral(x0);
  if (std::abs(mass0 - 1.0) > 1e-8) throw std::invalid_argument("solve_spde: initial condition must have unit mass");
  if (options.stride == 0) throw std::invalid_argument("solve_spde: stride must be positive");

  SpdeTrajectory traj(x0.grid());
  traj.noise_seed = w.seed();
  traj.dt = dt;
  traj.stride = options.stride;
  traj.initial_mass = mass0;
  record(traj, 0.0, x0, options);

  const bool periodic = x0.grid().boundary() == Boundary::periodic;
  GridField x = x0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double before = integral(x);
    GridField diffused = step_diffusion(x, spec, dt, options.picard_iterations, options.picard_tolerance);
    if (periodic && before != 0.0) {
      traj.max_diffusion_mass_defect =
          std::max(traj.max_diffusion_mass_defect, std::abs(integral(diffused) - before) / std::abs(before));
    }
    NoiseStep noisy = step_noise(diffused, modes, w, k, options.clip_negative);
    traj.clipped_mass += noisy.clipped_mass;
    x = std::move(noisy.field);
    check_blowup(x, options.blowup_threshold, k + 1, dt);
    if ((k + 1) % options.stride == 0 || k + 1 == steps) {
      record(traj, static_cast<double>(k + 1) * dt, x, options);
    }
  }
  finish(traj);
  return traj;
}

SpdeTrajectory solve_fokker_planck(const CoefficientField& a, const GridField& z0,
                                   const ModeSet& modes, const NoiseRealization& w, double dt,
                                   std::size_t steps, const SpdeOptions& options) {
  check_noise(modes, w, dt, steps);
  if (!(modes.grid() == z0.grid())) {
    throw std::invalid_argument("solve_fokker_planck: modes on a different grid");
  }
  if (options.stride == 0) throw std::invalid_argument("solve_fokker_planck: stride must be positive");

  SpdeTrajectory traj(z0.grid());
  traj.noise_seed = w.seed();
  traj.dt = dt;
  traj.stride = options.stride;
  traj.initial_mass = integral(z0);
  record(traj, 0.0, z0, options);

  GridField z = z0;
  for (std::size_t k = 0; k < steps; ++k) {
    const GridField coeff = a(k);
    if (!(coeff.grid() == z0.grid())) throw std::invalid_argument("solve_fokker_planck: coefficient grid mismatch");
    GridField diffused = implicit_diffusion_solve(z, coeff, dt);
    NoiseStep noisy = step_noise(diffused, modes, w, k, options.clip_negative);
    traj.clipped_mass += noisy.clipped_mass;
    z = std::move(noisy.field);
    check_blowup(z, options.blowup_threshold, k + 1, dt);
    if ((k + 1) % options.stride == 0 || k + 1 == steps) {
      record(traj, static_cast<double>(k + 1) * dt, z, options);
    }
  }
  finish(traj);
  return traj;
}

std::vector<std::vector<double>> weak_form_residual(const SpdeTrajectory& traj,
                                                    const NonlinearitySpec& spec,
                                                    const ModeSet& modes,
                                                    const NoiseRealization& w,
                                                    const std::vector<GridField>& tests) {
  if (traj.stride != 1 || traj.fields.size() < 2) {
    throw std::invalid_argument("weak_form_residual: needs a stride-1 trajectory");
  }
  const std::size_t steps = traj.fields.size() - 1;
  if (w.steps() < steps || std::abs(w.dt() - traj.dt) > 1e-12 * traj.dt) {
    throw std::invalid_argument("weak_form_residual: noise does not match the trajectory");
  }
  const Grid& grid = traj.grid;
  for (const GridField& phi : tests) {
    if (!(phi.grid() == grid)) throw std::invalid_argument("weak_form_residual: test function grid mismatch");
    const std::size_t n = grid.size();
    for (std::size_t j : {std::size_t{0}, std::size_t{1}, n - 2, n - 1}) {
      if (phi[j] != 0.0) {
        throw std::invalid_argument("weak_form_residual: test function support touches the boundary");
      }
    }
  }

  std::vector<std::vector<double>> out(tests.size(), std::vector<double>(steps + 1, 0.0));
  for (std::size_t p = 0; p < tests.size(); ++p) {
    const GridField& phi = tests[p];
    const GridField phi_xx = laplacian(phi);
    const double norm = sobolev_norm(phi, 0);
    const double start = inner(traj.fields[0], phi);
    double drift = 0.0, noise = 0.0;
    for (std::size_t k = 0; k <= steps; ++k) {
      const double r = inner(traj.fields[k], phi) - start - drift - noise;
      out[p][k] = norm > 0.0 ? std::abs(r) / norm : std::abs(r);
      if (k == steps) break;
      const GridField& x = traj.fields[k];
      GridField psi_x(grid);
      for (std::size_t j = 0; j < x.size(); ++j) psi_x[j] = spec.psi(x[j]);
      drift += 0.5 * traj.dt * inner(psi_x, phi_xx);
      noise += inner(hadamard(x, noise_increment_field(modes, w, k)), phi);
    }
  }
  return out;
}

void SpdeTrajectory::save_csv(const std::filesystem::path& file) const {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out.precision(17);
  out << "t,xi,value\n";
  for (std::size_t k = 0; k < fields.size(); ++k) {
    for (std::size_t j = 0; j < grid.size(); ++j) {
      out << times[k] << ',' << grid.node(j) << ',' << fields[k][j] << '\n';
    }
  }
}

namespace {
constexpr char kTrajMagic[8] = {'S', 'P', 'M', 'T', 'R', 'A', 'J', '1'};
}

void SpdeTrajectory::save_binary(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  const std::uint64_t header[5] = {grid.size(), grid.boundary() == Boundary::periodic ? 0u : 1u,
                                   times.size(), noise_seed, stride};
  const double reals[2] = {grid.half_width(), dt};
  out.write(kTrajMagic, sizeof kTrajMagic);
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  out.write(reinterpret_cast<const char*>(reals), sizeof reals);
  out.write(reinterpret_cast<const char*>(times.data()), static_cast<std::streamsize>(times.size() * sizeof(double)));
  for (const GridField& f : fields) {
    out.write(reinterpret_cast<const char*>(f.data().data()),
              static_cast<std::streamsize>(f.size() * sizeof(double)));
  }
}

SpdeTrajectory SpdeTrajectory::load_binary(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  char magic[8];
  std::uint64_t header[5];
  double reals[2];
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(header), sizeof header);
  in.read(reinterpret_cast<char*>(reals), sizeof reals);
  if (!in || std::memcmp(magic, kTrajMagic, sizeof magic) != 0) {
    throw std::runtime_error(file.string() + ": not a trajectory snapshot");
  }
  const Grid grid(reals[0], header[0], header[1] == 0 ? Boundary::periodic : Boundary::neumann);
  SpdeTrajectory traj(grid);
  traj.noise_seed = header[3];
  traj.stride = header[4];
  traj.dt = reals[1];
  traj.times.resize(header[2]);
  in.read(reinterpret_cast<char*>(traj.times.data()), static_cast<std::streamsize>(traj.times.size() * sizeof(double)));
  for (std::size_t k = 0; k < header[2]; ++k) {
    std::vector<double> values(grid.size());
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
    traj.fields.emplace_back(grid, std::move(values));
  }
  if (!in) throw std::runtime_error(file.string() + ": truncated trajectory snapshot");
  return traj;
}

}  // namespace spm
