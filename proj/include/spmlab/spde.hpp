#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "spmlab/grid.hpp"
#include "spmlab/noise.hpp"
#include "spmlab/nonlinearity.hpp"

namespace spm {

// Recorded solution X(t_k, .) at a fixed stride. Also used for particle
// density trajectories so both feed the same diagnostics.
struct SpdeTrajectory {
  Grid grid;
  std::vector<double> times;
  std::vector<GridField> fields;
  std::uint64_t noise_seed = 0;
  double dt = 0.0;
  std::size_t stride = 1;
  double clipped_mass = 0.0;
  double initial_mass = 0.0;
  double max_diffusion_mass_defect = 0.0;  // relative, periodic grids only
  double max_boundary_fraction = 0.0;
  std::vector<std::string> warnings;

  explicit SpdeTrajectory(const Grid& g) : grid(g) {}
  const GridField& final_field() const { return fields.back(); }

  void save_csv(const std::filesystem::path& file) const;
  void save_binary(const std::filesystem::path& file) const;
  static SpdeTrajectory load_binary(const std::filesystem::path& file);
};

struct SpdeOptions {
  std::size_t stride = 1;
  // Extra fixed-point passes re-freezing Phi^2 at the trial state.
  int picard_iterations = 0;
  double picard_tolerance = 1e-8;
  bool clip_negative = true;
  double blowup_threshold = 1e12;
  double boundary_warning_fraction = 1e-8;
};

// Solves (I - c D^2 diag(a)) y = x.
GridField implicit_diffusion_solve(const GridField& x, const GridField& a, double c);

// One linearized-implicit step of d_t X = 1/2 d_xx psi(X) with a = Phi^2(X)
// frozen at the current state.
GridField step_diffusion(const GridField& x, const NonlinearitySpec& spec, double dt,
                         int picard_iterations = 0, double picard_tolerance = 1e-8);

// X (1 + sum_i e^i dW^i_k + e^0 dt), unclipped. Exactly linear in X.
GridField apply_noise(const GridField& x, const ModeSet& modes, const NoiseRealization& w,
                      std::size_t k);

struct NoiseStep {
  GridField field;
  double clipped_mass = 0.0;
};

// apply_noise followed by clipping negative values to 0.
NoiseStep step_noise(const GridField& x, const ModeSet& modes, const NoiseRealization& w,
                     std::size_t k, bool clip = true);

// Lie splitting, diffusion then noise, for K steps.
SpdeTrajectory solve_spde(const GridField& x0, const NonlinearitySpec& spec, const ModeSet& modes,
                          const NoiseRealization& w, double dt, std::size_t steps,
                          const SpdeOptions& options = {});

// Coefficient a(t_k, .) for the linear equation d_t z = d_xx (a z) + z mu(dt).
using CoefficientField = std::function<GridField(std::size_t step)>;

SpdeTrajectory solve_fokker_planck(const CoefficientField& a, const GridField& z0,
                                   const ModeSet& modes, const NoiseRealization& w, double dt,
                                   std::size_t steps, const SpdeOptions& options = {});

// |r(t, phi)| / ||phi||_L2 for each test function (outer index) and recorded
// time (inner index). Needs a stride-1 trajectory.
std::vector<std::vector<double>> weak_form_residual(const SpdeTrajectory& traj,
                                                    const NonlinearitySpec& spec,
                                                    const ModeSet& modes,
                                                    const NoiseRealization& w,
                                                    const std::vector<GridField>& tests);

}  // namespace spm
