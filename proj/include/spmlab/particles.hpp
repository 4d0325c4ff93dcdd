#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "spmlab/grid.hpp"
#include "spmlab/initial.hpp"
#include "spmlab/noise.hpp"
#include "spmlab/nonlinearity.hpp"
#include "spmlab/spde.hpp"

namespace spm {

// Particles Y_j with Doleans weights Z_j = exp(log_weight[j]). drift_log
// tracks int e^0(Y_s) ds so the martingale part Z exp(-drift_log) can be
// recovered.
struct ParticleEnsemble {
  std::vector<double> position;
  std::vector<double> log_weight;
  std::vector<double> drift_log;
  double time = 0.0;
  std::uint64_t seed = 0;  // lineage of the idiosyncratic drivers B
  std::uint64_t step = 0;  // next B counter

  std::size_t size() const { return position.size(); }
  double weight(std::size_t j) const;
  // (1/M) sum_j Z_j, summed in index order.
  double total_mass() const;
  double mean_position() const;

  void save_csv(const std::filesystem::path& file) const;
};

ParticleEnsemble init_ensemble(const InitialCondition& x0, std::size_t count, std::uint64_t seed);

struct WeightedDensity {
  GridField density;
  double total_mass = 0.0;
};

// (1/M) sum_j Z_j phi_eps(xi - Y_j): linear binning onto the nodes followed
// by a Gaussian kernel of standard deviation eps.
WeightedDensity weighted_density(const ParticleEnsemble& ens, double bandwidth, const Grid& grid);

// max(h, 1.06 * weighted std * M^{-1/5})
double silverman_bandwidth(const ParticleEnsemble& ens, const Grid& grid);

ParticleEnsemble step_particles(const ParticleEnsemble& ens, const GridField& density,
                                const NonlinearitySpec& spec, const ModeSet& modes,
                                const NoiseRealization& w, std::size_t k, double dt);

struct DsnldOptions {
  std::size_t stride = 1;
  std::optional<double> bandwidth;  // unset: Silverman rule every step
  bool picard = false;
  double escape_fraction = 0.9;
};

struct DsnldResult {
  SpdeTrajectory density;
  ParticleEnsemble final_ensemble;
  std::vector<double> mass;  // weighted mass at recorded times
  double density_l2_integral = 0.0;  // int int Xhat^2 dt dxi
};

DsnldResult run_dsnld(const InitialCondition& x0, const NonlinearitySpec& spec,
                      const ModeSet& modes, const NoiseRealization& w, double dt,
                      std::size_t steps, std::size_t count, std::uint64_t particle_seed,
                      const DsnldOptions& options = {});

// Same loop from an explicit starting ensemble.
DsnldResult run_dsnld(ParticleEnsemble ens, const NonlinearitySpec& spec, const ModeSet& modes,
                      const NoiseRealization& w, double dt, std::size_t steps,
                      const DsnldOptions& options = {});

GridField normalize_density(const WeightedDensity& d);

struct SecondMomentReport {
  std::vector<double> mean;
  std::vector<double> standard_error;
  std::vector<double> bound;  // exp(3 t sum_i ||e^i||_inf^2)
  bool pass = true;
};

// samples[r][k] is M_{t_k} for realization r, or already M_{t_k}^2 (for
// instance averaged over the particles of one realization) when
// samples_are_squared is set. Passes iff mean - 4 SE <= bound at every t_k.
SecondMomentReport second_moment_check(const std::vector<std::vector<double>>& samples,
                                       const std::vector<double>& times, double sum_sup_squared,
                                       bool samples_are_squared = false);

}  // namespace spm
