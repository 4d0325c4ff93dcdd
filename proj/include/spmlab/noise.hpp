#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spmlab/grid.hpp"

namespace spm {

// Catalog description of one spatial noise mode.
struct ModeDescriptor {
  std::string name;  // constant | gaussian_bump | tanh | sine
  double amplitude = 1.0;
  double center = 0.0;
  double width = 1.0;       // bump standard deviation or tanh length scale
  double wavenumber = 1.0;  // sine
  double phase = 0.0;       // sine

  double operator()(double x) const;
};

bool is_catalog_mode(const std::string& name);

// The spatial part of mu(t, xi) = sum_i e^i(xi) W^i_t + e^0(xi) t.
class ModeSet {
 public:
  ModeSet(const Grid& grid, std::vector<GridField> modes, std::optional<GridField> drift = {});
  static ModeSet from_catalog(const Grid& grid, const std::vector<ModeDescriptor>& modes,
                              const std::optional<ModeDescriptor>& drift = {});
  static ModeSet none(const Grid& grid) { return ModeSet(grid, {}); }

  const Grid& grid() const { return grid_; }
  std::size_t count() const { return modes_.size(); }
  const GridField& mode(std::size_t i) const { return modes_.at(i); }
  const GridField& drift() const { return drift_; }
  bool has_drift() const { return has_drift_; }

  double sup(std::size_t i) const { return sup_.at(i); }
  double derivative_sup(std::size_t i) const { return dsup_.at(i); }
  // C(e^i) from the multiplier bound.
  double multiplier_bound(std::size_t i) const { return bound_.at(i); }
  double drift_sup() const { return drift_sup_; }
  double drift_multiplier_bound() const { return drift_bound_; }
  double sum_sup_squared() const;
  double sum_multiplier_squared() const;

  // Re-evaluates catalog modes on another grid. Only valid for catalog sets.
  ModeSet on_grid(const Grid& grid) const;

 private:
  Grid grid_;
  std::vector<GridField> modes_;
  GridField drift_;
  bool has_drift_ = false;
  std::vector<double> sup_, dsup_, bound_;
  double drift_sup_ = 0.0, drift_bound_ = 0.0;
  std::vector<ModeDescriptor> catalog_;
  std::optional<ModeDescriptor> catalog_drift_;
};

// Brownian increments dW^i_k for i < channels, k < steps. Channel i at
// step k is drawn from the counter (seed, k, i), so tables are reproducible
// and independent of evaluation order.
class NoiseRealization {
 public:
  NoiseRealization(std::uint64_t seed, std::size_t channels, double dt, std::size_t steps,
                   std::vector<double> increments);

  std::uint64_t seed() const { return seed_; }
  std::size_t channels() const { return channels_; }
  double dt() const { return dt_; }
  std::size_t steps() const { return steps_; }
  double increment(std::size_t channel, std::size_t k) const {
    return increments_[k * channels_ + channel];
  }
  const std::vector<double>& table() const { return increments_; }

  // W^i at t_k, k = 0..steps.
  std::vector<double> path(std::size_t channel) const;
  // Sums consecutive blocks of `factor` increments: the same Brownian path
  // observed on the coarser time grid.
  NoiseRealization coarsen(std::size_t factor) const;

  void save_csv(const std::filesystem::path& file) const;
  void save_binary(const std::filesystem::path& file) const;
  static NoiseRealization load_csv(const std::filesystem::path& file);
  static NoiseRealization load_binary(const std::filesystem::path& file);

  bool operator==(const NoiseRealization&) const = default;

 private:
  std::uint64_t seed_;
  std::size_t channels_;
  double dt_;
  std::size_t steps_;
  std::vector<double> increments_;
};

NoiseRealization sample_noise(std::uint64_t seed, std::size_t channels, double dt,
                              std::size_t steps);

// sum_i e^i dW^i_k + e^0 dt
GridField noise_increment_field(const ModeSet& modes, const NoiseRealization& w, std::size_t k);

struct DoleansWeight {
  double log_value = 0.0;
  std::vector<double> ledger;
  bool overflowed = false;

  double value() const;
};

// z * exp(dm - dqv / 2)
DoleansWeight doleans_step(DoleansWeight z, double dm, double dqv);

struct LineIncrement {
  double dm = 0.0;
  double dqv = 0.0;
};

// Per-step increments of int mu(ds, Y_s) along a path sampled at t_0..t_{K-1};
// modes are evaluated off-grid by linear interpolation.
std::vector<LineIncrement> path_line_integral(const std::vector<double>& y_path,
                                              const ModeSet& modes, const NoiseRealization& w);

}  // namespace spm
