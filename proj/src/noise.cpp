#include "spmlab/noise.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "spmlab/parallel.hpp"
#include "spmlab/philox.hpp"

namespace spm {

double ModeDescriptor::operator()(double x) const {
  if (name == "constant") return amplitude;
  if (name == "gaussian_bump") {
    const double u = (x - center) / width;
    return amplitude * std::exp(-0.5 * u * u);
  }
  if (name == "tanh") return amplitude * std::tanh((x - center) / width);
  if (name == "sine") return amplitude * std::sin(wavenumber * x + phase);
  throw std::invalid_argument("unknown noise mode '" + name + "'");
}

bool is_catalog_mode(const std::string& name) {
  return name == "constant" || name == "gaussian_bump" || name == "tanh" || name == "sine";
}

ModeSet::ModeSet(const Grid& grid, std::vector<GridField> modes, std::optional<GridField> drift)
    : grid_(grid), modes_(std::move(modes)), drift_(grid), has_drift_(drift.has_value()) {
  if (drift) {
    if (!(drift->grid() == grid)) throw std::invalid_argument("ModeSet: drift on a different grid");
    drift_ = *drift;
    drift_sup_ = sup_norm(drift_);
    drift_bound_ = multiplier_norm_bound(drift_);
  }
  for (const GridField& e : modes_) {
    if (!(e.grid() == grid)) throw std::invalid_argument("ModeSet: mode on a different grid");
    if (!e.all_finite()) throw std::invalid_argument("ModeSet: mode values must be finite");
    sup_.push_back(sup_norm(e));
    dsup_.push_back(sup_norm(derivative(e)));
    bound_.push_back(multiplier_norm_bound(e));
  }
}

ModeSet ModeSet::from_catalog(const Grid& grid, const std::vector<ModeDescriptor>& modes,
                              const std::optional<ModeDescriptor>& drift) {
  std::vector<GridField> fields;
  fields.reserve(modes.size());
  for (const ModeDescriptor& d : modes) fields.push_back(GridField::sample(grid, d));
  std::optional<GridField> drift_field;
  if (drift) drift_field = GridField::sample(grid, *drift);
  ModeSet set(grid, std::move(fields), std::move(drift_field));
  set.catalog_ = modes;
  set.catalog_drift_ = drift;
  return set;
}

ModeSet ModeSet::on_grid(const Grid& grid) const {
  if (catalog_.size() != modes_.size() || (has_drift_ && !catalog_drift_)) {
    throw std::logic_error("ModeSet::on_grid needs a catalog-built mode set");
  }
  return from_catalog(grid, catalog_, catalog_drift_);
}

double ModeSet::sum_sup_squared() const {
  double s = 0.0;
  for (double v : sup_) s += v * v;
  return s;
}

double ModeSet::sum_multiplier_squared() const {
  double s = 0.0;
  for (double v : bound_) s += v * v;
  return s;
}

NoiseRealization::NoiseRealization(std::uint64_t seed, std::size_t channels, double dt,
                                   std::size_t steps, std::vector<double> increments)
    : seed_(seed), channels_(channels), dt_(dt), steps_(steps), increments_(std::move(increments)) {
  if (!(dt > 0.0)) throw std::invalid_argument("noise time step must be positive");
  if (steps == 0) throw std::invalid_argument("noise needs at least one step");
  if (increments_.size() != channels * steps) {
    throw std::invalid_argument("noise table size does not match channels * steps");
  }
}

std::vector<double> NoiseRealization::path(std::size_t channel) const {
  if (channel >= channels_) throw std::out_of_range("noise channel out of range");
  std::vector<double> w(steps_ + 1, 0.0);
  for (std::size_t k = 0; k < steps_; ++k) w[k + 1] = w[k] + increment(channel, k);
  return w;
}

NoiseRealization NoiseRealization::coarsen(std::size_t factor) const {
  if (factor == 0 || steps_ % factor != 0) {
    throw std::invalid_argument("coarsen: factor must divide the step count");
  }
  const std::size_t coarse_steps = steps_ / factor;
  std::vector<double> table(channels_ * coarse_steps, 0.0);
  for (std::size_t k = 0; k < coarse_steps; ++k) {
    for (std::size_t i = 0; i < channels_; ++i) {
      double s = 0.0;
      for (std::size_t q = 0; q < factor; ++q) s += increment(i, k * factor + q);
      table[k * channels_ + i] = s;
    }
  }
  return NoiseRealization(seed_, channels_, dt_ * static_cast<double>(factor), coarse_steps,
                          std::move(table));
}

void NoiseRealization::save_csv(const std::filesystem::path& file) const {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "# seed=" << seed_ << " channels=" << channels_ << " steps=" << steps_ << '\n';
  out.precision(17);
  out << "# dt=" << dt_ << '\n';
  out << "k,channel,dW\n";
  for (std::size_t k = 0; k < steps_; ++k) {
    for (std::size_t i = 0; i < channels_; ++i) out << k << ',' << i << ',' << increment(i, k) << '\n';
  }
}

NoiseRealization NoiseRealization::load_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  std::string line;
  std::uint64_t seed = 0;
  std::size_t channels = 0, steps = 0;
  double dt = 0.0;
  if (!std::getline(in, line) ||
      std::sscanf(line.c_str(), "# seed=%lu channels=%zu steps=%zu", &seed, &channels, &steps) != 3) {
    throw std::runtime_error(file.string() + ": malformed noise CSV header");
  }
  if (!std::getline(in, line) || std::sscanf(line.c_str(), "# dt=%lf", &dt) != 1) {
    throw std::runtime_error(file.string() + ": malformed noise CSV dt line");
  }
  std::getline(in, line);
  std::vector<double> table(channels * steps, 0.0);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t k = 0, i = 0;
    const char* p = line.c_str();
    char* end = nullptr;
    k = std::strtoull(p, &end, 10);
    i = std::strtoull(end + 1, &end, 10);
    const double v = std::strtod(end + 1, nullptr);
    if (k >= steps || i >= channels) throw std::runtime_error(file.string() + ": index out of range");
    table[k * channels + i] = v;
    ++rows;
  }
  if (rows != channels * steps) throw std::runtime_error(file.string() + ": missing noise rows");
  return NoiseRealization(seed, channels, dt, steps, std::move(table));
}

namespace {
constexpr char kNoiseMagic[8] = {'S', 'P', 'M', 'N', 'O', 'I', 'S', '1'};
}

void NoiseRealization::save_binary(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  const std::uint64_t header[3] = {seed_, channels_, steps_};
  out.write(kNoiseMagic, sizeof kNoiseMagic);
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  out.write(reinterpret_cast<const char*>(&dt_), sizeof dt_);
  out.write(reinterpret_cast<const char*>(increments_.data()),
            static_cast<std::streamsize>(increments_.size() * sizeof(double)));
}

NoiseRealization NoiseRealization::load_binary(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  char magic[8];
  std::uint64_t header[3];
  double dt = 0.0;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(header), sizeof header);
  in.read(reinterpret_cast<char*>(&dt), sizeof dt);
  if (!in || std::memcmp(magic, kNoiseMagic, sizeof magic) != 0) {
    throw std::runtime_error(file.string() + ": not a noise snapshot");
  }
  std::vector<double> table(header[1] * header[2]);
  in.read(reinterpret_cast<char*>(table.data()), static_cast<std::streamsize>(table.size() * sizeof(double)));
  if (!in) throw std::runtime_error(file.string() + ": truncated noise snapshot");
  return NoiseRealization(header[0], header[1], dt, header[2], std::move(table));
}

NoiseRealization sample_noise(std::uint64_t seed, std::size_t channels, double dt,
                              std::size_t steps) {
  if (!(dt > 0.0)) throw std::invalid_argument("sample_noise: dt must be positive");
  if (steps == 0) throw std::invalid_argument("sample_noise: need at least one step");
  std::vector<double> table(channels * steps);
  const double sdt = std::sqrt(dt);
  parallel_for(steps, [&](std::size_t k) {
    for (std::size_t i = 0; i < channels; ++i) {
      table[k * channels + i] =
          sdt * standard_normal(seed, k, static_cast<std::uint32_t>(i), StreamTag::noise);
    }
  });
  return NoiseRealization(seed, channels, dt, steps, std::move(table));
}

GridField noise_increment_field(const ModeSet& modes, const NoiseRealization& w, std::size_t k) {
  if (k >= w.steps()) throw std::out_of_range("noise_increment_field: step index out of range");
  if (modes.count() > w.channels()) {
    throw std::invalid_argument("noise_increment_field: more modes than noise channels");
  }
  GridField out(modes.grid());
  for (std::size_t i = 0; i < modes.count(); ++i) {
    const double dw = w.increment(i, k);
    const GridField& e = modes.mode(i);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += e[j] * dw;
  }
  if (modes.has_drift()) {
    const GridField& e0 = modes.drift();
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += e0[j] * w.dt();
  }
  return out;
}

double DoleansWeight::value() const { return std::exp(log_value); }

DoleansWeight doleans_step(DoleansWeight z, double dm, double dqv) {
  if (dqv < 0.0) throw std::invalid_argument("doleans_step: quadratic variation must be nonnegative");
  const double inc = dm - 0.5 * dqv;
  z.log_value += inc;
  z.ledger.push_back(inc);
  if (!std::isfinite(z.value())) z.overflowed = true;
  return z;
}

std::vector<LineIncrement> path_line_integral(const std::vector<double>& y_path,
                                              const ModeSet& modes, const NoiseRealization& w) {
  if (y_path.size() != w.steps()) {
    throw std::invalid_argument("path_line_integral: path length does not match step count");
  }
  if (modes.count() > w.channels()) {
    throw std::invalid_argument("path_line_integral: more modes than noise channels");
  }
  std::vector<LineIncrement> out(y_path.size());
  for (std::size_t k = 0; k < y_path.size(); ++k) {
    const double y = y_path[k];
    LineIncrement inc;
    for (std::size_t i = 0; i < modes.count(); ++i) {
      const double e = interpolate(modes.mode(i), y);
      inc.dm += e * w.increment(i, k);
      inc.dqv += e * e * w.dt();
    }
    if (modes.has_drift()) inc.dm += interpolate(modes.drift(), y) * w.dt();
    out[k] = inc;
  }
  return out;
}

}  // namespace spm
