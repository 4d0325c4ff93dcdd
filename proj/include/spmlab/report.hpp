#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace spm {

// One pass/fail flag. Every flag carries the measured value, the threshold
// it was held to, and the sample size behind it.
struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  std::string relation = "<=";  // value <relation> threshold
  std::size_t sample_size = 1;
  bool pass = false;
};

struct Metric {
  std::string name;
  double value = 0.0;
  std::optional<double> time;
};

struct SweepRow {
  std::string table;
  std::map<std::string, double> columns;
};

class DiagnosticsReport {
 public:
  DiagnosticsReport() = default;
  DiagnosticsReport(std::string scenario, std::string fingerprint)
      : scenario_(std::move(scenario)), fingerprint_(std::move(fingerprint)) {}

  const std::string& scenario() const { return scenario_; }
  const std::string& fingerprint() const { return fingerprint_; }

  void add_seed(const std::string& role, std::uint64_t seed) { seeds_[role] = seed; }
  void add_metric(std::string name, double value, std::optional<double> time = {});
  // Records and returns the outcome.
  bool check(std::string name, double value, std::string relation, double threshold,
             std::size_t sample_size = 1);
  void add_row(SweepRow row) { rows_.push_back(std::move(row)); }
  void warn(std::string message);
  void merge(const DiagnosticsReport& other, const std::string& prefix);

  const std::vector<Check>& checks() const { return checks_; }
  const std::vector<Metric>& metrics() const { return metrics_; }
  const std::vector<SweepRow>& rows() const { return rows_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  const std::map<std::string, std::uint64_t>& seeds() const { return seeds_; }
  std::optional<Check> find_check(const std::string& name) const;
  std::optional<double> find_metric(const std::string& name) const;

  bool passed() const;

  // One JSON record per line: a header, then metrics, checks, sweep rows,
  // warnings. Deterministic content (no timestamps or thread counts).
  std::string to_jsonl() const;
  std::string summary() const;
  void write(const std::filesystem::path& dir) const;

 private:
  std::string scenario_;
  std::string fingerprint_;
  std::map<std::string, std::uint64_t> seeds_;
  std::vector<Metric> metrics_;
  std::vector<Check> checks_;
  std::vector<SweepRow> rows_;
  std::vector<std::string> warnings_;
};

}  // namespace spm
