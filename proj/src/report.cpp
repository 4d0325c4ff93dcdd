#include "spmlab/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace spm {

using nlohmann::json;

namespace {

bool holds(double value, const std::string& relation, double threshold) {
  if (std::isnan(value)) return false;
  if (relation == "<=") return value <= threshold;
  if (relation == "<") return value < threshold;
  if (relation == ">=") return value >= threshold;
  if (relation == ">") return value > threshold;
  if (relation == "==") return value == threshold;
  throw std::invalid_argument("unknown relation '" + relation + "'");
}

json number(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? json("nan") : json(v > 0 ? "inf" : "-inf");
}

}  // namespace

void DiagnosticsReport::add_metric(std::string name, double value, std::optional<double> time) {
  metrics_.push_back(Metric{std::move(name), value, time});
}

bool DiagnosticsReport::check(std::string name, double value, std::string relation,
                              double threshold, std::size_t sample_size) {
  const bool ok = holds(value, relation, threshold);
  checks_.push_back(Check{std::move(name), value, threshold, std::move(relation), sample_size, ok});
  return ok;
}

void DiagnosticsReport::warn(std::string message) {
  if (std::find(warnings_.begin(), warnings_.end(), message) == warnings_.end()) {
    warnings_.push_back(std::move(message));
  }
}

void DiagnosticsReport::merge(const DiagnosticsReport& other, const std::string& prefix) {
  for (const auto& [role, seed] : other.seeds_) seeds_[prefix + role] = seed;
  for (Metric m : other.metrics_) {
    m.name = prefix + m.name;
    metrics_.push_back(std::move(m));
  }
  for (Check c : other.checks_) {
    c.name = prefix + c.name;
    checks_.push_back(std::move(c));
  }
  for (SweepRow r : other.rows_) {
    r.table = prefix + r.table;
    rows_.push_back(std::move(r));
  }
  for (const std::string& w : other.warnings_) warn(w);
}

std::optional<Check> DiagnosticsReport::find_check(const std::string& name) const {
  for (const Check& c : checks_) {
    if (c.name == name) return c;
  }
  return std::nullopt;
}

std::optional<double> DiagnosticsReport::find_metric(const std::string& name) const {
  for (const Metric& m : metrics_) {
    if (m.name == name) return m.value;
  }
  return std::nullopt;
}

bool DiagnosticsReport::passed() const {
  return std::all_of(checks_.begin(), checks_.end(), [](const Check& c) { return c.pass; });
}

std::string DiagnosticsReport::to_jsonl() const {
  std::ostringstream out;
  json header = {{"record", "header"}, {"scenario", scenario_}, {"fingerprint", fingerprint_}};
  json seeds = json::object();
  for (const auto& [role, seed] : seeds_) seeds[role] = seed;
  header["seeds"] = seeds;
  out << header.dump() << '\n';
  for (const Metric& m : metrics_) {
    json r = {{"record", "metric"}, {"fingerprint", fingerprint_}, {"name", m.name}, {"value", number(m.value)}};
    if (m.time) r["t"] = *m.time;
    out << r.dump() << '\n';
  }
  for (const Check& c : checks_) {
    json r = {{"record", "check"},        {"fingerprint", fingerprint_}, {"name", c.name},
              {"value", number(c.value)}, {"relation", c.relation},     {"threshold", number(c.threshold)},
              {"sample_size", c.sample_size}, {"pass", c.pass}};
    out << r.dump() << '\n';
  }
  for (const SweepRow& row : rows_) {
    json cols = json::object();
    for (const auto& [k, v] : row.columns) cols[k] = number(v);
    out << json{{"record", "sweep"}, {"fingerprint", fingerprint_}, {"table", row.table}, {"columns", cols}}.dump()
        << '\n';
  }
  for (const std::string& w : warnings_) {
    out << json{{"record", "warning"}, {"fingerprint", fingerprint_}, {"message", w}}.dump() << '\n';
  }
  return out.str();
}

std::string DiagnosticsReport::summary() const {
  std::ostringstream out;
  out << "scenario " << scenario_ << "  fingerprint " << fingerprint_ << '\n';
  for (const auto& [role, seed] : seeds_) out << "  seed " << role << " = " << seed << '\n';
  out << '\n';
  std::size_t width = 10;
  for (const Check& c : checks_) width = std::max(width, c.name.size());
  for (const Check& c : checks_) {
    out << (c.pass ? "  PASS  " : "  FAIL  ") << c.name << std::string(width - c.name.size() + 2, ' ')
        << c.value << ' ' << c.relation << ' ' << c.threshold << "  (n=" << c.sample_size << ")\n";
  }
  if (!rows_.empty()) {
    out << '\n';
    std::string current;
    for (const SweepRow& row : rows_) {
      if (row.table != current) {
        current = row.table;
        out << "  table " << current << '\n';
      }
      out << "   ";
      for (const auto& [k, v] : row.columns) out << ' ' << k << '=' << v;
      out << '\n';
    }
  }
  for (const std::string& w : warnings_) out << "  WARNING " << w << '\n';
  out << '\n' << (passed() ? "overall: PASS" : "overall: FAIL") << '\n';
  return out.str();
}

void DiagnosticsReport::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::ofstream jsonl(dir / "report.jsonl");
  std::ofstream summary_file(dir / "summary.txt");
  if (!jsonl || !summary_file) throw std::runtime_error("cannot write report into " + dir.string());
  jsonl << to_jsonl();
  summary_file << summary();
}

}  // namespace spm
