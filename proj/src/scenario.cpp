#include "spmlab/scenario.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace spm {

using nlohmann::json;

namespace {

const std::map<std::string, double> kCommonTolerances = {
    {"clipped_fraction", 1e-4},
    {"compare_h_minus1", 0.05},
};

class SchemaError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be rejected.
class Fields {
 public:
  Fields(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) fail("", "expected an object");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw SchemaError("field '" + where(key) + "': " + what);
  }
  std::string where(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key) && !obj_.at(key).is_null();
  }
  const json& raw(const std::string& key) {
    seen_.insert(key);
    return obj_.at(key);
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_number()) fail(key, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(key, "must be finite");
    return d;
  }
  std::uint64_t unsigned_int(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_number_unsigned()) fail(key, "expected a nonnegative integer");
    return v.get<std::uint64_t>();
  }
  int integer(const std::string& key, int fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<int>();
  }
  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_boolean()) fail(key, "expected true or false");
    return v.get<bool>();
  }
  std::string text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }
  template <class T, class Read>
  std::vector<T> list(const std::string& key, Read read) {
    std::vector<T> out;
    if (!has(key)) return out;
    const json& v = obj_.at(key);
    if (!v.is_array()) fail(key, "expected an array");
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(read(v[i], where(key) + "[" + std::to_string(i) + "]"));
    return out;
  }

  void finish() const {
    for (const auto& item : obj_.items()) {
      if (!seen_.count(item.key())) throw SchemaError("field '" + where(item.key()) + "': unknown key");
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

double element_number(const json& v, const std::string& where) {
  if (!v.is_number() || !std::isfinite(v.get<double>())) throw SchemaError("field '" + where + "': expected a number");
  return v.get<double>();
}

std::size_t element_size(const json& v, const std::string& where) {
  if (!v.is_number_unsigned()) throw SchemaError("field '" + where + "': expected a nonnegative integer");
  return v.get<std::size_t>();
}

ModeDescriptor read_mode(const json& v, const std::string& path) {
  Fields f(v, path);
  ModeDescriptor m;
  m.name = f.text("name", "");
  if (!is_catalog_mode(m.name)) f.fail("name", "unknown mode '" + m.name + "'");
  m.amplitude = f.number("amplitude", m.amplitude);
  m.center = f.number("center", m.center);
  m.width = f.number("width", m.width);
  m.wavenumber = f.number("wavenumber", m.wavenumber);
  m.phase = f.number("phase", m.phase);
  if (!(m.width > 0.0)) f.fail("width", "must be positive");
  f.finish();
  return m;
}

json mode_json(const ModeDescriptor& m) {
  return {{"name", m.name},     {"amplitude", m.amplitude},   {"center", m.center},
          {"width", m.width},   {"wavenumber", m.wavenumber}, {"phase", m.phase}};
}

void check_positive(Fields& f, const std::string& key, double v) {
  if (!(v > 0.0)) f.fail(key, "must be positive");
}

// Byte offset -> "line L, column C".
std::string position(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

Scenario from_json(const json& root) {
  Fields top(root, "");
  Scenario s;
  s.schema_version = top.integer("schema_version", -1);
  if (s.schema_version != kSchemaVersion) {
    top.fail("schema_version", "unsupported version " + std::to_string(s.schema_version) + " (expected " +
                                   std::to_string(kSchemaVersion) + ")");
  }
  s.name = top.text("name", "");
  if (s.name.empty()) top.fail("name", "required");
  if (s.name.find_first_of("/\\ ") != std::string::npos) top.fail("name", "must not contain spaces or slashes");
  s.description = top.text("description", "");
  s.exercises = top.text("exercises", "");
  s.suite = top.text("suite", s.suite);
  if (!suite_catalog().count(s.suite)) top.fail("suite", "unknown suite '" + s.suite + "'");

  if (top.has("grid")) {
    Fields g(top.raw("grid"), "grid");
    s.half_width = g.number("half_width", s.half_width);
    s.points = g.unsigned_int("points", s.points);
    const std::string bc = g.text("boundary", to_string(s.boundary));
    if (bc != "periodic" && bc != "neumann") g.fail("boundary", "unknown boundary '" + bc + "'");
    s.boundary = boundary_from_string(bc);
    check_positive(g, "half_width", s.half_width);
    if (s.points < 8) g.fail("points", "need at least 8 points");
    g.finish();
  }

  if (top.has("nonlinearity")) {
    Fields n(top.raw("nonlinearity"), "nonlinearity");
    NonlinearityConfig& c = s.nonlinearity;
    c.name = n.text("name", c.name);
    c.slope = n.number("slope", c.slope);
    c.m = n.number("m", c.m);
    c.clip = n.number("clip", c.clip);
    c.u_c = n.number("u_c", c.u_c);
    c.knee = n.number("knee", c.knee);
    c.ratio = n.number("ratio", c.ratio);
    if (c.name != "linear" && c.name != "porous_medium" && c.name != "threshold" && c.name != "clipped_linear") {
      n.fail("name", "unknown nonlinearity '" + c.name + "'");
    }
    check_positive(n, "slope", c.slope);
    if (!(c.m >= 1.0)) n.fail("m", "must be at least 1");
    check_positive(n, "clip", c.clip);
    if (!(c.u_c >= 0.0)) n.fail("u_c", "must be nonnegative");
    check_positive(n, "knee", c.knee);
    if (!(c.ratio > 0.0 && c.ratio <= 1.0)) n.fail("ratio", "must lie in (0, 1]");
    n.finish();
  }
  s.kappa = top.number("kappa", s.kappa);
  if (s.kappa < 0.0) top.fail("kappa", "must be nonnegative");

  s.modes = top.list<ModeDescriptor>("modes", read_mode);
  if (top.has("drift")) s.drift = read_mode(top.raw("drift"), "drift");

  if (top.has("initial")) {
    Fields i(top.raw("initial"), "initial");
    InitialCondition& x0 = s.initial;
    x0.shape = i.text("shape", x0.shape);
    x0.mean = i.number("mean", x0.mean);
    x0.variance = i.number("variance", x0.variance);
    x0.lower = i.number("lower", x0.lower);
    x0.upper = i.number("upper", x0.upper);
    x0.at = i.number("at", x0.at);
    x0.m = i.number("m", x0.m);
    x0.time = i.number("time", x0.time);
    if (x0.shape != "gaussian" && x0.shape != "uniform" && x0.shape != "point" && x0.shape != "barenblatt") {
      i.fail("shape", "unknown initial shape '" + x0.shape + "'");
    }
    check_positive(i, "variance", x0.variance);
    if (!(x0.upper > x0.lower)) i.fail("upper", "must exceed lower");
    if (!(x0.m > 1.0)) i.fail("m", "Barenblatt exponent must exceed 1");
    check_positive(i, "time", x0.time);
    i.finish();
  }

  if (top.has("time")) {
    Fields t(top.raw("time"), "time");
    s.time.dt = t.number("dt", s.time.dt);
    s.time.horizon = t.number("horizon", s.time.horizon);
    s.time.stride = t.unsigned_int("stride", s.time.stride);
    check_positive(t, "dt", s.time.dt);
    check_positive(t, "horizon", s.time.horizon);
    if (s.time.stride == 0) t.fail("stride", "must be positive");
    const double ratio = s.time.horizon / s.time.dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-6 * ratio) t.fail("horizon", "must be a whole number of steps");
    t.finish();
  }

  if (top.has("particles")) {
    Fields p(top.raw("particles"), "particles");
    s.particles.count = p.unsigned_int("count", s.particles.count);
    if (p.has("bandwidth")) {
      const json& b = p.raw("bandwidth");
      if (b.is_string() && b.get<std::string>() == "silverman") {
        s.particles.bandwidth.reset();
      } else {
        const double eps = p.number("bandwidth", 0.0);
        check_positive(p, "bandwidth", eps);
        s.particles.bandwidth = eps;
      }
    }
    s.particles.seed = p.unsigned_int("seed", s.particles.seed);
    s.particles.picard = p.boolean("picard", s.particles.picard);
    if (s.particles.count < 100) p.fail("count", "need at least 100 particles");
    p.finish();
  }

  s.noise_seed = top.unsigned_int("noise_seed", s.noise_seed);
  s.realizations = top.unsigned_int("realizations", s.realizations);
  if (s.realizations == 0) top.fail("realizations", "must be positive");

  if (top.has("coefficient")) {
    Fields c(top.raw("coefficient"), "coefficient");
    CoefficientConfig a;
    a.shape = c.text("shape", a.shape);
    a.base = c.number("base", a.base);
    a.amplitude = c.number("amplitude", a.amplitude);
    a.center = c.number("center", a.center);
    a.wavenumber = c.number("wavenumber", a.wavenumber);
    if (a.shape != "step" && a.shape != "sine") c.fail("shape", "unknown coefficient shape '" + a.shape + "'");
    c.finish();
    s.coefficient = a;
  }

  if (top.has("sweep")) {
    Fields w(top.raw("sweep"), "sweep");
    SweepConfig& sw = s.sweep;
    sw.kappas = w.list<double>("kappas", element_number);
    sw.resolutions = w.list<std::size_t>("resolutions", element_size);
    sw.particle_counts = w.list<std::size_t>("particle_counts", element_size);
    sw.mollifier_levels = w.list<int>("mollifier_levels", [](const json& v, const std::string& where) {
      if (!v.is_number_integer() || v.get<int>() <= 0) {
        throw SchemaError("field '" + where + "': expected a positive integer");
      }
      return v.get<int>();
    });
    sw.dts = w.list<double>("dts", element_number);
    sw.samples = w.unsigned_int("samples", sw.samples);
    sw.particle_seeds = w.unsigned_int("particle_seeds", sw.particle_seeds);
    sw.perturbation = w.number("perturbation", sw.perturbation);
    sw.reference_points = w.unsigned_int("reference_points", sw.reference_points);
    sw.random_fields = w.unsigned_int("random_fields", sw.random_fields);
    for (std::size_t i = 1; i < sw.kappas.size(); ++i) {
      if (!(sw.kappas[i] < sw.kappas[i - 1])) w.fail("kappas", "must be strictly decreasing");
    }
    for (double k : sw.kappas) {
      if (!(k > 0.0)) w.fail("kappas", "values must be positive");
    }
    for (double d : sw.dts) {
      if (!(d > 0.0)) w.fail("dts", "values must be positive");
    }
    for (std::size_t n : sw.resolutions) {
      if (n < 8) w.fail("resolutions", "need at least 8 points");
    }
    for (std::size_t m : sw.particle_counts) {
      if (m < 100) w.fail("particle_counts", "need at least 100 particles");
    }
    if (sw.particle_seeds == 0) w.fail("particle_seeds", "must be positive");
    w.finish();
  }

  if (top.has("tolerances")) {
    const json& t = top.raw("tolerances");
    if (!t.is_object()) top.fail("tolerances", "expected an object");
    const auto& known = suite_catalog().at(s.suite);
    for (const auto& item : t.items()) {
      const std::string where = "tolerances." + item.key();
      if (!known.count(item.key()) && !kCommonTolerances.count(item.key())) {
        throw SchemaError("field '" + where + "': unknown tolerance for suite '" + s.suite + "'");
      }
      s.tolerances[item.key()] = element_number(item.value(), where);
    }
  }
  top.finish();
  return s;
}

json to_json(const Scenario& s) {
  json modes = json::array();
  for (const auto& m : s.modes) modes.push_back(mode_json(m));
  json tol = json::object();
  for (const auto& [k, v] : kCommonTolerances) tol[k] = v;
  for (const auto& [k, v] : suite_catalog().at(s.suite)) tol[k] = v;
  for (const auto& [k, v] : s.tolerances) tol[k] = v;
  const NonlinearityConfig& n = s.nonlinearity;
  const InitialCondition& x0 = s.initial;
  const SweepConfig& sw = s.sweep;
  json j = {
      {"schema_version", s.schema_version},
      {"name", s.name},
      {"description", s.description},
      {"exercises", s.exercises},
      {"suite", s.suite},
      {"grid", {{"half_width", s.half_width}, {"points", s.points}, {"boundary", to_string(s.boundary)}}},
      {"nonlinearity",
       {{"name", n.name}, {"slope", n.slope}, {"m", n.m}, {"clip", n.clip}, {"u_c", n.u_c}, {"knee", n.knee},
        {"ratio", n.ratio}}},
      {"kappa", s.kappa},
      {"modes", modes},
      {"drift", s.drift ? mode_json(*s.drift) : json(nullptr)},
      {"initial",
       {{"shape", x0.shape}, {"mean", x0.mean}, {"variance", x0.variance}, {"lower", x0.lower},
        {"upper", x0.upper}, {"at", x0.at}, {"m", x0.m}, {"time", x0.time}}},
      {"time", {{"dt", s.time.dt}, {"horizon", s.time.horizon}, {"stride", s.time.stride}}},
      {"particles",
       {{"count", s.particles.count},
        {"bandwidth", s.particles.bandwidth ? json(*s.particles.bandwidth) : json("silverman")},
        {"seed", s.particles.seed},
        {"picard", s.particles.picard}}},
      {"noise_seed", s.noise_seed},
      {"realizations", s.realizations},
      {"coefficient", s.coefficient ? json{{"shape", s.coefficient->shape},
                                           {"base", s.coefficient->base},
                                           {"amplitude", s.coefficient->amplitude},
                                           {"center", s.coefficient->center},
                                           {"wavenumber", s.coefficient->wavenumber}}
                                    : json(nullptr)},
      {"sweep",
       {{"kappas", sw.kappas}, {"resolutions", sw.resolutions}, {"particle_counts", sw.particle_counts},
        {"mollifier_levels", sw.mollifier_levels}, {"dts", sw.dts}, {"samples", sw.samples},
        {"particle_seeds", sw.particle_seeds}, {"perturbation", sw.perturbation},
        {"reference_points", sw.reference_points}, {"random_fields", sw.random_fields}}},
      {"tolerances", tol},
  };
  return j;
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
  return out.str();
}

}  // namespace

double CoefficientConfig::operator()(double x) const {
  if (shape == "step") {
    const double s = x > center ? 1.0 : (x < center ? -1.0 : 0.0);
    return base + amplitude * s;
  }
  return base + amplitude * std::sin(wavenumber * x);
}

std::size_t TimeConfig::steps() const { return static_cast<std::size_t>(std::llround(horizon / dt)); }

NonlinearitySpec Scenario::spec() const {
  const NonlinearityConfig& n = nonlinearity;
  NonlinearitySpec base = n.name == "porous_medium" ? porous_medium(n.m, n.clip)
                          : n.name == "threshold"   ? threshold_nonlinearity(n.u_c, n.slope)
                          : n.name == "clipped_linear" ? clipped_linear(n.knee, n.ratio)
                                                       : linear_nonlinearity(n.slope);
  return regularize(base, kappa);
}

ModeSet Scenario::mode_set(const Grid& g) const { return ModeSet::from_catalog(g, modes, drift); }

double Scenario::tolerance(const std::string& key) const {
  if (auto it = tolerances.find(key); it != tolerances.end()) return it->second;
  const auto& defaults = suite_catalog().at(suite);
  if (auto it = defaults.find(key); it != defaults.end()) return it->second;
  if (auto it = kCommonTolerances.find(key); it != kCommonTolerances.end()) return it->second;
  throw std::invalid_argument("no tolerance '" + key + "' for suite '" + suite + "'");
}

std::string Scenario::canonical() const { return to_json(*this).dump(); }

std::string Scenario::fingerprint() const { return sha256_hex(canonical()).substr(0, 16); }

const std::map<std::string, std::map<std::string, double>>& suite_catalog() {
  static const std::map<std::string, std::map<std::string, double>> catalog = {
      {"none", {}},
      {"heat_oracle", {{"variance_rel", 0.01}, {"particle_l1", 0.05}, {"mass_defect", 1e-10}}},
      {"barenblatt", {{"grid_l1", 5e-3}, {"particle_l1", 0.08}}},
      {"factorization", {{"grid_l1", 0.02}, {"particle_l1", 0.08}, {"weight_spread", 1e-12}}},
      {"doleans_moments", {{"sigmas", 4.0}}},
      {"mass_expectation", {{"sigmas", 3.0}}},
      {"multiplier", {{"violations", 0.0}}},
      {"fp_uniqueness", {{"order", 1.0}, {"identical_g", 0.0}, {"sigmas", 4.0}}},
      {"kappa_sweep", {{"slope_min", 0.6}, {"slope_max", 1.2}, {"sigmas", 4.0}}},
      {"cross_validation", {{"h_minus1", 0.05}, {"sigmas", 4.0}}},
      {"mollified_sde", {{"ks_final", 0.02}}},
      {"zakai_filter", {{"mean_gap", 0.1}}},
  };
  return catalog;
}

Scenario parse_scenario(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    std::string msg = e.what();
    if (auto p = msg.find("]: "); p != std::string::npos) msg = msg.substr(p + 3);
    throw std::invalid_argument(origin + ": parse error at " + position(text, e.byte > 0 ? e.byte - 1 : 0) + ": " + msg);
  }
  try {
    return from_json(root);
  } catch (const SchemaError& e) {
    throw std::invalid_argument(origin + ": " + e.what());
  }
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read scenario " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str(), path.string());
}

std::filesystem::path shipped_scenario_dir() {
  if (const char* env = std::getenv("SPMLAB_SCENARIOS"); env && *env) return env;
  return SPMLAB_SCENARIO_DIR;
}

Scenario find_scenario(const std::string& name_or_path) {
  const std::filesystem::path p(name_or_path);
  if (std::filesystem::exists(p)) return load_scenario(p);
  const std::filesystem::path shipped = shipped_scenario_dir() / (name_or_path + ".json");
  if (std::filesystem::exists(shipped)) return load_scenario(shipped);
  throw std::runtime_error("no scenario file or shipped scenario named '" + name_or_path + "'");
}

std::vector<CatalogEntry> list_suite(const std::filesystem::path& dir) {
  std::vector<CatalogEntry> out;
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error("scenario directory " + dir.string() + " not found");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    const Scenario s = load_scenario(f);
    out.push_back({s.name, s.description, s.exercises, s.suite, s.fingerprint(), f});
  }
  return out;
}

std::filesystem::path output_directory(const Scenario& s, const RunOptions& options) {
  return options.out_dir / (s.name + "-" + s.fingerprint());
}

bool report_passes(const DiagnosticsReport& report, bool strict) {
  return report.passed() && (!strict || report.warnings().empty());
}

}  // namespace spm
