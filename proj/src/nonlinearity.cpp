#include "spmlab/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spm {

namespace {

constexpr double kLimitTolerance = 1e-6;
constexpr double kDegeneracyThreshold = 1e-6;

void check_psi(const std::string& name, const ScalarMap& psi, double lip) {
  if (!(lip > 0.0) || !std::isfinite(lip)) {
    throw std::invalid_argument(name + ": psi must be Lipschitz with a finite positive constant");
  }
  if (psi(0.0) != 0.0) throw std::invalid_argument(name + ": psi(0) must be 0");
  double prev = 0.0;
  for (double u : default_probes()) {
    const double v = psi(u);
    if (!std::isfinite(v)) throw std::invalid_argument(name + ": psi not finite on probes");
    if (v < prev) throw std::invalid_argument(name + ": psi is not nondecreasing on probes");
    if (std::abs(v) > lip * u * (1.0 + 1e-12) + 1e-300) {
      throw std::invalid_argument(name + ": |psi(u)| exceeds lip*|u| on probes");
    }
    prev = v;
  }
}

}  // namespace

std::string to_string(Degeneracy d) {
  switch (d) {
    case Degeneracy::degenerate:
      return "degenerate";
    case Degeneracy::non_degenerate:
      return "non-degenerate";
    default:
      return "inconclusive";
  }
}

std::vector<double> limit_probes() {
  std::vector<double> u;
  for (int k = 4; k <= 10; ++k) u.push_back(std::pow(10.0, -k));
  return u;
}

std::vector<double> default_probes() {
  std::vector<double> u;
  for (int k = 12; k >= 1; --k) u.push_back(std::pow(10.0, -k));
  for (int j = 1; j <= 1000; ++j) u.push_back(0.01 * j);
  std::sort(u.begin(), u.end());
  u.erase(std::unique(u.begin(), u.end()), u.end());
  return u;
}

PhiEstimate phi_from_psi(const ScalarMap& psi, const std::vector<double>& probes) {
  if (psi(0.0) != 0.0) throw std::invalid_argument("phi_from_psi: psi(0) must be 0");
  std::vector<double> sorted = probes;
  std::sort(sorted.begin(), sorted.end());
  double prev = 0.0;
  for (double u : sorted) {
    if (u <= 0.0) continue;
    const double v = psi(u);
    if (v < prev) throw std::invalid_argument("phi_from_psi: psi is not monotone on the probes");
    if (v / u < 0.0) throw std::invalid_argument("phi_from_psi: negative psi(u)/u");
    prev = v;
  }

  auto phi = [psi](double u) {
    const double a = std::abs(u);
    if (a == 0.0) return 0.0;
    return std::sqrt(std::max(0.0, psi(a) / a));
  };

  std::vector<double> s;
  for (double u : limit_probes()) s.push_back(phi(u));
  std::vector<double> accelerated;
  for (std::size_t k = 0; k + 2 < s.size(); ++k) {
    const double d1 = s[k + 1] - s[k];
    const double d2 = s[k + 2] - s[k + 1];
    const double scale = std::max(1.0, std::abs(s[k + 2]));
    if (std::abs(d2) <= 1e-15 * scale || std::abs(d2 - d1) <= 1e-300) {
      accelerated.push_back(s[k + 2]);
    } else {
      accelerated.push_back(s[k + 2] - d2 * d2 / (d2 - d1));
    }
  }
  const double last = accelerated.back();
  const double before = accelerated[accelerated.size() - 2];
  if (std::abs(last - before) > kLimitTolerance) {
    throw std::runtime_error("phi_from_psi: Phi(0+) did not stabilise on the probe ladder");
  }
  const double phi0 = std::max(0.0, last);
  return PhiEstimate{[phi, phi0](double u) { return u == 0.0 ? phi0 : phi(u); }, phi0};
}

NonlinearitySpec::NonlinearitySpec(std::string name, ScalarMap psi_positive, double lipschitz,
                                   double degeneracy_zero)
    : name_(std::move(name)), psi_(std::move(psi_positive)), lip_(lipschitz), u_c_(degeneracy_zero) {
  check_psi(name_, psi_, lip_);
  phi0_base_ = phi_from_psi(psi_).phi_at_zero;
  class_ = classify(*this);
}

double NonlinearitySpec::base_psi(double u) const {
  return u >= 0.0 ? psi_(u) : -psi_(-u);
}

double NonlinearitySpec::psi(double u) const { return base_psi(u) + kappa_ * u; }

double NonlinearitySpec::phi_squared(double u) const {
  const double a = std::abs(u);
  double base;
  if (a == 0.0) {
    base = phi0_base_ * phi0_base_;
  } else {
    base = std::max(0.0, psi_(a) / a);
  }
  return base + kappa_;
}

double NonlinearitySpec::phi(double u) const { return std::sqrt(phi_squared(u)); }

double NonlinearitySpec::phi_at_zero() const {
  return std::sqrt(phi0_base_ * phi0_base_ + kappa_);
}

NonlinearitySpec regularize(const NonlinearitySpec& spec, double kappa) {
  if (kappa < 0.0) throw std::invalid_argument("regularize: kappa must be nonnegative");
  NonlinearitySpec out = spec;
  if (kappa == 0.0) return out;
  out.kappa_ = spec.kappa_ + kappa;
  out.lip_ = spec.lip_ + kappa;
  out.class_ = classify(out);
  return out;
}

Degeneracy classify(const NonlinearitySpec& spec, const std::vector<double>& probes) {
  double inf_phi = std::numeric_limits<double>::infinity();
  bool small_probe = false;
  for (double u : probes) {
    if (u <= 0.0 || u > 1.0) continue;
    if (u <= 1e-4) small_probe = true;
    inf_phi = std::min(inf_phi, spec.phi(u));
  }
  if (!small_probe) throw std::invalid_argument("classify: probes must reach into (0, 1e-4]");
  if (inf_phi > kDegeneracyThreshold) return Degeneracy::non_degenerate;
  if (spec.phi_at_zero() < kDegeneracyThreshold) return Degeneracy::degenerate;
  return Degeneracy::inconclusive;
}

double monotonicity_constant(const NonlinearitySpec& spec) {
  const double lip = spec.lipschitz();
  if (!(lip > 0.0) || !std::isfinite(lip)) {
    throw std::invalid_argument("monotonicity_constant: Lipschitz constant must be finite");
  }
  return 1.0 / lip;
}

NonlinearitySpec linear_nonlinearity(double slope) {
  if (!(slope > 0.0)) throw std::invalid_argument("linear nonlinearity needs a positive slope");
  return NonlinearitySpec("linear", [slope](double u) { return slope * u; }, slope);
}

NonlinearitySpec porous_medium(double m, double clip) {
  if (!(m > 1.0)) throw std::invalid_argument("porous medium exponent must exceed 1");
  if (!(clip > 0.0)) throw std::invalid_argument("porous medium clip level must be positive");
  const double at_clip = std::pow(clip, m);
  const double slope = m * std::pow(clip, m - 1.0);
  auto psi = [m, clip, at_clip, slope](double u) {
    if (u > clip) return at_clip + slope * (u - clip);
    if (m == 2.0) return u * u;
    if (m == 3.0) return u * u * u;
    return std::pow(u, m);
  };
  return NonlinearitySpec("porous_medium", psi, slope);
}

NonlinearitySpec threshold_nonlinearity(double u_c, double slope) {
  if (u_c < 0.0 || !(slope > 0.0)) throw std::invalid_argument("threshold nonlinearity: bad parameters");
  return NonlinearitySpec(
      "threshold", [u_c, slope](double u) { return slope * std::max(0.0, u - u_c); }, slope, u_c);
}

NonlinearitySpec clipped_linear(double knee, double ratio) {
  if (!(knee > 0.0) || !(ratio > 0.0) || ratio > 1.0) {
    throw std::invalid_argument("clipped linear nonlinearity: bad parameters");
  }
  return NonlinearitySpec(
      "clipped_linear",
      [knee, ratio](double u) { return std::min(u, knee + ratio * std::max(0.0, u - knee)); }, 1.0);
}

}  // namespace spm
