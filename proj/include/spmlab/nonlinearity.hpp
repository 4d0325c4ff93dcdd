#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace spm {

enum class Degeneracy { degenerate, non_degenerate, inconclusive };

std::string to_string(Degeneracy d);

using ScalarMap = std::function<double(double)>;

// psi with its factor Phi^2 = psi(u)/u. psi is given on u >= 0 and extended
// oddly; phi_squared is even.
class NonlinearitySpec {
 public:
  NonlinearitySpec(std::string name, ScalarMap psi_positive, double lipschitz,
                   double degeneracy_zero = 0.0);

  const std::string& name() const { return name_; }
  double psi(double u) const;
  double phi_squared(double u) const;
  double phi(double u) const;
  double phi_at_zero() const;
  double lipschitz() const { return lip_; }
  double degeneracy_zero() const { return u_c_; }
  double kappa() const { return kappa_; }
  Degeneracy degeneracy() const { return class_; }

  // The unregularized psi of this spec (equal to psi() when kappa == 0).
  double base_psi(double u) const;

  friend NonlinearitySpec regularize(const NonlinearitySpec& spec, double kappa);

 private:
  std::string name_;
  ScalarMap psi_;
  double lip_;
  double u_c_;
  double kappa_ = 0.0;
  double phi0_base_ = 0.0;
  Degeneracy class_ = Degeneracy::inconclusive;
};

struct PhiEstimate {
  ScalarMap phi;
  double phi_at_zero = 0.0;
};

// Probe ladder used for the u -> 0+ limit: u = 10^-k, k = 4..10.
std::vector<double> limit_probes();
// Default classification probes: log-spaced in (0, 1] plus a linear sweep.
std::vector<double> default_probes();

// Phi(u) = sqrt(psi(u)/u); Phi(0) from Aitken-accelerated limits over the
// probe ladder, which must agree within 1e-6.
PhiEstimate phi_from_psi(const ScalarMap& psi, const std::vector<double>& probes = default_probes());

// Phi_kappa = sqrt(Phi^2 + kappa), psi_kappa(u) = psi(u) + kappa u.
NonlinearitySpec regularize(const NonlinearitySpec& spec, double kappa);

Degeneracy classify(const NonlinearitySpec& spec, const std::vector<double>& probes = default_probes());

// alpha = 1 / lip with (psi(r) - psi(s))(r - s) >= alpha (psi(r) - psi(s))^2.
double monotonicity_constant(const NonlinearitySpec& spec);

// Catalog.
NonlinearitySpec linear_nonlinearity(double slope = 1.0);
// |u|^{m-1} u up to `clip`, continued linearly with the slope at the clip.
NonlinearitySpec porous_medium(double m, double clip = 10.0);
// (u - u_c)_+ times slope.
NonlinearitySpec threshold_nonlinearity(double u_c, double slope = 1.0);
// min(u, knee + ratio (u - knee)_+): slope 1 up to the knee, `ratio` after.
NonlinearitySpec clipped_linear(double knee = 1.0, double ratio = 0.5);

}  // namespace spm
