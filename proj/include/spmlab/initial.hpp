#pragma once

#include <functional>
#include <string>
#include <vector>

#include "spmlab/grid.hpp"

namespace spm {

// Source-type solution of d_t u = 1/2 d_xx (u^m) with unit mass, i.e. the
// classical Barenblatt profile of u_t = (u^m)_xx evaluated at time t/2.
class Barenblatt {
 public:
  explicit Barenblatt(double m);

  double operator()(double t, double x) const;
  double front(double t) const;  // half-width of the support
  double exponent() const { return m_; }

 private:
  double m_;
  double alpha_;  // time exponent 1/(m+1)
  double k_;      // alpha (m-1) / (2m)
  double c_;      // mass normalisation
};

// Gaussian density N(mean, variance).
double gaussian_density(double mean, double variance, double x);

struct InitialCondition {
  std::string shape = "gaussian";  // gaussian | uniform | point | barenblatt
  double mean = 0.0;
  double variance = 0.25;
  double lower = -1.0;  // uniform
  double upper = 1.0;
  double at = 0.0;  // point
  double m = 2.0;   // barenblatt exponent
  double time = 0.1;

  // Density on the grid with unit discrete mass. Point masses are mollified
  // at scale 2h.
  GridField on_grid(const Grid& grid) const;
  // Inverse CDF on (0, 1). Build once and reuse; the Barenblatt law is
  // inverted through a tabulated CDF.
  std::function<double(double)> quantile_function() const;
  double quantile(double u) const { return quantile_function()(u); }
  double variance_of_law() const;
};

}  // namespace spm
