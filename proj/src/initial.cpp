#include "spmlab/initial.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace spm {

Barenblatt::Barenblatt(double m) : m_(m) {
  if (!(m > 1.0)) throw std::invalid_argument("Barenblatt profile needs m > 1");
  alpha_ = 1.0 / (m + 1.0);
  k_ = alpha_ * (m - 1.0) / (2.0 * m);
  // int (C - k y^2)_+^p dy = C^{p+1/2} k^{-1/2} B(1/2, p+1), p = 1/(m-1)
  const double p = 1.0 / (m - 1.0);
  const double beta = std::beta(0.5, p + 1.0);
  c_ = std::pow(std::sqrt(k_) / beta, 1.0 / (p + 0.5));
}

double Barenblatt::operator()(double t, double x) const {
  const double tau = 0.5 * t;
  const double s = std::pow(tau, -alpha_);
  const double core = c_ - k_ * x * x * s * s;
  if (core <= 0.0) return 0.0;
  return s * std::pow(core, 1.0 / (m_ - 1.0));
}

double Barenblatt::front(double t) const {
  return std::sqrt(c_ / k_) * std::pow(0.5 * t, alpha_);
}

double gaussian_density(double mean, double variance, double x) {
  const double d = x - mean;
  return std::exp(-0.5 * d * d / variance) / std::sqrt(2.0 * std::numbers::pi * variance);
}

GridField InitialCondition::on_grid(const Grid& grid) const {
  GridField f(grid);
  if (shape == "gaussian") {
    if (!(variance > 0.0)) throw std::invalid_argument("gaussian initial condition needs variance > 0");
    f = GridField::sample(grid, [&](double x) { return gaussian_density(mean, variance, x); });
  } else if (shape == "uniform") {
    if (!(upper > lower)) throw std::invalid_argument("uniform initial condition needs upper > lower");
    f = GridField::sample(grid, [&](double x) { return (x >= lower && x < upper) ? 1.0 : 0.0; });
  } else if (shape == "point") {
    const double u = (at + grid.half_width()) / grid.spacing();
    const auto j = static_cast<std::size_t>(std::clamp(std::lround(u), 0L, static_cast<long>(grid.size() - 1)));
    f[j] = 1.0 / grid.spacing();
    f = mollify(f, Mollifier{KernelShape::bump, 2.0 * grid.spacing()});
  } else if (shape == "barenblatt") {
    const Barenblatt b(m);
    f = GridField::sample(grid, [&](double x) { return b(time, x - mean); });
  } else {
    throw std::invalid_argument("unsupported initial condition shape '" + shape + "'");
  }
  const double mass = integral(f);
  if (!(mass > 0.0)) throw std::invalid_argument("initial condition has no mass on this grid");
  f *= 1.0 / mass;
  return f;
}

std::function<double(double)> InitialCondition::quantile_function() const {
  if (shape == "gaussian") {
    const boost::math::normal law(mean, std::sqrt(variance));
    return [law](double u) { return boost::math::quantile(law, u); };
  }
  if (shape == "uniform") {
    return [a = lower, b = upper](double u) { return a + u * (b - a); };
  }
  if (shape == "point") return [x = at](double) { return x; };
  if (shape == "barenblatt") {
    const Barenblatt b(m);
    const double front = b.front(time);
    constexpr std::size_t kCells = 1 << 14;
    const double dx = 2.0 * front / kCells;
    std::vector<double> x(kCells + 1), cdf(kCells + 1, 0.0);
    for (std::size_t i = 0; i <= kCells; ++i) x[i] = -front + static_cast<double>(i) * dx;
    for (std::size_t i = 0; i < kCells; ++i) {
      const double a = x[i];
      const double cell = dx * (b(time, a) + 4.0 * b(time, a + 0.5 * dx) + b(time, a + dx)) / 6.0;
      cdf[i + 1] = cdf[i] + cell;
    }
    const double total = cdf.back();
    for (double& c : cdf) c /= total;
    return [x = std::move(x), cdf = std::move(cdf), centre = mean](double u) {
      const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
      if (it == cdf.begin()) return centre + x.front();
      if (it == cdf.end()) return centre + x.back();
      const auto i = static_cast<std::size_t>(it - cdf.begin());
      const double span = cdf[i] - cdf[i - 1];
      const double frac = span > 0.0 ? (u - cdf[i - 1]) / span : 0.5;
      return centre + x[i - 1] + frac * (x[i] - x[i - 1]);
    };
  }
  throw std::invalid_argument("unsupported initial condition shape '" + shape + "'");
}

double InitialCondition::variance_of_law() const {
  if (shape == "gaussian") return variance;
  if (shape == "uniform") return (upper - lower) * (upper - lower) / 12.0;
  if (shape == "point") return 0.0;
  if (shape == "barenblatt") {
    const Barenblatt b(m);
    const double front = b.front(time);
    constexpr int kCells = 20000;
    const double dx = 2.0 * front / kCells;
    double s = 0.0;
    for (int i = 0; i < kCells; ++i) {
      const double x = -front + (i + 0.5) * dx;
      s += x * x * b(time, x) * dx;
    }
    return s;
  }
  throw std::invalid_argument("unsupported initial condition shape '" + shape + "'");
}

}  // namespace spm
