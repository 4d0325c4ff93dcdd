#include "spmlab/tridiagonal.hpp"

#include <stdexcept>

namespace spm {

std::vector<double> solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                                      std::span<const double> upper, std::span<const double> rhs) {
  const std::size_t n = diag.size();
  if (lower.size() != n || upper.size() != n || rhs.size() != n) {
    throw std::invalid_argument("solve_tridiagonal: size mismatch");
  }
  if (n == 0) return {};

  std::vector<double> c(n), x(n);
  double denom = diag[0];
  if (denom == 0.0) throw std::runtime_error("solve_tridiagonal: zero pivot");
  c[0] = upper[0] / denom;
  x[0] = rhs[0] / denom;
  for (std::size_t j = 1; j < n; ++j) {
    denom = diag[j] - lower[j] * c[j - 1];
    if (denom == 0.0) throw std::runtime_error("solve_tridiagonal: zero pivot");
    c[j] = upper[j] / denom;
    x[j] = (rhs[j] - lower[j] * x[j - 1]) / denom;
  }
  for (std::size_t j = n - 1; j-- > 0;) x[j] -= c[j] * x[j + 1];
  return x;
}

// Sherman-Morrison on top of the plain Thomas sweep.
std::vector<double> solve_cyclic_tridiagonal(std::span<const double> lower,
                                             std::span<const double> diag,
                                             std::span<const double> upper,
                                             std::span<const double> rhs) {
  const std::size_t n = diag.size();
  if (lower.size() != n || upper.size() != n || rhs.size() != n) {
    throw std::invalid_argument("solve_cyclic_tridiagonal: size mismatch");
  }
  if (n < 3) throw std::invalid_argument("solve_cyclic_tridiagonal: need at least 3 unknowns");

  const double alpha = upper[n - 1];  // A[n-1][0]
  const double beta = lower[0];       // A[0][n-1]
  const double gamma = -diag[0];

  std::vector<double> d(diag.begin(), diag.end());
  d[0] -= gamma;
  d[n - 1] -= alpha * beta / gamma;

  std::vector<double> x = solve_tridiagonal(lower, d, upper, rhs);

  std::vector<double> u(n, 0.0);
  u[0] = gamma;
  u[n - 1] = alpha;
  std::vector<double> z = solve_tridiagonal(lower, d, upper, u);

  const double fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
  for (std::size_t j = 0; j < n; ++j) x[j] -= fact * z[j];
  return x;
}

}  // namespace spm
