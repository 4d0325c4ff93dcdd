#pragma once

#include <span>
#include <vector>

namespace spm {

// Row j reads lower[j] x[j-1] + diag[j] x[j] + upper[j] x[j+1] = rhs[j].
// For the cyclic variant lower[0] couples to x[n-1] and upper[n-1] to x[0];
// otherwise those two entries are ignored. No pivoting: the callers only
// build diagonally dominant systems.
std::vector<double> solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                                      std::span<const double> upper, std::span<const double> rhs);

std::vector<double> solve_cyclic_tridiagonal(std::span<const double> lower,
                                             std::span<const double> diag,
                                             std::span<const double> upper,
                                             std::span<const double> rhs);

}  // namespace spm
