#include "spmlab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spmlab/tridiagonal.hpp"

namespace spm {

std::string to_string(Boundary bc) { return bc == Boundary::periodic ? "periodic" : "neumann"; }

Boundary boundary_from_string(std::string_view name) {
  if (name == "periodic") return Boundary::periodic;
  if (name == "neumann") return Boundary::neumann;
  throw std::invalid_argument("unknown boundary condition '" + std::string(name) + "'");
}

Grid::Grid(double half_width, std::size_t points, Boundary bc)
    : half_width_(half_width), points_(points), spacing_(0.0), bc_(bc) {
  if (!(half_width > 0.0) || !std::isfinite(half_width)) {
    throw std::invalid_argument("grid half width must be positive and finite");
  }
  if (points < 8) throw std::invalid_argument("grid needs at least 8 points");
  spacing_ = 2.0 * half_width / static_cast<double>(points);
}

std::vector<double> Grid::nodes() const {
  std::vector<double> x(points_);
  for (std::size_t j = 0; j < points_; ++j) x[j] = node(j);
  return x;
}

Grid make_grid(double half_width, std::size_t points, Boundary bc) {
  return Grid(half_width, points, bc);
}

GridField::GridField(const Grid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw std::invalid_argument("GridField: value count does not match grid size");
  }
}

namespace {

void require_same_grid(const GridField& a, const GridField& b) {
  if (!(a.grid() == b.grid())) throw std::invalid_argument("GridField: grid mismatch");
}

}  // namespace

GridField& GridField::operator+=(const GridField& o) {
  require_same_grid(*this, o);
  for (std::size_t j = 0; j < values_.size(); ++j) values_[j] += o.values_[j];
  return *this;
}

GridField& GridField::operator-=(const GridField& o) {
  require_same_grid(*this, o);
  for (std::size_t j = 0; j < values_.size(); ++j) values_[j] -= o.values_[j];
  return *this;
}

GridField& GridField::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

bool GridField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

GridField operator+(GridField a, const GridField& b) { return a += b; }
GridField operator-(GridField a, const GridField& b) { return a -= b; }
GridField operator*(GridField a, double s) { return a *= s; }
GridField operator*(double s, GridField a) { return a *= s; }

GridField hadamard(const GridField& a, const GridField& b) {
  require_same_grid(a, b);
  GridField out(a.grid());
  for (std::size_t j = 0; j < a.size(); ++j) out[j] = a[j] * b[j];
  return out;
}

double integral(const GridField& f) {
  double s = 0.0;
  for (double v : f.values()) s += v;
  return s * f.grid().spacing();
}

double inner(const GridField& f, const GridField& g) {
  require_same_grid(f, g);
  double s = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) s += f[j] * g[j];
  return s * f.grid().spacing();
}

double sup_norm(const GridField& f) {
  double m = 0.0;
  for (double v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

double l1_distance(const GridField& f, const GridField& g) {
  require_same_grid(f, g);
  double s = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) s += std::abs(f[j] - g[j]);
  return s * f.grid().spacing();
}

GridField laplacian(const GridField& f) {
  const Grid& grid = f.grid();
  const std::size_t n = grid.size();
  const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
  GridField out(grid);
  for (std::size_t j = 1; j + 1 < n; ++j) out[j] = (f[j + 1] - 2.0 * f[j] + f[j - 1]) * inv_h2;
  if (grid.boundary() == Boundary::periodic) {
    out[0] = (f[1] - 2.0 * f[0] + f[n - 1]) * inv_h2;
    out[n - 1] = (f[0] - 2.0 * f[n - 1] + f[n - 2]) * inv_h2;
  } else {
    out[0] = (f[1] - f[0]) * inv_h2;
    out[n - 1] = (f[n - 2] - f[n - 1]) * inv_h2;
  }
  return out;
}

GridField derivative(const GridField& f) {
  const Grid& grid = f.grid();
  const std::size_t n = grid.size();
  const double h = grid.spacing();
  GridField out(grid);
  for (std::size_t j = 1; j + 1 < n; ++j) out[j] = (f[j + 1] - f[j - 1]) / (2.0 * h);
  if (grid.boundary() == Boundary::periodic) {
    out[0] = (f[1] - f[n - 1]) / (2.0 * h);
    out[n - 1] = (f[0] - f[n - 2]) / (2.0 * h);
  } else {
    out[0] = (f[1] - f[0]) / h;
    out[n - 1] = (f[n - 1] - f[n - 2]) / h;
  }
  return out;
}

GridField helmholtz_inverse(const GridField& f) {
  const Grid& grid = f.grid();
  const std::size_t n = grid.size();
  const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
  std::vector<double> lower(n, -inv_h2), diag(n, 1.0 + 2.0 * inv_h2), upper(n, -inv_h2);
  if (grid.boundary() == Boundary::periodic) {
    return GridField(grid, solve_cyclic_tridiagonal(lower, diag, upper, f.values()));
  }
  diag[0] = 1.0 + inv_h2;
  diag[n - 1] = 1.0 + inv_h2;
  return GridField(grid, solve_tridiagonal(lower, diag, upper, f.values()));
}

double h_minus1_norm_squared(const GridField& f) {
  return std::max(0.0, inner(f, helmholtz_inverse(f)));
}

double sobolev_norm(const GridField& f, int order) {
  switch (order) {
    case 0:
      return std::sqrt(inner(f, f));
    case -1:
      return std::sqrt(h_minus1_norm_squared(f));
    case -2: {
      const GridField g = helmholtz_inverse(f);
      return std::sqrt(inner(g, g));
    }
    default:
      throw std::invalid_argument("sobolev_norm: order must be 0, -1 or -2");
  }
}

double Mollifier::support_radius() const {
  return shape == KernelShape::bump ? scale : 4.0 * scale;
}

std::vector<double> Mollifier::discrete_weights(double spacing) const {
  if (!(scale > 0.0)) throw std::invalid_argument("mollifier scale must be positive");
  const double radius = support_radius();
  const auto half = static_cast<std::ptrdiff_t>(std::floor(radius / spacing));
  std::vector<double> w(static_cast<std::size_t>(2 * half + 1), 0.0);
  double total = 0.0;
  for (std::ptrdiff_t m = -half; m <= half; ++m) {
    const double x = static_cast<double>(m) * spacing / scale;
    double v = 0.0;
    if (shape == KernelShape::bump) {
      if (std::abs(x) < 1.0) v = std::exp(-1.0 / (1.0 - x * x));
    } else {
      v = std::exp(-0.5 * x * x);
    }
    w[static_cast<std::size_t>(m + half)] = v;
    total += v;
  }
  // Kernel narrower than one cell collapses to the identity.
  if (total <= 0.0) {
    w.assign(1, 1.0);
    return w;
  }
  for (double& v : w) v /= total;
  return w;
}

GridField mollify(const GridField& f, const Mollifier& m) {
  const Grid& grid = f.grid();
  const auto n = static_cast<std::ptrdiff_t>(grid.size());
  const std::vector<double> w = m.discrete_weights(grid.spacing());
  const auto half = static_cast<std::ptrdiff_t>(w.size() / 2);
  if (static_cast<std::ptrdiff_t>(w.size()) > n) {
    throw std::invalid_argument("mollify: kernel support exceeds the grid extent");
  }
  GridField out(grid);
  const bool periodic = grid.boundary() == Boundary::periodic;
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double src = f[static_cast<std::size_t>(i)];
    if (src == 0.0) continue;
    for (std::ptrdiff_t k = -half; k <= half; ++k) {
      std::ptrdiff_t p = i + k;
      if (periodic) {
        p = ((p % n) + n) % n;
      } else if (p < 0) {
        p = -1 - p;
      } else if (p >= n) {
        p = 2 * n - 1 - p;
      }
      out[static_cast<std::size_t>(p)] += w[static_cast<std::size_t>(k + half)] * src;
    }
  }
  return out;
}

double multiplier_norm_bound(const GridField& e) {
  const double sup = sup_norm(e);
  const double dsup = sup_norm(derivative(e));
  return std::sqrt(2.0) * std::sqrt(sup * sup + dsup * dsup);
}

double interpolate(const GridField& f, double x) {
  const Grid& grid = f.grid();
  const std::size_t n = grid.size();
  double u = (x + grid.half_width()) / grid.spacing();
  if (grid.boundary() == Boundary::periodic) {
    const double nn = static_cast<double>(n);
    u = std::fmod(u, nn);
    if (u < 0.0) u += nn;
    auto j = static_cast<std::size_t>(u);
    if (j >= n) j = n - 1;
    const double frac = u - static_cast<double>(j);
    return f[j] * (1.0 - frac) + f[(j + 1) % n] * frac;
  }
  if (u <= 0.0) return f[0];
  if (u >= static_cast<double>(n - 1)) return f[n - 1];
  const auto j = static_cast<std::size_t>(u);
  const double frac = u - static_cast<double>(j);
  return f[j] * (1.0 - frac) + f[j + 1] * frac;
}

GridField resample(const GridField& f, const Grid& target) {
  if (f.grid() == target) return f;
  return GridField::sample(target, [&](double x) { return interpolate(f, x); });
}

double boundary_mass_fraction(const GridField& f) {
  const Grid& grid = f.grid();
  const double inner_edge = 0.9 * grid.half_width();
  double outer = 0.0, total = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) {
    const double v = std::abs(f[j]);
    total += v;
    if (std::abs(grid.node(j)) >= inner_edge) outer += v;
  }
  return total > 0.0 ? outer / total : 0.0;
}

}  // namespace spm
