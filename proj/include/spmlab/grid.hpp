#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spm {

enum class Boundary { periodic, neumann };

std::string to_string(Boundary bc);
Boundary boundary_from_string(std::string_view name);

// Uniform 1-D grid on [-L, L) with nodes x_j = -L + j*h, h = 2L/n.
// Neumann grids are read cell-centred: the reflecting wall sits half a cell
// outside the first and last node so the discrete Laplacian conserves mass.
class Grid {
 public:
  Grid(double half_width, std::size_t points, Boundary bc);

  double half_width() const { return half_width_; }
  std::size_t size() const { return points_; }
  double spacing() const { return spacing_; }
  Boundary boundary() const { return bc_; }
  double node(std::size_t j) const { return -half_width_ + static_cast<double>(j) * spacing_; }
  std::vector<double> nodes() const;

  bool operator==(const Grid& other) const = default;

 private:
  double half_width_;
  std::size_t points_;
  double spacing_;
  Boundary bc_;
};

Grid make_grid(double half_width, std::size_t points, Boundary bc);

class GridField {
 public:
  explicit GridField(const Grid& grid) : grid_(grid), values_(grid.size(), 0.0) {}
  GridField(const Grid& grid, std::vector<double> values);

  template <class F>
  static GridField sample(const Grid& grid, F&& f) {
    GridField out(grid);
    for (std::size_t j = 0; j < grid.size(); ++j) out.values_[j] = f(grid.node(j));
    return out;
  }

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  double& operator[](std::size_t j) { return values_[j]; }
  double operator[](std::size_t j) const { return values_[j]; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& data() { return values_; }
  const std::vector<double>& data() const { return values_; }

  GridField& operator+=(const GridField& o);
  GridField& operator-=(const GridField& o);
  GridField& operator*=(double s);

  bool all_finite() const;

 private:
  Grid grid_;
  std::vector<double> values_;
};

GridField operator+(GridField a, const GridField& b);
GridField operator-(GridField a, const GridField& b);
GridField operator*(GridField a, double s);
GridField operator*(double s, GridField a);
// Pointwise product.
GridField hadamard(const GridField& a, const GridField& b);

double integral(const GridField& f);
double inner(const GridField& f, const GridField& g);
double sup_norm(const GridField& f);
double l1_distance(const GridField& f, const GridField& g);

// Discrete Laplacian D^2 for the grid's boundary condition.
GridField laplacian(const GridField& f);
// Centred first difference (one-sided at Neumann ends).
GridField derivative(const GridField& f);

// Solves (I - D^2) g = f.
GridField helmholtz_inverse(const GridField& f);

// s = 0: L2, s = -1: sqrt(h <f, (I-D^2)^{-1} f>), s = -2: ||(I-D^2)^{-1} f||_L2.
double sobolev_norm(const GridField& f, int order);
double h_minus1_norm_squared(const GridField& f);

enum class KernelShape { bump, gaussian };

// phi_eps = phi(./eps)/eps. For the bump, eps is the support radius; for the
// gaussian, eps is the standard deviation and the kernel is cut at 4 eps.
struct Mollifier {
  KernelShape shape = KernelShape::bump;
  double scale = 1.0;

  double support_radius() const;
  // Kernel sampled at offsets m*h, m = -w..w, renormalised to sum 1.
  std::vector<double> discrete_weights(double spacing) const;
};

GridField mollify(const GridField& f, const Mollifier& m);

// sqrt(2) * (||e||_inf^2 + ||e'||_inf^2)^{1/2}
double multiplier_norm_bound(const GridField& e);

// Linear interpolation at an arbitrary point. Periodic grids wrap; Neumann
// grids extrapolate by the end values.
double interpolate(const GridField& f, double x);
GridField resample(const GridField& f, const Grid& target);

// Mass fraction in the outer 10% of the domain.
double boundary_mass_fraction(const GridField& f);

}  // namespace spm
