#include <cmath>
#include <numbers>
#include <vector>

#include "catch_amalgamated.hpp"
#include "spmlab/grid.hpp"
#include "spmlab/tridiagonal.hpp"

using namespace spm;
using Catch::Approx;

namespace {

// Plain Gaussian elimination with partial pivoting on a dense copy.
std::vector<double> dense_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    std::swap(a[c], a[p]);
    std::swap(b[c], b[p]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return x;
}

std::vector<std::vector<double>> helmholtz_matrix(const Grid& g) {
  const std::size_t n = g.size();
  const double c = 1.0 / (g.spacing() * g.spacing());
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    a[i][i] = 1.0 + 2.0 * c;
    if (i > 0) a[i][i - 1] = -c;
    if (i + 1 < n) a[i][i + 1] = -c;
  }
  if (g.boundary() == Boundary::periodic) {
    a[0][n - 1] = -c;
    a[n - 1][0] = -c;
  } else {
    a[0][0] = 1.0 + c;
    a[n - 1][n - 1] = 1.0 + c;
  }
  return a;
}

}  // namespace

TEST_CASE("grid nodes and spacing") {
  const Grid g(5.0, 100, Boundary::periodic);
  CHECK(g.spacing() == Approx(0.1));
  CHECK(g.node(0) == -5.0);
  CHECK(g.node(99) == Approx(4.9));
  CHECK_THROWS(Grid(0.0, 10, Boundary::periodic));
  CHECK_THROWS(Grid(1.0, 2, Boundary::neumann));
  CHECK(boundary_from_string("neumann") == Boundary::neumann);
  CHECK_THROWS(boundary_from_string("dirichlet"));
}

TEST_CASE("helmholtz inverse matches a dense solve") {
  for (Boundary bc : {Boundary::periodic, Boundary::neumann}) {
    for (std::size_t n : {8u, 17u, 64u}) {
      const Grid g(3.0, n, bc);
      const GridField f = GridField::sample(g, [](double x) { return std::exp(-x * x) + 0.3 * std::sin(3.0 * x); });
      const GridField got = helmholtz_inverse(f);
      const std::vector<double> want = dense_solve(helmholtz_matrix(g), f.data());
      for (std::size_t j = 0; j < n; ++j) CHECK(got[j] == Approx(want[j]).margin(1e-12));
    }
  }
}

TEST_CASE("tridiagonal solvers against dense elimination") {
  const std::size_t n = 9;
  std::vector<double> lo(n), d(n), up(n), rhs(n);
  for (std::size_t i = 0; i < n; ++i) {
    lo[i] = -0.5 - 0.1 * i;
    up[i] = -0.7 + 0.05 * i;
    d[i] = 3.0 + 0.2 * i;
    rhs[i] = std::cos(static_cast<double>(i));
  }
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    a[i][i] = d[i];
    if (i > 0) a[i][i - 1] = lo[i];
    if (i + 1 < n) a[i][i + 1] = up[i];
  }
  const auto x = solve_tridiagonal(lo, d, up, rhs);
  const auto xd = dense_solve(a, rhs);
  for (std::size_t i = 0; i < n; ++i) CHECK(x[i] == Approx(xd[i]).margin(1e-13));

  a[0][n - 1] = lo[0];
  a[n - 1][0] = up[n - 1];
  const auto y = solve_cyclic_tridiagonal(lo, d, up, rhs);
  const auto yd = dense_solve(a, rhs);
  for (std::size_t i = 0; i < n; ++i) CHECK(y[i] == Approx(yd[i]).margin(1e-13));
}

TEST_CASE("H^-1 norm of a discrete sine is L / (1 + lambda)") {
  const double L = 4.0;
  const std::size_t n = 128;
  const Grid g(L, n, Boundary::periodic);
  for (int m : {1, 3, 10}) {
    const double k = std::numbers::pi * m / L;
    const GridField f = GridField::sample(g, [k](double x) { return std::sin(k * x); });
    const double h = g.spacing();
    const double lambda = 4.0 / (h * h) * std::pow(std::sin(0.5 * k * h), 2);
    CHECK(h_minus1_norm_squared(f) == Approx(L / (1.0 + lambda)).epsilon(1e-12));
    CHECK(sobolev_norm(f, 0) == Approx(std::sqrt(L)).epsilon(1e-12));
    CHECK(sobolev_norm(f, -2) == Approx(std::sqrt(L) / (1.0 + lambda)).epsilon(1e-12));
  }
  CHECK_THROWS(sobolev_norm(GridField(g), 1));
}

TEST_CASE("discrete laplacian") {
  const Grid g(std::numbers::pi, 256, Boundary::periodic);
  const GridField f = GridField::sample(g, [](double x) { return std::cos(2.0 * x); });
  const GridField lap = laplacian(f);
  for (std::size_t j = 0; j < g.size(); ++j) CHECK(lap[j] == Approx(-4.0 * f[j]).margin(2e-3));

  // Neumann stencil conserves the discrete integral.
  const Grid gn(2.0, 50, Boundary::neumann);
  const GridField u = GridField::sample(gn, [](double x) { return std::exp(x) + x * x; });
  CHECK(std::abs(integral(laplacian(u))) < 1e-9);
}

TEST_CASE("mollifier weights and mass") {
  const Grid g(5.0, 200, Boundary::periodic);
  for (KernelShape shape : {KernelShape::bump, KernelShape::gaussian}) {
    const Mollifier m{shape, 0.3};
    const auto w = m.discrete_weights(g.spacing());
    double s = 0.0;
    for (double v : w) s += v;
    CHECK(s == Approx(1.0).epsilon(1e-14));
    for (std::size_t i = 0; i < w.size(); ++i) CHECK(w[i] == Approx(w[w.size() - 1 - i]).epsilon(1e-14));
    const GridField f = GridField::sample(g, [](double x) { return x > -1.0 && x < 1.5 ? 1.0 : 0.0; });
    CHECK(integral(mollify(f, m)) == Approx(integral(f)).epsilon(1e-13));
  }
  // Narrow kernel collapses to the identity.
  CHECK(Mollifier{KernelShape::bump, 1e-3}.discrete_weights(0.1).size() == 1);
  CHECK_THROWS(Mollifier{KernelShape::bump, 0.0}.discrete_weights(0.1));
}

TEST_CASE("interpolation and resampling") {
  const Grid g(2.0, 40, Boundary::periodic);
  const GridField f = GridField::sample(g, [](double x) { return 3.0 * x + 1.0; });
  CHECK(interpolate(f, 0.05) == Approx(1.15));
  CHECK(interpolate(f, g.node(7)) == Approx(f[7]));
  const Grid fine(2.0, 80, Boundary::periodic);
  const GridField r = resample(f, fine);
  CHECK(r[20] == Approx(f[10]));
  CHECK(r[21] == Approx(0.5 * (f[10] + f[11])));
  const Grid gn(2.0, 40, Boundary::neumann);
  const GridField fn = GridField::sample(gn, [](double x) { return x; });
  CHECK(interpolate(fn, -5.0) == fn[0]);
  CHECK(interpolate(fn, 5.0) == fn[39]);
}

TEST_CASE("multiplier bound and boundary mass") {
  const Grid g(std::numbers::pi, 512, Boundary::periodic);
  const GridField e = GridField::sample(g, [](double x) { return 0.5 * std::sin(x); });
  CHECK(multiplier_norm_bound(e) == Approx(std::sqrt(2.0) * std::sqrt(0.5)).epsilon(1e-4));
  const GridField flat = GridField::sample(g, [](double) { return 1.0; });
  CHECK(boundary_mass_fraction(flat) == Approx(0.1).margin(0.01));
  CHECK(boundary_mass_fraction(GridField(g)) == 0.0);
}

TEST_CASE("field arithmetic checks grids") {
  const Grid a(1.0, 10, Boundary::periodic), b(1.0, 12, Boundary::periodic);
  CHECK_THROWS(l1_distance(GridField(a), GridField(b)));
  GridField f = GridField::sample(a, [](double x) { return x; });
  const GridField two = 2.0 * f;
  CHECK((two - f)[3] == Approx(f[3]));
  CHECK(inner(f, f) == Approx(a.spacing() * [&] { double s = 0; for (double v : f.data()) s += v * v; return s; }()));
  CHECK(sup_norm(f) == Approx(1.0));
}
