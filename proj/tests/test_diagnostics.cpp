#include <cmath>
#include <numbers>

#include "catch_amalgamated.hpp"
#include "spmlab/diagnostics.hpp"
#include "spmlab/initial.hpp"

using namespace spm;
using Catch::Approx;

namespace {

SpdeTrajectory fake_trajectory(const Grid& g, const std::vector<double>& times, double shift, std::uint64_t seed = 1) {
  SpdeTrajectory t(g);
  t.times = times;
  t.noise_seed = seed;
  for (double s : times) {
    t.fields.push_back(GridField::sample(g, [&](double x) { return std::exp(-(x - s) * (x - s)) + shift * std::sin(std::numbers::pi * 2.0 * x / 4.0); }));
  }
  return t;
}

}  // namespace

TEST_CASE("column statistics") {
  const auto s = column_stats({{1.0, 2.0}, {3.0, 2.0}, {5.0, 2.0}});
  CHECK(s.mean[0] == Approx(3.0));
  CHECK(s.standard_error[0] == Approx(2.0 / std::sqrt(3.0)));
  CHECK(s.standard_error[1] == 0.0);
}

TEST_CASE("H^-1 distance of a sine perturbation") {
  const double L = 4.0, delta = 0.05;
  const Grid g(L, 128, Boundary::periodic);
  const std::vector<double> times = {0.0, 0.5, 1.0};
  const auto a = fake_trajectory(g, times, 0.0);
  const auto b = fake_trajectory(g, times, delta);
  const double k = std::numbers::pi * 2.0 / L, h = g.spacing();
  const double lambda = 4.0 / (h * h) * std::pow(std::sin(0.5 * k * h), 2);
  for (double v : h_minus1_distance(a, b)) CHECK(v == Approx(delta * delta * L / (1.0 + lambda)).epsilon(1e-10));
  const auto l1 = l1_distance_series(a, b);
  CHECK(l1[0] == Approx(delta * 2.0 * L * 2.0 / std::numbers::pi).epsilon(1e-3));

  // A coarser copy of the same field is interpolated onto the finer grid.
  const auto coarse = fake_trajectory(Grid(L, 64, Boundary::periodic), times, 0.0);
  for (double v : h_minus1_distance(a, coarse)) CHECK(v < 1e-5);
  for (double v : h_minus1_distance(coarse, a)) CHECK(v < 1e-5);

  const auto late = fake_trajectory(g, {0.0, 0.5, 1.1}, 0.0);
  CHECK_THROWS(h_minus1_distance(a, late));
}

TEST_CASE("cross validation refuses mismatched inputs") {
  const Grid g(4.0, 64, Boundary::periodic);
  const std::vector<double> times = {0.0, 1.0};
  const auto a = fake_trajectory(g, times, 0.0, 1);
  CHECK_THROWS(cross_validate(a, fake_trajectory(g, times, 0.0, 2)));
  CHECK_THROWS(cross_validate(a, fake_trajectory(Grid(5.0, 64, Boundary::periodic), times, 0.0, 1)));
  const auto cv = cross_validate(a, fake_trajectory(g, times, 0.1, 1));
  CHECK(cv.terminal_h_minus1() == Approx(std::sqrt(h_minus1_distance(a, fake_trajectory(g, times, 0.1, 1)).back())));
  CHECK(cv.terminal_l1() > 0.0);
}

TEST_CASE("Gronwall constant and check") {
  const Grid g(std::numbers::pi, 256, Boundary::periodic);
  CHECK(gronwall_constant(ModeSet::from_catalog(g, {{"constant", 0.5}})) == Approx(2.5));
  CHECK(gronwall_constant(ModeSet::none(g)) == 2.0);

  const std::vector<double> times = {0.0, 0.5, 1.0};
  std::vector<std::vector<double>> decaying(100), growing(100);
  for (std::size_t r = 0; r < 100; ++r) {
    const double s = 1.0 + 0.01 * static_cast<double>(r % 7);
    decaying[r] = {s, s * 0.8, s * 0.6};
    growing[r] = {s, s * std::exp(1.5), s * std::exp(3.0)};
  }
  const auto ok = gronwall_check(decaying, times, 1.0);
  CHECK(ok.pass);
  CHECK(ok.fitted_rate == Approx(std::log(0.8) / 0.5));
  const auto bad = gronwall_check(growing, times, 1.0);
  CHECK_FALSE(bad.pass);
  CHECK(bad.fitted_rate == Approx(3.0));
  CHECK(bad.max_excess > 0.0);
  decaying.pop_back();
  CHECK_THROWS(gronwall_check(decaying, times, 1.0));
}

TEST_CASE("kappa sweep validates the kappa list") {
  const Grid g(4.0, 64, Boundary::periodic);
  KappaSweepConfig c{InitialCondition{}.on_grid(g), porous_medium(2.0), ModeSet::none(g), 1e-3, 10, {}, {1}, 4.0};
  c.kappas = {1e-1, 1e-2, 1e-3};
  CHECK_THROWS(kappa_sweep(c));
  c.kappas = {1e-1, 1e-2, 1e-2, 1e-3};
  CHECK_THROWS(kappa_sweep(c));
  c.kappas = {1e-1, 8e-2, 5e-2, 2e-2};
  CHECK_THROWS(kappa_sweep(c));
  c.kappas = {1e-1, 1e-2, 1e-3, 1e-4};
  const auto t = kappa_sweep(c);
  CHECK(t.rows.size() == 4);
  CHECK(t.reference_kappa == Approx(1e-5));
  CHECK(t.nonnegative);
  CHECK(t.rows.back().cauchy == 0.0);
}

TEST_CASE("Kolmogorov-Smirnov distance") {
  CHECK(ks_distance({1.0, 2.0, 3.0}, {3.0, 1.0, 2.0}) == 0.0);
  CHECK(ks_distance({1.0, 2.0}, {5.0, 6.0}) == 1.0);
  CHECK(ks_distance({1.0, 2.0, 3.0, 4.0}, {2.5, 3.5}) == Approx(0.5));
  CHECK_THROWS(ks_distance({}, {1.0}));
}

TEST_CASE("mollified experiment") {
  MollifiedSdeConfig c;
  c.coefficient = [](double) { return 0.5; };
  c.levels = {2, 4, 8};
  c.samples = 2000;
  c.horizon = 0.1;
  c.table_points = 1024;
  const auto flat = mollified_coefficient_experiment(c);
  REQUIRE(flat.ks.size() == 2);
  for (double d : flat.ks) CHECK(d <= 1e-3);
  CHECK(flat.lower_bound == Approx(0.5));

  c.coefficient = [](double x) { return 0.5 + 0.25 * (x > 0.0 ? 1.0 : -1.0); };
  const auto step = mollified_coefficient_experiment(c);
  CHECK(step.ks[0] > 0.0);
  CHECK(step.upper_bound == Approx(0.75));

  c.coefficient = [](double x) { return 0.5 * std::max(0.0, x); };
  CHECK_THROWS(mollified_coefficient_experiment(c));
  c.coefficient = [](double) { return 0.5; };
  c.levels = {4};
  CHECK_THROWS(mollified_coefficient_experiment(c));
}
