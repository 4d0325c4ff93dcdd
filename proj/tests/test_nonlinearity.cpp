#include <cmath>

#include "catch_amalgamated.hpp"
#include "spmlab/nonlinearity.hpp"
#include "spmlab/philox.hpp"

using namespace spm;
using Catch::Approx;

TEST_CASE("Phi from psi on closed forms") {
  CHECK(phi_from_psi([](double u) { return u; }).phi_at_zero == Approx(1.0).epsilon(1e-9));
  CHECK(phi_from_psi([](double u) { return 4.0 * u + u * u; }).phi_at_zero == Approx(2.0).epsilon(1e-9));
  CHECK(phi_from_psi([](double u) { return u * u; }).phi_at_zero == Approx(0.0).margin(1e-6));
  CHECK(phi_from_psi([](double u) { return std::max(0.0, u - 1.0); }).phi_at_zero == 0.0);
  const auto est = phi_from_psi([](double u) { return u * u; });
  CHECK(est.phi(0.25) == Approx(0.5));
  CHECK(est.phi(-0.25) == Approx(0.5));
  CHECK_THROWS(phi_from_psi([](double u) { return u + 1.0; }));
  CHECK_THROWS(phi_from_psi([](double u) { return std::sin(20.0 * u); }));
}

TEST_CASE("catalog values") {
  const auto lin = linear_nonlinearity(2.0);
  CHECK(lin.psi(1.5) == 3.0);
  CHECK(lin.psi(-1.5) == -3.0);
  CHECK(lin.phi_squared(0.3) == Approx(2.0));
  CHECK(lin.degeneracy() == Degeneracy::non_degenerate);

  const auto pme = porous_medium(2.0, 10.0);
  CHECK(pme.psi(3.0) == 9.0);
  CHECK(pme.psi(-3.0) == -9.0);
  CHECK(pme.psi(12.0) == Approx(100.0 + 20.0 * 2.0));
  CHECK(pme.lipschitz() == 20.0);
  CHECK(pme.phi(0.49) == Approx(0.7));
  CHECK(pme.degeneracy() == Degeneracy::degenerate);

  const auto thr = threshold_nonlinearity(1.0);
  CHECK(thr.psi(0.5) == 0.0);
  CHECK(thr.psi(3.0) == 2.0);
  CHECK(thr.phi_at_zero() == 0.0);
  CHECK(thr.degeneracy_zero() == 1.0);
  CHECK(thr.degeneracy() == Degeneracy::degenerate);

  const auto clip = clipped_linear(1.0, 0.5);
  CHECK(clip.psi(0.5) == 0.5);
  CHECK(clip.psi(3.0) == 2.0);
  CHECK(clip.degeneracy() == Degeneracy::non_degenerate);

  CHECK_THROWS(porous_medium(1.0));
  CHECK_THROWS(linear_nonlinearity(0.0));
  CHECK_THROWS(threshold_nonlinearity(-1.0));
  CHECK_THROWS(clipped_linear(1.0, 1.5));
}

TEST_CASE("regularization") {
  const auto pme = porous_medium(2.0);
  const auto reg = regularize(pme, 0.1);
  CHECK(reg.psi(2.0) == Approx(4.2));
  CHECK(reg.base_psi(2.0) == 4.0);
  CHECK(reg.kappa() == 0.1);
  CHECK(reg.phi_at_zero() == Approx(std::sqrt(0.1)));
  CHECK(reg.phi_squared(2.0) == Approx(2.1));
  CHECK(reg.lipschitz() == Approx(20.1));
  CHECK(reg.degeneracy() == Degeneracy::non_degenerate);
  CHECK(regularize(reg, 0.05).kappa() == Approx(0.15));
  CHECK(regularize(pme, 0.0).kappa() == 0.0);
  CHECK_THROWS(regularize(pme, -1.0));
}

TEST_CASE("classification needs small probes") {
  CHECK_THROWS(classify(linear_nonlinearity(), {0.5, 1.0}));
}

TEST_CASE("custom psi validation") {
  CHECK_THROWS(NonlinearitySpec("bad", [](double u) { return u * u; }, 1.0));   // exceeds lip
  CHECK_THROWS(NonlinearitySpec("bad", [](double u) { return -u; }, 1.0));      // decreasing
  CHECK_THROWS(NonlinearitySpec("bad", [](double u) { return u; }, 0.0));
  CHECK_NOTHROW(NonlinearitySpec("ok", [](double u) { return std::tanh(u); }, 1.0));
}

TEST_CASE("monotonicity constant holds on random pairs") {
  const NonlinearitySpec specs[] = {linear_nonlinearity(0.5), porous_medium(2.0), porous_medium(3.0, 4.0),
                                    threshold_nonlinearity(0.5, 2.0), clipped_linear(1.0, 0.25),
                                    regularize(porous_medium(2.0), 0.01)};
  for (const auto& spec : specs) {
    const double alpha = monotonicity_constant(spec);
    for (std::uint64_t i = 0; i < 20000; ++i) {
      const double r = 30.0 * (uniform_open(17, i, 0, StreamTag::test_field) - 0.5);
      const double s = 30.0 * (uniform_open(17, i, 1, StreamTag::test_field) - 0.5);
      const double d = spec.psi(r) - spec.psi(s);
      REQUIRE(d * (r - s) >= alpha * d * d * (1.0 - 1e-12) - 1e-12);
    }
  }
}
