#include <cmath>
#include <filesystem>

#include "catch_amalgamated.hpp"
#include "spmlab/noise.hpp"
#include "spmlab/parallel.hpp"
#include "spmlab/philox.hpp"

using namespace spm;
using Catch::Approx;

TEST_CASE("philox known answers") {
  // Random123 kat_vectors, philox4x32 with 10 rounds.
  using C = Philox4x32::Counter;
  CHECK(Philox4x32(Philox4x32::Key{0u, 0u})(C{0u, 0u, 0u, 0u}) == C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(Philox4x32(Philox4x32::Key{0xffffffffu, 0xffffffffu})(C{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}) ==
        C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(Philox4x32(Philox4x32::Key{0xa4093822u, 0x299f31d0u})(C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}) ==
        C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("derived seeds differ and repeat") {
  CHECK(derive_seed(1, 0) == derive_seed(1, 0));
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  const double u = uniform_open(3, 4, 5, StreamTag::initial);
  CHECK(u > 0.0);
  CHECK(u <= 1.0);
}

TEST_CASE("noise table is deterministic and has variance dt") {
  const double dt = 1e-3;
  const auto a = sample_noise(42, 3, dt, 20000);
  set_thread_count(4);
  const auto b = sample_noise(42, 3, dt, 20000);
  set_thread_count(1);
  CHECK(a == b);
  CHECK_FALSE(a == sample_noise(43, 3, dt, 20000));
  for (std::size_t i = 0; i < 3; ++i) {
    double s = 0.0, s2 = 0.0;
    for (std::size_t k = 0; k < a.steps(); ++k) {
      s += a.increment(i, k);
      s2 += a.increment(i, k) * a.increment(i, k);
    }
    const double n = static_cast<double>(a.steps());
    // Sample variance of chi^2_1 scaled by dt: SE = dt sqrt(2/n).
    CHECK(std::abs(s2 / n - dt) < 4.0 * dt * std::sqrt(2.0 / n));
    CHECK(std::abs(s / n) < 4.0 * std::sqrt(dt / n));
  }
  // Adding channels does not change the existing ones.
  const auto c = sample_noise(42, 5, dt, 100);
  for (std::size_t k = 0; k < 100; ++k) CHECK(c.increment(2, k) == a.increment(2, k));
  CHECK_THROWS(sample_noise(1, 1, 0.0, 10));
}

TEST_CASE("coarsening keeps the Brownian path") {
  const auto w = sample_noise(7, 2, 1e-3, 400);
  const auto c = w.coarsen(4);
  CHECK(c.steps() == 100);
  CHECK(c.dt() == Approx(4e-3));
  const auto pf = w.path(1), pc = c.path(1);
  for (std::size_t k = 0; k <= 100; ++k) CHECK(pc[k] == Approx(pf[4 * k]).margin(1e-14));
  CHECK(pf.front() == 0.0);
  CHECK_THROWS(w.coarsen(3));
}

TEST_CASE("noise csv and binary round trip") {
  const auto w = sample_noise(11, 2, 5e-4, 37);
  const auto dir = std::filesystem::temp_directory_path() / "spmlab_test_noise";
  std::filesystem::create_directories(dir);
  w.save_csv(dir / "w.csv");
  w.save_binary(dir / "w.bin");
  CHECK(NoiseRealization::load_csv(dir / "w.csv") == w);
  CHECK(NoiseRealization::load_binary(dir / "w.bin") == w);
  std::filesystem::remove_all(dir);
  CHECK_THROWS(NoiseRealization::load_binary(dir / "missing.bin"));
}

TEST_CASE("mode catalog") {
  CHECK(ModeDescriptor{"constant", 0.3}(5.0) == 0.3);
  CHECK(ModeDescriptor{"gaussian_bump", 2.0, 1.0, 0.5}(2.0) == Approx(2.0 * std::exp(-2.0)));
  CHECK(ModeDescriptor{"tanh", 1.0, 0.0, 2.0}(1.0) == Approx(std::tanh(0.5)));
  CHECK(ModeDescriptor{"sine", 1.0, 0.0, 1.0, 3.0, 0.1}(0.2) == Approx(std::sin(0.7)));
  CHECK_THROWS(ModeDescriptor{"wavelet"}(0.0));

  const Grid g(std::numbers::pi, 256, Boundary::periodic);
  const auto set = ModeSet::from_catalog(g, {{"constant", 0.5}, {"sine", 0.2, 0.0, 1.0, 1.0, 0.0}});
  CHECK(set.count() == 2);
  CHECK(set.sup(0) == Approx(0.5));
  CHECK(set.derivative_sup(0) == Approx(0.0).margin(1e-14));
  CHECK(set.multiplier_bound(0) == Approx(std::sqrt(2.0) * 0.5));
  CHECK(set.sum_sup_squared() == Approx(0.25 + 0.04).epsilon(1e-4));
  const auto fine = set.on_grid(Grid(std::numbers::pi, 512, Boundary::periodic));
  CHECK(fine.mode(1).size() == 512);
}

TEST_CASE("noise increment field") {
  const Grid g(2.0, 16, Boundary::periodic);
  const auto set = ModeSet::from_catalog(g, {{"constant", 0.5}}, ModeDescriptor{"constant", 0.2});
  const auto w = sample_noise(1, 1, 0.01, 3);
  const GridField f = noise_increment_field(set, w, 1);
  for (std::size_t j = 0; j < g.size(); ++j) CHECK(f[j] == Approx(0.5 * w.increment(0, 1) + 0.2 * 0.01));
  CHECK_THROWS(noise_increment_field(set, w, 3));
}

TEST_CASE("Doleans exponential matches the closed form") {
  // Constant mode c: Z_t = exp(c W_t - c^2 t / 2).
  const double c = 0.7, dt = 1e-3;
  const auto w = sample_noise(5, 1, dt, 500);
  DoleansWeight z;
  for (std::size_t k = 0; k < w.steps(); ++k) z = doleans_step(z, c * w.increment(0, k), c * c * dt);
  const double wt = w.path(0).back();
  CHECK(z.value() == Approx(std::exp(c * wt - 0.5 * c * c * 0.5)).epsilon(1e-12));
  CHECK(z.ledger.size() == 500);
  CHECK_FALSE(z.overflowed);
  CHECK_THROWS(doleans_step(z, 0.0, -1.0));
  DoleansWeight big;
  big = doleans_step(big, 1e6, 0.0);
  CHECK(big.overflowed);
}

TEST_CASE("path line integral by hand") {
  const Grid g(4.0, 80, Boundary::periodic);
  const auto set = ModeSet::from_catalog(g, {{"tanh", 1.0, 0.0, 1.0}}, ModeDescriptor{"constant", 0.3});
  const auto w = sample_noise(9, 1, 0.02, 3);
  const std::vector<double> y = {0.0, 0.5, -1.0};
  const auto inc = path_line_integral(y, set, w);
  REQUIRE(inc.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    const double e = interpolate(set.mode(0), y[k]);
    CHECK(inc[k].dm == Approx(e * w.increment(0, k) + 0.3 * 0.02));
    CHECK(inc[k].dqv == Approx(e * e * 0.02));
  }
  CHECK(inc[0].dqv == Approx(0.0).margin(1e-14));
  CHECK_THROWS(path_line_integral({0.0}, set, w));
}
