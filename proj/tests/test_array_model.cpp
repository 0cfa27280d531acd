#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "dmanull/array_model.hpp"
#include "dmanull/common.hpp"

using namespace dmanull;

namespace {

ArrayGeometry default_geometry(int mics = 2) {
  ArrayGeometry g;
  g.num_mics = mics;
  g.spacing_m = spacing_from_wavelengths(0.04, 997.0);
  g.sound_speed_mps = 343.0;
  return g;
}

}  // namespace

TEST_CASE("adjacent delay endpoints", "[array_model]") {
  const ArrayGeometry g = default_geometry();

  // At endfire the wave walks the full spacing: delta/c. With the spacing
  // expressed as w wavelengths of f0, that is exactly w/f0 seconds.
  const double tau_end = adjacent_delay(g, 0.0);
  CHECK(tau_end == Catch::Approx(0.04 / 997.0).epsilon(1e-12));
  CHECK(tau_end == Catch::Approx(4.0120361083249752e-5).epsilon(1e-12));

  // Broadside: no path difference.
  CHECK(std::abs(adjacent_delay(g, deg_to_rad(90.0))) < 1e-18);

  // Reverse endfire: equal magnitude, opposite sign.
  CHECK(adjacent_delay(g, deg_to_rad(180.0)) ==
        Catch::Approx(-tau_end).epsilon(1e-12));
}

TEST_CASE("inter-channel phase lag at endfire", "[array_model]") {
  const ArrayGeometry g = default_geometry();
  SourceSpec src;
  MicChannel m1{1, 1.0, 0.0}, m2{2, 1.0, 0.0};
  const double b1 = channel_phase(src, g, m1, 0.0);
  const double b2 = channel_phase(src, g, m2, 0.0);
  // w0 * tau0 = 2 pi * 0.04 = 0.08 pi.
  CHECK(b1 - b2 == Catch::Approx(0.08 * kPi).epsilon(1e-12));
}

TEST_CASE("in-phase/quadrature envelope identity", "[array_model]") {
  const ArrayGeometry g = default_geometry();
  SourceSpec src;
  src.amplitude = 0.7;
  src.initial_phase_rad = 2.31;
  MicChannel ch{2, 1.3, 0.45};
  SamplingSpec samp{44100.0, 4096};
  const auto [i, q] = synth_channel(src, g, ch, 37.7, samp);
  REQUIRE(i.size() == 4096);
  REQUIRE(q.size() == 4096);
  const double target = 0.7 * 1.3;
  for (std::size_t n = 0; n < i.size(); n += 7) {
    const double env = std::sqrt(i[n] * i[n] + q[n] * q[n]);
    REQUIRE(env == Catch::Approx(target).epsilon(1e-12));
  }
}

TEST_CASE("source phase is 2 pi periodic to the bit", "[array_model]") {
  const ArrayGeometry g = default_geometry();
  SamplingSpec samp{44100.0, 512};
  MicChannel ch{2, 1.0, 0.25};
  // Phases whose +2*pi sum is exactly representable, so the equality can be
  // demanded bit for bit.
  for (double phase : {0.0, 1.0, 1.5, -2.0}) {
    SourceSpec a, b;
    a.initial_phase_rad = phase;
    b.initial_phase_rad = phase + kTwoPi;
    const auto [ia, qa] = synth_channel(a, g, ch, 61.0, samp);
    const auto [ib, qb] = synth_channel(b, g, ch, 61.0, samp);
    for (std::size_t n = 0; n < ia.size(); ++n) {
      REQUIRE(ia[n] == ib[n]);
      REQUIRE(qa[n] == qb[n]);
    }
  }
}

TEST_CASE("front-back symmetry is exact", "[array_model]") {
  const ArrayGeometry g = default_geometry();
  SamplingSpec samp{44100.0, 256};
  SourceSpec src;
  src.initial_phase_rad = 0.9;
  MicChannel ch{1, 1.0, 0.1};
  // Integer-degree angles make 360 - theta exactly representable.
  for (double theta : {37.0, 90.0, 145.0}) {
    const auto [ia, qa] = synth_channel(src, g, ch, theta, samp);
    const auto [ib, qb] = synth_channel(src, g, ch, 360.0 - theta, samp);
    for (std::size_t n = 0; n < ia.size(); ++n) {
      REQUIRE(ia[n] == ib[n]);
      REQUIRE(qa[n] == qb[n]);
    }
  }
}

TEST_CASE("angle folding", "[array_model]") {
  CHECK(fold_angle_deg(0.0) == 0.0);
  CHECK(fold_angle_deg(180.0) == 180.0);
  CHECK(fold_angle_deg(190.0) == 170.0);
  CHECK(fold_angle_deg(360.0) == 0.0);
  CHECK(fold_angle_deg(-30.0) == 30.0);
  CHECK(fold_angle_deg(723.0) == 3.0);
}

TEST_CASE("validation rejects degenerate setups", "[array_model]") {
  const ArrayGeometry g = default_geometry();
  SamplingSpec samp{44100.0, 128};
  MicChannel ch{1, 1.0, 0.0};

  SourceSpec bad_amp;
  bad_amp.amplitude = 0.0;
  CHECK_THROWS_AS(synth_channel(bad_amp, g, ch, 10.0, samp),
                  std::invalid_argument);

  SourceSpec bad_freq;
  bad_freq.frequency_hz = 44100.0 / 2.0;  // at the folding frequency
  CHECK_THROWS_AS(synth_channel(bad_freq, g, ch, 10.0, samp),
                  std::invalid_argument);

  SamplingSpec empty{44100.0, 0};
  CHECK_THROWS_AS(synth_channel(SourceSpec{}, g, ch, 10.0, empty),
                  std::invalid_argument);

  ArrayGeometry one_mic = g;
  one_mic.num_mics = 1;
  CHECK_THROWS_AS(synth_channel(SourceSpec{}, one_mic, ch, 10.0, samp),
                  std::invalid_argument);

  ArrayGeometry no_gap = g;
  no_gap.spacing_m = 0.0;
  CHECK_THROWS_AS(synth_channel(SourceSpec{}, no_gap, ch, 10.0, samp),
                  std::invalid_argument);

  MicChannel out_of_range{3, 1.0, 0.0};
  CHECK_THROWS_AS(synth_channel(SourceSpec{}, g, out_of_range, 10.0, samp),
                  std::invalid_argument);
}

TEST_CASE("small-spacing regime check", "[array_model]") {
  ArrayGeometry g = default_geometry();
  CHECK(small_spacing_ok(g, 997.0));
  g.spacing_m = spacing_from_wavelengths(0.2, 997.0);
  CHECK_FALSE(small_spacing_ok(g, 997.0));
}
