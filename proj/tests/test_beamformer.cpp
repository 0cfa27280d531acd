#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "dmanull/array_model.hpp"
#include "dmanull/beamformer.hpp"
#include "dmanull/common.hpp"
#include "dmanull/quantization.hpp"
#include "dmanull/weights.hpp"

using namespace dmanull;

namespace {

constexpr double kF0 = 997.0;

ArrayGeometry geometry_for(int mics) {
  ArrayGeometry g;
  g.num_mics = mics;
  g.spacing_m = spacing_from_wavelengths(0.04, kF0);
  return g;
}

std::vector<MicChannel> ideal_channels(int mics) {
  std::vector<MicChannel> ch(static_cast<std::size_t>(mics));
  for (int i = 0; i < mics; ++i)
    ch[static_cast<std::size_t>(i)] = {i + 1, 1.0, 0.0};
  return ch;
}

std::vector<ComplexChannel> synth_all(const SourceSpec& src,
                                      const ArrayGeometry& g,
                                      const std::vector<MicChannel>& ch,
                                      double theta_deg,
                                      const SamplingSpec& samp) {
  std::vector<ComplexChannel> out;
  for (const MicChannel& c : ch) {
    auto [i, q] = synth_channel(src, g, c, theta_deg, samp);
    out.push_back({std::move(i), std::move(q)});
  }
  return out;
}

}  // namespace

TEST_CASE("zero input produces zero output", "[beamformer]") {
  const ArrayGeometry g = geometry_for(2);
  const BeamWeights w =
      design_weights({Pattern::dipole, 1}, g, kF0, ideal_channels(2));
  std::vector<ComplexChannel> ch(2);
  for (auto& c : ch) {
    c.in_phase.assign(64, 0.0);
    c.quadrature.assign(64, 0.0);
  }
  const std::vector<double> u = beamform(ch, w);
  for (double v : u) CHECK(v == 0.0);
}

TEST_CASE("input validation", "[beamformer]") {
  const ArrayGeometry g = geometry_for(2);
  const BeamWeights w =
      design_weights({Pattern::dipole, 1}, g, kF0, ideal_channels(2));

  std::vector<ComplexChannel> too_few(1);
  too_few[0].in_phase.assign(8, 0.0);
  too_few[0].quadrature.assign(8, 0.0);
  CHECK_THROWS_AS(beamform(too_few, w), std::invalid_argument);

  std::vector<ComplexChannel> ragged(2);
  ragged[0].in_phase.assign(8, 0.0);
  ragged[0].quadrature.assign(8, 0.0);
  ragged[1].in_phase.assign(7, 0.0);
  ragged[1].quadrature.assign(8, 0.0);
  CHECK_THROWS_AS(beamform(ragged, w), std::invalid_argument);

  CHECK_THROWS_AS(output_power({}), std::invalid_argument);
}

TEST_CASE("unquantized dipole cancels broadside", "[beamformer]") {
  const ArrayGeometry g = geometry_for(2);
  const std::vector<MicChannel> ch = ideal_channels(2);
  const BeamWeights w = design_weights({Pattern::dipole, 1}, g, kF0, ch);
  SourceSpec src;
  src.initial_phase_rad = 1.23;
  const SamplingSpec samp{44100.0, 8192};
  const auto channels = synth_all(src, g, ch, 90.0, samp);
  CHECK(output_power(beamform(channels, w)) < 1e-24);
}

TEST_CASE("distortionless endfire power", "[beamformer]") {
  // Unit response toward 0 degrees: the beamformed tone has amplitude A, so
  // its mean-square power is A^2/2 up to the finite-length ripple.
  const SamplingSpec samp{44100.0, 8192};
  for (auto pat : {Pattern::dipole, Pattern::cardioid, Pattern::hypercardioid,
                   Pattern::supercardioid}) {
    for (int order = 1; order <= 3; ++order) {
      const ArrayGeometry g = geometry_for(order + 1);
      const std::vector<MicChannel> ch = ideal_channels(order + 1);
      const BeamWeights w = design_weights({pat, order}, g, kF0, ch);
      SourceSpec src;
      src.initial_phase_rad = 0.77;
      const auto channels = synth_all(src, g, ch, 0.0, samp);
      const double p = output_power(beamform(channels, w));
      INFO(to_string(pat) << " order " << order);
      CHECK(p == Catch::Approx(0.5).margin(5e-4));
    }
  }
}

TEST_CASE("beamforming is linear", "[beamformer]") {
  const ArrayGeometry g = geometry_for(2);
  const std::vector<MicChannel> ch = ideal_channels(2);
  const BeamWeights w = design_weights({Pattern::cardioid, 1}, g, kF0, ch);
  const SamplingSpec samp{44100.0, 512};
  SourceSpec a, b;
  a.initial_phase_rad = 0.3;
  b.initial_phase_rad = 2.2;
  const auto ca = synth_all(a, g, ch, 40.0, samp);
  const auto cb = synth_all(b, g, ch, 155.0, samp);
  std::vector<ComplexChannel> sum(2);
  for (std::size_t i = 0; i < 2; ++i) {
    sum[i].in_phase.resize(samp.num_samples);
    sum[i].quadrature.resize(samp.num_samples);
    for (std::size_t n = 0; n < samp.num_samples; ++n) {
      sum[i].in_phase[n] = ca[i].in_phase[n] + cb[i].in_phase[n];
      sum[i].quadrature[n] = ca[i].quadrature[n] + cb[i].quadrature[n];
    }
  }
  const auto ua = beamform(ca, w);
  const auto ub = beamform(cb, w);
  const auto us = beamform(sum, w);
  for (std::size_t n = 0; n < us.size(); ++n)
    REQUIRE(us[n] == Catch::Approx(ua[n] + ub[n]).margin(1e-12));
}

TEST_CASE("output power is source-phase invariant", "[beamformer]") {
  const ArrayGeometry g = geometry_for(2);
  const std::vector<MicChannel> ch = ideal_channels(2);
  const BeamWeights w = design_weights({Pattern::cardioid, 1}, g, kF0, ch);
  const SamplingSpec samp{44100.0, 8192};
  SourceSpec a, b;
  a.initial_phase_rad = 0.3;
  b.initial_phase_rad = 2.1;
  const double pa =
      output_power(beamform(synth_all(a, g, ch, 60.0, samp), w));
  const double pb =
      output_power(beamform(synth_all(b, g, ch, 60.0, samp), w));
  // A finite-length tone's mean square carries a phase-dependent ripple of
  // relative size 1 / (L * sin(omega0 / fs)); two draws differ by at most
  // twice that.
  const double ripple =
      2.0 / (8192.0 * std::sin(kTwoPi * kF0 / samp.sample_rate_hz));
  CHECK(std::abs(pa - pb) / pa < ripple);
}

TEST_CASE("quantization error power follows the uniform model",
          "[beamformer]") {
  // At a pattern null the signal cancels, so the output power is pure
  // quantization error: sum_i |C_i|^2 * delta^2 / 12 when the in-phase and
  // quadrature errors are independent and uniform. Averaged over random
  // source and channel phases the simulated power must sit near the model.
  const int order = 1;
  const ArrayGeometry g = geometry_for(order + 1);
  const QuantizerSpec qspec{16, 1.0};
  const Quantizer quant(qspec);
  const SamplingSpec samp{44100.0, 8192};
  const double null_theta = 180.0;  // first-order cardioid null

  std::mt19937_64 gen(99);
  double acc = 0.0;
  const int draws = 200;
  double model = 0.0;
  for (int d = 0; d < draws; ++d) {
    std::vector<MicChannel> ch = ideal_channels(order + 1);
    for (MicChannel& c : ch) c.phase_rad = uniform_angle(gen);
    const BeamWeights w =
        design_weights({Pattern::cardioid, order}, g, kF0, ch);
    if (d == 0)
      for (const cplx& c : w.compensated)
        model += std::norm(c) * quant.delta() * quant.delta() / 12.0;

    SourceSpec src;
    src.amplitude = 0.5;  // headroom so the rails stay untouched
    src.initial_phase_rad = uniform_angle(gen);
    std::vector<ComplexChannel> channels;
    for (const MicChannel& c : ch) {
      auto [i, q] = synth_channel(src, g, c, null_theta, samp);
      quant.apply(i);
      quant.apply(q);
      channels.push_back({std::move(i), std::move(q)});
    }
    acc += output_power(beamform(channels, w));
  }
  const double mean_power = acc / draws;
  CHECK(mean_power == Catch::Approx(model).epsilon(0.15));
}
