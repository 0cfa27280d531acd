#pragma once

// Continuous-model microphone signals for a uniform linear array receiving a
// plane-wave tone: per-sensor delay, per-channel gain/phase transfer, and
// analytic in-phase/quadrature sequence synthesis (no sample interpolation —
// the fractional delay enters the sinusoid argument directly).

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dmanull/common.hpp"

namespace dmanull {

struct SourceSpec {
  double amplitude = 1.0;         // fraction of quantizer full scale
  double frequency_hz = 997.0;    // tone frequency f0
  double initial_phase_rad = 0.0; // phase of the emitted tone
};

struct ArrayGeometry {
  int num_mics = 2;
  double spacing_m = 0.0;         // distance between consecutive sensors
  double sound_speed_mps = 343.0;
};

struct MicChannel {
  int index = 1;          // 1-based sensor index
  double gain = 1.0;      // transfer magnitude at f0
  double phase_rad = 0.0; // transfer phase at f0, in [0, 2*pi)
};

struct SamplingSpec {
  double sample_rate_hz = 44100.0;
  std::size_t num_samples = 8192;
};

inline double spacing_from_wavelengths(double wavelengths, double f0_hz,
                                       double sound_speed_mps = 343.0) {
  return wavelengths * sound_speed_mps / f0_hz;
}

inline void validate(const SourceSpec& src, const SamplingSpec& samp) {
  if (!(src.amplitude > 0.0))
    throw std::invalid_argument("source amplitude must be > 0");
  if (!(src.frequency_hz > 0.0) ||
      !(src.frequency_hz < 0.5 * samp.sample_rate_hz))
    throw std::invalid_argument("tone frequency must lie in (0, Fs/2)");
  if (samp.num_samples == 0)
    throw std::invalid_argument("sequence length must be >= 1");
}

inline void validate(const ArrayGeometry& geom) {
  if (geom.num_mics < 2)
    throw std::invalid_argument("array needs at least 2 microphones");
  if (!(geom.spacing_m > 0.0))
    throw std::invalid_argument("sensor spacing must be > 0");
  if (!(geom.sound_speed_mps > 0.0))
    throw std::invalid_argument("sound speed must be > 0");
}

// Differential designs assume closely spaced sensors; a spacing above a tenth
// of the wavelength is legal but worth a warning at the interface layer.
inline bool small_spacing_ok(const ArrayGeometry& geom, double f0_hz) {
  return geom.spacing_m <= 0.1 * geom.sound_speed_mps / f0_hz;
}

// Delay between two adjacent sensors for incidence angle theta (radians):
// tau0 = spacing * cos(theta) / c. Sensor i (1-based) is delayed (i-1)*tau0.
inline double adjacent_delay(const ArrayGeometry& geom, double theta_rad) {
  return geom.spacing_m * std::cos(theta_rad) / geom.sound_speed_mps;
}

// Total phase offset of channel `chan` relative to cos(w0 n Ts):
// beta = phi_source + phi_channel - (i-1) * w0 * tau0.
inline double channel_phase(const SourceSpec& src, const ArrayGeometry& geom,
                            const MicChannel& chan, double theta_rad) {
  const double w0 = kTwoPi * src.frequency_hz;
  const double tau0 = adjacent_delay(geom, theta_rad);
  return reduce_phase(src.initial_phase_rad) + chan.phase_rad -
         (chan.index - 1) * w0 * tau0;
}

// Precomputed cos/sin of the carrier on the sample grid. One table serves
// every channel, angle, and Monte-Carlo run with the same (f0, Fs, L): the
// pair (I, Q) for any phase offset beta follows from the angle-sum identity,
// which is exact, not an approximation.
class ToneTable {
 public:
  ToneTable() = default;
  ToneTable(double f0_hz, const SamplingSpec& samp)
      : cos_(samp.num_samples), sin_(samp.num_samples) {
    const double w_ts = kTwoPi * f0_hz / samp.sample_rate_hz;
    for (std::size_t n = 0; n < samp.num_samples; ++n) {
      const double arg = w_ts * static_cast<double>(n);
      cos_[n] = std::cos(arg);
      sin_[n] = std::sin(arg);
    }
  }

  std::size_t length() const { return cos_.size(); }

  // in_phase[n]  = a * cos(w0 n Ts + beta)
  // quadrature[n] = a * sin(w0 n Ts + beta)
  void synth(double amplitude, double beta, std::vector<double>& in_phase,
             std::vector<double>& quadrature) const {
    const double c = amplitude * std::cos(beta);
    const double s = amplitude * std::sin(beta);
    const std::size_t n = cos_.size();
    in_phase.resize(n);
    quadrature.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      in_phase[k] = c * cos_[k] - s * sin_[k];
      quadrature[k] = s * cos_[k] + c * sin_[k];
    }
  }

 private:
  std::vector<double> cos_, sin_;
};

// Unquantized in-phase/quadrature pair seen by one channel for a source at
// `theta_deg` (degrees; folded onto [0, 180] — the linear array cannot tell
// theta from 360 - theta). The quadrature sequence is the analytic sine
// counterpart of the in-phase cosine.
inline std::pair<std::vector<double>, std::vector<double>> synth_channel(
    const SourceSpec& src, const ArrayGeometry& geom, const MicChannel& chan,
    double theta_deg, const SamplingSpec& samp) {
  validate(src, samp);
  validate(geom);
  if (chan.index < 1 || chan.index > geom.num_mics)
    throw std::invalid_argument("channel index out of range");
  const double theta_rad = deg_to_rad(fold_angle_deg(theta_deg));
  const double beta = channel_phase(src, geom, chan, theta_rad);
  const ToneTable table(src.frequency_hz, samp);
  std::vector<double> i, q;
  table.synth(src.amplitude * chan.gain, beta, i, q);
  return {std::move(i), std::move(q)};
}

}  // namespace dmanull
