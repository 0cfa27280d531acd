#pragma once

// Windowed-sinc FIR design (bandpass and Hilbert), zero-phase "same" length
// convolution, and single-frequency tone power via the Goertzel recurrence.

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "dmanull/common.hpp"

namespace dmanull {

inline std::vector<double> blackman_window(std::size_t taps) {
  if (taps < 3) throw std::invalid_argument("window needs at least 3 taps");
  std::vector<double> w(taps);
  const double den = static_cast<double>(taps - 1);
  for (std::size_t i = 0; i < taps; ++i) {
    const double t = static_cast<double>(i) / den;
    w[i] = 0.42 - 0.5 * std::cos(kTwoPi * t) + 0.08 * std::cos(2.0 * kTwoPi * t);
  }
  return w;
}

inline cplx freq_response(const std::vector<double>& h, double fs_hz,
                          double f_hz) {
  const double w = kTwoPi * f_hz / fs_hz;
  cplx acc(0.0, 0.0);
  for (std::size_t n = 0; n < h.size(); ++n)
    acc += h[n] * std::polar(1.0, -w * static_cast<double>(n));
  return acc;
}

namespace detail {

inline void check_band(double fs_hz, double f_hz) {
  if (!(f_hz > 0.0) || !(f_hz < fs_hz / 2.0))
    throw std::invalid_argument("frequency outside (0, fs/2)");
}

}  // namespace detail

// Linear-phase bandpass: windowed ideal bandpass impulse response, odd tap
// count. When unity_at_hz is given the taps are scaled so the magnitude
// response is exactly 1 there.
inline std::vector<double> design_bandpass(
    std::size_t taps, double fs_hz, double lo_hz, double hi_hz,
    std::optional<double> unity_at_hz = std::nullopt) {
  if (taps < 3 || taps % 2 == 0)
    throw std::invalid_argument("bandpass needs an odd tap count >= 3");
  detail::check_band(fs_hz, lo_hz);
  detail::check_band(fs_hz, hi_hz);
  if (!(lo_hz < hi_hz)) throw std::invalid_argument("band edges reversed");
  const std::vector<double> w = blackman_window(taps);
  const double w1 = kTwoPi * lo_hz / fs_hz;
  const double w2 = kTwoPi * hi_hz / fs_hz;
  const std::ptrdiff_t mid = static_cast<std::ptrdiff_t>(taps / 2);
  std::vector<double> h(taps);
  for (std::size_t i = 0; i < taps; ++i) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(i) - mid;
    const double x = static_cast<double>(n);
    h[i] = (n == 0 ? (w2 - w1) / kPi
                   : (std::sin(w2 * x) - std::sin(w1 * x)) / (kPi * x)) *
           w[i];
  }
  if (unity_at_hz) {
    detail::check_band(fs_hz, *unity_at_hz);
    const double g = std::abs(freq_response(h, fs_hz, *unity_at_hz));
    if (!(g > 0.0)) throw std::runtime_error("degenerate bandpass gain");
    for (double& v : h) v /= g;
  }
  return h;
}

// Antisymmetric (type III) Hilbert transformer with an odd tap count; the
// taps are scaled for exactly unit magnitude at unity_at_hz. Applying it
// with convolve_same yields the quadrature component with the group delay
// already removed.
inline std::vector<double> design_hilbert(std::size_t taps, double fs_hz,
                                          double unity_at_hz) {
  if (taps < 3 || taps % 2 == 0)
    throw std::invalid_argument("hilbert needs an odd tap count >= 3");
  detail::check_band(fs_hz, unity_at_hz);
  const std::vector<double> w = blackman_window(taps);
  const std::ptrdiff_t mid = static_cast<std::ptrdiff_t>(taps / 2);
  std::vector<double> h(taps);
  for (std::size_t i = 0; i < taps; ++i) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(i) - mid;
    if (n == 0 || n % 2 == 0) {
      h[i] = 0.0;
    } else {
      const double x = static_cast<double>(n);
      h[i] = 2.0 / (kPi * x) * w[i];
    }
  }
  const double g = std::abs(freq_response(h, fs_hz, unity_at_hz));
  if (!(g > 0.0)) throw std::runtime_error("degenerate hilbert gain");
  for (double& v : h) v /= g;
  return h;
}

// Zero-phase FIR application: output has the input's length and the filter's
// group delay (odd taps, linear phase) is compensated. Samples outside the
// input are treated as zero, so the first and last (taps-1)/2 outputs carry
// edge effects.
inline std::vector<double> convolve_same(const std::vector<double>& x,
                                         const std::vector<double>& h) {
  if (h.empty() || h.size() % 2 == 0)
    throw std::invalid_argument("filter must have an odd tap count");
  const std::ptrdiff_t len = static_cast<std::ptrdiff_t>(x.size());
  const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(h.size());
  const std::ptrdiff_t d = (m - 1) / 2;
  std::vector<double> y(x.size(), 0.0);
  for (std::ptrdiff_t i = 0; i < len; ++i) {
    double acc = 0.0;
    const std::ptrdiff_t klo = std::max<std::ptrdiff_t>(0, i + d - len + 1);
    const std::ptrdiff_t khi = std::min<std::ptrdiff_t>(m - 1, i + d);
    for (std::ptrdiff_t k = klo; k <= khi; ++k)
      acc += h[static_cast<std::size_t>(k)] *
             x[static_cast<std::size_t>(i + d - k)];
    y[static_cast<std::size_t>(i)] = acc;
  }
  return y;
}

// Mean-square power of the frequency-f component of x[start, start+length):
// 2 |X(f)|^2 / length^2, i.e. a^2/2 for an exact-bin sinusoid of amplitude a.
inline double tone_power(const std::vector<double>& x, std::size_t start,
                         std::size_t length, double f_hz, double fs_hz) {
  if (length == 0 || start + length > x.size())
    throw std::invalid_argument("analysis segment out of range");
  detail::check_band(fs_hz, f_hz);
  const double w = kTwoPi * f_hz / fs_hz;
  const double c = 2.0 * std::cos(w);
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t n = start; n < start + length; ++n) {
    const double s0 = x[n] + c * s1 - s2;
    s2 = s1;
    s1 = s0;
  }
  const double mag2 = s1 * s1 + s2 * s2 - c * s1 * s2;
  const double nn = static_cast<double>(length);
  return 2.0 * mag2 / (nn * nn);
}

// Mean-square power of a full segment (broadband), for leakage diagnostics.
inline double segment_power(const std::vector<double>& x, std::size_t start,
                            std::size_t length) {
  if (length == 0 || start + length > x.size())
    throw std::invalid_argument("analysis segment out of range");
  double acc = 0.0;
  for (std::size_t n = start; n < start + length; ++n) acc += x[n] * x[n];
  return acc / static_cast<double>(length);
}

}  // namespace dmanull
