#pragma once

// Combines complex (in-phase + j*quadrature) channel sequences with the
// compensated weights and reduces to the real beamformed output, plus the
// mean-square output power and the ideal complex array response.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "dmanull/common.hpp"
#include "dmanull/weights.hpp"

namespace dmanull {

struct ComplexChannel {
  std::vector<double> in_phase;
  std::vector<double> quadrature;
};

// u[n] = sum_i Re{ C_i * (I_i[n] + j Q_i[n]) }
//      = sum_i Re(C_i) * I_i[n] - Im(C_i) * Q_i[n]
inline std::vector<double> beamform(const std::vector<ComplexChannel>& channels,
                                    const BeamWeights& weights) {
  if (static_cast<int>(channels.size()) != weights.num_channels())
    throw std::invalid_argument("channel count does not match weight count");
  if (channels.empty()) throw std::invalid_argument("no channels");
  const std::size_t len = channels.front().in_phase.size();
  for (const ComplexChannel& ch : channels)
    if (ch.in_phase.size() != len || ch.quadrature.size() != len)
      throw std::invalid_argument("channel sequence length mismatch");

  std::vector<double> u(len, 0.0);
  for (std::size_t i = 0; i < channels.size(); ++i) {
    const double wr = weights.compensated[i].real();
    const double wi = weights.compensated[i].imag();
    const double* in = channels[i].in_phase.data();
    const double* qu = channels[i].quadrature.data();
    for (std::size_t n = 0; n < len; ++n) u[n] += wr * in[n] - wi * qu[n];
  }
  return u;
}

// Mean-square power of the beamformed sequence.
inline double output_power(const std::vector<double>& u) {
  if (u.empty()) throw std::invalid_argument("empty sequence");
  double acc = 0.0;
  for (double v : u) acc += v * v;
  return acc / static_cast<double>(u.size());
}

// Ideal (unquantized, compensation-cancelled) complex envelope of the array
// response at direction cosine x = cos(theta):
//   F(x) = sum_i D_i e^{j psi_i} e^{-j i phi x},   phi = w0 * spacing / c.
// The beamformed tone has amplitude A*|F|, so its mean-square power tracks
// |F|^2 / 2.
inline cplx array_response(const BeamWeights& weights, double phi, double x) {
  cplx acc(0.0, 0.0);
  for (int i = 0; i < weights.num_channels(); ++i)
    acc += weights.uncompensated(i) * std::polar(1.0, -phi * i * x);
  return acc;
}

}  // namespace dmanull
