#pragma once

// Bit-exact uniform fixed-point quantizer: midtread, round-half-away-from-zero,
// two's-complement code range with silent saturation. Weights and everything
// downstream of the quantizer stay in double precision.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace dmanull {

struct QuantizerSpec {
  int bits = 16;
  double full_scale = 1.0;
};

inline void validate(const QuantizerSpec& spec) {
  if (spec.bits < 1 || spec.bits > 60)
    throw std::invalid_argument("quantizer bits out of supported range");
  if (!(spec.full_scale > 0.0))
    throw std::invalid_argument("quantizer full scale must be > 0");
}

// Step between adjacent codes: 2 * FS / 2^bits. Exact (power-of-two scaling).
inline double step_size(const QuantizerSpec& spec) {
  return std::ldexp(spec.full_scale, 1 - spec.bits);
}

struct QuantizeStats {
  std::uint64_t saturated = 0;  // samples clamped at either rail
};

// Precomputed quantizer for hot loops.
class Quantizer {
 public:
  explicit Quantizer(const QuantizerSpec& spec)
      : delta_(step_size(spec)),
        inv_delta_(1.0 / step_size(spec)),
        hi_(std::exp2(spec.bits - 1) - 1.0),
        lo_(-std::exp2(spec.bits - 1)) {
    validate(spec);
  }

  double delta() const { return delta_; }

  double operator()(double x, QuantizeStats* stats = nullptr) const {
    double code = std::round(x * inv_delta_);
    if (code > hi_) {
      code = hi_;
      if (stats) ++stats->saturated;
    } else if (code < lo_) {
      code = lo_;
      if (stats) ++stats->saturated;
    }
    return code * delta_;
  }

  void apply(std::vector<double>& x, QuantizeStats* stats = nullptr) const {
    for (double& v : x) v = (*this)(v, stats);
  }

 private:
  double delta_, inv_delta_, hi_, lo_;
};

inline double quantize(double x, const QuantizerSpec& spec,
                       QuantizeStats* stats = nullptr) {
  return Quantizer(spec)(x, stats);
}

inline std::vector<double> quantize_sequence(const std::vector<double>& x,
                                             const QuantizerSpec& spec,
                                             QuantizeStats* stats = nullptr) {
  const Quantizer q(spec);
  std::vector<double> out(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) out[n] = q(x[n], stats);
  return out;
}

}  // namespace dmanull
