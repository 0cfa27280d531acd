#pragma once

// Shared numeric helpers: angle handling, dB conversion, deterministic RNG
// streams for Monte-Carlo runs.

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace dmanull {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

// Floor used when converting non-positive linear power to dB. Far below any
// level reachable in double precision in this problem domain.
inline constexpr double kDbFloor = -400.0;

inline double deg_to_rad(double deg) { return deg * (kPi / 180.0); }
inline double rad_to_deg(double rad) { return rad * (180.0 / kPi); }

inline double power_to_db(double p) {
  if (!(p > 0.0)) return kDbFloor;
  const double db = 10.0 * std::log10(p);
  return db < kDbFloor ? kDbFloor : db;
}

inline double db_to_power(double db) { return std::pow(10.0, db / 10.0); }

// Folds an angle in degrees onto [0, 180]. A uniform linear array is
// front-back ambiguous about its axis, so theta and 360 - theta are the same
// incidence; folding in degrees keeps mirror pairs bit-identical whenever the
// subtraction 360 - theta is exact (integer and low-precision grids).
inline double fold_angle_deg(double theta_deg) {
  double t = std::fmod(theta_deg, 360.0);
  if (t < 0.0) t += 360.0;
  if (t > 180.0) t = 360.0 - t;
  return t;
}

// Reduces a phase to (-pi, pi]. std::remainder is exact, so adding an exactly
// representable multiple of the modulus to the input leaves the result
// unchanged bit-for-bit.
inline double reduce_phase(double phase_rad) {
  double r = std::remainder(phase_rad, kTwoPi);
  if (r == -kPi) r = kPi;
  return r;
}

// SplitMix64 mixer; used to derive independent per-run seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic per-run generator: the stream depends only on
// (master_seed, run_index), never on evaluation order or thread placement.
inline std::mt19937_64 rng_for_run(std::uint64_t master_seed,
                                   std::uint64_t run_index) {
  return std::mt19937_64(
      splitmix64(master_seed ^ (0x9e3779b97f4a7c15ULL * (run_index + 1))));
}

// Uniform angle in [0, 2*pi) from the top 53 bits of one generator draw.
inline double uniform_angle(std::mt19937_64& gen) {
  return kTwoPi * ((gen() >> 11) * 0x1.0p-53);
}

}  // namespace dmanull
