#pragma once

// Beamforming weight synthesis for differential patterns of order 1-3.
//
// The uncompensated weights h_i = D_i e^{j psi_i} solve an (N+1) x (N+1)
// linear system over the steering entries e^{-j (i-1) phi x}, x = cos(theta):
//   - unit (distortionless) response toward endfire, theta = 0;
//   - zero response at each null angle, with multiplicity m imposed through
//     the first m-1 derivatives of the response with respect to cos(theta).
// The compensated weights C_i additionally undo each channel's gain/phase
// transfer: C_i = (1/G_i) e^{-j phi_i} h_i.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dmanull/array_model.hpp"
#include "dmanull/common.hpp"

namespace dmanull {

enum class Pattern { dipole, cardioid, hypercardioid, supercardioid };

inline std::string to_string(Pattern p) {
  switch (p) {
    case Pattern::dipole: return "dipole";
    case Pattern::cardioid: return "cardioid";
    case Pattern::hypercardioid: return "hypercardioid";
    case Pattern::supercardioid: return "supercardioid";
  }
  throw std::invalid_argument("unknown pattern");
}

inline Pattern pattern_from_string(const std::string& s) {
  if (s == "dipole") return Pattern::dipole;
  if (s == "cardioid") return Pattern::cardioid;
  if (s == "hypercardioid") return Pattern::hypercardioid;
  if (s == "supercardioid") return Pattern::supercardioid;
  throw std::invalid_argument("unknown pattern name: " + s);
}

struct PatternSpec {
  Pattern pattern = Pattern::dipole;
  int order = 1;  // 1..3; requires order + 1 microphones
};

struct NullSpec {
  double angle_deg;  // in (0, 180]
  int multiplicity;  // >= 1
};

using NullPlacement = std::vector<NullSpec>;

// The third-order cardioid lists two distinct null angles (90 and 180) for
// three null degrees of freedom; the split of the extra multiplicity is a
// design choice. The default (double null at 90) is the one whose widths
// match the reference tables; the alternative is kept selectable.
enum class Cardioid3Split { double_at_90, double_at_180 };

inline NullPlacement null_angles(
    const PatternSpec& spec,
    Cardioid3Split split = Cardioid3Split::double_at_90) {
  const auto unsupported = [&]() {
    throw std::invalid_argument("unsupported pattern/order pair: " +
                                to_string(spec.pattern) + ", order " +
                                std::to_string(spec.order));
  };
  if (spec.order < 1 || spec.order > 3) unsupported();
  switch (spec.pattern) {
    case Pattern::dipole:
      return {{90.0, spec.order}};
    case Pattern::cardioid:
      if (spec.order == 1) return {{180.0, 1}};
      if (spec.order == 2) return {{90.0, 1}, {180.0, 1}};
      return split == Cardioid3Split::double_at_90
                 ? NullPlacement{{90.0, 2}, {180.0, 1}}
                 : NullPlacement{{90.0, 1}, {180.0, 2}};
    case Pattern::hypercardioid:
      if (spec.order == 1) return {{120.0, 1}};
      if (spec.order == 2) return {{72.0, 1}, {144.0, 1}};
      return {{55.0, 1}, {100.0, 1}, {145.0, 1}};
    case Pattern::supercardioid:
      if (spec.order == 1) return {{135.0, 1}};
      if (spec.order == 2) return {{106.0, 1}, {153.0, 1}};
      return {{97.0, 1}, {122.0, 1}, {153.0, 1}};
  }
  unsupported();
  return {};
}

struct BeamWeights {
  std::vector<double> magnitude;  // D_i
  std::vector<double> phase_rad;  // psi_i
  std::vector<cplx> compensated;  // C_i = (1/G_i) e^{-j phi_i} D_i e^{j psi_i}

  int num_channels() const { return static_cast<int>(magnitude.size()); }

  cplx uncompensated(int i) const {
    return std::polar(magnitude[static_cast<std::size_t>(i)],
                      phase_rad[static_cast<std::size_t>(i)]);
  }
};

namespace detail {

// Gaussian elimination with partial pivoting for the small (<= 4x4) complex
// constraint systems arising here.
inline std::vector<cplx> solve_complex(std::vector<std::vector<cplx>> a,
                                       std::vector<cplx> b) {
  const std::size_t n = a.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    if (std::abs(a[pivot][col]) < 1e-14)
      throw std::runtime_error("singular constraint system (degenerate nulls)");
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const cplx f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<cplx> x(n);
  for (std::size_t ri = n; ri-- > 0;) {
    cplx acc = b[ri];
    for (std::size_t c = ri + 1; c < n; ++c) acc -= a[ri][c] * x[c];
    x[ri] = acc / a[ri][ri];
  }
  return x;
}

// Rotates the solution to a canonical global phase. A common phase factor is
// invisible in the power pattern; the canonical choice makes the weight
// vector conjugate-symmetric with psi_1 in (0, pi], which also reproduces the
// classic first-order dipole instance psi = [pi/2, -pi/2] exactly.
inline void canonicalize_phase(std::vector<cplx>& h) {
  const double gamma =
      -0.5 * (std::arg(h.front()) + std::arg(h.back()));
  const cplx rot = std::polar(1.0, gamma);
  for (cplx& v : h) v *= rot;
  const double psi1 = std::arg(h.front());
  if (!(psi1 > 0.0 && psi1 <= kPi)) {
    for (cplx& v : h) v = -v;
  }
}

}  // namespace detail

// Electrical inter-sensor phase at f0 for endfire incidence:
// phi = w0 * spacing / c = 2*pi*spacing/lambda.
inline double sensor_phase(const ArrayGeometry& geom, double f0_hz) {
  return kTwoPi * f0_hz * geom.spacing_m / geom.sound_speed_mps;
}

inline BeamWeights design_weights(
    const PatternSpec& spec, const ArrayGeometry& geom, double f0_hz,
    const std::vector<MicChannel>& channels,
    Cardioid3Split split = Cardioid3Split::double_at_90) {
  validate(geom);
  const int m = geom.num_mics;
  if (m != spec.order + 1)
    throw std::invalid_argument(
        "order-" + std::to_string(spec.order) + " design needs " +
        std::to_string(spec.order + 1) + " microphones, got " +
        std::to_string(m));
  if (static_cast<int>(channels.size()) != m)
    throw std::invalid_argument("channel list size does not match geometry");

  const double phi = sensor_phase(geom, f0_hz);
  const NullPlacement nulls = null_angles(spec, split);

  std::vector<std::vector<cplx>> a;
  std::vector<cplx> rhs;
  // Distortionless response toward endfire (x = cos 0 = 1).
  {
    std::vector<cplx> row(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) row[i] = std::polar(1.0, -phi * i);
    a.push_back(std::move(row));
    rhs.emplace_back(1.0, 0.0);
  }
  // Null constraints: p-th derivative w.r.t. x of e^{-j i phi x} is
  // (-j i phi)^p e^{-j i phi x}.
  for (const NullSpec& ns : nulls) {
    const double x0 = std::cos(deg_to_rad(ns.angle_deg));
    for (int p = 0; p < ns.multiplicity; ++p) {
      std::vector<cplx> row(static_cast<std::size_t>(m));
      for (int i = 0; i < m; ++i) {
        cplx coef(1.0, 0.0);
        const cplx base(0.0, -phi * i);
        for (int k = 0; k < p; ++k) coef *= base;
        row[i] = coef * std::polar(1.0, -phi * i * x0);
      }
      a.push_back(std::move(row));
      rhs.emplace_back(0.0, 0.0);
    }
  }
  if (a.size() != static_cast<std::size_t>(m))
    throw std::runtime_error("constraint count does not match channel count");

  std::vector<cplx> h = detail::solve_complex(std::move(a), std::move(rhs));
  detail::canonicalize_phase(h);

  BeamWeights w;
  w.magnitude.resize(h.size());
  w.phase_rad.resize(h.size());
  w.compensated.resize(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    w.magnitude[i] = std::abs(h[i]);
    if (!(w.magnitude[i] > 1e-12) || !std::isfinite(w.magnitude[i]))
      throw std::runtime_error("degenerate design: zero-magnitude weight");
    w.phase_rad[i] = std::arg(h[i]);
    const MicChannel& ch = channels[i];
    if (!(ch.gain > 0.0))
      throw std::invalid_argument("channel gain must be > 0");
    w.compensated[i] = h[i] * std::polar(1.0 / ch.gain, -ch.phase_rad);
  }
  return w;
}

// Rebuilds only the channel compensation for fresh per-run gain/phase draws;
// the designed D_i, psi_i are unchanged.
inline void recompensate(BeamWeights& w, const std::vector<MicChannel>& ch) {
  if (ch.size() != w.compensated.size())
    throw std::invalid_argument("channel list size mismatch");
  for (std::size_t i = 0; i < ch.size(); ++i)
    w.compensated[i] =
        w.uncompensated(static_cast<int>(i)) *
        std::polar(1.0 / ch[i].gain, -ch[i].phase_rad);
}

// --- Serialization (audit document; also embedded in sweep manifests) ---

inline nlohmann::json weights_to_json(const BeamWeights& w,
                                      const PatternSpec& spec,
                                      const ArrayGeometry& geom, double f0_hz,
                                      const std::vector<MicChannel>& channels) {
  nlohmann::json j;
  j["pattern"] = to_string(spec.pattern);
  j["order"] = spec.order;
  j["f0_hz"] = f0_hz;
  j["spacing_m"] = geom.spacing_m;
  j["sound_speed_mps"] = geom.sound_speed_mps;
  auto chans = nlohmann::json::array();
  for (std::size_t i = 0; i < w.magnitude.size(); ++i) {
    chans.push_back({{"index", static_cast<int>(i) + 1},
                     {"magnitude", w.magnitude[i]},
                     {"phase_rad", w.phase_rad[i]},
                     {"gain", channels[i].gain},
                     {"mic_phase_rad", channels[i].phase_rad}});
  }
  j["channels"] = std::move(chans);
  return j;
}

inline BeamWeights weights_from_json(const nlohmann::json& j,
                                     std::vector<MicChannel>* channels_out =
                                         nullptr) {
  BeamWeights w;
  std::vector<MicChannel> chans;
  for (const auto& c : j.at("channels")) {
    MicChannel ch;
    ch.index = c.at("index").get<int>();
    ch.gain = c.at("gain").get<double>();
    ch.phase_rad = c.at("mic_phase_rad").get<double>();
    chans.push_back(ch);
    w.magnitude.push_back(c.at("magnitude").get<double>());
    w.phase_rad.push_back(c.at("phase_rad").get<double>());
  }
  w.compensated.resize(w.magnitude.size());
  recompensate(w, chans);
  if (channels_out) *channels_out = std::move(chans);
  return w;
}

}  // namespace dmanull
