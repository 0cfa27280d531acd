#pragma once

// Measurement-style evaluation of a beamformer from multichannel recordings:
// synthesizes sweep fixtures to WAV + JSON manifest, and re-derives the
// beampattern from those recordings alone (bandpass, FIR Hilbert quadrature,
// weighted combine, single-frequency power readout, noise-floor handling).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dmanull/array_model.hpp"
#include "dmanull/common.hpp"
#include "dmanull/fir.hpp"
#include "dmanull/quantization.hpp"
#include "dmanull/wav.hpp"
#include "dmanull/weights.hpp"

namespace dmanull {

struct RecordingRef {
  double theta_deg = 0.0;
  std::string file;
};

struct FixtureConfig {
  PatternSpec pattern{Pattern::cardioid, 1};
  Cardioid3Split split = Cardioid3Split::double_at_90;
  double amplitude = 1.0;
  double f0_hz = 997.0;
  ArrayGeometry geometry;
  SamplingSpec sampling{44100.0, 46080};
  std::optional<QuantizerSpec> quantizer;
  std::vector<double> angles_deg;
  bool include_silence = true;
  double noise_rms = 0.0;
  std::uint64_t seed = 777;
  double reference_theta_deg = 0.0;
};

struct SweepManifest {
  FixtureConfig config;
  BeamWeights weights;                // canonical design weights
  std::vector<MicChannel> channels;   // with the sweep's fixed channel phases
  std::vector<RecordingRef> recordings;
  std::optional<std::string> silence_file;
  std::string dir;  // directory holding the manifest and the WAV files
};

inline WavEncoding fixture_encoding(const std::optional<QuantizerSpec>& q) {
  if (!q) return WavEncoding::float32;
  return q->bits <= 16 ? WavEncoding::pcm16 : WavEncoding::pcm24;
}

namespace detail {

inline std::string encoding_name(WavEncoding e) {
  switch (e) {
    case WavEncoding::pcm16: return "pcm16";
    case WavEncoding::pcm24: return "pcm24";
    case WavEncoding::float32: return "float32";
  }
  return "";
}

inline std::string split_name(Cardioid3Split s) {
  return s == Cardioid3Split::double_at_90 ? "double_at_90" : "double_at_180";
}

inline Cardioid3Split split_from_name(const std::string& s) {
  if (s == "double_at_90") return Cardioid3Split::double_at_90;
  if (s == "double_at_180") return Cardioid3Split::double_at_180;
  throw std::invalid_argument("unknown null-placement name: " + s);
}

inline std::string angle_file_name(double theta_deg) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "theta_%07.3f.wav", theta_deg);
  return buf;
}

}  // namespace detail

inline nlohmann::json manifest_to_json(const SweepManifest& m) {
  nlohmann::json j;
  j["format"] = "dmanull-sweep/1";
  j["sample_rate_hz"] = m.config.sampling.sample_rate_hz;
  j["num_samples"] = m.config.sampling.num_samples;
  j["amplitude"] = m.config.amplitude;
  j["noise_rms"] = m.config.noise_rms;
  j["seed"] = m.config.seed;
  j["reference_theta_deg"] = m.config.reference_theta_deg;
  j["null_placement"] = detail::split_name(m.config.split);
  j["encoding"] =
      detail::encoding_name(fixture_encoding(m.config.quantizer));
  if (m.config.quantizer) {
    j["quantizer"] = {{"bits", m.config.quantizer->bits},
                      {"full_scale", m.config.quantizer->full_scale}};
  } else {
    j["quantizer"] = nullptr;
  }
  j["design"] = weights_to_json(m.weights, m.config.pattern,
                                m.config.geometry, m.config.f0_hz,
                                m.channels);
  nlohmann::json recs = nlohmann::json::array();
  for (const RecordingRef& r : m.recordings)
    recs.push_back({{"theta_deg", r.theta_deg}, {"file", r.file}});
  j["recordings"] = std::move(recs);
  if (m.silence_file)
    j["silence_file"] = *m.silence_file;
  else
    j["silence_file"] = nullptr;
  return j;
}

inline SweepManifest manifest_from_json(const nlohmann::json& j,
                                        std::string dir) {
  if (j.value("format", std::string()) != "dmanull-sweep/1")
    throw std::runtime_error("unrecognized sweep manifest format");
  SweepManifest m;
  m.dir = std::move(dir);
  m.config.sampling.sample_rate_hz = j.at("sample_rate_hz").get<double>();
  m.config.sampling.num_samples = j.at("num_samples").get<std::size_t>();
  m.config.amplitude = j.at("amplitude").get<double>();
  m.config.noise_rms = j.value("noise_rms", 0.0);
  m.config.seed = j.value("seed", std::uint64_t{0});
  m.config.reference_theta_deg = j.at("reference_theta_deg").get<double>();
  m.config.split =
      detail::split_from_name(j.value("null_placement", "double_at_90"));
  if (!j.at("quantizer").is_null()) {
    QuantizerSpec q;
    q.bits = j.at("quantizer").at("bits").get<int>();
    q.full_scale = j.at("quantizer").at("full_scale").get<double>();
    m.config.quantizer = q;
  }
  const nlohmann::json& d = j.at("design");
  m.weights = weights_from_json(d, &m.channels);
  m.config.pattern.pattern = pattern_from_string(d.at("pattern"));
  m.config.pattern.order = d.at("order").get<int>();
  m.config.f0_hz = d.at("f0_hz").get<double>();
  m.config.geometry.num_mics = static_cast<int>(m.channels.size());
  m.config.geometry.spacing_m = d.at("spacing_m").get<double>();
  m.config.geometry.sound_speed_mps = d.at("sound_speed_mps").get<double>();
  for (const nlohmann::json& r : j.at("recordings")) {
    RecordingRef ref;
    ref.theta_deg = r.at("theta_deg").get<double>();
    ref.file = r.at("file").get<std::string>();
    m.config.angles_deg.push_back(ref.theta_deg);
    m.recordings.push_back(std::move(ref));
  }
  if (!j.at("silence_file").is_null())
    m.silence_file = j.at("silence_file").get<std::string>();
  m.config.include_silence = m.silence_file.has_value();
  return m;
}

inline SweepManifest load_manifest(const std::string& path) {
  namespace fs = std::filesystem;
  fs::path p(path);
  if (fs::is_directory(p)) p /= "manifest.json";
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open manifest: " + p.string());
  nlohmann::json j;
  in >> j;
  return manifest_from_json(j, p.parent_path().string());
}

// Synthesizes one sweep: each listed angle becomes a multichannel WAV of the
// real (in-phase) microphone signals, quantized when configured. Channel
// phases are drawn once for the whole sweep (fixed hardware); the source
// phase is drawn fresh per angle. A silence capture provides the noise
// floor. Writes manifest.json plus the WAVs into out_dir.
inline SweepManifest synth_fixture(const FixtureConfig& cfg,
                                   const std::string& out_dir) {
  namespace fs = std::filesystem;
  if (cfg.angles_deg.empty())
    throw std::invalid_argument("fixture needs at least one angle");
  validate(cfg.geometry);
  if (cfg.quantizer) validate(*cfg.quantizer);

  SweepManifest m;
  m.config = cfg;
  m.dir = out_dir;

  // Fixed per-sweep channel phases.
  std::mt19937_64 gen0 = rng_for_run(cfg.seed, 0);
  m.channels.resize(static_cast<std::size_t>(cfg.geometry.num_mics));
  for (std::size_t i = 0; i < m.channels.size(); ++i) {
    m.channels[i].index = static_cast<int>(i) + 1;
    m.channels[i].gain = 1.0;
    m.channels[i].phase_rad = uniform_angle(gen0);
  }
  m.weights = design_weights(cfg.pattern, cfg.geometry, cfg.f0_hz, m.channels,
                             cfg.split);

  fs::create_directories(out_dir);
  const WavEncoding enc = fixture_encoding(cfg.quantizer);
  std::optional<Quantizer> quant;
  if (cfg.quantizer) quant.emplace(*cfg.quantizer);

  const auto write_capture = [&](const std::string& file,
                                 std::optional<double> theta_deg,
                                 std::uint64_t run_index) {
    std::mt19937_64 gen = rng_for_run(cfg.seed, run_index);
    SourceSpec src;
    src.amplitude = cfg.amplitude;
    src.frequency_hz = cfg.f0_hz;
    src.initial_phase_rad = uniform_angle(gen);
    WavData wav;
    wav.sample_rate_hz = cfg.sampling.sample_rate_hz;
    wav.encoding = enc;
    wav.channels.resize(m.channels.size());
    std::normal_distribution<double> noise(0.0, cfg.noise_rms);
    for (std::size_t i = 0; i < m.channels.size(); ++i) {
      std::vector<double> x;
      if (theta_deg) {
        auto [in_phase, quadrature] = synth_channel(
            src, cfg.geometry, m.channels[i], *theta_deg, cfg.sampling);
        x = std::move(in_phase);
        (void)quadrature;  // recordings carry only the real signal
      } else {
        x.assign(cfg.sampling.num_samples, 0.0);
      }
      if (cfg.noise_rms > 0.0)
        for (double& v : x) v += noise(gen);
      if (quant) quant->apply(x);
      wav.channels[i] = std::move(x);
    }
    write_wav((fs::path(out_dir) / file).string(), wav);
  };

  for (std::size_t k = 0; k < cfg.angles_deg.size(); ++k) {
    RecordingRef ref;
    ref.theta_deg = cfg.angles_deg[k];
    ref.file = detail::angle_file_name(ref.theta_deg);
    write_capture(ref.file, ref.theta_deg, k + 1);
    m.recordings.push_back(std::move(ref));
  }
  if (cfg.include_silence) {
    m.silence_file = "silence.wav";
    write_capture(*m.silence_file, std::nullopt,
                  cfg.angles_deg.size() + 1);
  }

  std::ofstream out(fs::path(out_dir) / "manifest.json");
  if (!out) throw std::runtime_error("cannot write manifest in: " + out_dir);
  out << manifest_to_json(m).dump(2) << '\n';
  return m;
}

inline WavData load_recording(const std::string& path) {
  return read_wav(path);
}

struct MeasurementOptions {
  std::size_t bandpass_taps = 511;
  std::size_t hilbert_taps = 1023;
  double band_half_width_hz = 50.0;
  std::size_t analysis_start = 1024;
  std::size_t analysis_length = 44100;
  double floor_margin_db = 3.0;
};

inline std::vector<double> bandpass_filter(const std::vector<double>& x,
                                           double fs_hz, double f0_hz,
                                           const MeasurementOptions& opt = {}) {
  const std::vector<double> h =
      design_bandpass(opt.bandpass_taps, fs_hz, f0_hz - opt.band_half_width_hz,
                      f0_hz + opt.band_half_width_hz, f0_hz);
  return convolve_same(x, h);
}

struct MeasuredPoint {
  double theta_deg = 0.0;
  double level_db = 0.0;      // normalized; floor-clamped when flagged
  double raw_level_db = 0.0;  // normalized, unclamped
  bool floor_limited = false;
  double inband_fraction = 0.0;  // tone power / broadband power (diagnostic)
};

struct MeasuredPattern {
  std::vector<MeasuredPoint> points;  // in manifest order
  std::optional<double> noise_floor_db;
  double ref_power = 0.0;  // linear tone power at the reference angle
  double f0_hz = 0.0;
};

// Re-derives the beampattern from the sweep's recordings alone: bandpass
// around f0, FIR Hilbert for the quadrature, weighted combine with the
// manifest's calibration (gains/phases), then the f0-component power of a
// steady-state segment. Levels are normalized to the reference angle, which
// therefore reads exactly 0 dB.
inline MeasuredPattern measured_beampattern(const SweepManifest& m,
                                            const MeasurementOptions& opt = {}) {
  namespace fs = std::filesystem;
  const double fs_hz = m.config.sampling.sample_rate_hz;
  const double f0 = m.config.f0_hz;
  const std::size_t edge = (std::max(opt.bandpass_taps, opt.hilbert_taps) - 1) / 2;
  if (opt.analysis_start < edge ||
      opt.analysis_start + opt.analysis_length + edge >
          m.config.sampling.num_samples)
    throw std::invalid_argument(
        "analysis segment does not fit inside the recordings");

  const std::vector<double> hbp =
      design_bandpass(opt.bandpass_taps, fs_hz,
                      f0 - opt.band_half_width_hz,
                      f0 + opt.band_half_width_hz, f0);
  const std::vector<double> hh = design_hilbert(opt.hilbert_taps, fs_hz, f0);

  BeamWeights w = m.weights;
  recompensate(w, m.channels);

  const auto capture_power = [&](const std::string& file, double* inband) {
    const WavData wav = load_recording((fs::path(m.dir) / file).string());
    if (wav.channels.size() != m.channels.size())
      throw std::runtime_error("channel count mismatch in: " + file);
    if (wav.sample_rate_hz != fs_hz)
      throw std::runtime_error("sample rate mismatch in: " + file);
    std::vector<double> u(wav.channels.front().size(), 0.0);
    for (std::size_t i = 0; i < wav.channels.size(); ++i) {
      const std::vector<double> xf = convolve_same(wav.channels[i], hbp);
      const std::vector<double> xq = convolve_same(xf, hh);
      const double wr = w.compensated[i].real();
      const double wi = w.compensated[i].imag();
      for (std::size_t n = 0; n < u.size(); ++n)
        u[n] += wr * xf[n] - wi * xq[n];
    }
    const double p =
        tone_power(u, opt.analysis_start, opt.analysis_length, f0, fs_hz);
    if (inband) {
      const double pb =
          segment_power(u, opt.analysis_start, opt.analysis_length);
      *inband = pb > 0.0 ? p / pb : 0.0;
    }
    return p;
  };

  MeasuredPattern out;
  out.f0_hz = f0;
  std::vector<double> powers(m.recordings.size());
  std::vector<double> inband(m.recordings.size());
  std::ptrdiff_t ref_idx = -1;
  for (std::size_t k = 0; k < m.recordings.size(); ++k) {
    powers[k] = capture_power(m.recordings[k].file, &inband[k]);
    if (std::abs(m.recordings[k].theta_deg - m.config.reference_theta_deg) <
        1e-9)
      ref_idx = static_cast<std::ptrdiff_t>(k);
  }
  if (ref_idx < 0)
    throw std::runtime_error("sweep lacks the reference angle capture");
  out.ref_power = powers[static_cast<std::size_t>(ref_idx)];
  if (!(out.ref_power > 0.0))
    throw std::runtime_error("reference capture has no tone power");

  double floor_db = -std::numeric_limits<double>::infinity();
  if (m.silence_file) {
    const double pf = capture_power(*m.silence_file, nullptr);
    if (pf > 0.0) {
      floor_db = power_to_db(pf / out.ref_power);
      out.noise_floor_db = floor_db;
    }
  }

  for (std::size_t k = 0; k < m.recordings.size(); ++k) {
    MeasuredPoint pt;
    pt.theta_deg = m.recordings[k].theta_deg;
    pt.raw_level_db = power_to_db(powers[k] / out.ref_power);
    pt.inband_fraction = inband[k];
    pt.floor_limited = out.noise_floor_db &&
                       pt.raw_level_db <= floor_db + opt.floor_margin_db;
    pt.level_db =
        pt.floor_limited ? std::max(pt.raw_level_db, floor_db)
                         : pt.raw_level_db;
    out.points.push_back(pt);
  }
  return out;
}

struct MeasuredWidth {
  double depth_db = 0.0;
  bool applicable = false;
  double width_deg = 0.0;
  double left_deg = 0.0;
  double right_deg = 0.0;
};

struct MeasuredNullStats {
  double theta_deg = 0.0;  // angle of the deepest measured point
  double depth_db = 0.0;
  std::vector<MeasuredWidth> widths;
};

// Null statistics from the sparse measured grid: the deepest point below
// threshold_db is the null; widths use linear-in-dB interpolation between
// neighboring measured points. Angles fold onto [0, 180] (duplicates are
// power-averaged) and walks past 0 or 180 continue onto the array's mirror
// image, so a null at the fold boundary still gets a two-sided width. The
// dense-grid bounding-lobe rule applies unchanged.
inline std::optional<MeasuredNullStats> measured_null_stats(
    const MeasuredPattern& mp, const std::vector<double>& depths_db,
    double threshold_db = -10.0, double lobe_prominence_db = 3.0) {
  // Fold and combine duplicate angles (averaging in the linear domain).
  std::vector<std::pair<double, double>> folded;  // (theta, level_db)
  for (const MeasuredPoint& p : mp.points)
    folded.emplace_back(fold_angle_deg(p.theta_deg), p.level_db);
  std::sort(folded.begin(), folded.end());
  std::vector<double> theta, level;
  for (std::size_t i = 0; i < folded.size();) {
    std::size_t j = i;
    double acc = 0.0;
    while (j < folded.size() && folded[j].first - folded[i].first < 1e-9) {
      acc += db_to_power(folded[j].second);
      ++j;
    }
    theta.push_back(folded[i].first);
    level.push_back(power_to_db(acc / static_cast<double>(j - i)));
    i = j;
  }
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(theta.size());
  if (n < 3) return std::nullopt;

  // Virtual index: reflection at both ends continues onto the mirror image.
  const auto v_idx = [&](std::ptrdiff_t i) {
    if (i < 0) i = -i;
    if (i > n - 1) i = 2 * (n - 1) - i;
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, n - 1));
  };
  const auto v_theta = [&](std::ptrdiff_t i) {
    if (i < 0) return -theta[v_idx(i)];
    if (i > n - 1) return 360.0 - theta[v_idx(i)];
    return theta[static_cast<std::size_t>(i)];
  };
  const auto v_level = [&](std::ptrdiff_t i) { return level[v_idx(i)]; };

  std::ptrdiff_t imin = -1;
  for (std::ptrdiff_t i = 0; i < n; ++i)
    if (level[static_cast<std::size_t>(i)] < threshold_db &&
        (imin < 0 || level[static_cast<std::size_t>(i)] <
                         level[static_cast<std::size_t>(imin)]))
      imin = i;
  if (imin < 0) return std::nullopt;

  MeasuredNullStats st;
  st.theta_deg = theta[static_cast<std::size_t>(imin)];
  st.depth_db = level[static_cast<std::size_t>(imin)];

  const auto side = [&](double depth, int dir) -> std::optional<double> {
    double run_min = st.depth_db;
    std::ptrdiff_t prev = imin;
    for (std::ptrdiff_t s = 1; s < 2 * n; ++s) {
      const std::ptrdiff_t i = imin + dir * s;
      if (i <= -(n - 1) || i >= 2 * (n - 1)) break;  // mirror span exhausted
      const double p = v_level(i);
      const double pt = v_theta(i);
      const double q = v_level(prev);
      const double qt = v_theta(prev);
      if (p > depth) {
        const double f = (depth - q) / (p - q);
        return qt + f * (pt - qt);
      }
      run_min = std::min(run_min, p);
      if (p >= v_level(i - dir) && p >= v_level(i + dir) &&
          p >= run_min + lobe_prominence_db)
        return std::nullopt;
      prev = i;
    }
    return std::nullopt;  // never rose above the depth within the span
  };

  for (double d : depths_db) {
    MeasuredWidth w;
    w.depth_db = d;
    if (st.depth_db <= d) {
      const std::optional<double> l = side(d, -1);
      const std::optional<double> r = side(d, +1);
      if (l && r) {
        w.applicable = true;
        w.left_deg = *l;
        w.right_deg = *r;
        w.width_deg = *r - *l;
      }
    }
    st.widths.push_back(w);
  }
  return st;
}

inline nlohmann::json measured_pattern_to_json(const MeasuredPattern& mp) {
  nlohmann::json j;
  j["f0_hz"] = mp.f0_hz;
  if (mp.noise_floor_db)
    j["noise_floor_db"] = *mp.noise_floor_db;
  else
    j["noise_floor_db"] = nullptr;
  nlohmann::json pts = nlohmann::json::array();
  for (const MeasuredPoint& p : mp.points) {
    pts.push_back({{"theta_deg", p.theta_deg},
                   {"level_db", p.level_db},
                   {"raw_level_db", p.raw_level_db},
                   {"floor_limited", p.floor_limited},
                   {"inband_fraction", p.inband_fraction}});
  }
  j["points"] = std::move(pts);
  return j;
}

}  // namespace dmanull
