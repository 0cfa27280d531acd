#pragma once

// End-to-end experiment drivers: the null-depth table across bit depths, the
// null-width table, single-pattern dumps, and deterministic CSV/plain-text
// writers for all of them. All numeric output is fixed-format so repeated
// runs (any thread count) produce byte-identical files.

#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dmanull/array_model.hpp"
#include "dmanull/common.hpp"
#include "dmanull/measurement.hpp"
#include "dmanull/metrics.hpp"
#include "dmanull/quantization.hpp"
#include "dmanull/weights.hpp"

namespace dmanull {

struct ExperimentConfig {
  double f0_hz = 997.0;
  double sample_rate_hz = 44100.0;
  std::size_t num_samples = 8192;
  double spacing_wavelengths = 0.04;
  double sound_speed_mps = 343.0;
  double amplitude = 1.0;
  double full_scale = 1.0;
  int runs = 5000;
  int nw_runs = 200;
  std::uint64_t seed = 12345;
  double grid_step_deg = 0.1;
  int threads = 1;
  Cardioid3Split split = Cardioid3Split::double_at_90;
  std::vector<Pattern> patterns = {Pattern::dipole, Pattern::cardioid,
                                   Pattern::hypercardioid,
                                   Pattern::supercardioid};
  std::vector<int> orders = {1, 2, 3};
  std::vector<int> bit_depths = {12, 16, 20, 24};      // null-depth table
  std::vector<int> nw_bit_depths = {16};               // null-width table
  std::vector<double> width_depths_db = {-10.0, -20.0, -30.0,
                                         -40.0, -50.0, -60.0};
};

inline ArrayGeometry experiment_geometry(const ExperimentConfig& cfg,
                                         int order) {
  ArrayGeometry g;
  g.num_mics = order + 1;
  g.spacing_m = spacing_from_wavelengths(cfg.spacing_wavelengths, cfg.f0_hz,
                                         cfg.sound_speed_mps);
  g.sound_speed_mps = cfg.sound_speed_mps;
  return g;
}

inline Scenario make_scenario(const ExperimentConfig& cfg,
                              const PatternSpec& spec,
                              std::optional<QuantizerSpec> quantizer) {
  Scenario s;
  s.source.amplitude = cfg.amplitude;
  s.source.frequency_hz = cfg.f0_hz;
  s.source.initial_phase_rad = 0.0;
  s.geometry = experiment_geometry(cfg, spec.order);
  s.channels.resize(static_cast<std::size_t>(s.geometry.num_mics));
  for (std::size_t i = 0; i < s.channels.size(); ++i) {
    s.channels[i].index = static_cast<int>(i) + 1;
    s.channels[i].gain = 1.0;
    s.channels[i].phase_rad = 0.0;
  }
  s.weights =
      design_weights(spec, s.geometry, cfg.f0_hz, s.channels, cfg.split);
  s.quantizer = quantizer;
  s.sampling.sample_rate_hz = cfg.sample_rate_hz;
  s.sampling.num_samples = cfg.num_samples;
  return s;
}

inline MonteCarloConfig make_mc_config(const ExperimentConfig& cfg,
                                       int runs) {
  MonteCarloConfig m;
  m.runs = runs;
  m.master_seed = cfg.seed;
  m.sampling.sample_rate_hz = cfg.sample_rate_hz;
  m.sampling.num_samples = cfg.num_samples;
  m.grid_step_deg = cfg.grid_step_deg;
  m.threads = cfg.threads;
  return m;
}

inline std::vector<std::optional<QuantizerSpec>> quantizer_variants(
    const ExperimentConfig& cfg, const std::vector<int>& bit_depths) {
  std::vector<std::optional<QuantizerSpec>> v;
  v.emplace_back(std::nullopt);
  for (int b : bit_depths) {
    QuantizerSpec q;
    q.bits = b;
    q.full_scale = cfg.full_scale;
    v.emplace_back(q);
  }
  return v;
}

struct NdEntry {
  double theta_deg = 0.0;
  double nd_db = 0.0;
  bool floored = false;
};

struct NdRow {
  Pattern pattern{};
  int order = 0;
  std::optional<int> bits;  // absent = ideal (unquantized)
  std::vector<NdEntry> nulls;
};

struct TableNd {
  ExperimentConfig config;
  std::vector<NdRow> rows;
};

inline TableNd run_table_nd(const ExperimentConfig& cfg) {
  TableNd table;
  table.config = cfg;
  const MonteCarloConfig mcfg = make_mc_config(cfg, cfg.runs);
  const auto variants = quantizer_variants(cfg, cfg.bit_depths);
  for (Pattern p : cfg.patterns)
    for (int order : cfg.orders) {
      const PatternSpec spec{p, order};
      const Scenario base = make_scenario(cfg, spec, std::nullopt);
      const std::vector<MonteCarloResult> res =
          monte_carlo_metrics_multi(mcfg, base, variants, {});
      for (std::size_t v = 0; v < variants.size(); ++v) {
        NdRow row;
        row.pattern = p;
        row.order = order;
        if (variants[v]) row.bits = variants[v]->bits;
        for (const NullResult& nr : res[v].nulls)
          row.nulls.push_back({nr.theta_deg, nr.nd_db, nr.floored});
        table.rows.push_back(std::move(row));
      }
    }
  return table;
}

struct NwEntry {
  double depth_db = 0.0;
  bool applicable = false;
  double width_deg = 0.0;
};

struct NwNull {
  double theta_deg = 0.0;
  double nd_db = 0.0;
  bool floored = false;
  std::vector<NwEntry> widths;
};

struct NwRow {
  Pattern pattern{};
  int order = 0;
  std::optional<int> bits;
  std::vector<NwNull> nulls;
};

struct TableNw {
  ExperimentConfig config;
  std::vector<NwRow> rows;
};

inline TableNw run_table_nw(const ExperimentConfig& cfg) {
  TableNw table;
  table.config = cfg;
  const MonteCarloConfig mcfg = make_mc_config(cfg, cfg.nw_runs);
  const auto variants = quantizer_variants(cfg, cfg.nw_bit_depths);
  for (Pattern p : cfg.patterns)
    for (int order : cfg.orders) {
      const PatternSpec spec{p, order};
      const Scenario base = make_scenario(cfg, spec, std::nullopt);
      const std::vector<MonteCarloResult> res = monte_carlo_metrics_multi(
          mcfg, base, variants, cfg.width_depths_db);
      for (std::size_t v = 0; v < variants.size(); ++v) {
        NwRow row;
        row.pattern = p;
        row.order = order;
        if (variants[v]) row.bits = variants[v]->bits;
        for (const NullResult& nr : res[v].nulls) {
          NwNull nn;
          nn.theta_deg = nr.theta_deg;
          nn.nd_db = nr.nd_db;
          nn.floored = nr.floored;
          for (const DepthWidth& dw : nr.widths)
            nn.widths.push_back({dw.depth_db, dw.applicable, dw.width_deg});
          row.nulls.push_back(std::move(nn));
        }
        table.rows.push_back(std::move(row));
      }
    }
  return table;
}

struct PatternDump {
  ExperimentConfig config;
  PatternSpec spec;
  std::optional<int> bits;
  Beampattern pattern;
  std::vector<NullEstimate> nulls;
};

// One seeded realization (random source and channel phases) of the full
// beampattern plus its refined nulls.
inline PatternDump emit_pattern(const ExperimentConfig& cfg,
                                const PatternSpec& spec,
                                std::optional<QuantizerSpec> quantizer) {
  PatternDump dump;
  dump.config = cfg;
  dump.spec = spec;
  if (quantizer) dump.bits = quantizer->bits;
  Scenario s = make_scenario(cfg, spec, quantizer);
  std::mt19937_64 gen = rng_for_run(cfg.seed, 0);
  s.source.initial_phase_rad = uniform_angle(gen);
  for (MicChannel& ch : s.channels) ch.phase_rad = uniform_angle(gen);
  recompensate(s.weights, s.channels);
  AngleGrid grid;
  grid.step_deg = cfg.grid_step_deg;
  grid.count = static_cast<std::size_t>(std::llround(360.0 / cfg.grid_step_deg));
  dump.pattern = compute_beampattern(s, grid);
  NullSearchOptions nso;
  if (!quantizer) nso.refine_tol_deg = 1e-11;
  dump.nulls = find_nulls(dump.pattern, s, nso);
  return dump;
}

namespace detail {

inline std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

inline std::string bits_label(const std::optional<int>& bits) {
  return bits ? std::to_string(*bits) : std::string("ideal");
}

// Configuration echo shared by the table writers. Deliberately excludes the
// thread count: it must not influence output bytes.
inline void write_config_header(std::ostream& os, const ExperimentConfig& c,
                                int runs) {
  os << "# f0_hz=" << fmt("%.6g", c.f0_hz)
     << " sample_rate_hz=" << fmt("%.6g", c.sample_rate_hz)
     << " num_samples=" << c.num_samples << "\n";
  os << "# spacing_wavelengths=" << fmt("%.6g", c.spacing_wavelengths)
     << " sound_speed_mps=" << fmt("%.6g", c.sound_speed_mps)
     << " amplitude=" << fmt("%.6g", c.amplitude)
     << " full_scale=" << fmt("%.6g", c.full_scale) << "\n";
  os << "# runs=" << runs << " seed=" << c.seed
     << " grid_step_deg=" << fmt("%.6g", c.grid_step_deg)
     << " null_placement=" << split_name(c.split) << "\n";
}

}  // namespace detail

// Machine-readable null-depth table. One line per (pattern, order, variant,
// null); nd_db values at or below the ideal floor carry floor_limited=1 (the
// exact number is then a double-precision artifact, not a physical depth).
inline void write_table_nd_csv(std::ostream& os, const TableNd& t) {
  detail::write_config_header(os, t.config, t.config.runs);
  os << "pattern,order,bits,null_theta_deg,nd_db,floor_limited\n";
  for (const NdRow& row : t.rows)
    for (const NdEntry& e : row.nulls) {
      os << to_string(row.pattern) << ',' << row.order << ','
         << detail::bits_label(row.bits) << ','
         << detail::fmt("%.4f", e.theta_deg) << ','
         << detail::fmt("%.4f", e.nd_db) << ',' << (e.floored ? 1 : 0)
         << "\n";
    }
}

// Human-readable null-depth table; floor-limited depths are starred.
inline void format_table_nd(std::ostream& os, const TableNd& t) {
  os << "null depth (dB), averaged over " << t.config.runs
     << " random-phase runs\n";
  for (const NdRow& row : t.rows)
    for (const NdEntry& e : row.nulls) {
      char line[160];
      std::snprintf(line, sizeof line,
                    "%-14s order %d  %5s-bit  null %8.3f deg  nd %10.2f%s",
                    to_string(row.pattern).c_str(), row.order,
                    detail::bits_label(row.bits).c_str(), e.theta_deg,
                    e.nd_db, e.floored ? "*" : "");
      os << line << "\n";
    }
  os << "* at or below the double-precision floor (ideal null)\n";
}

// Machine-readable null-width table; width_deg holds N.A. when the depth is
// not applicable for that null.
inline void write_table_nw_csv(std::ostream& os, const TableNw& t) {
  detail::write_config_header(os, t.config, t.config.nw_runs);
  os << "pattern,order,bits,null_theta_deg,nd_db,floor_limited,depth_db,"
        "width_deg\n";
  for (const NwRow& row : t.rows)
    for (const NwNull& nn : row.nulls)
      for (const NwEntry& e : nn.widths) {
        os << to_string(row.pattern) << ',' << row.order << ','
           << detail::bits_label(row.bits) << ','
           << detail::fmt("%.4f", nn.theta_deg) << ','
           << detail::fmt("%.4f", nn.nd_db) << ',' << (nn.floored ? 1 : 0)
           << ',' << detail::fmt("%.1f", e.depth_db) << ',';
        if (e.applicable)
          os << detail::fmt("%.4f", e.width_deg);
        else
          os << "N.A.";
        os << "\n";
      }
}

inline void format_table_nw(std::ostream& os, const TableNw& t) {
  os << "null width (deg) at depth d (dB), " << t.config.nw_runs
     << " random-phase runs per quantized entry\n";
  if (!t.rows.empty()) {
    os << "depths:";
    for (const NwEntry& e : t.rows.front().nulls.front().widths)
      os << detail::fmt(" %9.0f", e.depth_db);
    os << "\n";
  }
  for (const NwRow& row : t.rows)
    for (const NwNull& nn : row.nulls) {
      char head[96];
      std::snprintf(head, sizeof head, "%-14s order %d %5s-bit null %8.3f:",
                    to_string(row.pattern).c_str(), row.order,
                    detail::bits_label(row.bits).c_str(), nn.theta_deg);
      os << head;
      for (const NwEntry& e : nn.widths) {
        if (e.applicable)
          os << detail::fmt(" %9.3f", e.width_deg);
        else
          os << "      N.A.";
      }
      os << "\n";
    }
}

inline void write_pattern_csv(std::ostream& os, const PatternDump& d) {
  detail::write_config_header(os, d.config, 1);
  os << "# pattern=" << to_string(d.spec.pattern) << " order=" << d.spec.order
     << " bits=" << detail::bits_label(d.bits) << "\n";
  for (const NullEstimate& ne : d.nulls)
    os << "# null theta_deg=" << detail::fmt("%.6f", ne.theta_deg)
       << " depth_db=" << detail::fmt("%.4f", ne.depth_db) << "\n";
  os << "theta_deg,level_db\n";
  for (std::size_t i = 0; i < d.pattern.theta_deg.size(); ++i)
    os << detail::fmt("%.4f", d.pattern.theta_deg[i]) << ','
       << detail::fmt("%.6f", d.pattern.power_db[i]) << "\n";
}

inline void write_measured_csv(std::ostream& os, const MeasuredPattern& mp) {
  os << "# f0_hz=" << detail::fmt("%.6g", mp.f0_hz) << " noise_floor_db=";
  if (mp.noise_floor_db)
    os << detail::fmt("%.4f", *mp.noise_floor_db);
  else
    os << "none";
  os << "\n";
  os << "theta_deg,level_db,raw_level_db,floor_limited,inband_fraction\n";
  for (const MeasuredPoint& p : mp.points)
    os << detail::fmt("%.4f", p.theta_deg) << ','
       << detail::fmt("%.4f", p.level_db) << ','
       << detail::fmt("%.4f", p.raw_level_db) << ','
       << (p.floor_limited ? 1 : 0) << ','
       << detail::fmt("%.6f", p.inband_fraction) << "\n";
}

}  // namespace dmanull
