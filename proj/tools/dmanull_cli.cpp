// Command-line front end: null-depth / null-width tables, beampattern dumps,
// synthetic measurement fixtures, measurement replay, and the closed-form
// quick checks. Every subcommand that writes files does so deterministically
// for a fixed configuration (thread count never changes output bytes).

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dmanull/experiments.hpp"
#include "dmanull/measurement.hpp"
#include "dmanull/metrics.hpp"

namespace {

struct CommonCli {
  dmanull::ExperimentConfig cfg;
  std::string split = "double_at_90";
  std::vector<std::string> patterns = {"dipole", "cardioid", "hypercardioid",
                                       "supercardioid"};
};

void add_common_options(CLI::App* sub, CommonCli& c) {
  sub->add_option("--f0", c.cfg.f0_hz, "Source frequency in Hz")
      ->capture_default_str();
  sub->add_option("--sample-rate", c.cfg.sample_rate_hz, "Sample rate in Hz")
      ->capture_default_str();
  sub->add_option("--num-samples", c.cfg.num_samples,
                  "Samples per evaluation window")
      ->capture_default_str();
  sub->add_option("--spacing-wavelengths", c.cfg.spacing_wavelengths,
                  "Microphone spacing as a fraction of the wavelength at f0")
      ->capture_default_str();
  sub->add_option("--sound-speed", c.cfg.sound_speed_mps,
                  "Speed of sound in m/s")
      ->capture_default_str();
  sub->add_option("--amplitude", c.cfg.amplitude, "Source amplitude")
      ->capture_default_str();
  sub->add_option("--full-scale", c.cfg.full_scale, "Quantizer full scale")
      ->capture_default_str();
  sub->add_option("--runs", c.cfg.runs,
                  "Random-phase runs per null-depth entry")
      ->capture_default_str();
  sub->add_option("--nw-runs", c.cfg.nw_runs,
                  "Random-phase runs per null-width entry")
      ->capture_default_str();
  sub->add_option("--seed", c.cfg.seed, "Master seed")
      ->capture_default_str();
  sub->add_option("--grid-step", c.cfg.grid_step_deg,
                  "Angular grid step in degrees (must divide 360)")
      ->capture_default_str();
  sub->add_option("--threads", c.cfg.threads,
                  "Worker threads (never affects results)")
      ->capture_default_str();
  sub->add_option("--split", c.split,
                  "Third-order cardioid null placement: double_at_90 or "
                  "double_at_180")
      ->capture_default_str();
  sub->add_option("--patterns", c.patterns,
                  "Patterns to include (comma separated)")
      ->delimiter(',')
      ->capture_default_str();
  sub->add_option("--orders", c.cfg.orders, "Orders to include (1-3)")
      ->delimiter(',')
      ->capture_default_str();
  sub->add_option("--bits", c.cfg.bit_depths,
                  "Bit depths for the null-depth table")
      ->delimiter(',')
      ->capture_default_str();
  sub->add_option("--nw-bits", c.cfg.nw_bit_depths,
                  "Bit depths for the null-width table")
      ->delimiter(',')
      ->capture_default_str();
  sub->add_option("--depths", c.cfg.width_depths_db,
                  "Null-width depths in dB (negative)")
      ->delimiter(',')
      ->capture_default_str();
}

void finalize_common(CommonCli& c) {
  c.cfg.split = c.split == "double_at_180"
                    ? dmanull::Cardioid3Split::double_at_180
                    : dmanull::Cardioid3Split::double_at_90;
  if (c.split != "double_at_90" && c.split != "double_at_180")
    throw CLI::ValidationError("--split",
                               "expected double_at_90 or double_at_180");
  c.cfg.patterns.clear();
  for (const std::string& name : c.patterns)
    c.cfg.patterns.push_back(dmanull::pattern_from_string(name));
}

void write_file(const std::string& path,
                const std::function<void(std::ostream&)>& writer) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  writer(os);
  if (!os) throw std::runtime_error("write failed: " + path);
}

std::optional<dmanull::QuantizerSpec> quantizer_from_bits(int bits,
                                                          double full_scale) {
  if (bits <= 0) return std::nullopt;
  dmanull::QuantizerSpec q;
  q.bits = bits;
  q.full_scale = full_scale;
  return q;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Null depth and null width of quantized differential microphone "
      "arrays"};
  app.require_subcommand(1);
  app.set_config("--config");

  CommonCli nd_cli, nw_cli, pat_cli, fix_cli, meas_cli, ora_cli;
  std::string nd_out, nw_out, pat_out;

  CLI::App* nd = app.add_subcommand(
      "table-nd", "Null depth vs bit depth for every pattern/order");
  add_common_options(nd, nd_cli);
  nd->add_option("--out", nd_out, "CSV output path");

  CLI::App* nw = app.add_subcommand(
      "table-nw", "Null width at several depths, ideal vs quantized");
  add_common_options(nw, nw_cli);
  nw->add_option("--out", nw_out, "CSV output path");

  CLI::App* pat = app.add_subcommand(
      "pattern", "One seeded beampattern realization as CSV");
  add_common_options(pat, pat_cli);
  std::string pat_pattern = "cardioid";
  int pat_order = 1;
  int pat_bits = 0;
  pat->add_option("--pattern", pat_pattern, "Pattern name")
      ->capture_default_str();
  pat->add_option("--order", pat_order, "Design order (1-3)")
      ->capture_default_str();
  pat->add_option("--pattern-bits", pat_bits,
                  "Quantizer bit depth (0 = ideal)")
      ->capture_default_str();
  pat->add_option("--out", pat_out, "CSV output path");

  CLI::App* fix = app.add_subcommand(
      "synth-fixture",
      "Synthesize a measurement sweep: per-angle multichannel WAVs plus "
      "manifest.json");
  add_common_options(fix, fix_cli);
  std::string fix_pattern = "cardioid";
  int fix_order = 1;
  int fix_bits = 16;
  std::string fix_dir;
  std::vector<double> fix_angles;
  std::size_t fix_samples = 46080;
  double fix_noise = 0.0;
  std::uint64_t fix_seed = 777;
  bool fix_no_silence = false;
  double fix_ref_theta = 0.0;
  fix->add_option("--pattern", fix_pattern, "Pattern name")
      ->capture_default_str();
  fix->add_option("--order", fix_order, "Design order (1-3)")
      ->capture_default_str();
  fix->add_option("--fixture-bits", fix_bits,
                  "Quantizer bit depth (0 = ideal, stored as float)")
      ->capture_default_str();
  fix->add_option("--out-dir", fix_dir, "Output directory")->required();
  fix->add_option("--angles", fix_angles, "Sweep angles in degrees")
      ->delimiter(',')
      ->required();
  fix->add_option("--fixture-samples", fix_samples, "Samples per recording")
      ->capture_default_str();
  fix->add_option("--noise-rms", fix_noise,
                  "Gaussian noise RMS added before quantization")
      ->capture_default_str();
  fix->add_option("--fixture-seed", fix_seed, "Sweep seed")
      ->capture_default_str();
  fix->add_flag("--no-silence", fix_no_silence,
                "Skip the silence capture (no noise-floor estimate)");
  fix->add_option("--reference-theta", fix_ref_theta,
                  "Normalization angle (must be in --angles)")
      ->capture_default_str();

  CLI::App* meas = app.add_subcommand(
      "measure", "Re-derive the beampattern from a sweep's recordings");
  add_common_options(meas, meas_cli);
  std::string meas_manifest;
  std::string meas_csv, meas_json;
  meas->add_option("--manifest", meas_manifest,
                   "Sweep manifest.json (or its directory)")
      ->required();
  meas->add_option("--out-csv", meas_csv, "Measured-pattern CSV path");
  meas->add_option("--out-json", meas_json, "Measured-pattern JSON path");

  CLI::App* ora = app.add_subcommand(
      "oracle",
      "Closed-form dipole null depth and the per-design error-model values");
  add_common_options(ora, ora_cli);
  int ora_bits = 16;
  ora->add_option("--oracle-bits", ora_bits, "Quantizer bit depth")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*nd) {
      finalize_common(nd_cli);
      const dmanull::TableNd table = dmanull::run_table_nd(nd_cli.cfg);
      dmanull::format_table_nd(std::cout, table);
      if (!nd_out.empty())
        write_file(nd_out, [&](std::ostream& os) {
          dmanull::write_table_nd_csv(os, table);
        });
    } else if (*nw) {
      finalize_common(nw_cli);
      const dmanull::TableNw table = dmanull::run_table_nw(nw_cli.cfg);
      dmanull::format_table_nw(std::cout, table);
      if (!nw_out.empty())
        write_file(nw_out, [&](std::ostream& os) {
          dmanull::write_table_nw_csv(os, table);
        });
    } else if (*pat) {
      finalize_common(pat_cli);
      const dmanull::PatternSpec spec{
          dmanull::pattern_from_string(pat_pattern), pat_order};
      const dmanull::PatternDump dump = dmanull::emit_pattern(
          pat_cli.cfg, spec,
          quantizer_from_bits(pat_bits, pat_cli.cfg.full_scale));
      for (const dmanull::NullEstimate& ne : dump.nulls) {
        char line[96];
        std::snprintf(line, sizeof line, "null at %10.4f deg, depth %10.2f dB",
                      ne.theta_deg, ne.depth_db);
        std::cout << line << "\n";
      }
      if (!pat_out.empty())
        write_file(pat_out, [&](std::ostream& os) {
          dmanull::write_pattern_csv(os, dump);
        });
    } else if (*fix) {
      finalize_common(fix_cli);
      dmanull::FixtureConfig fc;
      fc.pattern = {dmanull::pattern_from_string(fix_pattern), fix_order};
      fc.split = fix_cli.cfg.split;
      fc.amplitude = fix_cli.cfg.amplitude;
      fc.f0_hz = fix_cli.cfg.f0_hz;
      fc.geometry = dmanull::experiment_geometry(fix_cli.cfg, fix_order);
      fc.sampling.sample_rate_hz = fix_cli.cfg.sample_rate_hz;
      fc.sampling.num_samples = fix_samples;
      fc.quantizer = quantizer_from_bits(fix_bits, fix_cli.cfg.full_scale);
      fc.angles_deg = fix_angles;
      fc.include_silence = !fix_no_silence;
      fc.noise_rms = fix_noise;
      fc.seed = fix_seed;
      fc.reference_theta_deg = fix_ref_theta;
      const dmanull::SweepManifest m = dmanull::synth_fixture(fc, fix_dir);
      std::cout << "wrote " << m.recordings.size() << " recordings"
                << (m.silence_file ? " + silence" : "") << " to " << fix_dir
                << "\n";
    } else if (*meas) {
      finalize_common(meas_cli);
      const dmanull::SweepManifest m = dmanull::load_manifest(meas_manifest);
      const dmanull::MeasuredPattern mp = dmanull::measured_beampattern(m);
      dmanull::write_measured_csv(std::cout, mp);
      const auto stats =
          dmanull::measured_null_stats(mp, meas_cli.cfg.width_depths_db);
      if (stats) {
        char line[96];
        std::snprintf(line, sizeof line,
                      "null: theta %8.3f deg, depth %8.2f dB",
                      stats->theta_deg, stats->depth_db);
        std::cout << line << "\n";
        for (const dmanull::MeasuredWidth& w : stats->widths) {
          if (w.applicable)
            std::snprintf(line, sizeof line, "width at %5.0f dB: %8.3f deg",
                          w.depth_db, w.width_deg);
          else
            std::snprintf(line, sizeof line, "width at %5.0f dB: N.A.",
                          w.depth_db);
          std::cout << line << "\n";
        }
      } else {
        std::cout << "no measured point below -10 dB\n";
      }
      if (!meas_csv.empty())
        write_file(meas_csv, [&](std::ostream& os) {
          dmanull::write_measured_csv(os, mp);
        });
      if (!meas_json.empty())
        write_file(meas_json, [&](std::ostream& os) {
          os << dmanull::measured_pattern_to_json(mp).dump(2) << "\n";
        });
    } else if (*ora) {
      finalize_common(ora_cli);
      dmanull::QuantizerSpec q;
      q.bits = ora_bits;
      q.full_scale = ora_cli.cfg.full_scale;
      const dmanull::ArrayGeometry g2 =
          dmanull::experiment_geometry(ora_cli.cfg, 1);
      char line[128];
      std::snprintf(line, sizeof line,
                    "dipole closed form, %d-bit: %10.2f dB", q.bits,
                    dmanull::dipole_nd_analytic(q, g2, ora_cli.cfg.f0_hz));
      std::cout << line << "\n";
      for (dmanull::Pattern p : ora_cli.cfg.patterns)
        for (int order : ora_cli.cfg.orders) {
          const dmanull::PatternSpec spec{p, order};
          const dmanull::Scenario s =
              dmanull::make_scenario(ora_cli.cfg, spec, std::nullopt);
          std::snprintf(
              line, sizeof line, "%-14s order %d error model: %10.2f dB",
              dmanull::to_string(p).c_str(), order,
              dmanull::quantization_nd_model(s.weights, q,
                                             ora_cli.cfg.amplitude, 1.0));
          std::cout << line << "\n";
        }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
