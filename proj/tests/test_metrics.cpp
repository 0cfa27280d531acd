#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <optional>
#include <vector>

#include "dmanull/common.hpp"
#include "dmanull/experiments.hpp"
#include "dmanull/metrics.hpp"

using namespace dmanull;

namespace {

ExperimentConfig base_config() {
  ExperimentConfig cfg;  // defaults: f0 997, fs 44100, L 8192, 0.04 lambda
  return cfg;
}

std::optional<QuantizerSpec> qspec(int bits) {
  if (bits <= 0) return std::nullopt;
  return QuantizerSpec{bits, 1.0};
}

MonteCarloResult run_mc(Pattern p, int order, int bits,
                        const std::vector<double>& depths, int runs,
                        int threads = 1) {
  const ExperimentConfig cfg = base_config();
  const Scenario s = make_scenario(cfg, {p, order}, qspec(bits));
  MonteCarloConfig mc = make_mc_config(cfg, runs);
  mc.threads = threads;
  return monte_carlo_metrics(mc, s, depths);
}

const std::vector<std::pair<Pattern, const char*>> kPatterns = {
    {Pattern::dipole, "dipole"},
    {Pattern::cardioid, "cardioid"},
    {Pattern::hypercardioid, "hypercardioid"},
    {Pattern::supercardioid, "supercardioid"}};

}  // namespace

TEST_CASE("ideal nulls reach the numeric floor at design angles", "[metrics]") {
  for (const auto& [pat, name] : kPatterns) {
    for (int order = 1; order <= 3; ++order) {
      INFO(name << " order " << order);
      const MonteCarloResult res = run_mc(pat, order, 0, {}, 1);
      const NullPlacement placement = null_angles({pat, order});
      REQUIRE(res.nulls.size() == placement.size());
      CHECK(res.peak_theta_deg == 0.0);
      for (std::size_t j = 0; j < placement.size(); ++j) {
        INFO("null at " << placement[j].angle_deg);
        CHECK(std::abs(res.nulls[j].theta_deg - placement[j].angle_deg) <
              2e-3);
        CHECK(res.nulls[j].nd_db <= -240.0);
        CHECK(res.nulls[j].floored);
      }
    }
  }
}

TEST_CASE("beampattern normalization pins exactly one maximum", "[metrics]") {
  const ExperimentConfig cfg = base_config();
  const Scenario s =
      make_scenario(cfg, {Pattern::cardioid, 1}, qspec(16));
  AngleGrid grid;
  grid.step_deg = 0.5;
  grid.count = 720;
  const Beampattern bp = compute_beampattern(s, grid);
  REQUIRE(bp.power_db.size() == 720);
  int zeros = 0;
  double max_db = -1e9;
  for (double v : bp.power_db) {
    if (v == 0.0) ++zeros;
    max_db = std::max(max_db, v);
  }
  CHECK(zeros == 1);
  CHECK(max_db == 0.0);
  CHECK(bp.power_db[bp.peak_index] == 0.0);
  CHECK(bp.ref_power > 0.0);
}

TEST_CASE("mirrored sweep equals the full-circle sweep", "[metrics]") {
  const ExperimentConfig cfg = base_config();
  const Scenario s = make_scenario(cfg, {Pattern::supercardioid, 2},
                                   std::nullopt);
  AngleGrid grid;
  grid.step_deg = 0.5;
  grid.count = 720;
  const Beampattern full = compute_beampattern(s, grid);
  ScenarioEvaluator eval(s, {});
  const Beampattern half = mirrored_beampattern(eval, 0.5);
  REQUIRE(half.power_db.size() == full.power_db.size());
  for (std::size_t k = 0; k < full.power_db.size(); ++k)
    REQUIRE(half.power_db[k] == full.power_db[k]);
  CHECK(half.ref_power == full.ref_power);
  CHECK_THROWS_AS(mirrored_beampattern(eval, 0.7), std::invalid_argument);
}

TEST_CASE("null census per design", "[metrics]") {
  struct Expect {
    Pattern p;
    int order;
    std::vector<double> nulls_deg;
    double margin;
  };
  // A triple-multiplicity zero has a rounding-noise basin several
  // millidegrees wide at the numeric floor, so its located minimum gets a
  // looser margin than simple zeros.
  const std::vector<Expect> table = {
      {Pattern::dipole, 3, {90.0}, 1e-2},  // triple null, single minimum
      {Pattern::cardioid, 2, {90.0, 180.0}, 1e-3},
      {Pattern::hypercardioid, 3, {55.0, 100.0, 145.0}, 1e-3},
      {Pattern::supercardioid, 3, {97.0, 122.0, 153.0}, 1e-3}};
  for (const Expect& e : table) {
    INFO(to_string(e.p) << " order " << e.order);
    const MonteCarloResult res = run_mc(e.p, e.order, 0, {}, 1);
    REQUIRE(res.nulls.size() == e.nulls_deg.size());
    for (std::size_t j = 0; j < e.nulls_deg.size(); ++j)
      CHECK(res.nulls[j].theta_deg ==
            Catch::Approx(e.nulls_deg[j]).margin(e.margin));
  }
}

TEST_CASE("ideal null widths match reference values", "[metrics]") {
  // Width of the notch around each null at several depths below the maximum,
  // ideal (unquantized) patterns. Frozen from an independent implementation.
  SECTION("first-order at -10 dB") {
    const std::vector<std::pair<Pattern, double>> expect = {
        {Pattern::dipole, 36.78},
        {Pattern::cardioid, 136.13},
        {Pattern::hypercardioid, 74.75}};
    for (const auto& [pat, width] : expect) {
      INFO(to_string(pat));
      const MonteCarloResult res = run_mc(pat, 1, 0, {-10.0}, 1);
      REQUIRE(res.nulls.size() == 1);
      REQUIRE(res.nulls[0].widths.size() == 1);
      CHECK(res.nulls[0].widths[0].applicable);
      CHECK(res.nulls[0].widths[0].width_deg ==
            Catch::Approx(width).margin(0.05));
    }
    // The supercardioid's rear lobe rises above -10 dB, so no width exists.
    const MonteCarloResult sup = run_mc(Pattern::supercardioid, 1, 0,
                                        {-10.0}, 1);
    REQUIRE(sup.nulls[0].widths.size() == 1);
    CHECK_FALSE(sup.nulls[0].widths[0].applicable);
  }

  SECTION("dipole depth progression") {
    const std::vector<double> depths = {-10.0, -20.0, -30.0,
                                        -40.0, -50.0, -60.0};
    const std::vector<double> expect = {36.78, 11.45, 3.615,
                                        1.147, 0.371, 0.197};
    const MonteCarloResult res = run_mc(Pattern::dipole, 1, 0, depths, 1);
    REQUIRE(res.nulls.size() == 1);
    REQUIRE(res.nulls[0].widths.size() == depths.size());
    double prev = 1e9;
    for (std::size_t k = 0; k < depths.size(); ++k) {
      INFO("depth " << depths[k]);
      const DepthWidth& dw = res.nulls[0].widths[k];
      REQUIRE(dw.applicable);
      CHECK(dw.width_deg == Catch::Approx(expect[k]).margin(0.05));
      CHECK(dw.width_deg < prev);  // deeper cut => narrower notch
      prev = dw.width_deg;
    }
  }

  SECTION("higher orders and multiple nulls") {
    {
      const MonteCarloResult res = run_mc(Pattern::cardioid, 2, 0,
                                          {-10.0, -20.0}, 1);
      REQUIRE(res.nulls.size() == 2);
      // At -10 dB the two notches merge into the shared low region: no
      // independent width on either null.
      CHECK_FALSE(res.nulls[0].widths[0].applicable);
      CHECK_FALSE(res.nulls[1].widths[0].applicable);
      CHECK(res.nulls[0].widths[1].applicable);
      CHECK(res.nulls[0].widths[1].width_deg ==
            Catch::Approx(25.50).margin(0.05));
      CHECK(res.nulls[1].widths[1].applicable);
      CHECK(res.nulls[1].widths[1].width_deg ==
            Catch::Approx(86.44).margin(0.05));
    }
    {
      const MonteCarloResult res = run_mc(Pattern::supercardioid, 2, 0,
                                          {-20.0, -30.0}, 1);
      REQUIRE(res.nulls.size() == 2);
      CHECK_FALSE(res.nulls[0].widths[0].applicable);
      CHECK_FALSE(res.nulls[1].widths[0].applicable);
      CHECK(res.nulls[0].widths[1].width_deg ==
            Catch::Approx(16.52).margin(0.05));
      CHECK(res.nulls[1].widths[1].width_deg ==
            Catch::Approx(38.42).margin(0.05));
    }
    {
      const MonteCarloResult res = run_mc(Pattern::cardioid, 3, 0,
                                          {-30.0}, 1);
      REQUIRE(res.nulls.size() == 2);
      CHECK(res.nulls[0].widths[0].width_deg ==
            Catch::Approx(30.40).margin(0.05));
      CHECK(res.nulls[1].widths[0].width_deg ==
            Catch::Approx(43.99).margin(0.05));
    }
    {
      const MonteCarloResult res = run_mc(Pattern::hypercardioid, 3, 0,
                                          {-20.0}, 1);
      REQUIRE(res.nulls.size() == 3);
      CHECK(res.nulls[0].widths[0].width_deg ==
            Catch::Approx(12.87).margin(0.05));
      CHECK(res.nulls[1].widths[0].width_deg ==
            Catch::Approx(24.28).margin(0.05));
      CHECK(res.nulls[2].widths[0].width_deg ==
            Catch::Approx(22.15).margin(0.05));
    }
  }

  SECTION("notch broadens with pattern order") {
    const double w1 = run_mc(Pattern::dipole, 1, 0, {-10.0}, 1)
                          .nulls[0].widths[0].width_deg;
    const double w2 = run_mc(Pattern::dipole, 2, 0, {-10.0}, 1)
                          .nulls[0].widths[0].width_deg;
    const double w3 = run_mc(Pattern::dipole, 3, 0, {-10.0}, 1)
                          .nulls[0].widths[0].width_deg;
    CHECK(w1 == Catch::Approx(36.78).margin(0.05));
    CHECK(w2 == Catch::Approx(68.30).margin(0.05));
    CHECK(w3 == Catch::Approx(85.74).margin(0.05));
    CHECK(w1 < w2);
    CHECK(w2 < w3);
  }
}

TEST_CASE("quantized null widths match reference values", "[metrics]") {
  // 16-bit quantization; widths at levels well above the quantization floor
  // are insensitive to the per-run phase draws, so a modest run count pins
  // them tightly.
  SECTION("first-order at -30 dB") {
    const std::vector<std::pair<Pattern, double>> expect = {
        {Pattern::dipole, 3.615},
        {Pattern::cardioid, 40.76},
        {Pattern::hypercardioid, 6.246},
        {Pattern::supercardioid, 8.716}};
    for (const auto& [pat, width] : expect) {
      INFO(to_string(pat));
      const MonteCarloResult res = run_mc(pat, 1, 16, {-30.0}, 50);
      REQUIRE(res.nulls.size() == 1);
      const DepthWidth& dw = res.nulls[0].widths[0];
      REQUIRE(dw.applicable);
      CHECK(dw.width_deg == Catch::Approx(width).margin(0.05));
    }
  }

  SECTION("first-order cardioid at -40 dB") {
    const MonteCarloResult res = run_mc(Pattern::cardioid, 1, 16, {-40.0}, 50);
    CHECK(res.nulls[0].widths[0].width_deg ==
          Catch::Approx(22.84).margin(0.05));
  }

  SECTION("quantization cannot narrow a notch") {
    const double ideal = run_mc(Pattern::dipole, 1, 0, {-10.0}, 1)
                             .nulls[0].widths[0].width_deg;
    const double coarse = run_mc(Pattern::dipole, 1, 16, {-10.0}, 30)
                              .nulls[0].widths[0].width_deg;
    // Per-run crossing interpolation jitters by a few millidegrees, so the
    // "no narrower" claim holds at that scale, not exactly.
    CHECK(coarse >= ideal - 0.01);
    CHECK(coarse - ideal < 0.5);  // at -10 dB, 16-bit error is negligible
  }

  SECTION("width near the quantization floor stays ordered") {
    const MonteCarloResult res =
        run_mc(Pattern::cardioid, 3, 16, {-50.0}, 30);
    REQUIRE(res.nulls.size() == 2);
    const DepthWidth& near_broadside = res.nulls[0].widths[0];
    const DepthWidth& rear = res.nulls[1].widths[0];
    REQUIRE(near_broadside.applicable);
    REQUIRE(rear.applicable);
    CHECK(near_broadside.width_deg > 0.0);
    CHECK(near_broadside.width_deg < rear.width_deg);
  }

  SECTION("depth below the achieved null depth is not applicable") {
    // Third-order dipole at 12 bits floors near -25 dB, so a -30 dB width
    // does not exist.
    const MonteCarloResult res = run_mc(Pattern::dipole, 3, 12, {-30.0}, 30);
    REQUIRE(res.nulls.size() == 1);
    CHECK(res.nulls[0].nd_db > -30.0);
    CHECK_FALSE(res.nulls[0].widths[0].applicable);
  }
}

TEST_CASE("quantized null depth matches the analytic dipole value",
          "[metrics]") {
  const ExperimentConfig cfg = base_config();
  const ArrayGeometry g = experiment_geometry(cfg, 1);

  for (int bits : {12, 16, 20, 24}) {
    const Scenario s = make_scenario(cfg, {Pattern::dipole, 1}, qspec(bits));
    const double analytic = dipole_nd_analytic(*s.quantizer, g, cfg.f0_hz);
    const double general = quantization_nd_model(s.weights, *s.quantizer,
                                                 cfg.amplitude, 1.0);
    CHECK(analytic == Catch::Approx(general).margin(1e-9));
  }

  // Simulation against closed form (fixed seed; full-scale excitation adds a
  // small positive saturation excess, the tolerance covers it).
  const Scenario s = make_scenario(cfg, {Pattern::dipole, 1}, qspec(16));
  const MonteCarloResult res =
      monte_carlo_metrics(make_mc_config(cfg, 100), s, {});
  const double analytic = dipole_nd_analytic(*s.quantizer, g, cfg.f0_hz);
  CHECK(res.nulls[0].nd_db == Catch::Approx(analytic).margin(0.5));

  ArrayGeometry too_many = g;
  too_many.num_mics = 3;
  CHECK_THROWS_AS(dipole_nd_analytic({16, 1.0}, too_many, cfg.f0_hz),
                  std::invalid_argument);
}

TEST_CASE("four more bits buy about 24 dB of depth", "[metrics]") {
  const ExperimentConfig cfg = base_config();
  const Scenario s = make_scenario(cfg, {Pattern::dipole, 1}, std::nullopt);
  const std::vector<std::optional<QuantizerSpec>> variants = {
      QuantizerSpec{12, 1.0}, QuantizerSpec{16, 1.0}};
  const auto res = monte_carlo_metrics_multi(make_mc_config(cfg, 50), s,
                                             variants, {});
  REQUIRE(res.size() == 2);
  const double slope = res[0].nulls[0].nd_db - res[1].nulls[0].nd_db;
  CHECK(slope == Catch::Approx(24.08).margin(1.0));
}

TEST_CASE("simulation runs are deterministic", "[metrics]") {
  const ExperimentConfig cfg = base_config();
  const Scenario s = make_scenario(cfg, {Pattern::cardioid, 1}, qspec(16));

  const auto run_with_threads = [&](int threads) {
    MonteCarloConfig mc = make_mc_config(cfg, 20);
    mc.threads = threads;
    return monte_carlo_metrics(mc, s, {-30.0});
  };

  const MonteCarloResult a = run_with_threads(1);
  const MonteCarloResult b = run_with_threads(1);
  const MonteCarloResult c = run_with_threads(3);
  REQUIRE(a.nulls.size() == 1);
  // Bit-for-bit reproducibility, including across thread counts.
  CHECK(a.nulls[0].nd_db == b.nulls[0].nd_db);
  CHECK(a.nulls[0].nd_db == c.nulls[0].nd_db);
  CHECK(a.nulls[0].widths[0].width_deg == b.nulls[0].widths[0].width_deg);
  CHECK(a.nulls[0].widths[0].width_deg == c.nulls[0].widths[0].width_deg);

  // A different master seed moves the estimate (sanity that the seed is
  // actually wired through).
  MonteCarloConfig mc = make_mc_config(cfg, 20);
  mc.master_seed = 999;
  const MonteCarloResult d = monte_carlo_metrics(mc, s, {-30.0});
  CHECK(d.nulls[0].nd_db != a.nulls[0].nd_db);
}

TEST_CASE("evaluator multi-depth call matches single-depth calls",
          "[metrics]") {
  const ExperimentConfig cfg = base_config();
  Scenario s = make_scenario(cfg, {Pattern::hypercardioid, 1}, std::nullopt);
  s.source.initial_phase_rad = 0.41;

  std::vector<std::optional<QuantizerSpec>> depths = {
      std::nullopt, QuantizerSpec{12, 1.0}, QuantizerSpec{20, 1.0}};
  ScenarioEvaluator multi(s, depths);
  REQUIRE(multi.depth_count() == 3);
  std::vector<double> got(3);
  multi.power_at(67.3, got.data());

  for (std::size_t k = 0; k < depths.size(); ++k) {
    Scenario single = s;
    single.quantizer = depths[k];
    ScenarioEvaluator eval(single, {});
    REQUIRE(eval.power_at(67.3) == got[k]);
  }

  CHECK_THROWS_AS(multi.power_at(10.0), std::logic_error);
}

TEST_CASE("scenario validation", "[metrics]") {
  const ExperimentConfig cfg = base_config();
  Scenario s = make_scenario(cfg, {Pattern::dipole, 1}, qspec(16));
  CHECK_NOTHROW(validate(s));
  Scenario bad = s;
  bad.channels.pop_back();
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  Scenario bad_q = s;
  bad_q.quantizer = QuantizerSpec{0, 1.0};
  CHECK_THROWS_AS(validate(bad_q), std::invalid_argument);
}
