#pragma once

// Beampattern sweeps, null detection and refinement, null width at a given
// depth, Monte-Carlo aggregation over random channel/source phases, and the
// closed-form first-order dipole null-depth reference.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "dmanull/array_model.hpp"
#include "dmanull/beamformer.hpp"
#include "dmanull/common.hpp"
#include "dmanull/quantization.hpp"
#include "dmanull/weights.hpp"

namespace dmanull {

// Unquantized nulls deeper than this are reported as floor-limited ideal
// nulls (the exact depth is an artifact of double-precision accumulation).
inline constexpr double kIdealFloorDb = -190.0;

struct Scenario {
  SourceSpec source;
  ArrayGeometry geometry;
  std::vector<MicChannel> channels;
  std::optional<QuantizerSpec> quantizer;  // absent => ideal (unquantized)
  BeamWeights weights;
  SamplingSpec sampling;
};

inline void validate(const Scenario& s) {
  validate(s.source, s.sampling);
  validate(s.geometry);
  if (static_cast<int>(s.channels.size()) != s.geometry.num_mics)
    throw std::invalid_argument("scenario channel count mismatch");
  if (s.weights.num_channels() != s.geometry.num_mics)
    throw std::invalid_argument("scenario weight count mismatch");
  if (s.quantizer) validate(*s.quantizer);
}

// Evaluates the mean-square beamformed output power at arbitrary incidence
// angles, optionally for several quantizer depths that share one channel
// synthesis (the synthesis is the exact analytic tone, so sharing it across
// depths changes nothing in the result).
class ScenarioEvaluator {
 public:
  ScenarioEvaluator(const Scenario& scenario,
                    std::vector<std::optional<QuantizerSpec>> depths,
                    std::shared_ptr<const ToneTable> table = nullptr)
      : s_(scenario), depths_(std::move(depths)) {
    validate(s_);
    if (depths_.empty()) depths_.push_back(s_.quantizer);
    for (const auto& d : depths_)
      quants_.push_back(d ? std::optional<Quantizer>(Quantizer(*d))
                          : std::nullopt);
    table_ = table ? std::move(table)
                   : std::make_shared<const ToneTable>(s_.source.frequency_hz,
                                                       s_.sampling);
    if (table_->length() != s_.sampling.num_samples)
      throw std::invalid_argument("tone table length mismatch");
    const std::size_t m = s_.channels.size();
    beta0_.resize(m);
    amp_.resize(m);
    wr_.resize(m);
    wi_.resize(m);
    const double phi_s = reduce_phase(s_.source.initial_phase_rad);
    for (std::size_t i = 0; i < m; ++i) {
      beta0_[i] = phi_s + s_.channels[i].phase_rad;
      amp_[i] = s_.source.amplitude * s_.channels[i].gain;
      wr_[i] = s_.weights.compensated[i].real();
      wi_[i] = s_.weights.compensated[i].imag();
    }
    u_.assign(depths_.size(), std::vector<double>(table_->length()));
  }

  std::size_t depth_count() const { return depths_.size(); }
  const std::shared_ptr<const ToneTable>& table() const { return table_; }

  // powers[k] receives the mean-square output power for depths()[k].
  void power_at(double theta_deg, double* powers) {
    const double theta_rad = deg_to_rad(fold_angle_deg(theta_deg));
    const double w0 = kTwoPi * s_.source.frequency_hz;
    const double tau0 = adjacent_delay(s_.geometry, theta_rad);
    const std::size_t len = table_->length();
    for (auto& u : u_) std::fill(u.begin(), u.end(), 0.0);
    for (std::size_t i = 0; i < s_.channels.size(); ++i) {
      const double beta = beta0_[i] - static_cast<double>(i) * w0 * tau0;
      table_->synth(amp_[i], beta, si_, sq_);
      const double wr = wr_[i], wi = wi_[i];
      const double* in = si_.data();
      const double* qu = sq_.data();
      for (std::size_t d = 0; d < depths_.size(); ++d) {
        double* u = u_[d].data();
        if (quants_[d]) {
          const Quantizer& q = *quants_[d];
          for (std::size_t n = 0; n < len; ++n)
            u[n] += wr * q(in[n]) - wi * q(qu[n]);
        } else {
          for (std::size_t n = 0; n < len; ++n)
            u[n] += wr * in[n] - wi * qu[n];
        }
      }
    }
    for (std::size_t d = 0; d < depths_.size(); ++d) {
      double acc = 0.0;
      for (double v : u_[d]) acc += v * v;
      powers[d] = acc / static_cast<double>(len);
    }
  }

  double power_at(double theta_deg) {
    if (depths_.size() != 1)
      throw std::logic_error("single-depth call on multi-depth evaluator");
    double p = 0.0;
    power_at(theta_deg, &p);
    return p;
  }

 private:
  Scenario s_;
  std::vector<std::optional<QuantizerSpec>> depths_;
  std::vector<std::optional<Quantizer>> quants_;
  std::shared_ptr<const ToneTable> table_;
  std::vector<double> beta0_, amp_, wr_, wi_;
  std::vector<double> si_, sq_;
  std::vector<std::vector<double>> u_;
};

struct AngleGrid {
  double start_deg = 0.0;
  double step_deg = 0.1;
  std::size_t count = 3600;  // default covers [0, 360)
};

struct Beampattern {
  std::vector<double> theta_deg;
  std::vector<double> power_db;  // normalized: exactly one point at 0 dB
  std::size_t peak_index = 0;
  double ref_power = 0.0;  // linear power at the peak before normalization
};

namespace detail {

inline Beampattern normalize_sweep(std::vector<double> thetas,
                                   std::vector<double> powers) {
  Beampattern bp;
  bp.peak_index = static_cast<std::size_t>(
      std::max_element(powers.begin(), powers.end()) - powers.begin());
  bp.ref_power = powers[bp.peak_index];
  bp.theta_deg = std::move(thetas);
  bp.power_db.resize(powers.size());
  for (std::size_t i = 0; i < powers.size(); ++i)
    bp.power_db[i] = power_to_db(powers[i] / bp.ref_power);
  return bp;
}

}  // namespace detail

// Full sweep of the scenario over the grid, normalized to a 0 dB maximum.
inline Beampattern compute_beampattern(const Scenario& scenario,
                                       const AngleGrid& grid = {}) {
  if (grid.count == 0 || !(grid.step_deg > 0.0))
    throw std::invalid_argument("invalid angle grid");
  ScenarioEvaluator eval(scenario, {scenario.quantizer});
  std::vector<double> thetas(grid.count), powers(grid.count);
  for (std::size_t k = 0; k < grid.count; ++k) {
    thetas[k] = grid.start_deg + grid.step_deg * static_cast<double>(k);
    powers[k] = eval.power_at(thetas[k]);
  }
  return detail::normalize_sweep(std::move(thetas), std::move(powers));
}

// Same pattern as compute_beampattern over [0, 360) but exploiting the
// array's front-back symmetry: evaluates [0, 180] and mirrors. Used as the
// structural reference sweep inside Monte-Carlo drivers.
inline Beampattern mirrored_beampattern(ScenarioEvaluator& eval,
                                        double step_deg) {
  const std::size_t count =
      static_cast<std::size_t>(std::llround(360.0 / step_deg));
  if (count < 8 || count % 2 != 0 ||
      std::abs(static_cast<double>(count) * step_deg - 360.0) > 1e-9)
    throw std::invalid_argument("grid step must evenly divide 360 degrees");
  const std::size_t half = count / 2;
  std::vector<double> thetas(count), powers(count);
  for (std::size_t k = 0; k <= half; ++k) {
    thetas[k] = step_deg * static_cast<double>(k);
    powers[k] = eval.power_at(thetas[k]);
  }
  for (std::size_t k = half + 1; k < count; ++k) {
    thetas[k] = step_deg * static_cast<double>(k);
    powers[k] = powers[count - k];
  }
  return detail::normalize_sweep(std::move(thetas), std::move(powers));
}

struct NullEstimate {
  double theta_deg;  // refined location, folded onto (0, 180]
  double depth_db;   // normalized power at the refined minimum
};

struct NullSearchOptions {
  double threshold_db = -10.0;  // candidate minima must lie below this
  double merge_barrier_db = 3.0;
  double refine_tol_deg = 1e-3;
};

template <typename F>
inline std::pair<double, double> golden_minimize(F&& f, double lo, double hi,
                                                 double tol) {
  constexpr double kInvPhi = 0.6180339887498949;
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  while (hi - lo > tol) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = f(x2);
    }
  }
  return f1 <= f2 ? std::make_pair(x1, f1) : std::make_pair(x2, f2);
}

// Locates all beampattern local minima below the threshold on the grid,
// merges grid minima belonging to one noise-flat basin, folds mirror images
// onto (0, 180], and refines each null by bracketed minimization that
// re-evaluates the scenario at sub-grid angles.
inline std::vector<NullEstimate> find_nulls(const Beampattern& bp,
                                            const Scenario& scenario,
                                            const NullSearchOptions& opt = {}) {
  const std::size_t n = bp.power_db.size();
  if (n < 8) throw std::invalid_argument("grid too coarse for null search");
  const double step = bp.theta_deg[1] - bp.theta_deg[0];
  const std::size_t half = n / 2;

  // Grid local minima (circular neighborhood), folded onto [0, half].
  std::map<std::size_t, double> folded;  // folded index -> depth
  for (std::size_t i = 0; i < n; ++i) {
    const double v = bp.power_db[i];
    if (v >= opt.threshold_db) continue;
    const double prev = bp.power_db[(i + n - 1) % n];
    const double next = bp.power_db[(i + 1) % n];
    if (!(v < prev && v <= next)) continue;
    const std::size_t k = i <= half ? i : n - i;
    auto it = folded.find(k);
    if (it == folded.end() || v < it->second) folded[k] = v;
  }
  if (folded.empty()) return {};

  // Merge neighbors that belong to one basin: the barrier between them never
  // rises more than merge_barrier_db above the shallower of the two minima.
  struct Cluster {
    std::size_t lo, hi;  // folded grid index range of merged minima
    std::size_t best;    // deepest member
    double depth;
  };
  std::vector<Cluster> clusters;
  for (const auto& [k, v] : folded) {
    bool merged = false;
    if (!clusters.empty()) {
      Cluster& c = clusters.back();
      double barrier = -std::numeric_limits<double>::infinity();
      for (std::size_t j = c.hi + 1; j < k; ++j)
        barrier = std::max(barrier, bp.power_db[j]);
      const double shallower = std::max(c.depth, v);
      if (barrier < shallower + opt.merge_barrier_db) {
        c.hi = k;
        if (v < c.depth) {
          c.depth = v;
          c.best = k;
        }
        merged = true;
      }
    }
    if (!merged) clusters.push_back({k, k, k, v});
  }

  ScenarioEvaluator eval(scenario, {scenario.quantizer});
  std::vector<NullEstimate> out;
  for (const Cluster& c : clusters) {
    const double lo = step * static_cast<double>(c.lo) - step;
    const double hi = step * static_cast<double>(c.hi) + step;
    auto [theta, p] = golden_minimize(
        [&](double t) { return eval.power_at(t); }, lo, hi,
        opt.refine_tol_deg);
    NullEstimate est;
    est.theta_deg = fold_angle_deg(theta);
    est.depth_db = power_to_db(p / bp.ref_power);
    out.push_back(est);
  }
  std::sort(out.begin(), out.end(), [](const NullEstimate& a,
                                       const NullEstimate& b) {
    return a.theta_deg < b.theta_deg;
  });
  return out;
}

struct NullWidthResult {
  bool applicable = false;
  double width_deg = 0.0;
  double left_deg = 0.0;
  double right_deg = 0.0;
};

namespace detail {

// Linear-in-dB crossing between (t_out, db_out > depth) and
// (t_in, db_in <= depth).
inline double crossing_interp(double t_out, double db_out, double t_in,
                              double db_in, double depth) {
  if (db_out == db_in) return t_in;
  const double f = (depth - db_in) / (db_out - db_in);
  return t_in + f * (t_out - t_in);
}

}  // namespace detail

// Width of the contiguous region around a refined null where the pattern
// stays at or below `depth_db`. Endpoints by linear-in-dB interpolation on
// the grid; the refined null itself anchors regions narrower than one cell.
// Not applicable when the null never reaches the queried depth, or when the
// pattern tops out below the depth (a bounding lobe that never rises above
// it) on either side before crossing.
inline NullWidthResult null_width(const Beampattern& bp, double theta_null_deg,
                                  double null_depth_db, double depth_db,
                                  double lobe_prominence_db = 3.0) {
  if (!(depth_db < 0.0))
    throw std::invalid_argument("width depth must be negative (dB)");
  NullWidthResult res;
  if (null_depth_db > depth_db) return res;  // depth never reached

  const std::size_t n = bp.power_db.size();
  const double step = bp.theta_deg[1] - bp.theta_deg[0];
  const double start = bp.theta_deg[0];
  const auto wrap = [n](std::ptrdiff_t i) {
    const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(n);
    return static_cast<std::size_t>(((i % m) + m) % m);
  };
  const std::ptrdiff_t i0 = static_cast<std::ptrdiff_t>(
      std::llround((theta_null_deg - start) / step));

  // Walks outward in direction dir (+1/-1); returns the crossing angle or
  // nullopt when a bounding lobe below the depth blocks the side.
  const auto walk = [&](int dir) -> std::optional<double> {
    double run_min = null_depth_db;
    double t_prev = theta_null_deg;
    double db_prev = null_depth_db;
    for (std::size_t s = 0; s < n; ++s) {
      const std::ptrdiff_t i = i0 + dir * static_cast<std::ptrdiff_t>(s);
      // Skip grid points the anchor has already passed (sub-cell nulls).
      const double t =
          start + step * static_cast<double>(i);
      if ((dir > 0 && t <= theta_null_deg) ||
          (dir < 0 && t >= theta_null_deg))
        continue;
      const double db = bp.power_db[wrap(i)];
      if (db > depth_db)
        return detail::crossing_interp(t, db, t_prev, db_prev, depth_db);
      run_min = std::min(run_min, db);
      const double nb1 = bp.power_db[wrap(i - 1)];
      const double nb2 = bp.power_db[wrap(i + 1)];
      if (db >= nb1 && db >= nb2 && db >= run_min + lobe_prominence_db)
        return std::nullopt;  // lobe top below the queried depth
      t_prev = t;
      db_prev = db;
    }
    return std::nullopt;  // never rose above the depth (cannot happen: 0 dB max)
  };

  const std::optional<double> left = walk(-1);
  const std::optional<double> right = walk(+1);
  if (!left || !right) return res;
  res.applicable = true;
  res.left_deg = *left;
  res.right_deg = *right;
  res.width_deg = *right - *left;
  return res;
}

struct MonteCarloConfig {
  int runs = 5000;
  std::uint64_t master_seed = 12345;
  SamplingSpec sampling;
  double grid_step_deg = 0.1;
  double refine_tol_deg = 1e-3;              // quantized basins are flat
  double refine_tol_unquantized_deg = 1e-11; // drives ideal nulls to the floor
  int threads = 1;
};

struct DepthWidth {
  double depth_db = 0.0;
  bool applicable = false;
  double width_deg = 0.0;
};

struct NullResult {
  double theta_deg = 0.0;  // structural null location (design pattern)
  double nd_db = 0.0;      // run-averaged normalized power at the null
  bool floored = false;    // at/below the ideal double-precision floor
  std::vector<DepthWidth> widths;
};

struct MonteCarloResult {
  std::vector<NullResult> nulls;
  double peak_theta_deg = 0.0;
  int runs_used = 0;
};

namespace detail {

struct SideTask {
  bool na_by_lobe = false;
  std::vector<double> eval_theta;  // re-eval angles, outermost first
  double fallback_crossing = 0.0;  // reference crossing angle
};

struct WidthTask {
  std::size_t null_index = 0;
  double depth_db = 0.0;
  SideTask left, right;
};

// Reference-pattern walk that records which grid cells a per-run crossing
// search must re-evaluate (the run patterns differ from the reference only
// by quantization error, so crossings stay within a few cells).
inline SideTask plan_side(const Beampattern& ref, double theta_null,
                          double null_depth_db, double depth_db, int dir,
                          double lobe_prominence_db) {
  SideTask task;
  const std::size_t n = ref.power_db.size();
  const double step = ref.theta_deg[1] - ref.theta_deg[0];
  const auto wrap = [n](std::ptrdiff_t i) {
    const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(n);
    return static_cast<std::size_t>(((i % m) + m) % m);
  };
  const std::ptrdiff_t i0 =
      static_cast<std::ptrdiff_t>(std::llround(theta_null / step));
  double run_min = null_depth_db;
  double t_prev = theta_null;
  double db_prev = null_depth_db;
  for (std::size_t s = 0; s < n; ++s) {
    const std::ptrdiff_t i = i0 + dir * static_cast<std::ptrdiff_t>(s);
    const double t = step * static_cast<double>(i);
    if ((dir > 0 && t <= theta_null) || (dir < 0 && t >= theta_null)) continue;
    const double db = ref.power_db[wrap(i)];
    if (db > depth_db) {
      task.fallback_crossing =
          crossing_interp(t, db, t_prev, db_prev, depth_db);
      // Angles to re-evaluate per run: the out-of-region point plus a few
      // inward (quantization can only shrink the region), never crossing
      // the null itself.
      for (int w = 0; w < 4; ++w) {
        const double tw = t - static_cast<double>(dir * w) * step;
        if ((dir > 0 && tw <= theta_null) || (dir < 0 && tw >= theta_null))
          break;
        task.eval_theta.push_back(tw);
      }
      return task;
    }
    run_min = std::min(run_min, db);
    const double nb1 = ref.power_db[wrap(i - 1)];
    const double nb2 = ref.power_db[wrap(i + 1)];
    if (db >= nb1 && db >= nb2 && db >= run_min + lobe_prominence_db) {
      task.na_by_lobe = true;
      return task;
    }
    t_prev = t;
    db_prev = db;
  }
  task.na_by_lobe = true;
  return task;
}

// Per-run crossing on one side, from re-evaluated normalized point values;
// falls back to the reference crossing if the run never brackets the depth
// inside the window.
inline double side_crossing(const SideTask& task,
                            const std::vector<double>& point_db,
                            double theta_null, double run_null_db,
                            double depth_db) {
  double t_in = theta_null;
  double db_in = run_null_db;
  // Walk the window from the innermost point outward.
  for (std::size_t j = task.eval_theta.size(); j-- > 0;) {
    const double t = task.eval_theta[j];
    const double db = point_db[j];
    if (db > depth_db) {
      if (db_in > depth_db) break;  // window fully outside: fall back
      return crossing_interp(t, db, t_in, db_in, depth_db);
    }
    t_in = t;
    db_in = db;
  }
  return task.fallback_crossing;
}

}  // namespace detail

// Runs the Monte-Carlo experiment for one array/pattern configuration across
// several quantizer variants that share channel synthesis. Per run, the
// source phase and each channel phase are drawn uniformly from [0, 2*pi)
// (source first, then channels in index order) from a per-run seeded stream;
// null powers are averaged in the linear domain across runs and converted to
// dB; widths are averaged in degrees. Results are bit-identical for a fixed
// (seed, runs) regardless of thread count.
inline std::vector<MonteCarloResult> monte_carlo_metrics_multi(
    const MonteCarloConfig& cfg, const Scenario& base,
    const std::vector<std::optional<QuantizerSpec>>& variants,
    const std::vector<double>& width_depths_db) {
  if (cfg.runs < 1) throw std::invalid_argument("runs must be >= 1");
  if (variants.empty()) throw std::invalid_argument("no variants requested");

  // Structural reference: unquantized, zero channel phases (the compensation
  // cancels channel phase exactly, so this is the ideal design pattern).
  Scenario ref_scn = base;
  ref_scn.quantizer.reset();
  ref_scn.source.initial_phase_rad = 0.0;
  for (MicChannel& ch : ref_scn.channels) ch.phase_rad = 0.0;
  recompensate(ref_scn.weights, ref_scn.channels);
  validate(ref_scn);

  auto table = std::make_shared<const ToneTable>(ref_scn.source.frequency_hz,
                                                 ref_scn.sampling);
  ScenarioEvaluator ref_eval(ref_scn, {std::nullopt}, table);
  const Beampattern ref = mirrored_beampattern(ref_eval, cfg.grid_step_deg);
  const double peak_theta = ref.theta_deg[ref.peak_index];

  NullSearchOptions nso;
  nso.refine_tol_deg = cfg.refine_tol_unquantized_deg;
  const std::vector<NullEstimate> ref_nulls = find_nulls(ref, ref_scn, nso);
  if (ref_nulls.empty())
    throw std::runtime_error("reference pattern exposes no nulls");

  // Plan the per-run width work from the reference structure.
  std::vector<detail::WidthTask> wtasks;
  for (std::size_t j = 0; j < ref_nulls.size(); ++j) {
    for (double d : width_depths_db) {
      detail::WidthTask t;
      t.null_index = j;
      t.depth_db = d;
      t.left = detail::plan_side(ref, ref_nulls[j].theta_deg,
                                 ref_nulls[j].depth_db, d, -1,
                                 nso.merge_barrier_db);
      t.right = detail::plan_side(ref, ref_nulls[j].theta_deg,
                                  ref_nulls[j].depth_db, d, +1,
                                  nso.merge_barrier_db);
      wtasks.push_back(std::move(t));
    }
  }

  // Quantized variants share per-run evaluations.
  std::vector<std::optional<QuantizerSpec>> qvariants;
  std::vector<std::size_t> qpos;  // qvariants index -> variants index
  for (std::size_t v = 0; v < variants.size(); ++v)
    if (variants[v]) {
      qvariants.push_back(variants[v]);
      qpos.push_back(v);
    }

  // Angles each run evaluates: peak, every null, then the planned windows.
  std::vector<double> run_angles;
  run_angles.push_back(peak_theta);
  for (const NullEstimate& ne : ref_nulls) run_angles.push_back(ne.theta_deg);
  for (const detail::WidthTask& t : wtasks)
    for (const detail::SideTask* side : {&t.left, &t.right}) {
      if (side->na_by_lobe) continue;
      run_angles.insert(run_angles.end(), side->eval_theta.begin(),
                        side->eval_theta.end());
    }

  const std::size_t nq = qvariants.size();
  const std::size_t nang = run_angles.size();
  std::vector<double> slots;  // [run][angle][qvariant], filled iff nq > 0
  int runs = static_cast<int>(nq) > 0 ? cfg.runs : 1;

  if (nq > 0) {
    slots.assign(static_cast<std::size_t>(runs) * nang * nq, 0.0);
    const int nthreads = std::max(1, cfg.threads);
    const auto worker = [&](int first, int last) {
      Scenario run_scn = base;
      run_scn.quantizer.reset();
      for (int r = first; r < last; ++r) {
        std::mt19937_64 gen = rng_for_run(cfg.master_seed,
                                          static_cast<std::uint64_t>(r));
        run_scn.source.initial_phase_rad = uniform_angle(gen);
        for (MicChannel& ch : run_scn.channels) ch.phase_rad =
            uniform_angle(gen);
        recompensate(run_scn.weights, run_scn.channels);
        ScenarioEvaluator eval(run_scn, qvariants, table);
        std::vector<double> p(nq);
        for (std::size_t a = 0; a < nang; ++a) {
          eval.power_at(run_angles[a], p.data());
          std::copy(p.begin(), p.end(),
                    slots.begin() +
                        (static_cast<std::size_t>(r) * nang + a) * nq);
        }
      }
    };
    if (nthreads == 1) {
      worker(0, runs);
    } else {
      std::vector<std::thread> pool;
      const int chunk = (runs + nthreads - 1) / nthreads;
      for (int t = 0; t < nthreads; ++t) {
        const int first = t * chunk;
        const int last = std::min(runs, first + chunk);
        if (first < last) pool.emplace_back(worker, first, last);
      }
      for (std::thread& th : pool) th.join();
    }
  }

  // Assemble results per variant, reducing runs in index order.
  std::vector<MonteCarloResult> out(variants.size());
  for (std::size_t v = 0; v < variants.size(); ++v) {
    MonteCarloResult& res = out[v];
    res.peak_theta_deg = peak_theta;
    if (!variants[v]) {
      res.runs_used = 1;
      for (const NullEstimate& ne : ref_nulls) {
        NullResult nr;
        nr.theta_deg = ne.theta_deg;
        nr.nd_db = ne.depth_db;
        nr.floored = ne.depth_db <= kIdealFloorDb;
        for (double d : width_depths_db) {
          const NullWidthResult w =
              null_width(ref, ne.theta_deg, ne.depth_db, d);
          nr.widths.push_back({d, w.applicable, w.width_deg});
        }
        res.nulls.push_back(std::move(nr));
      }
      continue;
    }

    const std::size_t q = static_cast<std::size_t>(
        std::find(qpos.begin(), qpos.end(), v) - qpos.begin());
    res.runs_used = runs;
    const auto slot = [&](int r, std::size_t a) {
      return slots[(static_cast<std::size_t>(r) * nang + a) * nq + q];
    };

    // Mean normalized null power.
    std::vector<double> mean_null(ref_nulls.size(), 0.0);
    for (int r = 0; r < runs; ++r) {
      const double pref = slot(r, 0);
      for (std::size_t j = 0; j < ref_nulls.size(); ++j)
        mean_null[j] += slot(r, 1 + j) / pref;
    }
    for (double& m : mean_null) m /= static_cast<double>(runs);

    for (std::size_t j = 0; j < ref_nulls.size(); ++j) {
      NullResult nr;
      nr.theta_deg = ref_nulls[j].theta_deg;
      nr.nd_db = power_to_db(mean_null[j]);
      nr.floored = nr.nd_db <= kIdealFloorDb;
      res.nulls.push_back(std::move(nr));
    }

    // Widths: per-run crossings on the planned windows, averaged in degrees.
    std::size_t angle_cursor = 1 + ref_nulls.size();
    for (const detail::WidthTask& t : wtasks) {
      const std::size_t left_base = angle_cursor;
      if (!t.left.na_by_lobe) angle_cursor += t.left.eval_theta.size();
      const std::size_t right_base = angle_cursor;
      if (!t.right.na_by_lobe) angle_cursor += t.right.eval_theta.size();

      DepthWidth dw;
      dw.depth_db = t.depth_db;
      const double nd_db = power_to_db(mean_null[t.null_index]);
      if (t.left.na_by_lobe || t.right.na_by_lobe || nd_db > t.depth_db) {
        res.nulls[t.null_index].widths.push_back(dw);
        continue;
      }
      double acc = 0.0;
      for (int r = 0; r < runs; ++r) {
        const double pref = slot(r, 0);
        const double run_null_db =
            power_to_db(slot(r, 1 + t.null_index) / pref);
        std::vector<double> ldb(t.left.eval_theta.size());
        for (std::size_t c = 0; c < ldb.size(); ++c)
          ldb[c] = power_to_db(slot(r, left_base + c) / pref);
        std::vector<double> rdb(t.right.eval_theta.size());
        for (std::size_t c = 0; c < rdb.size(); ++c)
          rdb[c] = power_to_db(slot(r, right_base + c) / pref);
        const double tl = detail::side_crossing(
            t.left, ldb, ref_nulls[t.null_index].theta_deg, run_null_db,
            t.depth_db);
        const double tr = detail::side_crossing(
            t.right, rdb, ref_nulls[t.null_index].theta_deg, run_null_db,
            t.depth_db);
        acc += tr - tl;
      }
      dw.applicable = true;
      dw.width_deg = acc / static_cast<double>(runs);
      res.nulls[t.null_index].widths.push_back(dw);
    }
  }
  return out;
}

// Single-variant convenience wrapper.
inline MonteCarloResult monte_carlo_metrics(
    const MonteCarloConfig& cfg, const Scenario& scenario,
    const std::vector<double>& width_depths_db = {}) {
  return monte_carlo_metrics_multi(cfg, scenario, {scenario.quantizer},
                                   width_depths_db)
      .front();
}

// Closed-form null depth of the quantized first-order dipole, relative to
// the endfire maximum:
//   ND = 10 log10( delta^2 / (12 sin^2(pi * spacing / lambda)) ).
// Derivation: at the null only the weighted quantization error terms remain,
// with mean power D^2 delta^2 / 6 for the two-channel pair; the endfire tone
// has amplitude 2 D sin(pi spacing/lambda) and mean-square power half its
// square; the magnitude D cancels in the ratio.
inline double dipole_nd_analytic(const QuantizerSpec& spec,
                                 const ArrayGeometry& geom, double f0_hz) {
  validate(spec);
  validate(geom);
  if (geom.num_mics != 2)
    throw std::invalid_argument(
        "analytic null depth is defined for the first-order dipole "
        "(2 microphones)");
  const double delta = step_size(spec);
  const double s = std::sin(kPi * f0_hz * geom.spacing_m /
                            geom.sound_speed_mps);
  return power_to_db(delta * delta / (12.0 * s * s));
}

// Quantization-limited null-depth model for any design: the error power
// sum_i |C_i|^2 * delta^2 / 12 against the pattern's mean-square maximum
// (amplitude * |F|_max)^2 / 2.
inline double quantization_nd_model(const BeamWeights& weights,
                                    const QuantizerSpec& spec,
                                    double amplitude,
                                    double peak_envelope_abs) {
  double sum = 0.0;
  for (const cplx& c : weights.compensated) sum += std::norm(c);
  const double delta = step_size(spec);
  const double err = sum * delta * delta / 12.0;
  const double peak =
      0.5 * amplitude * amplitude * peak_envelope_abs * peak_envelope_abs;
  return power_to_db(err / peak);
}

}  // namespace dmanull
