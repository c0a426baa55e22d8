#include "mtjsnn/characterization.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include "mtjsnn/errors.hpp"
#include "mtjsnn/parallel.hpp"
#include "mtjsnn/random.hpp"

namespace mtjsnn::characterization {

namespace {

constexpr double kMinCurrent = 1e-6;
constexpr double kMaxCurrent = 5e-3;
constexpr std::uint64_t kGridGroup = 0x6772696400000000ULL;
constexpr std::uint64_t kCoarseGroup = 0x636f617273650000ULL;
constexpr std::uint64_t kWidthGroup = 0x7769647468000000ULL;
constexpr std::uint64_t kPulseTrainGroup = 0x70756c7365000000ULL;

bool same(double a, double b) {
  return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b));
}

// Binomial error with a half-count floor so that empty and full cells
// still carry some uncertainty in comparisons.
double slack_stderr(std::int64_t switched, std::int64_t trials) {
  const double p = (static_cast<double>(switched) + 0.5) / (trials + 1.0);
  return std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

void check_monotone(std::span<const SwitchingCell> cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (std::size_t j = i + 1; j < cells.size(); ++j) {
      const double drop = cells[i].p - cells[j].p;
      if (drop <= 0.0) continue;
      const double se_i = slack_stderr(cells[i].switched, cells[i].trials);
      const double se_j = slack_stderr(cells[j].switched, cells[j].trials);
      if (drop > 2.0 * std::hypot(se_i, se_j))
        throw NumericalError(
            "switching table: P_sw decreases from " + std::to_string(cells[i].p) +
            " at " + std::to_string(cells[i].current) + " A to " +
            std::to_string(cells[j].p) + " at " +
            std::to_string(cells[j].current) +
            " A, beyond two standard errors");
    }
  }
}

SwitchingCell to_cell(const CellEstimate &e, double eb_kT) {
  return {e.current, eb_kT, e.pulse_width, e.p(), e.stderr_p(), e.switched,
          e.trials};
}

} // namespace

std::string to_string(Drive drive) {
  return drive == Drive::SpinHall ? "spin_hall" : "pinned_layer";
}

Drive drive_from_string(std::string_view name) {
  if (name == "spin_hall") return Drive::SpinHall;
  if (name == "pinned_layer") return Drive::PinnedLayer;
  throw ConfigError("unknown drive '" + std::string(name) +
                    "' (expected spin_hall or pinned_layer)");
}

double spin_current_for(double charge_current, Drive drive,
                        const device::DeviceParams &params) {
  if (drive == Drive::SpinHall)
    return device::charge_to_spin(charge_current, params);
  return kPinnedLayerPolarization * charge_current;
}

double energy_barrier(const MagnetGeometry &geometry,
                      const MaterialParams &material, const DemagTensor &tensor,
                      const magnetics::PhysicalConstants &c) {
  if (!(tensor.y >= tensor.x))
    throw NumericalError("energy barrier: need N_y >= N_x for an x easy axis");
  return 0.5 * c.mu_0 * material.M_s * material.M_s * geometry.volume() *
         (tensor.y - tensor.x);
}

double barrier_joules(double eb_kT, double temperature) {
  return eb_kT * magnetics::kPhysical.k_B * temperature;
}

BarrierCalibration calibrate_barrier(const MagnetGeometry &geometry,
                                     const MaterialParams &material,
                                     double target) {
  return calibrate_barrier(geometry, material,
                           magnetics::compute_demag_tensor(geometry), target);
}

BarrierCalibration calibrate_barrier(const MagnetGeometry &geometry,
                                     const MaterialParams &material,
                                     const DemagTensor &base, double target) {
  geometry.validate();
  material.validate();
  if (!(target > 0.0))
    throw ConfigError("barrier calibration: target must be positive");
  const double raw = energy_barrier(geometry, material, base);
  if (!(raw > 0.0))
    throw NumericalError("barrier calibration: no in-plane anisotropy to scale");
  const double scale = target / raw;
  const double mid = 0.5 * (base.x + base.y);
  const double half = 0.5 * scale * (base.y - base.x);

  BarrierCalibration cal;
  cal.thickness = geometry.thickness;
  cal.target = target;
  cal.scale = scale;
  cal.base = base;
  cal.tensor = {mid - half, mid + half, base.z};
  if (cal.tensor.x < 0.0 || cal.tensor.y > 1.0)
    throw NumericalError("barrier calibration: target unreachable, scaled "
                         "demag factors leave [0, 1]");
  cal.achieved = energy_barrier(geometry, material, cal.tensor);
  return cal;
}

double thickness_for_barrier(double eb_kT) {
  static constexpr double kT[] = {10.0, 20.0, 30.0};
  static constexpr double kThickness[] = {0.8e-9, 1.2e-9, 1.5e-9};
  if (!(eb_kT > 0.0))
    throw ConfigError("barrier target must be positive");
  std::size_t i = eb_kT <= kT[1] ? 0 : 1;
  const double f = (eb_kT - kT[i]) / (kT[i + 1] - kT[i]);
  const double t = kThickness[i] + f * (kThickness[i + 1] - kThickness[i]);
  if (!(t > 0.0))
    throw ConfigError("barrier target too small for the thickness map");
  return t;
}

Macrospin calibrated_magnet(const MagnetGeometry &lateral,
                            const MaterialParams &material, double eb_kT,
                            double temperature,
                            BarrierCalibration *calibration) {
  MagnetGeometry g = lateral;
  g.thickness = thickness_for_barrier(eb_kT);
  BarrierCalibration cal =
      calibrate_barrier(g, material, barrier_joules(eb_kT, temperature));
  Macrospin magnet{g, material, cal.tensor};
  if (calibration) *calibration = cal;
  return magnet;
}

void PulseTrainSpec::validate() const {
  if (!(current >= 0.0) || !(width > 0.0) || !(gap >= 0.0) || count < 0 ||
      !(lead >= 0.0) || !(tail >= 0.0) || !(dt > 0.0) || sample_every < 1 ||
      !(temperature >= 0.0) || !std::isfinite(tilt))
    throw ConfigError("pulse train: invalid parameters");
}

std::vector<magnetics::Pulse>
PulseTrainSpec::pulses(const device::DeviceParams &device) const {
  const double amplitude = spin_current_for(current, drive, device);
  std::vector<magnetics::Pulse> out;
  for (int k = 0; k < count; ++k)
    out.push_back({lead + k * (width + gap), width, amplitude});
  return out;
}

double PulseTrainSpec::end_time() const {
  return lead + count * width + std::max(0, count - 1) * gap + tail;
}

PulseTrainResult run_pulse_train(const PulseTrainSpec &spec,
                                 const MagnetGeometry &lateral,
                                 const MaterialParams &material,
                                 const device::DeviceParams &device) {
  spec.validate();
  PulseTrainResult r;
  // The barrier target is fixed at 300 K so the T = 0 run uses the same disk.
  r.magnet = calibrated_magnet(lateral, material, spec.eb_kT, 300.0);
  r.pulses = spec.pulses(device);
  magnetics::ThermalConfig cfg;
  cfg.temperature = spec.temperature;
  cfg.dt = spec.dt;
  cfg.rng_seed = spec.seed;
  cfg.rng_stream = stream_id(kPulseTrainGroup, 0);
  magnetics::MagnetizationState s0;
  s0.m = {-std::cos(spec.tilt), std::sin(spec.tilt), 0.0};
  r.samples = magnetics::simulate_pulse_train(r.magnet, cfg, s0, r.pulses,
                                              spec.end_time(),
                                              spec.sample_every);
  return r;
}

double CellEstimate::stderr_p() const {
  if (trials <= 0) return 0.0;
  const double q = p();
  return std::sqrt(q * (1.0 - q) / static_cast<double>(trials));
}

bool run_switching_trial(const SwitchingContext &ctx, double charge_current,
                         double pulse_width, std::uint64_t seed,
                         std::uint64_t stream) {
  const TrialProtocol &p = ctx.protocol;
  magnetics::ThermalConfig cfg{p.temperature, p.dt, seed, stream};
  magnetics::HeunIntegrator integrator(ctx.magnet, cfg);
  auto state = magnetics::thermalize(integrator, -1.0, p.thermalize_time);
  const Vec3 drive = spin_current_for(charge_current, p.drive, ctx.device) *
                     device::kSpinHallPolarization;
  state = integrator.run(state, drive, pulse_width);
  state = integrator.run(state, Vec3{}, p.relax_time);
  return state.m.x > p.switch_threshold;
}

CellEstimate estimate_cell(const SwitchingContext &ctx, double charge_current,
                           double pulse_width, int trials, std::uint64_t seed,
                           std::uint64_t cell_key, unsigned threads) {
  if (trials <= 0) throw ConfigError("cell estimate: trials must be positive");
  std::vector<char> hit(static_cast<std::size_t>(trials), 0);
  parallel_for(hit.size(), threads, [&](std::size_t k) {
    hit[k] = run_switching_trial(ctx, charge_current, pulse_width, seed,
                                 stream_id(cell_key, k));
  });
  CellEstimate e;
  e.current = charge_current;
  e.pulse_width = pulse_width;
  e.trials = trials;
  e.switched = std::count(hit.begin(), hit.end(), 1);
  return e;
}

double coarse_crossing(const SwitchingContext &ctx, double pulse_width,
                       double level, double lo, double hi, int trials,
                       std::uint64_t seed, std::uint64_t key, unsigned threads,
                       int iterations) {
  double log_lo = std::log(lo);
  double log_hi = std::log(hi);
  for (int i = 0; i < iterations; ++i) {
    const double mid = 0.5 * (log_lo + log_hi);
    // Same streams at every probe: common random numbers keep P monotone.
    const CellEstimate e = estimate_cell(ctx, std::exp(mid), pulse_width,
                                         trials, seed, key, threads);
    if (e.p() >= level)
      log_hi = mid;
    else
      log_lo = mid;
  }
  return std::exp(0.5 * (log_lo + log_hi));
}

void SweepSpec::validate() const {
  if (trials_per_point < 100)
    throw ConfigError("sweep: trials_per_point must be at least 100");
  if (barrier_targets.empty() || pulse_widths.empty())
    throw ConfigError("sweep: need at least one barrier and one pulse width");
  for (double b : barrier_targets)
    if (!(b > 0.0)) throw ConfigError("sweep: barrier targets must be positive");
  for (double w : pulse_widths)
    if (!(w > 0.0)) throw ConfigError("sweep: pulse widths must be positive");
  for (std::size_t i = 0; i < currents.size(); ++i) {
    if (!(currents[i] >= 0.0))
      throw ConfigError("sweep: currents must be non-negative");
    if (i > 0 && !(currents[i] > currents[i - 1]))
      throw ConfigError("sweep: currents must be strictly increasing");
  }
  if (currents.empty() && grid_points < 8)
    throw ConfigError("sweep: grid_points must be at least 8");
  if (coarse_trials < 20)
    throw ConfigError("sweep: coarse_trials must be at least 20");
  if (!(temperature > 0.0))
    throw ConfigError("sweep: temperature must be positive");
}

SwitchingProbabilityTable sweep(const SweepSpec &spec,
                                const SweepEnvironment &env) {
  spec.validate();
  env.device.validate();

  SwitchingProbabilityTable table;
  table.barrier_targets = spec.barrier_targets;
  table.pulse_widths = spec.pulse_widths;
  TableMeta &meta = table.meta;
  meta.seed = spec.base_seed;
  meta.trials = spec.trials_per_point;
  meta.drive = env.protocol.drive;
  meta.temperature = spec.temperature;
  meta.dt = env.protocol.dt;
  meta.switch_threshold = env.protocol.switch_threshold;
  meta.spin_hall_gain = env.device.spin_hall_gain();

  const unsigned threads = std::max(1u, env.threads);
  std::uint64_t slice_index = 0;
  for (double eb : spec.barrier_targets) {
    BarrierCalibration cal;
    SwitchingContext ctx{
        calibrated_magnet(env.lateral, env.material, eb, spec.temperature, &cal),
        env.device, env.protocol};
    ctx.protocol.temperature = spec.temperature;
    meta.calibrations.push_back(cal);

    for (double tpw : spec.pulse_widths) {
      const std::uint64_t grid_key = stream_id(kGridGroup, slice_index);
      const std::uint64_t coarse_key = stream_id(kCoarseGroup, slice_index);
      ++slice_index;
      std::uint64_t cell_counter = 0;
      auto measure = [&](double current) {
        return to_cell(estimate_cell(ctx, current, tpw, spec.trials_per_point,
                                     spec.base_seed,
                                     stream_id(grid_key, cell_counter++),
                                     threads),
                       eb);
      };

      std::vector<SwitchingCell> cells;
      if (!spec.currents.empty()) {
        for (double i : spec.currents) cells.push_back(measure(i));
      } else {
        const double i50 =
            coarse_crossing(ctx, tpw, 0.5, kMinCurrent, kMaxCurrent,
                            spec.coarse_trials, spec.base_seed,
                            stream_id(coarse_key, 0), threads);
        const double i_lo =
            coarse_crossing(ctx, tpw, 0.02, kMinCurrent, i50,
                            spec.coarse_trials, spec.base_seed,
                            stream_id(coarse_key, 1), threads, 8);
        const double i_hi =
            coarse_crossing(ctx, tpw, 0.995, i50, kMaxCurrent,
                            spec.coarse_trials, spec.base_seed,
                            stream_id(coarse_key, 2), threads, 8);
        const double lo = i_lo / 1.15;
        const double hi = i_hi * 1.15;
        if (spec.zero_current_anchor) cells.push_back(measure(0.0));
        const int n = spec.grid_points;
        for (int k = 0; k < n; ++k)
          cells.push_back(measure(lo + (hi - lo) * k / (n - 1)));
        // Extend upward until the slice saturates.
        for (int extra = 0; extra < 6 && cells.back().p < 0.99; ++extra)
          cells.push_back(measure(cells.back().current * 1.25));
      }
      table.cells.insert(table.cells.end(), cells.begin(), cells.end());
    }
  }
  return table;
}

std::vector<SwitchingCell>
SwitchingProbabilityTable::slice(double eb_kT, double pulse_width) const {
  std::vector<SwitchingCell> out;
  for (const SwitchingCell &c : cells)
    if (same(c.eb_kT, eb_kT) && same(c.pulse_width, pulse_width))
      out.push_back(c);
  std::sort(out.begin(), out.end(),
            [](const SwitchingCell &a, const SwitchingCell &b) {
              return a.current < b.current;
            });
  return out;
}

void SwitchingProbabilityTable::validate() const {
  for (const SwitchingCell &c : cells) {
    if (c.trials <= 0 || c.switched < 0 || c.switched > c.trials)
      throw ConfigError("switching table: cell counts out of range");
    if (!(c.p >= 0.0 && c.p <= 1.0))
      throw ConfigError("switching table: probability outside [0, 1]");
    if (!(c.current >= 0.0))
      throw ConfigError("switching table: negative current");
  }
  for (double eb : barrier_targets)
    for (double tpw : pulse_widths) check_monotone(slice(eb, tpw));
}

BehavioralModel build_behavioral_model(std::span<const SwitchingCell> slice) {
  if (slice.size() < 8)
    throw NumericalError("behavioral model: need at least 8 cells, got " +
                         std::to_string(slice.size()));
  for (std::size_t i = 1; i < slice.size(); ++i)
    if (!(slice[i].current > slice[i - 1].current))
      throw NumericalError(
          "behavioral model: currents must be strictly increasing");
  double p_min = 1.0;
  double p_max = 0.0;
  for (const SwitchingCell &c : slice) {
    p_min = std::min(p_min, c.p);
    p_max = std::max(p_max, c.p);
  }
  if (p_min > 0.01 || p_max < 0.99)
    throw NumericalError("behavioral model: slice must span P 0.01 to 0.99 "
                         "(got " + std::to_string(p_min) + " to " +
                         std::to_string(p_max) + ")");
  check_monotone(slice);

  std::vector<double> x, y, w;
  for (const SwitchingCell &c : slice) {
    x.push_back(c.current);
    y.push_back(c.p);
    w.push_back(static_cast<double>(c.trials));
  }
  BehavioralModel model;
  model.curve = MonotoneCurve(x, isotonic_fit(y, w));
  model.eb_kT = slice.front().eb_kT;
  model.pulse_width = slice.front().pulse_width;
  return model;
}

BehavioralModel build_behavioral_model(const SwitchingProbabilityTable &table,
                                       double eb_kT, double pulse_width) {
  const auto cells = table.slice(eb_kT, pulse_width);
  if (cells.empty())
    throw ConfigError("behavioral model: table has no slice at E_B = " +
                      std::to_string(eb_kT) + " kT, t_PW = " +
                      std::to_string(pulse_width) + " s");
  return build_behavioral_model(cells);
}

double dispersion_metric(const MonotoneCurve &curve) {
  return curve.inverse(0.9) - curve.inverse(0.1);
}

Crossing crossing_current(const BehavioralModel &model, double level,
                          std::int64_t trials_per_point) {
  if (!(level > 0.0 && level < 1.0))
    throw ConfigError("crossing level must lie in (0, 1)");
  Crossing out;
  out.current = model.curve.inverse(level);
  const double slope = model.curve.slope(out.current);
  if (!(slope > 0.0))
    throw NumericalError("crossing: flat curve at the requested level");
  const double se_p =
      std::sqrt(level * (1.0 - level) / static_cast<double>(trials_per_point));
  out.stderr_current = se_p / slope;
  return out;
}

double calibrate_spin_hall_width(SwitchingContext ctx, double target_current,
                                 double pulse_width, int trials,
                                 std::uint64_t seed, unsigned threads,
                                 int iterations) {
  double log_lo = std::log(5e-9);
  double log_hi = std::log(200e-9);
  const std::uint64_t key = stream_id(kWidthGroup, 0);
  for (int i = 0; i < iterations; ++i) {
    const double mid = 0.5 * (log_lo + log_hi);
    ctx.device.W_MTJ = std::exp(mid);
    const CellEstimate e = estimate_cell(ctx, target_current, pulse_width,
                                         trials, seed, key, threads);
    if (e.p() >= 0.5)
      log_hi = mid;
    else
      log_lo = mid;
  }
  return std::exp(0.5 * (log_lo + log_hi));
}

} // namespace mtjsnn::characterization
