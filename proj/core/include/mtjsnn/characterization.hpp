#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtjsnn/device.hpp"
#include "mtjsnn/magnetics.hpp"
#include "mtjsnn/monotone_curve.hpp"

/// Monte Carlo switching statistics of the MTJ neuron: barrier calibration,
/// probability sweeps over (current, barrier, pulse width) and the
/// behavioral P_sw(I) model built from them.
namespace mtjsnn::characterization {

using magnetics::DemagTensor;
using magnetics::Macrospin;
using magnetics::MagnetGeometry;
using magnetics::MaterialParams;

/// How a charge current becomes spin current: heavy-metal spin-Hall
/// injection, or injection through the pinned layer at 50% polarization.
enum class Drive { SpinHall, PinnedLayer };

inline constexpr double kPinnedLayerPolarization = 0.5;

std::string to_string(Drive drive);
Drive drive_from_string(std::string_view name);

double spin_current_for(double charge_current, Drive drive,
                        const device::DeviceParams &params);

/// In-plane macrospin barrier (1/2) mu_0 M_s^2 V (N_y - N_x), J. Zero for
/// N_x = N_y; throws NumericalError when N_y < N_x.
double energy_barrier(const MagnetGeometry &geometry,
                      const MaterialParams &material,
                      const DemagTensor &tensor,
                      const magnetics::PhysicalConstants &c =
                          magnetics::kPhysical);

/// Barrier target expressed in units of k_B T.
double barrier_joules(double eb_kT, double temperature);

struct BarrierCalibration {
  double thickness = 0.0;   // m
  double target = 0.0;      // J
  double achieved = 0.0;    // J
  double scale = 1.0;       // applied to N_y - N_x
  DemagTensor base;         // uncalibrated tensor
  DemagTensor tensor;       // calibrated tensor
};

/// Scales N_y - N_x about its midpoint (N_z and the trace unchanged) so the
/// barrier of `geometry` hits `target` joules. Throws NumericalError when
/// the scaled factors would leave [0, 1].
BarrierCalibration calibrate_barrier(const MagnetGeometry &geometry,
                                     const MaterialParams &material,
                                     double target);

/// Same, starting from a user-supplied tensor instead of the computed one.
BarrierCalibration calibrate_barrier(const MagnetGeometry &geometry,
                                     const MaterialParams &material,
                                     const DemagTensor &base, double target);

/// Free-layer thickness for a barrier, following the 10/20/30 kT <->
/// 0.8/1.2/1.5 nm mapping (piecewise linear, extrapolated at the ends).
double thickness_for_barrier(double eb_kT);

/// Free layer with the in-plane geometry of `lateral`, the thickness from
/// thickness_for_barrier() and a calibrated barrier.
Macrospin calibrated_magnet(const MagnetGeometry &lateral,
                            const MaterialParams &material, double eb_kT,
                            double temperature,
                            BarrierCalibration *calibration = nullptr);

/// Per-trial protocol: thermalize at P, apply the write pulse, relax at
/// zero current, then call the verdict on m_x.
struct TrialProtocol {
  double temperature = 300.0;
  double dt = 0.5e-12;
  double thermalize_time = 5e-9;
  double relax_time = 1e-9;
  double switch_threshold = 0.0; // switched iff final m_x > threshold
  Drive drive = Drive::SpinHall;
};

struct SwitchingContext {
  Macrospin magnet;
  device::DeviceParams device;
  TrialProtocol protocol;
};

bool run_switching_trial(const SwitchingContext &ctx, double charge_current,
                         double pulse_width, std::uint64_t seed,
                         std::uint64_t stream);

/// Integrate-and-leak demonstration: `count` equal pulses on a calibrated
/// free layer, starting from an in-plane tilt off the P axis.
struct PulseTrainSpec {
  double eb_kT = 30.0;
  double current = 50e-6;    // charge current, A
  double width = 1e-9;       // s
  double gap = 1e-9;         // s between pulses
  int count = 3;
  double lead = 0.5e-9;      // s before the first pulse
  double tail = 1e-9;        // s after the last pulse
  double tilt = 0.1;         // rad, initial in-plane angle from -x
  double temperature = 0.0;  // K
  double dt = 0.5e-12;
  int sample_every = 10;
  std::uint64_t seed = 1;
  Drive drive = Drive::SpinHall;

  void validate() const;
  std::vector<magnetics::Pulse> pulses(const device::DeviceParams &device) const;
  double end_time() const;
};

struct PulseTrainResult {
  Macrospin magnet;
  std::vector<magnetics::Pulse> pulses; // spin-current amplitudes
  std::vector<magnetics::TrajectorySample> samples;
};

PulseTrainResult run_pulse_train(const PulseTrainSpec &spec,
                                 const MagnetGeometry &lateral,
                                 const MaterialParams &material,
                                 const device::DeviceParams &device);

struct CellEstimate {
  double current = 0.0;
  double pulse_width = 0.0;
  std::int64_t trials = 0;
  std::int64_t switched = 0;

  double p() const {
    return trials > 0 ? static_cast<double>(switched) / trials : 0.0;
  }
  /// Binomial standard error sqrt(p (1 - p) / n).
  double stderr_p() const;
};

/// `trials` independent trajectories; trial k uses stream
/// stream_id(cell_key, k), so the count does not depend on `threads`.
CellEstimate estimate_cell(const SwitchingContext &ctx, double charge_current,
                           double pulse_width, int trials, std::uint64_t seed,
                           std::uint64_t cell_key, unsigned threads);

/// Log-space bisection for the current where P_sw crosses `level`.
double coarse_crossing(const SwitchingContext &ctx, double pulse_width,
                       double level, double lo, double hi, int trials,
                       std::uint64_t seed, std::uint64_t key, unsigned threads,
                       int iterations = 10);

struct SweepSpec {
  std::vector<double> currents; // empty: auto grid per slice
  std::vector<double> barrier_targets{20.0}; // units of k_B T
  std::vector<double> pulse_widths{0.5e-9};  // s
  int trials_per_point = 1000;
  double temperature = 300.0;
  std::uint64_t base_seed = 1;
  int grid_points = 25;
  int coarse_trials = 200;
  bool zero_current_anchor = true;

  void validate() const;
};

struct SweepEnvironment {
  MagnetGeometry lateral; // thickness is set per barrier target
  MaterialParams material;
  device::DeviceParams device;
  TrialProtocol protocol;
  unsigned threads = 1;
};

struct SwitchingCell {
  double current = 0.0; // A
  double eb_kT = 0.0;
  double pulse_width = 0.0; // s
  double p = 0.0;
  double stderr_p = 0.0;
  std::int64_t switched = 0;
  std::int64_t trials = 0;
};

struct TableMeta {
  std::uint64_t seed = 0;
  int trials = 0;
  std::string backend = "llg";
  Drive drive = Drive::SpinHall;
  double temperature = 300.0;
  double dt = 0.0;
  double switch_threshold = 0.0;
  double spin_hall_gain = 0.0;
  std::vector<BarrierCalibration> calibrations;
};

struct SwitchingProbabilityTable {
  TableMeta meta;
  std::vector<double> barrier_targets;
  std::vector<double> pulse_widths;
  std::vector<SwitchingCell> cells; // slice-major, currents ascending

  /// Cells of one (E_B, t_PW) slice in ascending current order.
  std::vector<SwitchingCell> slice(double eb_kT, double pulse_width) const;
  /// Range and monotonicity (2 stderr slack) checks.
  void validate() const;
};

SwitchingProbabilityTable sweep(const SweepSpec &spec,
                                const SweepEnvironment &env);

/// Monotone P_sw(I) for one table slice.
struct BehavioralModel {
  MonotoneCurve curve;
  double eb_kT = 0.0;
  double pulse_width = 0.0;

  double probability(double charge_current) const {
    return curve(charge_current);
  }
};

/// Requires >= 8 cells spanning P 0.01..0.99. Violations of monotonicity
/// within 2 combined standard errors are pooled away (isotonic fit);
/// larger violations throw NumericalError.
BehavioralModel build_behavioral_model(std::span<const SwitchingCell> slice);
BehavioralModel build_behavioral_model(const SwitchingProbabilityTable &table,
                                       double eb_kT, double pulse_width);

/// I(P = 0.9) - I(P = 0.1).
double dispersion_metric(const MonotoneCurve &curve);

struct Crossing {
  double current = 0.0;
  double stderr_current = 0.0;
};

/// Current where the model crosses `level`, with its standard error
/// propagated from the binomial error at that level through the slope.
Crossing crossing_current(const BehavioralModel &model, double level,
                          std::int64_t trials_per_point);

/// Log-space bisection on W_MTJ so that P_sw(target_current) = 0.5.
double calibrate_spin_hall_width(SwitchingContext ctx, double target_current,
                                 double pulse_width, int trials,
                                 std::uint64_t seed, unsigned threads,
                                 int iterations = 12);

} // namespace mtjsnn::characterization
