#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mtjsnn/magnetics.hpp"
#include "mtjsnn/monotone_curve.hpp"
#include "mtjsnn/random.hpp"

/// Three-terminal spin-Hall MTJ neuron: charge-to-spin conversion in the
/// heavy-metal underlayer, two-state read-out through a resistive divider,
/// the write/read/reset cycle and its energy bookkeeping.
namespace mtjsnn::device {

struct DeviceParams {
  double R_P = 1.21e6;  // ohm
  double R_AP = 2.5e6;  // ohm
  double theta_SH = 0.3;
  /// Effective MTJ width in the spin-Hall gain, calibrated so that a 71 uA
  /// write pulse of 0.5 ns switches a 20 kT free layer with P = 0.5.
  double W_MTJ = 32e-9;
  double t_HM = 2e-9;     // m
  double R_HM = 400.0;    // ohm, write path
  double rho_HM = 2e-6;   // ohm m (200 uOhm cm)
  double V_DD = 1.0;      // V
  double t_write = 0.5e-9;
  double t_read = 0.5e-9;
  double t_reset = 0.5e-9;
  double I_reset = 150e-6; // A
  double E_inverter = 1.47e-15; // J per read

  /// I_s / I_Q = theta_SH W_MTJ / t_HM.
  double spin_hall_gain() const { return theta_SH * W_MTJ / t_HM; }
  void validate() const;
};

/// P corresponds to m antiparallel to +x; a spike is the reversal of m_x
/// from -1 to +1.
inline constexpr Vec3 kPinnedAxis{-1.0, 0.0, 0.0};
/// Spins injected by a positive charge current in the heavy metal.
inline constexpr Vec3 kSpinHallPolarization{1.0, 0.0, 0.0};

enum class LogicalState { P, AP };
enum class Phase { Write, Read, Reset };

LogicalState logical_state_of(const Vec3 &m);

struct NeuronDeviceState {
  magnetics::MagnetizationState magnet = magnetics::easy_axis_state(-1.0);
  LogicalState logical = LogicalState::P;
  Phase phase = Phase::Write;
  int refractory_remaining = 0;
};

enum class EnergyKind : std::uint8_t { Write, Read, Reset };

/// One dissipative event: current^2 * resistance * duration + fixed.
struct EnergyEvent {
  EnergyKind kind;
  double current = 0.0;
  double resistance = 0.0;
  double duration = 0.0;
  double fixed = 0.0;

  double energy() const {
    return current * current * resistance * duration + fixed;
  }
};

class EnergyLedger {
public:
  explicit EnergyLedger(bool keep_events = false) : keep_events_(keep_events) {}

  void record(const EnergyEvent &event);
  void count_spike() { ++spikes_; }

  double write_energy() const { return write_; }
  double read_energy() const { return read_; }
  double reset_energy() const { return reset_; }
  double total_energy() const { return write_ + read_ + reset_; }
  std::int64_t spike_count() const { return spikes_; }
  /// Total energy divided by spike count, 0 when nothing spiked.
  double energy_per_spike() const;

  bool keeps_events() const { return keep_events_; }
  std::span<const EnergyEvent> events() const { return events_; }

  /// Adds another ledger's totals (events are appended when both keep them).
  EnergyLedger &operator+=(const EnergyLedger &other);

  /// Rebuilds totals from an event log in order.
  static EnergyLedger replay(std::span<const EnergyEvent> events,
                             std::int64_t spikes);

private:
  bool keep_events_;
  double write_ = 0.0;
  double read_ = 0.0;
  double reset_ = 0.0;
  std::int64_t spikes_ = 0;
  std::vector<EnergyEvent> events_;
};

/// Signed spin current theta_SH (W_MTJ / t_HM) I_Q.
double charge_to_spin(double charge_current, const DeviceParams &params);

/// Cosine mix of the P and AP conductances by the angle between m and the
/// pinned-layer axis.
double mtj_resistance(const Vec3 &m, const DeviceParams &params);

/// Energy of one read: divider V_DD^2/(R + R_AP_ref) t_read plus the
/// inverter constant.
double read_energy(double neuron_resistance, const DeviceParams &params);

/// Write-phase engine driven by the stochastic LLG integrator. Magnetization
/// is carried from one cycle to the next.
class LlgWriteBackend {
public:
  LlgWriteBackend(const magnetics::Macrospin &magnet,
                  const magnetics::ThermalConfig &thermal);

  magnetics::MagnetizationState integrate(magnetics::MagnetizationState state,
                                          double spin_current, double duration);
  magnetics::MagnetizationState thermalized(double sign);

private:
  magnetics::HeunIntegrator integrator_;
};

/// Write-phase engine drawing Bernoulli(P_sw(I)) from a behavioral model.
/// Memoryless: every window starts from the thermalized P state.
class BehavioralWriteBackend {
public:
  explicit BehavioralWriteBackend(const MonotoneCurve &probability)
      : probability_(&probability) {}
  /// The curve is referenced, not copied.
  explicit BehavioralWriteBackend(MonotoneCurve &&) = delete;

  double probability(double charge_current) const {
    return (*probability_)(charge_current);
  }

private:
  const MonotoneCurve *probability_;
};

struct WriteOutcome {
  bool switched = false;
  double gated_current = 0.0; // current that actually flowed
};

struct ReadOutcome {
  bool spike = false;
  double energy = 0.0;
};

/// One MTJ neuron stepping through Write -> Read -> Reset. Calls out of
/// order throw ProtocolError.
class NeuronDevice {
public:
  NeuronDevice(DeviceParams params, LlgWriteBackend *llg,
               bool keep_events = false);
  NeuronDevice(DeviceParams params, BehavioralWriteBackend behavioral,
               bool keep_events = false);

  /// Refractory neurons receive no current and cannot switch. `rng` is
  /// used by the behavioral backend only.
  WriteOutcome write(double synaptic_current, Rng &rng);
  ReadOutcome read();
  /// Resets to P when `spiked`; otherwise only advances the phase. A reset
  /// that was suppressed at network level passes count_spike = false.
  void reset(bool spiked, bool count_spike = true);

  const NeuronDeviceState &state() const { return state_; }
  const EnergyLedger &ledger() const { return ledger_; }
  EnergyLedger &ledger() { return ledger_; }
  const DeviceParams &params() const { return params_; }

private:
  void expect(Phase phase, const char *op) const;

  DeviceParams params_;
  LlgWriteBackend *llg_ = nullptr;
  std::optional<BehavioralWriteBackend> behavioral_;
  NeuronDeviceState state_;
  EnergyLedger ledger_;
};

/// LLG trial of the reset pulse: integrates the negative reset current for
/// t_reset from `start` and reports whether m ends in the P well after the
/// relaxation window.
bool llg_reset_trial(const magnetics::Macrospin &magnet,
                     const DeviceParams &params,
                     const magnetics::ThermalConfig &thermal,
                     const magnetics::MagnetizationState &start,
                     double relax = 1e-9);

} // namespace mtjsnn::device
