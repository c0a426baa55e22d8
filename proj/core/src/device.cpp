#include "mtjsnn/device.hpp"

#include <cmath>

#include "mtjsnn/errors.hpp"

namespace mtjsnn::device {

void DeviceParams::validate() const {
  if (!(R_P > 0.0) || !(R_AP > R_P))
    throw ConfigError("device: need R_AP > R_P > 0");
  if (!(theta_SH > 0.0 && theta_SH <= 1.0))
    throw ConfigError("device: theta_SH must lie in (0, 1]");
  if (!(W_MTJ > 0.0) || !(t_HM > 0.0) || !(R_HM > 0.0) || !(rho_HM > 0.0))
    throw ConfigError("device: dimensions and resistances must be positive");
  if (!(t_write > 0.0) || !(t_read > 0.0) || !(t_reset > 0.0))
    throw ConfigError("device: phase durations must be positive");
  if (!(V_DD > 0.0) || !(I_reset >= 0.0) || !(E_inverter >= 0.0))
    throw ConfigError("device: V_DD, I_reset and E_inverter out of range");
}

LogicalState logical_state_of(const Vec3 &m) {
  return dot(m, kPinnedAxis) > 0.0 ? LogicalState::P : LogicalState::AP;
}

void EnergyLedger::record(const EnergyEvent &event) {
  const double e = event.energy();
  switch (event.kind) {
  case EnergyKind::Write: write_ += e; break;
  case EnergyKind::Read: read_ += e; break;
  case EnergyKind::Reset: reset_ += e; break;
  }
  if (keep_events_) events_.push_back(event);
}

double EnergyLedger::energy_per_spike() const {
  return spikes_ > 0 ? total_energy() / static_cast<double>(spikes_) : 0.0;
}

EnergyLedger &EnergyLedger::operator+=(const EnergyLedger &other) {
  write_ += other.write_;
  read_ += other.read_;
  reset_ += other.reset_;
  spikes_ += other.spikes_;
  if (keep_events_ && other.keep_events_)
    events_.insert(events_.end(), other.events_.begin(), other.events_.end());
  return *this;
}

EnergyLedger EnergyLedger::replay(std::span<const EnergyEvent> events,
                                  std::int64_t spikes) {
  EnergyLedger ledger(false);
  for (const EnergyEvent &e : events) ledger.record(e);
  ledger.spikes_ = spikes;
  return ledger;
}

double charge_to_spin(double charge_current, const DeviceParams &params) {
  return params.spin_hall_gain() * charge_current;
}

double mtj_resistance(const Vec3 &m, const DeviceParams &params) {
  const double cos_theta = dot(m, kPinnedAxis);
  const double g_p = 1.0 / params.R_P;
  const double g_ap = 1.0 / params.R_AP;
  const double g =
      g_p * (1.0 + cos_theta) / 2.0 + g_ap * (1.0 - cos_theta) / 2.0;
  return 1.0 / g;
}

double read_energy(double neuron_resistance, const DeviceParams &params) {
  return params.V_DD * params.V_DD / (neuron_resistance + params.R_AP) *
             params.t_read +
         params.E_inverter;
}

LlgWriteBackend::LlgWriteBackend(const magnetics::Macrospin &magnet,
                                 const magnetics::ThermalConfig &thermal)
    : integrator_(magnet, thermal) {}

magnetics::MagnetizationState
LlgWriteBackend::integrate(magnetics::MagnetizationState state,
                           double spin_current, double duration) {
  return integrator_.run(state, spin_current * kSpinHallPolarization, duration);
}

magnetics::MagnetizationState LlgWriteBackend::thermalized(double sign) {
  return magnetics::thermalize(integrator_, sign);
}

NeuronDevice::NeuronDevice(DeviceParams params, LlgWriteBackend *llg,
                           bool keep_events)
    : params_(params), llg_(llg), ledger_(keep_events) {
  params_.validate();
  if (llg_ == nullptr) throw ConfigError("neuron: LLG backend is null");
  state_.magnet = llg_->thermalized(-1.0);
}

NeuronDevice::NeuronDevice(DeviceParams params,
                           BehavioralWriteBackend behavioral, bool keep_events)
    : params_(params), behavioral_(behavioral), ledger_(keep_events) {
  params_.validate();
}

void NeuronDevice::expect(Phase phase, const char *op) const {
  if (state_.phase != phase)
    throw ProtocolError(std::string("neuron: ") + op +
                        " called out of the write/read/reset order");
}

WriteOutcome NeuronDevice::write(double synaptic_current, Rng &rng) {
  expect(Phase::Write, "write");
  WriteOutcome out;
  if (state_.refractory_remaining > 0) {
    --state_.refractory_remaining;
    synaptic_current = 0.0;
  }
  out.gated_current = synaptic_current;

  const LogicalState before = state_.logical;
  if (llg_ != nullptr) {
    state_.magnet = llg_->integrate(state_.magnet,
                                    charge_to_spin(synaptic_current, params_),
                                    params_.t_write);
    state_.logical = logical_state_of(state_.magnet.m);
  } else if (synaptic_current != 0.0 &&
             rng.bernoulli(behavioral_->probability(synaptic_current))) {
    state_.logical = LogicalState::AP;
    state_.magnet.m = -kPinnedAxis;
  }
  out.switched = before == LogicalState::P && state_.logical == LogicalState::AP;

  ledger_.record({EnergyKind::Write, synaptic_current, params_.R_HM,
                  params_.t_write, 0.0});
  state_.phase = Phase::Read;
  return out;
}

ReadOutcome NeuronDevice::read() {
  expect(Phase::Read, "read");
  const double r = mtj_resistance(state_.magnet.m, params_);
  ReadOutcome out{state_.logical == LogicalState::AP, read_energy(r, params_)};
  ledger_.record({EnergyKind::Read, 0.0, 0.0, 0.0, out.energy});
  state_.phase = Phase::Reset;
  return out;
}

void NeuronDevice::reset(bool spiked, bool count_spike) {
  expect(Phase::Reset, "reset");
  if (spiked) {
    if (count_spike) ledger_.count_spike();
    state_.logical = LogicalState::P;
    state_.magnet = llg_ != nullptr ? llg_->thermalized(-1.0)
                                    : magnetics::easy_axis_state(-1.0);
    state_.refractory_remaining = 1;
    ledger_.record({EnergyKind::Reset, params_.I_reset, params_.R_HM,
                    params_.t_reset, 0.0});
  }
  state_.phase = Phase::Write;
}

bool llg_reset_trial(const magnetics::Macrospin &magnet,
                     const DeviceParams &params,
                     const magnetics::ThermalConfig &thermal,
                     const magnetics::MagnetizationState &start, double relax) {
  magnetics::HeunIntegrator integrator(magnet, thermal);
  const Vec3 drive =
      charge_to_spin(-params.I_reset, params) * kSpinHallPolarization;
  auto s = integrator.run(start, drive, params.t_reset);
  s = integrator.run(s, Vec3{}, relax);
  return logical_state_of(s.m) == LogicalState::P;
}

} // namespace mtjsnn::device
