#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mtjsnn/characterization.hpp"
#include "mtjsnn/device.hpp"
#include "mtjsnn/errors.hpp"
#include "support.hpp"

using namespace mtjsnn;
using namespace mtjsnn::device;

namespace {

const MonotoneCurve &logistic() {
  static const MonotoneCurve curve = testing::logistic_curve();
  return curve;
}

Vec3 at_angle(double theta) {
  // angle measured from the pinned axis (-x)
  return {-std::cos(theta), std::sin(theta), 0.0};
}

void cycle(NeuronDevice &n, double current, Rng &rng, bool *spiked = nullptr) {
  n.write(current, rng);
  const ReadOutcome r = n.read();
  n.reset(r.spike);
  if (spiked) *spiked = r.spike;
}

} // namespace

TEST_SUITE("device") {

TEST_CASE("device parameter defaults and validation") {
  DeviceParams p;
  CHECK(p.R_P == 1.21e6);
  CHECK(p.R_AP == 2.5e6);
  CHECK(p.theta_SH == 0.3);
  CHECK(p.t_HM == 2e-9);
  CHECK(p.rho_HM == doctest::Approx(2e-6));
  CHECK(p.V_DD == 1.0);
  CHECK(p.R_HM == 400.0);
  CHECK_NOTHROW(p.validate());

  DeviceParams bad = p;
  bad.R_AP = bad.R_P;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = p;
  bad.theta_SH = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = p;
  bad.t_read = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("logical state follows the sign of m_x") {
  CHECK(logical_state_of({-1, 0, 0}) == LogicalState::P);
  CHECK(logical_state_of({1, 0, 0}) == LogicalState::AP);
  CHECK(logical_state_of({-0.01, 0.9, 0.4}) == LogicalState::P);
  CHECK(logical_state_of({0.01, -0.9, 0.4}) == LogicalState::AP);
}

TEST_CASE("charge to spin conversion") {
  DeviceParams p;
  CHECK(charge_to_spin(0.0, p) == 0.0);
  p.W_MTJ = 40e-9;
  CHECK(charge_to_spin(10e-6, p) == doctest::Approx(60e-6).epsilon(1e-12));
  // more than one spin per electron for the table defaults
  CHECK(p.spin_hall_gain() > 1.0);
  CHECK(DeviceParams{}.spin_hall_gain() > 1.0);
  CHECK(charge_to_spin(-10e-6, p) == doctest::Approx(-60e-6));
}

TEST_CASE("MTJ resistance interpolates conductance by angle") {
  const DeviceParams p;
  CHECK(mtj_resistance(at_angle(0.0), p) == doctest::Approx(1.21e6));
  CHECK(mtj_resistance(at_angle(std::numbers::pi), p) ==
        doctest::Approx(2.5e6));
  // 1 / ((1/1.21e6 + 1/2.5e6) / 2)
  CHECK(mtj_resistance(at_angle(std::numbers::pi / 2), p) ==
        doctest::Approx(1.6307277628e6).epsilon(1e-10));
}

TEST_CASE("write energy is I^2 R t") {
  const DeviceParams p;
  NeuronDevice n(p, BehavioralWriteBackend(logistic()));
  Rng rng(1, 1);
  n.write(71e-6, rng);
  // 71e-6^2 * 400 * 0.5e-9
  CHECK(n.ledger().write_energy() == doctest::Approx(1.0082e-15).epsilon(1e-12));
  CHECK(n.ledger().write_energy() ==
        doctest::Approx(1.008e-15).epsilon(0.05));
}

TEST_CASE("read energy") {
  const DeviceParams p;
  Rng rng(1, 1);
  const double divider = 1.0 / (1.21e6 + 2.5e6) * 0.5e-9;
  CHECK(divider == doctest::Approx(1.3477089e-16).epsilon(1e-7));

  SUBCASE("P state reads no spike") {
    NeuronDevice n(p, BehavioralWriteBackend(logistic()));
    n.write(0.0, rng);
    const ReadOutcome r = n.read();
    CHECK_FALSE(r.spike);
    CHECK(r.energy == doctest::Approx(divider + p.E_inverter).epsilon(1e-12));
    CHECK(r.energy == doctest::Approx(1.60477089e-15).epsilon(1e-8));
  }
  SUBCASE("AP state reads a spike") {
    const MonotoneCurve always({0.0, 1.0}, {1.0, 1.0});
    NeuronDevice n(p, BehavioralWriteBackend(always));
    CHECK(n.write(1e-6, rng).switched);
    const ReadOutcome r = n.read();
    CHECK(r.spike);
    CHECK(r.energy ==
          doctest::Approx(0.5e-9 / 5e6 + p.E_inverter).epsilon(1e-12));
  }
  SUBCASE("average read energy is about 1.6 fJ") {
    const double mean = 0.5 * (read_energy(p.R_P, p) + read_energy(p.R_AP, p));
    CHECK(mean == doctest::Approx(1.6e-15).epsilon(0.05));
  }
}

TEST_CASE("reset energy and suppressed resets") {
  const DeviceParams p;
  const MonotoneCurve always({0.0, 1.0}, {1.0, 1.0});
  NeuronDevice n(p, BehavioralWriteBackend(always));
  Rng rng(1, 1);

  n.write(0.0, rng);
  n.read();
  n.reset(false);
  CHECK(n.ledger().reset_energy() == 0.0);
  CHECK(n.ledger().spike_count() == 0);

  n.write(1e-6, rng);
  CHECK(n.read().spike);
  n.reset(true);
  // 150e-6^2 * 400 * 0.5e-9
  CHECK(std::abs(n.ledger().reset_energy() - 4.5e-15) < 1e-21);
  CHECK(n.ledger().spike_count() == 1);
  CHECK(n.state().logical == LogicalState::P);
}

TEST_CASE("refractory write after a spike is gated") {
  const MonotoneCurve always({0.0, 1.0}, {1.0, 1.0});
  NeuronDevice n(DeviceParams{}, BehavioralWriteBackend(always));
  Rng rng(1, 1);
  bool spiked = false;
  cycle(n, 50e-6, rng, &spiked);
  CHECK(spiked);

  const WriteOutcome gated = n.write(50e-6, rng);
  CHECK_FALSE(gated.switched);
  CHECK(gated.gated_current == 0.0);
  CHECK_FALSE(n.read().spike);
  n.reset(false);

  cycle(n, 50e-6, rng, &spiked);
  CHECK(spiked);
}

TEST_CASE("phase order violations throw") {
  NeuronDevice n(DeviceParams{},
                 BehavioralWriteBackend(logistic()));
  Rng rng(1, 1);
  CHECK_THROWS_AS(n.read(), ProtocolError);
  CHECK_THROWS_AS(n.reset(false), ProtocolError);
  n.write(0.0, rng);
  CHECK_THROWS_AS(n.write(0.0, rng), ProtocolError);
  CHECK_THROWS_AS(n.reset(false), ProtocolError);
  n.read();
  CHECK_THROWS_AS(n.read(), ProtocolError);
  CHECK_NOTHROW(n.reset(false));
}

TEST_CASE("energy ledger accumulates, merges and replays") {
  EnergyLedger a(true), b(true);
  a.record({EnergyKind::Write, 71e-6, 400, 0.5e-9, 0});
  a.record({EnergyKind::Read, 0, 0, 0, 1.6e-15});
  a.count_spike();
  b.record({EnergyKind::Reset, 150e-6, 400, 0.5e-9, 0});
  b.count_spike();
  a += b;
  CHECK(a.spike_count() == 2);
  CHECK(a.events().size() == 3);
  CHECK(a.total_energy() ==
        doctest::Approx(1.0082e-15 + 1.6e-15 + 4.5e-15).epsilon(1e-12));
  CHECK(a.energy_per_spike() == doctest::Approx(a.total_energy() / 2));

  const EnergyLedger r = EnergyLedger::replay(a.events(), a.spike_count());
  CHECK(r.write_energy() == a.write_energy());
  CHECK(r.read_energy() == a.read_energy());
  CHECK(r.reset_energy() == a.reset_energy());
  CHECK(EnergyLedger{}.energy_per_spike() == 0.0);
}

TEST_CASE("LLG backend at 71 uA switches about half the time") {
  const auto magnet =
      characterization::calibrated_magnet({}, {}, 20.0, 300.0);
  const DeviceParams p;
  int spikes = 0;
  const int trials = 400;
  for (int k = 0; k < trials; ++k) {
    magnetics::ThermalConfig cfg;
    cfg.rng_seed = 5;
    cfg.rng_stream = stream_id(0x6465766963650000ULL, k);
    LlgWriteBackend backend(magnet, cfg);
    NeuronDevice n(p, &backend);
    Rng unused(0, 0);
    bool spiked = false;
    cycle(n, 71e-6, unused, &spiked);
    spikes += spiked;
  }
  const double p_hat = static_cast<double>(spikes) / trials;
  CHECK(std::abs(p_hat - 0.5) < 0.1);
}

TEST_CASE("zero synaptic current never switches the 20 kT neuron") {
  // oracle: Monte Carlo LLG at zero current, 1e4 trials
  characterization::SwitchingContext ctx{
      characterization::calibrated_magnet({}, {}, 20.0, 300.0), {}, {}};
  const auto cell =
      characterization::estimate_cell(ctx, 0.0, 0.5e-9, 10000, 1, 0x5a, 1);
  CHECK(cell.p() < 1e-3);

  // the behavioral neuron built on that estimate stays silent
  const MonotoneCurve model({0.0, 71e-6, 200e-6}, {cell.p(), 0.5, 1.0});
  NeuronDevice n(DeviceParams{}, BehavioralWriteBackend(model));
  Rng rng(3, 3);
  int spikes = 0;
  for (int k = 0; k < 10000; ++k) {
    bool spiked = false;
    cycle(n, 0.0, rng, &spiked);
    spikes += spiked;
  }
  CHECK(spikes == 0);
}

// The reset pulse is required to return every AP state to P. This holds at
// 10 kT but not fully at 20 kT with the calibrated spin-Hall gain; the
// condition is kept as stated.
TEST_CASE("reset pulse returns thermalized AP states to P") {
  const auto magnet =
      characterization::calibrated_magnet({}, {}, 20.0, 300.0);
  const DeviceParams p;
  int reset = 0;
  const int trials = 1000;
  for (int k = 0; k < trials; ++k) {
    magnetics::ThermalConfig cfg;
    cfg.rng_seed = 1;
    cfg.rng_stream = stream_id(0x7265736574000000ULL, 2 * k);
    magnetics::HeunIntegrator th(magnet, cfg);
    const auto start = magnetics::thermalize(th, +1.0);
    cfg.rng_stream = stream_id(0x7265736574000000ULL, 2 * k + 1);
    reset += llg_reset_trial(magnet, p, cfg, start);
  }
  CHECK(reset == trials);
}

} // TEST_SUITE
