// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (capped at 100).

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "mtjsnn/characterization.hpp"
#include "mtjsnn/device.hpp"
#include "mtjsnn/io.hpp"
#include "mtjsnn/magnetics.hpp"
#include "mtjsnn/parallel.hpp"
#include "mtjsnn/snn.hpp"

namespace fs = std::filesystem;
namespace ch = mtjsnn::characterization;
namespace io = mtjsnn::io;
namespace mg = mtjsnn::magnetics;
namespace snn = mtjsnn::snn;
using mtjsnn::Vec3;

namespace {

// Tolerances and sizes. Fixed here, not configurable.
constexpr double kOperatingCurrent = 71e-6;
constexpr double kOperatingWidth = 0.5e-9;
constexpr int kOperatingTrials = 2000;
constexpr double kOperatingBand = 0.1;
constexpr double kCrossingMarginSE = 2.0;
constexpr double kWriteEnergyTol = 0.05; // relative
constexpr double kResetEnergyTol = 1e-21; // J, 1e-6 fJ
constexpr double kReadEnergyTol = 0.05;   // relative to 1.6 fJ
constexpr long kNormSteps = 1000000;
constexpr double kNormTol = 1e-9;
constexpr int kVarianceSamples = 100000;
constexpr double kVarianceTol = 0.02;
constexpr double kHalvingTol = 1e-4;
constexpr int kFidelityTrials = 2000;
constexpr int kFidelityPoints = 10;
constexpr double kFidelityTol = 0.05;
constexpr double kStdpPlus = 0.0120110610;   // 0.03 * 0.5 * exp(-1 / 4.5)
constexpr double kStdpMinus = -0.0040936538; // -0.01 * 0.5 * exp(-1 / 5)
constexpr double kStdpTol = 1e-6;
constexpr double kSelectivity = 2.0;
constexpr double kAccuracyFloor = 0.8;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char *f, double v) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

unsigned threads() { return mtjsnn::resolve_threads(0); }

ch::SwitchingContext context(const io::RunConfig &cfg, double eb_kT) {
  return {ch::calibrated_magnet(cfg.lateral_geometry(), cfg.material(), eb_kT,
                                cfg.magnetics.temperature),
          cfg.device, cfg.protocol()};
}

// 1 ---------------------------------------------------------------------------

Outcome operating_point() {
  const io::RunConfig cfg;
  const auto cell = ch::estimate_cell(context(cfg, 20.0), kOperatingCurrent,
                                      kOperatingWidth, kOperatingTrials,
                                      cfg.magnetics.seed, 0xC1, threads());
  const double p = cell.p();
  return {std::abs(p - 0.5) <= kOperatingBand,
          "P_sw(71 uA, 20 kT, 0.5 ns) = " + fmt("%.4f", p) + " +- " +
              fmt("%.4f", cell.stderr_p()) + " over " +
              std::to_string(kOperatingTrials) + " trials"};
}

// 2 ---------------------------------------------------------------------------

Outcome barrier_shift() {
  io::RunConfig cfg;
  cfg.sweep.barriers_kT = {10.0, 20.0, 30.0};
  cfg.sweep.pulse_widths = {1e-9};
  const auto table = ch::sweep(cfg.sweep_spec(), cfg.sweep_environment(threads()));
  std::vector<ch::Crossing> c;
  for (double eb : cfg.sweep.barriers_kT)
    c.push_back(ch::crossing_current(ch::build_behavioral_model(table, eb, 1e-9),
                                     0.5, cfg.sweep.trials));
  bool pass = true;
  std::string detail = "I50 at 1 ns:";
  for (std::size_t k = 0; k < c.size(); ++k)
    detail += " " + fmt("%.2f", c[k].current * 1e6) + "+-" +
              fmt("%.2f", c[k].stderr_current * 1e6);
  detail += " uA; margin/SE";
  for (std::size_t k = 1; k < c.size(); ++k) {
    const double se = std::hypot(c[k].stderr_current, c[k - 1].stderr_current);
    const double margin = c[k].current - c[k - 1].current;
    pass = pass && margin > kCrossingMarginSE * se;
    detail += " " + fmt("%.1f", margin / se);
  }
  return {pass, detail};
}

// 3 ---------------------------------------------------------------------------

Outcome pulse_width_dispersion() {
  io::RunConfig cfg;
  cfg.sweep.barriers_kT = {20.0};
  cfg.sweep.pulse_widths = {0.2e-9, 0.5e-9, 1e-9};
  const auto table = ch::sweep(cfg.sweep_spec(), cfg.sweep_environment(threads()));
  std::vector<double> d;
  for (double w : cfg.sweep.pulse_widths)
    d.push_back(ch::dispersion_metric(
        ch::build_behavioral_model(table, 20.0, w).curve));
  return {d[0] > d[1] && d[1] > d[2],
          "I(0.9) - I(0.1) at 0.2/0.5/1 ns: " + fmt("%.2f", d[0] * 1e6) + " > " +
              fmt("%.2f", d[1] * 1e6) + " > " + fmt("%.2f", d[2] * 1e6) + " uA"};
}

// 4 ---------------------------------------------------------------------------

Outcome energy_arithmetic() {
  using namespace mtjsnn::device;
  const DeviceParams p;
  const mtjsnn::MonotoneCurve always({0.0, 1.0}, {1.0, 1.0});
  NeuronDevice n(p, BehavioralWriteBackend(always));
  mtjsnn::Rng rng(1, 1);
  n.write(kOperatingCurrent, rng);
  n.read();
  n.reset(true);
  const double write = n.ledger().write_energy();
  const double reset = n.ledger().reset_energy();
  const double exact_write = kOperatingCurrent * kOperatingCurrent * 400.0 * 0.5e-9;
  const double read_avg = 0.5 * (read_energy(p.R_P, p) + read_energy(p.R_AP, p));

  const bool pass = std::abs(write - exact_write) <= kWriteEnergyTol * exact_write &&
                    std::abs(write - 1.008e-15) <= kWriteEnergyTol * 1.008e-15 &&
                    std::abs(reset - 4.5e-15) <= kResetEnergyTol &&
                    std::abs(read_avg - 1.6e-15) <= kReadEnergyTol * 1.6e-15;
  return {pass, "write " + fmt("%.6f", write * 1e15) + " fJ, reset " +
                    fmt("%.9f", reset * 1e15) + " fJ, mean read " +
                    fmt("%.4f", read_avg * 1e15) + " fJ"};
}

// 5 ---------------------------------------------------------------------------

Outcome pulse_train_shape() {
  const io::RunConfig cfg;
  ch::PulseTrainSpec spec; // 30 kT disk, T = 0, three 50 uA pulses
  spec.sample_every = 1;
  const auto r = ch::run_pulse_train(spec, cfg.lateral_geometry(),
                                     cfg.material(), cfg.device);

  // energy-equivalent easy-axis component: rises while a pulse is on,
  // decays otherwise
  int rising = 0, leaking = 0;
  double max_mx = -1.0;
  double prev = r.magnet.equivalent_easy_axis(r.samples.front().m);
  std::vector<double> end_values;
  for (std::size_t k = 1; k < r.samples.size(); ++k) {
    const double t = r.samples[k].time;
    const double v = r.magnet.equivalent_easy_axis(r.samples[k].m);
    bool on = false;
    for (const auto &p : r.pulses) {
      on = on || (t > p.start + 1e-15 && t <= p.start + p.duration + 1e-15);
      if (std::abs(t - (p.start + p.duration)) < 1e-15) end_values.push_back(v);
    }
    if (on && v < prev - 1e-12) ++rising;
    if (!on && v > prev + 1e-12) ++leaking;
    max_mx = std::max(max_mx, r.samples[k].m.x);
    prev = v;
  }
  bool excited = end_values.size() == 3;
  for (double v : end_values) excited = excited && v > -0.99;

  ch::PulseTrainSpec strong = spec;
  strong.current = 100e-6;
  const auto s = ch::run_pulse_train(strong, cfg.lateral_geometry(),
                                     cfg.material(), cfg.device);
  const double final_mx = s.samples.back().m.x;

  std::string ends;
  for (double v : end_values) ends += " " + fmt("%.4f", v);
  return {rising == 0 && leaking == 0 && max_mx < 0.0 && excited && final_mx > 0.9,
          "violations rise/leak " + std::to_string(rising) + "/" +
              std::to_string(leaking) + ", max m_x " + fmt("%.4f", max_mx) +
              ", m_eq at pulse ends" + ends + "; 100 uA final m_x " +
              fmt("%.4f", final_mx)};
}

// 6 ---------------------------------------------------------------------------

Vec3 zero_t_run(const mg::Macrospin &magnet, double dt, double tilt) {
  mg::ThermalConfig cfg;
  cfg.temperature = 0.0;
  cfg.dt = dt;
  mg::HeunIntegrator integ(magnet, cfg);
  mg::MagnetizationState s;
  s.m = {-std::cos(tilt), std::sin(tilt), 0.0};
  return integ.run(s, {}, 1e-9).m;
}

Outcome integrator_suite() {
  const io::RunConfig cfg;
  const auto magnet = ch::calibrated_magnet(cfg.lateral_geometry(),
                                            cfg.material(), 20.0, 300.0);

  mg::ThermalConfig thermal;
  thermal.rng_seed = cfg.magnetics.seed;
  mg::HeunIntegrator integ(magnet, thermal);
  mg::MagnetizationState s = mg::easy_axis_state(-1.0);
  double norm_err = 0.0;
  for (long k = 0; k < kNormSteps; ++k) {
    // alternate drive to cover both torque signs
    const double is = (k / 20000) % 2 == 0 ? 3e-4 : -3e-4;
    s = integ.step(s, {is, 0.0, 0.0});
    norm_err = std::max(norm_err, std::abs(mtjsnn::norm(s.m) - 1.0));
  }

  mg::ThermalConfig cold;
  cold.temperature = 0.0;
  mg::HeunIntegrator relax(magnet, cold);
  mg::MagnetizationState r;
  r.m = mtjsnn::normalized(Vec3{-0.6, 0.7, 0.3});
  int energy_rises = 0;
  double e = magnet.energy(r.m);
  for (int k = 0; k < 100000; ++k) {
    r = relax.step(r, {});
    const double next = magnet.energy(r.m);
    energy_rises += next > e * (1.0 + 1e-12);
    e = next;
  }

  const double sigma = mg::thermal_field_sigma(thermal, magnet.material,
                                               magnet.geometry);
  mtjsnn::Rng rng(cfg.magnetics.seed, 0x76);
  double sx = 0, sy = 0, sz = 0;
  for (int k = 0; k < kVarianceSamples; ++k) {
    const Vec3 h = mg::thermal_field(thermal, magnet.material, magnet.geometry, rng);
    sx += h.x * h.x;
    sy += h.y * h.y;
    sz += h.z * h.z;
  }
  double var_err = 0.0;
  for (double v : {sx, sy, sz})
    var_err = std::max(var_err, std::abs(v / kVarianceSamples / (sigma * sigma) - 1.0));

  // 3 degrees, and the thermal rms angle at 20 kT
  double gap = 0.0;
  for (double tilt : {3.0 * std::numbers::pi / 180.0, std::sqrt(1.0 / 40.0)}) {
    const Vec3 a = zero_t_run(magnet, cfg.magnetics.dt, tilt);
    const Vec3 b = zero_t_run(magnet, cfg.magnetics.dt / 2, tilt);
    gap = std::max({gap, std::abs(a.x - b.x), std::abs(a.y - b.y),
                    std::abs(a.z - b.z)});
  }

  return {norm_err < kNormTol && energy_rises == 0 && var_err < kVarianceTol &&
              gap < kHalvingTol,
          "max |m|-1 " + fmt("%.2e", norm_err) + " over 1e6 steps, energy rises " +
              std::to_string(energy_rises) + ", variance error " +
              fmt("%.4f", var_err) + ", dt-halving gap " + fmt("%.2e", gap)};
}

// 7 ---------------------------------------------------------------------------

Outcome model_fidelity() {
  io::RunConfig cfg;
  cfg.network.model_trials = kFidelityTrials;
  const auto table = io::model_table(cfg, threads());
  const auto model = ch::build_behavioral_model(
      table, cfg.network.model_barrier_kT, cfg.network.model_pulse_width);

  const double lo = model.curve.inverse(0.02);
  const double hi = model.curve.inverse(0.98);
  const auto ctx = context(cfg, cfg.network.model_barrier_kT);
  double worst = 0.0, at = 0.0;
  for (int k = 0; k < kFidelityPoints; ++k) {
    const double i = lo + (hi - lo) * k / (kFidelityPoints - 1);
    // fresh seed, so the estimate shares no draws with the table
    const auto cell = ch::estimate_cell(ctx, i, cfg.network.model_pulse_width,
                                        kFidelityTrials, cfg.magnetics.seed + 1,
                                        0xC7 + static_cast<std::uint64_t>(k),
                                        threads());
    const double g = std::abs(cell.p() - model.probability(i));
    if (g > worst) {
      worst = g;
      at = i;
    }
  }
  return {worst < kFidelityTol,
          "max |model - LLG| " + fmt("%.4f", worst) + " at " +
              fmt("%.2f", at * 1e6) + " uA over " + fmt("%.2f", lo * 1e6) + ".." +
              fmt("%.2f", hi * 1e6) + " uA"};
}

// 8 ---------------------------------------------------------------------------

Outcome stdp_values() {
  const snn::StdpConfig cfg;
  const double plus = snn::stdp_potentiation(cfg, 0.5, 1.0);
  const double minus = snn::stdp_depression(cfg, 0.5, -1.0);
  return {std::abs(plus - kStdpPlus) < kStdpTol &&
              std::abs(minus - kStdpMinus) < kStdpTol,
          "dw(+1) = " + fmt("%.10f", plus) + ", dw(-1) = " + fmt("%.10f", minus)};
}

// 9 ---------------------------------------------------------------------------

Outcome learning() {
  io::RunConfig cfg; // synthetic set, 20 images per class, 9 neurons
  const auto table = io::model_table(cfg, threads());
  const auto model = ch::build_behavioral_model(
      table, cfg.network.model_barrier_kT, cfg.network.model_pulse_width);
  const auto data = io::training_set(cfg.data);

  snn::EncoderConfig encoder = cfg.network.encoder;
  const auto weights = snn::initial_weights(cfg.network.network);
  encoder.V_row = snn::calibrate_row_voltage(data, encoder, weights, model.curve,
                                             cfg.network.target_probability)
                      .V_row;
  snn::Network net(cfg.network.network, encoder, cfg.network.stdp, cfg.device,
                   model.curve, weights);
  const auto stats = snn::train(net, data);
  const auto &w = stats.windowed_max_probability;
  const bool trend = w.size() >= 2 && w.front() > w.back();

  const auto assignments = snn::assign_classes(snn::test(net, data));
  const auto held_out = io::held_out_set(cfg.data);
  const auto result = snn::test(net, held_out);
  const double acc = snn::accuracy(result, assignments);

  // per-class image counts, so unequal class sizes do not skew the ratio
  std::vector<double> count(result.classes.size(), 0.0);
  for (int label : result.labels)
    for (std::size_t c = 0; c < result.classes.size(); ++c)
      count[c] += label == result.classes[c];
  bool selective = true;
  std::string ratios;
  for (std::size_t c = 0; c < result.classes.size(); ++c) {
    double best = 0.0;
    for (const auto &row : result.class_spikes) {
      double in = row[c] / count[c], out = 0.0, out_n = 0.0;
      for (std::size_t o = 0; o < row.size(); ++o)
        if (o != c) {
          out += static_cast<double>(row[o]);
          out_n += count[o];
        }
      out /= out_n;
      const double ratio = in > 0.0 ? (out > 0.0 ? in / out : INFINITY) : 0.0;
      best = std::max(best, ratio);
    }
    selective = selective && best >= kSelectivity;
    ratios += " " + (std::isinf(best) ? std::string("inf") : fmt("%.2f", best));
  }

  return {trend && selective && acc > kAccuracyFloor,
          "windowed max P first " + fmt("%.3f", w.empty() ? 0.0 : w.front()) +
              " last " + fmt("%.3f", w.empty() ? 0.0 : w.back()) +
              ", best class ratio" + ratios + ", held-out accuracy " +
              fmt("%.3f", acc)};
}

// 10 --------------------------------------------------------------------------

#ifdef MTJSNN_CLI

std::map<std::string, std::string> snapshot(const fs::path &dir) {
  std::map<std::string, std::string> files;
  for (const auto &e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file())
      files[fs::relative(e.path(), dir).string()] = io::read_text(e.path());
  return files;
}

// Runs the full CLI pipeline into `out` and returns every artifact plus the
// console output.
std::map<std::string, std::string> cli_run(const fs::path &out, int workers) {
  fs::remove_all(out);
  fs::create_directories(out);
  const fs::path log = out.string() + ".log";
  std::string currents;
  for (int k = 0; k <= 10; ++k)
    currents += (k ? "," : "") + io::format_double(20e-6 * k);
  const std::string common = std::string(MTJSNN_CLI) + " --seed 7 --threads " +
                             std::to_string(workers) + " -o " + out.string();
  const std::vector<std::string> commands = {
      " sweep --eb 20 --tpw 0.5e-9 --trials 100 --currents " + currents,
      " pulse-demo --count 2",
      " calibrate",
      " train --images 3 --table " + (out / "table.json").string(),
      " test --images 3",
      " energy-report",
  };
  fs::remove(log);
  for (const auto &c : commands) {
    const std::string cmd = common + c + " >> " + log.string() + " 2>&1";
    if (std::system(cmd.c_str()) != 0)
      throw mtjsnn::IoError("cli failed: " + cmd);
  }
  auto files = snapshot(out);
  files["<console>"] = io::read_text(log);
  return files;
}

Outcome cli_determinism() {
  const fs::path out = fs::temp_directory_path() / "mtjsnn-acceptance-cli";
  const auto a = cli_run(out, 1);
  const auto b = cli_run(out, 2);
  const auto c = cli_run(out, 1);
  std::vector<std::string> differ;
  std::set<std::string> names;
  for (const auto *m : {&a, &b, &c})
    for (const auto &kv : *m) names.insert(kv.first);
  for (const auto &n : names) {
    const auto ia = a.find(n), ib = b.find(n), ic = c.find(n);
    if (ia == a.end() || ib == b.end() || ic == c.end() ||
        ia->second != ib->second || ia->second != ic->second)
      differ.push_back(n);
  }
  std::string detail = std::to_string(names.size()) +
                       " artifacts over 3 runs (threads 1, 2, 1)";
  for (const auto &n : differ) detail += ", differs: " + n;
  return {differ.empty() && names.size() > 5, detail};
}

#else

Outcome cli_determinism() { return {false, "built without the CLI"}; }

#endif

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  app.add_option("--only", only, "Criteria to run (default: all)")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char *, std::function<Outcome()>>> criteria = {
      {"operating point at 71 uA", operating_point},
      {"I50 shifts right with the barrier", barrier_shift},
      {"dispersion grows as the pulse shortens", pulse_width_dispersion},
      {"energy arithmetic", energy_arithmetic},
      {"integrate-and-leak pulse train", pulse_train_shape},
      {"integrator suite", integrator_suite},
      {"behavioral model fidelity", model_fidelity},
      {"STDP unit values", stdp_values},
      {"end-to-end learning", learning},
      {"CLI determinism across worker counts", cli_determinism},
  };

  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end())
      continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start).count();
    std::printf("%s %2d %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id,
                criteria[k].first, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return std::min(failed, 100);
}
