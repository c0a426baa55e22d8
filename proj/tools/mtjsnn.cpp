// mtjsnn command-line driver.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "mtjsnn/characterization.hpp"
#include "mtjsnn/errors.hpp"
#include "mtjsnn/io.hpp"
#include "mtjsnn/parallel.hpp"
#include "mtjsnn/snn.hpp"

namespace fs = std::filesystem;
namespace ch = mtjsnn::characterization;
namespace io = mtjsnn::io;
namespace snn = mtjsnn::snn;
using json = nlohmann::json;

namespace {

enum ExitCode {
  kOk = 0,
  kFailure = 1,
  kConfigFailure = 2,
  kIoFailure = 3,
  kNumericalFailure = 4,
};

struct Common {
  std::string config_path;
  std::uint64_t seed = 0;
  CLI::Option *seed_option = nullptr;
  int threads = 1;
  std::string out;
};

io::RunConfig resolve(const Common &c) {
  io::RunConfig cfg =
      c.config_path.empty() ? io::RunConfig{} : io::load_config(c.config_path);
  if (c.seed_option && c.seed_option->count() > 0) {
    cfg.magnetics.seed = c.seed;
    cfg.network.network.seed = c.seed;
  }
  if (!c.out.empty()) cfg.io.output_dir = c.out;
  return cfg;
}

unsigned threads_of(const Common &c) { return mtjsnn::resolve_threads(c.threads); }

fs::path out_path(const io::RunConfig &cfg, const char *name) {
  return fs::path(cfg.io.output_dir) / name;
}

void note(const std::string &line) { std::printf("%s\n", line.c_str()); }

std::string fmt(const char *f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// pulse-demo ---------------------------------------------------------------

int pulse_demo(const Common &common, ch::PulseTrainSpec spec) {
  io::RunConfig cfg = resolve(common);
  cfg.validate();
  spec.dt = cfg.magnetics.dt;
  spec.seed = cfg.magnetics.seed;
  spec.drive = cfg.sweep.drive;
  const auto r = ch::run_pulse_train(spec, cfg.lateral_geometry(),
                                     cfg.material(), cfg.device);

  const std::string command =
      "pulse-demo current=" + io::format_double(spec.current) +
      " width=" + io::format_double(spec.width) +
      " gap=" + io::format_double(spec.gap) +
      " count=" + std::to_string(spec.count) +
      " eb_kT=" + io::format_double(spec.eb_kT) +
      " temperature=" + io::format_double(spec.temperature) +
      " tilt=" + io::format_double(spec.tilt);
  const auto prov = io::make_provenance(cfg, cfg.magnetics.seed, command);
  const fs::path path = out_path(cfg, "pulse_demo.csv");
  io::write_text(path, io::stamp_csv(io::trajectory_to_csv(r.samples), prov));

  // Envelope at the end of each pulse and just before the next one.
  auto value_at = [&](double t) {
    const auto *best = &r.samples.front();
    for (const auto &s : r.samples)
      if (std::abs(s.time - t) < std::abs(best->time - t)) best = &s;
    return r.magnet.equivalent_easy_axis(best->m);
  };
  double peak = -1.0;
  for (const auto &s : r.samples) peak = std::max(peak, s.m.x);
  note("free layer thickness " + fmt("%.2f", r.magnet.geometry.thickness * 1e9) +
       " nm");
  for (std::size_t k = 0; k < r.pulses.size(); ++k) {
    const auto &p = r.pulses[k];
    note("pulse " + std::to_string(k + 1) + ": m_eq start " +
         fmt("%.4f", value_at(p.start)) + " end " +
         fmt("%.4f", value_at(p.start + p.duration)));
  }
  note("max m_x " + fmt("%.4f", peak) +
       (peak > 0.0 ? " (reversed)" : " (no reversal)"));
  note("wrote " + path.string());
  return kOk;
}

// sweep --------------------------------------------------------------------

struct SweepFlags {
  std::vector<double> eb;
  std::vector<double> tpw;
  std::vector<double> currents;
  int trials = 0;
};

int run_sweep(const Common &common, const SweepFlags &f) {
  io::RunConfig cfg = resolve(common);
  if (!f.eb.empty()) cfg.sweep.barriers_kT = f.eb;
  if (!f.tpw.empty()) cfg.sweep.pulse_widths = f.tpw;
  if (!f.currents.empty()) cfg.sweep.currents = f.currents;
  if (f.trials > 0) cfg.sweep.trials = f.trials;
  cfg.validate();

  const auto table = ch::sweep(cfg.sweep_spec(), cfg.sweep_environment(threads_of(common)));
  const auto prov = io::make_provenance(cfg, cfg.magnetics.seed, "sweep");
  const fs::path path = out_path(cfg, "table.json");
  io::write_text(path, io::table_to_json(table, prov));
  if (cfg.io.csv)
    io::write_text(out_path(cfg, "table.csv"),
                   io::stamp_csv(io::table_to_csv(table), prov));

  for (double eb : table.barrier_targets)
    for (double tpw : table.pulse_widths) {
      std::string line = "E_B " + fmt("%g", eb) + " kT, t_PW " +
                         fmt("%g", tpw * 1e9) + " ns: ";
      try {
        const auto model = ch::build_behavioral_model(table, eb, tpw);
        const auto c = ch::crossing_current(model, 0.5, cfg.sweep.trials);
        line += "I50 " + fmt("%.2f", c.current * 1e6) + " +- " +
                fmt("%.2f", c.stderr_current * 1e6) + " uA, dispersion " +
                fmt("%.2f", ch::dispersion_metric(model.curve) * 1e6) + " uA";
      } catch (const mtjsnn::NumericalError &e) {
        line += std::string("no model (") + e.what() + ")";
      }
      note(line);
    }
  note("wrote " + path.string());
  return kOk;
}

// calibrate ----------------------------------------------------------------

int calibrate(const Common &common, bool width_search, int width_trials) {
  io::RunConfig cfg = resolve(common);
  cfg.validate();
  json report;
  json barriers = json::array();
  const double kT = mtjsnn::magnetics::kPhysical.k_B * cfg.magnetics.temperature;
  for (double eb : cfg.sweep.barriers_kT) {
    ch::BarrierCalibration cal;
    ch::calibrated_magnet(cfg.lateral_geometry(), cfg.material(), eb,
                          cfg.magnetics.temperature, &cal);
    json b;
    b["EB_kT"] = eb;
    b["thickness_m"] = cal.thickness;
    b["base_tensor"] = {cal.base.x, cal.base.y, cal.base.z};
    b["tensor"] = {cal.tensor.x, cal.tensor.y, cal.tensor.z};
    b["scale"] = cal.scale;
    b["achieved_kT"] = cal.achieved / kT;
    barriers.push_back(b);
    note("E_B " + fmt("%g", eb) + " kT: t_FL " + fmt("%.3f", cal.thickness * 1e9) +
         " nm, N = (" + fmt("%.4f", cal.tensor.x) + ", " +
         fmt("%.4f", cal.tensor.y) + ", " + fmt("%.4f", cal.tensor.z) +
         "), scale " + fmt("%.4f", cal.scale));
  }
  report["barriers"] = barriers;
  report["spin_hall_gain"] = cfg.device.spin_hall_gain();
  report["W_MTJ_m"] = cfg.device.W_MTJ;
  note("spin-Hall gain " + fmt("%.3f", cfg.device.spin_hall_gain()) +
       " at W_MTJ " + fmt("%.1f", cfg.device.W_MTJ * 1e9) + " nm");

  if (width_search) {
    ch::SwitchingContext ctx{
        ch::calibrated_magnet(cfg.lateral_geometry(), cfg.material(),
                              cfg.network.model_barrier_kT,
                              cfg.magnetics.temperature),
        cfg.device, cfg.protocol()};
    const double target = 71e-6;
    const double w = ch::calibrate_spin_hall_width(
        ctx, target, cfg.network.model_pulse_width, width_trials,
        cfg.magnetics.seed, threads_of(common));
    report["width_search"] = {{"target_current_A", target},
                              {"pulse_width_s", cfg.network.model_pulse_width},
                              {"EB_kT", cfg.network.model_barrier_kT},
                              {"trials", width_trials},
                              {"W_MTJ_m", w}};
    note("W_MTJ for P = 0.5 at 71 uA: " + fmt("%.2f", w * 1e9) + " nm");
  }
  report["provenance"] = json::parse(io::provenance_json(
      io::make_provenance(cfg, cfg.magnetics.seed, "calibrate")));
  const fs::path path = out_path(cfg, "calibration.json");
  io::write_text(path, report.dump(2));
  note("wrote " + path.string());
  return kOk;
}

// train / test -------------------------------------------------------------

struct DataFlags {
  std::string dataset;
  int images = 0;
  std::string idx_images;
  std::string idx_labels;
  std::string table;
};

void apply_train_flags(io::RunConfig &cfg, const DataFlags &f) {
  if (!f.dataset.empty()) cfg.data.dataset = f.dataset;
  if (f.images > 0) cfg.data.train_images = f.images;
  if (!f.idx_images.empty()) cfg.data.idx_train_images = f.idx_images;
  if (!f.idx_labels.empty()) cfg.data.idx_train_labels = f.idx_labels;
  if (!f.table.empty()) cfg.io.table = f.table;
}

ch::BehavioralModel load_model(const io::RunConfig &cfg) {
  const auto table = io::table_from_json(io::read_text(cfg.io.table));
  return ch::build_behavioral_model(table, cfg.network.model_barrier_kT,
                                    cfg.network.model_pulse_width);
}

int train(const Common &common, const DataFlags &f) {
  io::RunConfig cfg = resolve(common);
  apply_train_flags(cfg, f);
  cfg.network.network.keep_energy_events = true;
  cfg.validate();

  if (cfg.io.table.empty()) {
    note("no switching table given; sweeping the model slice");
    io::RunConfig sweep_cfg = cfg;
    const auto table = io::model_table(sweep_cfg, threads_of(common));
    const fs::path table_path = out_path(cfg, "model_table.json");
    io::write_text(table_path,
                   io::table_to_json(table, io::make_provenance(
                                                sweep_cfg, cfg.magnetics.seed,
                                                "train model sweep")));
    cfg.io.table = table_path.string();
  }
  const auto model = load_model(cfg);
  const auto data = io::training_set(cfg.data);

  snn::EncoderConfig encoder = cfg.network.encoder;
  const auto weights = snn::initial_weights(cfg.network.network);
  snn::RowVoltageCalibration cal{encoder.V_row, 0.0, 0.0, 0.0};
  if (cfg.network.calibrate_v_row) {
    cal = snn::calibrate_row_voltage(data, encoder, weights, model.curve,
                                     cfg.network.target_probability);
    encoder.V_row = cal.V_row;
  }
  // The resolved config carries the voltage actually used.
  cfg.network.encoder.V_row = encoder.V_row;
  cfg.network.calibrate_v_row = false;

  snn::Network net(cfg.network.network, encoder, cfg.network.stdp, cfg.device,
                   model.curve, weights);
  const auto stats = snn::train(net, data);
  const auto prov =
      io::make_provenance(cfg, cfg.network.network.seed, "train");

  io::Checkpoint cp;
  cp.weights = net.weights();
  cp.theta.assign(net.theta().begin(), net.theta().end());
  cp.seed = cfg.network.network.seed;
  cp.epoch = static_cast<int>(stats.epochs.size());
  cp.provenance_json = io::provenance_json(prov);
  io::write_text(out_path(cfg, "checkpoint.json"), io::checkpoint_to_json(cp));
  io::write_text(out_path(cfg, "train_stats.json"),
                 io::training_stats_to_json(stats, cal, prov));
  const auto ledger = net.energy();
  io::write_text(out_path(cfg, "energy.json"),
                 io::ledger_to_json(io::summarize(ledger), prov));
  io::write_text(out_path(cfg, "energy_events.csv"),
                 io::stamp_csv(io::events_to_csv(ledger.events()), prov));
  if (cfg.network.network.record_raster)
    io::write_text(out_path(cfg, "train_raster.csv"),
                   io::stamp_csv(io::raster_to_csv(net.raster()), prov));

  const auto &w = stats.windowed_max_probability;
  note("trained on " + std::to_string(data.size()) + " images, V_row " +
       fmt("%.4f", encoder.V_row) + " V");
  if (!w.empty())
    note("windowed max P: first " + fmt("%.3f", w.front()) + ", last " +
         fmt("%.3f", w.back()));
  note("wrote " + out_path(cfg, "checkpoint.json").string());
  return kOk;
}

int test(const Common &common, const std::string &checkpoint_path,
         const DataFlags &f) {
  const io::RunConfig base = resolve(common);
  const fs::path cp_path = checkpoint_path.empty()
                               ? out_path(base, "checkpoint.json")
                               : fs::path(checkpoint_path);
  const auto cp = io::checkpoint_from_json(io::read_text(cp_path));
  // Network, device and data come from the run that produced the checkpoint.
  io::RunConfig cfg = io::config_from_provenance(cp.provenance_json);
  cfg.io.output_dir = base.io.output_dir;
  if (!f.dataset.empty()) cfg.data.dataset = f.dataset;
  if (f.images > 0) cfg.data.test_images = f.images;
  if (!f.idx_images.empty()) cfg.data.idx_test_images = f.idx_images;
  if (!f.idx_labels.empty()) cfg.data.idx_test_labels = f.idx_labels;
  if (!f.table.empty()) cfg.io.table = f.table;
  cfg.network.network.keep_energy_events = false;
  cfg.validate();

  const auto model = load_model(cfg);
  snn::Network net(cfg.network.network, cfg.network.encoder, cfg.network.stdp,
                   cfg.device, model.curve, cp.weights);
  const auto assignment_run = snn::test(net, io::training_set(cfg.data));
  const auto assignments = snn::assign_classes(assignment_run);
  const auto result = snn::test(net, io::held_out_set(cfg.data));
  const double acc = snn::accuracy(result, assignments);

  const auto prov = io::make_provenance(cfg, cfg.network.network.seed, "test");
  io::write_text(out_path(cfg, "test_result.json"),
                 io::test_result_to_json(result, assignments, acc, prov));
  if (cfg.network.network.record_raster)
    io::write_text(out_path(cfg, "test_raster.csv"),
                   io::stamp_csv(io::raster_to_csv(net.raster()), prov));

  std::string line = "assignments:";
  for (int a : assignments) line += ' ' + std::to_string(a);
  note(line);
  note("held-out accuracy " + fmt("%.3f", acc) + " on " +
       std::to_string(result.labels.size()) + " images");
  note("wrote " + out_path(cfg, "test_result.json").string());
  return kOk;
}

// energy-report ------------------------------------------------------------

int energy_report(const Common &common) {
  io::RunConfig cfg = resolve(common);
  const auto recorded =
      io::ledger_from_json(io::read_text(out_path(cfg, "energy.json")));
  const auto events =
      io::events_from_csv(io::read_text(out_path(cfg, "energy_events.csv")));
  const auto replay = io::summarize(
      mtjsnn::device::EnergyLedger::replay(events, recorded.spikes));

  auto close = [](double a, double b) {
    return std::abs(a - b) <= 1e-9 * std::max({std::abs(a), std::abs(b), 1e-30});
  };
  const bool consistent = close(replay.write_fj, recorded.write_fj) &&
                          close(replay.read_fj, recorded.read_fj) &&
                          close(replay.reset_fj, recorded.reset_fj) &&
                          close(replay.total_fj, recorded.total_fj);

  auto per_spike = [&](double fj) {
    return replay.spikes > 0 ? fj / static_cast<double>(replay.spikes) : 0.0;
  };
  // One read per neuron per step.
  std::size_t reads = 0;
  for (const auto &e : events) reads += e.kind == mtjsnn::device::EnergyKind::Read;
  const double per_neuron_step =
      reads > 0 ? replay.total_fj / static_cast<double>(reads) : 0.0;

  json report;
  report["events"] = events.size();
  report["neuron_steps"] = reads;
  report["per_neuron_step_fj"] = per_neuron_step;
  report["spikes"] = replay.spikes;
  report["replay"] = {{"write_fj", replay.write_fj},
                      {"read_fj", replay.read_fj},
                      {"reset_fj", replay.reset_fj},
                      {"total_fj", replay.total_fj}};
  report["per_spike_fj"] = {{"write", per_spike(replay.write_fj)},
                            {"read", per_spike(replay.read_fj)},
                            {"reset", per_spike(replay.reset_fj)},
                            {"total", replay.per_spike_fj}};
  report["consistent_with_ledger"] = consistent;
  report["provenance"] = json::parse(
      io::provenance_json(io::make_provenance(cfg, cfg.network.network.seed,
                                              "energy-report")));
  io::write_text(out_path(cfg, "energy_report.json"), report.dump(2));

  note("events " + std::to_string(events.size()) + ", spikes " +
       std::to_string(replay.spikes));
  note("per spike: write " + fmt("%.3f", per_spike(replay.write_fj)) +
       " fJ, read " + fmt("%.3f", per_spike(replay.read_fj)) + " fJ, reset " +
       fmt("%.3f", per_spike(replay.reset_fj)) + " fJ, total " +
       fmt("%.3f", replay.per_spike_fj) + " fJ");
  note("per neuron per step: " + fmt("%.3f", per_neuron_step) + " fJ");
  if (!consistent)
    throw mtjsnn::NumericalError("energy report: replayed totals differ from the ledger");
  note("replay matches ledger");
  return kOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"MTJ stochastic neuron and spiking network simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", io::version());

  Common common;
  app.add_option("-c,--config", common.config_path, "JSON config file")
      ->check(CLI::ExistingFile);
  common.seed_option =
      app.add_option("--seed", common.seed, "Override magnetics and network seeds");
  app.add_option("--threads", common.threads,
                 "Worker threads for sweeps (0 = all cores)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("-o,--out", common.out, "Output directory");

  ch::PulseTrainSpec pulse;
  auto *pulse_cmd = app.add_subcommand("pulse-demo", "Integrate-and-leak pulse train trajectory");
  pulse_cmd->add_option("--current", pulse.current, "Charge current per pulse, A")
      ->capture_default_str();
  pulse_cmd->add_option("--width", pulse.width, "Pulse width, s")->capture_default_str();
  pulse_cmd->add_option("--gap", pulse.gap, "Gap between pulses, s")->capture_default_str();
  pulse_cmd->add_option("--count", pulse.count, "Number of pulses")->capture_default_str();
  pulse_cmd->add_option("--eb", pulse.eb_kT, "Barrier, k_B T")->capture_default_str();
  pulse_cmd->add_option("--temperature", pulse.temperature, "K")->capture_default_str();
  pulse_cmd->add_option("--tilt", pulse.tilt, "Initial in-plane tilt, rad")
      ->capture_default_str();

  SweepFlags sweep_flags;
  auto *sweep_cmd = app.add_subcommand("sweep", "Monte Carlo switching probability table");
  sweep_cmd->add_option("--eb", sweep_flags.eb, "Barriers, k_B T")->delimiter(',');
  sweep_cmd->add_option("--tpw", sweep_flags.tpw, "Pulse widths, s")->delimiter(',');
  sweep_cmd->add_option("--currents", sweep_flags.currents,
                        "Charge currents, A (default: automatic grid)")
      ->delimiter(',');
  sweep_cmd->add_option("--trials", sweep_flags.trials, "Trials per cell");

  bool width_search = false;
  int width_trials = 1000;
  auto *cal_cmd = app.add_subcommand("calibrate", "Barrier calibration report");
  cal_cmd->add_flag("--width-search", width_search,
                    "Also search W_MTJ for P = 0.5 at 71 uA");
  cal_cmd->add_option("--trials", width_trials, "Trials per width evaluation")
      ->capture_default_str();

  DataFlags train_flags;
  auto *train_cmd = app.add_subcommand("train", "Unsupervised STDP training");
  auto add_data_flags = [](CLI::App *cmd, DataFlags &f) {
    cmd->add_option("--dataset", f.dataset, "synth or idx")
        ->check(CLI::IsMember({"synth", "idx"}));
    cmd->add_option("--images", f.images,
                    "Images per class (synth) or image cap (idx)");
    cmd->add_option("--idx-images", f.idx_images, "IDX image file");
    cmd->add_option("--idx-labels", f.idx_labels, "IDX label file");
    cmd->add_option("--table", f.table, "Switching table JSON");
  };
  add_data_flags(train_cmd, train_flags);

  DataFlags test_flags;
  std::string checkpoint;
  auto *test_cmd = app.add_subcommand("test", "Frozen-network test and accuracy");
  add_data_flags(test_cmd, test_flags);
  test_cmd->add_option("--checkpoint", checkpoint,
                       "Checkpoint JSON (default: <out>/checkpoint.json)");

  auto *energy_cmd = app.add_subcommand(
      "energy-report", "Per-spike energy from the training event log");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigFailure;
  }

  try {
    if (*pulse_cmd) return pulse_demo(common, pulse);
    if (*sweep_cmd) return run_sweep(common, sweep_flags);
    if (*cal_cmd) return calibrate(common, width_search, width_trials);
    if (*train_cmd) return train(common, train_flags);
    if (*test_cmd) return test(common, checkpoint, test_flags);
    if (*energy_cmd) return energy_report(common);
  } catch (const mtjsnn::ConfigError &e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigFailure;
  } catch (const mtjsnn::IoError &e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kIoFailure;
  } catch (const mtjsnn::NumericalError &e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kNumericalFailure;
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kFailure;
}
