#include "mtjsnn/snn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mtjsnn/errors.hpp"

namespace mtjsnn::snn {

namespace {

constexpr std::uint64_t kEncoderGroup = 0x656e636f64657200ULL;
constexpr std::uint64_t kNeuronGroup = 0x6e6575726f6e0000ULL;
constexpr std::uint64_t kTieGroup = 0x7469650000000000ULL;
constexpr std::uint64_t kInitGroup = 0x696e697400000000ULL;

struct Totals {
  double write = 0.0, read = 0.0, reset = 0.0;
};

Totals totals(const Network &net) {
  Totals t;
  for (const auto &n : net.neurons()) {
    t.write += n.ledger().write_energy();
    t.read += n.ledger().read_energy();
    t.reset += n.ledger().reset_energy();
  }
  return t;
}

std::size_t class_index(std::span<const int> classes, int label) {
  auto it = std::lower_bound(classes.begin(), classes.end(), label);
  return static_cast<std::size_t>(it - classes.begin());
}

} // namespace

int quantize_weight(double w) {
  w = std::clamp(w, kWMin, 1.0);
  const double x = (w - kWMin) / (1.0 - kWMin) * kMaxLevel;
  // The tiny bias keeps exact midpoints rounding up despite representation
  // error in w.
  const int level = static_cast<int>(std::floor(x + 0.5 + 1e-9));
  return std::clamp(level, 0, kMaxLevel);
}

double dequantize_weight(int level) {
  if (level < 0 || level > kMaxLevel)
    throw ConfigError("synapse level " + std::to_string(level) +
                      " outside 0..15");
  return (1.0 + level * (kConductanceRatio - 1.0) / kMaxLevel) /
         kConductanceRatio;
}

SynapseMatrix::SynapseMatrix(int inputs, int neurons, double r_min)
    : inputs_(inputs), neurons_(neurons), g_max_(1.0 / r_min) {
  if (inputs <= 0 || neurons <= 0)
    throw ConfigError("synapse matrix: dimensions must be positive");
  if (!(r_min > 0.0))
    throw ConfigError("synapse matrix: minimum resistance must be positive");
  levels_.assign(static_cast<std::size_t>(inputs) * neurons, 0);
}

SynapseMatrix SynapseMatrix::with_g_max(int inputs, int neurons,
                                        double g_max) {
  if (!(g_max > 0.0))
    throw ConfigError("synapse matrix: G_max must be positive");
  SynapseMatrix s(inputs, neurons, 1.0);
  s.g_max_ = g_max;
  return s;
}

SynapseMatrix SynapseMatrix::random(int inputs, int neurons, Rng &rng, int lo,
                                    int hi, double r_min) {
  if (lo < 0 || hi > kMaxLevel || lo > hi)
    throw ConfigError("synapse init: level range must satisfy 0 <= lo <= hi "
                      "<= 15");
  SynapseMatrix s(inputs, neurons, r_min);
  for (auto &l : s.levels_) l = static_cast<std::uint8_t>(rng.uniform_int(lo, hi));
  return s;
}

void SynapseMatrix::set_level(int input, int neuron, int level) {
  if (level < 0 || level > kMaxLevel)
    throw ConfigError("synapse level outside 0..15");
  levels_[index(input, neuron)] = static_cast<std::uint8_t>(level);
}

void SynapseMatrix::assign_levels(std::span<const int> levels) {
  if (levels.size() != levels_.size())
    throw ConfigError("synapse matrix: level count does not match shape");
  for (std::size_t k = 0; k < levels.size(); ++k) {
    if (levels[k] < 0 || levels[k] > kMaxLevel)
      throw ConfigError("synapse level outside 0..15");
    levels_[k] = static_cast<std::uint8_t>(levels[k]);
  }
}

void EncoderConfig::validate() const {
  if (!(p_max > 0.0 && p_max < 1.0))
    throw ConfigError("encoder: p_max must lie in (0, 1)");
  if (T_S <= 0 || tau_0 <= 0)
    throw ConfigError("encoder: T_S and tau_0 must be positive");
  if (!(V_row > 0.0)) throw ConfigError("encoder: V_row must be positive");
}

void StdpConfig::validate() const {
  if (!(tau_plus > 0.0 && tau_minus > 0.0 && eta_plus > 0.0 &&
        eta_minus > 0.0))
    throw ConfigError("stdp: time constants and rates must be positive");
}

double stdp_potentiation(const StdpConfig &cfg, double w, double dt) {
  return cfg.eta_plus * w * std::exp(-dt / cfg.tau_plus);
}

double stdp_depression(const StdpConfig &cfg, double w, double dt) {
  return -cfg.eta_minus * w * std::exp(dt / cfg.tau_minus);
}

void NetworkConfig::validate() const {
  if (inputs <= 0 || neurons <= 0)
    throw ConfigError("network: inputs and neurons must be positive");
  if (tau_inh < 0) throw ConfigError("network: tau_inh must be >= 0");
  if (!(beta >= 0.0)) throw ConfigError("network: beta must be >= 0");
  if (init_level_lo < 0 || init_level_hi > kMaxLevel ||
      init_level_lo > init_level_hi)
    throw ConfigError("network: init levels must satisfy 0 <= lo <= hi <= 15");
  if (!(r_min > 0.0)) throw ConfigError("network: r_min must be positive");
}

RowVoltageCalibration calibrate_row_voltage(const ImageDataset &data,
                                            const EncoderConfig &encoder,
                                            const SynapseMatrix &weights,
                                            const MonotoneCurve &model,
                                            double target_probability) {
  if (data.empty()) throw ConfigError("row voltage calibration: empty dataset");
  if (static_cast<int>(data.pixels_per_image()) != weights.inputs())
    throw ConfigError("row voltage calibration: image size does not match "
                      "the crossbar");
  std::vector<double> row_g(static_cast<std::size_t>(weights.inputs()), 0.0);
  for (int i = 0; i < weights.inputs(); ++i) {
    for (int j = 0; j < weights.neurons(); ++j)
      row_g[i] += weights.conductance(i, j);
    row_g[i] /= weights.neurons();
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const auto img = data.image(k);
    for (std::size_t i = 0; i < img.size(); ++i) {
      // Stationary probability that row i is driven.
      const double active =
          1.0 - std::pow(1.0 - encoder.p_max * img[i], encoder.tau_0);
      sum += active * row_g[i];
    }
  }
  RowVoltageCalibration cal;
  cal.target_probability = target_probability;
  cal.current_per_volt = sum / static_cast<double>(data.size());
  if (!(cal.current_per_volt > 0.0))
    throw NumericalError("row voltage calibration: dataset drives no current");
  cal.target_current = model.inverse(target_probability);
  cal.V_row = cal.target_current / cal.current_per_volt;
  return cal;
}

SynapseMatrix initial_weights(const NetworkConfig &config) {
  config.validate();
  Rng init(config.seed, stream_id(kInitGroup, 0));
  return SynapseMatrix::random(config.inputs, config.neurons, init,
                               config.init_level_lo, config.init_level_hi,
                               config.r_min);
}

Network::Network(NetworkConfig config, EncoderConfig encoder, StdpConfig stdp,
                 device::DeviceParams device, MonotoneCurve model,
                 SynapseMatrix weights)
    : config_(config), encoder_(encoder), stdp_(stdp),
      model_(std::make_shared<const MonotoneCurve>(std::move(model))),
      encoder_rng_(config.seed, stream_id(kEncoderGroup, 0)),
      tie_rng_(config.seed, stream_id(kTieGroup, 0)) {
  config_.validate();
  encoder_.validate();
  stdp_.validate();
  if (model_->empty()) throw ConfigError("network: behavioral model is empty");
  if (weights.levels().empty()) {
    weights = initial_weights(config_);
  }
  if (weights.inputs() != config_.inputs || weights.neurons() != config_.neurons)
    throw ConfigError("network: weight matrix shape does not match config");
  weights_ = std::move(weights);
  analog_.resize(weights_.levels().size());
  for (std::size_t k = 0; k < analog_.size(); ++k)
    analog_[k] = dequantize_weight(weights_.levels()[k]);

  theta_.assign(static_cast<std::size_t>(config_.neurons), 1.0);
  for (int j = 0; j < config_.neurons; ++j) {
    neurons_.emplace_back(device, device::BehavioralWriteBackend(*model_),
                          config_.keep_energy_events);
    neuron_rng_.emplace_back(config_.seed, stream_id(kNeuronGroup, j));
  }
  row_active_.assign(static_cast<std::size_t>(config_.inputs), 0);
  last_pre_.assign(static_cast<std::size_t>(config_.inputs), -1);
  last_post_.assign(static_cast<std::size_t>(config_.neurons), -1);
}

void Network::begin_image() {
  std::fill(row_active_.begin(), row_active_.end(), 0);
  std::fill(last_pre_.begin(), last_pre_.end(), -1);
  std::fill(last_post_.begin(), last_post_.end(), -1);
  inhibition_remaining_ = 0;
  inhibition_owner_ = -1;
  image_step_ = 0;
}

void Network::set_theta(int neuron, double theta) {
  if (!(theta >= 1.0)) throw ConfigError("network: theta must be >= 1");
  theta_.at(static_cast<std::size_t>(neuron)) = theta;
}

void Network::apply_weight(int input, int neuron, double delta) {
  const std::size_t k = static_cast<std::size_t>(input) * config_.neurons +
                        static_cast<std::size_t>(neuron);
  const double w = std::clamp(analog_[k] + delta, kWMin, 1.0);
  analog_[k] = w;
  weights_.set_level(input, neuron, quantize_weight(w));
}

StepReport Network::step(std::span<const float> image, Mode mode) {
  if (static_cast<int>(image.size()) != config_.inputs)
    throw ConfigError("network: image has " + std::to_string(image.size()) +
                      " pixels, crossbar has " +
                      std::to_string(config_.inputs) + " rows");
  const bool learn = mode == Mode::Train;
  const int n = config_.neurons;
  StepReport r;

  for (int i = 0; i < config_.inputs; ++i) {
    const double px = image[static_cast<std::size_t>(i)];
    if (!(px > 0.0)) continue;
    if (!encoder_rng_.bernoulli(encoder_.p_max * px)) continue;
    r.input_spikes.push_back(i);
    row_active_[i] = encoder_.tau_0;
    if (learn) {
      for (int j = 0; j < n; ++j) {
        if (last_post_[j] < 0) continue;
        const double dt = static_cast<double>(last_post_[j] - image_step_);
        apply_weight(i, j,
                     stdp_depression(stdp_, analog_[static_cast<std::size_t>(i) * n + j], dt));
      }
    }
    last_pre_[i] = image_step_;
  }

  r.currents.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < config_.inputs; ++i) {
    if (row_active_[i] <= 0) continue;
    for (int j = 0; j < n; ++j) r.currents[j] += weights_.conductance(i, j);
  }
  r.effective.resize(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    r.currents[j] *= encoder_.V_row;
    const double theta = learn ? theta_[j] : 1.0;
    r.effective[j] = r.currents[j] / theta;
    r.max_probability = std::max(r.max_probability, (*model_)(r.effective[j]));
  }

  for (int j = 0; j < n; ++j) {
    const bool inhibited = inhibition_enabled_ && inhibition_remaining_ > 0 &&
                           j != inhibition_owner_;
    const double drive = inhibited ? 0.0 : r.effective[j];
    if (neurons_[j].write(drive, neuron_rng_[j]).switched) r.switched.push_back(j);
    neurons_[j].read();
  }

  if (!r.switched.empty()) {
    double best = -1.0;
    std::vector<int> tied;
    for (int j : r.switched) {
      if (r.effective[j] > best) {
        best = r.effective[j];
        tied.assign(1, j);
      } else if (r.effective[j] == best) {
        tied.push_back(j);
      }
    }
    r.winner = tied.size() == 1
                   ? tied.front()
                   : tied[static_cast<std::size_t>(tie_rng_.uniform_int(
                         0, static_cast<std::int64_t>(tied.size()) - 1))];
  }
  for (int j = 0; j < n; ++j) {
    const bool switched =
        std::find(r.switched.begin(), r.switched.end(), j) != r.switched.end();
    // Switched losers still need the reset pulse but do not count as spikes.
    neurons_[j].reset(switched, j == r.winner);
  }

  if (r.winner >= 0) {
    const int w = r.winner;
    if (learn && homeostasis_enabled_) theta_[w] += config_.beta;
    last_post_[w] = image_step_;
    if (learn) {
      for (int i = 0; i < config_.inputs; ++i) {
        if (last_pre_[i] < 0) continue;
        const double dt = static_cast<double>(image_step_ - last_pre_[i]);
        apply_weight(i, w,
                     stdp_potentiation(stdp_, analog_[static_cast<std::size_t>(i) * n + w], dt));
      }
    }
    if (config_.record_raster)
      raster_.push_back({global_step_, w, image_index_, label_});
  }

  for (int &a : row_active_)
    if (a > 0) --a;
  if (inhibition_remaining_ > 0) --inhibition_remaining_;
  if (r.winner >= 0 && inhibition_enabled_ && config_.tau_inh > 0) {
    inhibition_remaining_ = config_.tau_inh;
    inhibition_owner_ = r.winner;
  }
  ++image_step_;
  ++global_step_;
  return r;
}

ImageSummary Network::present(std::span<const float> image, Mode mode,
                              int image_index, int label) {
  begin_image();
  image_index_ = image_index;
  label_ = label;
  ImageSummary s;
  s.spikes.assign(static_cast<std::size_t>(config_.neurons), 0);
  double sum = 0.0;
  for (int t = 0; t < encoder_.T_S; ++t) {
    const StepReport r = step(image, mode);
    sum += r.max_probability;
    if (r.winner >= 0) ++s.spikes[r.winner];
  }
  s.mean_max_probability = sum / encoder_.T_S;
  return s;
}

device::EnergyLedger Network::energy() const {
  device::EnergyLedger total(config_.keep_energy_events);
  for (const auto &n : neurons_) total += n.ledger();
  return total;
}

std::vector<double> window_means(std::span<const double> values,
                                 std::size_t window) {
  std::vector<double> out;
  for (std::size_t start = 0; start < values.size(); start += window) {
    const std::size_t end = std::min(values.size(), start + window);
    double sum = 0.0;
    for (std::size_t k = start; k < end; ++k) sum += values[k];
    out.push_back(sum / static_cast<double>(end - start));
  }
  return out;
}

TrainingStats train(Network &net, const ImageDataset &data) {
  if (data.empty()) throw ConfigError("train: dataset is empty");
  TrainingStats stats;
  stats.classes = data.classes();
  const auto neurons = static_cast<std::size_t>(net.config().neurons);
  stats.class_spikes.assign(
      neurons, std::vector<std::int64_t>(stats.classes.size(), 0));
  std::vector<double> per_epoch;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const Totals before = totals(net);
    const ImageSummary s = net.present(data.image(k), Mode::Train,
                                       static_cast<int>(k), data.labels[k]);
    const Totals after = totals(net);
    EpochStats e;
    e.image_index = static_cast<int>(k);
    e.label = data.labels[k];
    e.mean_max_probability = s.mean_max_probability;
    e.spikes = s.spikes;
    e.write_energy = after.write - before.write;
    e.read_energy = after.read - before.read;
    e.reset_energy = after.reset - before.reset;
    e.spike_total = std::accumulate(s.spikes.begin(), s.spikes.end(),
                                    std::int64_t{0});
    const std::size_t c = class_index(stats.classes, e.label);
    for (std::size_t j = 0; j < neurons; ++j)
      stats.class_spikes[j][c] += s.spikes[j];
    per_epoch.push_back(e.mean_max_probability);
    stats.epochs.push_back(std::move(e));
  }
  stats.windowed_max_probability = window_means(per_epoch);
  return stats;
}

TestResult test(Network &net, const ImageDataset &data) {
  if (data.empty()) throw ConfigError("test: dataset is empty");
  TestResult out;
  out.classes = data.classes();
  out.labels = data.labels;
  const auto neurons = static_cast<std::size_t>(net.config().neurons);
  out.class_spikes.assign(neurons,
                          std::vector<std::int64_t>(out.classes.size(), 0));
  for (std::size_t k = 0; k < data.size(); ++k) {
    const ImageSummary s = net.present(data.image(k), Mode::Test,
                                       static_cast<int>(k), data.labels[k]);
    const std::size_t c = class_index(out.classes, data.labels[k]);
    for (std::size_t j = 0; j < neurons; ++j) out.class_spikes[j][c] += s.spikes[j];
    out.image_spikes.push_back(s.spikes);
  }
  return out;
}

std::vector<int> assign_classes(const TestResult &result) {
  std::vector<int> out;
  for (const auto &counts : result.class_spikes) {
    auto it = std::max_element(counts.begin(), counts.end());
    if (it == counts.end() || *it == 0) {
      out.push_back(-1);
      continue;
    }
    out.push_back(result.classes[static_cast<std::size_t>(it - counts.begin())]);
  }
  return out;
}

std::vector<int> predict(const TestResult &result,
                         std::span<const int> assignments) {
  std::vector<int> out;
  for (const auto &spikes : result.image_spikes) {
    std::vector<std::int64_t> votes(result.classes.size(), 0);
    for (std::size_t j = 0; j < spikes.size() && j < assignments.size(); ++j) {
      if (assignments[j] < 0) continue;
      votes[class_index(result.classes, assignments[j])] += spikes[j];
    }
    auto it = std::max_element(votes.begin(), votes.end());
    const bool unique =
        it != votes.end() && *it > 0 && std::count(votes.begin(), votes.end(), *it) == 1;
    out.push_back(unique ? result.classes[static_cast<std::size_t>(it - votes.begin())]
                         : -1);
  }
  return out;
}

double accuracy(const TestResult &result, std::span<const int> assignments) {
  if (result.labels.empty()) return 0.0;
  const auto pred = predict(result, assignments);
  std::size_t hits = 0;
  for (std::size_t k = 0; k < pred.size(); ++k)
    if (pred[k] == result.labels[k]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

} // namespace mtjsnn::snn
