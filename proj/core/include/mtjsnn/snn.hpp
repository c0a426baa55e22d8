#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "mtjsnn/dataset.hpp"
#include "mtjsnn/device.hpp"
#include "mtjsnn/monotone_curve.hpp"
#include "mtjsnn/random.hpp"

/// Crossbar spiking network of stochastic MTJ neurons with rate-coded
/// inputs, lateral inhibition, homeostasis and STDP.
namespace mtjsnn::snn {

inline constexpr int kLevels = 16;
inline constexpr int kMaxLevel = kLevels - 1;
/// Conductance ratio G_max / G_min.
inline constexpr double kConductanceRatio = 20.0;
/// Normalized weight of level 0, G_min / G_max.
inline constexpr double kWMin = 1.0 / kConductanceRatio;

/// Nearest level (round half up) of a weight clamped to [kWMin, 1].
int quantize_weight(double w);
/// Exact weight of a level, kWMin + level (1 - kWMin) / 15.
double dequantize_weight(int level);

class SynapseMatrix {
public:
  SynapseMatrix() = default;
  /// All levels zero; G_max = 1 / r_min.
  SynapseMatrix(int inputs, int neurons, double r_min = 185e3);

  /// All levels zero with an explicit G_max (exact round trips).
  static SynapseMatrix with_g_max(int inputs, int neurons, double g_max);

  /// Levels drawn uniformly from [lo, hi].
  static SynapseMatrix random(int inputs, int neurons, Rng &rng, int lo = 4,
                              int hi = 11, double r_min = 185e3);

  int inputs() const { return inputs_; }
  int neurons() const { return neurons_; }
  double g_max() const { return g_max_; }
  double g_min() const { return g_max_ / kConductanceRatio; }

  int level(int input, int neuron) const {
    return levels_[index(input, neuron)];
  }
  void set_level(int input, int neuron, int level);
  double weight(int input, int neuron) const {
    return dequantize_weight(level(input, neuron));
  }
  double conductance(int input, int neuron) const {
    return g_max_ * weight(input, neuron);
  }

  /// Row-major (input, neuron) levels.
  std::span<const std::uint8_t> levels() const { return levels_; }
  /// Replaces all levels; throws ConfigError on size or range errors.
  void assign_levels(std::span<const int> levels);

  bool operator==(const SynapseMatrix &) const = default;

private:
  std::size_t index(int input, int neuron) const {
    return static_cast<std::size_t>(input) * static_cast<std::size_t>(neurons_) +
           static_cast<std::size_t>(neuron);
  }

  int inputs_ = 0;
  int neurons_ = 0;
  double g_max_ = 1.0 / 185e3;
  std::vector<std::uint8_t> levels_;
};

struct EncoderConfig {
  double p_max = 0.064; // spike probability per step at full intensity
  int T_S = 340;        // steps per image
  int tau_0 = 50;       // steps a row stays driven after an input spike
  double V_row = 1.0;   // V

  void validate() const;
};

struct StdpConfig {
  double tau_plus = 4.5; // steps
  double tau_minus = 5.0;
  double eta_plus = 0.03;
  double eta_minus = 0.01;

  void validate() const;
};

/// eta_+ w exp(-dt / tau_+), dt >= 0 steps.
double stdp_potentiation(const StdpConfig &cfg, double w, double dt);
/// -eta_- w exp(dt / tau_-), dt < 0 steps.
double stdp_depression(const StdpConfig &cfg, double w, double dt);

struct NetworkConfig {
  int inputs = 784;
  int neurons = 9;
  int tau_inh = 50;    // steps
  double beta = 0.01;  // homeostasis increment per spike
  int init_level_lo = 4;
  int init_level_hi = 11;
  double r_min = 185e3; // ohm, level 15
  std::uint64_t seed = 1;
  bool record_raster = false;
  bool keep_energy_events = false;

  void validate() const;
};

enum class Mode { Train, Test };

struct StepReport {
  std::vector<int> input_spikes;
  std::vector<double> currents;  // crossbar current per neuron, A
  std::vector<double> effective; // current / theta
  std::vector<int> switched;     // neurons whose write switched them
  int winner = -1;
  double max_probability = 0.0; // max_j P_sw(I_eff_j), ungated
};

struct RasterEvent {
  std::int64_t step = 0; // global step
  int neuron = 0;
  int image_index = 0;
  int label = 0;
};

struct ImageSummary {
  std::vector<std::int64_t> spikes; // per neuron
  double mean_max_probability = 0.0;
};

struct RowVoltageCalibration {
  double V_row = 0.0;
  double target_probability = 0.0;
  double target_current = 0.0;    // A
  double current_per_volt = 0.0;  // expected column current at 1 V, A/V
};

/// Scales V_row so the expected column current of an average image at the
/// mean initial conductance sits where the model gives `target_probability`.
RowVoltageCalibration calibrate_row_voltage(const ImageDataset &data,
                                            const EncoderConfig &encoder,
                                            const SynapseMatrix &weights,
                                            const MonotoneCurve &model,
                                            double target_probability = 0.9);

/// Random initial levels drawn from config.seed (what Network uses when no
/// weights are given).
SynapseMatrix initial_weights(const NetworkConfig &config);

class Network {
public:
  /// `weights` empty: random initialization from config.seed.
  Network(NetworkConfig config, EncoderConfig encoder, StdpConfig stdp,
          device::DeviceParams device, MonotoneCurve model,
          SynapseMatrix weights = {});

  /// Clears per-image transients (row drive, traces, inhibition).
  void begin_image();
  StepReport step(std::span<const float> image, Mode mode);
  /// Runs T_S steps of one image.
  ImageSummary present(std::span<const float> image, Mode mode,
                       int image_index, int label);

  const SynapseMatrix &weights() const { return weights_; }
  std::span<const double> analog_weights() const { return analog_; }
  std::span<const double> theta() const { return theta_; }
  void set_theta(int neuron, double theta);
  int inhibition_remaining() const { return inhibition_remaining_; }
  int inhibition_owner() const { return inhibition_owner_; }
  std::span<const int> row_active_remaining() const { return row_active_; }
  const std::vector<device::NeuronDevice> &neurons() const { return neurons_; }
  const MonotoneCurve &model() const { return *model_; }
  std::int64_t step_count() const { return global_step_; }

  /// Sum of the per-neuron ledgers.
  device::EnergyLedger energy() const;
  const std::vector<RasterEvent> &raster() const { return raster_; }

  const NetworkConfig &config() const { return config_; }
  const EncoderConfig &encoder() const { return encoder_; }
  const StdpConfig &stdp() const { return stdp_; }
  /// Sets inhibition and homeostasis behaviour for isolated experiments.
  void set_inhibition_enabled(bool on) { inhibition_enabled_ = on; }
  void set_homeostasis_enabled(bool on) { homeostasis_enabled_ = on; }

private:
  void apply_weight(int input, int neuron, double delta);

  NetworkConfig config_;
  EncoderConfig encoder_;
  StdpConfig stdp_;
  std::shared_ptr<const MonotoneCurve> model_;
  SynapseMatrix weights_;
  std::vector<double> analog_;
  std::vector<double> theta_;
  std::vector<device::NeuronDevice> neurons_;
  std::vector<Rng> neuron_rng_;
  Rng encoder_rng_;
  Rng tie_rng_;

  std::vector<int> row_active_;
  std::vector<std::int64_t> last_pre_;
  std::vector<std::int64_t> last_post_;
  int inhibition_remaining_ = 0;
  int inhibition_owner_ = -1;
  bool inhibition_enabled_ = true;
  bool homeostasis_enabled_ = true;
  std::int64_t image_step_ = 0;
  std::int64_t global_step_ = 0;
  int image_index_ = 0;
  int label_ = 0;
  std::vector<RasterEvent> raster_;
};

struct EpochStats {
  int image_index = 0;
  int label = 0;
  double mean_max_probability = 0.0;
  std::vector<std::int64_t> spikes; // per neuron
  double write_energy = 0.0;        // J, this epoch
  double read_energy = 0.0;
  double reset_energy = 0.0;
  std::int64_t spike_total = 0;
};

struct TrainingStats {
  std::vector<int> classes;
  std::vector<EpochStats> epochs;
  /// Means of mean_max_probability over consecutive blocks of 5 epochs.
  std::vector<double> windowed_max_probability;
  /// [neuron][class index] spikes during training.
  std::vector<std::vector<std::int64_t>> class_spikes;
};

/// Means over consecutive blocks of `window` values (last block may be
/// shorter).
std::vector<double> window_means(std::span<const double> values,
                                 std::size_t window = 5);

/// One pass over `data`; each image is one epoch.
TrainingStats train(Network &net, const ImageDataset &data);

struct TestResult {
  std::vector<int> classes;
  std::vector<int> labels;
  /// [neuron][class index]
  std::vector<std::vector<std::int64_t>> class_spikes;
  /// [image][neuron]
  std::vector<std::vector<std::int64_t>> image_spikes;
};

/// Frozen plasticity, theta = 1, inhibition on.
TestResult test(Network &net, const ImageDataset &data);

/// Class of each neuron: argmax of its class counts, -1 if silent.
std::vector<int> assign_classes(const TestResult &result);

/// Prediction per image: class with the largest summed spike count of its
/// assigned neurons; -1 on silence or ties.
std::vector<int> predict(const TestResult &result,
                         std::span<const int> assignments);

double accuracy(const TestResult &result, std::span<const int> assignments);

} // namespace mtjsnn::snn
