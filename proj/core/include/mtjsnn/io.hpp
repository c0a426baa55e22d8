#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtjsnn/characterization.hpp"
#include "mtjsnn/dataset.hpp"
#include "mtjsnn/device.hpp"
#include "mtjsnn/errors.hpp"
#include "mtjsnn/magnetics.hpp"
#include "mtjsnn/snn.hpp"

/// Configuration, datasets and on-disk artifacts.
namespace mtjsnn::io {

std::string version();

struct MagneticsSection {
  double major_axis = 100e-9; // m, full axes of the elliptic free layer
  double minor_axis = 40e-9;
  double M_s = 1e6; // A/m
  double alpha = 0.0122;
  double temperature = 300.0; // K
  double dt = 0.5e-12;        // s
  std::uint64_t seed = 1;
};

struct SweepSection {
  std::vector<double> currents; // A; empty selects an automatic grid
  std::vector<double> barriers_kT{10.0, 20.0, 30.0};
  std::vector<double> pulse_widths{1e-9};
  int trials = 1000;
  int grid_points = 25;
  int coarse_trials = 200;
  bool zero_anchor = true;
  double thermalize_time = 5e-9;
  double relax_time = 1e-9;
  double switch_threshold = 0.0;
  characterization::Drive drive = characterization::Drive::SpinHall;
};

struct NetworkSection {
  snn::NetworkConfig network;
  snn::EncoderConfig encoder;
  snn::StdpConfig stdp;
  bool calibrate_v_row = true;
  double target_probability = 0.9;
  double model_barrier_kT = 20.0;
  double model_pulse_width = 0.5e-9;
  int model_trials = 1000;
};

struct DataSection {
  std::string dataset = "synth"; // "synth" or "idx"
  int train_images = 20;         // per class for synth, total cap for idx
  int test_images = 50;
  std::uint64_t train_seed = 1;  // synthetic generator seeds
  std::uint64_t test_seed = 2;
  std::vector<int> classes{0, 1};
  std::string idx_train_images;
  std::string idx_train_labels;
  std::string idx_test_images;
  std::string idx_test_labels;
};

struct IoSection {
  std::string output_dir = ".";
  std::string table; // switching table JSON used by train/test
  bool csv = true;
};

struct RunConfig {
  device::DeviceParams device;
  MagneticsSection magnetics;
  SweepSection sweep;
  NetworkSection network;
  DataSection data;
  IoSection io;

  void validate() const;

  magnetics::MagnetGeometry lateral_geometry() const;
  magnetics::MaterialParams material() const;
  characterization::TrialProtocol protocol() const;
  characterization::SweepSpec sweep_spec() const;
  characterization::SweepEnvironment sweep_environment(unsigned threads) const;
};

/// Unknown keys and mistyped values throw ConfigError.
RunConfig parse_config(std::string_view json_text);
RunConfig load_config(const std::filesystem::path &path);
std::string config_to_json(const RunConfig &config);
/// Resolved config stored in an artifact's provenance stamp.
RunConfig config_from_provenance(std::string_view provenance_json);

/// Stamp written into every artifact.
struct Provenance {
  std::string config_json; // resolved config, JSON text
  std::uint64_t seed = 0;
  std::string version;
  std::string command;
};

Provenance make_provenance(const RunConfig &config, std::uint64_t seed,
                           std::string command);

/// Sweeps the single slice the network's behavioral model is built from
/// (network.model_barrier_kT, network.model_pulse_width, network.model_trials)
/// on an automatic current grid.
characterization::SwitchingProbabilityTable model_table(const RunConfig &config,
                                                        unsigned threads);

// IDX container --------------------------------------------------------------

struct IdxMagicError : IoError {
  using IoError::IoError;
};
struct IdxTruncatedError : IoError {
  using IoError::IoError;
};
struct IdxCountMismatchError : IoError {
  using IoError::IoError;
};

inline constexpr int kDefaultClassesData[] = {0, 1};
inline constexpr std::span<const int> kDefaultClasses{kDefaultClassesData};

/// Reads an image/label IDX pair, keeps only `classes` (all when empty) and
/// at most `limit` images (0 for no limit). Pixels are scaled to [0, 1].
ImageDataset load_idx(const std::filesystem::path &images,
                      const std::filesystem::path &labels,
                      std::span<const int> classes = kDefaultClasses,
                      std::size_t limit = 100);

/// Writes an IDX pair (unsigned byte pixels).
void save_idx(const ImageDataset &data, const std::filesystem::path &images,
              const std::filesystem::path &labels);

/// Two classes on 28x28: label 0 is a ring, label 1 a vertical bar, both
/// with small seeded shape jitter plus per-pixel intensity noise. Classes
/// alternate.
ImageDataset synth_dataset(int n_per_class, std::uint64_t seed);

/// Training and held-out sets selected by the data section.
ImageDataset training_set(const DataSection &data);
ImageDataset held_out_set(const DataSection &data);

// Artifacts ------------------------------------------------------------------

std::string table_to_json(const characterization::SwitchingProbabilityTable &t,
                          const Provenance &prov);
characterization::SwitchingProbabilityTable
table_from_json(std::string_view text);
std::string table_to_csv(const characterization::SwitchingProbabilityTable &t);

struct Checkpoint {
  snn::SynapseMatrix weights;
  std::vector<double> theta;
  std::uint64_t seed = 0;
  int epoch = 0;
  std::string provenance_json; // kept verbatim for round trips
};

std::string checkpoint_to_json(const Checkpoint &c);
Checkpoint checkpoint_from_json(std::string_view text);
std::string provenance_json(const Provenance &prov);

struct LedgerSummary {
  double write_fj = 0.0;
  double read_fj = 0.0;
  double reset_fj = 0.0;
  double total_fj = 0.0;
  std::int64_t spikes = 0;
  double per_spike_fj = 0.0;
};

LedgerSummary summarize(const device::EnergyLedger &ledger);
std::string ledger_to_json(const LedgerSummary &s, const Provenance &prov);
LedgerSummary ledger_from_json(std::string_view text);

std::string events_to_csv(std::span<const device::EnergyEvent> events);
std::vector<device::EnergyEvent> events_from_csv(std::string_view text);

std::string training_stats_to_json(const snn::TrainingStats &stats,
                                   const snn::RowVoltageCalibration &cal,
                                   const Provenance &prov);
std::string test_result_to_json(const snn::TestResult &result,
                                std::span<const int> assignments,
                                double accuracy, const Provenance &prov);
std::string raster_to_csv(std::span<const snn::RasterEvent> raster);
std::string trajectory_to_csv(
    std::span<const magnetics::TrajectorySample> samples);

/// Prefixes a CSV body with a '#' comment line carrying the provenance.
std::string stamp_csv(std::string_view csv, const Provenance &prov);
/// Drops leading '#' comment lines.
std::string_view strip_csv_comments(std::string_view csv);

/// Shortest round-trip decimal form.
std::string format_double(double v);

std::string read_text(const std::filesystem::path &path);
/// Creates parent directories. Throws IoError on failure.
void write_text(const std::filesystem::path &path, std::string_view text);

} // namespace mtjsnn::io
