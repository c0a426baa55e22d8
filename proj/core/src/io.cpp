#include "mtjsnn/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mtjsnn/random.hpp"
#include "mtjsnn/version.hpp"

namespace mtjsnn::io {

using json = nlohmann::json;
namespace ch = characterization;

namespace {

// Config (de)serialization ---------------------------------------------------

void read_value(const json &j, double &v, const std::string &key) {
  if (!j.is_number()) throw ConfigError(key + ": expected a number");
  v = j.get<double>();
}

void read_value(const json &j, int &v, const std::string &key) {
  if (!j.is_number_integer()) throw ConfigError(key + ": expected an integer");
  v = j.get<int>();
}

void read_value(const json &j, std::uint64_t &v, const std::string &key) {
  if (!j.is_number_unsigned())
    throw ConfigError(key + ": expected a non-negative integer");
  v = j.get<std::uint64_t>();
}

void read_value(const json &j, bool &v, const std::string &key) {
  if (!j.is_boolean()) throw ConfigError(key + ": expected true or false");
  v = j.get<bool>();
}

void read_value(const json &j, std::string &v, const std::string &key) {
  if (!j.is_string()) throw ConfigError(key + ": expected a string");
  v = j.get<std::string>();
}

void read_value(const json &j, std::vector<double> &v, const std::string &key) {
  if (!j.is_array()) throw ConfigError(key + ": expected an array of numbers");
  v.clear();
  for (const json &e : j) {
    if (!e.is_number()) throw ConfigError(key + ": expected numbers only");
    v.push_back(e.get<double>());
  }
}

void read_value(const json &j, std::vector<int> &v, const std::string &key) {
  if (!j.is_array()) throw ConfigError(key + ": expected an array of integers");
  v.clear();
  for (const json &e : j) {
    if (!e.is_number_integer()) throw ConfigError(key + ": expected integers only");
    v.push_back(e.get<int>());
  }
}

void read_value(const json &j, ch::Drive &v, const std::string &key) {
  if (!j.is_string()) throw ConfigError(key + ": expected a drive name");
  v = ch::drive_from_string(j.get<std::string>());
}

json write_value(const ch::Drive &d) { return ch::to_string(d); }
template <class T> json write_value(const T &v) { return json(v); }

class Reader {
public:
  Reader(const json &j, std::string section)
      : j_(j), section_(std::move(section)) {
    if (!j_.is_object())
      throw ConfigError(section_ + ": expected an object");
  }

  template <class T> void operator()(const char *key, T &v) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it != j_.end()) read_value(*it, v, section_ + "." + key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        throw ConfigError("unknown config key '" + section_ + "." + it.key() +
                          "'");
  }

private:
  const json &j_;
  std::string section_;
  std::set<std::string> seen_;
};

struct Writer {
  json &j;
  template <class T> void operator()(const char *key, T &v) {
    j[key] = write_value(v);
  }
};

template <class F> void visit(device::DeviceParams &d, F &&f) {
  f("R_P", d.R_P);
  f("R_AP", d.R_AP);
  f("theta_SH", d.theta_SH);
  f("W_MTJ", d.W_MTJ);
  f("t_HM", d.t_HM);
  f("R_HM", d.R_HM);
  f("rho_HM", d.rho_HM);
  f("V_DD", d.V_DD);
  f("t_write", d.t_write);
  f("t_read", d.t_read);
  f("t_reset", d.t_reset);
  f("I_reset", d.I_reset);
  f("E_inverter", d.E_inverter);
}

template <class F> void visit(MagneticsSection &m, F &&f) {
  f("major_axis", m.major_axis);
  f("minor_axis", m.minor_axis);
  f("M_s", m.M_s);
  f("alpha", m.alpha);
  f("temperature", m.temperature);
  f("dt", m.dt);
  f("seed", m.seed);
}

template <class F> void visit(SweepSection &s, F &&f) {
  f("currents", s.currents);
  f("barriers_kT", s.barriers_kT);
  f("pulse_widths", s.pulse_widths);
  f("trials", s.trials);
  f("grid_points", s.grid_points);
  f("coarse_trials", s.coarse_trials);
  f("zero_anchor", s.zero_anchor);
  f("thermalize_time", s.thermalize_time);
  f("relax_time", s.relax_time);
  f("switch_threshold", s.switch_threshold);
  f("drive", s.drive);
}

template <class F> void visit(NetworkSection &n, F &&f) {
  f("inputs", n.network.inputs);
  f("neurons", n.network.neurons);
  f("tau_inh", n.network.tau_inh);
  f("beta", n.network.beta);
  f("init_level_lo", n.network.init_level_lo);
  f("init_level_hi", n.network.init_level_hi);
  f("r_min", n.network.r_min);
  f("seed", n.network.seed);
  f("record_raster", n.network.record_raster);
  f("keep_energy_events", n.network.keep_energy_events);
  f("p_max", n.encoder.p_max);
  f("T_S", n.encoder.T_S);
  f("tau_0", n.encoder.tau_0);
  f("V_row", n.encoder.V_row);
  f("tau_plus", n.stdp.tau_plus);
  f("tau_minus", n.stdp.tau_minus);
  f("eta_plus", n.stdp.eta_plus);
  f("eta_minus", n.stdp.eta_minus);
  f("calibrate_v_row", n.calibrate_v_row);
  f("target_probability", n.target_probability);
  f("model_barrier_kT", n.model_barrier_kT);
  f("model_pulse_width", n.model_pulse_width);
  f("model_trials", n.model_trials);
}

template <class F> void visit(DataSection &d, F &&f) {
  f("dataset", d.dataset);
  f("train_images", d.train_images);
  f("test_images", d.test_images);
  f("train_seed", d.train_seed);
  f("test_seed", d.test_seed);
  f("classes", d.classes);
  f("idx_train_images", d.idx_train_images);
  f("idx_train_labels", d.idx_train_labels);
  f("idx_test_images", d.idx_test_images);
  f("idx_test_labels", d.idx_test_labels);
}

template <class F> void visit(IoSection &s, F &&f) {
  f("output_dir", s.output_dir);
  f("table", s.table);
  f("csv", s.csv);
}

template <class T>
void read_section(const json &root, const char *name, T &section) {
  auto it = root.find(name);
  if (it == root.end()) return;
  Reader r(*it, name);
  visit(section, r);
  r.finish();
}

template <class T> json write_section(T section) {
  json j = json::object();
  Writer w{j};
  visit(section, w);
  return j;
}

json parse_json(std::string_view text, const char *what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error &e) {
    throw IoError(std::string(what) + ": malformed JSON: " + e.what());
  }
}

// JSON field access for artifacts; format errors are IoError.
template <class T> T field(const json &j, const char *key) {
  auto it = j.find(key);
  if (it == j.end())
    throw IoError(std::string("artifact: missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception &e) {
    throw IoError(std::string("artifact: bad field '") + key + "': " + e.what());
  }
}

json vec3_array(const magnetics::DemagTensor &t) {
  return json::array({t.x, t.y, t.z});
}

magnetics::DemagTensor tensor_from(const json &j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 3) throw IoError("artifact: demag tensor needs 3 factors");
  return {v[0], v[1], v[2]};
}

json provenance_object(const Provenance &prov) {
  json j;
  j["command"] = prov.command;
  j["config"] = parse_json(prov.config_json, "provenance config");
  j["seed"] = prov.seed;
  j["version"] = prov.version;
  return j;
}

// IDX --------------------------------------------------------------------------

std::vector<unsigned char> read_bytes(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

std::uint32_t be32(const std::vector<unsigned char> &b, std::size_t offset) {
  return (std::uint32_t{b[offset]} << 24) | (std::uint32_t{b[offset + 1]} << 16) |
         (std::uint32_t{b[offset + 2]} << 8) | std::uint32_t{b[offset + 3]};
}

void put_be32(std::string &out, std::uint32_t v) {
  out.push_back(static_cast<char>(v >> 24));
  out.push_back(static_cast<char>(v >> 16));
  out.push_back(static_cast<char>(v >> 8));
  out.push_back(static_cast<char>(v));
}

constexpr std::uint32_t kIdxImages = 0x00000803;
constexpr std::uint32_t kIdxLabels = 0x00000801;

// Synthetic shapes -------------------------------------------------------------

constexpr std::uint64_t kSynthGroup = 0x73796e7468000000ULL;

double band(double distance, double half_width) {
  return std::clamp(half_width + 0.5 - distance, 0.0, 1.0);
}

} // namespace

std::string version() { return MTJSNN_VERSION_STRING; }

// RunConfig --------------------------------------------------------------------

void RunConfig::validate() const {
  device.validate();
  lateral_geometry().validate();
  material().validate();
  if (!(magnetics.temperature >= 0.0))
    throw ConfigError("magnetics.temperature must be >= 0");
  if (!(magnetics.dt > 0.0)) throw ConfigError("magnetics.dt must be positive");
  sweep_spec().validate();
  if (!(sweep.thermalize_time >= 0.0 && sweep.relax_time >= 0.0))
    throw ConfigError("sweep: thermalize and relax times must be >= 0");
  if (!(std::abs(sweep.switch_threshold) < 1.0))
    throw ConfigError("sweep.switch_threshold must lie in (-1, 1)");
  network.network.validate();
  network.encoder.validate();
  network.stdp.validate();
  if (!(network.target_probability > 0.0 && network.target_probability < 1.0))
    throw ConfigError("network.target_probability must lie in (0, 1)");
  if (!(network.model_barrier_kT > 0.0 && network.model_pulse_width > 0.0))
    throw ConfigError("network: model slice must be positive");
  if (network.model_trials < 100)
    throw ConfigError("network.model_trials must be at least 100");
  if (data.dataset != "synth" && data.dataset != "idx")
    throw ConfigError("data.dataset must be \"synth\" or \"idx\"");
  if (data.train_images <= 0 || data.test_images <= 0)
    throw ConfigError("data: image counts must be positive");
  if (data.classes.empty()) throw ConfigError("data.classes must not be empty");
}

magnetics::MagnetGeometry RunConfig::lateral_geometry() const {
  magnetics::MagnetGeometry g;
  g.major_axis = magnetics.major_axis;
  g.minor_axis = magnetics.minor_axis;
  return g;
}

magnetics::MaterialParams RunConfig::material() const {
  magnetics::MaterialParams m;
  m.M_s = magnetics.M_s;
  m.alpha = magnetics.alpha;
  return m;
}

ch::TrialProtocol RunConfig::protocol() const {
  ch::TrialProtocol p;
  p.temperature = magnetics.temperature;
  p.dt = magnetics.dt;
  p.thermalize_time = sweep.thermalize_time;
  p.relax_time = sweep.relax_time;
  p.switch_threshold = sweep.switch_threshold;
  p.drive = sweep.drive;
  return p;
}

ch::SweepSpec RunConfig::sweep_spec() const {
  ch::SweepSpec s;
  s.currents = sweep.currents;
  s.barrier_targets = sweep.barriers_kT;
  s.pulse_widths = sweep.pulse_widths;
  s.trials_per_point = sweep.trials;
  s.temperature = magnetics.temperature;
  s.base_seed = magnetics.seed;
  s.grid_points = sweep.grid_points;
  s.coarse_trials = sweep.coarse_trials;
  s.zero_current_anchor = sweep.zero_anchor;
  return s;
}

ch::SweepEnvironment RunConfig::sweep_environment(unsigned threads) const {
  return {lateral_geometry(), material(), device, protocol(), threads};
}

ch::SwitchingProbabilityTable model_table(const RunConfig &config,
                                         unsigned threads) {
  ch::SweepSpec spec = config.sweep_spec();
  spec.currents.clear();
  spec.barrier_targets = {config.network.model_barrier_kT};
  spec.pulse_widths = {config.network.model_pulse_width};
  spec.trials_per_point = config.network.model_trials;
  return ch::sweep(spec, config.sweep_environment(threads));
}

RunConfig parse_config(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error &e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config: expected a JSON object");
  static const std::set<std::string> sections{"device", "magnetics", "sweep",
                                              "network", "data", "io"};
  for (auto it = root.begin(); it != root.end(); ++it)
    if (!sections.count(it.key()))
      throw ConfigError("unknown config section '" + it.key() + "'");
  RunConfig c;
  read_section(root, "device", c.device);
  read_section(root, "magnetics", c.magnetics);
  read_section(root, "sweep", c.sweep);
  read_section(root, "network", c.network);
  read_section(root, "data", c.data);
  read_section(root, "io", c.io);
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path &path) {
  return parse_config(read_text(path));
}

std::string config_to_json(const RunConfig &config) {
  json j;
  j["device"] = write_section(config.device);
  j["magnetics"] = write_section(config.magnetics);
  j["sweep"] = write_section(config.sweep);
  j["network"] = write_section(config.network);
  j["data"] = write_section(config.data);
  j["io"] = write_section(config.io);
  return j.dump(2);
}

RunConfig config_from_provenance(std::string_view provenance_json) {
  const json prov = parse_json(provenance_json, "provenance");
  auto it = prov.find("config");
  if (it == prov.end() || !it->is_object())
    throw IoError("provenance: missing config");
  return parse_config(it->dump());
}

Provenance make_provenance(const RunConfig &config, std::uint64_t seed,
                           std::string command) {
  return {config_to_json(config), seed, version(), std::move(command)};
}

std::string provenance_json(const Provenance &prov) {
  return provenance_object(prov).dump();
}

// IDX ----------------------------------------------------------------------------

ImageDataset load_idx(const std::filesystem::path &images,
                      const std::filesystem::path &labels,
                      std::span<const int> classes, std::size_t limit) {
  const auto ib = read_bytes(images);
  const auto lb = read_bytes(labels);
  if (ib.size() < 4 || lb.size() < 4)
    throw IdxTruncatedError("idx: file shorter than its magic number");
  if (be32(ib, 0) != kIdxImages)
    throw IdxMagicError("idx: '" + images.string() +
                        "' is not an image file (bad magic)");
  if (be32(lb, 0) != kIdxLabels)
    throw IdxMagicError("idx: '" + labels.string() +
                        "' is not a label file (bad magic)");
  if (ib.size() < 16 || lb.size() < 8)
    throw IdxTruncatedError("idx: truncated header");
  const std::size_t n_images = be32(ib, 4);
  const std::size_t rows = be32(ib, 8);
  const std::size_t cols = be32(ib, 12);
  const std::size_t n_labels = be32(lb, 4);
  if (rows == 0 || cols == 0)
    throw IoError("idx: image dimensions must be positive");
  if (ib.size() - 16 < n_images * rows * cols)
    throw IdxTruncatedError("idx: image payload shorter than header claims");
  if (lb.size() - 8 < n_labels)
    throw IdxTruncatedError("idx: label payload shorter than header claims");
  if (n_images != n_labels)
    throw IdxCountMismatchError("idx: " + std::to_string(n_images) +
                                " images but " + std::to_string(n_labels) +
                                " labels");

  ImageDataset data;
  data.rows = static_cast<int>(rows);
  data.cols = static_cast<int>(cols);
  const std::size_t stride = rows * cols;
  for (std::size_t k = 0; k < n_images; ++k) {
    if (limit > 0 && data.size() >= limit) break;
    const int label = lb[8 + k];
    if (!classes.empty() &&
        std::find(classes.begin(), classes.end(), label) == classes.end())
      continue;
    for (std::size_t p = 0; p < stride; ++p)
      data.pixels.push_back(static_cast<float>(ib[16 + k * stride + p]) / 255.0f);
    data.labels.push_back(label);
  }
  return data;
}

void save_idx(const ImageDataset &data, const std::filesystem::path &images,
              const std::filesystem::path &labels) {
  data.validate();
  std::string ib, lb;
  put_be32(ib, kIdxImages);
  put_be32(ib, static_cast<std::uint32_t>(data.size()));
  put_be32(ib, static_cast<std::uint32_t>(data.rows));
  put_be32(ib, static_cast<std::uint32_t>(data.cols));
  for (float p : data.pixels)
    ib.push_back(static_cast<char>(std::lround(p * 255.0f)));
  put_be32(lb, kIdxLabels);
  put_be32(lb, static_cast<std::uint32_t>(data.size()));
  for (int l : data.labels) lb.push_back(static_cast<char>(l));
  write_text(images, ib);
  write_text(labels, lb);
}

ImageDataset synth_dataset(int n_per_class, std::uint64_t seed) {
  if (n_per_class <= 0)
    throw ConfigError("synthetic dataset: n_per_class must be positive");
  ImageDataset data;
  const int side = 28;
  const double centre = 13.5;
  for (int k = 0; k < 2 * n_per_class; ++k) {
    Rng rng(seed, stream_id(kSynthGroup, static_cast<std::uint64_t>(k)));
    auto jitter = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
    const int label = k % 2;
    const double brightness = jitter(0.8, 1.0);
    std::vector<float> img(static_cast<std::size_t>(side * side), 0.0f);
    if (label == 0) {
      const double cx = centre + jitter(-0.75, 0.75);
      const double cy = centre + jitter(-0.75, 0.75);
      const double r = 7.5 + jitter(-0.5, 0.5);
      const double hw = 1.0 + jitter(0.0, 0.3);
      for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
          const double d = std::abs(std::hypot(x - cx, y - cy) - r);
          img[static_cast<std::size_t>(y * side + x)] =
              static_cast<float>(band(d, hw));
        }
    } else {
      const double cx = centre + jitter(-1.0, 1.0);
      const double tilt = jitter(-0.08, 0.08);
      const double hw = 2.4 + jitter(0.0, 0.6);
      const double y0 = 5.5 + jitter(-0.5, 0.5);
      const double y1 = 21.5 + jitter(-0.5, 0.5);
      for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
          const double xc = cx + tilt * (y - centre);
          const double along =
              std::clamp(std::min(y - y0, y1 - y) + 1.0, 0.0, 1.0);
          img[static_cast<std::size_t>(y * side + x)] =
              static_cast<float>(band(std::abs(x - xc), hw) * along);
        }
    }
    // Per-pixel jitter: stroke intensity noise and sparse background specks.
    // Quantized to 8-bit grey levels so an IDX round trip is lossless.
    for (float &p : img) {
      double v = p * brightness * jitter(0.75, 1.0);
      if (rng.uniform() < 0.02)
        v = std::max(v, jitter(0.0, 0.4));
      p = static_cast<float>(std::lround(v * 255.0)) / 255.0f;
    }
    data.pixels.insert(data.pixels.end(), img.begin(), img.end());
    data.labels.push_back(label);
  }
  return data;
}

ImageDataset training_set(const DataSection &data) {
  if (data.dataset == "synth")
    return synth_dataset(data.train_images, data.train_seed);
  return load_idx(data.idx_train_images, data.idx_train_labels, data.classes,
                  static_cast<std::size_t>(data.train_images));
}

ImageDataset held_out_set(const DataSection &data) {
  if (data.dataset == "synth")
    return synth_dataset(data.test_images, data.test_seed);
  return load_idx(data.idx_test_images, data.idx_test_labels, data.classes,
                  static_cast<std::size_t>(data.test_images));
}

// Switching table ----------------------------------------------------------------

std::string table_to_json(const ch::SwitchingProbabilityTable &t,
                          const Provenance &prov) {
  json meta;
  meta["seed"] = t.meta.seed;
  meta["trials"] = t.meta.trials;
  meta["backend"] = t.meta.backend;
  meta["drive"] = ch::to_string(t.meta.drive);
  meta["temperature_K"] = t.meta.temperature;
  meta["dt_s"] = t.meta.dt;
  meta["switch_threshold"] = t.meta.switch_threshold;
  meta["spin_hall_gain"] = t.meta.spin_hall_gain;
  json cal = json::array();
  for (const auto &c : t.meta.calibrations) {
    json e;
    e["thickness_m"] = c.thickness;
    e["target_J"] = c.target;
    e["achieved_J"] = c.achieved;
    e["scale"] = c.scale;
    e["base"] = vec3_array(c.base);
    e["tensor"] = vec3_array(c.tensor);
    cal.push_back(e);
  }
  meta["calibration"] = cal;

  std::vector<double> currents;
  for (const auto &c : t.cells) currents.push_back(c.current);
  std::sort(currents.begin(), currents.end());
  currents.erase(std::unique(currents.begin(), currents.end()), currents.end());

  json cells = json::array();
  for (const auto &c : t.cells) {
    json e;
    e["I_A"] = c.current;
    e["EB_kT"] = c.eb_kT;
    e["tPW_s"] = c.pulse_width;
    e["p"] = c.p;
    e["stderr"] = c.stderr_p;
    e["switched"] = c.switched;
    e["trials"] = c.trials;
    cells.push_back(e);
  }
  json j;
  j["meta"] = meta;
  j["axes"] = {{"I_A", currents},
               {"EB_kT", t.barrier_targets},
               {"tPW_s", t.pulse_widths}};
  j["cells"] = cells;
  j["provenance"] = provenance_object(prov);
  return j.dump(2);
}

ch::SwitchingProbabilityTable table_from_json(std::string_view text) {
  const json j = parse_json(text, "switching table");
  ch::SwitchingProbabilityTable t;
  try {
    const json &meta = j.at("meta");
    t.meta.seed = field<std::uint64_t>(meta, "seed");
    t.meta.trials = field<int>(meta, "trials");
    t.meta.backend = field<std::string>(meta, "backend");
    t.meta.drive = ch::drive_from_string(field<std::string>(meta, "drive"));
    t.meta.temperature = field<double>(meta, "temperature_K");
    t.meta.dt = field<double>(meta, "dt_s");
    t.meta.switch_threshold = field<double>(meta, "switch_threshold");
    t.meta.spin_hall_gain = field<double>(meta, "spin_hall_gain");
    for (const json &e : meta.at("calibration")) {
      ch::BarrierCalibration c;
      c.thickness = field<double>(e, "thickness_m");
      c.target = field<double>(e, "target_J");
      c.achieved = field<double>(e, "achieved_J");
      c.scale = field<double>(e, "scale");
      c.base = tensor_from(e.at("base"));
      c.tensor = tensor_from(e.at("tensor"));
      t.meta.calibrations.push_back(c);
    }
    const json &axes = j.at("axes");
    t.barrier_targets = field<std::vector<double>>(axes, "EB_kT");
    t.pulse_widths = field<std::vector<double>>(axes, "tPW_s");
    for (const json &e : j.at("cells")) {
      ch::SwitchingCell c;
      c.current = field<double>(e, "I_A");
      c.eb_kT = field<double>(e, "EB_kT");
      c.pulse_width = field<double>(e, "tPW_s");
      c.p = field<double>(e, "p");
      c.stderr_p = field<double>(e, "stderr");
      c.switched = field<std::int64_t>(e, "switched");
      c.trials = field<std::int64_t>(e, "trials");
      t.cells.push_back(c);
    }
  } catch (const json::exception &e) {
    throw IoError(std::string("switching table: ") + e.what());
  } catch (const ConfigError &e) {
    throw IoError(std::string("switching table: ") + e.what());
  }
  try {
    t.validate();
  } catch (const ConfigError &e) {
    throw IoError(std::string("switching table: ") + e.what());
  }
  return t;
}

std::string table_to_csv(const ch::SwitchingProbabilityTable &t) {
  std::string out = "I_A,EB_kT,tPW_s,p,stderr,switched,trials\n";
  for (const auto &c : t.cells) {
    out += format_double(c.current) + ',' + format_double(c.eb_kT) + ',' +
           format_double(c.pulse_width) + ',' + format_double(c.p) + ',' +
           format_double(c.stderr_p) + ',' + std::to_string(c.switched) + ',' +
           std::to_string(c.trials) + '\n';
  }
  return out;
}

// Checkpoint ---------------------------------------------------------------------

std::string checkpoint_to_json(const Checkpoint &c) {
  const auto &w = c.weights;
  json levels = json::array();
  for (int i = 0; i < w.inputs(); ++i) {
    json row = json::array();
    for (int n = 0; n < w.neurons(); ++n) row.push_back(w.level(i, n));
    levels.push_back(row);
  }
  json j;
  j["format"] = "mtjsnn-checkpoint";
  j["shape"] = {w.inputs(), w.neurons()};
  j["G_max"] = w.g_max();
  j["G_min"] = w.g_min();
  j["seed"] = c.seed;
  j["epoch"] = c.epoch;
  j["theta"] = c.theta;
  j["levels"] = levels;
  j["provenance"] = c.provenance_json.empty()
                        ? json::object()
                        : parse_json(c.provenance_json, "checkpoint provenance");
  return j.dump(1);
}

Checkpoint checkpoint_from_json(std::string_view text) {
  const json j = parse_json(text, "checkpoint");
  Checkpoint c;
  try {
    if (field<std::string>(j, "format") != "mtjsnn-checkpoint")
      throw IoError("checkpoint: unrecognized format tag");
    const auto shape = field<std::vector<int>>(j, "shape");
    if (shape.size() != 2) throw IoError("checkpoint: shape needs 2 entries");
    c.weights = snn::SynapseMatrix::with_g_max(shape[0], shape[1],
                                               field<double>(j, "G_max"));
    const auto levels = field<std::vector<std::vector<int>>>(j, "levels");
    if (levels.size() != static_cast<std::size_t>(shape[0]))
      throw IoError("checkpoint: level rows do not match shape");
    std::vector<int> flat;
    for (const auto &row : levels) {
      if (row.size() != static_cast<std::size_t>(shape[1]))
        throw IoError("checkpoint: level columns do not match shape");
      flat.insert(flat.end(), row.begin(), row.end());
    }
    c.weights.assign_levels(flat);
    c.seed = field<std::uint64_t>(j, "seed");
    c.epoch = field<int>(j, "epoch");
    c.theta = field<std::vector<double>>(j, "theta");
    const json &prov = j.at("provenance");
    c.provenance_json = prov.empty() ? std::string() : prov.dump();
  } catch (const json::exception &e) {
    throw IoError(std::string("checkpoint: ") + e.what());
  } catch (const ConfigError &e) {
    throw IoError(std::string("checkpoint: ") + e.what());
  }
  return c;
}

// Energy -------------------------------------------------------------------------

LedgerSummary summarize(const device::EnergyLedger &ledger) {
  LedgerSummary s;
  s.write_fj = ledger.write_energy() * 1e15;
  s.read_fj = ledger.read_energy() * 1e15;
  s.reset_fj = ledger.reset_energy() * 1e15;
  s.total_fj = ledger.total_energy() * 1e15;
  s.spikes = ledger.spike_count();
  s.per_spike_fj = ledger.energy_per_spike() * 1e15;
  return s;
}

std::string ledger_to_json(const LedgerSummary &s, const Provenance &prov) {
  json j;
  j["write_fj"] = s.write_fj;
  j["read_fj"] = s.read_fj;
  j["reset_fj"] = s.reset_fj;
  j["total_fj"] = s.total_fj;
  j["spikes"] = s.spikes;
  j["per_spike_fj"] = s.per_spike_fj;
  j["provenance"] = provenance_object(prov);
  return j.dump(2);
}

LedgerSummary ledger_from_json(std::string_view text) {
  const json j = parse_json(text, "ledger");
  LedgerSummary s;
  s.write_fj = field<double>(j, "write_fj");
  s.read_fj = field<double>(j, "read_fj");
  s.reset_fj = field<double>(j, "reset_fj");
  s.total_fj = field<double>(j, "total_fj");
  s.spikes = field<std::int64_t>(j, "spikes");
  s.per_spike_fj = field<double>(j, "per_spike_fj");
  return s;
}

std::string events_to_csv(std::span<const device::EnergyEvent> events) {
  std::string out = "kind,current_A,resistance_ohm,duration_s,fixed_J\n";
  for (const auto &e : events) {
    const char *kind = e.kind == device::EnergyKind::Write  ? "write"
                       : e.kind == device::EnergyKind::Read ? "read"
                                                            : "reset";
    out += std::string(kind) + ',' + format_double(e.current) + ',' +
           format_double(e.resistance) + ',' + format_double(e.duration) + ',' +
           format_double(e.fixed) + '\n';
  }
  return out;
}

std::vector<device::EnergyEvent> events_from_csv(std::string_view text) {
  text = strip_csv_comments(text);
  std::vector<device::EnergyEvent> out;
  std::size_t pos = text.find('\n');
  if (pos == std::string_view::npos) return out;
  std::size_t line_no = 1;
  while (++pos < text.size()) {
    ++line_no;
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, end - pos);
    pos = end;
    if (line.empty()) continue;
    std::array<std::string_view, 5> cols;
    std::size_t start = 0;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const std::size_t comma = line.find(',', start);
      if ((comma == std::string_view::npos) != (c + 1 == cols.size()))
        throw IoError("events: line " + std::to_string(line_no) +
                      " does not have 5 columns");
      cols[c] = line.substr(start, comma == std::string_view::npos
                                       ? std::string_view::npos
                                       : comma - start);
      start = comma + 1;
    }
    device::EnergyEvent e{};
    if (cols[0] == "write")
      e.kind = device::EnergyKind::Write;
    else if (cols[0] == "read")
      e.kind = device::EnergyKind::Read;
    else if (cols[0] == "reset")
      e.kind = device::EnergyKind::Reset;
    else
      throw IoError("events: unknown kind on line " + std::to_string(line_no));
    double *targets[] = {&e.current, &e.resistance, &e.duration, &e.fixed};
    for (std::size_t c = 0; c < 4; ++c) {
      const auto v = cols[c + 1];
      auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), *targets[c]);
      if (ec != std::errc() || ptr != v.data() + v.size())
        throw IoError("events: bad number on line " + std::to_string(line_no));
    }
    out.push_back(e);
  }
  return out;
}

// Network reports ----------------------------------------------------------------

std::string training_stats_to_json(const snn::TrainingStats &stats,
                                   const snn::RowVoltageCalibration &cal,
                                   const Provenance &prov) {
  json epochs = json::array();
  for (const auto &e : stats.epochs) {
    json o;
    o["image_index"] = e.image_index;
    o["label"] = e.label;
    o["mean_max_probability"] = e.mean_max_probability;
    o["spikes"] = e.spikes;
    o["spike_total"] = e.spike_total;
    o["write_fj"] = e.write_energy * 1e15;
    o["read_fj"] = e.read_energy * 1e15;
    o["reset_fj"] = e.reset_energy * 1e15;
    epochs.push_back(o);
  }
  json j;
  j["classes"] = stats.classes;
  j["epochs"] = epochs;
  j["windowed_max_probability"] = stats.windowed_max_probability;
  j["class_spikes"] = stats.class_spikes;
  j["row_voltage"] = {{"V_row", cal.V_row},
                      {"target_probability", cal.target_probability},
                      {"target_current_A", cal.target_current},
                      {"current_per_volt", cal.current_per_volt}};
  j["provenance"] = provenance_object(prov);
  return j.dump(2);
}

std::string test_result_to_json(const snn::TestResult &result,
                                std::span<const int> assignments,
                                double accuracy, const Provenance &prov) {
  json j;
  j["classes"] = result.classes;
  j["labels"] = result.labels;
  j["class_spikes"] = result.class_spikes;
  j["image_spikes"] = result.image_spikes;
  j["assignments"] = std::vector<int>(assignments.begin(), assignments.end());
  j["accuracy"] = accuracy;
  j["provenance"] = provenance_object(prov);
  return j.dump(2);
}

std::string raster_to_csv(std::span<const snn::RasterEvent> raster) {
  std::string out = "step,neuron_id,image_index,label\n";
  for (const auto &e : raster)
    out += std::to_string(e.step) + ',' + std::to_string(e.neuron) + ',' +
           std::to_string(e.image_index) + ',' + std::to_string(e.label) + '\n';
  return out;
}

std::string trajectory_to_csv(
    std::span<const magnetics::TrajectorySample> samples) {
  std::string out = "time_s,m_x,m_y,m_z\n";
  for (const auto &s : samples)
    out += format_double(s.time) + ',' + format_double(s.m.x) + ',' +
           format_double(s.m.y) + ',' + format_double(s.m.z) + '\n';
  return out;
}

std::string stamp_csv(std::string_view csv, const Provenance &prov) {
  std::string out = "# provenance " + provenance_json(prov) + '\n';
  out += csv;
  return out;
}

std::string_view strip_csv_comments(std::string_view csv) {
  while (!csv.empty() && csv.front() == '#') {
    const std::size_t end = csv.find('\n');
    csv = end == std::string_view::npos ? std::string_view() : csv.substr(end + 1);
  }
  return csv;
}

// Files ----------------------------------------------------------------------------

std::string format_double(double v) {
  std::array<char, 32> buf;
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw IoError("cannot format number");
  return std::string(buf.data(), ptr);
}

std::string read_text(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path &path, std::string_view text) {
  std::error_code ec;
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

} // namespace mtjsnn::io
