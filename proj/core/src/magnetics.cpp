#include "mtjsnn/magnetics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

#include "mtjsnn/errors.hpp"
#include "mtjsnn/quadrature.hpp"

namespace mtjsnn::magnetics {

using std::numbers::pi;

double MagnetGeometry::volume() const {
  return pi / 4.0 * major_axis * minor_axis * thickness;
}

void MagnetGeometry::validate() const {
  if (!(major_axis > 0.0) || !(minor_axis > 0.0) || !(thickness > 0.0))
    throw ConfigError("magnet geometry: all dimensions must be positive");
}

double MaterialParams::spin_count(const MagnetGeometry &geometry,
                                  const PhysicalConstants &c) const {
  return M_s * geometry.volume() / c.mu_B;
}

void MaterialParams::validate() const {
  if (!(M_s > 0.0)) throw ConfigError("material: M_s must be positive");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ConfigError("material: alpha must lie in (0, 1)");
}

void DemagTensor::validate() const {
  for (double n : {x, y, z})
    if (!(n >= 0.0 && n <= 1.0))
      throw ConfigError("demag tensor: factors must lie in [0, 1]");
  if (std::abs(trace() - 1.0) > 1e-6)
    throw ConfigError("demag tensor: factors must sum to 1");
}

void ThermalConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("thermal config: dt must be positive");
  if (!(temperature >= 0.0))
    throw ConfigError("thermal config: temperature must be non-negative");
}

Vec3 demag_field(const Vec3 &m, const DemagTensor &tensor, double M_s) {
  return {-tensor.x * M_s * m.x, -tensor.y * M_s * m.y, -tensor.z * M_s * m.z};
}

double demag_energy_density(const Vec3 &m, const DemagTensor &tensor,
                            double M_s, const PhysicalConstants &c) {
  return 0.5 * c.mu_0 * M_s * M_s *
         (tensor.x * m.x * m.x + tensor.y * m.y * m.y + tensor.z * m.z * m.z);
}

namespace {

// (1 - exp(-x)) / x and its complement, accurate near x = 0.
double film_factor(double x) {
  if (x < 1e-4) return 1.0 - x / 2.0 + x * x / 6.0;
  return -std::expm1(-x) / x;
}

double film_complement(double x) {
  if (x < 1e-4) return x / 2.0 - x * x / 6.0 + x * x * x / 24.0;
  return (x + std::expm1(-x)) / x;
}

DemagTensor evaluate_demag(const MagnetGeometry &g) {
  // Elliptic cylinder with semi-axes a, b and thickness t. With
  // k = kappa * s(psi), s^2 = cos^2/a^2 + sin^2/b^2, the shape amplitude
  // reduces the tensor to
  //   N_xx = 1/pi int dkappa J1^2/kappa int dpsi c(psi) (1 - f(k t))
  //   N_zz = 1/pi int dkappa J1^2/kappa int dpsi f(k t)
  // with f(x) = (1 - e^-x)/x and c = cos^2/a^2 / s^2.
  const double a = g.major_axis / 2.0;
  const double b = g.minor_axis / 2.0;
  const double t = g.thickness;

  const QuadratureRule psi_rule = gauss_legendre(96);
  struct Angle {
    double weight, s, cx, cy;
  };
  std::vector<Angle> angles;
  for (std::size_t k = 0; k < psi_rule.nodes.size(); ++k) {
    // psi in [0, pi/2], multiplied by 4 for the full circle.
    const double psi = pi / 4.0 * (1.0 + psi_rule.nodes[k]);
    const double w = 4.0 * pi / 4.0 * psi_rule.weights[k];
    const double cx2 = std::cos(psi) * std::cos(psi) / (a * a);
    const double cy2 = std::sin(psi) * std::sin(psi) / (b * b);
    const double s2 = cx2 + cy2;
    angles.push_back({w, std::sqrt(s2), cx2 / s2, cy2 / s2});
  }

  const QuadratureRule kappa_rule = gauss_legendre(12);
  const double kappa_max = 1200.0 * pi;
  const int panels = 2400;
  // the tail estimate below needs f(x) ~ 1/x at kappa_max on every ray
  if (kappa_max * t / a < 20.0)
    throw NumericalError("demag tensor: film too thin for the quadrature");

  double nxx = 0.0, nyy = 0.0, nzz = 0.0;
  const double h = kappa_max / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = (p + 0.5) * h;
    for (std::size_t k = 0; k < kappa_rule.nodes.size(); ++k) {
      const double kappa = mid + 0.5 * h * kappa_rule.nodes[k];
      const double j1 = std::cyl_bessel_j(1.0, kappa);
      const double radial = 0.5 * h * kappa_rule.weights[k] * j1 * j1 / kappa;
      double sx = 0.0, sy = 0.0, sz = 0.0;
      for (const Angle &ang : angles) {
        const double x = kappa * ang.s * t;
        const double g = film_complement(x);
        sx += ang.weight * ang.cx * g;
        sy += ang.weight * ang.cy * g;
        sz += ang.weight * film_factor(x);
      }
      nxx += radial * sx;
      nyy += radial * sy;
      nzz += radial * sz;
    }
  }

  // Tail beyond kappa_max: J1^2 ~ 1/(pi kappa) on average and f(x) ~ 1/x.
  double cx = 0.0, cy = 0.0, inv_st_x = 0.0, inv_st_y = 0.0, inv_st = 0.0;
  for (const Angle &ang : angles) {
    cx += ang.weight * ang.cx;
    cy += ang.weight * ang.cy;
    inv_st_x += ang.weight * ang.cx / (ang.s * t);
    inv_st_y += ang.weight * ang.cy / (ang.s * t);
    inv_st += ang.weight / (ang.s * t);
  }
  const double k2 = 2.0 * kappa_max * kappa_max;
  nxx += (cx / kappa_max - inv_st_x / k2) / pi;
  nyy += (cy / kappa_max - inv_st_y / k2) / pi;
  nzz += inv_st / k2 / pi;

  nxx /= pi;
  nyy /= pi;
  nzz /= pi;

  const double sum = nxx + nyy + nzz;
  if (std::abs(sum - 1.0) > 1e-4)
    throw NumericalError("demag tensor integration did not converge");
  return {nxx / sum, nyy / sum, nzz / sum};
}

} // namespace

DemagTensor compute_demag_tensor(const MagnetGeometry &geometry) {
  geometry.validate();
  static std::mutex mutex;
  static std::map<std::tuple<double, double, double>, DemagTensor> cache;
  const auto key = std::make_tuple(geometry.major_axis, geometry.minor_axis,
                                   geometry.thickness);
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  const DemagTensor tensor = evaluate_demag(geometry);
  std::lock_guard lock(mutex);
  cache.emplace(key, tensor);
  return tensor;
}

double thermal_field_sigma(const ThermalConfig &cfg, const MaterialParams &mat,
                           const MagnetGeometry &geom,
                           const PhysicalConstants &c) {
  if (cfg.temperature == 0.0) return 0.0;
  const double a = mat.alpha;
  return std::sqrt(a / (1.0 + a * a) * 2.0 * c.k_B * cfg.temperature /
                   (c.gamma() * c.mu_0 * mat.M_s * geom.volume() * cfg.dt));
}

Vec3 thermal_field(const ThermalConfig &cfg, const MaterialParams &mat,
                   const MagnetGeometry &geom, Rng &rng,
                   const PhysicalConstants &c) {
  if (cfg.temperature == 0.0) return {};
  const double sigma = thermal_field_sigma(cfg, mat, geom, c);
  const double hx = rng.gaussian();
  const double hy = rng.gaussian();
  const double hz = rng.gaussian();
  return {sigma * hx, sigma * hy, sigma * hz};
}

Vec3 llg_rhs(const Vec3 &m, const Vec3 &h_eff, const Vec3 &spin_current,
             const MaterialParams &mat, double spin_count,
             const PhysicalConstants &c) {
  const double denom = 1.0 + mat.alpha * mat.alpha;
  const Vec3 mxh = cross(m, h_eff);
  const Vec3 field_part = -mxh - mat.alpha * cross(m, mxh);
  const Vec3 torque = cross(m, cross(spin_current, m));
  return (c.gamma() / denom) * field_part +
         (1.0 / (denom * c.q * spin_count)) * torque;
}

Macrospin Macrospin::from_geometry(const MagnetGeometry &geometry,
                                   const MaterialParams &material) {
  material.validate();
  return {geometry, material, compute_demag_tensor(geometry), kPhysical};
}

double Macrospin::energy(const Vec3 &m) const {
  return demag_energy_density(m, demag, material.M_s, constants) * volume();
}

double Macrospin::equivalent_easy_axis(const Vec3 &m) const {
  const double e_min = energy({1.0, 0.0, 0.0});
  const double barrier = energy({0.0, 1.0, 0.0}) - e_min;
  const double u = std::clamp((energy(m) - e_min) / barrier, 0.0, 1.0);
  return std::copysign(std::sqrt(1.0 - u), m.x);
}

HeunIntegrator::HeunIntegrator(const Macrospin &magnet,
                               const ThermalConfig &cfg)
    : magnet_(magnet), cfg_(cfg), rng_(cfg.rng_seed, cfg.rng_stream) {
  cfg_.validate();
  magnet_.geometry.validate();
  magnet_.material.validate();
  magnet_.demag.validate();
  const auto &mat = magnet_.material;
  const double denom = 1.0 + mat.alpha * mat.alpha;
  sigma_ = thermal_field_sigma(cfg_, mat, magnet_.geometry, magnet_.constants);
  precession_ = magnet_.constants.gamma() / denom;
  torque_scale_ = 1.0 / (denom * magnet_.constants.q * magnet_.spin_count());
  demag_scale_ = {-magnet_.demag.x * mat.M_s, -magnet_.demag.y * mat.M_s,
                  -magnet_.demag.z * mat.M_s};
}

Vec3 HeunIntegrator::rhs(const Vec3 &m, const Vec3 &h_thermal,
                         const Vec3 &spin_current) const {
  // Same expression as llg_rhs() with the constant factors hoisted.
  const Vec3 h{demag_scale_.x * m.x + h_thermal.x,
               demag_scale_.y * m.y + h_thermal.y,
               demag_scale_.z * m.z + h_thermal.z};
  const Vec3 mxh = cross(m, h);
  const Vec3 field_part = -mxh - magnet_.material.alpha * cross(m, mxh);
  return precession_ * field_part +
         torque_scale_ * cross(m, cross(spin_current, m));
}

MagnetizationState HeunIntegrator::step(const MagnetizationState &state,
                                        const Vec3 &spin_current) {
  Vec3 h_th{};
  if (sigma_ > 0.0) {
    const double hx = rng_.gaussian();
    const double hy = rng_.gaussian();
    const double hz = rng_.gaussian();
    h_th = {sigma_ * hx, sigma_ * hy, sigma_ * hz};
  }
  const double dt = cfg_.dt;
  const Vec3 &m = state.m;
  const Vec3 f1 = rhs(m, h_th, spin_current);
  const Vec3 predicted = m + dt * f1;
  const Vec3 f2 = rhs(predicted, h_th, spin_current);
  return {normalized(m + (0.5 * dt) * (f1 + f2)), state.time + dt};
}

MagnetizationState HeunIntegrator::run(MagnetizationState state,
                                       const Vec3 &spin_current,
                                       double duration) {
  const long n = steps_for(duration, cfg_.dt);
  for (long i = 0; i < n; ++i) state = step(state, spin_current);
  return state;
}

long steps_for(double duration, double dt) {
  return std::lround(duration / dt);
}

MagnetizationState easy_axis_state(double sign) {
  return {{sign < 0.0 ? -1.0 : 1.0, 0.0, 0.0}, 0.0};
}

MagnetizationState thermalize(HeunIntegrator &integrator, double sign,
                              double duration) {
  MagnetizationState s =
      integrator.run(easy_axis_state(sign), Vec3{}, duration);
  s.time = 0.0;
  return s;
}

void validate_pulses(std::span<const Pulse> pulses) {
  double previous_end = -INFINITY;
  for (const Pulse &p : pulses) {
    if (!(p.duration > 0.0) || p.start < 0.0)
      throw ConfigError("pulse train: pulses need start >= 0 and duration > 0");
    if (p.start < previous_end)
      throw ConfigError("pulse train: pulses overlap or are not time-ordered");
    previous_end = p.start + p.duration;
  }
}

std::vector<TrajectorySample>
simulate_pulse_train(const Macrospin &magnet, const ThermalConfig &cfg,
                     const MagnetizationState &initial,
                     std::span<const Pulse> pulses, double end_time,
                     int sample_every, const Vec3 &polarization) {
  validate_pulses(pulses);
  if (sample_every < 1)
    throw ConfigError("pulse train: sample_every must be >= 1");
  HeunIntegrator integrator(magnet, cfg);
  const long total = steps_for(end_time - initial.time, cfg.dt);

  // Step-index windows for each pulse, relative to the initial time.
  std::vector<std::pair<long, long>> windows;
  for (const Pulse &p : pulses)
    windows.emplace_back(steps_for(p.start - initial.time, cfg.dt),
                         steps_for(p.start + p.duration - initial.time, cfg.dt));

  std::vector<TrajectorySample> out;
  out.reserve(total / sample_every + 2);
  MagnetizationState s = initial;
  out.push_back({s.time, s.m});
  std::size_t w = 0;
  for (long i = 0; i < total; ++i) {
    while (w < windows.size() && i >= windows[w].second) ++w;
    double amplitude = 0.0;
    if (w < windows.size() && i >= windows[w].first)
      amplitude = pulses[w].amplitude;
    s = integrator.step(s, amplitude * polarization);
    if ((i + 1) % sample_every == 0 || i + 1 == total)
      out.push_back({s.time, s.m});
  }
  return out;
}

} // namespace mtjsnn::magnetics
