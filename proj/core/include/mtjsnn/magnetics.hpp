#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mtjsnn/random.hpp"
#include "mtjsnn/vec3.hpp"

/// Stochastic macrospin dynamics of an in-plane free layer: shape
/// anisotropy, thermal field and the LLG equation with a Slonczewski
/// spin-transfer term, integrated with a stochastic Heun scheme.
namespace mtjsnn::magnetics {

/// CODATA 2018 values, SI units.
struct PhysicalConstants {
  double mu_B = 9.2740100783e-24; // J/T
  double mu_0 = 1.25663706212e-6; // T m / A
  double hbar = 1.054571817e-34;  // J s
  double q = 1.602176634e-19;     // C
  double k_B = 1.380649e-23;      // J/K

  /// Electron gyromagnetic ratio in m/(A s), always derived.
  constexpr double gamma() const { return 2.0 * mu_B * mu_0 / hbar; }
};

inline constexpr PhysicalConstants kPhysical{};

/// Elliptic disk. Axes are full lengths (not semi-axes), in meters.
struct MagnetGeometry {
  double major_axis = 100e-9;
  double minor_axis = 40e-9;
  double thickness = 1.2e-9;

  double volume() const;
  void validate() const;
  friend bool operator==(const MagnetGeometry &,
                         const MagnetGeometry &) = default;
};

struct MaterialParams {
  double M_s = 1.0e6;    // A/m
  double alpha = 0.0122; // Gilbert damping

  /// Number of spins M_s V / mu_B.
  double spin_count(const MagnetGeometry &geometry,
                    const PhysicalConstants &c = kPhysical) const;
  void validate() const;
};

/// Diagonal demagnetization factors: x along the major axis, y along the
/// minor axis, z along the film normal.
struct DemagTensor {
  double x = 0.0;
  double y = 0.0;
  double z = 1.0;

  double trace() const { return x + y + z; }
  void validate() const;
};

struct MagnetizationState {
  Vec3 m{-1.0, 0.0, 0.0};
  double time = 0.0;
};

struct ThermalConfig {
  double temperature = 300.0; // K
  double dt = 0.5e-12;        // s
  std::uint64_t rng_seed = 0;
  std::uint64_t rng_stream = 0;

  void validate() const;
};

Vec3 demag_field(const Vec3 &m, const DemagTensor &tensor, double M_s);

/// Shape-anisotropy energy density (1/2) mu_0 M_s^2 sum N_i m_i^2, J/m^3.
double demag_energy_density(const Vec3 &m, const DemagTensor &tensor,
                            double M_s,
                            const PhysicalConstants &c = kPhysical);

/// Magnetometric demagnetization factors of a uniformly magnetized
/// elliptic cylinder, evaluated from the Fourier-space shape amplitude.
/// Results are cached per geometry. Throws NumericalError when t / a is
/// below the quadrature range (about 5e-3).
DemagTensor compute_demag_tensor(const MagnetGeometry &geometry);

/// Per-component standard deviation of the thermal field, A/m.
double thermal_field_sigma(const ThermalConfig &cfg, const MaterialParams &mat,
                           const MagnetGeometry &geom,
                           const PhysicalConstants &c = kPhysical);

/// One thermal field sample. Exactly zero at T = 0 (no draws consumed).
Vec3 thermal_field(const ThermalConfig &cfg, const MaterialParams &mat,
                   const MagnetGeometry &geom, Rng &rng,
                   const PhysicalConstants &c = kPhysical);

/// dm/dt in 1/s:
///   gamma/(1+alpha^2) [ -m x H - alpha m x (m x H) ]
///     + 1/((1+alpha^2) q N_s) m x (I_s x m)
/// `spin_current` is in amperes; its direction is the spin polarization.
Vec3 llg_rhs(const Vec3 &m, const Vec3 &h_eff, const Vec3 &spin_current,
             const MaterialParams &mat, double spin_count,
             const PhysicalConstants &c = kPhysical);

/// A free layer with everything the integrator needs precomputed.
struct Macrospin {
  MagnetGeometry geometry;
  MaterialParams material;
  DemagTensor demag;
  PhysicalConstants constants = kPhysical;

  /// Demag factors from compute_demag_tensor().
  static Macrospin from_geometry(const MagnetGeometry &geometry,
                                 const MaterialParams &material);

  double volume() const { return geometry.volume(); }
  double spin_count() const {
    return material.spin_count(geometry, constants);
  }
  /// Total shape-anisotropy energy, J.
  double energy(const Vec3 &m) const;

  /// Easy-axis component of the in-plane state with the same energy as m,
  /// signed like m_x. Insensitive to precession, so it tracks the slow
  /// charge/leak envelope of a pulse train. Saturates at 0 at the barrier.
  double equivalent_easy_axis(const Vec3 &m) const;
};

/// Fixed-step stochastic Heun integrator. The thermal field is drawn once
/// per step and held across predictor and corrector; m is renormalized
/// after the corrector.
class HeunIntegrator {
public:
  HeunIntegrator(const Macrospin &magnet, const ThermalConfig &cfg);

  MagnetizationState step(const MagnetizationState &state,
                          const Vec3 &spin_current);

  /// Advances by round(duration / dt) steps at constant drive.
  MagnetizationState run(MagnetizationState state, const Vec3 &spin_current,
                         double duration);

  double dt() const { return cfg_.dt; }
  double thermal_sigma() const { return sigma_; }
  const Macrospin &magnet() const { return magnet_; }
  Rng &rng() { return rng_; }

private:
  Vec3 rhs(const Vec3 &m, const Vec3 &h_thermal, const Vec3 &spin_current) const;

  Macrospin magnet_;
  ThermalConfig cfg_;
  Rng rng_;
  double sigma_;
  double precession_;   // gamma / (1 + alpha^2)
  double torque_scale_; // 1 / ((1 + alpha^2) q N_s)
  Vec3 demag_scale_;    // -N_i M_s
};

/// Number of integrator steps covering `duration`.
long steps_for(double duration, double dt);

/// Equilibrium along the easy axis: m = (sign, 0, 0).
MagnetizationState easy_axis_state(double sign);

/// Zero-current run from the exact easy-axis minimum, giving a thermally
/// equilibrated starting point.
MagnetizationState thermalize(HeunIntegrator &integrator, double sign,
                              double duration = 5e-9);

struct Pulse {
  double start = 0.0;     // s
  double duration = 0.0;  // s
  double amplitude = 0.0; // spin current, A
};

struct TrajectorySample {
  double time;
  Vec3 m;
};

/// Integrates a pulse train from `initial` until `end_time`, sampling every
/// `sample_every` steps (and the final state). The spin current during a
/// pulse is amplitude * polarization. Throws ConfigError for overlapping or
/// unordered pulses.
std::vector<TrajectorySample>
simulate_pulse_train(const Macrospin &magnet, const ThermalConfig &cfg,
                     const MagnetizationState &initial,
                     std::span<const Pulse> pulses, double end_time,
                     int sample_every = 1,
                     const Vec3 &polarization = {1.0, 0.0, 0.0});

void validate_pulses(std::span<const Pulse> pulses);

} // namespace mtjsnn::magnetics
