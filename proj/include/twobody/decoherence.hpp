#pragma once

// Closed-form estimators for when one-body interference disappears, how fast
// a which-path probe must be, and how environmental decoherence compares with
// the thermal relaxation time.

#include <cmath>
#include <string>

#include "core.hpp"
#include "wavegroups.hpp"

namespace twobody {

/// Particle coherence length beyond which the incident and reflected groups
/// of a thermal mirror stop overlapping: h sqrt(M) / (2 m sqrt(2 kB T)).
inline double particle_fringe_loss_length(const Units& u, double M, double T, double m) {
  if (!(M > 0.0) || !(T > 0.0) || !(m > 0.0))
    throw PhysicsError("fringe-loss length needs positive M, T, m");
  return u.h * std::sqrt(M) / (2.0 * m * std::sqrt(2.0 * u.kB * T));
}

/// Slab temperature above which the two surface reflections no longer
/// overlap, so particle-only slab interference vanishes:
/// h^2 M / (8 D^2 kB m^2).
inline double slab_no_interference_temperature(const Units& u, double m, double M, double D) {
  if (!(M > 0.0) || !(D > 0.0) || !(m > 0.0))
    throw PhysicsError("no-interference temperature needs positive m, M, D");
  return u.h * u.h * M / (8.0 * D * D * u.kB * m * m);
}

/// Largest slab mass with no particle-only interference at temperature T
/// (the same inequality solved for M).
inline double slab_no_interference_mass(const Units& u, double m, double D, double T) {
  if (!(T > 0.0) || !(D > 0.0) || !(m > 0.0))
    throw PhysicsError("no-interference mass needs positive m, D, T");
  return 8.0 * D * D * u.kB * m * m * T / (u.h * u.h);
}

struct ProbeEstimate {
  double delta_x = 0.0;   ///< separation the probe must resolve
  double velocity = 0.0;  ///< probe velocity whose wavelength equals delta_x
};

/// Mirror case: delta_x = 2 l_c m / M, v_probe = h M / (4 l_c m m*).
inline ProbeEstimate probe_velocity_mirror(const Units& u, double M, double m, double m_star,
                                           double l_c_particle) {
  if (!(M > 0.0) || !(m > 0.0) || !(m_star > 0.0) || !(l_c_particle > 0.0))
    throw PhysicsError("probe estimate needs positive inputs");
  return {2.0 * l_c_particle * m / M, u.h * M / (4.0 * l_c_particle * m * m_star)};
}

/// Slab case: delta_x = 2 m D / M, v_probe = h M / (4 D m m*).
inline ProbeEstimate probe_velocity_slab(const Units& u, double M, double m, double m_star,
                                         double D) {
  if (!(M > 0.0) || !(m > 0.0) || !(m_star > 0.0) || !(D > 0.0))
    throw PhysicsError("probe estimate needs positive inputs");
  return {2.0 * m * D / M, u.h * M / (4.0 * D * m * m_star)};
}

struct DecoherenceInput {
  double M = 0.0;        ///< macroscopic body mass
  double T = 0.0;        ///< temperature
  double delta_x = 0.0;  ///< separation of the superposed states
  double t_R = 0.0;      ///< thermal relaxation time, supplied by the user
};

/// Thermal de Broglie wavelength h / sqrt(2 M kB T).
inline double thermal_wavelength(const Units& u, double M, double T) {
  return thermal_coherence(u, M, T);
}

/// t_D / t_R = (lambda_T / delta_x)^2.
inline double zurek_ratio(const Units& u, const DecoherenceInput& in) {
  if (!(in.delta_x > 0.0)) throw PhysicsError("separation must be positive");
  const double r = thermal_wavelength(u, in.M, in.T) / in.delta_x;
  return r * r;
}

/// t_D = t_R (lambda_T / delta_x)^2.
inline double zurek_time(const Units& u, const DecoherenceInput& in) {
  if (!(in.t_R > 0.0)) throw PhysicsError("thermal relaxation time must be positive");
  return zurek_ratio(u, in) * in.t_R;
}

/// Ratio of the reflection momentum kick to the thermal momentum spread:
/// m v / sqrt(M kB T).
inline double reflection_vs_thermal_ratio(const Units& u, double m, double v, double M, double T) {
  if (!(M > 0.0) || !(T > 0.0)) throw PhysicsError("ratio needs M > 0 and T > 0");
  return m * std::abs(v) / std::sqrt(M * u.kB * T);
}

}  // namespace twobody
