#pragma once

// Two weak reflecting surfaces bounding a slab of thickness D. The surfaces
// sit at x_rel = -D/2 and x_rel = +D/2 about the slab's centre of mass; the
// first reflects with amplitude +r and the second with -r (opposite-sign
// reflections, as for a thin film bounded by the same interface on both
// sides). Transmission losses and multiple reflections are neglected.
//
// A surface at x_rel = s turns exp(i K_rel x_rel) into
// r exp(2 i K_rel s) exp(-i K_rel x_rel) for x_rel < s, so the two reflected
// groups are mirror groups shifted by 2 s M / M_tot along the particle
// argument and -2 s m / M_tot along the reflector argument.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "eigenstates.hpp"
#include "wavegroups.hpp"

namespace twobody {

struct SlabScenario {
  Units units = Units::si();
  BodySpec particle;
  BodySpec slab;
  double D = 0.0;  ///< slab thickness
  double r = 0.01;  ///< reflection amplitude per surface
  std::optional<double> T;  ///< if set, replaces slab.dv by the thermal spread
  QuadratureOptions quad;

  BodySpec slab_resolved() const {
    BodySpec b = slab;
    if (T) b.dv = thermal_spread(units, slab.mass, *T);
    return b;
  }

  void validate() const {
    particle.validate("particle");
    slab.validate("slab");
    if (!(D > 0.0)) throw PhysicsError("slab thickness must be positive");
    if (!(std::abs(r) < 1.0)) throw PhysicsError("weak reflection requires |r| < 1");
    if (!(particle.v0 > slab.v0)) throw PhysicsError("reflection requires v > V");
    if (T && !(*T > 0.0)) throw PhysicsError("temperature must be positive");
  }
};

/// Surface positions in x_rel and their reflection signs.
inline std::array<std::pair<double, double>, 2> slab_surfaces(double D) {
  return {{{-0.5 * D, 1.0}, {0.5 * D, -1.0}}};
}

struct SlabHarmonic {
  double exact = 0.0;        ///< sin^2(K_rel D)
  double approximate = 0.0;  ///< sin^2(D m v / hbar), for m << M and V << v
};

/// Reflected joint PDF of a single (v, V) component, per 4 r^2.
inline SlabHarmonic slab_harmonic_pdf(const Units& u, double m, double M, double v, double V,
                                      double D) {
  const double phase = D * m * M * (v - V) / (u.hbar * (m + M));
  const double approx = D * m * v / u.hbar;
  const double s = std::sin(phase);
  const double sa = std::sin(approx);
  return {s * s, sa * sa};
}

/// Offset 2 m D / M between the two reflected groups along the slab coordinate.
inline double slab_recoil_offset(double m, double M, double D) { return 2.0 * m * D / M; }

/// Temperature below which the recoil offset stays inside the slab's thermal
/// coherence length: h^2 M / (8 D^2 kB m^2).
inline double slab_overlap_temperature_bound(const Units& u, double m, double M, double D) {
  return u.h * u.h * M / (8.0 * D * D * u.kB * m * m);
}

/// Both reflected groups in factorized form.
inline SeparableState slab_separable(const SlabScenario& sc) {
  sc.validate();
  const BodySpec slab = sc.slab_resolved();
  const double m = sc.particle.mass, M = slab.mass, Mt = m + M;
  const Spectrum s = make_quadrature(sc.particle, slab, sc.quad);
  SeparableState st;
  st.particle = AxisModes::from(s.particle, m, sc.units);
  st.reflector = AxisModes::from(s.reflector, M, sc.units);
  for (const auto& [pos, sign] : slab_surfaces(sc.D)) {
    SeparableWave w;
    w.coef = sign * sc.r;
    w.a1 = (m - M) / Mt;
    w.a2 = 2.0 * M / Mt;
    w.shift_a = 2.0 * pos * M / Mt;
    w.b1 = 2.0 * m / Mt;
    w.b2 = (M - m) / Mt;
    w.shift_b = -2.0 * pos * m / Mt;
    w.rel = {-std::numeric_limits<double>::infinity(), pos, false, false};
    st.waves.push_back(w);
  }
  return st;
}

/// Classical centroid of each reflected group at time t: the point where both
/// factor arguments equal their group's central trajectories.
inline std::array<std::pair<double, double>, 2> slab_group_centroids(const SlabScenario& sc,
                                                                     double t) {
  const SeparableState st = slab_separable(sc);
  std::array<std::pair<double, double>, 2> out{};
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& w = st.waves[i];
    const double ra = sc.particle.v0 * t - w.shift_a;
    const double rb = sc.slab.v0 * t - w.shift_b;
    const double det = w.a1 * w.b2 - w.a2 * w.b1;
    out[i] = {(ra * w.b2 - w.a2 * rb) / det, (w.a1 * rb - w.b1 * ra) / det};
  }
  return out;
}

/// Coherent sum of the two reflected groups on the grid. When neither group
/// centroid falls inside the window the snapshot is zero-filled and carries a
/// warning.
inline GridSnapshot slab_wavegroup_snapshot(const SlabScenario& sc, const GridSpec& grid,
                                            double t) {
  bool seen = false;
  for (const auto& [c1, c2] : slab_group_centroids(sc, t))
    seen = seen || (grid.x1.contains(c1) && grid.x2.contains(c2));
  if (!seen) {
    GridSnapshot snap;
    snap.t = t;
    snap.x1 = grid.x1;
    snap.x2 = grid.x2;
    snap.pdf.assign(grid.size(), 0.0);
    snap.norm = 0.0;
    snap.warnings.push_back("window does not contain the reflected wavegroups");
    return snap;
  }
  return to_snapshot(evaluate_separable(slab_separable(sc), grid, t));
}

}  // namespace twobody
