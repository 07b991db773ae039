#pragma once

// Exact two-body energy eigenstates in lab coordinates: the perfect mirror at
// the relative-coordinate origin, the infinite square well and the finite
// square barrier/well, plus the plane-wave form each one takes in (x1, x2).
//
// Sign conventions: x_rel = x1 - x2. The particle approaches from x_rel < 0,
// so incidence needs v > V (K_rel > 0).

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include "core.hpp"

namespace twobody {

// ---------------------------------------------------------------------------
// Plane-wave form

/// amp * exp(i (k1 x1 + k2 x2)). Wavevectors are complex for evanescent
/// pieces.
struct PlaneWave {
  cplx amp{0.0, 0.0};
  cplx k1{0.0, 0.0};
  cplx k2{0.0, 0.0};
};

/// Interval of x_rel with explicit endpoint closure. Infinite bounds allowed.
struct RelInterval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool lo_closed = false;
  bool hi_closed = false;

  bool contains(double x) const {
    const bool above = lo_closed ? x >= lo : x > lo;
    const bool below = hi_closed ? x <= hi : x < hi;
    return above && below;
  }
  bool operator==(const RelInterval&) const = default;
};

/// One region of an eigenstate: a sum of up to three plane waves valid on an
/// x_rel interval, oscillating as exp(-i (omega + region_rate) t).
///
/// region_rate is kept apart from omega because it is common to every
/// spectral component that shares the region; the wavegroup pipeline applies
/// it after summing.
struct Piece {
  RelInterval rel;
  double omega = 0.0;
  double region_rate = 0.0;
  std::array<PlaneWave, 3> waves{};
  int n_waves = 0;

  void add(cplx amp, cplx k1, cplx k2) { waves[static_cast<std::size_t>(n_waves++)] = {amp, k1, k2}; }
};

/// Piecewise plane-wave representation of one eigenstate.
struct PlaneWaveState {
  std::array<Piece, 3> pieces{};
  int n_pieces = 0;

  Piece& add_piece() { return pieces[static_cast<std::size_t>(n_pieces++)]; }

  /// Value at a point (zero outside every piece).
  cplx operator()(double x1, double x2, double t) const {
    const double xr = x1 - x2;
    for (int p = 0; p < n_pieces; ++p) {
      const Piece& pc = pieces[static_cast<std::size_t>(p)];
      if (!pc.rel.contains(xr)) continue;
      cplx sum{0.0, 0.0};
      for (int w = 0; w < pc.n_waves; ++w) {
        const PlaneWave& pw = pc.waves[static_cast<std::size_t>(w)];
        sum += pw.amp * std::exp(cplx(0.0, 1.0) * (pw.k1 * x1 + pw.k2 * x2));
      }
      return sum * std::exp(cplx(0.0, -(pc.omega + pc.region_rate) * t));
    }
    return {0.0, 0.0};
  }
};

namespace detail {

/// Lab wavevectors of exp(i K_cm x_cm + i kappa x_rel).
inline std::pair<cplx, cplx> lab_wavevectors(const PartitionMap& p, cplx kappa) {
  return {p.K_cm * p.m / p.M_tot + kappa, p.K_cm * p.M / p.M_tot - kappa};
}

inline cplx cm_factor(const PartitionMap& p, double x1, double x2, double t) {
  const double x_cm = (p.m * x1 + p.M * x2) / p.M_tot;
  const double w_cm = p.hbar * p.K_cm * p.K_cm / (2.0 * p.M_tot);
  return std::polar(1.0, p.K_cm * x_cm - w_cm * t);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Mirror

/// Perfect mirror at x_rel = 0. The state lives on x_rel <= 0.
inline PlaneWaveState mirror_state(const PartitionMap& p) {
  PlaneWaveState s;
  Piece& pc = s.add_piece();
  pc.rel = {-std::numeric_limits<double>::infinity(), 0.0, false, true};
  pc.omega = p.omega();
  pc.add(1.0, p.k, p.K);
  const double k1 = (p.k * (p.m - p.M) + 2.0 * p.m * p.K) / p.M_tot;
  const double k2 = (2.0 * p.M * p.k + p.K * (p.M - p.m)) / p.M_tot;
  pc.add(-1.0, k1, k2);
  return s;
}

/// psi_cm (exp(i K_rel x_rel) - exp(-i K_rel x_rel)) exp(-i E_rel t / hbar)
/// for x1 <= x2, zero otherwise. Total function; no kinematic checks.
inline cplx mirror_psi(const PartitionMap& p, double x1, double x2, double t) {
  const double xr = x1 - x2;
  if (xr > 0.0) return {0.0, 0.0};
  const double w_rel = p.hbar * p.K_rel * p.K_rel / (2.0 * p.mu);
  return detail::cm_factor(p, x1, x2, t) * std::polar(1.0, -w_rel * t) *
         cplx(0.0, 2.0 * std::sin(p.K_rel * xr));
}

struct FringeSpacing {
  double exact = 0.0;        ///< pi / |K_rel|
  double approximate = 0.0;  ///< pi hbar / (m (v - V)), valid for m << M
};

/// Maximum-to-minimum distance of the mirror standing wave along x1 (or x2).
inline FringeSpacing mirror_fringe_spacing(const PartitionMap& p) {
  if (p.K_rel == 0.0) throw PhysicsError("no relative motion");
  return {kPi / std::abs(p.K_rel), kPi * p.hbar / std::abs(p.m * (p.v - p.V))};
}

// ---------------------------------------------------------------------------
// Finite square barrier / well on x_rel in [-D, D]

struct ScatteringCoefficients {
  cplx A{1.0, 0.0};
  cplx B, F, G, H;
  cplx K_before, K_barrier, K_after;
};

/// Closed-form matching of value and slope at x_rel = -D and x_rel = +D for
/// a wave incident from x_rel < -D with unit amplitude.
inline ScatteringCoefficients solve_barrier_coefficients(const PartitionMap& p, double PE,
                                                         double D) {
  if (!(D > 0.0)) throw PhysicsError("barrier half-width must be positive");
  if (!(p.K_rel > 0.0))
    throw PhysicsError("incidence from x_rel < 0 requires v > V (K_rel > 0)");
  const double E = p.E_rel;
  if (E == PE) throw PhysicsError("zero barrier wavevector");

  // k and q come from the same expression so PE == 0 yields q == k exactly.
  const double k = std::sqrt(2.0 * p.mu * E) / p.hbar;
  const double diff = E - PE;
  const cplx q = diff > 0.0 ? cplx(std::sqrt(2.0 * p.mu * diff) / p.hbar, 0.0)
                            : cplx(0.0, std::sqrt(2.0 * p.mu * -diff) / p.hbar);
  if (k == 0.0) throw PhysicsError("degenerate matching");

  const cplx I(0.0, 1.0);
  const cplx c2 = std::cos(2.0 * q * D);
  const cplx s2 = std::sin(2.0 * q * D);
  const cplx den = 2.0 * k * q * c2 - I * (k * k + q * q) * s2;
  if (std::abs(den) < 1e-14 * (k * k + std::norm(q)))
    throw PhysicsError("degenerate matching");

  const cplx e2 = std::exp(-2.0 * I * k * D);
  ScatteringCoefficients c;
  c.K_before = c.K_after = k;
  c.K_barrier = q;
  c.H = 2.0 * k * q * e2 / den;
  c.B = I * (q * q - k * k) * s2 * e2 / den;
  const cplx hD = c.H * std::exp(I * k * D);
  c.F = 0.5 * hD * (1.0 + k / q) * std::exp(-I * q * D);
  c.G = 0.5 * hD * (1.0 - k / q) * std::exp(I * q * D);
  return c;
}

/// How the barrier interior's temporal phase is parsed in the lab frame.
/// Total: kinetic + potential energy (the exact eigenstate). KineticOnly: the
/// potential's common factor exp(-i PE t / hbar) is dropped inside the
/// barrier. The joint PDF is identical under both.
enum class BarrierPhase { Total, KineticOnly };

inline PlaneWaveState barrier_state(const ScatteringCoefficients& c, const PartitionMap& p,
                                    double PE, double D,
                                    BarrierPhase phase = BarrierPhase::Total) {
  const double inf = std::numeric_limits<double>::infinity();
  const double w_total = p.hbar * p.K_cm * p.K_cm / (2.0 * p.M_tot) +
                         p.hbar * std::real(c.K_before * c.K_before) / (2.0 * p.mu);
  const double w_pe = PE / p.hbar;
  PlaneWaveState s;
  auto add_wave = [&](Piece& pc, cplx amp, cplx kappa) {
    const auto [k1, k2] = detail::lab_wavevectors(p, kappa);
    pc.add(amp, k1, k2);
  };

  Piece& before = s.add_piece();
  before.rel = {-inf, -D, false, false};
  before.omega = w_total;
  add_wave(before, c.A, c.K_before);
  add_wave(before, c.B, -c.K_before);

  Piece& inside = s.add_piece();
  inside.rel = {-D, D, true, true};
  inside.omega = w_total - w_pe;
  inside.region_rate = phase == BarrierPhase::Total ? w_pe : 0.0;
  add_wave(inside, c.F, c.K_barrier);
  add_wave(inside, c.G, -c.K_barrier);

  Piece& after = s.add_piece();
  after.rel = {D, inf, false, false};
  after.omega = w_total;
  add_wave(after, c.H, c.K_after);
  return s;
}

/// Lab-frame barrier eigenstate at one point.
inline cplx barrier_psi(const ScatteringCoefficients& c, const PartitionMap& p, double PE,
                        double D, double x1, double x2, double t,
                        BarrierPhase phase = BarrierPhase::Total) {
  const cplx I(0.0, 1.0);
  const double xr = x1 - x2;
  const double w_rel = p.hbar * std::real(c.K_before * c.K_before) / (2.0 * p.mu);
  cplx rel;
  double w = w_rel;
  if (xr < -D) {
    rel = c.A * std::exp(I * c.K_before * xr) + c.B * std::exp(-I * c.K_before * xr);
  } else if (xr <= D) {
    rel = c.F * std::exp(I * c.K_barrier * xr) + c.G * std::exp(-I * c.K_barrier * xr);
    if (phase == BarrierPhase::KineticOnly) w -= PE / p.hbar;
  } else {
    rel = c.H * std::exp(I * c.K_after * xr);
  }
  return detail::cm_factor(p, x1, x2, t) * rel * std::polar(1.0, -w * t);
}

// ---------------------------------------------------------------------------
// Infinite square well on x_rel in (-D, D)

/// Particle velocity allowing the n-th bound mode for reflector velocity V.
inline double well_quantized_velocity(const Units& u, double V, int n, double m, double M,
                                      double D) {
  if (n < 1) throw PhysicsError("well mode index must be >= 1");
  return V + n * kPi * u.hbar * (m + M) / (2.0 * D * m * M);
}

inline double well_wavevector(int n, double D) { return n * kPi / (2.0 * D); }

inline PlaneWaveState well_state(const PartitionMap& p, int n, double D) {
  if (n < 1) throw PhysicsError("well mode index must be >= 1");
  const double kap = well_wavevector(n, D);
  PlaneWaveState s;
  Piece& pc = s.add_piece();
  pc.rel = {-D, D, false, false};
  pc.omega = p.hbar * p.K_cm * p.K_cm / (2.0 * p.M_tot) + p.hbar * kap * kap / (2.0 * p.mu);
  // sin(kap (x_rel + D)) = (e^{i kap D} e^{i kap x_rel} - e^{-i kap D} e^{-i kap x_rel}) / 2i
  const cplx half_i(0.0, -0.5);
  const auto [a1, a2] = detail::lab_wavevectors(p, kap);
  const auto [b1, b2] = detail::lab_wavevectors(p, -kap);
  pc.add(half_i * std::polar(1.0, kap * D), a1, a2);
  pc.add(-half_i * std::polar(1.0, -kap * D), b1, b2);
  return s;
}

inline cplx well_psi(const PartitionMap& p, int n, double D, double x1, double x2, double t) {
  if (n < 1) throw PhysicsError("well mode index must be >= 1");
  const double xr = x1 - x2;
  if (!(xr > -D && xr < D)) return {0.0, 0.0};
  const double kap = well_wavevector(n, D);
  const double w_rel = p.hbar * kap * kap / (2.0 * p.mu);
  return detail::cm_factor(p, x1, x2, t) * std::polar(1.0, -w_rel * t) *
         std::sin(kap * (xr + D));
}

// ---------------------------------------------------------------------------
// Lab kinematics per branch

enum class Branch { Incident, Reflected };

struct BranchKinematics {
  double p1 = 0.0, p2 = 0.0;
  double ke1 = 0.0, ke2 = 0.0;
};

/// Momenta hbar d(phase)/dx_i and kinetic energies of one mirror branch.
inline BranchKinematics branch_kinematics(const PartitionMap& p, Branch b) {
  BranchKinematics out;
  if (b == Branch::Incident) {
    out.p1 = p.m * p.v;
    out.p2 = p.M * p.V;
  } else {
    out.p1 = p.m * ((p.m - p.M) * p.v + 2.0 * p.M * p.V) / p.M_tot;
    out.p2 = p.M * ((p.M - p.m) * p.V + 2.0 * p.m * p.v) / p.M_tot;
  }
  out.ke1 = out.p1 * out.p1 / (2.0 * p.m);
  out.ke2 = out.p2 * out.p2 / (2.0 * p.M);
  return out;
}

}  // namespace twobody
