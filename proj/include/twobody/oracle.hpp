#pragma once

// Brute-force propagator for the two-body Schrodinger equation on a periodic
// (x1, x2) lattice with a potential depending on x1 - x2 only. Strang
// splitting: half potential step, full kinetic step in the 2D Fourier
// domain, half potential step. Transforms are done by FFTW.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "core.hpp"
#include "wavegroups.hpp"

namespace twobody {

enum class OraclePotential { None, FiniteBarrier, FiniteWell, Gaussian };

inline const char* to_string(OraclePotential p) {
  switch (p) {
    case OraclePotential::None: return "none";
    case OraclePotential::FiniteBarrier: return "finite_barrier";
    case OraclePotential::FiniteWell: return "finite_well";
    case OraclePotential::Gaussian: return "gaussian";
  }
  return "?";
}

struct PropagatorConfig {
  Units units = Units::dimensionless();
  double m = 1.0;
  double M = 1.0;
  GridSpec grid;  ///< lattice; the period along each axis is n * step
  double dt = 0.0;
  OraclePotential potential = OraclePotential::None;
  double PE = 0.0;  ///< height (negative for a well)
  double D = 0.0;   ///< half-width of the square potential, or Gaussian sigma
  double alias_fraction = 0.05;  ///< outer band fraction checked for aliasing
  double alias_tolerance = 1e-6;

  void validate() const {
    if (grid.x1.n < 4 || grid.x2.n < 4) throw PhysicsError("oracle grid too small");
    if (grid.x1.n > 2048 || grid.x2.n > 2048) throw PhysicsError("oracle grid larger than 2048");
    if (!(m > 0.0) || !(M > 0.0)) throw PhysicsError("oracle masses must be positive");
    if (!(std::abs(dt) > 0.0)) throw PhysicsError("oracle time step must be non-zero");
    if (potential != OraclePotential::None && !(D > 0.0))
      throw PhysicsError("oracle potential width must be positive");
  }
};

/// Aliasing or time-step resolution failure.
class AliasError : public PhysicsError {
public:
  using PhysicsError::PhysicsError;
};

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

/// Angular wavenumbers in FFT order for n points of spacing h.
inline std::vector<double> fft_wavenumbers(std::size_t n, double h) {
  std::vector<double> k(n);
  const double dk = kTwoPi / (static_cast<double>(n) * h);
  for (std::size_t i = 0; i < n; ++i) {
    const long j = i <= n / 2 ? static_cast<long>(i) : static_cast<long>(i) - static_cast<long>(n);
    k[i] = dk * static_cast<double>(j);
  }
  return k;
}

}  // namespace detail

class SplitStepPropagator {
public:
  explicit SplitStepPropagator(const PropagatorConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    n1_ = cfg_.grid.x1.n;
    n2_ = cfg_.grid.x2.n;
    buf_.resize(n1_ * n2_);
    {
      std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
      auto* p = reinterpret_cast<fftw_complex*>(buf_.data());
      fwd_ = fftw_plan_dft_2d(static_cast<int>(n2_), static_cast<int>(n1_), p, p, FFTW_FORWARD,
                              FFTW_ESTIMATE);
      bwd_ = fftw_plan_dft_2d(static_cast<int>(n2_), static_cast<int>(n1_), p, p, FFTW_BACKWARD,
                              FFTW_ESTIMATE);
    }
    if (!fwd_ || !bwd_) throw std::runtime_error("FFTW plan creation failed");
    k1_ = detail::fft_wavenumbers(n1_, cfg_.grid.x1.step());
    k2_ = detail::fft_wavenumbers(n2_, cfg_.grid.x2.step());
    build_phases();
  }
  ~SplitStepPropagator() {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    if (fwd_) fftw_destroy_plan(fwd_);
    if (bwd_) fftw_destroy_plan(bwd_);
  }
  SplitStepPropagator(const SplitStepPropagator&) = delete;
  SplitStepPropagator& operator=(const SplitStepPropagator&) = delete;

  const PropagatorConfig& config() const { return cfg_; }

  /// Potential energy at a lattice point, averaged over the lattice cell
  /// centred on it. Cells cut by an edge of the square potential get the
  /// covered fraction of the height, which keeps the diagonal edge from
  /// turning into a staircase.
  double potential_at(double x1, double x2) const {
    const double xr = x1 - x2;
    switch (cfg_.potential) {
      case OraclePotential::None: return 0.0;
      case OraclePotential::Gaussian: return cfg_.PE * std::exp(-0.5 * xr * xr / (cfg_.D * cfg_.D));
      case OraclePotential::FiniteBarrier:
      case OraclePotential::FiniteWell: {
        const double h1 = 0.5 * cfg_.grid.x1.step(), h2 = 0.5 * cfg_.grid.x2.step();
        const double d = std::abs(xr) - cfg_.D;
        if (d < -(h1 + h2)) return cfg_.PE;
        if (d > h1 + h2) return 0.0;
        return cfg_.PE * covered_fraction(x1, x2, h1, h2);
      }
    }
    return 0.0;
  }

  /// Fraction of spectral weight in the outer band of either axis.
  double edge_spectral_fraction(const std::vector<cplx>& psi) {
    std::copy(psi.begin(), psi.end(), buf_.begin());
    fftw_execute(fwd_);
    const double f = cfg_.alias_fraction;
    const double k1max = std::abs(k1_[n1_ / 2]), k2max = std::abs(k2_[n2_ / 2]);
    double total = 0.0, edge = 0.0;
    for (std::size_t i2 = 0; i2 < n2_; ++i2) {
      const bool e2 = std::abs(k2_[i2]) > (1.0 - f) * k2max;
      for (std::size_t i1 = 0; i1 < n1_; ++i1) {
        const double w = std::norm(buf_[i2 * n1_ + i1]);
        total += w;
        if (e2 || std::abs(k1_[i1]) > (1.0 - f) * k1max) edge += w;
      }
    }
    return total > 0.0 ? edge / total : 0.0;
  }

  void check_resolution(const std::vector<cplx>& psi) {
    const double frac = edge_spectral_fraction(psi);
    if (frac > cfg_.alias_tolerance)
      throw AliasError("aliasing: spectral mass near band edge " + std::to_string(frac));
  }

  /// Advances psi by n steps of cfg.dt (negative dt runs backwards).
  void step(std::vector<cplx>& psi, std::size_t n_steps) {
    if (psi.size() != n1_ * n2_) throw std::invalid_argument("oracle state has wrong size");
    std::copy(psi.begin(), psi.end(), buf_.begin());
    const double inv = 1.0 / static_cast<double>(n1_ * n2_);
    for (std::size_t s = 0; s < n_steps; ++s) {
      if (has_potential_)
        for (std::size_t i = 0; i < buf_.size(); ++i) buf_[i] *= half_v_[i];
      fftw_execute(fwd_);
      for (std::size_t i = 0; i < buf_.size(); ++i) buf_[i] *= kin_[i] * inv;
      fftw_execute(bwd_);
      if (has_potential_)
        for (std::size_t i = 0; i < buf_.size(); ++i) buf_[i] *= half_v_[i];
    }
    std::copy(buf_.begin(), buf_.end(), psi.begin());
  }

  double norm(const std::vector<cplx>& psi) const {
    double s = 0.0;
    for (const auto& z : psi) s += std::norm(z);
    return s * cfg_.grid.x1.step() * cfg_.grid.x2.step();
  }

private:
  // Fraction of the cell [x1 +- h1] x [x2 +- h2] with |x1 - x2| < D, by
  // midpoint subsampling.
  double covered_fraction(double x1, double x2, double h1, double h2) const {
    constexpr int kSub = 64;
    int inside = 0;
    for (int a = 0; a < kSub; ++a) {
      const double y1 = x1 - h1 + (2.0 * a + 1.0) * h1 / kSub;
      for (int b = 0; b < kSub; ++b) {
        const double y2 = x2 - h2 + (2.0 * b + 1.0) * h2 / kSub;
        if (std::abs(y1 - y2) < cfg_.D) ++inside;
      }
    }
    return static_cast<double>(inside) / (kSub * kSub);
  }

  void build_phases() {
    const Units& u = cfg_.units;
    const double dt = cfg_.dt;
    const double k1max = std::abs(k1_[n1_ / 2]), k2max = std::abs(k2_[n2_ / 2]);
    const double edge_phase =
        u.hbar * (k1max * k1max / (2.0 * cfg_.m) + k2max * k2max / (2.0 * cfg_.M)) * std::abs(dt);
    if (!(edge_phase < kPi))
      throw AliasError("time step too large: band-edge kinetic phase " + std::to_string(edge_phase));
    if (!(std::abs(cfg_.PE) * std::abs(dt) / u.hbar < kPi))
      throw AliasError("time step too large for the potential height");

    kin_.resize(n1_ * n2_);
    for (std::size_t i2 = 0; i2 < n2_; ++i2)
      for (std::size_t i1 = 0; i1 < n1_; ++i1) {
        const double w = u.hbar * (k1_[i1] * k1_[i1] / (2.0 * cfg_.m) +
                                   k2_[i2] * k2_[i2] / (2.0 * cfg_.M));
        kin_[i2 * n1_ + i1] = std::polar(1.0, -w * dt);
      }
    has_potential_ = cfg_.potential != OraclePotential::None && cfg_.PE != 0.0;
    if (has_potential_) {
      half_v_.resize(n1_ * n2_);
      for (std::size_t i2 = 0; i2 < n2_; ++i2)
        for (std::size_t i1 = 0; i1 < n1_; ++i1) {
          const double V = potential_at(cfg_.grid.x1.at(i1), cfg_.grid.x2.at(i2));
          half_v_[i2 * n1_ + i1] = std::polar(1.0, -0.5 * V * dt / u.hbar);
        }
    }
  }

  PropagatorConfig cfg_;
  std::size_t n1_ = 0, n2_ = 0;
  std::vector<cplx> buf_;
  std::vector<double> k1_, k2_;
  std::vector<cplx> kin_, half_v_;
  bool has_potential_ = false;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
};

/// Evolves `psi` from t0 by n_steps of cfg.dt after checking for aliasing in
/// the initial and final states.
inline std::vector<cplx> propagate(std::vector<cplx> psi, const PropagatorConfig& cfg,
                                   std::size_t n_steps) {
  SplitStepPropagator prop(cfg);
  prop.check_resolution(psi);
  prop.step(psi, n_steps);
  prop.check_resolution(psi);
  return psi;
}

/// Free 1D Gaussian packet with initial centre x0, position spread s (of
/// |psi|^2 ~ exp(-(x-x0)^2 / (2 s^2))) and mean wavevector k0, at time t.
inline cplx free_gaussian(const Units& u, double mass, double x0, double s, double k0, double x,
                          double t) {
  const double tau = u.hbar * t / (2.0 * mass * s * s);
  const cplx a(1.0, tau);
  const double v = u.hbar * k0 / mass;
  const double dx = x - x0 - v * t;
  const cplx e = -dx * dx / (4.0 * s * s * a) +
                 cplx(0.0, k0 * (x - x0) - u.hbar * k0 * k0 * t / (2.0 * mass));
  const double norm = std::pow(2.0 * kPi * s * s, -0.25);
  return norm * std::exp(e) / std::sqrt(a);
}

/// Relative L2 distance ||a - b|| / ||b||.
inline double relative_l2(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("relative_l2: size mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

// ---------------------------------------------------------------------------
// Analytic wavegroup vs propagation

struct OracleComparison {
  double relative_l2 = 0.0;
  double norm_initial = 0.0;
  double norm_final = 0.0;
  double transmitted = 0.0;  ///< lattice probability with x_rel > D, normalised
  double reflected = 0.0;    ///< lattice probability with x_rel < -D, normalised
  double predicted_transmitted = 0.0;
  double predicted_reflected = 0.0;
  std::size_t steps = 0;
};

/// Spectrum-weighted |H|^2 and |B|^2 of a barrier/well scenario.
inline std::pair<double, double> predicted_transmission_reflection(const WavegroupScenario& sc) {
  const Spectrum s = make_quadrature(sc.particle, sc.reflector, sc.quad);
  double wt = 0.0, tr = 0.0, rf = 0.0;
  for (const auto& smp : s.samples()) {
    const PartitionMap p = PartitionMap::make(sc.units, sc.particle.mass, sc.reflector.mass, smp.v, smp.V);
    const auto c = solve_barrier_coefficients(p, sc.PE, sc.D);
    const double w = smp.weight * smp.weight;
    wt += w;
    tr += w * std::norm(c.H);
    rf += w * std::norm(c.B);
  }
  return {tr / wt, rf / wt};
}

/// Propagates the analytic wavegroup from t0 to t1 on the lattice and
/// compares with the analytic wavegroup at t1.
inline OracleComparison compare_with_oracle(const WavegroupScenario& sc, const GridSpec& grid,
                                            double t0, double t1, double dt_target) {
  if (sc.system != SystemKind::FiniteBarrier && sc.system != SystemKind::FiniteWell)
    throw PhysicsError("oracle comparison supports finite barrier/well scenarios");
  const std::size_t steps =
      static_cast<std::size_t>(std::ceil(std::abs(t1 - t0) / dt_target - 1e-9));
  if (steps == 0) throw PhysicsError("oracle comparison needs t1 != t0");
  PropagatorConfig cfg;
  cfg.units = sc.units;
  cfg.m = sc.particle.mass;
  cfg.M = sc.reflector.mass;
  cfg.grid = grid;
  cfg.dt = (t1 - t0) / static_cast<double>(steps);
  cfg.potential = sc.system == SystemKind::FiniteBarrier ? OraclePotential::FiniteBarrier
                                                         : OraclePotential::FiniteWell;
  cfg.PE = sc.PE;
  cfg.D = sc.D;

  WavegroupScenario exact = sc;
  exact.phase = BarrierPhase::Total;
  const AmplitudeGrid a0 = evaluate_amplitudes(exact, grid, t0);
  const AmplitudeGrid a1 = evaluate_amplitudes(exact, grid, t1);

  SplitStepPropagator prop(cfg);
  std::vector<cplx> psi = a0.amp;
  prop.check_resolution(psi);
  OracleComparison out;
  out.norm_initial = prop.norm(psi);
  prop.step(psi, steps);
  prop.check_resolution(psi);
  out.norm_final = prop.norm(psi);
  out.steps = steps;
  out.relative_l2 = relative_l2(psi, a1.amp);

  double tr = 0.0, rf = 0.0, tot = 0.0;
  for (std::size_t i2 = 0; i2 < grid.x2.n; ++i2)
    for (std::size_t i1 = 0; i1 < grid.x1.n; ++i1) {
      const double w = std::norm(psi[i2 * grid.x1.n + i1]);
      const double xr = grid.x1.at(i1) - grid.x2.at(i2);
      tot += w;
      if (xr > sc.D) tr += w;
      if (xr < -sc.D) rf += w;
    }
  out.transmitted = tr / tot;
  out.reflected = rf / tot;
  const auto [pt, pr] = predicted_transmission_reflection(sc);
  out.predicted_transmitted = pt;
  out.predicted_reflected = pr;
  return out;
}

}  // namespace twobody
