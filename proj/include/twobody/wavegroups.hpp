#pragma once

// Two-body wavegroups: weighted sums of eigenstates over a velocity spectrum,
// evaluated as complex amplitude grids, joint PDFs, or pointwise values with
// gradients.
//
// Two evaluators are provided. The generic one sums the plane-wave form of
// every spectral component. The separable one applies when the spectrum is a
// tensor product and every term factorizes as F_p(u) F_r(w) with u, w linear
// in (x1, x2); the mirror and slab reflections and the free incident group
// all have that form because the total frequency splits into a particle and
// a reflector part.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <thread>
#include <vector>

#include "core.hpp"
#include "eigenstates.hpp"

namespace twobody {

// ---------------------------------------------------------------------------
// Parallel helper

namespace detail {

inline unsigned worker_count(std::size_t items) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(hw, std::max<std::size_t>(items, 1)));
}

/// Runs body(i) for i in [0, n) over contiguous chunks on worker threads.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const unsigned workers = worker_count(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

/// Columns [first, last) of a row at x2 whose x_rel = x1 - x2 lies in rel.
/// The predicate is evaluated on the actual grid coordinates so the result
/// agrees with pointwise evaluation.
inline std::pair<std::size_t, std::size_t> column_range(const Axis& x1, double x2,
                                                        const RelInterval& rel) {
  const std::size_t n = x1.n;
  auto inside = [&](std::size_t i) { return rel.contains(x1.at(i) - x2); };
  if (n == 1) return inside(0) ? std::pair<std::size_t, std::size_t>{0, 1}
                               : std::pair<std::size_t, std::size_t>{0, 0};
  const double dx = x1.step();
  auto guess = [&](double bound) -> std::size_t {
    if (!std::isfinite(bound)) return bound < 0 ? 0 : n;
    const double g = std::ceil((bound + x2 - x1.min) / dx);
    if (g <= 0.0) return 0;
    if (g >= static_cast<double>(n)) return n;
    return static_cast<std::size_t>(g);
  };
  // First index inside.
  std::size_t first = guess(rel.lo);
  while (first > 0 && inside(first - 1)) --first;
  while (first < n && !inside(first)) {
    // Skip ahead only while still left of the interval.
    if (x1.at(first) - x2 > rel.hi) return {0, 0};
    ++first;
  }
  if (first == n) return {0, 0};
  std::size_t last = std::max(first, guess(rel.hi));
  while (last > first && !inside(last - 1)) --last;
  while (last < n && inside(last)) ++last;
  return {first, last};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Amplitude grids

/// Complex amplitude on a grid (rows x2, columns x1). `raw` is the spectral
/// sum before per-region phase factors; `amp` includes them. |raw| == |amp|.
struct AmplitudeGrid {
  double t = 0.0;
  Axis x1;
  Axis x2;
  std::vector<cplx> raw;
  std::vector<cplx> amp;
};

/// Joint PDF from the raw sum. Region phase factors never enter the PDF.
inline GridSnapshot to_snapshot(const AmplitudeGrid& g) {
  GridSnapshot s;
  s.t = g.t;
  s.x1 = g.x1;
  s.x2 = g.x2;
  s.pdf.resize(g.raw.size());
  for (std::size_t i = 0; i < g.raw.size(); ++i) s.pdf[i] = std::norm(g.raw[i]);
  s.recompute_norm();
  return s;
}

/// One spectral component: complex weight times an eigenstate.
struct Component {
  cplx coef{1.0, 0.0};
  PlaneWaveState state;
};

/// Sum of components evaluated on the grid. All components must share the
/// same piece layout (intervals and region rates), which holds for every
/// system here because D and PE are fixed across the spectrum.
inline AmplitudeGrid evaluate_components(const std::vector<Component>& comps, const GridSpec& grid,
                                         double t) {
  grid.x1.validate();
  grid.x2.validate();
  if (comps.empty()) throw PhysicsError("empty spectrum");
  const auto& layout = comps.front().state;
  for (const auto& c : comps) {
    if (c.state.n_pieces != layout.n_pieces)
      throw PhysicsError("components disagree on region layout");
    for (int p = 0; p < layout.n_pieces; ++p) {
      const auto& a = c.state.pieces[static_cast<std::size_t>(p)];
      const auto& b = layout.pieces[static_cast<std::size_t>(p)];
      if (!(a.rel == b.rel) || a.region_rate != b.region_rate)
        throw PhysicsError("components disagree on region layout");
    }
  }

  AmplitudeGrid out;
  out.t = t;
  out.x1 = grid.x1;
  out.x2 = grid.x2;
  const std::size_t n1 = grid.x1.n;
  out.raw.assign(grid.size(), cplx(0.0, 0.0));
  out.amp.assign(grid.size(), cplx(0.0, 0.0));
  const double dx = grid.x1.step();
  const cplx I(0.0, 1.0);

  detail::parallel_for(grid.x2.n, [&](std::size_t i2) {
    const double x2 = grid.x2.at(i2);
    cplx* row = out.raw.data() + i2 * n1;
    for (int p = 0; p < layout.n_pieces; ++p) {
      const auto [first, last] =
          detail::column_range(grid.x1, x2, layout.pieces[static_cast<std::size_t>(p)].rel);
      if (first >= last) continue;
      const double x1s = grid.x1.at(first);
      for (const auto& c : comps) {
        const Piece& pc = c.state.pieces[static_cast<std::size_t>(p)];
        const cplx pre = c.coef * std::polar(1.0, -pc.omega * t);
        for (int w = 0; w < pc.n_waves; ++w) {
          const PlaneWave& pw = pc.waves[static_cast<std::size_t>(w)];
          cplx z = pre * pw.amp * std::exp(I * (pw.k1 * x1s + pw.k2 * x2));
          const cplx step = std::exp(I * pw.k1 * dx);
          for (std::size_t i1 = first; i1 < last; ++i1) {
            row[i1] += z;
            z *= step;
          }
        }
      }
    }
    // Region phases, applied after the sum.
    cplx* arow = out.amp.data() + i2 * n1;
    for (int p = 0; p < layout.n_pieces; ++p) {
      const Piece& pc = layout.pieces[static_cast<std::size_t>(p)];
      const auto [first, last] = detail::column_range(grid.x1, x2, pc.rel);
      const cplx f = std::polar(1.0, -pc.region_rate * t);
      for (std::size_t i1 = first; i1 < last; ++i1) arow[i1] = row[i1] * f;
    }
  });
  return out;
}

/// Value and first derivatives at a point.
struct PointValue {
  cplx psi{0.0, 0.0};
  cplx d1{0.0, 0.0};
  cplx d2{0.0, 0.0};
};

inline PointValue evaluate_components_at(const std::vector<Component>& comps, double x1,
                                         double x2, double t) {
  PointValue out;
  const cplx I(0.0, 1.0);
  const double xr = x1 - x2;
  for (const auto& c : comps) {
    for (int p = 0; p < c.state.n_pieces; ++p) {
      const Piece& pc = c.state.pieces[static_cast<std::size_t>(p)];
      if (!pc.rel.contains(xr)) continue;
      const cplx pre = c.coef * std::polar(1.0, -(pc.omega + pc.region_rate) * t);
      for (int w = 0; w < pc.n_waves; ++w) {
        const PlaneWave& pw = pc.waves[static_cast<std::size_t>(w)];
        const cplx z = pre * pw.amp * std::exp(I * (pw.k1 * x1 + pw.k2 * x2));
        out.psi += z;
        out.d1 += I * pw.k1 * z;
        out.d2 += I * pw.k2 * z;
      }
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Separable evaluator

/// Spectral sum along one body's axis: F(u, t) = sum_i coef_i exp(i (k_i u - w_i t)).
struct AxisModes {
  std::vector<double> k;
  std::vector<double> omega;
  std::vector<cplx> coef;

  static AxisModes from(const SpectrumAxis& ax, double mass, const Units& u) {
    AxisModes m;
    const std::size_t n = ax.size();
    m.k.resize(n);
    m.omega.resize(n);
    m.coef.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      m.k[i] = mass * ax.velocity[i] / u.hbar;
      m.omega[i] = u.hbar * m.k[i] * m.k[i] / (2.0 * mass);
      m.coef[i] = std::polar(ax.weight[i], ax.phase[i]);
    }
    return m;
  }

  cplx value(double u, double t) const {
    cplx s{0.0, 0.0};
    for (std::size_t i = 0; i < k.size(); ++i) s += coef[i] * std::polar(1.0, k[i] * u - omega[i] * t);
    return s;
  }
  /// Value and dF/du.
  std::pair<cplx, cplx> value_and_slope(double u, double t) const {
    cplx s{0.0, 0.0}, d{0.0, 0.0};
    for (std::size_t i = 0; i < k.size(); ++i) {
      const cplx z = coef[i] * std::polar(1.0, k[i] * u - omega[i] * t);
      s += z;
      d += cplx(0.0, k[i]) * z;
    }
    return {s, d};
  }
  /// out[j] = F(u0 + j du, t) for j < n, by per-mode phase recurrence.
  void fill(double u0, double du, std::size_t n, double t, cplx* out) const {
    std::fill(out, out + n, cplx(0.0, 0.0));
    if (du == 0.0) {
      std::fill(out, out + n, value(u0, t));
      return;
    }
    for (std::size_t i = 0; i < k.size(); ++i) {
      cplx z = coef[i] * std::polar(1.0, k[i] * u0 - omega[i] * t);
      const cplx step = std::polar(1.0, k[i] * du);
      for (std::size_t j = 0; j < n; ++j) {
        out[j] += z;
        z *= step;
      }
    }
  }
};

/// coef * F_p(a1 x1 + a2 x2 + shift_a) * F_r(b1 x1 + b2 x2 + shift_b) on rel.
struct SeparableWave {
  cplx coef{1.0, 0.0};
  double a1 = 1.0, a2 = 0.0, shift_a = 0.0;
  double b1 = 0.0, b2 = 1.0, shift_b = 0.0;
  RelInterval rel;
};

struct SeparableState {
  AxisModes particle;
  AxisModes reflector;
  std::vector<SeparableWave> waves;
};

inline AmplitudeGrid evaluate_separable(const SeparableState& st, const GridSpec& grid, double t) {
  grid.x1.validate();
  grid.x2.validate();
  AmplitudeGrid out;
  out.t = t;
  out.x1 = grid.x1;
  out.x2 = grid.x2;
  const std::size_t n1 = grid.x1.n;
  out.raw.assign(grid.size(), cplx(0.0, 0.0));
  const double dx = grid.x1.step();

  // Factors that do not depend on x2 are shared by every row.
  struct Cached {
    bool p_rowless = false, r_rowless = false;
    std::vector<cplx> fp, fr;
  };
  std::vector<Cached> cache(st.waves.size());
  for (std::size_t w = 0; w < st.waves.size(); ++w) {
    const auto& sw = st.waves[w];
    auto& c = cache[w];
    if (sw.a2 == 0.0) {
      c.p_rowless = true;
      c.fp.resize(n1);
      st.particle.fill(sw.a1 * grid.x1.min + sw.shift_a, sw.a1 * dx, n1, t, c.fp.data());
    }
    if (sw.b2 == 0.0) {
      c.r_rowless = true;
      c.fr.resize(n1);
      st.reflector.fill(sw.b1 * grid.x1.min + sw.shift_b, sw.b1 * dx, n1, t, c.fr.data());
    }
  }

  detail::parallel_for(grid.x2.n, [&](std::size_t i2) {
    const double x2 = grid.x2.at(i2);
    cplx* row = out.raw.data() + i2 * n1;
    std::vector<cplx> fp(n1), fr(n1);
    for (std::size_t w = 0; w < st.waves.size(); ++w) {
      const auto& sw = st.waves[w];
      const auto [first, last] = detail::column_range(grid.x1, x2, sw.rel);
      if (first >= last) continue;
      const std::size_t len = last - first;
      const double x1s = grid.x1.at(first);
      const cplx* pp;
      const cplx* rr;
      if (cache[w].p_rowless) {
        pp = cache[w].fp.data() + first;
      } else {
        st.particle.fill(sw.a1 * x1s + sw.a2 * x2 + sw.shift_a, sw.a1 * dx, len, t, fp.data());
        pp = fp.data();
      }
      if (cache[w].r_rowless) {
        rr = cache[w].fr.data() + first;
      } else {
        st.reflector.fill(sw.b1 * x1s + sw.b2 * x2 + sw.shift_b, sw.b1 * dx, len, t, fr.data());
        rr = fr.data();
      }
      for (std::size_t j = 0; j < len; ++j) row[first + j] += sw.coef * pp[j] * rr[j];
    }
  });
  out.amp = out.raw;
  return out;
}

inline PointValue evaluate_separable_at(const SeparableState& st, double x1, double x2, double t) {
  PointValue out;
  const double xr = x1 - x2;
  for (const auto& sw : st.waves) {
    if (!sw.rel.contains(xr)) continue;
    const auto [fp, dfp] = st.particle.value_and_slope(sw.a1 * x1 + sw.a2 * x2 + sw.shift_a, t);
    const auto [fr, dfr] = st.reflector.value_and_slope(sw.b1 * x1 + sw.b2 * x2 + sw.shift_b, t);
    out.psi += sw.coef * fp * fr;
    out.d1 += sw.coef * (sw.a1 * dfp * fr + sw.b1 * fp * dfr);
    out.d2 += sw.coef * (sw.a2 * dfp * fr + sw.b2 * fp * dfr);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scenarios

enum class SystemKind { Mirror, FiniteBarrier, FiniteWell, InfiniteWell };

inline const char* to_string(SystemKind s) {
  switch (s) {
    case SystemKind::Mirror: return "mirror";
    case SystemKind::FiniteBarrier: return "finite_barrier";
    case SystemKind::FiniteWell: return "finite_well";
    case SystemKind::InfiniteWell: return "infinite_well";
  }
  return "?";
}

struct WavegroupScenario {
  Units units = Units::dimensionless();
  SystemKind system = SystemKind::Mirror;
  BodySpec particle;
  BodySpec reflector;
  double PE = 0.0;  ///< barrier (> 0) or well (< 0) height
  double D = 0.0;   ///< half-width of the barrier/well in x_rel
  QuadratureOptions quad;
  int well_n0 = 1;               ///< peak mode of the infinite-well group
  double well_mode_width = 0.1;  ///< position spread relative to D
  BarrierPhase phase = BarrierPhase::Total;
  bool force_generic = false;  ///< disable the separable evaluator

  void validate() const {
    particle.validate("particle");
    reflector.validate("reflector");
    if (system != SystemKind::InfiniteWell && !(particle.v0 > reflector.v0))
      throw PhysicsError("reflection needs the particle to approach: v0 > V0");
    switch (system) {
      case SystemKind::Mirror: break;
      case SystemKind::FiniteBarrier:
        if (!(PE > 0.0)) throw PhysicsError("finite barrier needs PE > 0");
        if (!(D > 0.0)) throw PhysicsError("half-width D must be positive");
        break;
      case SystemKind::FiniteWell:
        if (!(PE < 0.0)) throw PhysicsError("finite well needs PE < 0");
        if (!(D > 0.0)) throw PhysicsError("half-width D must be positive");
        break;
      case SystemKind::InfiniteWell:
        if (!(D > 0.0)) throw PhysicsError("half-width D must be positive");
        if (well_n0 < 1) throw PhysicsError("well peak mode must be >= 1");
        if (!(well_mode_width > 0.0)) throw PhysicsError("well mode width must be positive");
        break;
    }
  }
};

/// Mode indices retained by an infinite-well group: n0 +- 4/(pi delta), n >= 1.
inline std::pair<int, int> well_mode_range(int n0, double delta) {
  const int half = static_cast<int>(std::floor(4.0 / (kPi * delta)));
  return {std::max(1, n0 - half), n0 + half};
}

inline double well_mode_weight(int n, int n0, double delta) {
  const double z = (n - n0) * kPi * delta;
  return std::exp(-z * z);
}

/// Spectral components of the scenario, in a fixed order (particle-major).
inline std::vector<Component> build_components(const WavegroupScenario& sc) {
  sc.validate();
  const Units& u = sc.units;
  std::vector<Component> comps;
  if (sc.system == SystemKind::InfiniteWell) {
    const auto [nlo, nhi] = well_mode_range(sc.well_n0, sc.well_mode_width);
    const Spectrum s = make_quadrature(BodySpec{sc.particle.mass, 0.0, 0.0}, sc.reflector, sc.quad);
    for (int n = nlo; n <= nhi; ++n) {
      const double wn = well_mode_weight(n, sc.well_n0, sc.well_mode_width);
      for (std::size_t j = 0; j < s.reflector.size(); ++j) {
        const double V = s.reflector.velocity[j];
        const double v = well_quantized_velocity(u, V, n, sc.particle.mass, sc.reflector.mass, sc.D);
        const PartitionMap p = PartitionMap::make(u, sc.particle.mass, sc.reflector.mass, v, V);
        comps.push_back({std::polar(wn * s.reflector.weight[j], s.reflector.phase[j]),
                         well_state(p, n, sc.D)});
      }
    }
    return comps;
  }
  const Spectrum s = make_quadrature(sc.particle, sc.reflector, sc.quad);
  for (const auto& smp : s.samples()) {
    const PartitionMap p = PartitionMap::make(u, sc.particle.mass, sc.reflector.mass, smp.v, smp.V);
    PlaneWaveState st;
    if (sc.system == SystemKind::Mirror) {
      st = mirror_state(p);
    } else {
      st = barrier_state(solve_barrier_coefficients(p, sc.PE, sc.D), p, sc.PE, sc.D, sc.phase);
    }
    comps.push_back({std::polar(smp.weight, smp.phase), st});
  }
  return comps;
}

/// Mirror wavegroup in factorized form: incident minus reflected.
inline SeparableState mirror_separable(const WavegroupScenario& sc) {
  const double m = sc.particle.mass, M = sc.reflector.mass, Mt = m + M;
  const Spectrum s = make_quadrature(sc.particle, sc.reflector, sc.quad);
  SeparableState st;
  st.particle = AxisModes::from(s.particle, m, sc.units);
  st.reflector = AxisModes::from(s.reflector, M, sc.units);
  const RelInterval side{-std::numeric_limits<double>::infinity(), 0.0, false, true};
  st.waves.push_back({1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, side});
  st.waves.push_back({-1.0, (m - M) / Mt, 2.0 * M / Mt, 0.0, 2.0 * m / Mt, (M - m) / Mt, 0.0, side});
  return st;
}

/// Free incident group with no restriction to either side of the mirror.
inline SeparableState incident_separable(const WavegroupScenario& sc) {
  const Spectrum s = make_quadrature(sc.particle, sc.reflector, sc.quad);
  SeparableState st;
  st.particle = AxisModes::from(s.particle, sc.particle.mass, sc.units);
  st.reflector = AxisModes::from(s.reflector, sc.reflector.mass, sc.units);
  st.waves.push_back({1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, RelInterval{}});
  return st;
}

inline AmplitudeGrid evaluate_amplitudes(const WavegroupScenario& sc, const GridSpec& grid,
                                         double t) {
  sc.validate();
  if (sc.system == SystemKind::Mirror && !sc.force_generic)
    return evaluate_separable(mirror_separable(sc), grid, t);
  return evaluate_components(build_components(sc), grid, t);
}

inline GridSnapshot evaluate_snapshot(const WavegroupScenario& sc, const GridSpec& grid, double t) {
  return to_snapshot(evaluate_amplitudes(sc, grid, t));
}

inline GridSnapshot incident_only_snapshot(const WavegroupScenario& sc, const GridSpec& grid,
                                           double t) {
  sc.validate();
  return to_snapshot(evaluate_separable(incident_separable(sc), grid, t));
}

/// Pointwise value and gradient of the scenario's wavegroup.
class WavegroupField {
public:
  explicit WavegroupField(const WavegroupScenario& sc) {
    sc.validate();
    if (sc.system == SystemKind::Mirror && !sc.force_generic) {
      separable_ = true;
      sep_ = mirror_separable(sc);
    } else {
      comps_ = build_components(sc);
    }
  }
  static WavegroupField incident(const WavegroupScenario& sc) {
    WavegroupField f;
    f.separable_ = true;
    f.sep_ = incident_separable(sc);
    return f;
  }
  PointValue operator()(double x1, double x2, double t) const {
    return separable_ ? evaluate_separable_at(sep_, x1, x2, t)
                      : evaluate_components_at(comps_, x1, x2, t);
  }
  /// x_rel values where the field may be non-smooth.
  std::vector<double> seams() const {
    std::vector<double> out;
    if (separable_) {
      for (const auto& w : sep_.waves)
        for (double b : {w.rel.lo, w.rel.hi})
          if (std::isfinite(b)) out.push_back(b);
    } else if (!comps_.empty()) {
      const auto& st = comps_.front().state;
      for (int p = 0; p < st.n_pieces; ++p)
        for (double b : {st.pieces[static_cast<std::size_t>(p)].rel.lo,
                         st.pieces[static_cast<std::size_t>(p)].rel.hi})
          if (std::isfinite(b)) out.push_back(b);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
private:
  WavegroupField() = default;
  bool separable_ = false;
  SeparableState sep_;
  std::vector<Component> comps_;
};

// ---------------------------------------------------------------------------
// Classical centroids and coherence scales

/// Centroid of the free incident group at time t (collision at the origin at t = 0).
inline std::pair<double, double> incident_centroid(const BodySpec& p, const BodySpec& r, double t) {
  return {p.v0 * t, r.v0 * t};
}

/// Centroid of the mirror-reflected group: elastic-collision velocities.
inline std::pair<double, double> reflected_centroid(const BodySpec& p, const BodySpec& r, double t) {
  const double m = p.mass, M = r.mass, Mt = m + M;
  const double v1 = ((m - M) * p.v0 + 2.0 * M * r.v0) / Mt;
  const double v2 = ((M - m) * r.v0 + 2.0 * m * p.v0) / Mt;
  return {v1 * t, v2 * t};
}

struct CoherenceLength {
  double value = 0.0;
  bool infinite = false;
};

/// lambda v0 / dv with lambda = h / (mass v0), i.e. h / (mass dv).
inline CoherenceLength coherence_length(const BodySpec& b, const Units& u) {
  if (b.dv == 0.0) return {std::numeric_limits<double>::infinity(), true};
  if (b.v0 != 0.0) {
    const double lambda = u.h / (b.mass * std::abs(b.v0));
    return {lambda * std::abs(b.v0) / b.dv, false};
  }
  return {u.h / (b.mass * b.dv), false};
}

/// sqrt(2 kB T / M)
inline double thermal_spread(const Units& u, double M, double T) {
  if (!(M > 0.0) || !(T > 0.0)) throw PhysicsError("thermal spread needs M > 0 and T > 0");
  return std::sqrt(2.0 * u.kB * T / M);
}

/// h / sqrt(2 M kB T)
inline double thermal_coherence(const Units& u, double M, double T) {
  if (!(M > 0.0) || !(T > 0.0)) throw PhysicsError("thermal coherence needs M > 0 and T > 0");
  return u.h / std::sqrt(2.0 * M * u.kB * T);
}

}  // namespace twobody
