#pragma once

// Observables over snapshots: marginals, slices, extrema, fringe visibility
// and spacing, moments, region integrals; the probability-flux audit of a
// rectangle; centroid tracks; a sinusoid period fit for parameter sweeps.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "core.hpp"
#include "wavegroups.hpp"

namespace twobody {

// ---------------------------------------------------------------------------
// Marginals and slices

enum class MarginalAxis { ParticleX1, ReflectorX2 };

struct MarginalPdf {
  MarginalAxis axis = MarginalAxis::ParticleX1;
  std::vector<double> coords;
  std::vector<double> density;
};

/// Integrates the snapshot over the other body's coordinate (trapezoid).
inline MarginalPdf marginal(const GridSnapshot& s, MarginalAxis axis) {
  MarginalPdf out;
  out.axis = axis;
  const std::size_t n1 = s.x1.n, n2 = s.x2.n;
  if (axis == MarginalAxis::ParticleX1) {
    const auto w = trapezoid_weights(s.x2);
    out.coords = s.x1.values();
    out.density.assign(n1, 0.0);
    for (std::size_t i2 = 0; i2 < n2; ++i2)
      for (std::size_t i1 = 0; i1 < n1; ++i1) out.density[i1] += w[i2] * s.pdf[i2 * n1 + i1];
  } else {
    const auto w = trapezoid_weights(s.x1);
    out.coords = s.x2.values();
    out.density.assign(n2, 0.0);
    for (std::size_t i2 = 0; i2 < n2; ++i2) {
      double acc = 0.0;
      for (std::size_t i1 = 0; i1 < n1; ++i1) acc += w[i1] * s.pdf[i2 * n1 + i1];
      out.density[i2] = acc;
    }
  }
  return out;
}

/// A 1D profile: coordinates and values.
struct Profile {
  std::vector<double> x;
  std::vector<double> y;
};

inline Profile as_profile(const MarginalPdf& m) { return {m.coords, m.density}; }

/// Row at index i2 (varying x1).
inline Profile slice_along_x1(const GridSnapshot& s, std::size_t i2) {
  Profile p{s.x1.values(), {}};
  p.y.assign(s.pdf.begin() + static_cast<std::ptrdiff_t>(i2 * s.x1.n),
             s.pdf.begin() + static_cast<std::ptrdiff_t>((i2 + 1) * s.x1.n));
  return p;
}

/// Column at index i1 (varying x2).
inline Profile slice_along_x2(const GridSnapshot& s, std::size_t i1) {
  Profile p{s.x2.values(), std::vector<double>(s.x2.n)};
  for (std::size_t i2 = 0; i2 < s.x2.n; ++i2) p.y[i2] = s.pdf[i2 * s.x1.n + i1];
  return p;
}

inline std::size_t nearest_index(const Axis& a, double x) {
  if (a.n == 1) return 0;
  const double f = std::round((x - a.min) / a.step());
  return static_cast<std::size_t>(std::clamp(f, 0.0, static_cast<double>(a.n - 1)));
}

// ---------------------------------------------------------------------------
// Extrema, visibility, fringe spacing

struct Extremum {
  double x = 0.0;
  double y = 0.0;
  bool is_max = false;
};

/// Interior local extrema with quadratic refinement on each 3-point
/// neighbourhood. Plateaus report no extremum.
inline std::vector<Extremum> find_extrema(const Profile& p) {
  std::vector<Extremum> out;
  const std::size_t n = p.y.size();
  if (n < 3) return out;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double a = p.y[i - 1], b = p.y[i], c = p.y[i + 1];
    const bool is_max = b > a && b >= c;
    const bool is_min = b < a && b <= c;
    if (!is_max && !is_min) continue;
    const double h = p.x[i + 1] - p.x[i];
    const double curv = a - 2.0 * b + c;
    double off = 0.0, val = b;
    if (curv != 0.0) {
      off = 0.5 * (a - c) / curv;  // in units of h
      off = std::clamp(off, -0.5, 0.5);
      val = b - 0.25 * (a - c) * off;
    }
    out.push_back({p.x[i] + off * h, val, is_max});
  }
  return out;
}

struct Visibility {
  double value = 0.0;
  bool defined = false;
  std::size_t fringes = 0;  ///< minima bracketed by maxima
};

/// Mean local contrast (max - min)/(max + min) over interior minima that sit
/// between two maxima. Maxima below 1% of the window's peak are ignored so
/// numerical noise in empty tails does not count as fringes.
inline Visibility visibility(const Profile& p) {
  Visibility out;
  if (p.y.empty()) return out;
  const double peak = *std::max_element(p.y.begin(), p.y.end());
  if (!(peak > 0.0)) return out;
  const auto ext = find_extrema(p);
  std::vector<Extremum> kept;
  for (const auto& e : ext) {
    if (e.is_max && e.y < 0.01 * peak) continue;
    kept.push_back(e);
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (kept[i].is_max) continue;
    // Nearest kept maxima on each side.
    std::optional<double> left, right;
    for (std::size_t j = i; j-- > 0;)
      if (kept[j].is_max) {
        left = kept[j].y;
        break;
      }
    for (std::size_t j = i + 1; j < kept.size(); ++j)
      if (kept[j].is_max) {
        right = kept[j].y;
        break;
      }
    if (!left || !right) continue;
    const double mx = 0.5 * (*left + *right);
    const double mn = std::max(kept[i].y, 0.0);
    if (mx + mn <= 0.0) continue;
    sum += (mx - mn) / (mx + mn);
    ++count;
  }
  if (count == 0) return out;
  out.value = std::clamp(sum / static_cast<double>(count), 0.0, 1.0);
  out.defined = true;
  out.fringes = count;
  return out;
}

/// Full fringe period: twice the mean distance from each maximum to its
/// adjacent minima. Returns nullopt when no max/min pair exists.
inline std::optional<double> fringe_spacing_measured(const Profile& p) {
  const auto ext = find_extrema(p);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i + 1 < ext.size(); ++i) {
    if (ext[i].is_max != ext[i + 1].is_max) {
      sum += ext[i + 1].x - ext[i].x;
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return 2.0 * sum / static_cast<double>(count);
}

// ---------------------------------------------------------------------------
// Moments and region integrals

struct Moments {
  double mass = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
};

inline Moments moments(const Profile& p) {
  Moments m;
  const std::size_t n = p.x.size();
  if (n < 2) return m;
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double h = p.x[i + 1] - p.x[i];
    s0 += 0.5 * h * (p.y[i] + p.y[i + 1]);
    s1 += 0.5 * h * (p.x[i] * p.y[i] + p.x[i + 1] * p.y[i + 1]);
  }
  if (!(s0 > 0.0)) return m;
  m.mass = s0;
  m.mean = s1 / s0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double h = p.x[i + 1] - p.x[i];
    const double d0 = p.x[i] - m.mean, d1 = p.x[i + 1] - m.mean;
    s2 += 0.5 * h * (d0 * d0 * p.y[i] + d1 * d1 * p.y[i + 1]);
  }
  m.stddev = std::sqrt(s2 / s0);
  return m;
}

/// Trapezoidal integral of the snapshot over grid points inside
/// [x1_lo, x1_hi] x [x2_lo, x2_hi]. A range that catches a single node of a
/// multi-point axis gets that node's cell width; a single-point axis counts
/// with weight one.
inline double region_integral(const GridSnapshot& s, double x1_lo, double x1_hi, double x2_lo,
                              double x2_hi) {
  auto index_range = [](const Axis& a, double lo, double hi) {
    std::size_t first = a.n, last = 0;
    for (std::size_t i = 0; i < a.n; ++i) {
      const double x = a.at(i);
      if (x >= lo && x <= hi) {
        first = std::min(first, i);
        last = i + 1;
      }
    }
    return std::pair<std::size_t, std::size_t>{first, last};
  };
  const auto [f1, l1] = index_range(s.x1, x1_lo, x1_hi);
  const auto [f2, l2] = index_range(s.x2, x2_lo, x2_hi);
  if (f1 >= l1 || f2 >= l2) return 0.0;
  const double h1 = s.x1.step(), h2 = s.x2.step();
  auto w = [](std::size_t i, std::size_t f, std::size_t l, double h) {
    if (l - f == 1) return h > 0.0 ? h : 1.0;
    return (i == f || i + 1 == l) ? 0.5 * h : h;
  };
  double total = 0.0;
  for (std::size_t i2 = f2; i2 < l2; ++i2) {
    double row = 0.0;
    for (std::size_t i1 = f1; i1 < l1; ++i1) row += w(i1, f1, l1, h1) * s.pdf[i2 * s.x1.n + i1];
    total += w(i2, f2, l2, h2) * row;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Flux audit

struct Rect {
  double x1_lo = 0.0, x1_hi = 0.0;
  double x2_lo = 0.0, x2_hi = 0.0;

  static Rect square(double a, double b) { return {a, b, a, b}; }
  void validate() const {
    if (!(x1_hi > x1_lo) || !(x2_hi > x2_lo) || !std::isfinite(x1_lo) || !std::isfinite(x1_hi) ||
        !std::isfinite(x2_lo) || !std::isfinite(x2_hi))
      throw PhysicsError("audit region must be a finite, non-empty rectangle");
  }
};

/// Rate of change of the probability inside a rectangle and the net outward
/// flux through each pair of its sides. residual = dP_dt + flux_x1 + flux_x2.
struct FluxAudit {
  Rect region;
  double t = 0.0;
  double dt = 0.0;
  double dP_dt = 0.0;
  double flux_x1 = 0.0;
  double flux_x2 = 0.0;
  double residual = 0.0;
  double relative_residual() const {
    const double scale = std::max({std::abs(dP_dt), std::abs(flux_x1), std::abs(flux_x2)});
    return scale > 0.0 ? std::abs(residual) / scale : 0.0;
  }
};

struct FluxAuditOptions {
  std::size_t panels_x1 = 16;  ///< Gauss-Legendre panels per side
  std::size_t panels_x2 = 16;
};

namespace detail {

using GaussRule = boost::math::quadrature::gauss<double, 20>;

/// Integral over [lo, hi] on `panels` equal panels, each additionally split
/// at the given breakpoints.
template <class F>
double panel_integral(F&& f, double lo, double hi, std::size_t panels,
                      const std::vector<double>& breaks) {
  std::vector<double> cuts;
  cuts.reserve(panels + 1 + breaks.size());
  for (std::size_t i = 0; i <= panels; ++i)
    cuts.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(panels));
  cuts.back() = hi;
  for (double b : breaks)
    if (b > lo && b < hi) cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] <= cuts[i]) continue;
    total += GaussRule::integrate(f, cuts[i], cuts[i + 1]);
  }
  return total;
}

}  // namespace detail

/// Probability inside the rectangle at time t, integrated with
/// Gauss-Legendre panels split along the field's seams (lines of constant
/// x_rel where the wavefunction may have a kink).
inline double region_probability(const WavegroupField& field, const Rect& r, double t,
                                 const FluxAuditOptions& opt = {}) {
  r.validate();
  const auto seams = field.seams();
  auto row = [&](double x2) {
    std::vector<double> breaks;
    for (double s : seams) breaks.push_back(x2 + s);
    return detail::panel_integral([&](double x1) { return std::norm(field(x1, x2, t).psi); },
                                  r.x1_lo, r.x1_hi, opt.panels_x1, breaks);
  };
  std::vector<double> breaks2;
  for (double s : seams) {
    breaks2.push_back(r.x1_lo - s);
    breaks2.push_back(r.x1_hi - s);
  }
  return detail::panel_integral(row, r.x2_lo, r.x2_hi, opt.panels_x2, breaks2);
}

/// Audits d/dt of the probability in `r` against the boundary currents
/// j_i = (hbar / mass_i) Im(psi* d_i psi). dP/dt is a centred difference with
/// step dt.
inline FluxAudit flux_audit(const WavegroupScenario& sc, const Rect& r, double t, double dt,
                            const FluxAuditOptions& opt = {}) {
  r.validate();
  if (!(dt > 0.0)) throw PhysicsError("audit time step must be positive");
  const WavegroupField field(sc);
  const double hbar = sc.units.hbar, m = sc.particle.mass, M = sc.reflector.mass;
  const auto seams = field.seams();

  FluxAudit out;
  out.region = r;
  out.t = t;
  out.dt = dt;
  const double p_plus = region_probability(field, r, t + dt, opt);
  const double p_minus = region_probability(field, r, t - dt, opt);
  out.dP_dt = (p_plus - p_minus) / (2.0 * dt);

  auto j1 = [&](double x1, double x2) {
    const PointValue v = field(x1, x2, t);
    return hbar / m * std::imag(std::conj(v.psi) * v.d1);
  };
  auto j2 = [&](double x1, double x2) {
    const PointValue v = field(x1, x2, t);
    return hbar / M * std::imag(std::conj(v.psi) * v.d2);
  };
  // Sides x1 = const, integrated over x2; seams at x2 = x1 - s.
  auto side_x1 = [&](double x1) {
    std::vector<double> b;
    for (double s : seams) b.push_back(x1 - s);
    return detail::panel_integral([&](double x2) { return j1(x1, x2); }, r.x2_lo, r.x2_hi,
                                  opt.panels_x2, b);
  };
  auto side_x2 = [&](double x2) {
    std::vector<double> b;
    for (double s : seams) b.push_back(x2 + s);
    return detail::panel_integral([&](double x1) { return j2(x1, x2); }, r.x1_lo, r.x1_hi,
                                  opt.panels_x1, b);
  };
  out.flux_x1 = side_x1(r.x1_hi) - side_x1(r.x1_lo);
  out.flux_x2 = side_x2(r.x2_hi) - side_x2(r.x2_lo);
  out.residual = out.dP_dt + out.flux_x1 + out.flux_x2;
  return out;
}

// ---------------------------------------------------------------------------
// Centroid tracks

enum class Conditioning { MarginalOnly, Joint };

enum class Body { Particle, Reflector };

struct CentroidPoint {
  double t = 0.0;
  double mean = 0.0;
};

/// Expectation value of one body's coordinate over time.
///
/// MarginalOnly: mean of that body's marginal over the window.
/// Joint: mean along the grid line through the other body's marginal
/// centroid (the conditional mean given the other body sits at its mean).
inline std::vector<CentroidPoint> centroid_track(const WavegroupScenario& sc, Body body,
                                                 const std::vector<double>& times,
                                                 Conditioning cond,
                                                 const std::function<GridSpec(double)>& window) {
  std::vector<CentroidPoint> out;
  out.reserve(times.size());
  for (double t : times) {
    const GridSnapshot s = evaluate_snapshot(sc, window(t), t);
    const MarginalPdf mp = marginal(s, MarginalAxis::ParticleX1);
    const MarginalPdf mr = marginal(s, MarginalAxis::ReflectorX2);
    double mean = 0.0;
    if (cond == Conditioning::MarginalOnly) {
      mean = moments(as_profile(body == Body::Particle ? mp : mr)).mean;
    } else if (body == Body::Particle) {
      const double other = moments(as_profile(mr)).mean;
      mean = moments(slice_along_x1(s, nearest_index(s.x2, other))).mean;
    } else {
      const double other = moments(as_profile(mp)).mean;
      mean = moments(slice_along_x2(s, nearest_index(s.x1, other))).mean;
    }
    out.push_back({t, mean});
  }
  return out;
}

/// Least-squares slope of a centroid track.
inline double track_slope(const std::vector<CentroidPoint>& pts) {
  const double n = static_cast<double>(pts.size());
  double st = 0.0, sx = 0.0, stt = 0.0, stx = 0.0;
  for (const auto& p : pts) {
    st += p.t;
    sx += p.mean;
    stt += p.t * p.t;
    stx += p.t * p.mean;
  }
  return (n * stx - st * sx) / (n * stt - st * st);
}

// ---------------------------------------------------------------------------
// Sinusoid fit

struct SinusoidFit {
  double period = 0.0;
  double offset = 0.0;
  double amplitude = 0.0;
  double phase = 0.0;  ///< y ~ offset + amplitude cos(2 pi x / period + phase)
  double rms = 0.0;
};

namespace detail {

/// Linear least squares for y ~ a + b cos(w x) + c sin(w x) at fixed w.
inline std::array<double, 4> sinusoid_lsq(const std::vector<double>& x, const std::vector<double>& y,
                                          double w) {
  double A[3][3] = {}, rhs[3] = {};
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f[3] = {1.0, std::cos(w * x[i]), std::sin(w * x[i])};
    for (int r = 0; r < 3; ++r) {
      rhs[r] += f[r] * y[i];
      for (int c = 0; c < 3; ++c) A[r][c] += f[r] * f[c];
    }
  }
  // Gaussian elimination with partial pivoting.
  int idx[3] = {0, 1, 2};
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(A[idx[r]][col]) > std::abs(A[idx[piv]][col])) piv = r;
    std::swap(idx[col], idx[piv]);
    const int pr = idx[col];
    if (A[pr][col] == 0.0) return {0.0, 0.0, 0.0, std::numeric_limits<double>::infinity()};
    for (int r = col + 1; r < 3; ++r) {
      const int rr = idx[r];
      const double f = A[rr][col] / A[pr][col];
      for (int c = col; c < 3; ++c) A[rr][c] -= f * A[pr][c];
      rhs[rr] -= f * rhs[pr];
    }
  }
  double sol[3];
  for (int col = 2; col >= 0; --col) {
    const int pr = idx[col];
    double acc = rhs[pr];
    for (int c = col + 1; c < 3; ++c) acc -= A[pr][c] * sol[c];
    sol[col] = acc / A[pr][col];
  }
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (sol[0] + sol[1] * std::cos(w * x[i]) + sol[2] * std::sin(w * x[i]));
    ss += r * r;
  }
  return {sol[0], sol[1], sol[2], ss};
}

}  // namespace detail

/// Best-fitting sinusoid with period in [p_min, p_max]: coarse scan in
/// frequency followed by golden-section refinement.
inline SinusoidFit fit_sinusoid(const std::vector<double>& x, const std::vector<double>& y,
                                double p_min, double p_max) {
  if (x.size() != y.size() || x.size() < 4) throw std::invalid_argument("sinusoid fit needs >= 4 points");
  if (!(p_max > p_min) || !(p_min > 0.0)) throw std::invalid_argument("bad period range");
  // Centre x to keep the normal equations well conditioned.
  const double xc = 0.5 * (*std::min_element(x.begin(), x.end()) + *std::max_element(x.begin(), x.end()));
  std::vector<double> xs(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) xs[i] = x[i] - xc;
  auto cost = [&](double w) { return detail::sinusoid_lsq(xs, y, w)[3]; };
  const double w_lo = kTwoPi / p_max, w_hi = kTwoPi / p_min;
  const int scan = 2000;
  double best_w = w_lo, best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= scan; ++i) {
    const double w = w_lo + (w_hi - w_lo) * i / scan;
    const double c = cost(w);
    if (c < best) {
      best = c;
      best_w = w;
    }
  }
  const double step = (w_hi - w_lo) / scan;
  double a = std::max(w_lo, best_w - step), b = std::min(w_hi, best_w + step);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c1 = b - g * (b - a), c2 = a + g * (b - a);
  double f1 = cost(c1), f2 = cost(c2);
  for (int it = 0; it < 200 && (b - a) > 1e-14 * b; ++it) {
    if (f1 < f2) {
      b = c2;
      c2 = c1;
      f2 = f1;
      c1 = b - g * (b - a);
      f1 = cost(c1);
    } else {
      a = c1;
      c1 = c2;
      f1 = f2;
      c2 = a + g * (b - a);
      f2 = cost(c2);
    }
  }
  const double w = 0.5 * (a + b);
  const auto sol = detail::sinusoid_lsq(xs, y, w);
  SinusoidFit fit;
  fit.period = kTwoPi / w;
  fit.offset = sol[0];
  fit.amplitude = std::hypot(sol[1], sol[2]);
  fit.phase = std::atan2(-sol[2], sol[1]) - w * xc;
  fit.rms = std::sqrt(sol[3] / static_cast<double>(x.size()));
  return fit;
}

}  // namespace twobody
