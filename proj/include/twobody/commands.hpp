#pragma once

// Subcommand bodies shared by the command-line tool, the preset regression
// runner and the tests. Each command writes its snapshots and reports into
// an output directory and returns the observables it computed.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "analysis.hpp"
#include "decoherence.hpp"
#include "oracle.hpp"
#include "scenario.hpp"
#include "slab.hpp"
#include "wavegroups.hpp"

#ifndef TWOBODY_VERSION
#define TWOBODY_VERSION "0.1.0"
#endif

namespace twobody {

namespace fs = std::filesystem;

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"eigenstate", "wavegroup", "slab",  "barrier",
                                                 "well",       "marginals", "audit", "decoherence",
                                                 "oracle-check"};
  return names;
}

struct RunInfo {
  std::string command;
  std::string scenario_path;
  std::vector<std::string> overrides;
};

struct RunResult {
  Report report;
  std::vector<fs::path> files;
};

namespace detail {

inline std::string tag(const std::string& name, std::size_t i) { return name + "@" + std::to_string(i); }

/// Maxima of a profile above `floor` times its peak value.
inline std::size_t count_maxima(const Profile& p, double floor) {
  double peak = 0.0;
  for (double y : p.y) peak = std::max(peak, y);
  std::size_t n = 0;
  for (const auto& e : find_extrema(p))
    if (e.is_max && e.y > floor * peak) ++n;
  return n;
}

inline Profile window(const Profile& p, double lo, double hi) {
  Profile out;
  for (std::size_t i = 0; i < p.x.size(); ++i)
    if (p.x[i] >= lo && p.x[i] <= hi) {
      out.x.push_back(p.x[i]);
      out.y.push_back(p.y[i]);
    }
  return out;
}

/// x1 band between the two reflected slab groups at time t.
inline std::pair<double, double> slab_overlap_band(const SlabScenario& sc, double t) {
  const auto c = slab_group_centroids(sc, t);
  return {std::min(c[0].first, c[1].first), std::max(c[0].first, c[1].first)};
}

inline void snapshot_observables(const Scenario& sc, const GridSnapshot& s, std::size_t i, Report& rep) {
  rep.emplace_back(tag("t", i), s.t);
  rep.emplace_back(tag("norm", i), s.norm);
  double lo = s.pdf.empty() ? 0.0 : s.pdf[0], hi = lo;
  std::size_t arg = 0;
  for (std::size_t k = 0; k < s.pdf.size(); ++k) {
    if (s.pdf[k] < lo) lo = s.pdf[k];
    if (s.pdf[k] > hi) {
      hi = s.pdf[k];
      arg = k;
    }
  }
  rep.emplace_back(tag("pdf_min", i), lo);
  rep.emplace_back(tag("pdf_max", i), hi);
  rep.emplace_back(tag("peak_x1", i), s.x1.at(arg % s.x1.n));
  rep.emplace_back(tag("peak_x2", i), s.x2.at(arg / s.x1.n));
  if (!s.warnings.empty()) rep.emplace_back(tag("warnings", i), static_cast<double>(s.warnings.size()));

  const Profile p1 = as_profile(marginal(s, MarginalAxis::ParticleX1));
  const Profile p2 = as_profile(marginal(s, MarginalAxis::ReflectorX2));
  if (s.norm > 0.0) {
    const Moments m1 = moments(p1), m2 = moments(p2);
    rep.emplace_back(tag("mean_x1", i), m1.mean);
    rep.emplace_back(tag("sd_x1", i), m1.stddev);
    rep.emplace_back(tag("mean_x2", i), m2.mean);
    rep.emplace_back(tag("sd_x2", i), m2.stddev);
  }
  const AnalysisOptions& a = sc.analysis;
  const Profile pv = a.visibility_x1_min ? window(p1, *a.visibility_x1_min, *a.visibility_x1_max) : p1;
  const Visibility v = visibility(pv);
  rep.emplace_back(tag("visibility_x1", i), v.value);
  rep.emplace_back(tag("fringes_x1", i), static_cast<double>(v.fringes));
  if (a.slice_x1) {
    const Profile sl = slice_along_x2(s, nearest_index(s.x1, *a.slice_x1));
    rep.emplace_back(tag("slice_maxima", i), static_cast<double>(count_maxima(sl, a.peak_floor)));
  }
  if (a.band_x1_min) {
    // x2 profile integrated over the x1 band.
    const auto w = trapezoid_weights(s.x1);
    Profile band{s.x2.values(), std::vector<double>(s.x2.n, 0.0)};
    for (std::size_t i2 = 0; i2 < s.x2.n; ++i2)
      for (std::size_t i1 = 0; i1 < s.x1.n; ++i1)
        if (s.x1.at(i1) >= *a.band_x1_min && s.x1.at(i1) <= *a.band_x1_max)
          band.y[i2] += w[i1] * s.pdf[i2 * s.x1.n + i1];
    rep.emplace_back(tag("band_maxima", i), static_cast<double>(count_maxima(band, a.peak_floor)));
  }
  if (a.fringe_x2) {
    Profile sl = slice_along_x1(s, nearest_index(s.x2, *a.fringe_x2));
    if (a.fringe_x1_min) sl = window(sl, *a.fringe_x1_min, *a.fringe_x1_max);
    if (const auto d = fringe_spacing_measured(sl)) rep.emplace_back(tag("fringe_spacing_x1", i), *d);
  }
  if (sc.kind == ScenarioKind::Slab) {
    const auto [b0, b1] = slab_overlap_band(sc.slab, s.t);
    rep.emplace_back(tag("overlap_integral", i), region_integral(s, b0, b1, s.x2.min, s.x2.max));
  } else {
    rep.emplace_back(tag("overlap_integral", i), s.norm);
  }
}

inline GridSnapshot evaluate(const Scenario& sc, double t) {
  if (sc.kind == ScenarioKind::Slab) return slab_wavegroup_snapshot(sc.slab, sc.grid, t);
  return evaluate_snapshot(sc.wave, sc.grid, t);
}

inline void central_observables(const Scenario& sc, Report& rep) {
  const Units& u = sc.units();
  const BodySpec& p = sc.particle();
  const BodySpec& r = sc.reflector();
  rep.emplace_back("mass_ratio", r.mass / p.mass);
  switch (sc.kind) {
    case ScenarioKind::Mirror: {
      const PartitionMap pm = PartitionMap::make(u, p.mass, r.mass, p.v0, r.v0);
      const FringeSpacing f = mirror_fringe_spacing(pm);
      rep.emplace_back("fringe_spacing_exact", f.exact);
      rep.emplace_back("fringe_spacing_approx", f.approximate);
      break;
    }
    case ScenarioKind::Slab: {
      const BodySpec sr = sc.slab.slab_resolved();
      const SlabHarmonic h = slab_harmonic_pdf(u, p.mass, sr.mass, p.v0, sr.v0, sc.slab.D);
      rep.emplace_back("harmonic_exact", h.exact);
      rep.emplace_back("harmonic_approx", h.approximate);
      rep.emplace_back("recoil_offset", slab_recoil_offset(p.mass, sr.mass, sc.slab.D));
      rep.emplace_back("overlap_temperature_bound",
                       slab_overlap_temperature_bound(u, p.mass, sr.mass, sc.slab.D));
      rep.emplace_back("sweep_half_period", kPi * u.hbar / (2.0 * sc.slab.D * p.mass));
      if (sc.slab.T) rep.emplace_back("slab_coherence_length", thermal_coherence(u, sr.mass, *sc.slab.T));
      rep.emplace_back("particle_coherence_length", coherence_length(p, u).value);
      break;
    }
    case ScenarioKind::FiniteBarrier:
    case ScenarioKind::FiniteWell: {
      const PartitionMap pm = PartitionMap::make(u, p.mass, r.mass, p.v0, r.v0);
      const ScatteringCoefficients c = solve_barrier_coefficients(pm, sc.wave.PE, sc.wave.D);
      rep.emplace_back("PE", sc.wave.PE);
      rep.emplace_back("E_rel", pm.E_rel);
      rep.emplace_back("reflection_central", std::norm(c.B));
      rep.emplace_back("transmission_central", std::norm(c.H));
      const auto [pt, pr] = predicted_transmission_reflection(sc.wave);
      rep.emplace_back("transmission_predicted", pt);
      rep.emplace_back("reflection_predicted", pr);
      break;
    }
    case ScenarioKind::InfiniteWell: {
      const double v = well_quantized_velocity(u, r.v0, sc.wave.well_n0, p.mass, r.mass, sc.wave.D);
      rep.emplace_back("quantized_velocity", v);
      rep.emplace_back("well_wavevector", well_wavevector(sc.wave.well_n0, sc.wave.D));
      break;
    }
  }
}

inline void write_manifest(const fs::path& dir, const Scenario& sc, const RunInfo& info,
                           const RunResult& res) {
  nlohmann::json j;
  j["command"] = info.command;
  j["scenario"] = info.scenario_path;
  j["overrides"] = info.overrides;
  j["parameters"] = sc.resolved;
  j["system"] = to_string(sc.kind);
  const auto& q = sc.kind == ScenarioKind::Slab ? sc.slab.quad : sc.wave.quad;
  j["seeds"]["dephase_seed"] = q.dephase_seed ? nlohmann::json(*q.dephase_seed) : nlohmann::json(nullptr);
  j["versions"] = {{"twobody", TWOBODY_VERSION},
                   {"compiler", __VERSION__},
                   {"cplusplus", __cplusplus},
                   {"fftw", std::string(fftw_version)}};
  nlohmann::json files = nlohmann::json::array();
  for (const auto& f : res.files) files.push_back(f.filename().string());
  j["files"] = files;
  nlohmann::json obs = nlohmann::json::object();
  for (const auto& [k, v] : res.report) obs[k] = v;
  j["observables"] = obs;
  std::ofstream out(dir / "manifest.json");
  if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
  out << j.dump(2) << '\n';
}

inline void write_marginal_csv(const fs::path& path, const MarginalPdf& m, double t) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "# t=" << format_double(t) << " axis=" << (m.axis == MarginalAxis::ParticleX1 ? "x1" : "x2")
      << '\n';
  for (std::size_t i = 0; i < m.coords.size(); ++i)
    out << format_double(m.coords[i]) << ',' << format_double(m.density[i]) << '\n';
}

inline void require_kind(const Scenario& sc, std::initializer_list<ScenarioKind> kinds, const std::string& cmd) {
  for (auto k : kinds)
    if (sc.kind == k) return;
  throw PhysicsError(cmd + " does not apply to system kind " + to_string(sc.kind));
}

}  // namespace detail

/// Runs one subcommand on a loaded scenario, writing artifacts into `dir`.
inline RunResult run_command(const std::string& cmd, const Scenario& sc, const fs::path& dir,
                             const RunInfo& info) {
  using detail::tag;
  fs::create_directories(dir);
  RunResult res;
  auto snapshots = [&](const Scenario& s) {
    for (std::size_t i = 0; i < s.times.size(); ++i) {
      const GridSnapshot snap = detail::evaluate(s, s.times[i]);
      const fs::path f = dir / ("snapshot_" + std::to_string(i) + ".csv");
      write_snapshot_csv(f, snap);
      res.files.push_back(f);
      detail::snapshot_observables(s, snap, i, res.report);
    }
  };

  if (cmd == "eigenstate") {
    // Single harmonic component at the central velocities.
    Scenario s = sc;
    if (s.kind == ScenarioKind::Slab) {
      s.slab.slab.dv = 0.0;
      s.slab.T.reset();
      s.slab.particle.dv = 0.0;
    } else {
      s.wave.particle.dv = 0.0;
      s.wave.reflector.dv = 0.0;
      s.wave.quad.dephase_seed.reset();
      if (s.kind == ScenarioKind::InfiniteWell) s.wave.well_mode_width = 10.0;
    }
    detail::central_observables(s, res.report);
    snapshots(s);
  } else if (cmd == "wavegroup") {
    detail::central_observables(sc, res.report);
    snapshots(sc);
  } else if (cmd == "slab") {
    detail::require_kind(sc, {ScenarioKind::Slab}, cmd);
    detail::central_observables(sc, res.report);
    snapshots(sc);
  } else if (cmd == "barrier") {
    detail::require_kind(sc, {ScenarioKind::FiniteBarrier}, cmd);
    detail::central_observables(sc, res.report);
    snapshots(sc);
  } else if (cmd == "well") {
    detail::require_kind(sc, {ScenarioKind::FiniteWell, ScenarioKind::InfiniteWell}, cmd);
    detail::central_observables(sc, res.report);
    snapshots(sc);
  } else if (cmd == "marginals") {
    for (std::size_t i = 0; i < sc.times.size(); ++i) {
      const GridSnapshot snap = detail::evaluate(sc, sc.times[i]);
      for (auto axis : {MarginalAxis::ParticleX1, MarginalAxis::ReflectorX2}) {
        const MarginalPdf m = marginal(snap, axis);
        const std::string name = axis == MarginalAxis::ParticleX1 ? "x1" : "x2";
        const fs::path f = dir / ("marginal_" + name + "_" + std::to_string(i) + ".csv");
        detail::write_marginal_csv(f, m, snap.t);
        res.files.push_back(f);
        const Visibility v = visibility(as_profile(m));
        res.report.emplace_back(tag("visibility_" + name, i), v.value);
        res.report.emplace_back(tag("fringes_" + name, i), static_cast<double>(v.fringes));
        if (snap.norm > 0.0) {
          const Moments mo = moments(as_profile(m));
          res.report.emplace_back(tag("mean_" + name, i), mo.mean);
          res.report.emplace_back(tag("sd_" + name, i), mo.stddev);
        }
      }
    }
  } else if (cmd == "audit") {
    detail::require_kind(sc, {ScenarioKind::Mirror, ScenarioKind::FiniteBarrier, ScenarioKind::FiniteWell,
                              ScenarioKind::InfiniteWell},
                         cmd);
    if (!sc.audit) throw SchemaError("audit needs an [audit] section");
    const AuditOptions& a = *sc.audit;
    const Rect rect{a.x1_min, a.x1_max, a.x2_min, a.x2_max};
    const FluxAudit fa = flux_audit(sc.wave, rect, a.t, a.dt, {a.panels, a.panels});
    res.report.emplace_back("dP_dt", fa.dP_dt);
    res.report.emplace_back("flux_x1", fa.flux_x1);
    res.report.emplace_back("flux_x2", fa.flux_x2);
    res.report.emplace_back("residual", fa.residual);
    res.report.emplace_back("relative_residual", fa.relative_residual());
  } else if (cmd == "decoherence") {
    const Units& u = sc.units();
    const double m = sc.particle().mass, M = sc.reflector().mass;
    const EstimatorOptions& e = sc.estimators;
    if (sc.kind == ScenarioKind::Slab) {
      const double D = sc.slab.D;
      res.report.emplace_back("recoil_offset", slab_recoil_offset(m, M, D));
      res.report.emplace_back("no_interference_temperature", slab_no_interference_temperature(u, m, M, D));
      if (e.T) res.report.emplace_back("no_interference_mass", slab_no_interference_mass(u, m, D, *e.T));
      if (e.m_star) {
        const ProbeEstimate pe = probe_velocity_slab(u, M, m, *e.m_star, D);
        res.report.emplace_back("probe_delta_x", pe.delta_x);
        res.report.emplace_back("probe_velocity", pe.velocity);
      }
    } else if (e.l_c && e.m_star) {
      const ProbeEstimate pe = probe_velocity_mirror(u, M, m, *e.m_star, *e.l_c);
      res.report.emplace_back("probe_delta_x", pe.delta_x);
      res.report.emplace_back("probe_velocity", pe.velocity);
    }
    if (e.T) {
      res.report.emplace_back("thermal_coherence_length", thermal_coherence(u, M, *e.T));
      res.report.emplace_back("fringe_loss_length", particle_fringe_loss_length(u, M, *e.T, m));
      if (e.l_c)
        res.report.emplace_back("fringes_lost",
                                *e.l_c > particle_fringe_loss_length(u, M, *e.T, m) ? 1.0 : 0.0);
      res.report.emplace_back("reflection_vs_thermal", reflection_vs_thermal_ratio(u, m, sc.particle().v0, M, *e.T));
      const double dx = e.delta_x ? *e.delta_x
                        : sc.kind == ScenarioKind::Slab ? slab_recoil_offset(m, M, sc.slab.D)
                                                        : 0.0;
      if (dx > 0.0) {
        DecoherenceInput in{M, *e.T, dx, e.t_R.value_or(0.0)};
        res.report.emplace_back("zurek_ratio", zurek_ratio(u, in));
        if (e.t_R) res.report.emplace_back("zurek_time", zurek_time(u, in));
      }
    }
    if (res.report.empty()) throw SchemaError("decoherence needs [estimators] inputs");
  } else if (cmd == "oracle-check") {
    detail::require_kind(sc, {ScenarioKind::FiniteBarrier, ScenarioKind::FiniteWell}, cmd);
    if (!sc.oracle) throw SchemaError("oracle-check needs an [oracle] section");
    const OracleComparison c = compare_with_oracle(sc.wave, sc.grid, sc.oracle->t0, sc.oracle->t1, sc.oracle->dt);
    res.report.emplace_back("relative_l2", c.relative_l2);
    res.report.emplace_back("norm_initial", c.norm_initial);
    res.report.emplace_back("norm_final", c.norm_final);
    res.report.emplace_back("norm_drift", std::abs(c.norm_final - c.norm_initial) / c.norm_initial);
    res.report.emplace_back("transmitted", c.transmitted);
    res.report.emplace_back("reflected", c.reflected);
    res.report.emplace_back("transmission_predicted", c.predicted_transmitted);
    res.report.emplace_back("reflection_predicted", c.predicted_reflected);
    res.report.emplace_back("steps", static_cast<double>(c.steps));
  } else {
    throw SchemaError("unknown command '" + cmd + "'");
  }

  write_report(dir / "report.txt", res.report);
  res.files.push_back(dir / "report.txt");
  detail::write_manifest(dir, sc, info, res);
  return res;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepParam {
  std::string key;  ///< section.key
  double lo = 0.0, hi = 0.0;
  std::size_t n = 0;

  double value(std::size_t i) const {
    return n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
};

/// Parses `section.key=a:b:n`.
inline SweepParam parse_sweep_param(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos) throw SchemaError("sweep parameter '" + s + "' is not key=a:b:n");
  SweepParam p;
  p.key = s.substr(0, eq);
  if (p.key.find('.') == std::string::npos) throw SchemaError("sweep key must be section.key");
  const std::string range = s.substr(eq + 1);
  const auto c1 = range.find(':');
  const auto c2 = range.find(':', c1 == std::string::npos ? c1 : c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos) throw SchemaError("sweep range must be a:b:n");
  const auto a = detail::parse_number(std::string_view(range).substr(0, c1));
  const auto b = detail::parse_number(std::string_view(range).substr(c1 + 1, c2 - c1 - 1));
  const auto n = detail::parse_number(std::string_view(range).substr(c2 + 1));
  if (!a || !b || !n || *n < 1 || std::floor(*n) != *n) throw SchemaError("sweep range must be a:b:n with n >= 1");
  p.lo = *a;
  p.hi = *b;
  p.n = static_cast<std::size_t>(*n);
  return p;
}

struct SweepRow {
  double value = 0.0;
  Report report;
};

/// Runs `cmd` at every sweep point, each in its own subdirectory, on a pool
/// of worker threads, then writes sweep.csv with one row per point.
inline std::vector<SweepRow> run_sweep(const std::string& cmd, const Document& base, const SweepParam& sp,
                                       const fs::path& dir, const RunInfo& info, unsigned workers = 0) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  fs::create_directories(dir);
  // Validate every point before starting any work.
  std::vector<Scenario> scenarios;
  for (std::size_t i = 0; i < sp.n; ++i) {
    Document d = base;
    apply_override(d, sp.key + "=" + format_double(sp.value(i)));
    scenarios.push_back(load_scenario(d));
  }
  std::vector<SweepRow> rows(sp.n);
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr err;
  auto worker = [&] {
    for (std::size_t i = next++; i < sp.n; i = next++) {
      try {
        RunInfo ri = info;
        ri.overrides.push_back(sp.key + "=" + format_double(sp.value(i)));
        char name[32];
        std::snprintf(name, sizeof name, "point_%04zu", i);
        rows[i] = {sp.value(i), run_command(cmd, scenarios[i], dir / name, ri).report};
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < std::min<unsigned>(workers, static_cast<unsigned>(sp.n)); ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);

  std::ofstream out(dir / "sweep.csv");
  if (!out) throw std::runtime_error("cannot write sweep table");
  out << "# param=" << sp.key << " command=" << cmd << '\n';
  out << "value";
  for (const auto& [k, v] : rows.front().report) out << ',' << k;
  out << '\n';
  for (const auto& row : rows) {
    out << format_double(row.value);
    for (const auto& [k, v] : rows.front().report) {
      const auto x = lookup(row.report, k);
      out << ',' << (x ? format_double(*x) : std::string("nan"));
    }
    out << '\n';
  }
  return rows;
}

}  // namespace twobody
