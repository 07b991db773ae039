#pragma once

// Scenario files: a small TOML dialect (sections, `key = value`, numbers,
// quoted strings, booleans, flat numeric arrays, `#` comments), its mapping
// onto the physics scenarios, and the CSV/report formats shared with the
// plotting side.
//
// Every key read through a Reader is recorded together with where its value
// came from (file, override or default), so the run manifest lists every
// default that was applied. Keys never read are schema errors.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "slab.hpp"
#include "wavegroups.hpp"

namespace twobody {

/// Malformed or incomplete scenario file. The CLI exits with status 2.
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Document model

struct Value {
  std::variant<double, std::string, bool, std::vector<double>> data;
  int line = 0;        ///< 0 for values that came from an override
  bool override_ = false;
};

struct Document {
  std::map<std::string, std::map<std::string, Value>> sections;
  std::map<std::string, int> section_lines;

  bool has_section(const std::string& s) const { return sections.count(s) != 0; }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::string where(int line) {
  return line > 0 ? "line " + std::to_string(line) + ": " : "override: ";
}

inline std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  double x = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  if (*b == '+') ++b;
  auto [p, ec] = std::from_chars(b, e, x);
  if (ec != std::errc() || p != e) return std::nullopt;
  return x;
}

// Drops a trailing comment that is not inside a string.
inline std::string_view strip_comment(std::string_view s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

inline bool valid_name(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return true;
}

}  // namespace detail

inline Value parse_value(std::string_view text, int line) {
  using detail::trim;
  text = trim(text);
  Value v;
  v.line = line;
  if (text.empty()) throw SchemaError(detail::where(line) + "missing value");
  if (text.front() == '"') {
    if (text.size() < 2 || text.back() != '"')
      throw SchemaError(detail::where(line) + "unterminated string");
    const std::string_view body = text.substr(1, text.size() - 2);
    if (body.find('"') != std::string_view::npos)
      throw SchemaError(detail::where(line) + "embedded quote in string");
    v.data = std::string(body);
    return v;
  }
  if (text == "true" || text == "false") {
    v.data = (text == "true");
    return v;
  }
  if (text.front() == '[') {
    if (text.back() != ']') throw SchemaError(detail::where(line) + "unterminated array");
    std::vector<double> xs;
    std::string_view body = trim(text.substr(1, text.size() - 2));
    while (!body.empty()) {
      const auto comma = body.find(',');
      const auto item = trim(body.substr(0, comma));
      if (!item.empty()) {
        const auto x = detail::parse_number(item);
        if (!x) throw SchemaError(detail::where(line) + "array entry '" + std::string(item) +
                                  "' is not a number");
        xs.push_back(*x);
      }
      if (comma == std::string_view::npos) break;
      body = body.substr(comma + 1);
    }
    v.data = std::move(xs);
    return v;
  }
  const auto x = detail::parse_number(text);
  if (!x) throw SchemaError(detail::where(line) + "cannot parse value '" + std::string(text) + "'");
  v.data = *x;
  return v;
}

inline Document parse_document(std::string_view text) {
  Document doc;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string_view raw =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string_view line = detail::trim(detail::strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw SchemaError(detail::where(line_no) + "malformed section header");
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      if (!detail::valid_name(section))
        throw SchemaError(detail::where(line_no) + "bad section name '" + section + "'");
      if (doc.sections.count(section))
        throw SchemaError(detail::where(line_no) + "duplicate section [" + section + "]");
      doc.sections[section];
      doc.section_lines[section] = line_no;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw SchemaError(detail::where(line_no) + "expected key = value");
    const std::string key(detail::trim(line.substr(0, eq)));
    if (!detail::valid_name(key)) throw SchemaError(detail::where(line_no) + "bad key '" + key + "'");
    if (section.empty()) throw SchemaError(detail::where(line_no) + "key '" + key + "' outside any section");
    auto& sec = doc.sections[section];
    if (sec.count(key))
      throw SchemaError(detail::where(line_no) + "duplicate key '" + section + "." + key + "'");
    sec[key] = parse_value(line.substr(eq + 1), line_no);
  }
  return doc;
}

inline Document load_document(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot read scenario file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_document(ss.str());
}

/// Applies `section.key=value`; the section is created if absent.
inline void apply_override(Document& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string_view::npos || dot == std::string_view::npos || dot > eq)
    throw SchemaError("override '" + std::string(assignment) + "' is not section.key=value");
  const std::string section(detail::trim(assignment.substr(0, dot)));
  const std::string key(detail::trim(assignment.substr(dot + 1, eq - dot - 1)));
  if (!detail::valid_name(section) || !detail::valid_name(key))
    throw SchemaError("override '" + std::string(assignment) + "' has a bad name");
  Value v = parse_value(assignment.substr(eq + 1), 0);
  v.override_ = true;
  doc.sections[section][key] = std::move(v);
}

// ---------------------------------------------------------------------------
// Reader: typed access with unit suffixes, default tracking, leftovers check

/// SI unit suffix per physical dimension; empty in dimensionless mode.
enum class Dim { None, Mass, Velocity, Length, Time, Energy, Temperature };

inline const char* si_suffix(Dim d) {
  switch (d) {
    case Dim::None: return "";
    case Dim::Mass: return "_kg";
    case Dim::Velocity: return "_m_s";
    case Dim::Length: return "_m";
    case Dim::Time: return "_s";
    case Dim::Energy: return "_J";
    case Dim::Temperature: return "_K";
  }
  return "";
}

class Reader {
public:
  Reader(const Document& doc, bool si) : doc_(doc), si_(si) {}

  bool si() const { return si_; }
  bool has_section(const std::string& s) const { return doc_.has_section(s); }

  void require_section(const std::string& s) const {
    if (!doc_.has_section(s)) throw SchemaError("missing section [" + s + "]");
  }

  /// Full key name for a physical quantity in the current unit mode.
  std::string key_name(const std::string& base, Dim d) const {
    return si_ ? base + si_suffix(d) : base;
  }

  bool has(const std::string& section, const std::string& base, Dim d = Dim::None) const {
    const auto it = doc_.sections.find(section);
    return it != doc_.sections.end() && it->second.count(key_name(base, d)) != 0;
  }

  double number(const std::string& section, const std::string& base, Dim d = Dim::None) {
    const Value& v = fetch(section, key_name(base, d));
    const auto* x = std::get_if<double>(&v.data);
    if (!x) throw SchemaError(detail::where(v.line) + section + "." + key_name(base, d) + " must be a number");
    record(section, key_name(base, d), *x, v);
    return *x;
  }

  double number_or(const std::string& section, const std::string& base, Dim d, double fallback) {
    if (has(section, base, d)) return number(section, base, d);
    record_default(section, key_name(base, d), fallback);
    return fallback;
  }

  std::optional<double> optional_number(const std::string& section, const std::string& base,
                                        Dim d = Dim::None) {
    if (has(section, base, d)) return number(section, base, d);
    return std::nullopt;
  }

  long long integer(const std::string& section, const std::string& key) {
    const Value& v = fetch(section, key);
    const auto* x = std::get_if<double>(&v.data);
    if (!x || std::floor(*x) != *x || std::abs(*x) > 9.0e15)
      throw SchemaError(detail::where(v.line) + section + "." + key + " must be an integer");
    record(section, key, static_cast<long long>(*x), v);
    return static_cast<long long>(*x);
  }

  long long integer_or(const std::string& section, const std::string& key, long long fallback) {
    if (has(section, key)) return integer(section, key);
    record_default(section, key, fallback);
    return fallback;
  }

  std::string string(const std::string& section, const std::string& key) {
    const Value& v = fetch(section, key);
    const auto* s = std::get_if<std::string>(&v.data);
    if (!s) throw SchemaError(detail::where(v.line) + section + "." + key + " must be a string");
    record(section, key, *s, v);
    return *s;
  }

  std::string string_or(const std::string& section, const std::string& key, const std::string& fallback) {
    if (has(section, key)) return string(section, key);
    record_default(section, key, fallback);
    return fallback;
  }

  bool boolean_or(const std::string& section, const std::string& key, bool fallback) {
    if (!has(section, key)) {
      record_default(section, key, fallback);
      return fallback;
    }
    const Value& v = fetch(section, key);
    const auto* b = std::get_if<bool>(&v.data);
    if (!b) throw SchemaError(detail::where(v.line) + section + "." + key + " must be true or false");
    record(section, key, *b, v);
    return *b;
  }

  std::vector<double> numbers(const std::string& section, const std::string& base, Dim d = Dim::None) {
    const Value& v = fetch(section, key_name(base, d));
    if (const auto* xs = std::get_if<std::vector<double>>(&v.data)) {
      record(section, key_name(base, d), *xs, v);
      return *xs;
    }
    if (const auto* x = std::get_if<double>(&v.data)) {
      record(section, key_name(base, d), std::vector<double>{*x}, v);
      return {*x};
    }
    throw SchemaError(detail::where(v.line) + section + "." + key_name(base, d) +
                      " must be a number or array of numbers");
  }

  /// Throws on the first key that was present but never read.
  void reject_unknown() const {
    const Value* first = nullptr;
    std::string name;
    for (const auto& [sec, keys] : doc_.sections)
      for (const auto& [key, v] : keys) {
        if (used_.count(sec + "." + key)) continue;
        if (!first || (v.line > 0 && (first->line == 0 || v.line < first->line))) {
          first = &v;
          name = sec + "." + key;
        }
      }
    if (first) {
      std::string msg = detail::where(first->line) + "unknown key '" + name + "'";
      if (!si_ && name.find('_') != std::string::npos) msg += " (SI-suffixed keys need units.mode = \"si\")";
      throw SchemaError(msg);
    }
  }

  /// Resolved parameters with their origin, for the run manifest.
  const nlohmann::json& resolved() const { return resolved_; }

private:
  const Value& fetch(const std::string& section, const std::string& key) {
    require_section(section);
    const auto& sec = doc_.sections.at(section);
    const auto it = sec.find(key);
    if (it == sec.end()) throw SchemaError("missing key '" + section + "." + key + "'");
    used_[section + "." + key] = true;
    return it->second;
  }

  template <class T>
  void record(const std::string& section, const std::string& key, const T& x, const Value& v) {
    resolved_[section][key] = {{"value", x}, {"source", v.override_ ? "override" : "file"}};
  }

  template <class T>
  void record_default(const std::string& section, const std::string& key, const T& x) {
    resolved_[section][key] = {{"value", x}, {"source", "default"}};
  }

  const Document& doc_;
  bool si_;
  std::map<std::string, bool> used_;
  nlohmann::json resolved_ = nlohmann::json::object();
};

// ---------------------------------------------------------------------------
// Scenario

enum class ScenarioKind { Mirror, Slab, FiniteBarrier, FiniteWell, InfiniteWell };

inline const char* to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Mirror: return "mirror";
    case ScenarioKind::Slab: return "slab";
    case ScenarioKind::FiniteBarrier: return "finite_barrier";
    case ScenarioKind::FiniteWell: return "finite_well";
    case ScenarioKind::InfiniteWell: return "infinite_well";
  }
  return "?";
}

/// Optional observable settings from the [analysis] section.
struct AnalysisOptions {
  std::optional<double> visibility_x1_min, visibility_x1_max;  ///< particle-marginal window
  std::optional<double> slice_x1;         ///< x2 slice for maxima counting
  std::optional<double> band_x1_min, band_x1_max;  ///< x2 profile over an x1 band
  std::optional<double> fringe_x2;        ///< x1 slice for fringe spacing
  std::optional<double> fringe_x1_min, fringe_x1_max;  ///< part of that slice to measure
  double peak_floor = 0.05;               ///< maxima below this fraction of the peak are ignored
};

struct EstimatorOptions {
  std::optional<double> T;          ///< temperature
  std::optional<double> l_c;        ///< particle coherence length
  std::optional<double> m_star;     ///< probe mass
  std::optional<double> delta_x;    ///< superposition separation
  std::optional<double> t_R;        ///< thermal relaxation time
};

struct OracleOptions {
  double t0 = 0.0, t1 = 0.0, dt = 0.0;
};

struct AuditOptions {
  double x1_min = 0.0, x1_max = 0.0, x2_min = 0.0, x2_max = 0.0;
  double t = 0.0, dt = 0.0;
  std::size_t panels = 16;
};

struct Scenario {
  ScenarioKind kind = ScenarioKind::Mirror;
  WavegroupScenario wave;  ///< mirror, barrier and well systems
  SlabScenario slab;       ///< slab system
  GridSpec grid;
  std::vector<double> times;
  std::string prefix = "run";
  AnalysisOptions analysis;
  EstimatorOptions estimators;
  std::optional<OracleOptions> oracle;
  std::optional<AuditOptions> audit;
  nlohmann::json resolved;  ///< every parameter with its origin

  const Units& units() const { return kind == ScenarioKind::Slab ? slab.units : wave.units; }
  const BodySpec& particle() const { return kind == ScenarioKind::Slab ? slab.particle : wave.particle; }
  const BodySpec& reflector() const { return kind == ScenarioKind::Slab ? slab.slab : wave.reflector; }
};

namespace detail {

inline BodySpec read_body(Reader& r, const std::string& section) {
  BodySpec b;
  b.mass = r.number(section, "mass", Dim::Mass);
  b.v0 = r.number(section, "v0", Dim::Velocity);
  b.dv = r.number_or(section, "dv", Dim::Velocity, 0.0);
  return b;
}

inline std::optional<double> read_opt(Reader& r, const std::string& section, const std::string& base,
                                      Dim d) {
  return r.has_section(section) ? r.optional_number(section, base, d) : std::nullopt;
}

}  // namespace detail

/// Maps a parsed document onto a Scenario. Throws SchemaError for missing or
/// unknown keys and PhysicsError for violated preconditions.
inline Scenario load_scenario(const Document& doc) {
  for (const char* s : {"units", "particle", "reflector", "system", "spectrum", "grid", "times", "output"})
    if (!doc.has_section(s)) throw SchemaError(std::string("missing section [") + s + "]");

  // The unit mode decides which key names are valid, so read it first.
  std::string mode;
  {
    const auto& units = doc.sections.at("units");
    const auto it = units.find("mode");
    mode = (it != units.end() && std::holds_alternative<std::string>(it->second.data))
               ? std::get<std::string>(it->second.data)
               : "dimensionless";
  }
  if (mode != "si" && mode != "dimensionless")
    throw SchemaError("units.mode must be \"si\" or \"dimensionless\"");
  Reader r(doc, mode == "si");
  r.string_or("units", "mode", "dimensionless");
  const Units u = r.si() ? Units::si() : Units::dimensionless();

  Scenario sc;
  std::optional<double> derived_pe;
  const std::string kind = r.string("system", "kind");
  if (kind == "mirror") sc.kind = ScenarioKind::Mirror;
  else if (kind == "slab") sc.kind = ScenarioKind::Slab;
  else if (kind == "finite_barrier") sc.kind = ScenarioKind::FiniteBarrier;
  else if (kind == "finite_well") sc.kind = ScenarioKind::FiniteWell;
  else if (kind == "infinite_well") sc.kind = ScenarioKind::InfiniteWell;
  else
    throw SchemaError(detail::where(doc.sections.at("system").at("kind").line) + "unknown system kind '" +
                      kind + "'");

  const BodySpec particle = detail::read_body(r, "particle");
  BodySpec reflector = detail::read_body(r, "reflector");
  const std::optional<double> T = r.optional_number("reflector", "temperature", Dim::Temperature);
  if (T && r.has("reflector", "dv", Dim::Velocity))
    throw SchemaError("reflector.dv and reflector.temperature are mutually exclusive");

  QuadratureOptions q;
  q.nodes_particle = static_cast<std::size_t>(r.integer_or("spectrum", "nodes_particle", 64));
  q.nodes_reflector = static_cast<std::size_t>(r.integer_or("spectrum", "nodes_reflector", 64));
  q.span_sigmas = r.number_or("spectrum", "span_sigmas", Dim::None, 4.0);
  if (r.has("spectrum", "dephase_seed")) {
    const long long seed = r.integer("spectrum", "dephase_seed");
    if (seed < 0) throw SchemaError("spectrum.dephase_seed must be non-negative");
    q.dephase_seed = static_cast<std::uint64_t>(seed);
  }
  const std::string target = r.string_or("spectrum", "dephase", "both");
  if (target == "both") q.dephase = DephaseTarget::Both;
  else if (target == "particle") q.dephase = DephaseTarget::Particle;
  else if (target == "reflector") q.dephase = DephaseTarget::Reflector;
  else if (target == "none") q.dephase = DephaseTarget::None;
  else throw SchemaError("spectrum.dephase must be both, particle, reflector or none");
  if (q.nodes_particle < 1 || q.nodes_reflector < 1) throw SchemaError("spectrum node counts must be >= 1");

  if (sc.kind == ScenarioKind::Slab) {
    sc.slab.units = u;
    sc.slab.particle = particle;
    sc.slab.slab = reflector;
    sc.slab.T = T;
    sc.slab.D = r.number("system", "D", Dim::Length);
    sc.slab.r = r.number_or("system", "r", Dim::None, 0.01);
    sc.slab.quad = q;
  } else {
    if (T) reflector.dv = thermal_spread(u, reflector.mass, *T);
    WavegroupScenario& w = sc.wave;
    w.units = u;
    w.particle = particle;
    w.reflector = reflector;
    w.quad = q;
    switch (sc.kind) {
      case ScenarioKind::Mirror: w.system = SystemKind::Mirror; break;
      case ScenarioKind::FiniteBarrier: w.system = SystemKind::FiniteBarrier; break;
      case ScenarioKind::FiniteWell: w.system = SystemKind::FiniteWell; break;
      case ScenarioKind::InfiniteWell: w.system = SystemKind::InfiniteWell; break;
      case ScenarioKind::Slab: break;
    }
    if (sc.kind != ScenarioKind::Mirror) w.D = r.number("system", "D", Dim::Length);
    if (sc.kind == ScenarioKind::FiniteBarrier || sc.kind == ScenarioKind::FiniteWell) {
      // Either an explicit height or the ratio (KE_rel - PE)/|PE| at the
      // central velocities; the sign follows the system kind.
      const bool has_pe = r.has("system", "PE", Dim::Energy);
      const bool has_ratio = r.has("system", "pe_ratio");
      if (has_pe == has_ratio) throw SchemaError("system needs exactly one of PE and pe_ratio");
      if (has_pe) {
        w.PE = r.number("system", "PE", Dim::Energy);
      } else {
        const double ratio = r.number("system", "pe_ratio");
        const PartitionMap p = PartitionMap::make(u, particle.mass, reflector.mass, particle.v0, reflector.v0);
        if (sc.kind == ScenarioKind::FiniteBarrier) {
          if (!(ratio > 0.0)) throw PhysicsError("barrier pe_ratio must be positive");
          w.PE = p.E_rel / (1.0 + ratio);
        } else {
          if (!(ratio > 1.0)) throw PhysicsError("well pe_ratio must exceed 1");
          w.PE = -p.E_rel / (ratio - 1.0);
        }
        derived_pe = w.PE;
      }
      const std::string phase = r.string_or("system", "phase", "total");
      if (phase == "total") w.phase = BarrierPhase::Total;
      else if (phase == "kinetic_only") w.phase = BarrierPhase::KineticOnly;
      else throw SchemaError("system.phase must be total or kinetic_only");
    }
    if (sc.kind == ScenarioKind::InfiniteWell) {
      w.well_n0 = static_cast<int>(r.integer("system", "n0"));
      w.well_mode_width = r.number("system", "mode_width");
    }
    w.force_generic = r.boolean_or("system", "force_generic", false);
  }

  const double x1_min = r.number("grid", "x1_min", Dim::Length);
  const double x1_max = r.number("grid", "x1_max", Dim::Length);
  const long long nx1 = r.integer("grid", "nx1");
  const double x2_min = r.number("grid", "x2_min", Dim::Length);
  const double x2_max = r.number("grid", "x2_max", Dim::Length);
  const long long nx2 = r.integer("grid", "nx2");
  if (nx1 < 1 || nx2 < 1) throw SchemaError("grid sizes must be >= 1");
  sc.grid = {Axis(x1_min, x1_max, static_cast<std::size_t>(nx1)),
             Axis(x2_min, x2_max, static_cast<std::size_t>(nx2))};
  sc.grid.x1.validate();
  sc.grid.x2.validate();

  sc.times = r.numbers("times", "t", Dim::Time);
  if (sc.times.empty()) throw SchemaError("times.t must list at least one time");
  sc.prefix = r.string_or("output", "prefix", "run");
  for (char c : sc.prefix)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'))
      throw SchemaError("output.prefix may only contain letters, digits, '_' and '-'");

  AnalysisOptions& a = sc.analysis;
  a.visibility_x1_min = detail::read_opt(r, "analysis", "visibility_x1_min", Dim::Length);
  a.visibility_x1_max = detail::read_opt(r, "analysis", "visibility_x1_max", Dim::Length);
  a.slice_x1 = detail::read_opt(r, "analysis", "slice_x1", Dim::Length);
  a.band_x1_min = detail::read_opt(r, "analysis", "band_x1_min", Dim::Length);
  a.band_x1_max = detail::read_opt(r, "analysis", "band_x1_max", Dim::Length);
  a.fringe_x2 = detail::read_opt(r, "analysis", "fringe_x2", Dim::Length);
  a.fringe_x1_min = detail::read_opt(r, "analysis", "fringe_x1_min", Dim::Length);
  a.fringe_x1_max = detail::read_opt(r, "analysis", "fringe_x1_max", Dim::Length);
  if (r.has_section("analysis")) a.peak_floor = r.number_or("analysis", "peak_floor", Dim::None, 0.05);
  if (a.visibility_x1_min.has_value() != a.visibility_x1_max.has_value() ||
      a.band_x1_min.has_value() != a.band_x1_max.has_value() ||
      a.fringe_x1_min.has_value() != a.fringe_x1_max.has_value())
    throw SchemaError("analysis window bounds come in min/max pairs");

  EstimatorOptions& e = sc.estimators;
  e.T = detail::read_opt(r, "estimators", "temperature", Dim::Temperature);
  e.l_c = detail::read_opt(r, "estimators", "l_c", Dim::Length);
  e.m_star = detail::read_opt(r, "estimators", "m_star", Dim::Mass);
  e.delta_x = detail::read_opt(r, "estimators", "delta_x", Dim::Length);
  e.t_R = detail::read_opt(r, "estimators", "t_R", Dim::Time);

  if (r.has_section("oracle")) {
    OracleOptions o;
    o.t0 = r.number("oracle", "t0", Dim::Time);
    o.t1 = r.number("oracle", "t1", Dim::Time);
    o.dt = r.number("oracle", "dt", Dim::Time);
    sc.oracle = o;
  }
  if (r.has_section("audit")) {
    AuditOptions o;
    o.x1_min = r.number("audit", "x1_min", Dim::Length);
    o.x1_max = r.number("audit", "x1_max", Dim::Length);
    o.x2_min = r.number("audit", "x2_min", Dim::Length);
    o.x2_max = r.number("audit", "x2_max", Dim::Length);
    o.t = r.number("audit", "t", Dim::Time);
    o.dt = r.number("audit", "dt", Dim::Time);
    o.panels = static_cast<std::size_t>(r.integer_or("audit", "panels", 16));
    sc.audit = o;
  }

  r.reject_unknown();
  if (sc.kind == ScenarioKind::Slab) sc.slab.validate();
  else sc.wave.validate();
  sc.resolved = r.resolved();
  if (derived_pe) sc.resolved["system"]["PE"] = {{"value", *derived_pe}, {"source", "derived from pe_ratio"}};
  return sc;
}

inline Scenario load_scenario(const std::filesystem::path& path,
                              const std::vector<std::string>& overrides = {}) {
  Document doc = load_document(path);
  for (const auto& o : overrides) apply_override(doc, o);
  return load_scenario(doc);
}

// ---------------------------------------------------------------------------
// CSV snapshots

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Header `# t=.. x1_min=.. x1_max=.. nx1=.. x2_min=.. x2_max=.. nx2=..`, then
/// one row per x2 value with nx1 comma-separated PDF values.
inline void write_snapshot_csv(const std::filesystem::path& path, const GridSnapshot& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "# t=" << format_double(s.t) << " x1_min=" << format_double(s.x1.min)
      << " x1_max=" << format_double(s.x1.max) << " nx1=" << s.x1.n
      << " x2_min=" << format_double(s.x2.min) << " x2_max=" << format_double(s.x2.max)
      << " nx2=" << s.x2.n << '\n';
  for (const auto& w : s.warnings) out << "# warning: " << w << '\n';
  std::string row;
  for (std::size_t i2 = 0; i2 < s.x2.n; ++i2) {
    row.clear();
    for (std::size_t i1 = 0; i1 < s.x1.n; ++i1) {
      if (i1) row += ',';
      row += format_double(s.pdf[i2 * s.x1.n + i1]);
    }
    out << row << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline GridSnapshot read_snapshot_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string header;
  std::getline(in, header);
  if (header.rfind("# ", 0) != 0) throw SchemaError(path.string() + ": missing header line");
  std::map<std::string, std::string> kv;
  std::istringstream hs(header.substr(2));
  std::string tok;
  while (hs >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw SchemaError(path.string() + ": bad header field '" + tok + "'");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  auto field = [&](const char* k) {
    const auto it = kv.find(k);
    if (it == kv.end()) throw SchemaError(path.string() + ": header lacks " + k);
    const auto x = detail::parse_number(it->second);
    if (!x) throw SchemaError(path.string() + ": header field " + k + " is not a number");
    return *x;
  };
  GridSnapshot s;
  s.t = field("t");
  s.x1 = Axis(field("x1_min"), field("x1_max"), static_cast<std::size_t>(field("nx1")));
  s.x2 = Axis(field("x2_min"), field("x2_max"), static_cast<std::size_t>(field("nx2")));
  s.pdf.reserve(s.x1.n * s.x2.n);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("# warning: ", 0) == 0) {
      s.warnings.push_back(line.substr(11));
      continue;
    }
    if (line.empty()) continue;
    std::size_t count = 0, pos = 0;
    while (pos <= line.size()) {
      const auto comma = line.find(',', pos);
      const auto x = detail::parse_number(std::string_view(line).substr(
          pos, comma == std::string::npos ? std::string::npos : comma - pos));
      if (!x) throw SchemaError(path.string() + ": unparsable PDF value");
      s.pdf.push_back(*x);
      ++count;
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (count != s.x1.n) throw SchemaError(path.string() + ": row has wrong number of columns");
  }
  if (s.pdf.size() != s.x1.n * s.x2.n) throw SchemaError(path.string() + ": wrong number of rows");
  s.recompute_norm();
  return s;
}

// ---------------------------------------------------------------------------
// Observable reports: one `name value` pair per line, `#` comments.

using Report = std::vector<std::pair<std::string, double>>;

inline void write_report(const std::filesystem::path& path, const Report& rep) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "# observable value\n";
  for (const auto& [k, v] : rep) out << k << ' ' << format_double(v) << '\n';
}

inline Report read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  Report rep;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto body = detail::trim(detail::strip_comment(line));
    if (body.empty()) continue;
    std::istringstream ls{std::string(body)};
    std::string k, v;
    ls >> k >> v;
    const auto x = detail::parse_number(v);
    if (k.empty() || !x) throw SchemaError(path.string() + ": line " + std::to_string(n) + ": bad report entry");
    rep.emplace_back(k, *x);
  }
  return rep;
}

inline std::optional<double> lookup(const Report& rep, const std::string& name) {
  for (const auto& [k, v] : rep)
    if (k == name) return v;
  return std::nullopt;
}

}  // namespace twobody
