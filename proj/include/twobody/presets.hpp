#pragma once

// Checked-in presets and their expected-observable sidecars.
//
// A preset `<id>.toml` pairs with `<id>.expected`:
//
//   command wavegroup
//   # observable        expected   check      basis
//   visibility_x1@0     0.5        gt         published
//   sd_x1@1             =sd_x2@0   rel:0.05   computed
//
// `check` is one of rel:<tol>, abs:<tol>, lt, gt. An expected value starting
// with '=' names another observable of the same run. `basis` records where
// the expected value comes from: published (stated in the source text),
// computed (produced by an independent calculation, then frozen) or
// identity (follows from a structural argument).

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "scenario.hpp"

namespace twobody {

struct Expectation {
  std::string observable;
  std::string expected;  ///< number or =observable
  std::string check;     ///< rel:<tol>, abs:<tol>, lt, gt
  std::string basis;
  int line = 0;
};

struct Sidecar {
  std::string command;
  std::vector<Expectation> items;
};

inline Sidecar parse_sidecar(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("missing sidecar " + path.string());
  Sidecar sc;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto body = std::string(detail::trim(detail::strip_comment(line)));
    if (body.empty()) continue;
    std::istringstream ls(body);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    const std::string at = path.filename().string() + ": line " + std::to_string(n) + ": ";
    if (tok[0] == "command") {
      if (tok.size() != 2) throw SchemaError(at + "expected 'command <name>'");
      sc.command = tok[1];
      continue;
    }
    if (tok.size() != 4) throw SchemaError(at + "expected 'observable expected check basis'");
    if (tok[3] != "published" && tok[3] != "computed" && tok[3] != "identity")
      throw SchemaError(at + "basis must be published, computed or identity");
    const std::string& c = tok[2];
    if (!(c == "lt" || c == "gt" || c.rfind("rel:", 0) == 0 || c.rfind("abs:", 0) == 0))
      throw SchemaError(at + "unknown check '" + c + "'");
    sc.items.push_back({tok[0], tok[1], tok[2], tok[3], n});
  }
  if (sc.command.empty()) throw SchemaError(path.string() + ": no command line");
  return sc;
}

struct CheckResult {
  std::string observable;
  double value = 0.0;
  double expected = 0.0;
  std::string check;
  bool ok = false;
  std::string message;
};

struct RegressionReport {
  std::string preset;
  std::vector<CheckResult> checks;
  bool ok() const {
    for (const auto& c : checks)
      if (!c.ok) return false;
    return !checks.empty();
  }
};

inline CheckResult evaluate_expectation(const Expectation& e, const Report& rep) {
  CheckResult r;
  r.observable = e.observable;
  r.check = e.check;
  const auto v = lookup(rep, e.observable);
  if (!v) {
    r.message = "observable not reported";
    return r;
  }
  r.value = *v;
  if (!e.expected.empty() && e.expected[0] == '=') {
    const auto x = lookup(rep, e.expected.substr(1));
    if (!x) {
      r.message = "reference " + e.expected.substr(1) + " not reported";
      return r;
    }
    r.expected = *x;
  } else {
    const auto x = detail::parse_number(e.expected);
    if (!x) {
      r.message = "bad expected value";
      return r;
    }
    r.expected = *x;
  }
  if (e.check == "lt") r.ok = r.value < r.expected;
  else if (e.check == "gt") r.ok = r.value > r.expected;
  else {
    const double tol = *detail::parse_number(e.check.substr(4));
    const double err = std::abs(r.value - r.expected);
    r.ok = e.check[0] == 'r' ? err <= tol * std::abs(r.expected) : err <= tol;
  }
  r.ok = r.ok && std::isfinite(r.value);
  return r;
}

inline fs::path preset_dir() {
#ifdef TWOBODY_PRESET_DIR
  return TWOBODY_PRESET_DIR;
#else
  return "presets";
#endif
}

/// Ids of every checked-in preset (files with a .toml extension).
inline std::vector<std::string> list_presets(const fs::path& dir = preset_dir()) {
  std::vector<std::string> ids;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".toml") ids.push_back(e.path().stem().string());
  std::sort(ids.begin(), ids.end());
  return ids;
}

/// Runs a preset's command into `out` and compares against its sidecar.
inline RegressionReport regression_run(const std::string& id, const fs::path& out,
                                       const fs::path& dir = preset_dir()) {
  const fs::path toml = dir / (id + ".toml");
  if (!fs::exists(toml)) throw SchemaError("unknown preset '" + id + "'");
  const Sidecar side = parse_sidecar(dir / (id + ".expected"));
  const Scenario sc = load_scenario(toml);
  const RunResult res = run_command(side.command, sc, out / id, {side.command, toml.string(), {}});
  RegressionReport rep;
  rep.preset = id;
  for (const auto& e : side.items) rep.checks.push_back(evaluate_expectation(e, res.report));
  return rep;
}

}  // namespace twobody
