// twobody: scenario-driven front end for the two-body reflection library.
//
//   twobody <command> scenario.toml [--set section.key=value]... [--out DIR]
//   twobody sweep --param section.key=a:b:n [--command CMD] scenario.toml
//   twobody regress [preset...]
//
// Output goes to DIR/<prefix>/<command>; DIR defaults to $TWOBODY_OUT, then
// ./out. Exit status: 0 ok, 1 unexpected failure, 2 schema error, 3 physics
// precondition violated, 4 regression mismatch.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <twobody/commands.hpp>
#include <twobody/presets.hpp>

namespace {

std::filesystem::path default_out() {
  if (const char* env = std::getenv("TWOBODY_OUT"); env && *env) return env;
  return "out";
}

int report_error(const std::exception& e, const char* kind, int code) {
  std::cerr << "twobody: " << kind << ": " << e.what() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-body quantum reflection: wavegroups, observables and checks"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::vector<std::string> overrides;
  std::string out_root = default_out().string();

  std::string selected;
  for (const auto& name : twobody::command_names()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " command");
    sub->add_option("scenario", scenario_path, "scenario file")->required();
    sub->add_option("--set", overrides, "override section.key=value")->take_all();
    sub->add_option("--out", out_root, "output root directory");
    sub->callback([&selected, name] { selected = name; });
  }

  std::string sweep_param, sweep_command;
  unsigned workers = 0;
  auto* sweep = app.add_subcommand("sweep", "run a command over a parameter range");
  sweep->add_option("--param", sweep_param, "section.key=a:b:n")->required();
  sweep->add_option("--command", sweep_command, "command per point (default: slab for slab scenarios, else wavegroup)");
  sweep->add_option("--workers", workers, "worker threads (default: hardware concurrency)");
  sweep->add_option("scenario", scenario_path, "scenario file")->required();
  sweep->add_option("--set", overrides, "override section.key=value")->take_all();
  sweep->add_option("--out", out_root, "output root directory");
  sweep->callback([&selected] { selected = "sweep"; });

  std::vector<std::string> presets;
  auto* regress = app.add_subcommand("regress", "run presets against their expected observables");
  regress->add_option("presets", presets, "preset ids (default: all)");
  regress->add_option("--out", out_root, "output root directory");
  regress->callback([&selected] { selected = "regress"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const std::filesystem::path root(out_root);
    if (selected == "regress") {
      if (presets.empty()) presets = twobody::list_presets();
      bool all_ok = true;
      for (const auto& id : presets) {
        const auto rep = twobody::regression_run(id, root / "regress");
        for (const auto& c : rep.checks) {
          std::printf("%s %-28s %-6s value=%.6g expected=%.6g %s%s\n", c.ok ? "PASS" : "FAIL", c.observable.c_str(),
                      id.c_str(), c.value, c.expected, c.check.c_str(),
                      c.message.empty() ? "" : (" (" + c.message + ")").c_str());
        }
        all_ok = all_ok && rep.ok();
      }
      return all_ok ? 0 : 4;
    }

    twobody::Document doc = twobody::load_document(scenario_path);
    for (const auto& o : overrides) twobody::apply_override(doc, o);
    const twobody::Scenario sc = twobody::load_scenario(doc);

    if (selected == "sweep") {
      const auto sp = twobody::parse_sweep_param(sweep_param);
      const std::string cmd =
          !sweep_command.empty() ? sweep_command : (sc.kind == twobody::ScenarioKind::Slab ? "slab" : "wavegroup");
      const auto dir = root / sc.prefix / "sweep";
      const auto rows = twobody::run_sweep(cmd, doc, sp, dir, {cmd, scenario_path, overrides}, workers);
      std::printf("%zu points written to %s\n", rows.size(), (dir / "sweep.csv").string().c_str());
      return 0;
    }

    const auto dir = root / sc.prefix / selected;
    const auto res = twobody::run_command(selected, sc, dir, {selected, scenario_path, overrides});
    for (const auto& [k, v] : res.report) std::printf("%s %.17g\n", k.c_str(), v);
    return 0;
  } catch (const twobody::SchemaError& e) {
    return report_error(e, "schema error", 2);
  } catch (const twobody::AliasError& e) {
    return report_error(e, "oracle resolution", 3);
  } catch (const twobody::PhysicsError& e) {
    return report_error(e, "precondition violated", 3);
  } catch (const std::exception& e) {
    return report_error(e, "error", 1);
  }
}
