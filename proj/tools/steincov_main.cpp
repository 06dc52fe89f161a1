#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "steincov/pipeline.hpp"
#include "steincov/report.hpp"
#include "steincov/scenario.hpp"
#include "steincov/svg.hpp"

namespace {

int run_command(const std::string& scenario_path, const std::string& out_override, bool svg, bool trace) {
  using namespace steincov;
  Scenario sc;
  try {
    sc = parse_scenario(scenario_path);
  } catch (const ScenarioError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  if (!out_override.empty()) sc.output_dir = out_override;
  for (const auto& w : sc.warnings) std::cerr << "warning: " << w << "\n";

  const RunReport rep = run_pipeline(sc);
  try {
    for (const auto& p : emit_report(rep, sc.output_dir)) std::cout << "wrote " << p.string() << "\n";
    if (svg) {
      for (const auto& p : emit_svg(rep, sc.gmm(), sc.workspace, sc.output_dir)) {
        std::cout << "wrote " << p.string() << "\n";
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  if (trace && rep.trace) std::cout << trace_csv(*rep.trace);
  std::cout << metrics_csv(rep);
  bool all_ok = true;
  for (const auto& m : rep.methods) {
    if (!m.ok) {
      std::cerr << "method " << to_string(m.method) << " failed: " << m.failure << "\n";
      all_ok = false;
    }
  }
  return all_ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sensor deployment by regulated Stein variational transport"};
  app.require_subcommand(1);

  std::string scenario;
  std::string out;
  bool svg = false;
  bool trace = false;
  auto* run = app.add_subcommand("run", "Run every method listed in a scenario file");
  run->add_option("scenario", scenario, "Scenario JSON file")->required();
  run->add_option("--out", out, "Output directory (overrides the scenario's output_dir)");
  run->add_flag("--svg", svg, "Also write one SVG figure per method");
  run->add_flag("--trace", trace, "Print the per-iteration SVGD trace to stdout");

  CLI11_PARSE(app, argc, argv);
  return run_command(scenario, out, svg, trace);
}
