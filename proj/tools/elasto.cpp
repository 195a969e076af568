#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "elasto/cli/commands.hpp"

namespace {

const char* kind_of(const std::exception& e) {
  using namespace elasto;
  if (dynamic_cast<const ConfigError*>(&e)) return "config";
  if (dynamic_cast<const FormatError*>(&e)) return "format";
  if (dynamic_cast<const IoError*>(&e)) return "io";
  if (dynamic_cast<const InvariantError*>(&e)) return "invariant";
  if (dynamic_cast<const DomainError*>(&e)) return "domain";
  if (dynamic_cast<const NumericError*>(&e)) return "numeric";
  return "internal";
}

// Errors are reported on one line: "elasto: error: <kind>: <message>".
int fail(const char* kind, std::string msg) {
  for (char& ch : msg)
    if (ch == '\n' || ch == '\r') ch = ' ';
  std::cerr << "elasto: error: " << kind << ": " << msg << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace elasto::cli;
  CLI::App app{"Ultrasound elastography: phantoms, displacement estimation, strain and quality metrics"};
  app.require_subcommand(1);

  std::string config;
  Overrides ov;
  using Command = std::string (*)(const RunConfig&);
  Command run = nullptr;

  auto common = [&](CLI::App* sub, Command fn) {
    sub->add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", ov.out, "output directory (overrides \"output\")");
    sub->add_option("--seed", ov.seed, "random seed (overrides \"seed\")");
    sub->callback([&run, fn] { run = fn; });
  };
  auto* sim = app.add_subcommand("simulate", "render a phantom pair: I1.rfe, I2.rfe, truth.dsp, truth.str");
  common(sim, cmd_simulate);
  auto* est = app.add_subcommand("estimate", "DP prior and refinement: prior.dsp, refined.dsp, trace.csv");
  common(est, cmd_estimate);
  est->add_option("--pre", ov.pre, "pre-compression frame (I1.rfe)");
  est->add_option("--post", ov.post, "post-compression frame (I2.rfe)");
  auto* str = app.add_subcommand("strain", "axial strain of a displacement field: strain.str, strain.pgm");
  common(str, cmd_strain);
  str->add_option("--field", ov.field, "displacement field (.dsp)");
  auto* ev = app.add_subcommand("evaluate", "quality metrics: report.json, esf.csv, cnr_hist.csv");
  common(ev, cmd_evaluate);
  ev->add_option("--strain", ov.strain, "estimated strain (.str)");
  ev->add_option("--truth", ov.truth, "ground-truth strain (.str)");
  auto* rep = app.add_subcommand("report", "compare evaluations: comparison.csv, ttests.csv");
  common(rep, cmd_report);
  rep->add_option("--report", ov.reports, "name=path of a report.json (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fail("usage", e.what());
    return 2;
  }

  try {
    auto cfg = apply(load_config(config), ov);
    std::cout << run(cfg);
  } catch (const std::exception& e) {
    return fail(kind_of(e), e.what());
  }
  return 0;
}
