// conelab command-line driver.
//
//   conelab <subcommand> --scenario FILE [--out DIR] [--threads N] [--emit-plot-script]
//   conelab <subcommand> --from-manifest out/manifest.json ...
//
// CONELAB_THREADS sets the default thread count.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "conelab/errors.hpp"
#include "conelab/runner.hpp"
#include "conelab/scenario.hpp"
#include "conelab/version.hpp"

namespace {

unsigned default_threads() {
  if (const char* env = std::getenv("CONELAB_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    std::cerr << "conelab: warning: ignoring CONELAB_THREADS='" << env << "'\n";
  }
  return 1;
}

struct CommonArgs {
  std::string scenario;
  std::string manifest;
  std::string out;
  unsigned threads = 1;
  bool plot = false;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-fold Dirac cone and flavour-oscillation lab"};
  app.set_version_flag("--version", std::string(conelab::kVersion));
  app.require_subcommand(1);

  CommonArgs args;
  args.threads = default_threads();
  const std::pair<const char*, const char*> commands[] = {
      {"bands", "Sample all bands on an nk x nk Brillouin-zone grid"},
      {"dirac", "Locate band touchings; report gap, Fermi velocities and chiral charge"},
      {"oscillate", "Flavour oscillation probabilities P(a -> b)(t)"},
      {"sweep-direction", "P(e -> mu) at a fixed time against the momentum direction"},
      {"sweep-delta", "T asymmetry against the CP phase"},
      {"dispersion", "Power-law exponent of the lowest ladder-mixing band"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    auto* scen = sub->add_option("--scenario", args.scenario, "Scenario file (.ini)")->check(CLI::ExistingFile);
    auto* man = sub->add_option("--from-manifest", args.manifest, "Re-run the scenario recorded in a manifest.json")
                    ->check(CLI::ExistingFile);
    scen->excludes(man);
    sub->add_option("--out", args.out, "Output directory (overrides [run] out)");
    sub->add_option("--threads", args.threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--emit-plot-script", args.plot, "Also write a gnuplot script");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  if (args.scenario.empty() && args.manifest.empty()) {
    std::cerr << "conelab: error[validation]: " << sub << ": give --scenario or --from-manifest\n";
    return 1;
  }

  std::optional<conelab::Scenario> scenario;
  try {
    scenario = args.manifest.empty() ? conelab::parse_scenario(args.scenario)
                                     : conelab::scenario_from_manifest(args.manifest);
  } catch (const conelab::Error& e) {
    std::cerr << "conelab: error[" << conelab::to_string(e.kind()) << "]: " << e.what() << '\n';
    return e.is_input_error() ? 1 : 2;
  }

  conelab::RunOptions options;
  if (!args.out.empty()) options.out_dir = args.out;
  options.threads = args.threads;
  options.emit_plot_script = args.plot;
  return conelab::run(sub, *scenario, options);
}
