#include <CLI11.hpp>
#include <iostream>

#include "hslab/cli/artifacts.hpp"
#include "hslab/cli/experiments.hpp"
#include "hslab/cli/plot.hpp"

int main(int argc, char** argv) {
  using namespace hslab::cli;
  CLI::App app{"Kernel ridge regression laboratory over Hilbert scales"};
  app.set_version_flag("--version", std::string(kToolName) + " " + tool_version());
  app.require_subcommand(1);

  std::string config;
  RunOptions opts;
  auto* run = app.add_subcommand("run", "Run the experiment described by a YAML config");
  run->add_option("config", config, "Config file")->required();
  run->add_option("--jobs,-j", opts.jobs, "Worker threads")->check(CLI::Range(1u, 1024u));
  run->add_option("--out,-o", opts.out_dir, "Output directory (overrides the config)");

  std::string report, svg_out;
  auto* plot = app.add_subcommand("plot", "Render a rates report CSV as a log-log SVG chart");
  plot->add_option("report", report, "Report CSV written by `run`")->required();
  plot->add_option("--out,-o", svg_out, "SVG path (default: report path with .svg)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (*run) return run_command(config, opts, std::cout, std::cerr);
  try {
    const std::string written = plot_report(report, svg_out);
    std::cout << "wrote " << written << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}
