#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hslab/cli/artifacts.hpp"
#include "hslab/cli/config.hpp"

namespace hslab::cli {

enum ExitCode : int { kExitOk = 0, kExitAssertion = 1, kExitConfig = 2 };

struct Assertion {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct RunResult {
  std::string experiment;
  std::vector<Assertion> assertions;
  std::vector<std::string> notes;
  ArtifactSet artifacts{""};

  bool pass() const;
  int exit_code() const { return pass() ? kExitOk : kExitAssertion; }
};

// Runs the experiment named by the config and stages its artifacts without
// touching the filesystem. ConfigError signals a schema problem; other
// hslab::Error values mean the experiment could not run.
RunResult execute(const Config& config, unsigned jobs = 1);

// "PASS name: detail" per assertion, then the notes.
void print_summary(std::ostream& out, const RunResult& result);

struct RunOptions {
  unsigned jobs = 1;
  std::string out_dir;  // overrides the config's output field
};

// Loads, executes, prints and commits. Returns 0, 1 or 2; diagnostics go to err.
int run_command(const std::string& config_path, const RunOptions& options, std::ostream& out, std::ostream& err);

}  // namespace hslab::cli
