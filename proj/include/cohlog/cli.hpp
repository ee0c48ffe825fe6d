#pragma once

// Command-line front end: job configuration, the per-command drivers, and
// the equivalence-classification chart.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cohlog/prover.hpp"
#include "cohlog/report.hpp"

namespace cohlog {

struct JobConfig {
  std::string command;
  std::vector<std::string> inputs;            // positional file arguments
  std::map<std::string, std::string> named;   // --goal, --from, --to, ...
  Budget budget;
  int depth = 3;
  int maxSize = 3;
  ReportFormat format = ReportFormat::Text;
  std::string outPath;                        // empty: stdout
};

// Runs one job; returns the process exit code (0 proved/true, 1 failed,
// 2 unknown, 3 input error). Report text goes to `out` and, when outPath is
// set, to that file.
int runJob(const JobConfig& job, std::string& out);

// argv-level entry used by tools/cohlog_main.cpp.
int runCli(int argc, const char* const* argv);

}  // namespace cohlog
