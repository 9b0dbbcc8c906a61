#pragma once

#include <string>

#include "config.hpp"
#include "experiments.hpp"

namespace vrgrad::cli {

// Rate certificate plus the matching closed-form recommendation and the
// reference step sizes found in earlier analyses, as a JSON document.
std::string cmd_rate(const KeyValueConfig& cfg);

// Closed-form step-size / update-frequency / total-cost report as JSON.
// When curve = true, also returns the cost-vs-frequency grid as CSV.
struct TuneOutput {
  std::string report_json;
  std::string curve_csv;  // empty unless requested
};
TuneOutput cmd_tune(const KeyValueConfig& cfg);

// Multi-seed solver run. Writes <out> (CSV) and <out>.manifest, which is a
// config file reproducing the CSV byte for byte.
struct SolveOutput {
  std::string csv;
  std::string manifest;
};
SolveOutput cmd_solve(const KeyValueConfig& cfg);
void cmd_solve_to_files(const KeyValueConfig& cfg, const std::string& out_path);

// Canned experiment bundles. Writes one or more CSV files plus a manifest
// into the output directory and returns the file names written.
std::vector<std::string> cmd_reproduce(const std::string& name, const KeyValueConfig& cfg,
                                       const std::string& out_dir);

int thread_count(const KeyValueConfig& cfg);

}  // namespace vrgrad::cli
