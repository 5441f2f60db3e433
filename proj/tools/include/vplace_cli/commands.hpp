#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "vplace_cli/run_config.hpp"

namespace vplace::cli {

/// Writes <out>/stream.csv and <out>/manifest.json.
void cmd_synth(const RunConfig& config, std::ostream& log);

/// Reads the input stream (config.input, else <out>/stream.csv) and writes
/// curve.csv, d2_series.csv and fractal_summary.json.
void cmd_fractal(const RunConfig& config, std::ostream& log);

/// Reads the input stream like cmd_fractal, runs every configured algorithm
/// plus OPT and writes rewards_<algo>.csv per run and summary.json.
void cmd_simulate(const RunConfig& config, std::ostream& log);

/// Merges summary.json files (or directories holding one) into
/// <out>/report.csv. With no sources, uses <out>/summary.json.
void cmd_report(const RunConfig& config, const std::vector<std::filesystem::path>& sources, std::ostream& log);

/// Full command line, argv[0] excluded. Returns the process exit status.
/// Failures print one JSON object on one line to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vplace::cli
