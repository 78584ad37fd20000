#pragma once

#include <string>
#include <vector>

#include "qcrb/adaptive.hpp"

namespace qcrb {

/// Writes the study table CSV: one row per n (ascending) with columns
///   n, trials, trace_mse, n_trace_mse, mc_stderr, c_bound, sld_bound, n_cn_bound
/// (the last column empty when absent). Values carry 17 significant digits
/// so a reparse recovers them bit-exactly.
void emit_study_table(const std::vector<MseReport>& reports, const std::string& path);

/// Same content as the file, returned as a string (used for byte-exact
/// reproducibility checks).
std::string render_study_table(const std::vector<MseReport>& reports);

/// Entry point behind the qcrb binary: parses argv-style arguments
/// (subcommand, config file, overrides), runs the requested command, writes
/// artifacts and prints a human summary. Returns the process exit code:
/// 0 success, 2 configuration error, 3 numerical/domain error.
int run_main(const std::vector<std::string>& args);

} // namespace qcrb
