#pragma once

#include "leakaudit/cli/run_config.hpp"
#include "leakaudit/report.hpp"

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace leakaudit::cli {

// Writes one raw recording per (template, seed, subject), or per (seed,
// subject) when the surrogate carries its own duration and rate.
std::vector<std::filesystem::path> cmd_synth(const RunConfig& config, std::ostream& log);

// Reorganizes every recording under every template into a dataset directory.
std::vector<std::filesystem::path> cmd_reorganize(const RunConfig& config, std::ostream& log);

// Runs the audit grid; writes report.json and the table CSVs to config.out.
AuditReport run_audit(const RunConfig& config, std::ostream& log);
AuditReport cmd_audit(const RunConfig& config, std::ostream& log);

// LRTC map of the recordings (or of the surrogate when none are given).
LrtcResult cmd_lrtc(const RunConfig& config, std::ostream& log);

// Merges the reports, prints the summary and, when `out` is non-empty,
// writes the merged report and its grids there.
AuditReport cmd_report(const std::vector<std::filesystem::path>& reports, double threshold_pct,
                       const std::filesystem::path& out, std::ostream& os);

// 0 ok, 2 config, 3 I/O, 4 numerical.
int exit_code_for(const std::exception& e);

} // namespace leakaudit::cli
