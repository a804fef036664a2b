#include "leakaudit/cli/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace leakaudit::cli;

namespace {

struct CommonFlags {
  std::string config;
  std::string preset;
  std::string out;
  std::vector<std::uint64_t> seeds;
  int jobs = 0;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--preset", f.preset, "table1, table5, bands, zeroshot, retrieval or lrtc")
      ->check(CLI::IsMember(preset_names()));
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--seed", f.seeds, "seed (repeatable)")->take_all();
  cmd->add_option("--jobs", f.jobs, "worker threads")->check(CLI::PositiveNumber);
}

RunConfig load(const CommonFlags& f) {
  LoadOptions o;
  o.preset = f.preset;
  o.config_path = f.config;
  o.seeds = f.seeds;
  if (!f.out.empty()) o.out = f.out;
  if (f.jobs > 0) o.jobs = f.jobs;
  return load_run_config(o);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal-autocorrelation leakage audit for block-design biosignal decoding"};
  app.require_subcommand(1);

  CommonFlags synth_f, reorg_f, audit_f, lrtc_f;
  auto* synth = app.add_subcommand("synth", "write surrogate recordings");
  add_common(synth, synth_f);
  auto* reorg = app.add_subcommand("reorganize", "cut recordings into labeled datasets");
  add_common(reorg, reorg_f);
  auto* audit = app.add_subcommand("audit", "run the audit grid and write report.json and CSV tables");
  add_common(audit, audit_f);
  auto* lrtc = app.add_subcommand("lrtc", "envelope autocorrelation map with FDR mask");
  add_common(lrtc, lrtc_f);

  std::vector<std::string> report_files;
  std::string report_out;
  double threshold = 10.0;
  auto* report = app.add_subcommand("report", "summarize and merge report files");
  report->add_option("reports", report_files, "report JSON files")->required()->check(CLI::ExistingFile);
  report->add_option("--out", report_out, "write the merged report and tables here");
  report->add_option("--threshold", threshold, "leakage warning threshold in accuracy points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth) cmd_synth(load(synth_f), std::cout);
    if (*reorg) cmd_reorganize(load(reorg_f), std::cout);
    if (*audit) cmd_audit(load(audit_f), std::cout);
    if (*lrtc) cmd_lrtc(load(lrtc_f), std::cout);
    if (*report) cmd_report({report_files.begin(), report_files.end()}, threshold, report_out, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return 0;
}
