#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace leakaudit {

// One audit result. Unit cells (aggregate == false) hold one subject/seed
// run; aggregate cells summarize all unit cells sharing the same key.
struct ReportCell {
  std::string task;
  std::string template_name;
  std::string split;
  std::string band = "full";
  std::string variant; // e.g. loss kind for retrieval
  std::string metric = "accuracy";
  int subject = -1;
  bool aggregate = false;
  std::optional<double> accuracy_pct;
  std::optional<double> chance_pct;
  std::optional<double> sem_pct;
  std::optional<double> p_value;
  std::optional<double> p_bonferroni;
  std::size_t n_test = 0;
  std::size_t n_units = 1;
  std::uint64_t seed = 0;
  std::string status = "ok"; // ok | skipped | unavailable | error
  std::string note;

  bool operator==(const ReportCell&) const = default;
};

struct ReportMeta {
  std::string version;
  std::string config_hash;
  std::vector<std::uint64_t> seeds;
  std::string timestamp;

  bool operator==(const ReportMeta&) const = default;
};

struct AuditReport {
  ReportMeta meta;
  std::vector<ReportCell> cells;

  bool operator==(const AuditReport&) const = default;
};

// 64-bit FNV-1a as 16 hex digits.
std::string fnv1a_hex(std::string_view data);

// Aggregation key: every identifying field except subject and seed.
std::string cell_key(const ReportCell& cell);

// Drops existing aggregate cells and appends one per key: mean accuracy,
// SEM over units, one-sided t-test against chance (null when fewer than two
// units or zero variance, with a note), and Bonferroni over all aggregates
// that have a p-value.
void finalize(AuditReport& report);

// Union of unit cells and seeds, re-aggregated.
AuditReport merge(const AuditReport& a, const AuditReport& b);

std::string to_json(const AuditReport& report, bool include_timestamp = true);
AuditReport report_from_json(std::string_view text);
void save_report(const AuditReport& report, const std::filesystem::path& path);
AuditReport load_report(const std::filesystem::path& path);

struct LeakageWarning {
  std::string task;
  std::string template_name;
  std::string band;
  std::string variant;
  std::string held_out_split;
  double lso_pct = 0.0;
  double held_out_pct = 0.0;
};

// Aggregate leave_samples_out results that beat their domain-held-out
// counterpart (TLC-EEG vs TLC-EEG-woDO, or the same task under
// leave_domains_out / domain_kfold) by more than threshold points.
std::vector<LeakageWarning> leakage_warnings(const AuditReport& report, double threshold_pct = 10.0);

std::string significance_stars(std::optional<double> p);
std::string summarize(const AuditReport& report, double threshold_pct = 10.0);

// Plot-ready table: rows x columns of mean (and optional SEM) values.
struct Estimate {
  double mean = 0.0;
  std::optional<double> sem;

  bool operator==(const Estimate&) const = default;
};

struct Grid {
  std::string name;
  std::vector<std::string> rows;
  std::vector<std::string> columns;
  std::vector<std::vector<std::optional<Estimate>>> values; // [row][column]

  bool operator==(const Grid&) const = default;
};

// Header "row,<col>,<col>_sem,..."; numbers printed with 17 significant
// digits, '-' for missing entries.
void write_grid_csv(const Grid& grid, std::ostream& os);
Grid read_grid_csv(std::istream& is, std::string name = {});
void save_grid_csv(const Grid& grid, const std::filesystem::path& path);
Grid load_grid_csv(const std::filesystem::path& path);

// Grids shaped like the paper's result tables, built from aggregate cells.
Grid table1_grid(const AuditReport& report);
Grid zero_shot_grid(const AuditReport& report);
Grid retrieval_grid(const AuditReport& report);
Grid subjects_grid(const AuditReport& report);
// One grid per task present in band-audit cells.
std::vector<Grid> band_grids(const AuditReport& report);

// All non-empty grids above.
std::vector<Grid> all_grids(const AuditReport& report);

} // namespace leakaudit
