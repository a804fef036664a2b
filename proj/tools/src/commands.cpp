#include "leakaudit/cli/commands.hpp"

#include "leakaudit/errors.hpp"
#include "leakaudit/random.hpp"
#include "leakaudit/recording_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <mutex>
#include <ostream>
#include <set>

#ifndef LEAKAUDIT_VERSION
#define LEAKAUDIT_VERSION "0.0.0"
#endif

namespace leakaudit::cli {

namespace {

constexpr std::uint64_t kRecordingLayout = 31;
constexpr std::uint64_t kBank = 32;
constexpr std::uint64_t kPlainSynth = 33;

bool has(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

bool has_task(const RunConfig& c, TaskKind k) {
  return std::find(c.tasks.begin(), c.tasks.end(), k) != c.tasks.end();
}

int n_subjects(const RunConfig& c) {
  return c.recordings.empty() ? c.subjects : static_cast<int>(c.recordings.size());
}

SurrogateSpec surrogate_for(const RunConfig& c, TemplateKind kind) {
  if (!c.surrogate) throw ParameterError("config: a surrogate or recordings are required");
  SurrogateSpec s = *c.surrogate;
  s.channels = c.channels.value_or(default_source_channels(kind));
  return s;
}

LabeledDataset make_dataset(const RunConfig& c, TemplateKind kind, std::uint64_t seed, int subject) {
  const DesignTemplate design = design_for(c, kind, seed);
  if (!c.recordings.empty()) {
    const auto series = load_recording(c.recordings.at(static_cast<std::size_t>(subject)));
    return reorganize(series, design, subject, derive_seed(seed, kRecordingLayout, static_cast<std::uint64_t>(subject)));
  }
  return build_surrogate_dataset(surrogate_for(c, kind), design, c.strength, c.signature, subject, seed);
}

ReportCell error_cell(TaskKind task, TemplateKind tpl, const std::string& split, const std::string& variant,
                      const std::string& metric, int subject, std::uint64_t seed, const std::exception& e) {
  ReportCell c;
  c.task = to_string(task);
  c.template_name = to_string(tpl);
  c.split = split;
  c.variant = variant;
  c.metric = metric;
  c.subject = subject;
  c.seed = seed;
  c.status = "error";
  c.note = e.what();
  return c;
}

std::vector<ZeroShotMode> zero_shot_modes(const RunConfig& c) {
  std::vector<ZeroShotMode> modes;
  if (has(c.splits, "zero_shot:first_six")) modes.push_back(ZeroShotMode::first_six);
  if (has(c.splits, "zero_shot:random")) modes.push_back(ZeroShotMode::random);
  if (modes.empty()) modes = {ZeroShotMode::first_six, ZeroShotMode::random};
  return modes;
}

std::vector<std::string> retrieval_splits(const RunConfig& c) {
  std::vector<std::string> out;
  for (const char* s : {"leave_samples_out", "leave_domains_out", "domain_kfold"}) {
    if (has(c.splits, s)) out.emplace_back(s);
  }
  if (out.empty()) out = {"leave_samples_out", "leave_domains_out"};
  return out;
}

// Whole-domain plans; datasets whose classes own a single domain fall back
// to k-fold over domains.
std::vector<SplitPlan> domain_plans(const LabeledDataset& ds, const std::string& split, int kfold,
                                    std::uint64_t seed) {
  const int k = std::min(kfold, ds.design().n_domains);
  if (split == "domain_kfold") return domain_kfold(ds, k, seed);
  std::vector<int> per_class(static_cast<std::size_t>(ds.design().n_classes), 0);
  for (int cls : ds.design().class_map) ++per_class[static_cast<std::size_t>(cls)];
  if (*std::min_element(per_class.begin(), per_class.end()) < 2) return domain_kfold(ds, k, seed);
  return leave_domains_out(ds, seed);
}

std::vector<ReportCell> unit_cells(const RunConfig& c, const LabeledDataset& ds, std::uint64_t seed) {
  nn::TrainConfig tc = c.train;
  tc.seed = seed;
  const TemplateKind tpl = ds.design().kind;
  std::vector<ReportCell> cells;

  std::vector<TaskKind> core;
  for (auto k : c.tasks) {
    if (k == TaskKind::dlc || k == TaskKind::tlc_df || k == TaskKind::tlc_eeg || k == TaskKind::tlc_eeg_wodo) {
      core.push_back(k);
    }
  }
  if (!core.empty()) {
    auto r = run_band_audit(ds, c.bands, core, tc, seed);
    cells.insert(cells.end(), r.begin(), r.end());
  }

  if (has_task(c, TaskKind::zero_shot)) {
    for (auto mode : zero_shot_modes(c)) {
      const std::string split = "zero_shot:" + to_string(mode);
      if (tpl != TemplateKind::cvpr_like) {
        ReportCell s = error_cell(TaskKind::zero_shot, tpl, split, "", "acc_7th", ds.subject_id(), seed,
                                  ParameterError("zero-shot needs the cvpr_like design"));
        s.status = "skipped";
        cells.push_back(s);
        continue;
      }
      try {
        auto z = run_zero_shot(ds, mode, tc, seed);
        cells.insert(cells.end(), z.cells.begin(), z.cells.end());
      } catch (const std::exception& e) {
        if (!dynamic_cast<const ParameterError*>(&e) && !dynamic_cast<const NumericalError*>(&e)) throw;
        cells.push_back(error_cell(TaskKind::zero_shot, tpl, split, "", "acc_7th", ds.subject_id(), seed, e));
      }
    }
  }

  if (has_task(c, TaskKind::retrieval)) {
    const EmbeddingBank bank(ds.design().n_classes, kEmbeddingDim, derive_seed(seed, kBank));
    std::vector<nn::LossKind> losses = c.losses;
    if (losses.empty()) losses = {nn::LossKind::cosine, nn::LossKind::infonce};
    for (auto loss : losses) {
      for (const auto& split : retrieval_splits(c)) {
        try {
          std::vector<SplitPlan> plans;
          if (split == "leave_samples_out") {
            plans.push_back(leave_samples_out(ds, SplitRatios{}, seed));
          } else {
            plans = domain_plans(ds, split, c.kfold, seed);
          }
          auto r = run_retrieval(ds, plans, loss, tc, bank);
          cells.insert(cells.end(), r.cells.begin(), r.cells.end());
        } catch (const std::exception& e) {
          if (!dynamic_cast<const ParameterError*>(&e) && !dynamic_cast<const NumericalError*>(&e)) throw;
          cells.push_back(error_cell(TaskKind::retrieval, tpl, split, nn::to_string(loss), "top1", ds.subject_id(),
                                     seed, e));
        }
      }
    }
  }
  return cells;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_outputs(const AuditReport& report, const std::filesystem::path& out) {
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory " + out.string() + ": " + ec.message());
  save_report(report, out / "report.json");
  for (const auto& grid : all_grids(report)) save_grid_csv(grid, out / (grid.name + ".csv"));
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

} // namespace

std::vector<std::filesystem::path> cmd_synth(const RunConfig& config, std::ostream& log) {
  if (!config.surrogate) throw ParameterError("synth: the config has no surrogate");
  ensure_dir(config.out);
  std::vector<std::filesystem::path> written;
  auto emit = [&](const MultichannelSeries& series, const std::string& name) {
    const auto path = config.out / name;
    save_recording(series, path);
    log << "wrote " << path.string() << ": " << series.channels() << " channels, " << series.duration_s() << " s at "
        << series.fs << " Hz\n";
    written.push_back(path);
  };
  for (auto seed : config.seeds) {
    for (int subject = 0; subject < config.subjects; ++subject) {
      if (config.explicit_duration || config.templates.empty()) {
        if (!config.explicit_duration) throw ParameterError("synth: give surrogate duration_s/fs or a template");
        SurrogateSpec spec = *config.surrogate;
        spec.seed = derive_seed(seed, kPlainSynth, static_cast<std::uint64_t>(subject));
        emit(synth(spec), "surrogate_seed" + std::to_string(seed) + "_sub" + std::to_string(subject) + ".rec");
        continue;
      }
      for (auto kind : config.templates) {
        const auto series = synth_surrogate_recording(surrogate_for(config, kind), design_for(config, kind, seed),
                                                      config.strength, config.signature, subject, seed);
        emit(series, to_string(kind) + "_seed" + std::to_string(seed) + "_sub" + std::to_string(subject) + ".rec");
      }
    }
  }
  return written;
}

std::vector<std::filesystem::path> cmd_reorganize(const RunConfig& config, std::ostream& log) {
  if (config.recordings.empty()) throw ParameterError("reorganize: the config lists no recordings");
  if (config.templates.empty()) throw ParameterError("reorganize: the config lists no templates");
  std::vector<std::filesystem::path> written;
  for (std::size_t i = 0; i < config.recordings.size(); ++i) {
    const auto series = load_recording(config.recordings[i]);
    for (auto kind : config.templates) {
      for (auto seed : config.seeds) {
        const int subject = static_cast<int>(i);
        const auto ds = reorganize(series, design_for(config, kind, seed), subject,
                                   derive_seed(seed, kRecordingLayout, static_cast<std::uint64_t>(subject)));
        const auto dir = config.out / (config.recordings[i].stem().string() + "_" + to_string(kind) + "_seed" +
                                       std::to_string(seed));
        save_dataset(ds, dir);
        log << "wrote " << dir.string() << ": " << ds.size() << " samples of " << ds.channels() << " x "
            << ds.timepoints() << "\n";
        written.push_back(dir);
      }
    }
  }
  return written;
}

AuditReport run_audit(const RunConfig& config, std::ostream& log) {
  if (config.tasks.empty()) throw ParameterError("config: at least one task is required");
  if (config.templates.empty()) throw ParameterError("config: at least one template is required");
  if (config.recordings.empty() && !config.surrogate) throw ParameterError("config: a surrogate or recordings are required");
  const int subjects = n_subjects(config);

  struct Unit {
    TemplateKind kind;
    std::uint64_t seed;
    int subject;
  };
  std::vector<Unit> units;
  for (auto kind : config.templates) {
    for (auto seed : config.seeds) {
      for (int s = 0; s < subjects; ++s) units.push_back({kind, seed, s});
    }
  }
  std::mutex log_mutex;
  std::vector<std::vector<ReportCell>> unit_results(units.size());
  const bool per_unit = std::any_of(config.tasks.begin(), config.tasks.end(), [](TaskKind k) {
    return k != TaskKind::tlc_eeg;
  }) || !std::any_of(config.splits.begin(), config.splits.end(), [](const std::string& s) {
    return s.starts_with("leave_subjects_out");
  }) || has(config.splits, "leave_samples_out");
  if (per_unit) {
    parallel_for(units.size(), config.jobs, [&](std::size_t i) {
      const Unit& u = units[i];
      const auto ds = make_dataset(config, u.kind, u.seed, u.subject);
      unit_results[i] = unit_cells(config, ds, u.seed);
      std::lock_guard lock(log_mutex);
      log << "[" << to_string(u.kind) << " seed " << u.seed << " subject " << u.subject << "] " << unit_results[i].size()
          << " cells\n";
    });
  }

  struct Pooled {
    TemplateKind kind;
    std::uint64_t seed;
    ValidationMode validation;
    Band band;
  };
  std::vector<Pooled> pooled;
  if (has_task(config, TaskKind::tlc_eeg)) {
    for (auto kind : config.templates) {
      for (auto seed : config.seeds) {
        for (const auto& band : config.bands) {
          if (has(config.splits, "leave_subjects_out:samples")) pooled.push_back({kind, seed, ValidationMode::samples, band});
          if (has(config.splits, "leave_subjects_out:subjects")) pooled.push_back({kind, seed, ValidationMode::subjects, band});
        }
      }
    }
  }
  std::vector<std::vector<ReportCell>> pooled_results(pooled.size());
  parallel_for(pooled.size(), config.jobs, [&](std::size_t i) {
    const Pooled& p = pooled[i];
    const std::string split = "leave_subjects_out:" + to_string(p.validation);
    try {
      std::vector<LabeledDataset> datasets;
      for (int s = 0; s < subjects; ++s) datasets.push_back(make_dataset(config, p.kind, p.seed, s));
      nn::TrainConfig tc = config.train;
      tc.seed = p.seed;
      pooled_results[i] = run_leave_subjects_out(datasets, p.validation, p.band, tc, p.seed);
    } catch (const std::exception& e) {
      if (!dynamic_cast<const ParameterError*>(&e) && !dynamic_cast<const NumericalError*>(&e)) throw;
      ReportCell c = error_cell(TaskKind::tlc_eeg, p.kind, split, "", "accuracy", -1, p.seed, e);
      c.band = to_string(p.band.name);
      pooled_results[i] = {c};
    }
    std::lock_guard lock(log_mutex);
    log << "[" << to_string(p.kind) << " seed " << p.seed << " " << split << " " << to_string(p.band.name) << "] "
        << pooled_results[i].size() << " cells\n";
  });

  AuditReport report;
  report.meta.version = LEAKAUDIT_VERSION;
  report.meta.config_hash = fnv1a_hex(canonical_json(config));
  report.meta.seeds = config.seeds;
  report.meta.timestamp = utc_timestamp();
  for (auto& r : unit_results) report.cells.insert(report.cells.end(), r.begin(), r.end());
  for (auto& r : pooled_results) report.cells.insert(report.cells.end(), r.begin(), r.end());
  finalize(report);
  return report;
}

AuditReport cmd_audit(const RunConfig& config, std::ostream& log) {
  AuditReport report = run_audit(config, log);
  write_outputs(report, config.out);
  log << summarize(report, config.leakage_threshold);
  return report;
}

LrtcResult cmd_lrtc(const RunConfig& config, std::ostream& log) {
  std::vector<LrtcSubject> subjects;
  if (!config.recordings.empty()) {
    for (std::size_t i = 0; i < config.recordings.size(); ++i) {
      subjects.push_back({static_cast<int>(i), {load_recording(config.recordings[i])}});
    }
  } else {
    if (!config.surrogate || !config.explicit_duration) {
      throw ParameterError("lrtc: give recordings or a surrogate with duration_s and fs");
    }
    int id = 0;
    for (auto seed : config.seeds) {
      for (int s = 0; s < config.subjects; ++s) {
        SurrogateSpec spec = *config.surrogate;
        spec.seed = derive_seed(seed, kPlainSynth, static_cast<std::uint64_t>(s));
        subjects.push_back({id++, {synth(spec)}});
      }
    }
  }
  LrtcOptions options = config.lrtc;
  options.jobs = config.jobs;
  LrtcResult result = lrtc_map(subjects, config.wavelet, options);
  attach_significance(result, options.q);
  ensure_dir(config.out);
  write_lrtc_outputs(result, config.out, "lrtc");
  for (const auto& n : result.notices) log << "notice: " << n << "\n";
  log << "lrtc: " << result.grand.values.rows() << " frequencies x " << result.grand.values.cols() << " lags over "
      << result.grand.n_units << " units; " << result.grand.reject.count() << " significant cells at q=" << options.q
      << "\n";
  return result;
}

AuditReport cmd_report(const std::vector<std::filesystem::path>& reports, double threshold_pct,
                       const std::filesystem::path& out, std::ostream& os) {
  if (reports.empty()) throw ParameterError("report: no report files given");
  AuditReport merged = load_report(reports.front());
  for (std::size_t i = 1; i < reports.size(); ++i) merged = merge(merged, load_report(reports[i]));
  os << summarize(merged, threshold_pct);
  if (!out.empty()) write_outputs(merged, out);
  return merged;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ParameterError*>(&e)) return 2;
  if (dynamic_cast<const nlohmann::json::exception*>(&e)) return 2;
  if (dynamic_cast<const IoError*>(&e)) return 3;
  if (dynamic_cast<const NumericalError*>(&e)) return 4;
  return 1;
}

} // namespace leakaudit::cli
