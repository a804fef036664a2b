#pragma once

#include "leakaudit/design.hpp"
#include "leakaudit/dsp.hpp"
#include "leakaudit/nn/simple_cnn.hpp"
#include "leakaudit/nn/trainer.hpp"
#include "leakaudit/report.hpp"
#include "leakaudit/splits.hpp"
#include "leakaudit/surrogate.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace leakaudit {

enum class TaskKind { dlc, tlc_df, tlc_eeg, tlc_eeg_wodo, zero_shot, retrieval };

// "DLC", "TLC-DF", "TLC-EEG", "TLC-EEG-woDO", "ZERO-SHOT", "RETRIEVAL"
std::string to_string(TaskKind kind);
TaskKind task_kind_from_string(const std::string& name);

// 100 / n_labels.
double chance_pct(std::size_t n_labels);

// Seeded class-level target embeddings standing in for image features.
class EmbeddingBank {
public:
  EmbeddingBank(int n_classes, int dim, std::uint64_t seed);

  const nn::Matrix& vectors() const noexcept { return vectors_; }
  int n_classes() const noexcept { return static_cast<int>(vectors_.rows()); }
  int dim() const noexcept { return static_cast<int>(vectors_.cols()); }
  std::uint64_t seed() const noexcept { return seed_; }

private:
  nn::Matrix vectors_;
  std::uint64_t seed_;
};

inline constexpr int kEmbeddingDim = 768;

// The recording behind build_surrogate_dataset: synthesized at the template
// rate with one signature per domain planted inside the laid-out windows.
MultichannelSeries synth_surrogate_recording(const SurrogateSpec& base, const DesignTemplate& design, double strength,
                                             const SignatureScale& scale, int subject_id, std::uint64_t seed);

// Layout seed shared by the two functions above.
std::uint64_t surrogate_layout_seed(std::uint64_t seed, int subject_id);

// Synthesizes a surrogate directly at the template rate, plants one
// signature per domain at the given strength inside the laid-out domain
// windows and reorganizes it. Everything derives from `seed`.
LabeledDataset build_surrogate_dataset(const SurrogateSpec& base, const DesignTemplate& design, double strength,
                                       const SignatureScale& scale, int subject_id, std::uint64_t seed);

// Same sample records over a band-passed source. Throws ParameterError if
// the band is not available at the dataset rate.
LabeledDataset apply_band(const LabeledDataset& dataset, const Band& band);

// Feeds dataset samples to the trainer; targets are class ids or domain ids.
nn::TrainData dataset_inputs(const LabeledDataset& dataset, nn::Targets targets);
std::vector<int> domain_labels(const LabeledDataset& dataset);
std::vector<int> class_labels(const LabeledDataset& dataset);

std::string split_label(const SplitPlan& plan);

struct DlcOutcome {
  ReportCell cell;
  std::shared_ptr<const LabeledDataset> data; // band-filtered input the model saw
  std::shared_ptr<const nn::SimpleCnn> model;
  nn::ModelParams params;
  SplitPlan split;
};

// Domain label classification with n_outputs = n_domains.
DlcOutcome run_dlc(const LabeledDataset& dataset, const SplitPlan& split, const Band& band,
                   const nn::TrainConfig& config);

// Class labels decoded by mlp2 from the frozen DLC model's pooled features,
// on the DLC split. Skipped when class and domain coincide.
ReportCell run_tlc_df(const DlcOutcome* upstream, const nn::TrainConfig& config);

ReportCell run_tlc_eeg(const LabeledDataset& dataset, const SplitPlan& split, const Band& band,
                       const nn::TrainConfig& config);

// Mean test accuracy over domain-held-out folds.
ReportCell run_tlc_eeg_wodo(const LabeledDataset& dataset, std::span<const SplitPlan> folds, const Band& band,
                            const nn::TrainConfig& config);

struct ZeroShotOutcome {
  std::optional<double> acc_near_pct; // random mode only
  double acc_7th_pct = 0.0;
  double acc_7th_chance_pct = 0.0;
  std::size_t n_test = 0;
  std::vector<ReportCell> cells;
};

ZeroShotOutcome run_zero_shot(const LabeledDataset& dataset, ZeroShotMode mode, const nn::TrainConfig& config,
                              std::uint64_t split_seed);

struct RetrievalOutcome {
  double top1_pct = 0.0, top5_pct = 0.0, rank_acc_pct = 0.0;
  double top1_chance = 0.0, top5_chance = 0.0, rank_chance = 50.0;
  std::size_t n_test = 0;
  std::size_t n_candidates = 0;
  std::vector<ReportCell> cells;
};

// Trains the CNN to emit each sample's class embedding. Test samples are
// ranked against the classes present in the test partition (all classes
// under leave_samples_out; only the held-out ones when whole domains are
// held out). Several plans (folds) are pooled over their test samples.
RetrievalOutcome run_retrieval(const LabeledDataset& dataset, std::span<const SplitPlan> plans, nn::LossKind loss,
                               const nn::TrainConfig& config, const EmbeddingBank& bank);

// Pooled cross-subject TLC-EEG; cells carry train, val and test accuracy.
std::vector<ReportCell> run_leave_subjects_out(std::span<const LabeledDataset> subjects, ValidationMode validation,
                                               const Band& band, const nn::TrainConfig& config, std::uint64_t split_seed);

// DLC, TLC-DF, TLC-EEG and TLC-EEG-woDO (whichever are requested) on one
// band with leave_samples_out / leave_domains_out plans drawn from
// split_seed. Failures become cells with status "error"; tasks that do not
// apply to the design become "skipped".
std::vector<ReportCell> run_tasks(const LabeledDataset& dataset, const Band& band, std::span<const TaskKind> tasks,
                                  const nn::TrainConfig& config, std::uint64_t split_seed);

// Runs the tasks once per band; unavailable bands become cells
// with status "unavailable".
std::vector<ReportCell> run_band_audit(const LabeledDataset& dataset, std::span<const Band> bands,
                                       std::span<const TaskKind> tasks, const nn::TrainConfig& config,
                                       std::uint64_t split_seed);

struct SweepPoint {
  double strength = 0.0;
  std::vector<double> accuracy_pct; // one per seed
  double mean_pct = 0.0;
  double sem_pct = 0.0;
  double chance_pct = 0.0;
};

// For each strength and seed: synthesize, inject, reorganize and run the
// task under leave_samples_out. Strengths must be ascending in [0, 1].
std::vector<SweepPoint> sweep_domain_strength(const SurrogateSpec& base, const DesignTemplate& design,
                                              std::span<const double> strengths, TaskKind task,
                                              const nn::TrainConfig& config, const SignatureScale& scale,
                                              std::span<const std::uint64_t> seeds, int jobs = 1);

// Runs fn(0..n-1) on up to `jobs` threads; results must be written by index
// so that output order never depends on scheduling. The first exception is
// rethrown after all workers finish.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

} // namespace leakaudit
