#pragma once

#include "leakaudit/design.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace leakaudit {

enum class SplitStrategy { leave_samples_out, leave_domains_out, leave_subjects_out, zero_shot, domain_kfold };
enum class ValidationMode { samples, subjects };
enum class ZeroShotMode { first_six, random };

std::string to_string(SplitStrategy s);
SplitStrategy split_strategy_from_string(const std::string& name);
std::string to_string(ValidationMode m);
std::string to_string(ZeroShotMode m);
ZeroShotMode zero_shot_mode_from_string(const std::string& name);

// Index lists are sorted ascending. For multi-subject plans the indices are
// pooled: subject k's sample i has index subject_offsets()[k] + i.
struct SplitPlan {
  SplitStrategy strategy = SplitStrategy::leave_samples_out;
  std::optional<ValidationMode> validation;
  std::optional<ZeroShotMode> zero_shot_mode;
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
  std::vector<int> test_domains;
  std::vector<int> train_subjects;
  std::vector<int> val_subjects;
  std::vector<int> test_subjects;
  std::uint64_t seed = 0;
  int fold_id = 0;

  bool operator==(const SplitPlan&) const = default;
};

struct SplitRatios {
  int train = 8;
  int val = 1;
  int test = 1;
};

// Stratified per domain: each domain is shuffled independently and cut so
// that val and test get floor(n * r / sum) samples; the remainder is train.
SplitPlan leave_samples_out(const LabeledDataset& dataset, SplitRatios ratios, std::uint64_t seed);

// One domain per class is held out per fold; the folds walk each class's
// shuffled domain list round-robin. The rest is split 9:1 into train/val.
std::vector<SplitPlan> leave_domains_out(const LabeledDataset& dataset, std::uint64_t seed);

// Domains are shuffled and dealt into k folds regardless of class; used
// where every class owns a single domain.
std::vector<SplitPlan> domain_kfold(const LabeledDataset& dataset, int k, std::uint64_t seed);

// Fold f tests subject f. Validation either pools the remaining subjects'
// samples 9:1 or holds out subject (f + 1) mod S.
std::vector<SplitPlan> leave_subjects_out(std::span<const LabeledDataset> datasets, ValidationMode validation,
                                          std::uint64_t seed);

// Requires a cvpr_like dataset. Test classes are the first presented ones
// (first_six) or a seeded random subset; the rest is split 9:1.
SplitPlan zero_shot_split(const LabeledDataset& dataset, ZeroShotMode mode, int n_test_classes, std::uint64_t seed);

std::vector<std::size_t> subject_offsets(std::span<const LabeledDataset> datasets);

std::string serialize(const SplitPlan& plan);
SplitPlan parse_split_plan(const std::string& text);

} // namespace leakaudit
