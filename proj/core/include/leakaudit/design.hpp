#pragma once

#include "leakaudit/series.hpp"
#include "leakaudit/surrogate.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace leakaudit {

enum class TemplateKind { cvpr_like, deap_like, kul_like, custom };

std::string to_string(TemplateKind kind);
TemplateKind template_kind_from_string(const std::string& name);

struct ChannelPolicy {
  enum class Kind { keep_all, first_k, replicate_to };
  Kind kind = Kind::keep_all;
  int n = 0;
};

struct RestRange {
  double min_s = 0.0;
  double max_s = 0.0;
};

// Block-design recipe. Domains are laid out left to right starting at
// t = 0, separated by rest gaps drawn uniformly from `rest`.
struct DesignTemplate {
  TemplateKind kind = TemplateKind::custom;
  int n_domains = 1;
  double domain_duration_s = 1.0;
  RestRange rest;
  double sample_length_s = 1.0;
  double target_fs = 128.0;
  ChannelPolicy channel_policy;
  int n_classes = 1;
  std::vector<int> class_map; // domain id -> class id

  int samples_per_domain() const;
  Eigen::Index sample_timepoints() const;
};

void validate(const DesignTemplate& design);

// cvpr_like: identity over 40 classes. deap_like: 40 domains onto 4 classes,
// 10 each, seeded permutation. kul_like: alternating 0/1 over 8 domains.
std::vector<int> default_class_map(TemplateKind kind, std::uint64_t seed);

// Canonical template with its default class map. Throws for custom.
DesignTemplate make_template(TemplateKind kind, std::uint64_t seed = 0);

// n_domains * domain_duration_s + (n_domains - 1) * max rest.
double required_duration(const DesignTemplate& design);

// Domain windows in seconds for the given layout seed.
std::vector<TimeWindow> layout_domains(const DesignTemplate& design, std::uint64_t seed);

// Source channel index for each output channel.
std::vector<int> channel_map(const ChannelPolicy& policy, int source_channels);

struct SampleRecord {
  int subject_id = 0;
  int domain_id = 0;
  int class_id = 0;
  double t_start = 0.0;      // seconds in the source recording
  Eigen::Index offset = 0;   // first sample index in the source series
};

// Samples are views into a shared, immutable source series; channel policy
// is applied through a channel index map when a sample is materialized.
class LabeledDataset {
public:
  LabeledDataset(std::shared_ptr<const MultichannelSeries> source, std::vector<int> channel_map,
                 std::vector<SampleRecord> samples, DesignTemplate design, int subject_id,
                 std::string provenance);

  std::size_t size() const noexcept { return samples_.size(); }
  const SampleRecord& sample(std::size_t i) const { return samples_.at(i); }
  const std::vector<SampleRecord>& samples() const noexcept { return samples_; }
  const DesignTemplate& design() const noexcept { return design_; }
  int subject_id() const noexcept { return subject_id_; }
  const std::string& provenance() const noexcept { return provenance_; }
  const MultichannelSeries& source() const noexcept { return *source_; }
  const std::vector<int>& channel_index() const noexcept { return channel_map_; }

  int channels() const noexcept { return static_cast<int>(channel_map_.size()); }
  Eigen::Index timepoints() const noexcept { return timepoints_; }
  double fs() const noexcept { return source_->fs; }

  SignalMatrix sample_data(std::size_t i) const;
  // Writes sample i flattened channel-major (index c * timepoints + t).
  void copy_sample(std::size_t i, std::span<double> out) const;

  // Same sample records over a replacement source (e.g. a band-passed copy).
  LabeledDataset with_source(MultichannelSeries replacement) const;

  // Domain ids sorted by their first sample's t_start.
  std::vector<int> domain_order() const;

private:
  std::shared_ptr<const MultichannelSeries> source_;
  std::vector<int> channel_map_;
  std::vector<SampleRecord> samples_;
  DesignTemplate design_;
  int subject_id_ = 0;
  std::string provenance_;
  Eigen::Index timepoints_ = 0;
};

// Resamples to the template rate, applies the channel policy, lays out the
// domains and slices each into contiguous samples. Rest gaps are excluded.
LabeledDataset reorganize(const MultichannelSeries& series, const DesignTemplate& design, int subject_id,
                          std::uint64_t seed);

// Directory with manifest.json and samples.rec (samples concatenated in
// time; offsets listed in the manifest).
void save_dataset(const LabeledDataset& dataset, const std::filesystem::path& dir);
LabeledDataset load_dataset(const std::filesystem::path& dir);

} // namespace leakaudit
