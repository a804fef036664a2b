#pragma once

#include "leakaudit/design.hpp"
#include "leakaudit/surrogate.hpp"

#include <cstdint>
#include <vector>

namespace fixtures {

// Small custom design: `samples_per_domain` one-second samples per domain at
// 16 Hz, rest gaps of 1-3 s, a single channel of white noise.
inline leakaudit::DesignTemplate custom_design(std::vector<int> class_map, int samples_per_domain,
                                               double fs = 16.0, int channels = 1) {
  leakaudit::DesignTemplate d;
  d.kind = leakaudit::TemplateKind::custom;
  d.n_domains = static_cast<int>(class_map.size());
  d.domain_duration_s = samples_per_domain;
  d.rest = {1.0, 3.0};
  d.sample_length_s = 1.0;
  d.target_fs = fs;
  d.channel_policy = {leakaudit::ChannelPolicy::Kind::keep_all, 0};
  int n_classes = 0;
  for (int c : class_map) n_classes = std::max(n_classes, c + 1);
  d.n_classes = n_classes;
  d.class_map = std::move(class_map);
  (void)channels;
  return d;
}

inline leakaudit::LabeledDataset custom_dataset(const leakaudit::DesignTemplate& d, int subject, std::uint64_t seed,
                                                int channels = 1) {
  leakaudit::SurrogateSpec s;
  s.kind = leakaudit::SurrogateKind::white;
  s.fs = d.target_fs;
  s.duration_s = std::ceil(leakaudit::required_duration(d));
  s.channels = channels;
  s.seed = seed;
  return leakaudit::reorganize(leakaudit::synth(s), d, subject, seed);
}

} // namespace fixtures
