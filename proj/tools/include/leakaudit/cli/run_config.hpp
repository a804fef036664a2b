#pragma once

#include "leakaudit/design.hpp"
#include "leakaudit/dsp.hpp"
#include "leakaudit/experiments.hpp"
#include "leakaudit/lrtc.hpp"
#include "leakaudit/nn/losses.hpp"
#include "leakaudit/nn/trainer.hpp"
#include "leakaudit/surrogate.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace leakaudit::cli {

// Everything a command needs, parsed from a single JSON document. Either a
// surrogate or a list of recordings (one per subject) supplies the signal.
struct RunConfig {
  std::optional<SurrogateSpec> surrogate;
  bool explicit_duration = false; // synth uses surrogate duration/fs as given
  std::optional<int> channels;     // surrogate channels; per-template default when unset
  std::vector<std::filesystem::path> recordings;
  std::vector<TemplateKind> templates;
  std::map<std::string, std::vector<int>> class_maps; // template name -> class map
  double strength = 1.0;
  SignatureScale signature;
  int subjects = 1;
  std::vector<TaskKind> tasks;
  std::vector<std::string> splits;
  std::vector<Band> bands;
  std::vector<nn::LossKind> losses;
  int kfold = 10;
  nn::TrainConfig train;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path out = "leakaudit-out";
  int jobs = 1;
  double leakage_threshold = 10.0;
  WaveletSpec wavelet = WaveletSpec::defaults();
  LrtcOptions lrtc;
};

// Split names accepted in "splits".
const std::vector<std::string>& known_splits();

// Throws ParameterError on unknown keys, bad values or violated invariants
// (missing files, no task, no seeds).
RunConfig parse_run_config(const std::string& json_text);
void validate(const RunConfig& config);

// JSON text of a preset: table1, table5, bands, zeroshot, retrieval, lrtc.
std::string preset_json(const std::string& name);
const std::vector<std::string>& preset_names();

// Applies `patch` (RFC 7386 merge patch) to `base`; both are JSON text.
std::string merge_json(const std::string& base, const std::string& patch);

struct LoadOptions {
  std::string preset;                       // empty: none
  std::filesystem::path config_path;        // empty: none
  std::vector<std::uint64_t> seeds;         // non-empty overrides
  std::optional<std::filesystem::path> out;
  std::optional<int> jobs;
};

// Preset, then the config file as a merge patch, then command-line
// overrides. Relative recording paths resolve against the config file's
// directory. The result is validated.
RunConfig load_run_config(const LoadOptions& options);

// Canonical JSON of the fields that influence results (no out, no jobs).
std::string canonical_json(const RunConfig& config);

// Design for a template with the config's class-map override applied.
DesignTemplate design_for(const RunConfig& config, TemplateKind kind, std::uint64_t seed);

// Surrogate channels used for a template when the config leaves them unset.
int default_source_channels(TemplateKind kind);

} // namespace leakaudit::cli
