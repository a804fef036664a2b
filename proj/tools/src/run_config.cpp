#include "leakaudit/cli/run_config.hpp"

#include "leakaudit/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <set>

namespace leakaudit::cli {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ParameterError("config: " + where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.contains(key)) throw ParameterError("config: unknown key '" + key + "' in " + where);
  }
}

template <class T>
T get(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParameterError(std::string("config: bad value for '") + key + "'");
  }
}

template <class T>
std::vector<T> get_list(const json& j, const char* key) {
  if (!j.contains(key)) return {};
  const json& v = j.at(key);
  if (!v.is_array()) throw ParameterError(std::string("config: '") + key + "' must be a list");
  try {
    return v.get<std::vector<T>>();
  } catch (const json::exception&) {
    throw ParameterError(std::string("config: bad entry in '") + key + "'");
  }
}

SurrogateSpec parse_surrogate(const json& j, RunConfig& config) {
  check_keys(j, "surrogate", {"kind", "phi", "beta", "channels", "channel_mixing", "line_noise", "composite",
                              "modulated_tone", "duration_s", "fs"});
  SurrogateSpec spec;
  spec.kind = surrogate_kind_from_string(get<std::string>(j, "kind", "white"));
  spec.phi = get(j, "phi", spec.phi);
  spec.beta = get(j, "beta", spec.beta);
  if (j.contains("channels")) config.channels = get(j, "channels", 1);
  spec.channel_mixing = get(j, "channel_mixing", spec.channel_mixing);
  if (j.contains("line_noise") && !j.at("line_noise").is_null()) {
    const json& l = j.at("line_noise");
    check_keys(l, "surrogate.line_noise", {"f0", "amplitude", "amplitude_drift_scale"});
    LineNoiseSpec line;
    line.f0 = get(l, "f0", line.f0);
    line.amplitude = get(l, "amplitude", line.amplitude);
    line.amplitude_drift_scale = get(l, "amplitude_drift_scale", line.amplitude_drift_scale);
    spec.line_noise = line;
  }
  if (j.contains("composite")) {
    const json& c = j.at("composite");
    check_keys(c, "surrogate.composite", {"white", "powerlaw"});
    spec.composite.white = get(c, "white", spec.composite.white);
    spec.composite.powerlaw = get(c, "powerlaw", spec.composite.powerlaw);
  }
  if (j.contains("modulated_tone") && !j.at("modulated_tone").is_null()) {
    const json& m = j.at("modulated_tone");
    check_keys(m, "surrogate.modulated_tone", {"freq_hz", "amplitude", "depth", "tau_s"});
    ModulatedToneSpec tone;
    tone.freq_hz = get(m, "freq_hz", tone.freq_hz);
    tone.amplitude = get(m, "amplitude", tone.amplitude);
    tone.depth = get(m, "depth", tone.depth);
    tone.tau_s = get(m, "tau_s", tone.tau_s);
    spec.modulated_tone = tone;
  }
  if (j.contains("duration_s") || j.contains("fs")) {
    if (!j.contains("duration_s") || !j.contains("fs")) {
      throw ParameterError("config: surrogate duration_s and fs must be given together");
    }
    spec.duration_s = get(j, "duration_s", 0.0);
    spec.fs = get(j, "fs", 0.0);
    config.explicit_duration = true;
  }
  spec.channels = config.channels.value_or(1);
  return spec;
}

void parse_lrtc(const json& j, RunConfig& config) {
  check_keys(j, "lrtc", {"freqs_hz", "lags_s", "freq_lo_hz", "freq_hi_hz", "n_freqs", "lag_lo_s", "lag_hi_s",
                         "n_lags", "n_cycles", "analysis_fs", "n_segments", "q"});
  WaveletSpec& w = config.wavelet;
  if (j.contains("freqs_hz")) {
    w.freqs = get_list<double>(j, "freqs_hz");
  } else if (j.contains("n_freqs") || j.contains("freq_lo_hz") || j.contains("freq_hi_hz")) {
    w.freqs = linspace(get(j, "freq_lo_hz", 1.0), get(j, "freq_hi_hz", 95.0),
                       static_cast<std::size_t>(get(j, "n_freqs", 95)));
  }
  if (j.contains("lags_s")) {
    w.lags_s = get_list<double>(j, "lags_s");
  } else if (j.contains("n_lags") || j.contains("lag_lo_s") || j.contains("lag_hi_s")) {
    w.lags_s = logspace(get(j, "lag_lo_s", 0.5), get(j, "lag_hi_s", 500.0),
                        static_cast<std::size_t>(get(j, "n_lags", 200)));
  }
  w.n_cycles = get(j, "n_cycles", w.n_cycles);
  w.analysis_fs = get(j, "analysis_fs", w.analysis_fs);
  config.lrtc.n_segments = get(j, "n_segments", config.lrtc.n_segments);
  config.lrtc.q = get(j, "q", config.lrtc.q);
}

json surrogate_json(const SurrogateSpec& s, const RunConfig& config) {
  json j = {{"kind", to_string(s.kind)},
            {"phi", s.phi},
            {"beta", s.beta},
            {"channel_mixing", s.channel_mixing},
            {"composite", {{"white", s.composite.white}, {"powerlaw", s.composite.powerlaw}}}};
  if (config.channels) j["channels"] = *config.channels;
  j["line_noise"] = s.line_noise ? json{{"f0", s.line_noise->f0},
                                        {"amplitude", s.line_noise->amplitude},
                                        {"amplitude_drift_scale", s.line_noise->amplitude_drift_scale}}
                                 : json(nullptr);
  j["modulated_tone"] = s.modulated_tone ? json{{"freq_hz", s.modulated_tone->freq_hz},
                                                {"amplitude", s.modulated_tone->amplitude},
                                                {"depth", s.modulated_tone->depth},
                                                {"tau_s", s.modulated_tone->tau_s}}
                                         : json(nullptr);
  if (config.explicit_duration) {
    j["duration_s"] = s.duration_s;
    j["fs"] = s.fs;
  }
  return j;
}

const json& base_surrogate() {
  static const json j = json::parse(R"({
    "kind": "composite", "beta": 1.5,
    "composite": {"white": 1.0, "powerlaw": 0.15},
    "line_noise": {"f0": 50.0, "amplitude": 0.5, "amplitude_drift_scale": 0.5}
  })");
  return j;
}

const json& base_signature() {
  static const json j = json::parse(R"({"gain_sd": 0.3, "offset_sd": 0.5, "narrowband_amplitude": 0.6})");
  return j;
}

} // namespace

const std::vector<std::string>& known_splits() {
  static const std::vector<std::string> names = {
      "leave_samples_out", "leave_domains_out", "domain_kfold", "leave_subjects_out:samples",
      "leave_subjects_out:subjects", "zero_shot:first_six", "zero_shot:random"};
  return names;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"table1", "table5", "bands", "zeroshot", "retrieval", "lrtc"};
  return names;
}

std::string preset_json(const std::string& name) {
  json j;
  j["seeds"] = {1};
  j["train"] = {{"lr", 1e-3}, {"weight_decay", 0.01}, {"batch_size", 64}, {"max_epochs", 50}, {"patience", 10}};
  if (name == "lrtc") {
    j["surrogate"] = {{"kind", "white"},
                      {"channels", 4},
                      {"duration_s", 5000.0},
                      {"fs", 200.0},
                      {"modulated_tone", {{"freq_hz", 10.0}, {"amplitude", 2.0}, {"depth", 0.8}, {"tau_s", 20.0}}}};
    j["lrtc"] = {{"n_segments", 5}, {"q", 0.01}};
    return j.dump(2);
  }
  j["surrogate"] = base_surrogate();
  j["signature"] = base_signature();
  j["strength"] = 1.0;
  j["bands"] = {"full"};
  if (name == "table1") {
    j["templates"] = {"cvpr_like", "deap_like", "kul_like"};
    j["tasks"] = {"DLC", "TLC-DF", "TLC-EEG", "TLC-EEG-woDO"};
  } else if (name == "table5") {
    j["templates"] = {"deap_like", "kul_like"};
    j["tasks"] = {"TLC-EEG"};
    j["subjects"] = 4;
    j["splits"] = {"leave_subjects_out:samples", "leave_subjects_out:subjects"};
  } else if (name == "bands") {
    j["templates"] = {"cvpr_like", "deap_like", "kul_like"};
    j["tasks"] = {"DLC", "TLC-DF", "TLC-EEG", "TLC-EEG-woDO"};
    j["bands"] = {"full", "delta", "theta", "alpha", "beta", "low_gamma", "high_gamma"};
  } else if (name == "zeroshot") {
    j["templates"] = {"cvpr_like"};
    j["tasks"] = {"ZERO-SHOT"};
    j["splits"] = {"zero_shot:first_six", "zero_shot:random"};
  } else if (name == "retrieval") {
    j["templates"] = {"cvpr_like"};
    j["tasks"] = {"RETRIEVAL"};
    j["losses"] = {"cosine", "infonce"};
    j["splits"] = {"leave_samples_out", "leave_domains_out"};
  } else {
    throw ParameterError("unknown preset '" + name + "'");
  }
  return j.dump(2);
}

std::string merge_json(const std::string& base, const std::string& patch) {
  json b, p;
  try {
    b = json::parse(base);
    p = json::parse(patch);
  } catch (const json::parse_error& e) {
    throw ParameterError(std::string("config: invalid JSON: ") + e.what());
  }
  b.merge_patch(p);
  return b.dump(2);
}

int default_source_channels(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::cvpr_like: return 8;
    case TemplateKind::deap_like: return 32;
    default: return 8;
  }
}

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParameterError(std::string("config: invalid JSON: ") + e.what());
  }
  check_keys(j, "config", {"surrogate", "recordings", "templates", "class_map", "strength", "signature", "subjects",
                           "tasks", "splits", "bands", "losses", "kfold", "train", "seeds", "out", "jobs",
                           "leakage_threshold", "lrtc"});
  RunConfig c;
  try {
    if (j.contains("surrogate") && !j.at("surrogate").is_null()) c.surrogate = parse_surrogate(j.at("surrogate"), c);
    for (const auto& p : get_list<std::string>(j, "recordings")) c.recordings.emplace_back(p);
    for (const auto& t : get_list<std::string>(j, "templates")) c.templates.push_back(template_kind_from_string(t));
    if (j.contains("class_map")) {
      const json& m = j.at("class_map");
      if (!m.is_object()) throw ParameterError("config: class_map must map template names to lists");
      for (const auto& [key, value] : m.items()) {
        template_kind_from_string(key);
        c.class_maps[key] = value.get<std::vector<int>>();
      }
    }
    c.strength = get(j, "strength", c.strength);
    if (j.contains("signature")) {
      const json& s = j.at("signature");
      check_keys(s, "signature", {"gain_sd", "offset_sd", "narrowband_amplitude", "narrowband_lo_hz",
                                  "narrowband_hi_hz"});
      c.signature.gain_sd = get(s, "gain_sd", c.signature.gain_sd);
      c.signature.offset_sd = get(s, "offset_sd", c.signature.offset_sd);
      c.signature.narrowband_amplitude = get(s, "narrowband_amplitude", c.signature.narrowband_amplitude);
      c.signature.narrowband_lo_hz = get(s, "narrowband_lo_hz", c.signature.narrowband_lo_hz);
      c.signature.narrowband_hi_hz = get(s, "narrowband_hi_hz", c.signature.narrowband_hi_hz);
    }
    c.subjects = get(j, "subjects", c.subjects);
    for (const auto& t : get_list<std::string>(j, "tasks")) c.tasks.push_back(task_kind_from_string(t));
    c.splits = get_list<std::string>(j, "splits");
    for (const auto& b : get_list<std::string>(j, "bands")) c.bands.push_back(band_from_string(b));
    if (c.bands.empty()) c.bands.push_back(canonical_band(BandName::full));
    for (const auto& l : get_list<std::string>(j, "losses")) c.losses.push_back(nn::loss_kind_from_string(l));
    c.kfold = get(j, "kfold", c.kfold);
    if (j.contains("train")) {
      const json& t = j.at("train");
      check_keys(t, "train", {"lr", "weight_decay", "batch_size", "max_epochs", "patience", "tau", "loss_scale"});
      c.train.lr = get(t, "lr", c.train.lr);
      c.train.weight_decay = get(t, "weight_decay", c.train.weight_decay);
      c.train.batch_size = get(t, "batch_size", c.train.batch_size);
      c.train.max_epochs = get(t, "max_epochs", c.train.max_epochs);
      c.train.early_stop_patience = get(t, "patience", c.train.early_stop_patience);
      c.train.tau = get(t, "tau", c.train.tau);
      c.train.loss_scale = get(t, "loss_scale", c.train.loss_scale);
    }
    c.seeds = get_list<std::uint64_t>(j, "seeds");
    c.out = get<std::string>(j, "out", c.out.string());
    c.jobs = get(j, "jobs", c.jobs);
    c.leakage_threshold = get(j, "leakage_threshold", c.leakage_threshold);
    if (j.contains("lrtc")) parse_lrtc(j.at("lrtc"), c);
  } catch (const json::exception& e) {
    throw ParameterError(std::string("config: ") + e.what());
  }
  return c;
}

void validate(const RunConfig& c) {
  if (c.seeds.empty()) throw ParameterError("config: seeds must be non-empty");
  if (std::set<std::uint64_t>(c.seeds.begin(), c.seeds.end()).size() != c.seeds.size()) {
    throw ParameterError("config: seeds must be distinct");
  }
  if (c.jobs < 1) throw ParameterError("config: jobs must be >= 1");
  if (c.subjects < 1) throw ParameterError("config: subjects must be >= 1");
  if (c.kfold < 2) throw ParameterError("config: kfold must be >= 2");
  if (!(c.strength >= 0.0 && c.strength <= 1.0)) throw ParameterError("config: strength must lie in [0, 1]");
  if (!(c.leakage_threshold >= 0.0)) throw ParameterError("config: leakage_threshold must be >= 0");
  if (c.channels && *c.channels < 1) throw ParameterError("config: surrogate channels must be >= 1");
  for (const auto& p : c.recordings) {
    if (!std::filesystem::exists(p)) throw ParameterError("config: recording not found: " + p.string());
  }
  for (const auto& s : c.splits) {
    if (std::find(known_splits().begin(), known_splits().end(), s) == known_splits().end()) {
      throw ParameterError("config: unknown split '" + s + "'");
    }
  }
  for (const auto& [name, map] : c.class_maps) {
    DesignTemplate d = make_template(template_kind_from_string(name));
    d.class_map = map;
    d.n_classes = map.empty() ? 0 : *std::max_element(map.begin(), map.end()) + 1;
    validate(d);
  }
  nn::validate(c.train);
  if (c.surrogate) {
    SurrogateSpec probe = *c.surrogate;
    if (!c.explicit_duration) {
      probe.duration_s = 10.0;
      probe.fs = 1000.0;
    }
    validate(probe);
  }
  validate(c.wavelet);
}

std::string canonical_json(const RunConfig& c) {
  json j;
  j["surrogate"] = c.surrogate ? surrogate_json(*c.surrogate, c) : json(nullptr);
  json recs = json::array();
  for (const auto& p : c.recordings) recs.push_back(p.filename().string());
  j["recordings"] = recs;
  json tpl = json::array();
  for (auto t : c.templates) tpl.push_back(to_string(t));
  j["templates"] = tpl;
  j["class_map"] = c.class_maps;
  j["strength"] = c.strength;
  j["signature"] = {{"gain_sd", c.signature.gain_sd},
                    {"offset_sd", c.signature.offset_sd},
                    {"narrowband_amplitude", c.signature.narrowband_amplitude},
                    {"narrowband_lo_hz", c.signature.narrowband_lo_hz},
                    {"narrowband_hi_hz", c.signature.narrowband_hi_hz}};
  j["subjects"] = c.subjects;
  json tasks = json::array();
  for (auto t : c.tasks) tasks.push_back(to_string(t));
  j["tasks"] = tasks;
  j["splits"] = c.splits;
  json bands = json::array();
  for (const auto& b : c.bands) bands.push_back(to_string(b.name));
  j["bands"] = bands;
  json losses = json::array();
  for (auto l : c.losses) losses.push_back(nn::to_string(l));
  j["losses"] = losses;
  j["kfold"] = c.kfold;
  j["train"] = {{"lr", c.train.lr},
                {"weight_decay", c.train.weight_decay},
                {"batch_size", c.train.batch_size},
                {"max_epochs", c.train.max_epochs},
                {"patience", c.train.early_stop_patience},
                {"tau", c.train.tau},
                {"loss_scale", c.train.loss_scale}};
  j["seeds"] = c.seeds;
  j["leakage_threshold"] = c.leakage_threshold;
  j["lrtc"] = {{"freqs_hz", c.wavelet.freqs},
               {"lags_s", c.wavelet.lags_s},
               {"n_cycles", c.wavelet.n_cycles},
               {"analysis_fs", c.wavelet.analysis_fs},
               {"n_segments", c.lrtc.n_segments},
               {"q", c.lrtc.q}};
  return j.dump();
}

RunConfig load_run_config(const LoadOptions& options) {
  if (options.preset.empty() && options.config_path.empty()) {
    throw ParameterError("config: give --config and/or --preset");
  }
  std::string text = options.preset.empty() ? "{}" : preset_json(options.preset);
  if (!options.config_path.empty()) {
    std::ifstream in(options.config_path);
    if (!in) throw ParameterError("config: cannot read " + options.config_path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    text = merge_json(text, ss.str());
  }
  json overrides = json::object();
  if (!options.seeds.empty()) overrides["seeds"] = options.seeds;
  if (options.out) overrides["out"] = options.out->string();
  if (options.jobs) overrides["jobs"] = *options.jobs;
  text = merge_json(text, overrides.dump());
  RunConfig config = parse_run_config(text);
  if (!options.config_path.empty()) {
    const auto base = options.config_path.parent_path();
    for (auto& p : config.recordings) {
      if (p.is_relative()) p = base / p;
    }
  }
  validate(config);
  return config;
}

DesignTemplate design_for(const RunConfig& config, TemplateKind kind, std::uint64_t seed) {
  DesignTemplate d = make_template(kind, seed);
  if (auto it = config.class_maps.find(to_string(kind)); it != config.class_maps.end()) {
    d.class_map = it->second;
    d.n_classes = *std::max_element(d.class_map.begin(), d.class_map.end()) + 1;
    validate(d);
  }
  return d;
}

} // namespace leakaudit::cli
