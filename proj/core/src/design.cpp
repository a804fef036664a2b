#include "leakaudit/design.hpp"

#include "leakaudit/dsp.hpp"
#include "leakaudit/errors.hpp"
#include "leakaudit/random.hpp"
#include "leakaudit/recording_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace leakaudit {

namespace {

using nlohmann::json;

bool is_integer(double v) {
  return std::abs(v - std::round(v)) <= 1e-9 * std::max(1.0, std::abs(v));
}

std::string policy_to_string(const ChannelPolicy& p) {
  switch (p.kind) {
    case ChannelPolicy::Kind::keep_all: return "keep_all";
    case ChannelPolicy::Kind::first_k: return "first_k";
    case ChannelPolicy::Kind::replicate_to: return "replicate_to";
  }
  return "keep_all";
}

ChannelPolicy policy_from(const std::string& name, int n) {
  if (name == "keep_all") return {ChannelPolicy::Kind::keep_all, 0};
  if (name == "first_k") return {ChannelPolicy::Kind::first_k, n};
  if (name == "replicate_to") return {ChannelPolicy::Kind::replicate_to, n};
  throw ParameterError("dataset manifest: unknown channel policy '" + name + "'");
}

json template_json(const DesignTemplate& d) {
  return json{{"kind", to_string(d.kind)},
              {"n_domains", d.n_domains},
              {"domain_duration_s", d.domain_duration_s},
              {"rest_min_s", d.rest.min_s},
              {"rest_max_s", d.rest.max_s},
              {"sample_length_s", d.sample_length_s},
              {"target_fs", d.target_fs},
              {"channel_policy", policy_to_string(d.channel_policy)},
              {"channel_policy_n", d.channel_policy.n},
              {"n_classes", d.n_classes},
              {"class_map", d.class_map}};
}

DesignTemplate template_from_json(const json& j) {
  DesignTemplate d;
  d.kind = template_kind_from_string(j.at("kind").get<std::string>());
  d.n_domains = j.at("n_domains").get<int>();
  d.domain_duration_s = j.at("domain_duration_s").get<double>();
  d.rest = {j.at("rest_min_s").get<double>(), j.at("rest_max_s").get<double>()};
  d.sample_length_s = j.at("sample_length_s").get<double>();
  d.target_fs = j.at("target_fs").get<double>();
  d.channel_policy = policy_from(j.at("channel_policy").get<std::string>(), j.at("channel_policy_n").get<int>());
  d.n_classes = j.at("n_classes").get<int>();
  d.class_map = j.at("class_map").get<std::vector<int>>();
  return d;
}

} // namespace

std::string to_string(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::cvpr_like: return "cvpr_like";
    case TemplateKind::deap_like: return "deap_like";
    case TemplateKind::kul_like: return "kul_like";
    case TemplateKind::custom: return "custom";
  }
  return "custom";
}

TemplateKind template_kind_from_string(const std::string& name) {
  if (name == "cvpr_like") return TemplateKind::cvpr_like;
  if (name == "deap_like") return TemplateKind::deap_like;
  if (name == "kul_like") return TemplateKind::kul_like;
  if (name == "custom") return TemplateKind::custom;
  throw ParameterError("unknown template '" + name + "'");
}

int DesignTemplate::samples_per_domain() const {
  return static_cast<int>(std::llround(domain_duration_s / sample_length_s));
}

Eigen::Index DesignTemplate::sample_timepoints() const {
  return static_cast<Eigen::Index>(std::llround(sample_length_s * target_fs));
}

void validate(const DesignTemplate& d) {
  if (d.n_domains < 1) throw ParameterError("template: n_domains must be >= 1");
  if (!(d.sample_length_s > 0.0) || !(d.domain_duration_s > 0.0)) {
    throw ParameterError("template: durations must be positive");
  }
  if (!is_integer(d.domain_duration_s / d.sample_length_s)) {
    throw ParameterError("template: domain_duration_s must be an integer multiple of sample_length_s");
  }
  if (!(d.target_fs > 0.0) || !is_integer(d.sample_length_s * d.target_fs) || d.sample_timepoints() < 1) {
    throw ParameterError("template: sample_length_s * target_fs must be a positive integer");
  }
  if (!(d.rest.min_s >= 0.0 && d.rest.max_s >= d.rest.min_s)) throw ParameterError("template: bad rest range");
  if (d.channel_policy.kind != ChannelPolicy::Kind::keep_all && d.channel_policy.n < 1) {
    throw ParameterError("template: channel policy needs a positive channel count");
  }
  if (d.n_classes < 1) throw ParameterError("template: n_classes must be >= 1");
  if (static_cast<int>(d.class_map.size()) != d.n_domains) {
    throw ParameterError("template: class_map must assign a class to every domain");
  }
  std::set<int> image;
  for (int c : d.class_map) {
    if (c < 0 || c >= d.n_classes) throw ParameterError("template: class id out of range in class_map");
    image.insert(c);
  }
  if (static_cast<int>(image.size()) != d.n_classes) {
    throw ParameterError("template: class_map must use exactly n_classes distinct classes");
  }
}

std::vector<int> default_class_map(TemplateKind kind, std::uint64_t seed) {
  switch (kind) {
    case TemplateKind::cvpr_like: {
      std::vector<int> map(40);
      std::iota(map.begin(), map.end(), 0);
      return map;
    }
    case TemplateKind::deap_like: {
      std::vector<int> map(40);
      for (int d = 0; d < 40; ++d) map[static_cast<std::size_t>(d)] = d / 10;
      Rng rng(derive_seed(seed, 0xdea9u));
      shuffle_in_place(map, rng);
      return map;
    }
    case TemplateKind::kul_like: {
      std::vector<int> map(8);
      for (int d = 0; d < 8; ++d) map[static_cast<std::size_t>(d)] = d % 2;
      return map;
    }
    case TemplateKind::custom:
      break;
  }
  throw ParameterError("custom template requires an explicit class_map");
}

DesignTemplate make_template(TemplateKind kind, std::uint64_t seed) {
  DesignTemplate d;
  d.kind = kind;
  switch (kind) {
    case TemplateKind::cvpr_like:
      d.n_domains = 40;
      d.domain_duration_s = 25.0;
      d.rest = {10.0, 10.0};
      d.sample_length_s = 0.5;
      d.target_fs = 1000.0;
      d.channel_policy = {ChannelPolicy::Kind::replicate_to, 128};
      d.n_classes = 40;
      break;
    case TemplateKind::deap_like:
      d.n_domains = 40;
      d.domain_duration_s = 60.0;
      d.rest = {40.0, 40.0};
      d.sample_length_s = 2.0;
      d.target_fs = 128.0;
      d.channel_policy = {ChannelPolicy::Kind::first_k, 32};
      d.n_classes = 4;
      break;
    case TemplateKind::kul_like:
      d.n_domains = 8;
      d.domain_duration_s = 360.0;
      d.rest = {60.0, 120.0};
      d.sample_length_s = 1.0;
      d.target_fs = 128.0;
      d.channel_policy = {ChannelPolicy::Kind::keep_all, 0};
      d.n_classes = 2;
      break;
    case TemplateKind::custom:
      throw ParameterError("custom templates must be built explicitly");
  }
  d.class_map = default_class_map(kind, seed);
  validate(d);
  return d;
}

double required_duration(const DesignTemplate& d) {
  return d.n_domains * d.domain_duration_s + (d.n_domains - 1) * d.rest.max_s;
}

std::vector<TimeWindow> layout_domains(const DesignTemplate& d, std::uint64_t seed) {
  validate(d);
  Rng rng(derive_seed(seed, 0x1a70u));
  std::vector<TimeWindow> windows;
  windows.reserve(static_cast<std::size_t>(d.n_domains));
  double t = 0.0;
  for (int i = 0; i < d.n_domains; ++i) {
    // Snap to the sample grid so that every domain holds an exact sample count.
    const double start = std::floor(t * d.target_fs + 1e-6) / d.target_fs;
    windows.push_back({start, start + d.domain_duration_s});
    double rest = d.rest.min_s;
    if (d.rest.max_s > d.rest.min_s) rest += (d.rest.max_s - d.rest.min_s) * uniform_unit(rng);
    t = start + d.domain_duration_s + rest;
  }
  return windows;
}

std::vector<int> channel_map(const ChannelPolicy& policy, int source_channels) {
  if (source_channels < 1) throw ParameterError("channel policy: no source channels");
  std::vector<int> map;
  switch (policy.kind) {
    case ChannelPolicy::Kind::keep_all:
      map.resize(static_cast<std::size_t>(source_channels));
      std::iota(map.begin(), map.end(), 0);
      break;
    case ChannelPolicy::Kind::first_k:
      if (policy.n > source_channels) {
        throw ParameterError("channel policy first_k(" + std::to_string(policy.n) + ") needs at least that many channels, have " +
                             std::to_string(source_channels));
      }
      map.resize(static_cast<std::size_t>(policy.n));
      std::iota(map.begin(), map.end(), 0);
      break;
    case ChannelPolicy::Kind::replicate_to:
      // The source block is repeated after itself until n channels exist.
      for (int c = 0; c < policy.n; ++c) map.push_back(c % source_channels);
      break;
  }
  return map;
}

LabeledDataset::LabeledDataset(std::shared_ptr<const MultichannelSeries> source, std::vector<int> channel_map,
                               std::vector<SampleRecord> samples, DesignTemplate design, int subject_id,
                               std::string provenance)
    : source_(std::move(source)),
      channel_map_(std::move(channel_map)),
      samples_(std::move(samples)),
      design_(std::move(design)),
      subject_id_(subject_id),
      provenance_(std::move(provenance)),
      timepoints_(design_.sample_timepoints()) {
  if (!source_) throw ParameterError("dataset: missing source series");
  for (int c : channel_map_) {
    if (c < 0 || c >= source_->channels()) throw ParameterError("dataset: channel map out of range");
  }
  for (const auto& s : samples_) {
    if (s.offset < 0 || s.offset + timepoints_ > source_->timepoints()) {
      throw ParameterError("dataset: sample extends beyond its source");
    }
  }
}

SignalMatrix LabeledDataset::sample_data(std::size_t i) const {
  const auto& rec = samples_.at(i);
  SignalMatrix out(channels(), timepoints_);
  for (int c = 0; c < channels(); ++c) {
    out.row(c) = source_->data.row(channel_map_[static_cast<std::size_t>(c)]).segment(rec.offset, timepoints_);
  }
  return out;
}

void LabeledDataset::copy_sample(std::size_t i, std::span<double> out) const {
  const auto& rec = samples_.at(i);
  const auto t = static_cast<std::size_t>(timepoints_);
  if (out.size() != static_cast<std::size_t>(channels()) * t) throw ParameterError("dataset: output buffer size mismatch");
  for (std::size_t c = 0; c < channel_map_.size(); ++c) {
    const double* src = source_->data.row(channel_map_[c]).data() + rec.offset;
    std::copy(src, src + t, out.begin() + static_cast<std::ptrdiff_t>(c * t));
  }
}

LabeledDataset LabeledDataset::with_source(MultichannelSeries replacement) const {
  if (replacement.channels() != source_->channels() || replacement.timepoints() != source_->timepoints()) {
    throw ParameterError("dataset: replacement source has a different shape");
  }
  return LabeledDataset(std::make_shared<const MultichannelSeries>(std::move(replacement)), channel_map_, samples_,
                        design_, subject_id_, provenance_);
}

std::vector<int> LabeledDataset::domain_order() const {
  std::map<int, double> first;
  for (const auto& s : samples_) {
    auto [it, inserted] = first.emplace(s.domain_id, s.t_start);
    if (!inserted) it->second = std::min(it->second, s.t_start);
  }
  std::vector<std::pair<double, int>> order;
  for (const auto& [d, t] : first) order.emplace_back(t, d);
  std::sort(order.begin(), order.end());
  std::vector<int> out;
  for (const auto& [t, d] : order) out.push_back(d);
  return out;
}

LabeledDataset reorganize(const MultichannelSeries& series, const DesignTemplate& design, int subject_id,
                          std::uint64_t seed) {
  validate(design);
  validate(series);
  if (series.fs < design.target_fs) {
    std::ostringstream msg;
    msg << "reorganize: recording rate " << series.fs << " Hz is below the template rate " << design.target_fs << " Hz";
    throw ParameterError(msg.str());
  }
  const double needed = required_duration(design);
  if (series.duration_s() + 1e-9 < needed) {
    std::ostringstream msg;
    msg << "reorganize: recording is " << series.duration_s() << " s but " << to_string(design.kind) << " needs "
        << needed << " s (short by " << needed - series.duration_s() << " s)";
    throw ParameterError(msg.str());
  }

  auto source = std::make_shared<const MultichannelSeries>(resample(series, design.target_fs));
  auto channels = channel_map(design.channel_policy, static_cast<int>(source->channels()));

  const auto windows = layout_domains(design, seed);
  const Eigen::Index len = design.sample_timepoints();
  const int per_domain = design.samples_per_domain();
  std::vector<SampleRecord> samples;
  samples.reserve(static_cast<std::size_t>(design.n_domains * per_domain));
  for (int d = 0; d < design.n_domains; ++d) {
    const auto start = static_cast<Eigen::Index>(std::llround(windows[static_cast<std::size_t>(d)].start_s * design.target_fs));
    for (int i = 0; i < per_domain; ++i) {
      SampleRecord rec;
      rec.subject_id = subject_id;
      rec.domain_id = d;
      rec.class_id = design.class_map[static_cast<std::size_t>(d)];
      rec.offset = start + i * len;
      rec.t_start = static_cast<double>(rec.offset) / design.target_fs;
      samples.push_back(rec);
    }
  }
  if (!samples.empty() && samples.back().offset + len > source->timepoints()) {
    throw ParameterError("reorganize: resampled recording is too short for the layout");
  }
  return LabeledDataset(std::move(source), std::move(channels), std::move(samples), design, subject_id, series.origin);
}

void save_dataset(const LabeledDataset& dataset, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create dataset directory '" + dir.string() + "': " + ec.message());

  const auto t = dataset.timepoints();
  MultichannelSeries payload;
  payload.fs = dataset.fs();
  payload.origin = dataset.provenance();
  payload.data.resize(dataset.channels(), t * static_cast<Eigen::Index>(dataset.size()));
  json samples = json::array();
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    payload.data.middleCols(static_cast<Eigen::Index>(i) * t, t) = dataset.sample_data(i);
    const auto& s = dataset.sample(i);
    samples.push_back({{"t_start", s.t_start},
                       {"domain", s.domain_id},
                       {"class", s.class_id},
                       {"subject", s.subject_id},
                       {"offset", static_cast<long long>(i) * t}});
  }
  json manifest{{"format", "leakaudit-dataset"},
                {"version", 1},
                {"template", template_json(dataset.design())},
                {"subject_id", dataset.subject_id()},
                {"provenance", dataset.provenance()},
                {"class_map", dataset.design().class_map},
                {"timepoints_per_sample", t},
                {"payload", "samples.rec"},
                {"samples", samples}};
  save_recording(payload, dir / "samples.rec");
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write manifest in '" + dir.string() + "'");
  out << manifest.dump(1) << "\n";
}

LabeledDataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("cannot open '" + (dir / "manifest.json").string() + "'");
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(std::string("dataset manifest: ") + e.what());
  }
  try {
    auto design = template_from_json(manifest.at("template"));
    validate(design);
    auto payload = std::make_shared<const MultichannelSeries>(load_recording(dir / manifest.at("payload").get<std::string>()));
    std::vector<SampleRecord> samples;
    for (const auto& s : manifest.at("samples")) {
      SampleRecord rec;
      rec.t_start = s.at("t_start").get<double>();
      rec.domain_id = s.at("domain").get<int>();
      rec.class_id = s.at("class").get<int>();
      rec.subject_id = s.at("subject").get<int>();
      rec.offset = s.at("offset").get<long long>();
      samples.push_back(rec);
    }
    std::vector<int> channels(static_cast<std::size_t>(payload->channels()));
    std::iota(channels.begin(), channels.end(), 0);
    return LabeledDataset(payload, std::move(channels), std::move(samples), std::move(design),
                          manifest.at("subject_id").get<int>(), manifest.value("provenance", std::string()));
  } catch (const json::exception& e) {
    throw IoError(std::string("dataset manifest: ") + e.what());
  }
}

} // namespace leakaudit
