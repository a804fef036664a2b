#include "leakaudit/experiments.hpp"

#include "leakaudit/errors.hpp"
#include "leakaudit/metrics.hpp"
#include "leakaudit/random.hpp"
#include "leakaudit/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

namespace leakaudit {

namespace {

enum SeedTag : std::uint64_t { kSynth = 21, kSignatures = 22, kLayout = 23, kBank = 24, kFold = 25, kSweepSplit = 26 };

ReportCell base_cell(TaskKind task, const LabeledDataset& d, const std::string& split, const Band& band,
                     const nn::TrainConfig& config) {
  ReportCell c;
  c.task = to_string(task);
  c.template_name = to_string(d.design().kind);
  c.split = split;
  c.band = to_string(band.name);
  c.subject = d.subject_id();
  c.seed = config.seed;
  return c;
}

bool class_is_domain(const DesignTemplate& d) {
  if (d.n_classes != d.n_domains) return false;
  for (int i = 0; i < d.n_domains; ++i) {
    if (d.class_map[static_cast<std::size_t>(i)] != i) return false;
  }
  return true;
}

std::vector<int> pick(const std::vector<int>& labels, std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(labels[r]);
  return out;
}

std::shared_ptr<const nn::SimpleCnn> make_cnn(const LabeledDataset& d, int n_outputs) {
  return std::make_shared<nn::SimpleCnn>(
      nn::SimpleCnnConfig::for_input(d.channels(), static_cast<int>(d.timepoints()), d.fs(), n_outputs));
}

struct Classified {
  double accuracy_pct = 0.0;
  std::vector<int> predicted;
  nn::TrainResult trained;
};

Classified train_and_classify(const nn::Model& model, const nn::TrainData& inputs, const SplitPlan& plan,
                              const std::vector<int>& labels, const nn::TrainConfig& config) {
  if (plan.test.empty()) throw ParameterError("split has an empty test partition");
  Classified out;
  out.trained = nn::train(model, config, inputs, plan.train, plan.val, nn::LossKind::cross_entropy);
  out.predicted = argmax_rows(nn::predict(model, out.trained.params, inputs, plan.test));
  out.accuracy_pct = accuracy_pct(out.predicted, pick(labels, plan.test));
  return out;
}

bool holds_out_domains(SplitStrategy s) {
  return s == SplitStrategy::leave_domains_out || s == SplitStrategy::domain_kfold || s == SplitStrategy::zero_shot;
}

} // namespace

std::string to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::dlc: return "DLC";
    case TaskKind::tlc_df: return "TLC-DF";
    case TaskKind::tlc_eeg: return "TLC-EEG";
    case TaskKind::tlc_eeg_wodo: return "TLC-EEG-woDO";
    case TaskKind::zero_shot: return "ZERO-SHOT";
    case TaskKind::retrieval: return "RETRIEVAL";
  }
  return "unknown";
}

TaskKind task_kind_from_string(const std::string& name) {
  for (auto k : {TaskKind::dlc, TaskKind::tlc_df, TaskKind::tlc_eeg, TaskKind::tlc_eeg_wodo, TaskKind::zero_shot,
                 TaskKind::retrieval}) {
    if (to_string(k) == name) return k;
  }
  throw ParameterError("unknown task '" + name + "'");
}

double chance_pct(std::size_t n_labels) {
  if (n_labels == 0) throw ParameterError("chance level needs at least one label");
  return 100.0 / static_cast<double>(n_labels);
}

EmbeddingBank::EmbeddingBank(int n_classes, int dim, std::uint64_t seed) : seed_(seed) {
  if (n_classes < 1 || dim < 1) throw ParameterError("embedding bank: sizes must be positive");
  vectors_.resize(n_classes, dim);
  for (int c = 0; c < n_classes; ++c) {
    Rng rng(derive_seed(seed, kBank, static_cast<std::uint64_t>(c)));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int j = 0; j < dim; ++j) vectors_(c, j) = normal(rng);
    vectors_.row(c).normalize();
  }
}

MultichannelSeries synth_surrogate_recording(const SurrogateSpec& base, const DesignTemplate& design, double strength,
                                             const SignatureScale& scale, int subject_id, std::uint64_t seed) {
  if (!(strength >= 0.0 && strength <= 1.0)) throw ParameterError("domain strength must lie in [0, 1]");
  SurrogateSpec spec = base;
  spec.fs = design.target_fs;
  spec.duration_s = std::ceil(required_duration(design) * design.target_fs - 1e-9) / design.target_fs;
  spec.seed = derive_seed(seed, kSynth, static_cast<std::uint64_t>(subject_id));
  MultichannelSeries series = synth(spec);
  const auto windows = layout_domains(design, surrogate_layout_seed(seed, subject_id));
  const auto signatures = random_signatures(design.n_domains, spec.channels, scale, strength,
                                            derive_seed(seed, kSignatures, static_cast<std::uint64_t>(subject_id)));
  series = inject_domain_signatures(series, windows, signatures);
  series.origin = "surrogate:" + to_string(spec.kind) + ":seed=" + std::to_string(seed) +
                  ":subject=" + std::to_string(subject_id);
  return series;
}

std::uint64_t surrogate_layout_seed(std::uint64_t seed, int subject_id) {
  return derive_seed(seed, kLayout, static_cast<std::uint64_t>(subject_id));
}

LabeledDataset build_surrogate_dataset(const SurrogateSpec& base, const DesignTemplate& design, double strength,
                                       const SignatureScale& scale, int subject_id, std::uint64_t seed) {
  const MultichannelSeries series = synth_surrogate_recording(base, design, strength, scale, subject_id, seed);
  return reorganize(series, design, subject_id, surrogate_layout_seed(seed, subject_id));
}

LabeledDataset apply_band(const LabeledDataset& dataset, const Band& band) {
  if (band.name == BandName::full) return dataset;
  if (!band_available(band, dataset.fs())) {
    throw ParameterError("band " + to_string(band.name) + " is unavailable at " + std::to_string(dataset.fs()) + " Hz");
  }
  return dataset.with_source(bandpass(dataset.source(), band));
}

nn::TrainData dataset_inputs(const LabeledDataset& dataset, nn::Targets targets) {
  nn::TrainData d;
  d.size = dataset.size();
  d.targets = std::move(targets);
  const LabeledDataset* ds = &dataset;
  const Eigen::Index width = static_cast<Eigen::Index>(dataset.channels()) * dataset.timepoints();
  d.fill = [ds, width](std::span<const std::size_t> idx, nn::RowMatrix& out) {
    out.resize(static_cast<Eigen::Index>(idx.size()), width);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      ds->copy_sample(idx[i], std::span<double>(out.row(static_cast<Eigen::Index>(i)).data(),
                                                static_cast<std::size_t>(width)));
    }
  };
  return d;
}

std::vector<int> domain_labels(const LabeledDataset& dataset) {
  std::vector<int> out;
  out.reserve(dataset.size());
  for (const auto& s : dataset.samples()) out.push_back(s.domain_id);
  return out;
}

std::vector<int> class_labels(const LabeledDataset& dataset) {
  std::vector<int> out;
  out.reserve(dataset.size());
  for (const auto& s : dataset.samples()) out.push_back(s.class_id);
  return out;
}

std::string split_label(const SplitPlan& plan) {
  std::string s = to_string(plan.strategy);
  if (plan.validation) s += ":" + to_string(*plan.validation);
  if (plan.zero_shot_mode) s += ":" + to_string(*plan.zero_shot_mode);
  return s;
}

DlcOutcome run_dlc(const LabeledDataset& dataset, const SplitPlan& split, const Band& band,
                   const nn::TrainConfig& config) {
  DlcOutcome out;
  out.data = std::make_shared<const LabeledDataset>(apply_band(dataset, band));
  const auto& data = *out.data;
  const auto labels = domain_labels(data);
  out.model = make_cnn(data, data.design().n_domains);
  nn::Targets t;
  t.classes = labels;
  const auto inputs = dataset_inputs(data, std::move(t));
  auto r = train_and_classify(*out.model, inputs, split, labels, config);
  out.params = std::move(r.trained.params);
  out.split = split;
  out.cell = base_cell(TaskKind::dlc, data, split_label(split), band, config);
  out.cell.accuracy_pct = r.accuracy_pct;
  out.cell.chance_pct = chance_pct(static_cast<std::size_t>(data.design().n_domains));
  out.cell.n_test = split.test.size();
  return out;
}

ReportCell run_tlc_df(const DlcOutcome* upstream, const nn::TrainConfig& config) {
  if (!upstream || !upstream->model || !upstream->data) {
    throw ParameterError("TLC-DF needs a trained DLC model for the same split");
  }
  const auto& data = *upstream->data;
  ReportCell cell = upstream->cell;
  cell.task = to_string(TaskKind::tlc_df);
  cell.accuracy_pct.reset();
  cell.chance_pct = chance_pct(static_cast<std::size_t>(data.design().n_classes));
  if (class_is_domain(data.design())) {
    cell.status = "skipped";
    cell.note = "class equals domain; decoding class from domain features is redundant";
    cell.n_test = 0;
    return cell;
  }
  const auto& model = *upstream->model;
  const auto inputs = dataset_inputs(data, {});
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), 0);
  nn::RowMatrix features(static_cast<Eigen::Index>(data.size()), model.config().conv_filters);
  nn::RowMatrix batch;
  for (std::size_t start = 0; start < all.size(); start += 256) {
    const std::size_t n = std::min<std::size_t>(256, all.size() - start);
    inputs.fill(std::span<const std::size_t>(all).subspan(start, n), batch);
    features.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(n)) =
        model.forward_full(upstream->params, batch).pooled;
  }
  const auto labels = class_labels(data);
  nn::Mlp2Config mc;
  mc.train = config;
  const auto clf = nn::mlp2_train(features, labels, upstream->split.train, upstream->split.val, mc);
  nn::RowMatrix test(static_cast<Eigen::Index>(upstream->split.test.size()), features.cols());
  for (std::size_t i = 0; i < upstream->split.test.size(); ++i) {
    test.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(upstream->split.test[i]));
  }
  cell.accuracy_pct = accuracy_pct(clf.predict(test), pick(labels, upstream->split.test));
  cell.n_test = upstream->split.test.size();
  return cell;
}

ReportCell run_tlc_eeg(const LabeledDataset& dataset, const SplitPlan& split, const Band& band,
                       const nn::TrainConfig& config) {
  const LabeledDataset data = apply_band(dataset, band);
  const auto labels = class_labels(data);
  const auto model = make_cnn(data, data.design().n_classes);
  nn::Targets t;
  t.classes = labels;
  const auto inputs = dataset_inputs(data, std::move(t));
  const auto r = train_and_classify(*model, inputs, split, labels, config);
  ReportCell cell = base_cell(TaskKind::tlc_eeg, data, split_label(split), band, config);
  cell.accuracy_pct = r.accuracy_pct;
  cell.chance_pct = chance_pct(static_cast<std::size_t>(data.design().n_classes));
  cell.n_test = split.test.size();
  return cell;
}

ReportCell run_tlc_eeg_wodo(const LabeledDataset& dataset, std::span<const SplitPlan> folds, const Band& band,
                            const nn::TrainConfig& config) {
  ReportCell cell = base_cell(TaskKind::tlc_eeg_wodo, dataset, folds.empty() ? "leave_domains_out" : split_label(folds[0]),
                              band, config);
  cell.chance_pct = chance_pct(static_cast<std::size_t>(dataset.design().n_classes));
  if (folds.empty()) {
    cell.status = "skipped";
    cell.note = "no domain-held-out folds";
    return cell;
  }
  const LabeledDataset data = apply_band(dataset, band);
  const auto labels = class_labels(data);
  const auto model = make_cnn(data, data.design().n_classes);
  nn::Targets t;
  t.classes = labels;
  const auto inputs = dataset_inputs(data, std::move(t));
  double correct = 0.0;
  std::size_t total = 0;
  for (const auto& fold : folds) {
    nn::TrainConfig fc = config;
    fc.seed = derive_seed(config.seed, kFold, static_cast<std::uint64_t>(fold.fold_id));
    const auto r = train_and_classify(*model, inputs, fold, labels, fc);
    correct += r.accuracy_pct / 100.0 * static_cast<double>(fold.test.size());
    total += fold.test.size();
  }
  cell.accuracy_pct = 100.0 * correct / static_cast<double>(total);
  cell.n_test = total;
  cell.note = std::to_string(folds.size()) + " folds";
  return cell;
}

ZeroShotOutcome run_zero_shot(const LabeledDataset& dataset, ZeroShotMode mode, const nn::TrainConfig& config,
                              std::uint64_t split_seed) {
  const SplitPlan plan = zero_shot_split(dataset, mode, 6, split_seed);
  const auto labels = class_labels(dataset);
  std::set<int> trained_set;
  for (auto i : plan.train) trained_set.insert(labels[i]);
  for (auto i : plan.val) trained_set.insert(labels[i]);
  const std::vector<int> trained(trained_set.begin(), trained_set.end());
  std::map<int, int> to_output;
  for (std::size_t k = 0; k < trained.size(); ++k) to_output[trained[k]] = static_cast<int>(k);

  std::vector<int> remapped(labels.size(), -1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto it = to_output.find(labels[i]);
    if (it != to_output.end()) remapped[i] = it->second;
  }
  const auto model = make_cnn(dataset, static_cast<int>(trained.size()));
  nn::Targets t;
  t.classes = remapped;
  const auto inputs = dataset_inputs(dataset, std::move(t));
  const auto tr = nn::train(*model, config, inputs, plan.train, plan.val, nn::LossKind::cross_entropy);
  const auto out_idx = argmax_rows(nn::predict(*model, tr.params, inputs, plan.test));

  // class equals domain for cvpr_like
  std::vector<int> predicted_domain, true_domain;
  for (std::size_t i = 0; i < plan.test.size(); ++i) {
    predicted_domain.push_back(trained[static_cast<std::size_t>(out_idx[i])]);
    true_domain.push_back(dataset.sample(plan.test[i]).domain_id);
  }
  const auto order = dataset.domain_order();

  ZeroShotOutcome z;
  z.n_test = plan.test.size();
  z.acc_7th_pct = acc_domain_pct(predicted_domain, order.at(6));
  z.acc_7th_chance_pct = trained_set.count(order.at(6)) ? chance_pct(trained.size()) : 0.0;

  const std::string split = split_label(plan);
  ReportCell c7 = base_cell(TaskKind::zero_shot, dataset, split, canonical_band(BandName::full), config);
  c7.metric = "acc_7th";
  c7.accuracy_pct = z.acc_7th_pct;
  c7.chance_pct = z.acc_7th_chance_pct;
  c7.n_test = z.n_test;

  if (mode == ZeroShotMode::random) {
    z.acc_near_pct = acc_near_pct(predicted_domain, true_domain, order);
    // uniform guessing over trained classes: share of trained neighbours
    std::map<int, std::size_t> pos;
    for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
    double expected = 0.0;
    for (int d : true_domain) {
      const std::size_t p = pos[d];
      int neighbours = 0;
      if (p > 0 && trained_set.count(order[p - 1])) ++neighbours;
      if (p + 1 < order.size() && trained_set.count(order[p + 1])) ++neighbours;
      expected += static_cast<double>(neighbours) / static_cast<double>(trained.size());
    }
    ReportCell cn = c7;
    cn.metric = "acc_near";
    cn.accuracy_pct = *z.acc_near_pct;
    cn.chance_pct = 100.0 * expected / static_cast<double>(true_domain.size());
    z.cells.push_back(cn);
  }
  z.cells.push_back(c7);
  return z;
}

RetrievalOutcome run_retrieval(const LabeledDataset& dataset, std::span<const SplitPlan> plans, nn::LossKind loss,
                               const nn::TrainConfig& config, const EmbeddingBank& bank) {
  if (plans.empty()) throw ParameterError("retrieval: no split plans");
  if (loss == nn::LossKind::cross_entropy) throw ParameterError("retrieval: loss must be cosine or infonce");
  if (bank.n_classes() < dataset.design().n_classes) {
    throw ParameterError("retrieval: embedding bank has fewer classes than the dataset");
  }
  const auto labels = class_labels(dataset);
  nn::Targets t;
  t.embeddings.resize(static_cast<Eigen::Index>(labels.size()), bank.dim());
  for (std::size_t i = 0; i < labels.size(); ++i) t.embeddings.row(static_cast<Eigen::Index>(i)) = bank.vectors().row(labels[i]);
  const auto inputs = dataset_inputs(dataset, std::move(t));
  const auto model = make_cnn(dataset, bank.dim());

  RetrievalOutcome r;
  double top1 = 0.0, top5 = 0.0, rank = 0.0, c1 = 0.0, c5 = 0.0;
  for (const auto& plan : plans) {
    if (plan.test.empty()) throw ParameterError("retrieval: empty test partition");
    nn::TrainConfig fc = config;
    if (plans.size() > 1) fc.seed = derive_seed(config.seed, kFold, static_cast<std::uint64_t>(plan.fold_id));
    const auto tr = nn::train(*model, fc, inputs, plan.train, plan.val, loss);
    const nn::Matrix pred = nn::predict(*model, tr.params, inputs, plan.test);

    std::vector<int> pool;
    if (holds_out_domains(plan.strategy)) {
      std::set<int> s;
      for (auto i : plan.test) s.insert(labels[i]);
      pool.assign(s.begin(), s.end());
    } else {
      pool.resize(static_cast<std::size_t>(dataset.design().n_classes));
      std::iota(pool.begin(), pool.end(), 0);
    }
    if (pool.size() < 2) throw ParameterError("retrieval: candidate pool needs at least 2 classes");
    nn::Matrix candidates(static_cast<Eigen::Index>(pool.size()), bank.dim());
    std::map<int, int> pool_index;
    for (std::size_t k = 0; k < pool.size(); ++k) {
      candidates.row(static_cast<Eigen::Index>(k)) = bank.vectors().row(pool[k]);
      pool_index[pool[k]] = static_cast<int>(k);
    }
    std::vector<int> targets;
    for (auto i : plan.test) targets.push_back(pool_index.at(labels[i]));
    const auto m = retrieval_metrics(cosine_scores(pred, candidates), targets);
    const double n = static_cast<double>(plan.test.size());
    const double npool = static_cast<double>(pool.size());
    top1 += m.top1_pct * n;
    top5 += m.top5_pct * n;
    rank += m.rank_acc_pct * n;
    c1 += 100.0 / npool * n;
    c5 += 100.0 * std::min(5.0, npool) / npool * n;
    r.n_test += plan.test.size();
    r.n_candidates = std::max(r.n_candidates, pool.size());
  }
  const double n = static_cast<double>(r.n_test);
  r.top1_pct = top1 / n;
  r.top5_pct = top5 / n;
  r.rank_acc_pct = rank / n;
  r.top1_chance = c1 / n;
  r.top5_chance = c5 / n;

  ReportCell base = base_cell(TaskKind::retrieval, dataset, split_label(plans[0]), canonical_band(BandName::full), config);
  base.variant = nn::to_string(loss);
  base.n_test = r.n_test;
  if (plans.size() > 1) base.note = std::to_string(plans.size()) + " folds";
  const std::tuple<const char*, double, double> rows[] = {
      {"top1", r.top1_pct, r.top1_chance}, {"top5", r.top5_pct, r.top5_chance}, {"rank_acc", r.rank_acc_pct, 50.0}};
  for (const auto& [metric, value, chance] : rows) {
    ReportCell c = base;
    c.metric = metric;
    c.accuracy_pct = value;
    c.chance_pct = chance;
    r.cells.push_back(c);
  }
  return r;
}

std::vector<ReportCell> run_leave_subjects_out(std::span<const LabeledDataset> subjects, ValidationMode validation,
                                               const Band& band, const nn::TrainConfig& config,
                                               std::uint64_t split_seed) {
  if (subjects.empty()) throw ParameterError("leave_subjects_out: no subjects");
  std::vector<LabeledDataset> filtered;
  for (const auto& s : subjects) {
    if (s.channels() != subjects[0].channels() || s.timepoints() != subjects[0].timepoints() ||
        s.design().n_classes != subjects[0].design().n_classes) {
      throw ParameterError("leave_subjects_out: subjects differ in shape or class count");
    }
    filtered.push_back(apply_band(s, band));
  }
  const auto plans = leave_subjects_out(filtered, validation, split_seed);
  const auto offsets = subject_offsets(filtered);
  std::vector<int> labels;
  for (const auto& s : filtered) {
    const auto l = class_labels(s);
    labels.insert(labels.end(), l.begin(), l.end());
  }
  nn::TrainData inputs;
  inputs.size = labels.size();
  inputs.targets.classes = labels;
  const Eigen::Index width = static_cast<Eigen::Index>(filtered[0].channels()) * filtered[0].timepoints();
  const auto* fs = &filtered;
  const auto* off = &offsets;
  inputs.fill = [fs, off, width](std::span<const std::size_t> idx, nn::RowMatrix& out) {
    out.resize(static_cast<Eigen::Index>(idx.size()), width);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const auto k = static_cast<std::size_t>(std::upper_bound(off->begin(), off->end(), idx[i]) - off->begin()) - 1;
      (*fs)[k].copy_sample(idx[i] - (*off)[k], std::span<double>(out.row(static_cast<Eigen::Index>(i)).data(),
                                                                 static_cast<std::size_t>(width)));
    }
  };
  const auto model = make_cnn(filtered[0], filtered[0].design().n_classes);
  const double chance = chance_pct(static_cast<std::size_t>(filtered[0].design().n_classes));

  std::vector<ReportCell> cells;
  for (const auto& plan : plans) {
    nn::TrainConfig fc = config;
    fc.seed = derive_seed(config.seed, kFold, static_cast<std::uint64_t>(plan.fold_id));
    const auto r = train_and_classify(*model, inputs, plan, labels, fc);
    auto acc_on = [&](const std::vector<std::size_t>& rows) -> std::optional<double> {
      if (rows.empty()) return std::nullopt;
      return accuracy_pct(argmax_rows(nn::predict(*model, r.trained.params, inputs, rows)), pick(labels, rows));
    };
    ReportCell base = base_cell(TaskKind::tlc_eeg, filtered[0], split_label(plan), band, config);
    base.subject = plan.test_subjects.front();
    base.chance_pct = chance;
    const std::tuple<const char*, std::optional<double>, std::size_t> rows[] = {
        {"accuracy", r.accuracy_pct, plan.test.size()},
        {"train_acc", acc_on(plan.train), plan.train.size()},
        {"val_acc", acc_on(plan.val), plan.val.size()}};
    for (const auto& [metric, value, n] : rows) {
      ReportCell c = base;
      c.metric = metric;
      c.accuracy_pct = value;
      c.n_test = n;
      if (!value) c.status = "skipped";
      cells.push_back(c);
    }
  }
  return cells;
}

std::vector<ReportCell> run_tasks(const LabeledDataset& dataset, const Band& band, std::span<const TaskKind> tasks,
                                  const nn::TrainConfig& config, std::uint64_t split_seed) {
  auto wants = [&](TaskKind k) { return std::find(tasks.begin(), tasks.end(), k) != tasks.end(); };
  std::vector<ReportCell> cells;
  auto error_cell = [&](TaskKind k, const std::string& split, const std::exception& e) {
    ReportCell c = base_cell(k, dataset, split, band, config);
    c.status = "error";
    c.note = e.what();
    cells.push_back(c);
  };
  if (!band_available(band, dataset.fs())) {
    for (auto k : tasks) {
      if (k == TaskKind::zero_shot || k == TaskKind::retrieval) continue;
      ReportCell c = base_cell(k, dataset, k == TaskKind::tlc_eeg_wodo ? "leave_domains_out" : "leave_samples_out",
                               band, config);
      c.status = "unavailable";
      c.note = "band reaches Nyquist at " + std::to_string(static_cast<int>(dataset.fs())) + " Hz";
      cells.push_back(c);
    }
    return cells;
  }

  const bool need_lso = wants(TaskKind::dlc) || wants(TaskKind::tlc_df) || wants(TaskKind::tlc_eeg);
  std::optional<SplitPlan> lso;
  if (need_lso) {
    try {
      lso = leave_samples_out(dataset, {}, split_seed);
    } catch (const std::exception& e) {
      for (auto k : {TaskKind::dlc, TaskKind::tlc_df, TaskKind::tlc_eeg}) {
        if (wants(k)) error_cell(k, "leave_samples_out", e);
      }
    }
  }
  std::optional<DlcOutcome> dlc;
  if (lso && (wants(TaskKind::dlc) || wants(TaskKind::tlc_df))) {
    try {
      dlc = run_dlc(dataset, *lso, band, config);
      if (wants(TaskKind::dlc)) cells.push_back(dlc->cell);
    } catch (const std::exception& e) {
      error_cell(TaskKind::dlc, "leave_samples_out", e);
    }
  }
  if (lso && wants(TaskKind::tlc_df)) {
    if (dlc) {
      try {
        cells.push_back(run_tlc_df(&*dlc, config));
      } catch (const std::exception& e) {
        error_cell(TaskKind::tlc_df, "leave_samples_out", e);
      }
    } else {
      error_cell(TaskKind::tlc_df, "leave_samples_out", ParameterError("upstream DLC model unavailable"));
    }
  }
  if (lso && wants(TaskKind::tlc_eeg)) {
    if (dlc && class_is_domain(dataset.design())) {
      ReportCell c = dlc->cell;
      c.task = to_string(TaskKind::tlc_eeg);
      c.note = "class equals domain; same model as DLC";
      cells.push_back(c);
    } else {
      try {
        cells.push_back(run_tlc_eeg(dataset, *lso, band, config));
      } catch (const std::exception& e) {
        error_cell(TaskKind::tlc_eeg, "leave_samples_out", e);
      }
    }
  }
  if (wants(TaskKind::tlc_eeg_wodo)) {
    if (class_is_domain(dataset.design())) {
      ReportCell c = base_cell(TaskKind::tlc_eeg_wodo, dataset, "leave_domains_out", band, config);
      c.chance_pct = chance_pct(static_cast<std::size_t>(dataset.design().n_classes));
      c.status = "skipped";
      c.note = "each class owns a single domain; no domain can be held out per class";
      cells.push_back(c);
    } else {
      try {
        const auto folds = leave_domains_out(dataset, split_seed);
        cells.push_back(run_tlc_eeg_wodo(dataset, folds, band, config));
      } catch (const std::exception& e) {
        error_cell(TaskKind::tlc_eeg_wodo, "leave_domains_out", e);
      }
    }
  }
  return cells;
}

std::vector<ReportCell> run_band_audit(const LabeledDataset& dataset, std::span<const Band> bands,
                                       std::span<const TaskKind> tasks, const nn::TrainConfig& config,
                                       std::uint64_t split_seed) {
  std::vector<ReportCell> cells;
  for (const auto& band : bands) {
    auto c = run_tasks(dataset, band, tasks, config, split_seed);
    cells.insert(cells.end(), c.begin(), c.end());
  }
  return cells;
}

std::vector<SweepPoint> sweep_domain_strength(const SurrogateSpec& base, const DesignTemplate& design,
                                              std::span<const double> strengths, TaskKind task,
                                              const nn::TrainConfig& config, const SignatureScale& scale,
                                              std::span<const std::uint64_t> seeds, int jobs) {
  if (strengths.empty() || seeds.empty()) throw ParameterError("sweep: need strengths and seeds");
  for (std::size_t i = 0; i < strengths.size(); ++i) {
    if (!(strengths[i] >= 0.0 && strengths[i] <= 1.0)) throw ParameterError("sweep: strengths must lie in [0, 1]");
    if (i > 0 && !(strengths[i] > strengths[i - 1])) throw ParameterError("sweep: strengths must be ascending");
  }
  if (task != TaskKind::dlc && task != TaskKind::tlc_df && task != TaskKind::tlc_eeg) {
    throw ParameterError("sweep: task must be DLC, TLC-DF or TLC-EEG");
  }
  const std::size_t n_seeds = seeds.size();
  std::vector<double> acc(strengths.size() * n_seeds);
  std::vector<double> chance(strengths.size());
  parallel_for(acc.size(), jobs, [&](std::size_t k) {
    const std::size_t g = k / n_seeds;
    const std::uint64_t seed = seeds[k % n_seeds];
    const auto ds = build_surrogate_dataset(base, design, strengths[g], scale, 0, seed);
    nn::TrainConfig tc = config;
    tc.seed = derive_seed(config.seed, seed);
    const TaskKind tasks[] = {task};
    const auto cells = run_tasks(ds, canonical_band(BandName::full), tasks, tc, derive_seed(seed, kSweepSplit));
    if (cells.empty() || !cells.front().accuracy_pct) {
      throw NumericalError("sweep: task failed at strength " + std::to_string(strengths[g]) +
                           (cells.empty() ? std::string() : ": " + cells.front().note));
    }
    acc[k] = *cells.front().accuracy_pct;
    chance[g] = *cells.front().chance_pct;
  });
  std::vector<SweepPoint> out;
  for (std::size_t g = 0; g < strengths.size(); ++g) {
    SweepPoint p;
    p.strength = strengths[g];
    p.accuracy_pct.assign(acc.begin() + static_cast<std::ptrdiff_t>(g * n_seeds),
                          acc.begin() + static_cast<std::ptrdiff_t>((g + 1) * n_seeds));
    p.mean_pct = mean(p.accuracy_pct);
    p.sem_pct = sem(p.accuracy_pct);
    p.chance_pct = chance[g];
    out.push_back(std::move(p));
  }
  return out;
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!first) first = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

} // namespace leakaudit
