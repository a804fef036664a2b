#include "leakaudit/splits.hpp"

#include "leakaudit/errors.hpp"
#include "leakaudit/random.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace leakaudit {

namespace {

enum SeedTag : std::uint64_t { kDomainShuffle = 11, kClassShuffle = 12, kPool = 13, kKfold = 14, kZeroShot = 15 };

void sort_plan(SplitPlan& p) {
  std::sort(p.train.begin(), p.train.end());
  std::sort(p.val.begin(), p.val.end());
  std::sort(p.test.begin(), p.test.end());
  std::sort(p.test_domains.begin(), p.test_domains.end());
}

// Shuffles `pool` and moves floor(n / 10) of it into val, the rest into train.
void split_train_val(std::vector<std::size_t> pool, std::uint64_t seed, SplitPlan& plan) {
  Rng rng(seed);
  shuffle_in_place(pool, rng);
  const std::size_t n_val = pool.size() / 10;
  plan.val.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_val));
  plan.train.assign(pool.begin() + static_cast<std::ptrdiff_t>(n_val), pool.end());
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << v[i];
  return os.str();
}

template <class T>
std::vector<T> split_numbers(const std::string& s) {
  std::istringstream is(s);
  std::vector<T> out;
  T v{};
  while (is >> v) out.push_back(v);
  if (!is.eof()) throw ParameterError("split plan: bad index list");
  return out;
}

} // namespace

std::string to_string(SplitStrategy s) {
  switch (s) {
    case SplitStrategy::leave_samples_out: return "leave_samples_out";
    case SplitStrategy::leave_domains_out: return "leave_domains_out";
    case SplitStrategy::leave_subjects_out: return "leave_subjects_out";
    case SplitStrategy::zero_shot: return "zero_shot";
    case SplitStrategy::domain_kfold: return "domain_kfold";
  }
  return "unknown";
}

SplitStrategy split_strategy_from_string(const std::string& name) {
  for (auto s : {SplitStrategy::leave_samples_out, SplitStrategy::leave_domains_out, SplitStrategy::leave_subjects_out,
                 SplitStrategy::zero_shot, SplitStrategy::domain_kfold}) {
    if (to_string(s) == name) return s;
  }
  throw ParameterError("unknown split strategy '" + name + "'");
}

std::string to_string(ValidationMode m) { return m == ValidationMode::samples ? "samples" : "subjects"; }
std::string to_string(ZeroShotMode m) { return m == ZeroShotMode::first_six ? "first_six" : "random"; }

ZeroShotMode zero_shot_mode_from_string(const std::string& name) {
  if (name == "first_six") return ZeroShotMode::first_six;
  if (name == "random") return ZeroShotMode::random;
  throw ParameterError("unknown zero-shot mode '" + name + "'");
}

SplitPlan leave_samples_out(const LabeledDataset& dataset, SplitRatios ratios, std::uint64_t seed) {
  if (ratios.train < 1 || ratios.val < 0 || ratios.test < 1) throw ParameterError("split: invalid ratios");
  const int total = ratios.train + ratios.val + ratios.test;
  std::map<int, std::vector<std::size_t>> by_domain;
  for (std::size_t i = 0; i < dataset.size(); ++i) by_domain[dataset.sample(i).domain_id].push_back(i);

  SplitPlan plan;
  plan.strategy = SplitStrategy::leave_samples_out;
  plan.seed = seed;
  for (auto& [domain, idx] : by_domain) {
    if (static_cast<int>(idx.size()) < total) {
      throw ParameterError("leave_samples_out: domain " + std::to_string(domain) + " has " +
                           std::to_string(idx.size()) + " samples, need at least " + std::to_string(total));
    }
    Rng rng(derive_seed(seed, kDomainShuffle, static_cast<std::uint64_t>(domain)));
    shuffle_in_place(idx, rng);
    const std::size_t n_test = idx.size() * static_cast<std::size_t>(ratios.test) / static_cast<std::size_t>(total);
    const std::size_t n_val = idx.size() * static_cast<std::size_t>(ratios.val) / static_cast<std::size_t>(total);
    plan.test.insert(plan.test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    plan.val.insert(plan.val.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_test),
                    idx.begin() + static_cast<std::ptrdiff_t>(n_test + n_val));
    plan.train.insert(plan.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_test + n_val), idx.end());
  }
  sort_plan(plan);
  return plan;
}

std::vector<SplitPlan> leave_domains_out(const LabeledDataset& dataset, std::uint64_t seed) {
  std::map<int, std::set<int>> domains_by_class;
  for (const auto& s : dataset.samples()) domains_by_class[s.class_id].insert(s.domain_id);
  if (domains_by_class.empty()) throw ParameterError("leave_domains_out: empty dataset");

  std::map<int, std::vector<int>> order;
  std::size_t n_folds = 0;
  for (const auto& [cls, domains] : domains_by_class) {
    if (domains.size() < 2) {
      throw ParameterError("leave_domains_out: class " + std::to_string(cls) +
                           " has a single domain; its samples cannot be held out by domain");
    }
    std::vector<int> v(domains.begin(), domains.end());
    Rng rng(derive_seed(seed, kClassShuffle, static_cast<std::uint64_t>(cls)));
    shuffle_in_place(v, rng);
    n_folds = std::max(n_folds, v.size());
    order[cls] = std::move(v);
  }

  std::vector<SplitPlan> folds;
  for (std::size_t f = 0; f < n_folds; ++f) {
    SplitPlan plan;
    plan.strategy = SplitStrategy::leave_domains_out;
    plan.seed = seed;
    plan.fold_id = static_cast<int>(f);
    std::set<int> held;
    for (const auto& [cls, v] : order) held.insert(v[f % v.size()]);
    plan.test_domains.assign(held.begin(), held.end());
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      (held.count(dataset.sample(i).domain_id) ? plan.test : pool).push_back(i);
    }
    split_train_val(std::move(pool), derive_seed(seed, kPool, f), plan);
    sort_plan(plan);
    folds.push_back(std::move(plan));
  }
  return folds;
}

std::vector<SplitPlan> domain_kfold(const LabeledDataset& dataset, int k, std::uint64_t seed) {
  std::set<int> domain_set;
  for (const auto& s : dataset.samples()) domain_set.insert(s.domain_id);
  if (k < 2 || k > static_cast<int>(domain_set.size())) {
    throw ParameterError("domain_kfold: k must lie in [2, number of domains]");
  }
  std::vector<int> domains(domain_set.begin(), domain_set.end());
  Rng rng(derive_seed(seed, kKfold));
  shuffle_in_place(domains, rng);

  std::vector<SplitPlan> folds;
  for (int f = 0; f < k; ++f) {
    SplitPlan plan;
    plan.strategy = SplitStrategy::domain_kfold;
    plan.seed = seed;
    plan.fold_id = f;
    std::set<int> held;
    for (std::size_t i = static_cast<std::size_t>(f); i < domains.size(); i += static_cast<std::size_t>(k)) {
      held.insert(domains[i]);
    }
    plan.test_domains.assign(held.begin(), held.end());
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      (held.count(dataset.sample(i).domain_id) ? plan.test : pool).push_back(i);
    }
    split_train_val(std::move(pool), derive_seed(seed, kPool, static_cast<std::uint64_t>(f)), plan);
    sort_plan(plan);
    folds.push_back(std::move(plan));
  }
  return folds;
}

std::vector<std::size_t> subject_offsets(std::span<const LabeledDataset> datasets) {
  std::vector<std::size_t> offsets;
  std::size_t acc = 0;
  for (const auto& d : datasets) {
    offsets.push_back(acc);
    acc += d.size();
  }
  return offsets;
}

std::vector<SplitPlan> leave_subjects_out(std::span<const LabeledDataset> datasets, ValidationMode validation,
                                          std::uint64_t seed) {
  const std::size_t n_subjects = datasets.size();
  const std::size_t min_subjects = validation == ValidationMode::subjects ? 3 : 2;
  if (n_subjects < min_subjects) {
    throw ParameterError("leave_subjects_out: need at least " + std::to_string(min_subjects) + " subjects, have " +
                         std::to_string(n_subjects));
  }
  std::set<int> ids;
  for (const auto& d : datasets) ids.insert(d.subject_id());
  if (ids.size() != n_subjects) throw ParameterError("leave_subjects_out: subject ids must be distinct");

  const auto offsets = subject_offsets(datasets);
  auto indices_of = [&](std::size_t s) {
    std::vector<std::size_t> v(datasets[s].size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = offsets[s] + i;
    return v;
  };

  std::vector<SplitPlan> folds;
  for (std::size_t f = 0; f < n_subjects; ++f) {
    SplitPlan plan;
    plan.strategy = SplitStrategy::leave_subjects_out;
    plan.validation = validation;
    plan.seed = seed;
    plan.fold_id = static_cast<int>(f);
    plan.test = indices_of(f);
    plan.test_subjects = {datasets[f].subject_id()};
    const std::size_t val_subject = (f + 1) % n_subjects;
    std::vector<std::size_t> pool;
    for (std::size_t s = 0; s < n_subjects; ++s) {
      if (s == f) continue;
      const auto idx = indices_of(s);
      if (validation == ValidationMode::subjects && s == val_subject) {
        plan.val.insert(plan.val.end(), idx.begin(), idx.end());
        plan.val_subjects.push_back(datasets[s].subject_id());
      } else {
        pool.insert(pool.end(), idx.begin(), idx.end());
        plan.train_subjects.push_back(datasets[s].subject_id());
      }
    }
    if (validation == ValidationMode::samples) {
      split_train_val(std::move(pool), derive_seed(seed, kPool, f), plan);
    } else {
      plan.train = std::move(pool);
    }
    sort_plan(plan);
    folds.push_back(std::move(plan));
  }
  return folds;
}

SplitPlan zero_shot_split(const LabeledDataset& dataset, ZeroShotMode mode, int n_test_classes, std::uint64_t seed) {
  if (dataset.design().kind != TemplateKind::cvpr_like) {
    throw ParameterError("zero_shot_split: requires a cvpr_like dataset, got " + to_string(dataset.design().kind));
  }
  auto order = dataset.domain_order();
  if (n_test_classes < 1 || n_test_classes >= static_cast<int>(order.size())) {
    throw ParameterError("zero_shot_split: n_test_classes must leave at least one training class");
  }
  std::vector<int> classes;
  for (int d : order) classes.push_back(dataset.design().class_map[static_cast<std::size_t>(d)]);
  if (mode == ZeroShotMode::random) {
    Rng rng(derive_seed(seed, kZeroShot));
    shuffle_in_place(classes, rng);
  }
  std::set<int> held(classes.begin(), classes.begin() + n_test_classes);

  SplitPlan plan;
  plan.strategy = SplitStrategy::zero_shot;
  plan.zero_shot_mode = mode;
  plan.seed = seed;
  std::set<int> held_domains;
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& s = dataset.sample(i);
    if (held.count(s.class_id)) {
      plan.test.push_back(i);
      held_domains.insert(s.domain_id);
    } else {
      pool.push_back(i);
    }
  }
  plan.test_domains.assign(held_domains.begin(), held_domains.end());
  split_train_val(std::move(pool), derive_seed(seed, kPool), plan);
  sort_plan(plan);
  return plan;
}

std::string serialize(const SplitPlan& p) {
  std::ostringstream os;
  os << "leakaudit-split 1\n";
  os << "strategy=" << to_string(p.strategy) << "\n";
  os << "validation=" << (p.validation ? to_string(*p.validation) : "-") << "\n";
  os << "zero_shot_mode=" << (p.zero_shot_mode ? to_string(*p.zero_shot_mode) : "-") << "\n";
  os << "seed=" << p.seed << "\n";
  os << "fold_id=" << p.fold_id << "\n";
  os << "test_domains=" << join(p.test_domains) << "\n";
  os << "train_subjects=" << join(p.train_subjects) << "\n";
  os << "val_subjects=" << join(p.val_subjects) << "\n";
  os << "test_subjects=" << join(p.test_subjects) << "\n";
  os << "train=" << join(p.train) << "\n";
  os << "val=" << join(p.val) << "\n";
  os << "test=" << join(p.test) << "\n";
  return os.str();
}

SplitPlan parse_split_plan(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != "leakaudit-split 1") throw ParameterError("split plan: bad header");
  std::map<std::string, std::string> kv;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParameterError("split plan: expected key=value, got '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto need = [&](const std::string& k) -> const std::string& {
    auto it = kv.find(k);
    if (it == kv.end()) throw ParameterError("split plan: missing '" + k + "'");
    return it->second;
  };
  SplitPlan p;
  p.strategy = split_strategy_from_string(need("strategy"));
  if (const auto& v = need("validation"); v != "-") {
    p.validation = v == "samples" ? ValidationMode::samples : ValidationMode::subjects;
  }
  if (const auto& v = need("zero_shot_mode"); v != "-") p.zero_shot_mode = zero_shot_mode_from_string(v);
  p.seed = std::stoull(need("seed"));
  p.fold_id = std::stoi(need("fold_id"));
  p.test_domains = split_numbers<int>(need("test_domains"));
  p.train_subjects = split_numbers<int>(need("train_subjects"));
  p.val_subjects = split_numbers<int>(need("val_subjects"));
  p.test_subjects = split_numbers<int>(need("test_subjects"));
  p.train = split_numbers<std::size_t>(need("train"));
  p.val = split_numbers<std::size_t>(need("val"));
  p.test = split_numbers<std::size_t>(need("test"));
  return p;
}

} // namespace leakaudit
