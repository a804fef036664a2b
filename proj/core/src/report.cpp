#include "leakaudit/report.hpp"

#include "leakaudit/errors.hpp"
#include "leakaudit/stats.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace leakaudit {

using nlohmann::json;

namespace {

const char* const kBandOrder[] = {"full", "delta", "theta", "alpha", "beta", "low_gamma", "high_gamma"};

bool is_domain_held_out(const std::string& split) {
  return split == "leave_domains_out" || split == "domain_kfold";
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> get_opt(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

std::string fmt_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_fixed(std::optional<double> v, int digits = 2) {
  if (!v) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, *v);
  return buf;
}

// Templates in first-seen order among aggregate cells matching `pred`.
template <class Pred>
std::vector<std::string> templates_of(const AuditReport& r, Pred pred) {
  std::vector<std::string> out;
  for (const auto& c : r.cells) {
    if (c.aggregate && pred(c) && std::find(out.begin(), out.end(), c.template_name) == out.end()) {
      out.push_back(c.template_name);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

template <class Pred>
const ReportCell* find_aggregate(const AuditReport& r, Pred pred) {
  for (const auto& c : r.cells) {
    if (c.aggregate && pred(c)) return &c;
  }
  return nullptr;
}

std::optional<Estimate> estimate_of(const ReportCell* c) {
  if (!c || !c->accuracy_pct) return std::nullopt;
  return Estimate{*c->accuracy_pct, c->sem_pct};
}

std::optional<Estimate> chance_of(const ReportCell* c) {
  if (!c || !c->chance_pct) return std::nullopt;
  return Estimate{*c->chance_pct, std::nullopt};
}

} // namespace

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string cell_key(const ReportCell& c) {
  return c.task + "|" + c.template_name + "|" + c.split + "|" + c.band + "|" + c.variant + "|" + c.metric;
}

void finalize(AuditReport& report) {
  std::vector<ReportCell> units;
  for (auto& c : report.cells) {
    if (!c.aggregate) units.push_back(c);
  }
  std::vector<std::string> order;
  std::map<std::string, std::vector<const ReportCell*>> groups;
  for (const auto& c : units) {
    const auto key = cell_key(c);
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(&c);
  }

  std::vector<ReportCell> aggregates;
  for (const auto& key : order) {
    const auto& members = groups[key];
    ReportCell a = *members.front();
    a.aggregate = true;
    a.subject = -1;
    a.seed = 0;
    a.note.clear();
    a.sem_pct.reset();
    a.p_value.reset();
    a.p_bonferroni.reset();
    std::vector<double> acc;
    std::size_t n_test = 0;
    std::set<std::string> notes;
    for (const auto* m : members) {
      if (m->status == "ok" && m->accuracy_pct) {
        acc.push_back(*m->accuracy_pct);
        n_test += m->n_test;
        if (m->chance_pct) a.chance_pct = m->chance_pct;
      }
      if (!m->note.empty()) notes.insert(m->note);
    }
    a.n_units = acc.size();
    a.n_test = n_test;
    if (acc.empty()) {
      a.accuracy_pct.reset();
      a.status = members.front()->status == "ok" ? "error" : members.front()->status;
    } else {
      a.status = "ok";
      a.accuracy_pct = mean(acc);
      if (acc.size() >= 2) a.sem_pct = sem(acc);
      if (a.chance_pct && acc.size() >= 2) {
        try {
          a.p_value = one_sample_ttest(acc, *a.chance_pct, Alternative::greater).p;
        } catch (const NumericalError&) {
          notes.insert("zero variance across units; no p-value");
        }
      }
    }
    for (const auto& n : notes) a.note += (a.note.empty() ? "" : "; ") + n;
    aggregates.push_back(std::move(a));
  }

  std::vector<double> ps;
  for (const auto& a : aggregates) {
    if (a.p_value) ps.push_back(*a.p_value);
  }
  if (!ps.empty()) {
    const auto adj = bonferroni(ps);
    std::size_t k = 0;
    for (auto& a : aggregates) {
      if (a.p_value) a.p_bonferroni = adj[k++];
    }
  }
  units.insert(units.end(), aggregates.begin(), aggregates.end());
  report.cells = std::move(units);
}

AuditReport merge(const AuditReport& a, const AuditReport& b) {
  AuditReport out;
  out.meta = a.meta;
  out.meta.config_hash = a.meta.config_hash == b.meta.config_hash ? a.meta.config_hash
                                                                   : fnv1a_hex(a.meta.config_hash + b.meta.config_hash);
  for (auto s : b.meta.seeds) {
    if (std::find(out.meta.seeds.begin(), out.meta.seeds.end(), s) == out.meta.seeds.end()) out.meta.seeds.push_back(s);
  }
  for (const auto* r : {&a, &b}) {
    for (const auto& c : r->cells) {
      if (!c.aggregate) out.cells.push_back(c);
    }
  }
  finalize(out);
  return out;
}

std::string to_json(const AuditReport& report, bool include_timestamp) {
  json j;
  j["meta"]["version"] = report.meta.version;
  j["meta"]["config_hash"] = report.meta.config_hash;
  j["meta"]["seeds"] = report.meta.seeds;
  if (include_timestamp) j["meta"]["timestamp"] = report.meta.timestamp;
  j["cells"] = json::array();
  for (const auto& c : report.cells) {
    j["cells"].push_back({{"task", c.task},
                          {"template", c.template_name},
                          {"split", c.split},
                          {"band", c.band},
                          {"variant", c.variant},
                          {"metric", c.metric},
                          {"subject", c.subject},
                          {"aggregate", c.aggregate},
                          {"accuracy_pct", opt(c.accuracy_pct)},
                          {"chance_pct", opt(c.chance_pct)},
                          {"sem_pct", opt(c.sem_pct)},
                          {"p_value", opt(c.p_value)},
                          {"p_bonferroni", opt(c.p_bonferroni)},
                          {"n_test", c.n_test},
                          {"n_units", c.n_units},
                          {"seed", c.seed},
                          {"status", c.status},
                          {"note", c.note}});
  }
  return j.dump(2) + "\n";
}

AuditReport report_from_json(std::string_view text) {
  AuditReport r;
  try {
    const json j = json::parse(text);
    const auto& m = j.at("meta");
    r.meta.version = m.at("version").get<std::string>();
    r.meta.config_hash = m.at("config_hash").get<std::string>();
    r.meta.seeds = m.at("seeds").get<std::vector<std::uint64_t>>();
    if (m.contains("timestamp")) r.meta.timestamp = m.at("timestamp").get<std::string>();
    for (const auto& c : j.at("cells")) {
      ReportCell cell;
      cell.task = c.at("task").get<std::string>();
      cell.template_name = c.at("template").get<std::string>();
      cell.split = c.at("split").get<std::string>();
      cell.band = c.value("band", std::string("full"));
      cell.variant = c.value("variant", std::string());
      cell.metric = c.value("metric", std::string("accuracy"));
      cell.subject = c.at("subject").get<int>();
      cell.aggregate = c.value("aggregate", cell.subject < 0);
      cell.accuracy_pct = get_opt(c, "accuracy_pct");
      cell.chance_pct = get_opt(c, "chance_pct");
      cell.sem_pct = get_opt(c, "sem_pct");
      cell.p_value = get_opt(c, "p_value");
      cell.p_bonferroni = get_opt(c, "p_bonferroni");
      cell.n_test = c.at("n_test").get<std::size_t>();
      cell.n_units = c.value("n_units", std::size_t{1});
      cell.seed = c.value("seed", std::uint64_t{0});
      cell.status = c.value("status", std::string("ok"));
      cell.note = c.value("note", std::string());
      if (cell.accuracy_pct && !(*cell.accuracy_pct >= 0.0 && *cell.accuracy_pct <= 100.0)) {
        throw FormatError(FormatError::Kind::malformed_header, "report: accuracy outside [0, 100]");
      }
      r.cells.push_back(std::move(cell));
    }
  } catch (const json::exception& e) {
    throw FormatError(FormatError::Kind::malformed_header, std::string("malformed report: ") + e.what());
  }
  return r;
}

void save_report(const AuditReport& report, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write report " + path.string());
  os << to_json(report);
  if (!os) throw IoError("short write to " + path.string());
}

AuditReport load_report(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open report " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return report_from_json(ss.str());
}

std::vector<LeakageWarning> leakage_warnings(const AuditReport& report, double threshold_pct) {
  std::vector<LeakageWarning> out;
  for (const auto& lso : report.cells) {
    if (!lso.aggregate || lso.split != "leave_samples_out" || !lso.accuracy_pct || lso.metric != "accuracy") continue;
    for (const auto& ldo : report.cells) {
      if (!ldo.aggregate || !is_domain_held_out(ldo.split) || !ldo.accuracy_pct) continue;
      const bool task_match = ldo.task == lso.task || (lso.task == "TLC-EEG" && ldo.task == "TLC-EEG-woDO");
      if (!task_match || ldo.template_name != lso.template_name || ldo.band != lso.band ||
          ldo.variant != lso.variant || ldo.metric != lso.metric) {
        continue;
      }
      if (*lso.accuracy_pct - *ldo.accuracy_pct > threshold_pct) {
        out.push_back({lso.task, lso.template_name, lso.band, lso.variant, ldo.split, *lso.accuracy_pct,
                       *ldo.accuracy_pct});
      }
    }
  }
  return out;
}

std::string significance_stars(std::optional<double> p) {
  if (!p) return "";
  if (*p < 0.001) return "***";
  if (*p < 0.01) return "**";
  if (*p < 0.05) return "*";
  return "n.s.";
}

std::string summarize(const AuditReport& report, double threshold_pct) {
  std::ostringstream os;
  std::size_t units = 0;
  for (const auto& c : report.cells) units += !c.aggregate;
  os << "leakaudit report " << report.meta.version << "  config " << report.meta.config_hash << "  unit cells "
     << units << "\n";
  for (const auto& c : report.cells) {
    if (!c.aggregate) continue;
    os << c.task << "  " << c.template_name << "  " << c.split << "  " << c.band;
    if (!c.variant.empty()) os << "  " << c.variant;
    if (c.metric != "accuracy") os << "  [" << c.metric << "]";
    if (c.status != "ok") {
      os << "  " << c.status;
      if (!c.note.empty()) os << " (" << c.note << ")";
      os << "\n";
      continue;
    }
    os << "  " << fmt_fixed(c.accuracy_pct);
    if (c.sem_pct) os << " +/- " << fmt_fixed(c.sem_pct) << " SEM";
    os << "  chance " << fmt_fixed(c.chance_pct) << "  n=" << c.n_units;
    if (c.p_value) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.3g", *c.p_value);
      os << "  p=" << buf << " " << significance_stars(c.p_value);
    }
    os << "\n";
  }
  for (const auto& w : leakage_warnings(report, threshold_pct)) {
    os << "LEAKAGE WARNING: " << w.task << " on " << w.template_name << " (" << w.band;
    if (!w.variant.empty()) os << ", " << w.variant;
    os << "): leave_samples_out " << fmt_fixed(w.lso_pct) << " vs " << w.held_out_split << " "
       << fmt_fixed(w.held_out_pct) << "\n";
  }
  return os.str();
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + "\"";
}

std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        out.back() += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.emplace_back();
    } else {
      out.back() += ch;
    }
  }
  if (quoted) throw FormatError(FormatError::Kind::malformed_header, "grid: unterminated quote");
  return out;
}

} // namespace

void write_grid_csv(const Grid& g, std::ostream& os) {
  os << "row";
  for (const auto& c : g.columns) os << "," << csv_field(c) << "," << csv_field(c + "_sem");
  os << "\n";
  for (std::size_t r = 0; r < g.rows.size(); ++r) {
    os << csv_field(g.rows[r]);
    for (std::size_t c = 0; c < g.columns.size(); ++c) {
      const auto& v = g.values[r][c];
      os << "," << (v ? fmt_number(v->mean) : "-") << "," << (v && v->sem ? fmt_number(*v->sem) : "-");
    }
    os << "\n";
  }
}

Grid read_grid_csv(std::istream& is, std::string name) {
  const auto split = csv_split;
  auto number = [](const std::string& s) -> std::optional<double> {
    if (s == "-") return std::nullopt;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty()) throw FormatError(FormatError::Kind::malformed_header, "grid: bad number '" + s + "'");
    return v;
  };
  Grid g;
  g.name = std::move(name);
  std::string line;
  if (!std::getline(is, line)) throw FormatError(FormatError::Kind::malformed_header, "grid: empty file");
  const auto header = split(line);
  if (header.empty() || header[0] != "row" || header.size() % 2 != 1) {
    throw FormatError(FormatError::Kind::malformed_header, "grid: bad header");
  }
  for (std::size_t i = 1; i < header.size(); i += 2) g.columns.push_back(header[i]);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != header.size()) throw FormatError(FormatError::Kind::length_mismatch, "grid: ragged row");
    g.rows.push_back(f[0]);
    std::vector<std::optional<Estimate>> row;
    for (std::size_t i = 1; i < f.size(); i += 2) {
      const auto m = number(f[i]);
      const auto s = number(f[i + 1]);
      row.push_back(m ? std::optional<Estimate>(Estimate{*m, s}) : std::nullopt);
    }
    g.values.push_back(std::move(row));
  }
  return g;
}

void save_grid_csv(const Grid& grid, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  write_grid_csv(grid, os);
}

Grid load_grid_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  return read_grid_csv(is, path.stem().string());
}

Grid table1_grid(const AuditReport& r) {
  static const char* const tasks[] = {"DLC", "TLC-DF", "TLC-EEG", "TLC-EEG-woDO"};
  auto relevant = [](const ReportCell& c) {
    return c.band == "full" && c.metric == "accuracy" &&
           (c.task == "DLC" || c.task == "TLC-DF" || c.task == "TLC-EEG" || c.task == "TLC-EEG-woDO");
  };
  Grid g;
  g.name = "table1";
  g.columns = templates_of(r, relevant);
  g.rows = {"DLC", "DLC (chance level)", "TLC-DF", "TLC-EEG", "TLC-EEG-woDO", "TLC (chance level)"};
  g.values.assign(g.rows.size(), std::vector<std::optional<Estimate>>(g.columns.size()));
  for (std::size_t c = 0; c < g.columns.size(); ++c) {
    const auto& tpl = g.columns[c];
    auto cell = [&](const std::string& task) {
      return find_aggregate(r, [&](const ReportCell& x) {
        const bool split_ok = task == "TLC-EEG-woDO" ? is_domain_held_out(x.split) : x.split == "leave_samples_out";
        return relevant(x) && x.task == task && x.template_name == tpl && split_ok;
      });
    };
    g.values[0][c] = estimate_of(cell(tasks[0]));
    g.values[1][c] = chance_of(cell(tasks[0]));
    g.values[2][c] = estimate_of(cell(tasks[1]));
    g.values[3][c] = estimate_of(cell(tasks[2]));
    g.values[4][c] = estimate_of(cell(tasks[3]));
    const ReportCell* tlc = cell(tasks[2]);
    g.values[5][c] = chance_of(tlc ? tlc : cell(tasks[3]));
  }
  return g;
}

Grid zero_shot_grid(const AuditReport& r) {
  auto relevant = [](const ReportCell& c) { return c.task == "ZERO-SHOT"; };
  Grid g;
  g.name = "table2";
  g.rows = {"Acc_near", "Acc_7th", "Acc_7th (chance level)"};
  for (const auto& tpl : templates_of(r, relevant)) {
    for (const char* mode : {"first_six", "random"}) g.columns.push_back(tpl + " " + mode);
  }
  g.values.assign(g.rows.size(), std::vector<std::optional<Estimate>>(g.columns.size()));
  for (std::size_t c = 0; c < g.columns.size(); ++c) {
    const auto sp = g.columns[c].find(' ');
    const auto tpl = g.columns[c].substr(0, sp);
    const auto split = "zero_shot:" + g.columns[c].substr(sp + 1);
    auto cell = [&](const char* metric) {
      return find_aggregate(r, [&](const ReportCell& x) {
        return relevant(x) && x.template_name == tpl && x.split == split && x.metric == metric && x.band == "full";
      });
    };
    g.values[0][c] = estimate_of(cell("acc_near"));
    g.values[1][c] = estimate_of(cell("acc_7th"));
    g.values[2][c] = chance_of(cell("acc_7th"));
  }
  return g;
}

Grid retrieval_grid(const AuditReport& r) {
  Grid g;
  g.name = "table3";
  g.rows = {"Top1 Acc", "Top5 Acc", "Rank Acc", "Top1 (chance level)", "Top5 (chance level)", "Rank (chance level)"};
  for (const auto& c : r.cells) {
    if (!c.aggregate || c.task != "RETRIEVAL" || c.band != "full") continue;
    const auto col = c.template_name + " " + c.variant + " " + c.split;
    if (std::find(g.columns.begin(), g.columns.end(), col) == g.columns.end()) g.columns.push_back(col);
  }
  std::sort(g.columns.begin(), g.columns.end());
  g.values.assign(g.rows.size(), std::vector<std::optional<Estimate>>(g.columns.size()));
  static const char* const metrics[] = {"top1", "top5", "rank_acc"};
  for (std::size_t c = 0; c < g.columns.size(); ++c) {
    for (std::size_t m = 0; m < 3; ++m) {
      const ReportCell* cell = find_aggregate(r, [&](const ReportCell& x) {
        return x.task == "RETRIEVAL" && x.band == "full" && x.metric == metrics[m] &&
               x.template_name + " " + x.variant + " " + x.split == g.columns[c];
      });
      g.values[m][c] = estimate_of(cell);
      g.values[m + 3][c] = chance_of(cell);
    }
  }
  return g;
}

Grid subjects_grid(const AuditReport& r) {
  auto relevant = [](const ReportCell& c) {
    return c.split.rfind("leave_subjects_out:", 0) == 0 && c.band == "full";
  };
  Grid g;
  g.name = "table5";
  g.columns = templates_of(r, relevant);
  static const std::pair<const char*, const char*> modes[] = {{"samples", "leave-samples-out"},
                                                             {"subjects", "leave-subjects-out"}};
  static const std::pair<const char*, const char*> parts[] = {
      {"train_acc", "Training"}, {"val_acc", "validation"}, {"accuracy", "Test"}};
  for (const auto& [mode, label] : modes) {
    for (const auto& [metric, part] : parts) g.rows.push_back(std::string(label) + " " + part);
    g.rows.push_back(std::string(label) + " Chance level");
  }
  g.values.assign(g.rows.size(), std::vector<std::optional<Estimate>>(g.columns.size()));
  for (std::size_t c = 0; c < g.columns.size(); ++c) {
    std::size_t row = 0;
    for (const auto& [mode, label] : modes) {
      const std::string split = std::string("leave_subjects_out:") + mode;
      const ReportCell* test = nullptr;
      for (const auto& [metric, part] : parts) {
        const ReportCell* cell = find_aggregate(r, [&](const ReportCell& x) {
          return relevant(x) && x.template_name == g.columns[c] && x.split == split && x.metric == metric;
        });
        if (std::string(metric) == "accuracy") test = cell;
        g.values[row++][c] = estimate_of(cell);
      }
      g.values[row++][c] = chance_of(test);
    }
  }
  return g;
}

std::vector<Grid> band_grids(const AuditReport& r) {
  static const char* const tasks[] = {"DLC", "TLC-DF", "TLC-EEG", "TLC-EEG-woDO"};
  std::vector<Grid> out;
  for (const char* task : tasks) {
    auto relevant = [&](const ReportCell& c) {
      const bool split_ok = std::string(task) == "TLC-EEG-woDO" ? is_domain_held_out(c.split)
                                                                 : c.split == "leave_samples_out";
      return c.task == task && c.metric == "accuracy" && split_ok;
    };
    std::set<std::string> bands;
    for (const auto& c : r.cells) {
      if (c.aggregate && relevant(c)) bands.insert(c.band);
    }
    if (bands.size() < 2) continue;
    Grid g;
    g.name = std::string("bands_") + task;
    g.columns = templates_of(r, relevant);
    for (const char* b : kBandOrder) {
      if (bands.count(b)) g.rows.push_back(b);
    }
    g.rows.push_back("chance");
    g.values.assign(g.rows.size(), std::vector<std::optional<Estimate>>(g.columns.size()));
    for (std::size_t c = 0; c < g.columns.size(); ++c) {
      const ReportCell* any = nullptr;
      for (std::size_t b = 0; b + 1 < g.rows.size(); ++b) {
        const ReportCell* cell = find_aggregate(r, [&](const ReportCell& x) {
          return relevant(x) && x.template_name == g.columns[c] && x.band == g.rows[b];
        });
        if (cell && cell->chance_pct) any = cell;
        g.values[b][c] = estimate_of(cell);
      }
      g.values.back()[c] = chance_of(any);
    }
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<Grid> all_grids(const AuditReport& r) {
  std::vector<Grid> out;
  for (auto g : {table1_grid(r), zero_shot_grid(r), retrieval_grid(r), subjects_grid(r)}) {
    if (!g.columns.empty()) out.push_back(std::move(g));
  }
  for (auto& g : band_grids(r)) out.push_back(std::move(g));
  return out;
}

} // namespace leakaudit
