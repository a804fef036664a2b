#include "leakaudit/lrtc.hpp"

#include "leakaudit/errors.hpp"
#include "leakaudit/experiments.hpp"
#include "leakaudit/stats.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace leakaudit {

namespace {

struct UnitJob {
  std::size_t subject = 0;
  int channel = 0;
};

std::vector<MultichannelSeries> segments_of(const LrtcSubject& s, const WaveletSpec& spec, int n_segments) {
  if (s.recordings.empty()) throw ParameterError("lrtc: subject " + std::to_string(s.subject_id) + " has no recordings");
  std::vector<MultichannelSeries> out;
  for (const auto& rec : s.recordings) {
    validate(rec);
    if (rec.channels() != s.recordings.front().channels()) {
      throw ParameterError("lrtc: subject " + std::to_string(s.subject_id) + " recordings differ in channel count");
    }
    out.push_back(resample(rec, spec.analysis_fs));
  }
  if (out.size() == 1 && n_segments > 1) {
    const MultichannelSeries whole = std::move(out.front());
    out.clear();
    const Eigen::Index len = whole.timepoints() / n_segments;
    for (int k = 0; k < n_segments; ++k) {
      MultichannelSeries seg;
      seg.fs = whole.fs;
      seg.origin = whole.origin;
      seg.data = whole.data.middleCols(k * len, len);
      out.push_back(std::move(seg));
    }
  }
  return out;
}

void write_matrix_csv(const std::filesystem::path& path, const std::vector<double>& freqs,
                      const std::vector<double>& lags, const auto& m) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  char buf[64];
  os << "freq_hz";
  for (double l : lags) {
    std::snprintf(buf, sizeof buf, "%.17g", l);
    os << "," << buf;
  }
  os << "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", freqs[static_cast<std::size_t>(i)]);
    os << buf;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", static_cast<double>(m(i, j)));
      os << "," << buf;
    }
    os << "\n";
  }
  if (!os) throw IoError("short write to " + path.string());
}

} // namespace

LrtcResult lrtc_map(std::span<const LrtcSubject> subjects, const WaveletSpec& spec, const LrtcOptions& options) {
  validate(spec);
  if (subjects.empty()) throw ParameterError("lrtc: no subjects");
  if (options.n_segments < 1) throw ParameterError("lrtc: n_segments must be at least 1");

  LrtcResult result;
  // nearest-sample lags; later duplicates are dropped
  const auto raw = lags_to_samples(spec.lags_s, spec.analysis_fs);
  auto& g = result.grand;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!g.lag_samples.empty() && raw[i] == g.lag_samples.back()) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "lag %.6g s rounds to %zu samples, already present; dropped", spec.lags_s[i], raw[i]);
      result.notices.emplace_back(buf);
      continue;
    }
    g.lag_samples.push_back(raw[i]);
    g.lags_s.push_back(static_cast<double>(raw[i]) / spec.analysis_fs);
  }
  g.freqs = spec.freqs;
  const double max_lag_s = g.lags_s.back();

  std::vector<std::vector<MultichannelSeries>> segs;
  std::vector<UnitJob> jobs;
  for (std::size_t s = 0; s < subjects.size(); ++s) {
    segs.push_back(segments_of(subjects[s], spec, options.n_segments));
    for (const auto& seg : segs.back()) {
      if (seg.duration_s() < 2.0 * max_lag_s) {
        std::ostringstream msg;
        msg << "lrtc: subject " << subjects[s].subject_id << " has a " << seg.duration_s()
            << " s segment, shorter than twice the largest lag (" << max_lag_s << " s); usable max lag is "
            << seg.duration_s() / 2.0 << " s";
        throw ParameterError(msg.str());
      }
    }
    for (int c = 0; c < static_cast<int>(segs.back().front().channels()); ++c) jobs.push_back({s, c});
  }

  const auto n_f = static_cast<Eigen::Index>(g.freqs.size());
  const auto n_l = static_cast<Eigen::Index>(g.lag_samples.size());
  result.units.resize(jobs.size());
  parallel_for(jobs.size(), options.jobs, [&](std::size_t k) {
    const auto& job = jobs[k];
    UnitAcf unit;
    unit.subject_id = subjects[job.subject].subject_id;
    unit.channel = job.channel;
    unit.values = Eigen::MatrixXd::Zero(n_f, n_l);
    const auto& list = segs[job.subject];
    std::vector<double> x;
    for (const auto& seg : list) {
      x.assign(seg.data.row(job.channel).data(), seg.data.row(job.channel).data() + seg.timepoints());
      const MorletTransform tf(x, seg.fs);
      for (Eigen::Index f = 0; f < n_f; ++f) {
        const Envelope env = tf.envelope(g.freqs[static_cast<std::size_t>(f)], spec.n_cycles);
        const auto interior = env.interior();
        if (interior.size() <= g.lag_samples.back() + 2) {
          throw ParameterError("lrtc: envelope interior too short for the largest lag at " +
                               std::to_string(g.freqs[static_cast<std::size_t>(f)]) + " Hz");
        }
        const auto r = acf_at_lags(interior, g.lag_samples);
        for (Eigen::Index l = 0; l < n_l; ++l) unit.values(f, l) += r[static_cast<std::size_t>(l)];
      }
    }
    unit.values /= static_cast<double>(list.size());
    result.units[k] = std::move(unit);
  });

  g.n_units = result.units.size();
  g.values = Eigen::MatrixXd::Zero(n_f, n_l);
  for (const auto& u : result.units) g.values += u.values;
  g.values /= static_cast<double>(g.n_units);
  return result;
}

SignificanceResult lrtc_significance(std::span<const Eigen::MatrixXd> per_unit, double q) {
  if (per_unit.size() < 2) throw ParameterError("lrtc significance: need at least 2 units per cell");
  const Eigen::Index rows = per_unit[0].rows(), cols = per_unit[0].cols();
  for (const auto& m : per_unit) {
    if (m.rows() != rows || m.cols() != cols) throw ParameterError("lrtc significance: unit matrices differ in shape");
  }
  SignificanceResult r;
  r.p_raw = Eigen::MatrixXd::Ones(rows, cols);
  r.degenerate = BoolMatrix::Constant(rows, cols, false);
  std::vector<double> values(per_unit.size());
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      for (std::size_t u = 0; u < per_unit.size(); ++u) values[u] = per_unit[u](i, j);
      try {
        r.p_raw(i, j) = one_sample_ttest(values, 0.0, Alternative::greater).p;
      } catch (const NumericalError&) {
        r.degenerate(i, j) = true;
      }
    }
  }
  std::vector<double> flat(static_cast<std::size_t>(rows * cols));
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) flat[static_cast<std::size_t>(i * cols + j)] = r.p_raw(i, j);
  }
  const auto fdr = bh_fdr(flat, q);
  r.p_adjusted.resize(rows, cols);
  r.reject.resize(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      const auto k = static_cast<std::size_t>(i * cols + j);
      r.p_adjusted(i, j) = fdr.adjusted[k];
      r.reject(i, j) = fdr.reject[k] && !r.degenerate(i, j);
    }
  }
  return r;
}

void attach_significance(LrtcResult& result, double q) {
  std::vector<Eigen::MatrixXd> mats;
  for (const auto& u : result.units) mats.push_back(u.values);
  const auto s = lrtc_significance(mats, q);
  result.grand.p_values = s.p_adjusted;
  result.grand.reject = s.reject;
  result.grand.degenerate_cells = static_cast<std::size_t>(s.degenerate.count());
}

void write_lrtc_outputs(const LrtcResult& result, const std::filesystem::path& dir, const std::string& stem) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const auto& g = result.grand;
  write_matrix_csv(dir / (stem + "_acf.csv"), g.freqs, g.lags_s, g.values);
  if (g.p_values.size() > 0) {
    write_matrix_csv(dir / (stem + "_pvalues.csv"), g.freqs, g.lags_s, g.p_values);
    write_matrix_csv(dir / (stem + "_mask.csv"), g.freqs, g.lags_s, g.reject.cast<int>());
  }
  nlohmann::json j;
  j["freqs_hz"] = g.freqs;
  j["lags_s"] = g.lags_s;
  j["lag_samples"] = g.lag_samples;
  j["n_units"] = g.n_units;
  j["rows"] = "frequency";
  j["columns"] = "lag";
  j["significance"] = g.p_values.size() > 0 ? "one-sided t-test vs 0, BH-FDR adjusted" : "not computed";
  j["rejections"] = g.reject.size() > 0 ? static_cast<long>(g.reject.count()) : 0L;
  j["degenerate_cells"] = g.degenerate_cells;
  j["notices"] = result.notices;
  for (const auto& u : result.units) j["units"].push_back({{"subject", u.subject_id}, {"channel", u.channel}});
  std::ofstream os(dir / (stem + ".json"));
  if (!os) throw IoError("cannot write " + (dir / (stem + ".json")).string());
  os << j.dump(2) << "\n";
}

} // namespace leakaudit
