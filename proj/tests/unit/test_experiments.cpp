#include "leakaudit/errors.hpp"
#include "leakaudit/experiments.hpp"
#include "leakaudit/metrics.hpp"
#include "leakaudit/stats.hpp"
#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>

using namespace leakaudit;

namespace {

nn::TrainConfig quick(int epochs = 15, std::uint64_t seed = 1) {
  nn::TrainConfig c;
  c.lr = 1e-2;
  c.batch_size = 16;
  c.max_epochs = epochs;
  c.early_stop_patience = 10;
  c.seed = seed;
  return c;
}

// Six domains over two classes, 30 one-second samples each at 100 Hz.
DesignTemplate six_domains() { return fixtures::custom_design({0, 1, 0, 1, 0, 1}, 30, 100.0); }

SignatureScale strong() { return {0.3, 0.5, 0.6, 2.0, 40.0}; }

// Layer norm removes a single channel's offset and gain, so signatures need
// several channels to show.
SurrogateSpec four_channels() {
  SurrogateSpec s;
  s.channels = 4;
  return s;
}

const ReportCell* find(const std::vector<ReportCell>& cells, const std::string& task, const std::string& band = "full") {
  for (const auto& c : cells) {
    if (c.task == task && c.band == band) return &c;
  }
  return nullptr;
}

} // namespace

TEST(Tasks, NamesRoundTrip) {
  for (auto k : {TaskKind::dlc, TaskKind::tlc_df, TaskKind::tlc_eeg, TaskKind::tlc_eeg_wodo, TaskKind::zero_shot,
                 TaskKind::retrieval}) {
    EXPECT_EQ(task_kind_from_string(to_string(k)), k);
  }
  EXPECT_EQ(to_string(TaskKind::tlc_eeg_wodo), "TLC-EEG-woDO");
  EXPECT_THROW(task_kind_from_string("TLC"), ParameterError);
}

TEST(Chance, FromLabelCardinality) {
  EXPECT_DOUBLE_EQ(chance_pct(make_template(TemplateKind::kul_like).n_domains), 12.5);
  EXPECT_DOUBLE_EQ(chance_pct(make_template(TemplateKind::cvpr_like).n_domains), 2.5);
  EXPECT_DOUBLE_EQ(chance_pct(make_template(TemplateKind::deap_like).n_classes), 25.0);
  EXPECT_DOUBLE_EQ(chance_pct(make_template(TemplateKind::kul_like).n_classes), 50.0);
  EXPECT_NEAR(chance_pct(34), 2.94, 0.005);
  EXPECT_THROW(chance_pct(0), ParameterError);
}

TEST(EmbeddingBank, UnitNormAndSeeded) {
  const EmbeddingBank bank(40, kEmbeddingDim, 5);
  ASSERT_EQ(bank.n_classes(), 40);
  ASSERT_EQ(bank.dim(), 768);
  for (int i = 0; i < 40; ++i) EXPECT_NEAR(bank.vectors().row(i).norm(), 1.0, 1e-9);
  EXPECT_TRUE(EmbeddingBank(40, 768, 5).vectors() == bank.vectors());
  EXPECT_FALSE(EmbeddingBank(40, 768, 6).vectors() == bank.vectors());
}

TEST(Retrieval, PerfectPredictorScoresFull) {
  const EmbeddingBank bank(40, kEmbeddingDim, 1);
  std::vector<int> targets(40);
  for (int i = 0; i < 40; ++i) targets[static_cast<std::size_t>(i)] = i;
  const auto m = retrieval_metrics(cosine_scores(bank.vectors(), bank.vectors()), targets);
  EXPECT_DOUBLE_EQ(m.top1_pct, 100.0);
  EXPECT_DOUBLE_EQ(m.top5_pct, 100.0);
  EXPECT_DOUBLE_EQ(m.rank_acc_pct, 100.0);
}

TEST(Retrieval, RandomScoresGiveChance) {
  Rng rng(8);
  Eigen::MatrixXd scores(10000, 40);
  std::vector<int> targets;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    for (Eigen::Index j = 0; j < 40; ++j) scores(i, j) = uniform_unit(rng);
    targets.push_back(static_cast<int>(uniform_index(rng, 40)));
  }
  const auto m = retrieval_metrics(scores, targets);
  EXPECT_NEAR(m.rank_acc_pct, 50.0, 2.0);
  EXPECT_NEAR(m.top1_pct, 2.5, 3 * 100 * binomial_se(0.025, 10000));
  EXPECT_NEAR(m.top5_pct, 12.5, 3 * 100 * binomial_se(0.125, 10000));
}

TEST(SurrogateDataset, DeterministicAndLabelled) {
  SurrogateSpec base;
  const auto d = six_domains();
  const auto a = build_surrogate_dataset(base, d, 1.0, strong(), 2, 7);
  const auto b = build_surrogate_dataset(base, d, 1.0, strong(), 2, 7);
  ASSERT_EQ(a.size(), 180u);
  EXPECT_TRUE(a.source().data == b.source().data);
  EXPECT_EQ(a.subject_id(), 2);
  EXPECT_DOUBLE_EQ(a.fs(), 100.0);
  EXPECT_FALSE(build_surrogate_dataset(base, d, 1.0, strong(), 3, 7).source().data == a.source().data);
  EXPECT_THROW(build_surrogate_dataset(base, d, 1.5, strong(), 0, 7), ParameterError);
}

TEST(SurrogateDataset, ZeroStrengthLeavesNoise) {
  SurrogateSpec base;
  const auto d = six_domains();
  const auto rec = synth_surrogate_recording(base, d, 0.0, strong(), 0, 3);
  SurrogateSpec s = base;
  s.fs = d.target_fs;
  s.duration_s = std::ceil(required_duration(d));
  EXPECT_EQ(rec.timepoints(), s.length());
  EXPECT_NEAR(rec.data.array().square().mean(), 1.0, 0.05);
}

TEST(ApplyBand, FullIsIdentityAndUnavailableThrows) {
  const auto d = fixtures::custom_design({0, 1}, 10, 128.0);
  const auto ds = fixtures::custom_dataset(d, 0, 1);
  EXPECT_TRUE(apply_band(ds, canonical_band(BandName::full)).source().data == ds.source().data);
  EXPECT_THROW(apply_band(ds, canonical_band(BandName::high_gamma)), ParameterError);
  const auto alpha = apply_band(ds, canonical_band(BandName::alpha));
  EXPECT_EQ(alpha.size(), ds.size());
  EXPECT_EQ(alpha.timepoints(), ds.timepoints());
}

TEST(Dlc, ChanceAndShape) {
  const auto d = fixtures::custom_design({0, 1, 0, 1}, 20, 50.0);
  const auto ds = fixtures::custom_dataset(d, 0, 2);
  const auto split = leave_samples_out(ds, {}, 1);
  const auto out = run_dlc(ds, split, canonical_band(BandName::full), quick(2));
  EXPECT_EQ(out.cell.task, "DLC");
  EXPECT_EQ(out.cell.split, "leave_samples_out");
  EXPECT_DOUBLE_EQ(*out.cell.chance_pct, 25.0);
  EXPECT_EQ(out.cell.n_test, split.test.size());
  EXPECT_GE(*out.cell.accuracy_pct, 0.0);
  EXPECT_LE(*out.cell.accuracy_pct, 100.0);
  EXPECT_EQ(out.model->output_size(), 4);
}

TEST(TlcDf, NeedsUpstreamAndSkipsIdentityMaps) {
  EXPECT_THROW(run_tlc_df(nullptr, quick()), ParameterError);
  const auto d = fixtures::custom_design({0, 1, 2}, 20, 50.0);
  const auto ds = fixtures::custom_dataset(d, 0, 3);
  const auto dlc = run_dlc(ds, leave_samples_out(ds, {}, 1), canonical_band(BandName::full), quick(1));
  const auto cell = run_tlc_df(&dlc, quick(1));
  EXPECT_EQ(cell.status, "skipped");
  EXPECT_FALSE(cell.note.empty());
}

TEST(TlcDf, DecodesClassFromDomainFeatures) {
  const SurrogateSpec base = four_channels();
  const auto ds = build_surrogate_dataset(base, six_domains(), 1.0, strong(), 0, 4);
  const auto dlc = run_dlc(ds, leave_samples_out(ds, {}, 4), canonical_band(BandName::full), quick(30));
  EXPECT_GE(*dlc.cell.accuracy_pct, 80.0);
  const auto cell = run_tlc_df(&dlc, quick(60));
  EXPECT_EQ(cell.status, "ok");
  EXPECT_DOUBLE_EQ(*cell.chance_pct, 50.0);
  EXPECT_GE(*cell.accuracy_pct, 80.0);
}

TEST(RunTasks, InjectedDomainsLeakUnderSampleSplits) {
  const SurrogateSpec base = four_channels();
  const auto ds = build_surrogate_dataset(base, six_domains(), 1.0, strong(), 0, 5);
  const std::vector<TaskKind> tasks{TaskKind::dlc, TaskKind::tlc_df, TaskKind::tlc_eeg, TaskKind::tlc_eeg_wodo};
  const auto cells = run_tasks(ds, canonical_band(BandName::full), tasks, quick(30), 5);
  ASSERT_EQ(cells.size(), 4u);
  for (const auto& c : cells) EXPECT_EQ(c.status, "ok") << c.task << ": " << c.note;
  EXPECT_GE(*find(cells, "TLC-EEG")->accuracy_pct, 80.0);
  const auto* wodo = find(cells, "TLC-EEG-woDO");
  EXPECT_EQ(wodo->split, "leave_domains_out");
  EXPECT_LT(*wodo->accuracy_pct, *find(cells, "TLC-EEG")->accuracy_pct);
}

TEST(RunTasks, ClassEqualsDomainShortcuts) {
  const auto d = fixtures::custom_design({0, 1, 2}, 20, 50.0);
  const auto ds = fixtures::custom_dataset(d, 0, 3);
  const std::vector<TaskKind> tasks{TaskKind::dlc, TaskKind::tlc_eeg, TaskKind::tlc_eeg_wodo};
  const auto cells = run_tasks(ds, canonical_band(BandName::full), tasks, quick(2), 1);
  ASSERT_EQ(cells.size(), 3u);
  EXPECT_EQ(find(cells, "TLC-EEG")->accuracy_pct, find(cells, "DLC")->accuracy_pct);
  EXPECT_EQ(find(cells, "TLC-EEG-woDO")->status, "skipped");
}

TEST(BandAudit, GridShapeAndUnavailableBands) {
  const auto d = fixtures::custom_design({0, 1, 0, 1}, 10, 128.0);
  const auto ds = fixtures::custom_dataset(d, 0, 6);
  const auto bands = canonical_bands();
  const std::vector<TaskKind> tasks{TaskKind::dlc, TaskKind::tlc_eeg};
  const auto cells = run_band_audit(ds, bands, tasks, quick(1), 1);
  EXPECT_EQ(cells.size(), bands.size() * tasks.size());
  for (const auto& c : cells) {
    if (c.band == "high_gamma") {
      EXPECT_EQ(c.status, "unavailable");
      EXPECT_NE(c.note.find("128"), std::string::npos);
    } else {
      EXPECT_EQ(c.status, "ok") << c.band << " " << c.note;
    }
  }
}

TEST(ZeroShot, FirstSixOmitsAccNear) {
  SurrogateSpec base;
  base.channels = 1;
  auto d = make_template(TemplateKind::cvpr_like);
  d.channel_policy = {ChannelPolicy::Kind::keep_all, 0};
  d.target_fs = 100.0;
  const auto ds = build_surrogate_dataset(base, d, 0.0, strong(), 0, 1);
  const auto z = run_zero_shot(ds, ZeroShotMode::first_six, quick(1), 1);
  EXPECT_FALSE(z.acc_near_pct.has_value());
  EXPECT_NEAR(z.acc_7th_chance_pct, 100.0 / 34, 1e-12);
  EXPECT_EQ(z.n_test, 300u);
  const auto r = run_zero_shot(ds, ZeroShotMode::random, quick(1), 1);
  EXPECT_TRUE(r.acc_near_pct.has_value());
  const auto wrong = fixtures::custom_dataset(fixtures::custom_design({0, 1}, 10), 0, 1);
  EXPECT_THROW(run_zero_shot(wrong, ZeroShotMode::random, quick(1), 1), ParameterError);
}

TEST(Retrieval, ChanceLevelsAndLossGuard) {
  SurrogateSpec base;
  auto d = make_template(TemplateKind::cvpr_like);
  d.channel_policy = {ChannelPolicy::Kind::keep_all, 0};
  d.target_fs = 100.0;
  const auto ds = build_surrogate_dataset(base, d, 0.0, strong(), 0, 1);
  const EmbeddingBank bank(40, kEmbeddingDim, 2);
  const std::vector<SplitPlan> plans{leave_samples_out(ds, {}, 1)};
  const auto r = run_retrieval(ds, plans, nn::LossKind::cosine, quick(1), bank);
  EXPECT_DOUBLE_EQ(r.top1_chance, 2.5);
  EXPECT_DOUBLE_EQ(r.top5_chance, 12.5);
  EXPECT_DOUBLE_EQ(r.rank_chance, 50.0);
  EXPECT_EQ(r.n_candidates, 40u);
  EXPECT_EQ(r.n_test, 200u);
  EXPECT_EQ(r.cells.size(), 3u);
  EXPECT_THROW(run_retrieval(ds, plans, nn::LossKind::cross_entropy, quick(1), bank), ParameterError);
  const auto folds = domain_kfold(ds, 5, 1);
  const auto held = run_retrieval(ds, std::span(folds).first(1), nn::LossKind::cosine, quick(1), bank);
  EXPECT_EQ(held.n_candidates, 8u);
  EXPECT_DOUBLE_EQ(held.top1_chance, 12.5);
}

TEST(LeaveSubjectsOut, TrainValTestCells) {
  const auto d = fixtures::custom_design({0, 1}, 15, 50.0);
  std::vector<LabeledDataset> subjects;
  for (int s = 0; s < 3; ++s) subjects.push_back(fixtures::custom_dataset(d, s, 10 + s));
  const auto cells = run_leave_subjects_out(subjects, ValidationMode::subjects, canonical_band(BandName::full), quick(2), 1);
  ASSERT_EQ(cells.size(), 9u);
  for (const auto& c : cells) {
    EXPECT_EQ(c.split, "leave_subjects_out:subjects");
    EXPECT_DOUBLE_EQ(*c.chance_pct, 50.0);
  }
  EXPECT_EQ(cells[0].metric, "accuracy");
  EXPECT_EQ(cells[1].metric, "train_acc");
  EXPECT_EQ(cells[2].metric, "val_acc");
  EXPECT_EQ(cells[0].n_test, 30u);
}

TEST(Sweep, StrengthRaisesAccuracy) {
  const SurrogateSpec base = four_channels();
  const std::vector<double> strengths{0.0, 1.0};
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const auto pts = sweep_domain_strength(base, six_domains(), strengths, TaskKind::dlc, quick(20), strong(), seeds);
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_EQ(pts[0].accuracy_pct.size(), 3u);
  EXPECT_NEAR(pts[0].chance_pct, 100.0 / 6, 1e-12);
  EXPECT_GE(pts[1].mean_pct, 4 * pts[1].chance_pct);
  EXPECT_GT(pts[1].mean_pct, pts[0].mean_pct);
  const std::vector<double> bad{1.0, 0.5};
  EXPECT_THROW(sweep_domain_strength(base, six_domains(), bad, TaskKind::dlc, quick(1), strong(), seeds), ParameterError);
}

// Slow drift shared by temporally adjacent samples is enough for sample
// splits to beat domain splits without any injected signature.
TEST(Property, SampleSplitsBeatDomainSplitsOnAutocorrelatedNoise) {
  SurrogateSpec base = four_channels();
  base.kind = SurrogateKind::powerlaw;
  base.beta = 2.0;
  const auto d = fixtures::custom_design({0, 1, 0, 1, 0, 1}, 20, 50.0);
  const std::vector<TaskKind> tasks{TaskKind::tlc_eeg, TaskKind::tlc_eeg_wodo};
  int wins = 0;
  const int runs = 10;
  for (int seed = 1; seed <= runs; ++seed) {
    const auto ds = build_surrogate_dataset(base, d, 0.0, strong(), 0, static_cast<std::uint64_t>(seed));
    const auto cells = run_tasks(ds, canonical_band(BandName::full), tasks, quick(20, static_cast<std::uint64_t>(seed)),
                                 static_cast<std::uint64_t>(seed));
    wins += *find(cells, "TLC-EEG")->accuracy_pct >= *find(cells, "TLC-EEG-woDO")->accuracy_pct;
  }
  EXPECT_GE(wins, 9);
}

TEST(ParallelFor, IndexedResultsAndErrors) {
  std::vector<int> out(50, 0);
  parallel_for(out.size(), 4, [&](std::size_t i) { out[i] = static_cast<int>(i * i); });
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], static_cast<int>(i * i));
  std::atomic<int> ran{0};
  EXPECT_THROW(parallel_for(10, 3,
                            [&](std::size_t i) {
                              ++ran;
                              if (i == 4) throw NumericalError("boom");
                            }),
               NumericalError);
}
