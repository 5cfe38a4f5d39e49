#include "cxrs/eval.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cxrs/dataset.hpp"
#include "cxrs/rng.hpp"

namespace cxrs {
namespace {

// Minimal records with prescribed labels; pixels are unused by the split and
// metric tests.
std::vector<CxrRecord> records_with_labels(const std::vector<double>& labels) {
  std::vector<CxrRecord> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    CxrRecord rec;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "img_%04zu", i);
    rec.image_id = buf;
    rec.patient_id = "P" + std::to_string(i);
    rec.pixels = Image(4, 4, 0.0);
    rec.geo_label = NormalizedScore{labels[i], TargetKind::kGeographic};
    rec.opac_label = NormalizedScore{labels[i] * 0.75, TargetKind::kOpacity};
    out.push_back(std::move(rec));
  }
  return out;
}

NetworkConfig tiny_net_config() {
  NetworkConfig cfg;
  cfg.input_height = 32;
  cfg.input_width = 32;
  cfg.stem_channels = 4;
  cfg.stages = {{1, 4, false}, {1, 6, true}, {1, 8, true}};
  cfg.skip_map = {};
  cfg.head_hidden = 8;
  return cfg;
}

TrainingConfig quick_training(std::size_t epochs) {
  TrainingConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = 4;
  cfg.optimizer.lr = 1e-3;
  cfg.augment_enabled = false;
  return cfg;
}

TEST(Split, PartitionAndStratificationLaws) {
  Rng rng(99);
  for (int round = 0; round < 40; ++round) {
    const std::size_t n = 10 + rng.uniform_index(191);
    std::vector<double> labels;
    for (std::size_t i = 0; i < n; ++i) labels.push_back(rng.uniform01());
    const auto records = records_with_labels(labels);

    SplitSpec spec;
    spec.train_fraction = 0.5 + 0.4 * rng.uniform01();
    spec.seed = rng.next_u64();
    SplitResult split;
    try {
      split = stratified_split(records, TargetKind::kGeographic, spec, round);
    } catch (const ConfigError&) {
      continue;  // tiny dataset + extreme fraction may legitimately empty a side
    }

    std::set<std::string> train(split.train_ids.begin(), split.train_ids.end());
    std::set<std::string> test(split.test_ids.begin(), split.test_ids.end());
    EXPECT_EQ(train.size(), split.train_ids.size());
    EXPECT_EQ(test.size(), split.test_ids.size());
    EXPECT_EQ(train.size() + test.size(), n);
    for (const auto& id : test) EXPECT_EQ(train.count(id), 0u);

    // Per-bin train counts may deviate from the exact fraction by at most one
    // element.
    std::vector<double> bin_total(4, 0.0), bin_train(4, 0.0);
    for (const auto& rec : records) {
      const int b = detail::strat_bin(rec.label(TargetKind::kGeographic), 4);
      bin_total[b] += 1.0;
      if (train.count(rec.image_id)) bin_train[b] += 1.0;
    }
    for (int b = 0; b < 4; ++b) {
      EXPECT_LE(std::abs(bin_train[b] - spec.train_fraction * bin_total[b]), 1.0)
          << "bin " << b << " round " << round;
    }
  }
}

TEST(Split, CohortScaleSizes) {
  const auto records = generate_synthetic(130, 41, 32, 32);
  SplitSpec spec;
  spec.train_fraction = 0.8;
  spec.seed = 7;
  const auto split = stratified_split(records, TargetKind::kGeographic, spec, 0);
  EXPECT_NEAR(static_cast<double>(split.train_ids.size()), 104.0, 1.0);
  EXPECT_NEAR(static_cast<double>(split.test_ids.size()), 26.0, 1.0);
  EXPECT_EQ(split.train_ids.size() + split.test_ids.size(), 130u);
}

TEST(Split, PerBinRoundingCounts) {
  // Bins [0,.25), [.25,.5), [.5,.75) populated with 10/20/30 records.
  std::vector<double> labels;
  for (int i = 0; i < 10; ++i) labels.push_back(0.10);
  for (int i = 0; i < 20; ++i) labels.push_back(0.30);
  for (int i = 0; i < 30; ++i) labels.push_back(0.60);
  const auto records = records_with_labels(labels);

  SplitSpec spec;
  spec.train_fraction = 0.8;
  spec.seed = 3;
  const auto split = stratified_split(records, TargetKind::kGeographic, spec, 5);

  std::set<std::string> train(split.train_ids.begin(), split.train_ids.end());
  std::vector<int> bin_train(4, 0);
  for (const auto& rec : records) {
    if (train.count(rec.image_id)) {
      ++bin_train[detail::strat_bin(rec.label(TargetKind::kGeographic), 4)];
    }
  }
  EXPECT_EQ(bin_train[0], 8);
  EXPECT_EQ(bin_train[1], 16);
  EXPECT_EQ(bin_train[2], 24);
  EXPECT_EQ(split.train_ids.size(), 48u);
  EXPECT_EQ(split.test_ids.size(), 12u);
}

TEST(Split, DeterministicPerTrialIndex) {
  const auto records = generate_synthetic(40, 11, 32, 32);
  SplitSpec spec;
  spec.seed = 123;
  const auto a = stratified_split(records, TargetKind::kOpacity, spec, 2);
  const auto b = stratified_split(records, TargetKind::kOpacity, spec, 2);
  EXPECT_EQ(a.train_ids, b.train_ids);
  EXPECT_EQ(a.test_ids, b.test_ids);

  const auto c = stratified_split(records, TargetKind::kOpacity, spec, 3);
  EXPECT_NE(a.train_ids, c.train_ids);
}

TEST(Split, RejectsEmptyPartitions) {
  const auto records = records_with_labels({0.1, 0.3, 0.6, 0.9});
  SplitSpec spec;
  spec.train_fraction = 0.9;  // every singleton bin rounds to 1 train, 0 test
  EXPECT_THROW(stratified_split(records, TargetKind::kGeographic, spec, 0), ConfigError);

  const auto two = records_with_labels({0.1, 0.9});
  EXPECT_THROW(stratified_split(two, TargetKind::kGeographic, spec, 0), ConfigError);

  SplitSpec bad;
  bad.train_fraction = 1.0;
  EXPECT_THROW(stratified_split(records, TargetKind::kGeographic, bad, 0), ConfigError);
}

TEST(RSquared, HandOracle) {
  const std::vector<double> truth{0.0, 0.5, 1.0};
  const std::vector<double> pred{0.1, 0.5, 0.9};
  // SSres = 0.02, SStot = 0.5.
  EXPECT_NEAR(r_squared(pred, truth), 0.96, 1e-12);
}

TEST(RSquared, PerfectAndBaseline) {
  const std::vector<double> truth{0.2, 0.4, 0.9, 0.1};
  EXPECT_DOUBLE_EQ(r_squared(truth, truth), 1.0);

  const double mean = (0.2 + 0.4 + 0.9 + 0.1) / 4.0;
  const std::vector<double> constant(4, mean);
  EXPECT_NEAR(r_squared(constant, truth), 0.0, 1e-12);
}

TEST(RSquared, RejectsDegenerateInputs) {
  EXPECT_THROW(r_squared({0.1, 0.2}, {0.1}), ValidationError);
  EXPECT_THROW(r_squared({0.1}, {0.1}), ValidationError);
  EXPECT_THROW(r_squared({0.1, 0.2}, {0.5, 0.5}), ValidationError);
}

TEST(RSquared, AffineInvariance) {
  Rng rng(5);
  for (int round = 0; round < 25; ++round) {
    const std::size_t n = 2 + rng.uniform_index(30);
    std::vector<double> truth, pred;
    for (std::size_t i = 0; i < n; ++i) {
      truth.push_back(rng.uniform01());
      pred.push_back(rng.uniform01());
    }
    if (std::all_of(truth.begin(), truth.end(), [&](double v) { return v == truth[0]; })) {
      continue;
    }
    const double a = 0.5 + 4.0 * rng.uniform01();
    const double b = rng.normal(0.0, 2.0);
    std::vector<double> truth2, pred2;
    for (std::size_t i = 0; i < n; ++i) {
      truth2.push_back(a * truth[i] + b);
      pred2.push_back(a * pred[i] + b);
    }
    EXPECT_NEAR(r_squared(pred2, truth2), r_squared(pred, truth), 1e-9);
  }
}

TrialResult ok_trial(std::size_t index, double r2) {
  TrialResult t;
  t.trial_index = index;
  t.r2 = r2;
  t.train_ids = {"a", "b"};
  t.test_ids = {"c"};
  t.scatter = {{r2, r2}};
  return t;
}

TrialResult failed_trial(std::size_t index) {
  TrialResult t;
  t.trial_index = index;
  t.failed = true;
  t.error = "training diverged";
  return t;
}

TEST(Aggregate, HandOracle) {
  const auto report = aggregate(TargetKind::kGeographic,
                                {ok_trial(0, 0.6), ok_trial(1, 0.7), ok_trial(2, 0.8)});
  EXPECT_NEAR(report.r2_mean, 0.7, 1e-15);
  EXPECT_NEAR(report.r2_std, 0.1, 1e-12);
  EXPECT_EQ(report.best_trial_index, 2u);
  EXPECT_EQ(report.failed_count, 0u);
}

TEST(Aggregate, IdenticalTrialsHaveZeroStd) {
  const auto report =
      aggregate(TargetKind::kOpacity, {ok_trial(0, 0.42), ok_trial(1, 0.42)});
  EXPECT_DOUBLE_EQ(report.r2_mean, 0.42);
  EXPECT_DOUBLE_EQ(report.r2_std, 0.0);
  EXPECT_EQ(report.best_trial_index, 0u);  // tie resolved to the earliest trial
}

TEST(Aggregate, FailedTrialsExcludedButCounted) {
  const auto report = aggregate(
      TargetKind::kGeographic,
      {ok_trial(0, 0.5), failed_trial(1), ok_trial(2, 0.9), failed_trial(3)});
  EXPECT_EQ(report.failed_count, 2u);
  EXPECT_NEAR(report.r2_mean, 0.7, 1e-15);
  EXPECT_EQ(report.best_trial_index, 2u);

  EXPECT_THROW(aggregate(TargetKind::kGeographic, {ok_trial(0, 0.5), failed_trial(1)}),
               AggregationError);
  EXPECT_THROW(aggregate(TargetKind::kGeographic, {failed_trial(0), failed_trial(1)}),
               AggregationError);
}

TEST(Aggregate, PermutationInvariantStatistics) {
  std::vector<TrialResult> trials{ok_trial(0, 0.55), ok_trial(1, 0.61), ok_trial(2, 0.43),
                                  ok_trial(3, 0.70)};
  const auto base = aggregate(TargetKind::kGeographic, trials);
  std::reverse(trials.begin(), trials.end());
  const auto flipped = aggregate(TargetKind::kGeographic, trials);
  EXPECT_DOUBLE_EQ(base.r2_mean, flipped.r2_mean);
  EXPECT_DOUBLE_EQ(base.r2_std, flipped.r2_std);
  EXPECT_EQ(base.best_trial_index, flipped.best_trial_index);
}

CvReport report_with_scatter(std::vector<std::pair<double, double>> scatter,
                             TargetKind kind) {
  TrialResult best;
  best.trial_index = 0;
  best.scatter = std::move(scatter);
  std::vector<double> pred, truth;
  for (const auto& [p, t] : best.scatter) {
    pred.push_back(p);
    truth.push_back(t);
  }
  best.r2 = r_squared(pred, truth);
  TrialResult other = ok_trial(1, best.r2 - 1.0);
  CvReport report = aggregate(kind, {best, other});
  return report;
}

TEST(Scatter, CsvFormatAndRowCount) {
  std::vector<std::pair<double, double>> pairs;
  pairs.emplace_back(0.5, 0.5);
  Rng rng(17);
  for (int i = 1; i < 26; ++i) {
    pairs.emplace_back(rng.uniform01(), static_cast<double>(rng.uniform_index(9)) / 8.0);
  }
  const auto report = report_with_scatter(pairs, TargetKind::kGeographic);

  const std::string path = std::string(testing::TempDir()) + "scatter_fmt.csv";
  export_scatter(report, path);

  std::ifstream f(path);
  ASSERT_TRUE(f.is_open());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(f, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 27u);
  EXPECT_EQ(lines[0], "predicted,radiologist");
  EXPECT_EQ(lines[1], "4.0,4.0");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    EXPECT_NE(lines[i].find(','), std::string::npos);
  }
}

TEST(Scatter, CsvRoundTripReproducesR2) {
  Rng rng(23);
  std::vector<std::pair<double, double>> pairs;
  for (int i = 0; i < 26; ++i) {
    pairs.emplace_back(rng.uniform01(), static_cast<double>(rng.uniform_index(7)) / 6.0);
  }
  const auto report = report_with_scatter(pairs, TargetKind::kOpacity);

  const std::string path = std::string(testing::TempDir()) + "scatter_rt.csv";
  export_scatter(report, path);

  std::ifstream f(path);
  std::string header;
  std::getline(f, header);
  std::vector<double> pred, truth;
  std::string line;
  while (std::getline(f, line)) {
    const auto comma = line.find(',');
    ASSERT_NE(comma, std::string::npos);
    pred.push_back(std::strtod(line.substr(0, comma).c_str(), nullptr));
    truth.push_back(std::strtod(line.substr(comma + 1).c_str(), nullptr));
  }
  ASSERT_EQ(pred.size(), 26u);
  EXPECT_NEAR(r_squared(pred, truth), report.best_trial().r2, 1e-9);
}

TEST(Scatter, ErrorsOnUnwritablePath) {
  const auto report = report_with_scatter({{0.1, 0.2}, {0.3, 0.4}}, TargetKind::kGeographic);
  EXPECT_THROW(export_scatter(report, "/nonexistent_dir_zz/out.csv"), IoError);
}

TEST(Scatter, SvgRenderSmoke) {
  const auto report =
      report_with_scatter({{0.1, 0.2}, {0.5, 0.5}, {0.9, 0.8}}, TargetKind::kGeographic);
  const std::string path = std::string(testing::TempDir()) + "scatter.svg";
  export_scatter_svg(report, path);
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  const std::string svg = ss.str();
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("circle"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

TEST(RunTrial, ZeroEpochBaselinePredictsHalf) {
  const auto records = generate_synthetic(24, 31, 32, 32);
  SplitSpec spec;
  spec.seed = 5;
  const auto trial = run_trial(records, tiny_net_config(), quick_training(0),
                               TargetKind::kGeographic, spec, 0);
  ASSERT_FALSE(trial.failed);
  ASSERT_EQ(trial.scatter.size(), trial.test_ids.size());
  for (const auto& [pred, truth] : trial.scatter) {
    EXPECT_EQ(pred, 0.5);
  }
}

TEST(RunTrial, DeterministicGivenSeedAndSplit) {
  const auto records = generate_synthetic(20, 77, 32, 32);
  SplitSpec spec;
  spec.seed = 9;
  spec.train_fraction = 0.7;
  const auto a =
      run_trial(records, tiny_net_config(), quick_training(1), TargetKind::kOpacity, spec, 1);
  const auto b =
      run_trial(records, tiny_net_config(), quick_training(1), TargetKind::kOpacity, spec, 1);
  ASSERT_FALSE(a.failed);
  EXPECT_EQ(a.train_ids, b.train_ids);
  EXPECT_EQ(a.test_ids, b.test_ids);
  EXPECT_EQ(a.r2, b.r2);
  EXPECT_EQ(a.scatter, b.scatter);
}

TEST(RunTrial, TestLabelsNeverInfluenceTraining) {
  auto records = generate_synthetic(20, 55, 32, 32);
  SplitSpec spec;
  spec.seed = 13;
  spec.train_fraction = 0.7;
  const auto split = stratified_split(records, TargetKind::kGeographic, spec, 0);
  const std::uint64_t trial_seed = derive_seed(spec.seed, 0);

  const auto baseline = run_trial(records, tiny_net_config(), quick_training(2),
                                  TargetKind::kGeographic, split, 0, trial_seed);
  ASSERT_FALSE(baseline.failed);

  // Mangle every held-out label; predictions must not move.
  std::set<std::string> test(split.test_ids.begin(), split.test_ids.end());
  for (auto& rec : records) {
    if (test.count(rec.image_id)) {
      rec.geo_label.value = 1.0 - rec.geo_label.value;
    }
  }
  const auto mangled = run_trial(records, tiny_net_config(), quick_training(2),
                                 TargetKind::kGeographic, split, 0, trial_seed);
  ASSERT_FALSE(mangled.failed);
  ASSERT_EQ(baseline.scatter.size(), mangled.scatter.size());
  for (std::size_t i = 0; i < baseline.scatter.size(); ++i) {
    EXPECT_EQ(baseline.scatter[i].first, mangled.scatter[i].first) << "pair " << i;
  }
}

TEST(RunTrial, ScatterPairsAlignWithTestIds) {
  const auto records = generate_synthetic(16, 3, 32, 32);
  SplitSpec spec;
  spec.seed = 21;
  spec.train_fraction = 0.75;
  const auto trial = run_trial(records, tiny_net_config(), quick_training(0),
                               TargetKind::kOpacity, spec, 0);
  ASSERT_FALSE(trial.failed);
  std::map<std::string, double> label_by_id;
  for (const auto& rec : records) {
    label_by_id[rec.image_id] = rec.label(TargetKind::kOpacity);
  }
  ASSERT_EQ(trial.scatter.size(), trial.test_ids.size());
  for (std::size_t i = 0; i < trial.test_ids.size(); ++i) {
    EXPECT_DOUBLE_EQ(trial.scatter[i].second, label_by_id[trial.test_ids[i]]);
  }
}

TEST(Report, JsonShape) {
  const auto records = generate_synthetic(16, 19, 32, 32);
  SplitSpec spec;
  spec.seed = 2;
  spec.n_trials = 2;
  spec.train_fraction = 0.75;
  std::vector<TrialResult> trials;
  for (std::size_t t = 0; t < spec.n_trials; ++t) {
    trials.push_back(run_trial(records, tiny_net_config(), quick_training(0),
                               TargetKind::kGeographic, spec, t));
  }
  const auto report = aggregate(TargetKind::kGeographic, std::move(trials));
  const auto j = report_to_json(report, spec);
  EXPECT_EQ(j.at("target"), "geographic");
  EXPECT_EQ(j.at("trials").size(), 2u);
  EXPECT_EQ(j.at("split").at("n_trials"), 2u);
  EXPECT_TRUE(j.at("trials")[0].contains("r2"));
  EXPECT_EQ(j.at("trials")[0].at("train_size").get<std::size_t>(),
            report.trials[0].train_ids.size());
  const std::string dumped = j.dump(2);
  EXPECT_NE(dumped.find("r2_mean"), std::string::npos);
}

}  // namespace
}  // namespace cxrs
