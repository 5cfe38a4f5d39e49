#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cxrs/dataset.hpp"
#include "cxrs/error.hpp"
#include "cxrs/nn.hpp"
#include "cxrs/rng.hpp"
#include "cxrs/scoring.hpp"
#include "cxrs/train.hpp"

namespace cxrs {

struct SplitSpec {
  double train_fraction = 0.8;
  std::size_t n_trials = 50;
  std::uint64_t seed = 0;
  int strat_bins = 4;

  void validate() const {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
      throw ConfigError("train_fraction must be in (0,1)");
    }
    if (n_trials < 1) throw ConfigError("n_trials must be >= 1");
    if (strat_bins < 1) throw ConfigError("strat_bins must be >= 1");
  }
};

struct SplitResult {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

namespace detail {

inline int strat_bin(double value, int bins) {
  const int b = static_cast<int>(std::floor(value * bins));
  return std::clamp(b, 0, bins - 1);
}

}  // namespace detail

// Stratified Monte Carlo split: labels are bucketed into strat_bins
// equal-width bins over [0,1] and round(train_fraction * bin size) ids per
// bin are drawn without replacement into the training set.
inline SplitResult stratified_split(const std::vector<CxrRecord>& records, TargetKind kind,
                                    const SplitSpec& spec, std::size_t trial_index) {
  spec.validate();
  if (records.size() < static_cast<std::size_t>(spec.strat_bins)) {
    throw ConfigError("dataset of " + std::to_string(records.size()) +
                      " records is smaller than strat_bins");
  }

  std::vector<std::vector<std::size_t>> bins(static_cast<std::size_t>(spec.strat_bins));
  for (std::size_t i = 0; i < records.size(); ++i) {
    bins[static_cast<std::size_t>(detail::strat_bin(records[i].label(kind), spec.strat_bins))]
        .push_back(i);
  }

  Rng rng(derive_seed(derive_seed(spec.seed, trial_index), 0));
  SplitResult result;
  for (auto& bin : bins) {
    rng.shuffle(bin);
    const auto take = static_cast<std::size_t>(
        std::lround(spec.train_fraction * static_cast<double>(bin.size())));
    for (std::size_t k = 0; k < bin.size(); ++k) {
      (k < take ? result.train_ids : result.test_ids).push_back(records[bin[k]].image_id);
    }
  }
  if (result.train_ids.empty() || result.test_ids.empty()) {
    throw ConfigError("split leaves an empty partition (train " +
                      std::to_string(result.train_ids.size()) + ", test " +
                      std::to_string(result.test_ids.size()) + ")");
  }
  return result;
}

// Coefficient of determination 1 - SSres/SStot against the mean predictor.
inline double r_squared(const std::vector<double>& pred, const std::vector<double>& truth) {
  if (pred.size() != truth.size() || truth.size() < 2) {
    throw ValidationError("r_squared needs two equally sized series of length >= 2");
  }
  double mean = 0.0;
  for (double t : truth) mean += t;
  mean /= static_cast<double>(truth.size());

  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ss_res += (truth[i] - pred[i]) * (truth[i] - pred[i]);
    ss_tot += (truth[i] - mean) * (truth[i] - mean);
  }
  if (ss_tot == 0.0) {
    throw ValidationError("r_squared undefined: truth values are all identical");
  }
  return 1.0 - ss_res / ss_tot;
}

struct TrialResult {
  std::size_t trial_index = 0;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  double r2 = 0.0;
  // (predicted, radiologist) pairs on the normalized [0,1] scale.
  std::vector<std::pair<double, double>> scatter;
  bool failed = false;
  std::string error;
};

// Trains a fresh network on the train partition and scores the held-out
// partition. Only train records ever reach the optimizer or the augmenter.
inline TrialResult run_trial(const std::vector<CxrRecord>& records,
                             const NetworkConfig& net_config, const TrainingConfig& training,
                             TargetKind kind, const SplitResult& split,
                             std::size_t trial_index, std::uint64_t trial_seed) {
  std::map<std::string, const CxrRecord*> by_id;
  for (const auto& rec : records) by_id[rec.image_id] = &rec;
  auto resolve = [&](const std::vector<std::string>& ids) {
    std::vector<const CxrRecord*> out;
    for (const auto& id : ids) {
      auto it = by_id.find(id);
      if (it == by_id.end()) throw ValidationError("split references unknown id '" + id + "'");
      out.push_back(it->second);
    }
    return out;
  };
  const auto train_recs = resolve(split.train_ids);
  const auto test_recs = resolve(split.test_ids);

  TrialResult result;
  result.trial_index = trial_index;
  result.train_ids = split.train_ids;
  result.test_ids = split.test_ids;

  try {
    SeverityNet net(net_config, derive_seed(trial_seed, 1));
    TrainingConfig cfg = training;
    cfg.seed = derive_seed(trial_seed, 2);
    if (cfg.epochs > 0) train_model(net, train_recs, kind, cfg);

    const auto preds = predict_records(net, test_recs);
    std::vector<double> truth;
    truth.reserve(test_recs.size());
    for (const auto* rec : test_recs) truth.push_back(rec->label(kind));
    for (std::size_t i = 0; i < preds.size(); ++i) {
      result.scatter.emplace_back(preds[i], truth[i]);
    }
    result.r2 = r_squared(preds, truth);
  } catch (const TrainingError& e) {
    result.failed = true;
    result.error = e.what();
  }
  return result;
}

inline TrialResult run_trial(const std::vector<CxrRecord>& records,
                             const NetworkConfig& net_config, const TrainingConfig& training,
                             TargetKind kind, const SplitSpec& spec, std::size_t trial_index) {
  const SplitResult split = stratified_split(records, kind, spec, trial_index);
  return run_trial(records, net_config, training, kind, split, trial_index,
                   derive_seed(spec.seed, trial_index));
}

struct CvReport {
  TargetKind target_kind = TargetKind::kGeographic;
  std::vector<TrialResult> trials;  // every trial, failed ones included
  std::size_t failed_count = 0;
  double r2_mean = 0.0;
  double r2_std = 0.0;
  std::size_t best_trial_index = 0;

  const TrialResult& best_trial() const {
    for (const auto& t : trials) {
      if (t.trial_index == best_trial_index && !t.failed) return t;
    }
    throw StateError("report has no successful best trial");
  }
};

// Mean, sample standard deviation, and best-trial selection over successful
// trials; failures are kept in the list but excluded from the statistics.
inline CvReport aggregate(TargetKind kind, std::vector<TrialResult> trials) {
  CvReport report;
  report.target_kind = kind;
  report.trials = std::move(trials);

  std::vector<const TrialResult*> ok;
  for (const auto& t : report.trials) {
    if (t.failed) {
      ++report.failed_count;
    } else {
      ok.push_back(&t);
    }
  }
  if (ok.size() < 2) {
    throw AggregationError("aggregation needs at least 2 successful trials, got " +
                           std::to_string(ok.size()));
  }

  double mean = 0.0;
  for (const auto* t : ok) mean += t->r2;
  mean /= static_cast<double>(ok.size());
  double ss = 0.0;
  for (const auto* t : ok) ss += (t->r2 - mean) * (t->r2 - mean);

  report.r2_mean = mean;
  report.r2_std = std::sqrt(ss / static_cast<double>(ok.size() - 1));
  const TrialResult* best = ok.front();
  for (const auto* t : ok) {
    if (t->r2 > best->r2) best = t;
  }
  report.best_trial_index = best->trial_index;
  return report;
}

namespace detail {

// Shortest representation that parses back to the same double, with a
// guaranteed decimal point ("4" becomes "4.0").
inline std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  std::string s = buf;
  for (int prec = 1; prec < 17; ++prec) {
    char probe[40];
    std::snprintf(probe, sizeof(probe), "%.*g", prec, v);
    if (std::strtod(probe, nullptr) == v) {
      s = probe;
      break;
    }
  }
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

}  // namespace detail

// Normalized (predicted, radiologist) pairs as `predicted,radiologist` CSV
// in denormalized score units (0-8 geographic, 0-6 opacity).
inline void export_scatter_pairs(const std::vector<std::pair<double, double>>& scatter,
                                 TargetKind kind, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << "predicted,radiologist\n";
  const double scale = static_cast<double>(max_total(kind));
  for (const auto& [pred, truth] : scatter) {
    f << detail::format_value(pred * scale) << "," << detail::format_value(truth * scale)
      << "\n";
  }
  if (!f) throw IoError("short write to '" + path + "'");
}

inline void export_scatter(const CvReport& report, const std::string& path) {
  export_scatter_pairs(report.best_trial().scatter, report.target_kind, path);
}

// Minimal self-contained scatter plot with an identity reference line.
inline void export_scatter_svg_pairs(const std::vector<std::pair<double, double>>& scatter,
                                     TargetKind kind, double r2, std::size_t trial_index,
                                     const std::string& path) {
  const double scale = static_cast<double>(max_total(kind));
  const int size = 420, margin = 45;
  const double span = static_cast<double>(size - 2 * margin);
  auto sx = [&](double v) { return margin + v / scale * span; };
  auto sy = [&](double v) { return size - margin - v / scale * span; };

  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << "<svg xmlns='http://www.w3.org/2000/svg' width='" << size << "' height='" << size
    << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
  f << "<line x1='" << sx(0) << "' y1='" << sy(0) << "' x2='" << sx(scale) << "' y2='"
    << sy(scale) << "' stroke='#bbbbbb' stroke-dasharray='4 3'/>\n";
  f << "<line x1='" << margin << "' y1='" << size - margin << "' x2='" << size - margin
    << "' y2='" << size - margin << "' stroke='black'/>\n";
  f << "<line x1='" << margin << "' y1='" << margin << "' x2='" << margin << "' y2='"
    << size - margin << "' stroke='black'/>\n";
  for (int tick = 0; tick <= static_cast<int>(scale); ++tick) {
    f << "<text x='" << sx(tick) << "' y='" << size - margin + 16
      << "' font-size='10' text-anchor='middle'>" << tick << "</text>\n";
    f << "<text x='" << margin - 8 << "' y='" << sy(tick) + 3
      << "' font-size='10' text-anchor='end'>" << tick << "</text>\n";
  }
  for (const auto& [pred, truth] : scatter) {
    f << "<circle cx='" << sx(truth * scale) << "' cy='" << sy(pred * scale)
      << "' r='3.5' fill='none' stroke='#1f62a8'/>\n";
  }
  char label[96];
  std::snprintf(label, sizeof(label), "R^2 = %.3f (trial %zu)", r2, trial_index);
  f << "<text x='" << margin + 6 << "' y='" << margin - 10 << "' font-size='12'>" << label
    << "</text>\n";
  f << "<text x='" << size / 2 << "' y='" << size - 8
    << "' font-size='12' text-anchor='middle'>radiologist score</text>\n";
  f << "<text x='14' y='" << size / 2
    << "' font-size='12' text-anchor='middle' transform='rotate(-90 14 " << size / 2
    << ")'>predicted score</text>\n";
  f << "</svg>\n";
  if (!f) throw IoError("short write to '" + path + "'");
}

inline void export_scatter_svg(const CvReport& report, const std::string& path) {
  const TrialResult& best = report.best_trial();
  export_scatter_svg_pairs(best.scatter, report.target_kind, best.r2, best.trial_index, path);
}

inline nlohmann::ordered_json report_to_json(const CvReport& report, const SplitSpec& spec) {
  nlohmann::ordered_json j;
  j["target"] = to_string(report.target_kind);
  j["split"] = {{"train_fraction", spec.train_fraction},
                {"n_trials", spec.n_trials},
                {"seed", spec.seed},
                {"strat_bins", spec.strat_bins}};
  j["r2_mean"] = report.r2_mean;
  j["r2_std"] = report.r2_std;
  j["best_trial_index"] = report.best_trial_index;
  j["best_r2"] = report.best_trial().r2;
  j["failed_trials"] = report.failed_count;
  nlohmann::ordered_json best_scatter = nlohmann::ordered_json::array();
  for (const auto& [p, t] : report.best_trial().scatter) {
    best_scatter.push_back(nlohmann::ordered_json::array({p, t}));
  }
  j["best_scatter"] = std::move(best_scatter);
  nlohmann::ordered_json trials = nlohmann::ordered_json::array();
  for (const auto& t : report.trials) {
    nlohmann::ordered_json tj;
    tj["trial"] = t.trial_index;
    if (t.failed) {
      tj["failed"] = true;
      tj["error"] = t.error;
    } else {
      tj["r2"] = t.r2;
    }
    tj["train_size"] = t.train_ids.size();
    tj["test_size"] = t.test_ids.size();
    tj["train_ids"] = t.train_ids;
    tj["test_ids"] = t.test_ids;
    trials.push_back(std::move(tj));
  }
  j["trials"] = std::move(trials);
  return j;
}

}  // namespace cxrs
