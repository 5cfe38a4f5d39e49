#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cxrs/error.hpp"

namespace cxrs {

// The two radiological severity targets. Geographic extent grades lung
// involvement 0-4 per lung (total 0-8); opacity extent grades the character of
// the opacity 0-3 per lung (total 0-6).
enum class TargetKind { kGeographic, kOpacity };

constexpr int max_total(TargetKind kind) {
  return kind == TargetKind::kGeographic ? 8 : 6;
}

constexpr int max_grade(TargetKind kind) {
  return kind == TargetKind::kGeographic ? 4 : 3;
}

inline const char* to_string(TargetKind kind) {
  return kind == TargetKind::kGeographic ? "geographic" : "opacity";
}

inline TargetKind target_kind_from_string(const std::string& s) {
  if (s == "geographic") return TargetKind::kGeographic;
  if (s == "opacity") return TargetKind::kOpacity;
  throw ValidationError("unknown target kind '" + s + "' (expected geographic|opacity)");
}

// Per-lung grade of lung involvement: 0 none, 1 <25%, 2 25-50%, 3 50-75%,
// 4 >75%.
struct GeographicScore {
  int right_lung = 0;
  int left_lung = 0;
};

// Per-lung grade of opacity character: 0 none, 1 ground glass, 2 consolidation,
// 3 white-out.
struct OpacityScore {
  int right_lung = 0;
  int left_lung = 0;
};

namespace detail {

inline void check_grade(int grade, int max, const char* lung, const char* system) {
  if (grade < 0 || grade > max) {
    throw ValidationError(std::string(system) + " grade for " + lung + " lung is " +
                          std::to_string(grade) + ", legal range is 0.." +
                          std::to_string(max));
  }
}

}  // namespace detail

inline int total_score(const GeographicScore& s) {
  detail::check_grade(s.right_lung, 4, "right", "geographic");
  detail::check_grade(s.left_lung, 4, "left", "geographic");
  return s.right_lung + s.left_lung;
}

inline int total_score(const OpacityScore& s) {
  detail::check_grade(s.right_lung, 3, "right", "opacity");
  detail::check_grade(s.left_lung, 3, "left", "opacity");
  return s.right_lung + s.left_lung;
}

// A severity total remapped onto the unified [0, 1] range shared by both score
// systems. The map is linear: value = total / max_total(kind).
struct NormalizedScore {
  double value = 0.0;
  TargetKind kind = TargetKind::kGeographic;
};

// Accepts real-valued totals so rater means can be normalized as well.
inline NormalizedScore normalize_value(double total, TargetKind kind) {
  const int max = max_total(kind);
  if (!(total >= 0.0 && total <= static_cast<double>(max))) {
    throw ValidationError("total " + std::to_string(total) + " outside [0, " +
                          std::to_string(max) + "] for " + to_string(kind));
  }
  return {total / static_cast<double>(max), kind};
}

inline NormalizedScore normalize(int total, TargetKind kind) {
  return normalize_value(static_cast<double>(total), kind);
}

inline double denormalize(const NormalizedScore& score) {
  if (!(score.value >= 0.0 && score.value <= 1.0)) {
    throw ValidationError("normalized value " + std::to_string(score.value) +
                          " outside [0, 1]");
  }
  return score.value * static_cast<double>(max_total(score.kind));
}

// Per-image scores from multiple raters. Ratings are totals, kept real-valued
// because means of sub-scores occur in practice.
struct RaterPanel {
  std::string image_id;
  std::vector<std::pair<std::string, double>> ratings;  // (rater_id, total)

  double mean() const;
};

inline double rater_mean(const RaterPanel& panel) {
  if (panel.ratings.empty()) {
    throw ValidationError("rater panel for image '" + panel.image_id +
                          "' has no ratings");
  }
  double sum = 0.0;
  for (const auto& [rater, value] : panel.ratings) sum += value;
  return sum / static_cast<double>(panel.ratings.size());
}

inline double RaterPanel::mean() const { return rater_mean(*this); }

// Counts n_ij of raters assigning subject i to category j. Every row must sum
// to the same rater count n.
struct AgreementTable {
  std::vector<std::vector<long long>> counts;
  int raters_per_subject = 0;
};

inline AgreementTable make_agreement_table(std::vector<std::vector<long long>> counts) {
  AgreementTable table;
  table.counts = std::move(counts);
  if (!table.counts.empty()) {
    long long n = 0;
    for (long long c : table.counts.front()) n += c;
    table.raters_per_subject = static_cast<int>(n);
  }
  return table;
}

// Fleiss' kappa, (P_bar - Pe_bar) / (1 - Pe_bar) with
//   P_i    = (sum_j n_ij^2 - n) / (n (n - 1))
//   p_j    = sum_i n_ij / (N n)
//   Pe_bar = sum_j p_j^2.
// Evaluated in integer arithmetic up to one final division, so rational
// results like the -0.2 hand case come out exact.
inline double fleiss_kappa(const AgreementTable& table) {
  const auto& m = table.counts;
  const std::size_t subjects = m.size();
  if (subjects < 2) {
    throw ValidationError("agreement table needs at least 2 subjects, got " +
                          std::to_string(subjects));
  }
  const std::size_t categories = m.front().size();
  if (categories < 1) throw ValidationError("agreement table has no categories");

  const long long n = table.raters_per_subject;
  if (n < 2) {
    throw ValidationError("agreement requires at least 2 raters per subject, got " +
                          std::to_string(n));
  }

  long long sum_sq = 0;  // sum_ij n_ij^2
  std::vector<long long> column(categories, 0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto& row = m[i];
    if (row.size() != categories) {
      throw ValidationError("agreement table row " + std::to_string(i) +
                            " has " + std::to_string(row.size()) +
                            " categories, expected " + std::to_string(categories));
    }
    long long row_sum = 0;
    for (std::size_t j = 0; j < categories; ++j) {
      const long long c = row[j];
      if (c < 0) throw ValidationError("negative count in agreement table");
      row_sum += c;
      sum_sq += c * c;
      column[j] += c;
    }
    if (row_sum != n) {
      throw ValidationError("agreement table row " + std::to_string(i) + " sums to " +
                            std::to_string(row_sum) + ", expected " + std::to_string(n));
    }
  }

  const long long N = static_cast<long long>(subjects);
  const long long Nn = N * n;
  long long sum_col_sq = 0;  // sum_j c_j^2
  for (long long c : column) sum_col_sq += c * c;

  // kappa = [A*Nn - Sc*(n-1)] / [(n-1) * ((Nn)^2 - Sc)] with A = sum_sq - N*n.
  const long long A = sum_sq - Nn;
  const long long numerator = A * Nn - sum_col_sq * (n - 1);
  const long long denominator = (n - 1) * (Nn * Nn - sum_col_sq);
  if (denominator == 0) {
    throw DegenerateAgreementError(
        "all ratings fall in a single category; chance agreement is 1 and kappa "
        "is undefined");
  }
  return static_cast<double>(numerator) / static_cast<double>(denominator);
}

}  // namespace cxrs
