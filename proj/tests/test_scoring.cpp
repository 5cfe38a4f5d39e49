#include "cxrs/scoring.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

#include "cxrs/rng.hpp"
#include "support/fleiss_reference.hpp"

using namespace cxrs;

TEST(TotalScore, GeographicRange) {
  EXPECT_EQ(total_score(GeographicScore{4, 4}), 8);
  EXPECT_EQ(total_score(GeographicScore{0, 0}), 0);
  EXPECT_EQ(total_score(GeographicScore{2, 3}), 5);
}

TEST(TotalScore, OpacityRange) {
  EXPECT_EQ(total_score(OpacityScore{1, 3}), 4);
  EXPECT_EQ(total_score(OpacityScore{3, 3}), 6);
}

TEST(TotalScore, OutOfRangeGradeNamesLungAndValue) {
  try {
    total_score(GeographicScore{5, 0});
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("right"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("5"), std::string::npos);
  }
  EXPECT_THROW(total_score(GeographicScore{0, -1}), ValidationError);
  EXPECT_THROW(total_score(OpacityScore{0, 4}), ValidationError);
}

TEST(Normalize, EndpointsAndMidpoint) {
  EXPECT_DOUBLE_EQ(normalize(8, TargetKind::kGeographic).value, 1.0);
  EXPECT_DOUBLE_EQ(normalize(6, TargetKind::kOpacity).value, 1.0);
  EXPECT_DOUBLE_EQ(normalize(0, TargetKind::kOpacity).value, 0.0);
  EXPECT_DOUBLE_EQ(normalize(3, TargetKind::kOpacity).value, 0.5);
}

TEST(Normalize, RejectsOutOfRange) {
  EXPECT_THROW(normalize(9, TargetKind::kGeographic), ValidationError);
  EXPECT_THROW(normalize(-1, TargetKind::kOpacity), ValidationError);
  EXPECT_THROW(normalize(7, TargetKind::kOpacity), ValidationError);
}

TEST(Denormalize, InverseOfNormalize) {
  EXPECT_DOUBLE_EQ(denormalize({1.0, TargetKind::kGeographic}), 8.0);
  EXPECT_DOUBLE_EQ(denormalize({0.5, TargetKind::kOpacity}), 3.0);
  EXPECT_DOUBLE_EQ(denormalize(normalize(5, TargetKind::kGeographic)), 5.0);
  EXPECT_THROW(denormalize({1.5, TargetKind::kGeographic}), ValidationError);
  EXPECT_THROW(denormalize({-0.1, TargetKind::kOpacity}), ValidationError);
}

// Exhaustive over every legal per-lung grade pair: totals in range and the
// round trip exact to 1e-12.
TEST(ScoreAlgebra, ExhaustiveGradePairs) {
  for (int r = 0; r <= 4; ++r) {
    for (int l = 0; l <= 4; ++l) {
      const int total = total_score(GeographicScore{r, l});
      ASSERT_GE(total, 0);
      ASSERT_LE(total, 8);
      const auto norm = normalize(total, TargetKind::kGeographic);
      ASSERT_GE(norm.value, 0.0);
      ASSERT_LE(norm.value, 1.0);
      ASSERT_NEAR(denormalize(norm), static_cast<double>(total), 1e-12);
    }
  }
  for (int r = 0; r <= 3; ++r) {
    for (int l = 0; l <= 3; ++l) {
      const int total = total_score(OpacityScore{r, l});
      ASSERT_GE(total, 0);
      ASSERT_LE(total, 6);
      const auto norm = normalize(total, TargetKind::kOpacity);
      ASSERT_NEAR(denormalize(norm), static_cast<double>(total), 1e-12);
    }
  }
}

TEST(RaterMean, Basics) {
  RaterPanel panel{"img-1", {{"a", 5.0}, {"b", 6.0}, {"c", 7.0}}};
  EXPECT_DOUBLE_EQ(rater_mean(panel), 6.0);
  EXPECT_DOUBLE_EQ(rater_mean({"img-2", {{"a", 4.0}}}), 4.0);
  EXPECT_DOUBLE_EQ(rater_mean({"img-3", {{"a", 0.0}, {"b", 8.0}}}), 4.0);
  EXPECT_THROW(rater_mean({"img-4", {}}), ValidationError);
}

TEST(RaterMean, InvariantUnderRaterPermutation) {
  Rng rng(7);
  for (int it = 0; it < 50; ++it) {
    RaterPanel panel{"img"};
    const int raters = rng.uniform_int(1, 6);
    for (int r = 0; r < raters; ++r) {
      panel.ratings.emplace_back("r" + std::to_string(r), rng.uniform(0.0, 8.0));
    }
    RaterPanel shuffled = panel;
    rng.shuffle(shuffled.ratings);
    EXPECT_DOUBLE_EQ(rater_mean(panel), rater_mean(shuffled));

    const double mean = rater_mean(panel);
    double lo = panel.ratings.front().second, hi = lo;
    for (const auto& [id, v] : panel.ratings) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    EXPECT_GE(mean, lo);
    EXPECT_LE(mean, hi);
  }
}

TEST(FleissKappa, HandCaseExactlyMinusPointTwo) {
  // 2 subjects, 3 raters, 2 categories: rows (3,0) and (2,1).
  const auto table = make_agreement_table({{3, 0}, {2, 1}});
  EXPECT_EQ(fleiss_kappa(table), -0.2);
  EXPECT_NEAR(cxrs::test::fleiss_kappa_reference(table.counts), -0.2, 1e-12);
}

TEST(FleissKappa, PerfectAgreementIsOne) {
  // Every row has a single nonzero entry and two categories appear overall.
  const auto table = make_agreement_table({{4, 0}, {0, 4}, {4, 0}});
  EXPECT_DOUBLE_EQ(fleiss_kappa(table), 1.0);
}

TEST(FleissKappa, DegenerateSingleCategory) {
  EXPECT_THROW(fleiss_kappa(make_agreement_table({{3, 0}, {3, 0}})),
               DegenerateAgreementError);
}

TEST(FleissKappa, Validation) {
  EXPECT_THROW(fleiss_kappa(make_agreement_table({{3, 0}})), ValidationError);
  // Inconsistent row sums.
  EXPECT_THROW(fleiss_kappa(make_agreement_table({{3, 0}, {2, 2}})), ValidationError);
  // Single rater.
  EXPECT_THROW(fleiss_kappa(make_agreement_table({{1, 0}, {0, 1}})), ValidationError);
  // Ragged rows.
  AgreementTable ragged = make_agreement_table({{2, 1}, {1, 1}});
  ragged.counts[1] = {1, 1, 1};
  EXPECT_THROW(fleiss_kappa(ragged), ValidationError);
  // Negative count.
  EXPECT_THROW(fleiss_kappa(make_agreement_table({{4, -1}, {2, 1}})), ValidationError);
}

namespace {

AgreementTable random_table(Rng& rng, int max_subjects, int max_raters, int max_cats) {
  const int subjects = rng.uniform_int(2, max_subjects);
  const int raters = rng.uniform_int(2, max_raters);
  const int cats = rng.uniform_int(2, max_cats);
  std::vector<std::vector<long long>> counts(subjects, std::vector<long long>(cats, 0));
  for (auto& row : counts) {
    for (int r = 0; r < raters; ++r) {
      row[rng.uniform_index(static_cast<std::uint64_t>(cats))] += 1;
    }
  }
  return make_agreement_table(std::move(counts));
}

bool is_degenerate(const AgreementTable& t) {
  const std::size_t cats = t.counts.front().size();
  for (std::size_t j = 0; j < cats; ++j) {
    bool all_here = true;
    for (const auto& row : t.counts) {
      if (row[j] != t.raters_per_subject) {
        all_here = false;
        break;
      }
    }
    if (all_here) return true;
  }
  return false;
}

}  // namespace

TEST(FleissKappa, MatchesDefinitionalOracleOnRandomTables) {
  Rng rng(1234);
  int checked = 0;
  while (checked < 300) {
    const auto table = random_table(rng, 20, 6, 9);
    if (is_degenerate(table)) continue;
    const double got = fleiss_kappa(table);
    const double want = cxrs::test::fleiss_kappa_reference(table.counts);
    ASSERT_NEAR(got, want, 1e-12);
    ASSERT_LE(got, 1.0 + 1e-15);
    ++checked;
  }
}

TEST(FleissKappa, InvariantUnderSubjectAndCategoryPermutation) {
  Rng rng(99);
  for (int it = 0; it < 50; ++it) {
    auto table = random_table(rng, 12, 5, 6);
    if (is_degenerate(table)) continue;
    const double base = fleiss_kappa(table);

    auto by_subject = table;
    rng.shuffle(by_subject.counts);
    EXPECT_DOUBLE_EQ(fleiss_kappa(by_subject), base);

    auto by_category = table;
    std::vector<std::size_t> perm(table.counts.front().size());
    for (std::size_t j = 0; j < perm.size(); ++j) perm[j] = j;
    rng.shuffle(perm);
    for (std::size_t i = 0; i < table.counts.size(); ++i) {
      for (std::size_t j = 0; j < perm.size(); ++j) {
        by_category.counts[i][j] = table.counts[i][perm[j]];
      }
    }
    EXPECT_DOUBLE_EQ(fleiss_kappa(by_category), base);
  }
}
