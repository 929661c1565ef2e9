#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "stagesurv/exact.hpp"
#include "support/oracles.hpp"

using namespace stagesurv;
using stagesurv::test_support::stage_split_by_iteration;
using stagesurv::test_support::survival_by_enumeration;

namespace {

// Frozen from the iterated-absorption and path-enumeration oracles in
// support/oracles.hpp (and an independent numpy matrix-power check).
constexpr double kShare1 = 0.375;
constexpr double kShare2 = 0.33088235294117646;
constexpr double kShare3 = 0.29411764705882354;
constexpr double kS1 = 0.94812328;
constexpr double kS2 = 0.704088448;
constexpr double kS3 = 0.16807;
constexpr double kPooled5 = 0.6379490252941176;

const TransitionMatrix& reference() {
  static const TransitionMatrix m = build_transition_matrix(kReferenceParams);
  return m;
}

}  // namespace

TEST(Oracles, AgreeWithFrozenValues) {
  const auto split = stage_split_by_iteration(reference());
  EXPECT_NEAR(split[0], kShare1, 1e-12);
  EXPECT_NEAR(split[1], kShare2, 1e-12);
  EXPECT_NEAR(split[2], kShare3, 1e-12);
  EXPECT_NEAR(survival_by_enumeration(kReferenceParams, 1, 5), kS1, 1e-14);
  EXPECT_NEAR(survival_by_enumeration(kReferenceParams, 2, 5), kS2, 1e-14);
  EXPECT_NEAR(survival_by_enumeration(kReferenceParams, 3, 5), kS3, 1e-14);
}

TEST(StageDistribution, ReferenceSplit) {
  const StageDistribution d = stage_distribution(reference());
  EXPECT_NEAR(d.localized, kShare1, 1e-12);
  EXPECT_NEAR(d.regional, kShare2, 1e-12);
  EXPECT_NEAR(d.distant, kShare3, 1e-12);
  // Reported cohort percentages 38/33/29.
  EXPECT_NEAR(d.localized, 0.38, 0.02);
  EXPECT_NEAR(d.regional, 0.33, 0.02);
  EXPECT_NEAR(d.distant, 0.29, 0.02);
}

TEST(StageDistribution, HeavyEarlyDetection) {
  RateParams p = kReferenceParams;
  p.kappa1 = 0.85;
  const StageDistribution d = stage_distribution(build_transition_matrix(p));
  EXPECT_NEAR(d.localized, 0.85, 1e-15);
}

TEST(StageDistribution, TrappedStatesAreReported) {
  RateParams p = kReferenceParams;
  p.lambda1 = 0.0;
  p.kappa1 = 0.0;
  try {
    stage_distribution(build_transition_matrix(p));
    FAIL();
  } catch (const DegenerateError& e) {
    EXPECT_EQ(e.state(), "U1");
  }
  p = kReferenceParams;
  p.kappa3 = 0.0;
  try {
    stage_distribution(build_transition_matrix(p));
    FAIL();
  } catch (const DegenerateError& e) {
    EXPECT_EQ(e.state(), "U3");
  }
  // Unreachable U2 does not need an exit.
  p = kReferenceParams;
  p.lambda1 = 0.0;
  p.lambda2 = 0.0;
  p.kappa2 = 0.0;
  const StageDistribution d = stage_distribution(build_transition_matrix(p));
  EXPECT_EQ(d.localized, 1.0);
  EXPECT_EQ(d.regional, 0.0);
  EXPECT_EQ(d.distant, 0.0);
}

TEST(SurvivalCurve, ReferenceFiveYear) {
  const StageSurvival s = five_year_survival(reference());
  EXPECT_NEAR(s.localized, kS1, 1e-14);
  EXPECT_NEAR(s.regional, kS2, 1e-14);
  EXPECT_NEAR(s.distant, std::pow(0.7, 5), 1e-12);
  EXPECT_NEAR(s.distant, kS3, 1e-12);
}

TEST(SurvivalCurve, StartsAtOneAndDecreases) {
  for (Stage st : kAllStages) {
    const SurvivalCurve c = survival_curve(reference(), st, 30);
    ASSERT_EQ(c.values.size(), 31u);
    EXPECT_EQ(c.horizon(), 30);
    EXPECT_EQ(c.at(0), 1.0);
    for (std::size_t t = 1; t < c.values.size(); ++t) EXPECT_LE(c.values[t], c.values[t - 1]);
  }
  EXPECT_EQ(survival_curve(reference(), Stage::Distant, 0).values.size(), 1u);
  EXPECT_THROW(survival_curve(reference(), Stage::Localized, -1), ParameterError);
}

TEST(SurvivalCurve, MatchesEnumerationAtOtherHorizons) {
  for (int h : {1, 3, 8, 15}) {
    const StageSurvival s = survival_at(reference(), h);
    EXPECT_NEAR(s.localized, survival_by_enumeration(kReferenceParams, 1, h), 1e-13);
    EXPECT_NEAR(s.regional, survival_by_enumeration(kReferenceParams, 2, h), 1e-13);
    EXPECT_NEAR(s.distant, survival_by_enumeration(kReferenceParams, 3, h), 1e-13);
  }
}

TEST(FiveYearSurvival, NoMortality) {
  RateParams p = kReferenceParams;
  p.mu = 0.0;
  const StageSurvival s = five_year_survival(build_transition_matrix(p));
  EXPECT_EQ(s.localized, 1.0);
  EXPECT_EQ(s.regional, 1.0);
  EXPECT_EQ(s.distant, 1.0);
  EXPECT_EQ(pooled_survival(build_transition_matrix(p), 12), 1.0);
}

TEST(FiveYearSurvival, FullTreatment) {
  RateParams p = kReferenceParams;
  p.gamma = 1.0;
  const StageSurvival s = five_year_survival(build_transition_matrix(p));
  EXPECT_EQ(s.localized, 1.0);
  EXPECT_EQ(s.regional, 1.0);
  EXPECT_NEAR(s.distant, std::pow(1.0 - p.mu, 5), 1e-15);
}

TEST(PooledSurvival, Reference) {
  EXPECT_NEAR(pooled_survival(reference(), 5), kPooled5, 1e-13);
  EXPECT_NEAR(pooled_survival(reference(), 5), kShare1 * kS1 + kShare2 * kS2 + kShare3 * kS3, 1e-13);
}

TEST(PooledSurvival, MoreEarlyDetectionRaisesPooled) {
  RateParams p = kReferenceParams;
  p.kappa1 = 0.18;
  EXPECT_GT(pooled_survival(build_transition_matrix(p), 5), kPooled5);
}

TEST(LifetimeMortality, EveryTumorDies) {
  EXPECT_EQ(lifetime_mortality(reference()), 1.0);
  RateParams p = kReferenceParams;
  p.gamma = 1.0;
  const auto m = build_transition_matrix(p);
  EXPECT_EQ(lifetime_mortality(m, State::D1), 0.0);
  // Only tumors that pass U3 before detection reach M.
  EXPECT_NEAR(lifetime_mortality(m), kShare3, 1e-15);
}

TEST(ScreeningSweep, PooledRisesWhileConditionalSurvivalIsFixed) {
  const std::vector<double> k1 = {0.09, 0.18, 0.45};
  const auto rows = screening_sweep(kReferenceParams, k1);
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].kappa1, k1[i]);
    EXPECT_EQ(rows[i].lifetime_mortality, 1.0);
    EXPECT_EQ(rows[i].survival.localized, rows[0].survival.localized);
    EXPECT_EQ(rows[i].survival.regional, rows[0].survival.regional);
    EXPECT_EQ(rows[i].survival.distant, rows[0].survival.distant);
    if (i > 0) EXPECT_GT(rows[i].pooled, rows[i - 1].pooled);
  }
  // Independently recomputed pooled values (numpy matrix powers).
  EXPECT_NEAR(rows[1].pooled, 0.7225420038502671, 1e-13);
  EXPECT_NEAR(rows[2].pooled, 0.824053578117647, 1e-13);
}

TEST(ScreeningSweep, SinglePointEqualsBaseline) {
  const double k1 = kReferenceParams.kappa1;
  const auto rows = screening_sweep(kReferenceParams, std::span<const double>(&k1, 1));
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].pooled, pooled_survival(reference(), 5));
  EXPECT_EQ(rows[0].shares.regional, stage_distribution(reference()).regional);
}

TEST(ScreeningSweep, InvalidKappaPropagates) {
  const std::vector<double> k1 = {0.09, 0.9};
  EXPECT_THROW(screening_sweep(kReferenceParams, k1), ParameterError);
}

TEST(ExactProperties, ConditionalSurvivalIgnoresDetectionWhenUntreated) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 300; ++i) {
    RateParams p = stagesurv::test_support::random_params(rng);
    p.gamma = 0.0;
    RateParams q = stagesurv::test_support::random_params(rng);
    q.lambda1 = p.lambda1;
    q.lambda2 = p.lambda2;
    q.mu = p.mu;
    q.gamma = 0.0;
    q.kappa1 = std::min(q.kappa1, 1.0 - q.lambda1);
    q.kappa2 = std::min(q.kappa2, 1.0 - q.lambda2);
    const StageSurvival a = five_year_survival(build_transition_matrix(p));
    const StageSurvival b = five_year_survival(build_transition_matrix(q));
    EXPECT_EQ(a.localized, b.localized);
    EXPECT_EQ(a.regional, b.regional);
    EXPECT_EQ(a.distant, b.distant);
  }
}

TEST(ExactProperties, PooledIncreasesWithKappa1WhenSurvivalIsOrdered) {
  std::mt19937_64 rng(13);
  int checked = 0;
  for (int i = 0; i < 500; ++i) {
    RateParams p = stagesurv::test_support::random_params(rng);
    p.gamma = 0.0;
    const StageSurvival s = five_year_survival(build_transition_matrix(p));
    if (!(s.localized > s.regional && s.regional > s.distant)) continue;
    RateParams q = p;
    q.kappa1 = p.kappa1 + 0.5 * (1.0 - p.lambda1 - p.kappa1);
    if (q.kappa1 <= p.kappa1) continue;
    EXPECT_GT(pooled_survival(build_transition_matrix(q), 5), pooled_survival(build_transition_matrix(p), 5));
    ++checked;
  }
  EXPECT_GT(checked, 100);
}
