// Copyright 2026 The Remeasure Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "remeasure/agent.h"

#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "gtest/gtest.h"
#include "oracles.h"
#include "remeasure/dgm_config.h"
#include "remeasure/rng.h"
#include "test_support.h"

namespace remeasure {
namespace {

Schema AB() { return test::MakeSchema({"a", "b"}, {2, 2}); }

// Records laid out by cell (a, b) -> cells[2a + b].
std::shared_ptr<const Dataset> FromCells(const std::array<int, 4>& cells) {
  std::vector<int32_t> flat;
  for (int c = 0; c < 4; ++c) {
    for (int i = 0; i < cells[c]; ++i) {
      flat.push_back(c / 2);
      flat.push_back(c % 2);
    }
  }
  return std::make_shared<const Dataset>(*Dataset::Create(AB(), std::move(flat)));
}

// Count of records with attribute `name` in bin 0.
Question Quantitative(const std::string& id, const std::string& name,
                      double constant = 50) {
  Question q;
  q.id = id;
  q.functional = LinearQuery::BinMarginal(test::MakeDomain(AB(), {name}), 0, 0);
  q.normalization_constant = constant;
  return q;
}

Question Binary(const std::string& id, const std::string& name, int64_t value) {
  Question q = Quantitative(id, name, 2);
  q.kind = QuestionKind::kBinary;
  q.threshold = Threshold{value, ThresholdDirection::kGreaterThan};
  return q;
}

// Four versions whose "a = 0" counts are 100, 110, 120, 130 out of 200.
DataGeneratingModel Ladder(SessionConfig session = {}) {
  std::vector<std::shared_ptr<const Dataset>> versions;
  for (int a0 : {100, 110, 120, 130}) {
    versions.push_back(FromCells({a0 / 2, a0 - a0 / 2, 50, 150 - a0}));
  }
  return *DataGeneratingModel::Create(
      versions, {}, {Quantitative("Q1", "a"), Binary("Q2", "a", 115)}, session);
}

// Four questions over four distinct versions.
DataGeneratingModel FourQuestions(SessionConfig session = {}) {
  std::vector<std::shared_ptr<const Dataset>> versions = {
      FromCells({40, 50, 30, 80}), FromCells({55, 45, 35, 65}),
      FromCells({48, 62, 60, 30}), FromCells({62, 58, 45, 35})};
  return *DataGeneratingModel::Create(
      versions, {0.1, 0.2, 0.3, 0.4},
      {Quantitative("Q1", "a", 30), Quantitative("Q2", "b", 30),
       Binary("Q3", "a", 105), Binary("Q4", "b", 100)},
      session);
}

TEST(CompositionsTest, SixOverFourGivesEightyFour) {
  const std::vector<Allocation> all = EnumerateCompositions(6, 4);
  ASSERT_EQ(all.size(), 84u);
  EXPECT_EQ(all.front(), (Allocation{0, 0, 0, 6}));
  EXPECT_EQ(all.back(), (Allocation{6, 0, 0, 0}));
  const std::set<Allocation> unique(all.begin(), all.end());
  EXPECT_EQ(unique.size(), 84u);
  EXPECT_TRUE(std::is_sorted(all.begin(), all.end()));
  for (const Allocation& a : all) {
    EXPECT_EQ(std::accumulate(a.begin(), a.end(), 0), 6);
    EXPECT_TRUE(InBudget(a, 6));
  }
  EXPECT_EQ(EnumerateCompositions(0, 3), (std::vector<Allocation>{{0, 0, 0}}));
  EXPECT_FALSE(InBudget({6, 6, 6, 6}, 6));
  EXPECT_FALSE(InBudget({-1, 2}, 6));
}

TEST(LowerBoundTest, UniformOverDatasetSize) {
  const std::vector<Question> qs = {Quantitative("Q1", "a"),
                                    Binary("Q2", "a", 327)};
  const std::vector<Report> r = LowerBoundReports(qs, 1000);
  const auto& interval = std::get<IntervalReport>(r[0]);
  EXPECT_EQ(interval.lower, 25);
  EXPECT_EQ(interval.upper, 975);
  EXPECT_NEAR(std::get<BinaryReport>(r[1]).p_yes, 0.6723276723276723, 1e-15);
  const auto empty = std::get<IntervalReport>(LowerBoundReports(qs, 0)[0]);
  EXPECT_EQ(empty.lower, 0);
  EXPECT_EQ(empty.upper, 0);
}

TEST(LowerBoundTest, MatchesQuantileOracle) {
  for (int n : {1, 7, 40, 999, 1000, 2021}) {
    std::vector<std::pair<double, double>> uniform;
    for (int x = 0; x <= n; ++x) uniform.emplace_back(x, 1.0 / (n + 1));
    const auto r = std::get<IntervalReport>(
        LowerBoundReports(std::vector<Question>{Quantitative("Q", "a")}, n)[0]);
    EXPECT_EQ(r.lower, oracle::DiscreteQuantile(uniform, 0.025)) << n;
    EXPECT_EQ(r.upper, oracle::DiscreteQuantile(uniform, 0.975)) << n;
  }
}

TEST(RPriorTest, ResampledQuantilesOfVersionAnswers) {
  const DataGeneratingModel dgm = Ladder();
  const std::vector<Report> r = RPriorReports(dgm, 10000, 3);
  EXPECT_EQ(std::get<IntervalReport>(r[0]).lower, 100);
  EXPECT_EQ(std::get<IntervalReport>(r[0]).upper, 130);
  // Two of the four versions exceed 115.
  EXPECT_NEAR(std::get<BinaryReport>(r[1]).p_yes, 0.5, 0.02);
}

TEST(RPriorTest, EqualAnswersGiveAPointInterval) {
  std::vector<std::shared_ptr<const Dataset>> versions;
  for (int i = 0; i < 4; ++i) versions.push_back(FromCells({20 + i, 30 - i, 50, 50}));
  const DataGeneratingModel dgm = *DataGeneratingModel::Create(
      versions, {}, {Quantitative("Q1", "a")}, {});
  const auto r = std::get<IntervalReport>(RPriorReports(dgm, 10000, 1)[0]);
  EXPECT_EQ(r.lower, 50);
  EXPECT_EQ(r.upper, 50);
}

TEST(PosteriorTest, NoMeasurementsIsThePrior) {
  const DataGeneratingModel dgm = FourQuestions();
  const auto p = Posterior(dgm, {});
  ASSERT_OK(p);
  for (int v = 0; v < 4; ++v) EXPECT_NEAR((*p)[v], dgm.prior()[v], 1e-15);
}

TEST(PosteriorTest, VanishingNoiseConcentratesOnTheMatchingVersion) {
  const DataGeneratingModel dgm = FourQuestions();
  Measurement m;
  m.strategy = dgm.strategy(0);
  m.noisy_answers = dgm.exact_answers(0, 2);
  m.noise_scale = 1e-6;
  m.epsilon = 1e6;
  const std::vector<std::vector<Measurement>> by_q = {{m}};
  const std::vector<double> p = *Posterior(dgm, by_q);
  EXPECT_NEAR(p[2], 1.0, 1e-12);
}

DataGeneratingModel TwoVersions(int a0, int a1, double prior0) {
  // Both versions have 24 records, so the second row carries a0 vs a1 mirrored.
  return *DataGeneratingModel::Create(
      {FromCells({a0, 0, 24 - a0, 0}), FromCells({a1, 0, 24 - a1, 0})},
      {prior0, 1 - prior0}, {Quantitative("Q1", "a")}, {});
}

TEST(PosteriorTest, TwoVersionBayesRatio) {
  const DataGeneratingModel dgm = TwoVersions(10, 14, 0.3);
  Measurement m;
  m.strategy = dgm.strategy(0);
  m.noise_scale = 2;
  // The second row sits 2 from both versions' answers, so only the first
  // row discriminates.
  m.noisy_answers = Eigen::Vector2d(11, 12);
  const std::vector<std::vector<Measurement>> by_q = {{m}};
  EXPECT_NEAR((*Posterior(dgm, by_q))[0], 0.5381015262244488, 1e-12);
}

TEST(PosteriorPropertyTest, MatchesClosedFormOnTwoVersionInstances) {
  std::mt19937 gen(12);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 300; ++trial) {
    const int a0 = gen() % 25, a1 = gen() % 25;
    const double prior0 = 0.05 + 0.9 * u(gen);
    const DataGeneratingModel dgm = TwoVersions(a0, a1, prior0);
    const int n = 1 + gen() % 4;
    std::vector<Measurement> ms;
    double ll0 = 0, ll1 = 0;
    for (int i = 0; i < n; ++i) {
      Measurement m;
      m.strategy = dgm.strategy(0);
      m.noise_scale = 0.05 + 5 * u(gen);
      m.noisy_answers = Eigen::Vector2d(30 * u(gen) - 3, 30 * u(gen) - 3);
      for (int r = 0; r < 2; ++r) {
        const double x0 = r == 0 ? a0 : 24 - a0, x1 = r == 0 ? a1 : 24 - a1;
        ll0 -= std::fabs(m.noisy_answers[r] - x0) / m.noise_scale;
        ll1 -= std::fabs(m.noisy_answers[r] - x1) / m.noise_scale;
      }
      ms.push_back(m);
    }
    const double oracle =
        1 / (1 + (1 - prior0) / prior0 * std::exp(ll1 - ll0));
    const std::vector<std::vector<Measurement>> by_q = {ms};
    EXPECT_NEAR((*Posterior(dgm, by_q))[0], oracle, 1e-9);
  }
}

TEST(PosteriorTest, LogSpaceSurvivesExtremeLikelihoods) {
  const std::vector<double> prior = {0.5, 0.5};
  const std::vector<double> loglik = {-1e6, -1e6 - std::log(3.0)};
  const std::vector<double> p = PosteriorFromLogLikelihood(prior, loglik);
  // -1e6 - log 3 is itself rounded at about 1e-10.
  EXPECT_NEAR(p[0], 0.75, 1e-9);
  EXPECT_NEAR(p[1], 0.25, 1e-9);
}

TEST(OptimalReportTest, WorkedExamples) {
  const DataGeneratingModel dgm = Ladder();
  const std::vector<double> uniform(4, 0.25);
  const auto r = std::get<IntervalReport>(OptimalReport(uniform, dgm, 0));
  EXPECT_EQ(r.lower, 100);
  EXPECT_EQ(r.upper, 130);
  const std::vector<double> point = {0, 0, 1, 0};
  const auto p = std::get<IntervalReport>(OptimalReport(point, dgm, 0));
  EXPECT_EQ(p.lower, 120);
  EXPECT_EQ(p.upper, 120);
  // Versions 2 and 3 exceed 115.
  const std::vector<double> skew = {0.05, 0.05, 0.6, 0.3};
  EXPECT_NEAR(std::get<BinaryReport>(OptimalReport(skew, dgm, 1)).p_yes, 0.9,
              1e-12);

  // Brute force over endpoint pairs agrees on the uniform posterior.
  const std::vector<double> support = {100, 110, 120, 130};
  EXPECT_NEAR(oracle::ExpectedIntervalScore(r.lower, r.upper, support, uniform,
                                            kDefaultAlpha),
              oracle::BestExpectedIntervalScore(support, uniform, kDefaultAlpha),
              1e-9);
}

TEST(OptimalReportPropertyTest, BeatsRandomAlternatives) {
  const DataGeneratingModel dgm = Ladder();
  std::mt19937 gen(99);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> post(4);
    double total = 0;
    for (double& p : post) total += (p = u(gen));
    for (double& p : post) p /= total;
    const auto interval = std::get<IntervalReport>(OptimalReport(post, dgm, 0));
    const double p_yes = std::get<BinaryReport>(OptimalReport(post, dgm, 1)).p_yes;
    const auto expected_interval = [&](double l, double h) {
      double e = 0;
      for (int v = 0; v < 4; ++v) {
        e += post[v] * *IntervalScore({l, h}, dgm.truth(0, v).count);
      }
      return e;
    };
    const auto expected_brier = [&](double p) {
      double e = 0;
      for (int v = 0; v < 4; ++v) e += post[v] * *BrierScore({p}, dgm.truth(1, v).yes);
      return e;
    };
    const double best_interval = expected_interval(interval.lower, interval.upper);
    const double best_brier = expected_brier(p_yes);
    for (int alt = 0; alt < 1000; ++alt) {
      double l = 80 + 70 * u(gen), h = 80 + 70 * u(gen);
      if (l > h) std::swap(l, h);
      EXPECT_LE(best_interval, expected_interval(l, h) + 1e-9);
      EXPECT_LE(best_brier, expected_brier(u(gen)) + 1e-12);
    }
  }
}

TEST(ExpectedPayoffTest, HugeEpsilonEarnsTheFullBlock) {
  const DataGeneratingModel dgm = FourQuestions(
      {.epsilon_per_remeasure = 1e9, .initial_epsilon_per_query = 1e9});
  const PayoffEstimate e = *ExpectedPayoff(dgm, {0, 0, 0, 0}, 200, 1);
  EXPECT_NEAR(e.mean, 10.0, 1e-9);
  EXPECT_EQ(e.trials, 200);
}

TEST(ExpectedPayoffTest, IsReproducibleAndValidatesInput) {
  const DataGeneratingModel dgm = FourQuestions();
  const PayoffEstimate a = *ExpectedPayoff(dgm, {1, 2, 0, 3}, 300, 5);
  const PayoffEstimate b = *ExpectedPayoff(dgm, {1, 2, 0, 3}, 300, 5);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.std_err, b.std_err);
  EXPECT_FALSE(ExpectedPayoff(dgm, {1, 2}, 300, 5).ok());
  EXPECT_FALSE(ExpectedPayoff(dgm, {0, 0, 0, 0}, 0, 5).ok());
}

TEST(ExpectedPayoffPropertyTest, MoreRemeasuresNeverHurtUnderCommonNoise) {
  const DataGeneratingModel dgm = FourQuestions({.epsilon_per_remeasure = 0.05,
                                                 .initial_epsilon_per_query = 0.05});
  const int trials = 1500;
  std::mt19937 gen(3);
  for (int step = 0; step < 12; ++step) {
    Allocation base(4);
    for (int& x : base) x = gen() % 3;
    const PayoffEstimate before = *ExpectedPayoff(dgm, base, trials, 11);
    Allocation more = base;
    ++more[gen() % 4];
    const PayoffEstimate after = *ExpectedPayoff(dgm, more, trials, 11);
    EXPECT_GE(after.mean, before.mean - 2 * std::hypot(before.std_err, after.std_err));
  }
}

TEST(BenchmarksTest, OrderingHoldsOnCensusLikeFixture) {
  const DataGeneratingModel dgm = *LoadDgm(test::Fixture("dgm/census_like.json"));
  BenchmarkOptions options;
  options.trials = 2000;
  options.seed = 4;
  const BenchmarkReport r = *Benchmarks(dgm, options);
  EXPECT_EQ(r.ex_ante_candidates, 84);
  EXPECT_TRUE(InBudget(r.ex_ante_allocation, 6));
  EXPECT_FALSE(r.r_posterior_same.has_value());
  EXPECT_EQ(r.trials, 2000);
  const std::vector<std::string> violations = OrderingViolations(r);
  EXPECT_TRUE(violations.empty()) << violations.front();
  EXPECT_GT(r.upper_bound.dollars, r.lower_bound.dollars);
}

TEST(BenchmarksTest, SaturatedBlockEarnsTenPosteriorDollars) {
  const DataGeneratingModel dgm = FourQuestions(
      {.epsilon_per_remeasure = 1e9, .initial_epsilon_per_query = 1e9});
  BenchmarkOptions options;
  options.trials = 100;
  options.prior_draws = 1000;
  const BenchmarkReport r = *Benchmarks(dgm, options);
  for (const BenchmarkEntry& e :
       {r.r_posterior_zero, r.r_posterior_rand, r.r_posterior_ex_ante,
        r.upper_bound}) {
    EXPECT_NEAR(e.dollars, 10.0, 1e-9);
  }
}

TEST(BenchmarksTest, DeterministicForASeed) {
  const DataGeneratingModel dgm = FourQuestions();
  BenchmarkOptions options;
  options.trials = 150;
  options.prior_draws = 500;
  options.seed = 8;
  EXPECT_EQ(BenchmarkReportToJson(*Benchmarks(dgm, options)).dump(),
            BenchmarkReportToJson(*Benchmarks(dgm, options)).dump());
}

TEST(BenchmarksTest, ObservedAllocations) {
  const DataGeneratingModel dgm = FourQuestions();
  BenchmarkOptions options;
  options.trials = 200;
  options.prior_draws = 500;
  options.observed = {{"b1", {6, 0, 0, 0}, 7.0, {}, {}},
                      {"b2", {1, 1, 2, 2}, 5.0, {}, {}}};
  const BenchmarkReport r = *Benchmarks(dgm, options);
  ASSERT_TRUE(r.r_posterior_same.has_value());
  EXPECT_NEAR(*r.observed_payoff, 6.0, 1e-12);
  EXPECT_GT(r.r_posterior_same->dollars, 0);

  options.observed = {{"b1", {6, 1, 0, 0}, std::nullopt, {}, {}}};
  EXPECT_FALSE(Benchmarks(dgm, options).ok());
  options.observed = {{"b1", {1, 1}, std::nullopt, {}, {}}};
  EXPECT_FALSE(Benchmarks(dgm, options).ok());
}

TEST(BenchmarksTest, RandomModesBothRun) {
  const DataGeneratingModel dgm = FourQuestions();
  BenchmarkOptions options;
  options.trials = 200;
  options.prior_draws = 500;
  options.random_mode = RandomAllocationMode::kUniformComposition;
  const BenchmarkReport r = *Benchmarks(dgm, options);
  EXPECT_GE(r.r_posterior_rand.dollars, 0);
  EXPECT_LE(r.r_posterior_rand.dollars, 10);
}

BenchmarkReport HandReport() {
  BenchmarkReport r;
  r.lower_bound = {2.0, 0};
  r.r_prior = {5.0, 0};
  r.r_posterior_zero = {7.0, 0};
  r.r_posterior_rand = {8.0, 0};
  r.r_posterior_ex_ante = {8.88, 0};
  r.r_posterior_same = BenchmarkEntry{8.88, 0};
  r.upper_bound = {9.10, 0};
  return r;
}

TEST(LossesTest, FormulasOnReferencePoints) {
  const LossReport l = *Losses(6.0, HandReport());
  EXPECT_NEAR(l.total_loss, 0.43661971830985913, 1e-12);
  EXPECT_NEAR(l.reporting_loss, 0.40563380281690153, 1e-12);
  EXPECT_NEAR(l.allocation_loss_overall, 0.030985915492957587, 1e-12);
  EXPECT_NEAR(l.allocation_loss_separated, 0.10476190476190424, 1e-12);
  EXPECT_NEAR(l.allocation_loss_separated_full_budget, 0.19999999999999904,
              1e-12);
  EXPECT_NEAR(l.total_loss, l.reporting_loss + l.allocation_loss_overall, 1e-12);
  EXPECT_EQ(LossReportToJson(l)["observedPayoff"], 6.0);
}

TEST(LossesTest, DegenerateCases) {
  BenchmarkReport r = HandReport();
  EXPECT_NEAR(Losses(8.88, r)->reporting_loss, 0, 1e-15);
  r.r_posterior_same = BenchmarkEntry{9.10, 0};
  EXPECT_NEAR(Losses(5, r)->allocation_loss_overall, 0, 1e-15);
  r.r_posterior_same.reset();
  EXPECT_EQ(Losses(5, r).status().code(), absl::StatusCode::kFailedPrecondition);
  r = HandReport();
  r.upper_bound = r.lower_bound;
  EXPECT_FALSE(Losses(5, r).ok());
}

TEST(LossesPropertyTest, TotalIsReportingPlusAllocation) {
  std::mt19937 gen(6);
  std::uniform_real_distribution<double> u(0, 10);
  for (int i = 0; i < 1000; ++i) {
    BenchmarkReport r = HandReport();
    r.lower_bound.dollars = u(gen) / 5;
    r.upper_bound.dollars = 8 + u(gen) / 5;
    r.r_posterior_same = BenchmarkEntry{3 + u(gen) / 2, 0};
    const LossReport l = *Losses(u(gen), r);
    EXPECT_NEAR(l.total_loss, l.reporting_loss + l.allocation_loss_overall,
                1e-12);
  }
}

TEST(CompareParadigmsTest, ClosedFormAndMonteCarlo) {
  const std::vector<double> xs = {0.3};
  const std::vector<double> ks = {1, 2, 3, 1000};
  const std::vector<ParadigmRow> rows = *CompareParadigms(xs, ks, 20000, 2);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_NEAR(rows[1].rmse_mor / rows[1].rmse_mo, 0.8944271909999159, 1e-12);
  EXPECT_NEAR(rows[1].rmse_mo, std::sqrt(2.0) / 0.6, 1e-12);
  EXPECT_GT(rows[3].rmse_mor / rows[3].rmse_mo, 0.99999);
  for (const ParadigmRow& r : rows) {
    EXPECT_LT(r.rmse_mor, r.rmse_mo);
    if (r.k < 100) {
      EXPECT_NEAR(r.mc_rmse_mo / r.rmse_mo, 1, 0.04);
      EXPECT_NEAR(r.mc_rmse_mor / r.rmse_mor, 1, 0.04);
    }
  }
  const std::vector<double> bad = {-1};
  EXPECT_FALSE(CompareParadigms(bad, ks, 10, 1).ok());
}

TEST(CalibrationTest, PositiveDeterministicAndTwoForBinary) {
  const DataGeneratingModel dgm = FourQuestions();
  const double c = *CalibrateNormalizationConstant(dgm, 0, 2000, 7);
  EXPECT_GT(c, 0);
  EXPECT_EQ(*CalibrateNormalizationConstant(dgm, 0, 2000, 7), c);
  EXPECT_EQ(*CalibrateNormalizationConstant(dgm, 2, 2000, 7), 2.0);
  EXPECT_FALSE(CalibrateNormalizationConstant(dgm, 9, 2000, 7).ok());
}

TEST(BenchmarkOutputTest, JsonAndCsvShapes) {
  const BenchmarkReport r = HandReport();
  const nlohmann::json j = BenchmarkReportToJson(r);
  EXPECT_EQ(j["upperBound"]["dollars"], 9.10);
  EXPECT_EQ(j["upperBoundInBudget"], false);
  const std::string csv = BenchmarkReportToCsv(r);
  EXPECT_EQ(csv.rfind("benchmark,dollars,stdErr\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 8);
  BenchmarkReport without_same = r;
  without_same.r_posterior_same.reset();
  EXPECT_TRUE(BenchmarkReportToJson(without_same)["rPosteriorSame"].is_null());
}

}  // namespace
}  // namespace remeasure
