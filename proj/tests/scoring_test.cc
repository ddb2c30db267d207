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

#include "remeasure/scoring.h"

#include <fstream>
#include <random>

#include "gtest/gtest.h"
#include "oracles.h"
#include "test_support.h"

namespace remeasure {
namespace {

GroundTruth Count(double c) { return {QuestionKind::kQuantitative, c, false}; }
GroundTruth Outcome(bool yes) { return {QuestionKind::kBinary, 0, yes}; }

TEST(IntervalScoreTest, WorkedExamples) {
  EXPECT_EQ(*IntervalScore({10, 20}, 15), 10);
  EXPECT_DOUBLE_EQ(*IntervalScore({10, 20}, 25), 210);
  EXPECT_DOUBLE_EQ(*IntervalScore({10, 20}, 5), 210);
  EXPECT_EQ(*IntervalScore({10, 20}, 10), 10);
  EXPECT_EQ(*IntervalScore({10, 20}, 20), 10);
}

TEST(IntervalScoreTest, RejectsInvertedIntervalAndBadAlpha) {
  EXPECT_FALSE(IntervalScore({20, 10}, 15).ok());
  EXPECT_FALSE(IntervalScore({10, 20, 0.0}, 15).ok());
  EXPECT_FALSE(IntervalScore({10, 20, 1.0}, 15).ok());
}

TEST(IntervalScoreTest, MatchesOracleOnRandomInputs) {
  std::mt19937 gen(4);
  std::uniform_real_distribution<double> u(-50, 150);
  for (int i = 0; i < 1000; ++i) {
    double l = u(gen), h = u(gen);
    if (l > h) std::swap(l, h);
    const double x = u(gen);
    const double alpha = 0.01 + 0.3 * (i % 7) / 7.0;
    EXPECT_NEAR(*IntervalScore({l, h, alpha}, x),
                oracle::IntervalScore(l, h, x, alpha), 1e-9);
  }
}

TEST(BrierScoreTest, WorkedExamples) {
  EXPECT_EQ(*BrierScore({1.0}, true), 0);
  EXPECT_EQ(*BrierScore({0.0}, true), 2);
  EXPECT_EQ(*BrierScore({0.5}, true), 0.5);
  EXPECT_EQ(*BrierScore({0.5}, false), 0.5);
  EXPECT_EQ(*BrierScore({0.0}, false), 0);
  EXPECT_FALSE(BrierScore({1.5}, true).ok());
  EXPECT_FALSE(BrierScore({-0.1}, false).ok());
}

TEST(NormalizeTest, WorkedExamples) {
  EXPECT_EQ(NormalizeToPayoff(0, kBinaryConstant), 2.50);
  EXPECT_EQ(NormalizeToPayoff(210, 75.00), 0.0);
  EXPECT_EQ(NormalizeToPayoff(75.00, 75.00), 0.0);
  EXPECT_EQ(NormalizeToPayoff(37.5, 75.00), 1.25);
  EXPECT_EQ(NormalizeToPayoff(1, 2), 1.25);
}

TEST(ScoreBlockTest, PerfectAndWorstAnswers) {
  const PayoffConfig config{
      kPerQuestionMax,
      {{"Q1", QuestionKind::kQuantitative, 75.00},
       {"Q2", QuestionKind::kBinary, 2},
       {"Q3", QuestionKind::kQuantitative, 217.69},
       {"Q4", QuestionKind::kQuantitative, 56.8}}};
  const std::vector<GroundTruth> truths = {Count(120), Outcome(true),
                                           Count(450), Count(55)};
  const std::vector<Report> perfect = {IntervalReport{120, 120},
                                       BinaryReport{1.0},
                                       IntervalReport{450, 450},
                                       IntervalReport{55, 55}};
  const BlockScore best = *ScoreBlock(perfect, truths, config);
  EXPECT_EQ(best.total, 10.0);
  const std::vector<Report> worst = {IntervalReport{0, 1000}, BinaryReport{0},
                                     IntervalReport{0, 0},
                                     IntervalReport{900, 901}};
  const BlockScore zero = *ScoreBlock(worst, truths, config);
  EXPECT_EQ(zero.total, 0.0);
}

TEST(ScoreBlockTest, MixedBlockIsTheSumOfHandComputedPayoffs) {
  std::ifstream in(test::Fixture("scoring/census_config.json"));
  const PayoffConfig config = *PayoffConfigFromJson(nlohmann::json::parse(in));
  const std::vector<GroundTruth> truths = {Count(120), Outcome(true),
                                           Count(450), Count(55)};
  const std::vector<Report> reports = {IntervalReport{100, 130},
                                       BinaryReport{0.8},
                                       IntervalReport{400, 440},
                                       IntervalReport{50, 60}};
  const BlockScore s = *ScoreBlock(reports, truths, config);
  // Q1 width 30 -> 2.5 * 45/75; Q2 Brier 0.08 -> 2.5 * 0.96; Q3 width 40
  // plus 40 * 10 -> clamped; Q4 width 10 -> 2.5 * 46.8/56.8.
  ASSERT_EQ(s.per_question.size(), 4u);
  EXPECT_NEAR(s.per_question[0], 1.5, 1e-12);
  EXPECT_NEAR(s.per_question[1], 2.4, 1e-12);
  EXPECT_EQ(s.per_question[2], 0.0);
  EXPECT_NEAR(s.per_question[3], 2.0598591549295775, 1e-12);
  EXPECT_NEAR(s.total, 5.959859154929577, 1e-12);
}

TEST(ScoreBlockTest, RejectsKindAndSizeMismatch) {
  const PayoffConfig config{kPerQuestionMax,
                            {{"Q1", QuestionKind::kQuantitative, 75},
                             {"Q2", QuestionKind::kBinary, 2}}};
  const std::vector<GroundTruth> truths = {Count(1), Outcome(true)};
  const std::vector<Report> swapped = {BinaryReport{0.5}, IntervalReport{0, 1}};
  EXPECT_FALSE(ScoreBlock(swapped, truths, config).ok());
  const std::vector<Report> short_block = {IntervalReport{0, 1}};
  EXPECT_FALSE(ScoreBlock(short_block, truths, config).ok());
  EXPECT_FALSE(
      ScoreAnswer(IntervalReport{0, 1}, Outcome(true), 2, kPerQuestionMax).ok());
}

TEST(PayoffConfigTest, JsonDefaultsAndValidation) {
  const auto c = PayoffConfigFromJson(nlohmann::json::parse(
      R"({"questions":[{"id":"Q1","kind":"binary"},
                       {"id":"Q2","kind":"quantitative","constant":56.8}]})"));
  ASSERT_OK(c);
  EXPECT_EQ(c->per_question_max, 2.50);
  EXPECT_EQ(c->questions[0].constant, 2.0);
  EXPECT_EQ(c->IndexOf("Q2"), 1);
  EXPECT_EQ(c->IndexOf("Q9"), -1);
  EXPECT_EQ(PayoffConfigFromJson(PayoffConfigToJson(*c))->questions[1].constant,
            56.8);
  EXPECT_FALSE(PayoffConfigFromJson(nlohmann::json::parse(
                   R"({"questions":[{"id":"Q1","kind":"quantitative"}]})"))
                   .ok());
  EXPECT_FALSE(PayoffConfigFromJson(nlohmann::json::parse(
                   R"({"questions":[{"id":"Q1","kind":"binary","constant":-1}]})"))
                   .ok());
  EXPECT_FALSE(PayoffConfigFromJson(nlohmann::json::parse(
                   R"({"questions":[{"id":"Q1","kind":"binary"},
                                    {"id":"Q1","kind":"binary"}]})"))
                   .ok());
}

TEST(ScoringPropertyTest, QuantileIntervalIsNeverBeaten) {
  std::mt19937 gen(2026);
  for (int belief = 0; belief < 50; ++belief) {
    const int k = 3 + gen() % 10;
    std::vector<double> support, probs;
    std::vector<std::pair<double, double>> dist;
    double total = 0;
    for (int i = 0; i < k; ++i) {
      support.push_back(static_cast<double>(gen() % 200));
      probs.push_back(1 + gen() % 100);
      total += probs.back();
    }
    for (int i = 0; i < k; ++i) {
      probs[i] /= total;
      dist.emplace_back(support[i], probs[i]);
    }
    const double alpha = belief % 2 ? 0.05 : 0.2;
    const double l = oracle::DiscreteQuantile(dist, alpha / 2);
    const double u = oracle::DiscreteQuantile(dist, 1 - alpha / 2);
    double expected = 0;
    for (int i = 0; i < k; ++i) {
      expected += probs[i] * *IntervalScore({l, u, alpha}, support[i]);
    }
    EXPECT_LE(expected,
              oracle::BestExpectedIntervalScore(support, probs, alpha) + 1e-9);
    // Also unbeaten off the support grid.
    for (double dl = -3; dl <= 3; dl += 0.5) {
      for (double du = -3; du <= 3; du += 0.5) {
        if (l + dl > u + du) continue;
        EXPECT_LE(expected, oracle::ExpectedIntervalScore(
                                l + dl, u + du, support, probs, alpha) +
                                1e-9);
      }
    }
  }
}

TEST(ScoringPropertyTest, TruthfulBrierReportIsOptimalOnAGrid) {
  for (int b = 0; b <= 100; ++b) {
    const double belief = b / 100.0;
    const auto expected = [&](double p) {
      return belief * *BrierScore({p}, true) +
             (1 - belief) * *BrierScore({p}, false);
    };
    EXPECT_NEAR(expected(belief), oracle::ExpectedBrier(belief, belief), 1e-12);
    for (int g = 0; g <= 100; ++g) {
      EXPECT_LE(expected(belief), expected(g / 100.0) + 1e-12);
    }
  }
}

TEST(ScoringPropertyTest, PayoffsStayInBounds) {
  std::mt19937 gen(17);
  std::uniform_real_distribution<double> u(-1000, 5000);
  for (int i = 0; i < 5000; ++i) {
    const double constant = 0.1 + std::fabs(u(gen));
    const double p = NormalizeToPayoff(std::fabs(u(gen)), constant);
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, kPerQuestionMax);
  }
}

TEST(ScoringPropertyTest, WideningACoveringIntervalStrictlyWorsens) {
  std::mt19937 gen(5);
  for (int i = 0; i < 500; ++i) {
    const double x = gen() % 1000;
    const double l = x - gen() % 50, u = x + gen() % 50;
    const double grow = 0.5 + gen() % 20;
    EXPECT_LT(*IntervalScore({l, u}, x), *IntervalScore({l - grow, u}, x));
    EXPECT_LT(*IntervalScore({l, u}, x), *IntervalScore({l, u + grow}, x));
  }
}

TEST(ReportJsonTest, DescribesBothKinds) {
  EXPECT_EQ(ReportToJson(IntervalReport{1, 2})["upper"], 2);
  EXPECT_EQ(ReportToJson(BinaryReport{0.3})["pYes"], 0.3);
}

}  // namespace
}  // namespace remeasure
