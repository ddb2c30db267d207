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

// Proper scoring rules and their conversion to dollar payoffs.
//
// Interval score (lower is better) for a central (1 - alpha) interval [l, u]:
//
//   S(l, u; x) = (u - l) + (2/alpha)(l - x) 1{x < l} + (2/alpha)(x - u) 1{x > u}
//
// Brier score for a reported probability p of "yes":
//
//   S(p; theta) = (p - 1{yes})^2 + ((1 - p) - 1{no})^2 = 2 (p - 1{yes})^2
//
// A question's score becomes a payoff via clamp((C - S) / C, 0, 1) * max,
// with C the question's normalization constant.

#ifndef REMEASURE_SCORING_H_
#define REMEASURE_SCORING_H_

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "absl/status/statusor.h"
#include "nlohmann/json.hpp"
#include "remeasure/domain.h"

namespace remeasure {

inline constexpr double kDefaultAlpha = 0.05;
inline constexpr double kPerQuestionMax = 2.50;
inline constexpr double kBinaryConstant = 2.0;

struct IntervalReport {
  double lower = 0;
  double upper = 0;
  double alpha = kDefaultAlpha;
};

struct BinaryReport {
  double p_yes = 0.5;
};

using Report = std::variant<IntervalReport, BinaryReport>;

absl::StatusOr<double> IntervalScore(const IntervalReport& report,
                                     double truth);
absl::StatusOr<double> BrierScore(const BinaryReport& report, bool truth_yes);

// Requires constant > 0; the result lies in [0, per_question_max].
double NormalizeToPayoff(double score, double constant,
                         double per_question_max = kPerQuestionMax);

struct QuestionScoring {
  std::string id;
  QuestionKind kind = QuestionKind::kQuantitative;
  double constant = kBinaryConstant;
};

struct PayoffConfig {
  double per_question_max = kPerQuestionMax;
  std::vector<QuestionScoring> questions;

  absl::Status Validate() const;
  // Index of question `id`, or -1.
  int IndexOf(std::string_view id) const;
};

// {"questions": [{"id", "kind", "constant"?}], "perQuestionMax"?}. A binary
// question without a constant gets 2.
absl::StatusOr<PayoffConfig> PayoffConfigFromJson(const nlohmann::json& j);
nlohmann::json PayoffConfigToJson(const PayoffConfig& config);

// Scores one answer against its truth and converts it to dollars. Fails when
// the report kind does not match the truth kind.
absl::StatusOr<double> ScoreAnswer(const Report& report,
                                   const GroundTruth& truth, double constant,
                                   double per_question_max);

struct BlockScore {
  std::vector<double> per_question;
  double total = 0;
};

// reports[i] and truths[i] answer config.questions[i].
absl::StatusOr<BlockScore> ScoreBlock(std::span<const Report> reports,
                                      std::span<const GroundTruth> truths,
                                      const PayoffConfig& config);

nlohmann::json ReportToJson(const Report& report);

}  // namespace remeasure

#endif  // REMEASURE_SCORING_H_
