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

#include <algorithm>
#include <cmath>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace remeasure {

absl::StatusOr<double> IntervalScore(const IntervalReport& report,
                                     double truth) {
  if (!(report.lower <= report.upper)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "inverted interval [", report.lower, ", ", report.upper, "]"));
  }
  if (!(report.alpha > 0 && report.alpha < 1)) {
    return absl::InvalidArgumentError("alpha must lie in (0, 1)");
  }
  const double penalty = 2.0 / report.alpha;
  double score = report.upper - report.lower;
  if (truth < report.lower) score += penalty * (report.lower - truth);
  if (truth > report.upper) score += penalty * (truth - report.upper);
  return score;
}

absl::StatusOr<double> BrierScore(const BinaryReport& report, bool truth_yes) {
  if (!(report.p_yes >= 0 && report.p_yes <= 1)) {
    return absl::InvalidArgumentError(
        absl::StrCat("probability ", report.p_yes, " outside [0, 1]"));
  }
  const double yes = truth_yes ? 1.0 : 0.0;
  const double d_yes = report.p_yes - yes;
  const double d_no = (1.0 - report.p_yes) - (1.0 - yes);
  return d_yes * d_yes + d_no * d_no;
}

double NormalizeToPayoff(double score, double constant,
                         double per_question_max) {
  const double normalized = std::clamp((constant - score) / constant, 0.0, 1.0);
  return normalized * per_question_max;
}

absl::Status PayoffConfig::Validate() const {
  if (!(per_question_max > 0)) {
    return absl::InvalidArgumentError("perQuestionMax must be positive");
  }
  for (size_t i = 0; i < questions.size(); ++i) {
    const QuestionScoring& q = questions[i];
    if (!(q.constant > 0) || !std::isfinite(q.constant)) {
      return absl::InvalidArgumentError(
          absl::StrCat("question '", q.id, "' constant must be positive"));
    }
    if (IndexOf(q.id) != static_cast<int>(i)) {
      return absl::InvalidArgumentError(
          absl::StrCat("duplicate question id '", q.id, "'"));
    }
  }
  return absl::OkStatus();
}

int PayoffConfig::IndexOf(std::string_view id) const {
  for (size_t i = 0; i < questions.size(); ++i) {
    if (questions[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

absl::StatusOr<PayoffConfig> PayoffConfigFromJson(const nlohmann::json& j) {
  PayoffConfig config;
  try {
    config.per_question_max = j.value("perQuestionMax", kPerQuestionMax);
    for (const nlohmann::json& q : j.at("questions")) {
      QuestionScoring qs;
      qs.id = q.at("id").get<std::string>();
      absl::StatusOr<QuestionKind> kind =
          ParseQuestionKind(q.at("kind").get<std::string>());
      if (!kind.ok()) return kind.status();
      qs.kind = *kind;
      if (q.contains("constant")) {
        qs.constant = q["constant"].get<double>();
      } else if (qs.kind == QuestionKind::kBinary) {
        qs.constant = kBinaryConstant;
      } else {
        return absl::InvalidArgumentError(absl::StrCat(
            "quantitative question '", qs.id, "' needs a constant"));
      }
      config.questions.push_back(std::move(qs));
    }
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("malformed scoring config: ", e.what()));
  }
  if (absl::Status s = config.Validate(); !s.ok()) return s;
  return config;
}

nlohmann::json PayoffConfigToJson(const PayoffConfig& config) {
  nlohmann::json qs = nlohmann::json::array();
  for (const QuestionScoring& q : config.questions) {
    qs.push_back({{"id", q.id},
                  {"kind", std::string(ToString(q.kind))},
                  {"constant", q.constant}});
  }
  return {{"questions", std::move(qs)},
          {"perQuestionMax", config.per_question_max}};
}

absl::StatusOr<double> ScoreAnswer(const Report& report,
                                   const GroundTruth& truth, double constant,
                                   double per_question_max) {
  absl::StatusOr<double> score;
  if (const auto* interval = std::get_if<IntervalReport>(&report)) {
    if (truth.kind != QuestionKind::kQuantitative) {
      return absl::InvalidArgumentError(
          "interval report for a binary question");
    }
    score = IntervalScore(*interval, truth.count);
  } else {
    if (truth.kind != QuestionKind::kBinary) {
      return absl::InvalidArgumentError(
          "probability report for a quantitative question");
    }
    score = BrierScore(std::get<BinaryReport>(report), truth.yes);
  }
  if (!score.ok()) return score.status();
  return NormalizeToPayoff(*score, constant, per_question_max);
}

absl::StatusOr<BlockScore> ScoreBlock(std::span<const Report> reports,
                                      std::span<const GroundTruth> truths,
                                      const PayoffConfig& config) {
  if (reports.size() != truths.size() ||
      reports.size() != config.questions.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "block has ", reports.size(), " reports, ", truths.size(),
        " truths and ", config.questions.size(), " configured questions"));
  }
  BlockScore out;
  for (size_t i = 0; i < reports.size(); ++i) {
    const QuestionScoring& q = config.questions[i];
    if (truths[i].kind != q.kind) {
      return absl::InvalidArgumentError(absl::StrCat(
          "question '", q.id, "' truth kind does not match its config"));
    }
    absl::StatusOr<double> payoff =
        ScoreAnswer(reports[i], truths[i], q.constant, config.per_question_max);
    if (!payoff.ok()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "question '", q.id, "': ", payoff.status().message()));
    }
    out.per_question.push_back(*payoff);
    out.total += *payoff;
  }
  return out;
}

nlohmann::json ReportToJson(const Report& report) {
  if (const auto* interval = std::get_if<IntervalReport>(&report)) {
    return {{"lower", interval->lower},
            {"upper", interval->upper},
            {"alpha", interval->alpha}};
  }
  return {{"pYes", std::get<BinaryReport>(report).p_yes}};
}

}  // namespace remeasure
