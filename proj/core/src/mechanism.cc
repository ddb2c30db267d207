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

#include "remeasure/mechanism.h"

#include <cmath>

#include "string_view_compat.h"
#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "remeasure/rng.h"

namespace remeasure {

std::string_view ToString(StrategyFamily family) {
  return family == StrategyFamily::kIdentity ? "identity"
                                             : "identity-plus-margins";
}

absl::StatusOr<StrategyFamily> ParseStrategyFamily(std::string_view s) {
  if (s == "identity") return StrategyFamily::kIdentity;
  if (s == "identity-plus-margins") return StrategyFamily::kIdentityPlusMargins;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown strategy family '", Av(s), "'"));
}

absl::StatusOr<double> Sensitivity(const Eigen::MatrixXd& matrix) {
  if (matrix.size() == 0) {
    return absl::InvalidArgumentError("empty strategy matrix");
  }
  return matrix.cwiseAbs().colwise().sum().maxCoeff();
}

absl::StatusOr<Strategy> Strategy::Create(QueryDomain domain,
                                          Eigen::MatrixXd matrix,
                                          std::string name) {
  if (matrix.cols() != domain.num_cells()) {
    return absl::InvalidArgumentError(
        absl::StrCat("strategy has ", matrix.cols(), " columns but domain has ",
                     domain.num_cells(), " cells"));
  }
  absl::StatusOr<double> sensitivity = Sensitivity(matrix);
  if (!sensitivity.ok()) return sensitivity.status();
  if (!(*sensitivity > 0)) {
    return absl::InvalidArgumentError("strategy sensitivity must be positive");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(matrix);
  if (qr.rank() < matrix.cols()) {
    return absl::InvalidArgumentError(
        absl::StrCat("strategy '", name, "' is rank deficient (rank ",
                     qr.rank(), " < ", matrix.cols(), ")"));
  }
  return Strategy(std::move(domain), std::move(matrix), std::move(name),
                  *sensitivity);
}

Strategy BuildStrategy(const QueryDomain& domain, StrategyFamily family) {
  const int n = domain.num_cells();
  int rows = n;
  if (family == StrategyFamily::kIdentityPlusMargins) {
    for (int i = 0; i < domain.num_attributes(); ++i) rows += domain.num_bins(i);
  }
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, n);
  m.topRows(n).setIdentity();
  if (family == StrategyFamily::kIdentityPlusMargins) {
    int r = n;
    for (int i = 0; i < domain.num_attributes(); ++i) {
      for (int b = 0; b < domain.num_bins(i); ++b, ++r) {
        for (int c = 0; c < n; ++c) {
          if (domain.BinOfCell(c, i) == b) m(r, c) = 1.0;
        }
      }
    }
  }
  // Both families contain the identity, so Create cannot fail.
  return *Strategy::Create(domain, std::move(m), std::string(ToString(family)));
}

Eigen::VectorXd ToEigen(const DataVector& data) {
  Eigen::VectorXd x(data.counts.size());
  for (size_t i = 0; i < data.counts.size(); ++i) {
    x[static_cast<Eigen::Index>(i)] = static_cast<double>(data.counts[i]);
  }
  return x;
}

absl::StatusOr<Measurement> MeasureAnswers(
    const Eigen::VectorXd& exact_answers,
    std::shared_ptr<const Strategy> strategy, double epsilon, uint64_t seed,
    int index) {
  if (!(epsilon > 0) || !std::isfinite(epsilon)) {
    return absl::InvalidArgumentError(
        absl::StrCat("epsilon must be positive and finite, got ", epsilon));
  }
  if (strategy == nullptr || exact_answers.size() != strategy->num_rows()) {
    return absl::InvalidArgumentError("answers do not match strategy rows");
  }
  Measurement m;
  m.noise_scale = strategy->sensitivity() / epsilon;
  m.epsilon = epsilon;
  m.seed = seed;
  m.index = index;
  m.noisy_answers = exact_answers;
  Rng rng(seed);
  for (Eigen::Index i = 0; i < m.noisy_answers.size(); ++i) {
    m.noisy_answers[i] += rng.Laplace(m.noise_scale);
  }
  m.strategy = std::move(strategy);
  return m;
}

absl::StatusOr<Measurement> Measure(const DataVector& true_counts,
                                    std::shared_ptr<const Strategy> strategy,
                                    double epsilon, uint64_t seed, int index) {
  if (strategy == nullptr) {
    return absl::InvalidArgumentError("null strategy");
  }
  if (!(strategy->domain() == true_counts.domain)) {
    return absl::InvalidArgumentError(
        "strategy domain does not match data vector domain");
  }
  const Eigen::VectorXd answers = strategy->matrix() * ToEigen(true_counts);
  return MeasureAnswers(answers, std::move(strategy), epsilon, seed,
                        index);
}

}  // namespace remeasure
