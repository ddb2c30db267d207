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

// Strategy matrices and the Laplace mechanism. A measurement answers every
// strategy row with independent Laplace noise of scale sensitivity/epsilon,
// which makes the release epsilon-DP under add/remove-one-record neighbors.

#ifndef REMEASURE_MECHANISM_H_
#define REMEASURE_MECHANISM_H_

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "Eigen/Dense"
#include "absl/status/statusor.h"
#include "remeasure/domain.h"

namespace remeasure {

enum class StrategyFamily { kIdentity, kIdentityPlusMargins };

std::string_view ToString(StrategyFamily family);
absl::StatusOr<StrategyFamily> ParseStrategyFamily(std::string_view s);

// Max over columns of the column's L1 norm: the most any single record (one
// cell count changing by one) can move the strategy answers in L1.
absl::StatusOr<double> Sensitivity(const Eigen::MatrixXd& matrix);

class Strategy {
 public:
  // Fails unless the matrix has one column per domain cell, full column rank
  // and positive sensitivity.
  static absl::StatusOr<Strategy> Create(QueryDomain domain,
                                         Eigen::MatrixXd matrix,
                                         std::string name);

  const QueryDomain& domain() const { return domain_; }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  const std::string& name() const { return name_; }
  double sensitivity() const { return sensitivity_; }
  int num_rows() const { return static_cast<int>(matrix_.rows()); }

 private:
  Strategy(QueryDomain domain, Eigen::MatrixXd matrix, std::string name,
           double sensitivity)
      : domain_(std::move(domain)),
        matrix_(std::move(matrix)),
        name_(std::move(name)),
        sensitivity_(sensitivity) {}

  QueryDomain domain_;
  Eigen::MatrixXd matrix_;
  std::string name_;
  double sensitivity_;
};

// identity: one row per cell. identity-plus-margins: identity rows followed by
// one bin-marginal indicator row per bin of each domain attribute.
Strategy BuildStrategy(const QueryDomain& domain, StrategyFamily family);

struct Measurement {
  std::shared_ptr<const Strategy> strategy;
  Eigen::VectorXd noisy_answers;
  double epsilon = 0;
  // Laplace scale b, identical for every row.
  double noise_scale = 0;
  uint64_t seed = 0;
  // Ordinal of this measurement within its query (0 = initial).
  int index = 0;

  // Per-row noise variance 2 b^2.
  double row_variance() const { return 2.0 * noise_scale * noise_scale; }
};

// noisy_answers = A x + Laplace(0, sensitivity/epsilon) per row, deterministic
// given `seed`. Epsilon must be positive and finite.
absl::StatusOr<Measurement> Measure(const DataVector& true_counts,
                                    std::shared_ptr<const Strategy> strategy,
                                    double epsilon, uint64_t seed,
                                    int index = 0);

// Same as Measure, with the exact answers A x already computed.
absl::StatusOr<Measurement> MeasureAnswers(
    const Eigen::VectorXd& exact_answers,
    std::shared_ptr<const Strategy> strategy, double epsilon, uint64_t seed,
    int index = 0);

Eigen::VectorXd ToEigen(const DataVector& data);

}  // namespace remeasure

#endif  // REMEASURE_MECHANISM_H_
