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

// Fusion of cached measurements into one consistent estimate.
//
// Each measurement i contributes strategy rows A_i with noisy answers y_i and
// per-row noise variance s_i^2 = 2 b_i^2. The fused cell estimate is the
// weighted least-squares solution
//
//   x_hat = P^-1 sum_i A_i^T y_i / s_i^2,   P = sum_i A_i^T A_i / s_i^2,
//
// so every measurement is weighted by its inverse variance. The covariance of
// x_hat is P^-1, independent of the data, which gives the expected RMSE of any
// linear query w as sqrt(w^T P^-1 w). Adding a measurement adds a positive
// semi-definite term to P that is positive definite under full-rank
// strategies, so every expected RMSE strictly decreases.

#ifndef REMEASURE_INFERENCE_H_
#define REMEASURE_INFERENCE_H_

#include <optional>
#include <span>
#include <vector>

#include "Eigen/Dense"
#include "absl/status/statusor.h"
#include "remeasure/domain.h"
#include "remeasure/mechanism.h"

namespace remeasure {

// Relative pivot tolerance of the precision factorization: a Cholesky pivot
// below kSingularityTolerance * max(diag(P)) is treated as singular.
inline constexpr double kSingularityTolerance = 1e-10;

struct EstimateSet {
  QueryDomain domain;
  Eigen::VectorXd cell_estimates;
  Eigen::MatrixXd precision;
  Eigen::MatrixXd covariance;
  // Indexed [attribute position][bin]. Estimates are sums of cell estimates;
  // they are not clamped and may be negative.
  std::vector<std::vector<double>> bin_estimates;
  std::vector<std::vector<double>> bin_rmse;
  // State before the latest remeasure, when there was one.
  std::optional<std::vector<std::vector<double>>> previous_bin_estimates;
  std::optional<std::vector<std::vector<double>>> previous_bin_rmse;

  double Estimate(const LinearQuery& query) const;
  Eigen::VectorXd cell_rmse() const { return covariance.diagonal().cwiseSqrt(); }
};

// Fails on an empty list, measurements over different domains, and a
// rank-deficient stacked strategy.
absl::StatusOr<EstimateSet> Fuse(std::span<const Measurement> measurements);

// sqrt(w^T P^-1 w). Data independent.
absl::StatusOr<double> ExpectedRmse(const Eigen::MatrixXd& precision,
                                    const LinearQuery& workload_row);

// Expected per-cell RMSE under the identity strategy after an initial
// measurement at `initial_eps` followed by k = 0..steps remeasures at
// `step_eps`: sqrt(2 / (initial_eps^2 + k step_eps^2)).
std::vector<double> RemeasureErrorCurve(double initial_eps, double step_eps,
                                        int steps);

}  // namespace remeasure

#endif  // REMEASURE_INFERENCE_H_
