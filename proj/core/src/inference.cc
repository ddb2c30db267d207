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

#include "remeasure/inference.h"

#include <cmath>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace remeasure {
namespace {

absl::StatusOr<Eigen::LLT<Eigen::MatrixXd>> Factor(
    const Eigen::MatrixXd& precision) {
  if (precision.rows() == 0 || precision.rows() != precision.cols()) {
    return absl::InvalidArgumentError("precision matrix must be square");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  const double scale = precision.diagonal().cwiseAbs().maxCoeff();
  if (llt.info() != Eigen::Success || !(scale > 0)) {
    return absl::FailedPreconditionError(
        "precision matrix is singular: combined strategy is rank deficient");
  }
  const Eigen::VectorXd pivots = llt.matrixLLT().diagonal().cwiseAbs2();
  if (pivots.minCoeff() < kSingularityTolerance * scale) {
    return absl::FailedPreconditionError(absl::StrCat(
        "precision matrix is singular (relative pivot ",
        pivots.minCoeff() / scale, "): combined strategy is rank deficient"));
  }
  return llt;
}

double QuadraticForm(const Eigen::MatrixXd& m, const Eigen::VectorXd& w) {
  return w.dot(m * w);
}

}  // namespace

double EstimateSet::Estimate(const LinearQuery& query) const {
  double sum = 0;
  for (size_t i = 0; i < query.weights.size(); ++i) {
    sum += query.weights[i] * cell_estimates[static_cast<Eigen::Index>(i)];
  }
  return sum;
}

absl::StatusOr<EstimateSet> Fuse(std::span<const Measurement> measurements) {
  if (measurements.empty()) {
    return absl::InvalidArgumentError("no measurements to fuse");
  }
  const QueryDomain& domain = measurements.front().strategy->domain();
  const int n = domain.num_cells();
  Eigen::MatrixXd precision = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (const Measurement& m : measurements) {
    if (m.strategy == nullptr || !(m.strategy->domain() == domain)) {
      return absl::InvalidArgumentError(
          "measurements span different query domains");
    }
    if (!(m.noise_scale > 0)) {
      return absl::InvalidArgumentError("measurement noise scale must be > 0");
    }
    const double weight = 1.0 / m.row_variance();
    const Eigen::MatrixXd& a = m.strategy->matrix();
    precision.noalias() += weight * a.transpose() * a;
    rhs.noalias() += weight * a.transpose() * m.noisy_answers;
  }
  absl::StatusOr<Eigen::LLT<Eigen::MatrixXd>> llt = Factor(precision);
  if (!llt.ok()) return llt.status();

  EstimateSet out;
  out.domain = domain;
  out.cell_estimates = llt->solve(rhs);
  out.covariance = llt->solve(Eigen::MatrixXd::Identity(n, n));
  out.precision = std::move(precision);
  for (int pos = 0; pos < domain.num_attributes(); ++pos) {
    std::vector<double> est(domain.num_bins(pos));
    std::vector<double> rmse(domain.num_bins(pos));
    for (int b = 0; b < domain.num_bins(pos); ++b) {
      const LinearQuery q = LinearQuery::BinMarginal(domain, pos, b);
      const Eigen::VectorXd w =
          Eigen::Map<const Eigen::VectorXd>(q.weights.data(), n);
      est[b] = w.dot(out.cell_estimates);
      rmse[b] = std::sqrt(QuadraticForm(out.covariance, w));
    }
    out.bin_estimates.push_back(std::move(est));
    out.bin_rmse.push_back(std::move(rmse));
  }
  return out;
}

absl::StatusOr<double> ExpectedRmse(const Eigen::MatrixXd& precision,
                                    const LinearQuery& workload_row) {
  if (static_cast<Eigen::Index>(workload_row.weights.size()) !=
      precision.rows()) {
    return absl::InvalidArgumentError("workload row length != precision size");
  }
  absl::StatusOr<Eigen::LLT<Eigen::MatrixXd>> llt = Factor(precision);
  if (!llt.ok()) return llt.status();
  const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(
      workload_row.weights.data(), precision.rows());
  // w^T P^-1 w = |L^-1 w|^2 with P = L L^T.
  const Eigen::VectorXd z = llt->matrixL().solve(w);
  return std::sqrt(z.squaredNorm());
}

std::vector<double> RemeasureErrorCurve(double initial_eps, double step_eps,
                                        int steps) {
  std::vector<double> curve;
  curve.reserve(steps + 1);
  for (int k = 0; k <= steps; ++k) {
    curve.push_back(std::sqrt(
        2.0 / (initial_eps * initial_eps + k * step_eps * step_eps)));
  }
  return curve;
}

}  // namespace remeasure
