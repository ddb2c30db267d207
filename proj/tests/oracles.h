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

// Reference computations written without the library under test: plain
// vectors, textbook formulas, brute force.

#ifndef REMEASURE_TESTS_ORACLES_H_
#define REMEASURE_TESTS_ORACLES_H_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

namespace remeasure::oracle {

using Matrix = std::vector<std::vector<double>>;

// Inverse by Gauss-Jordan elimination with partial pivoting; nullopt when a
// pivot vanishes.
inline std::optional<Matrix> Invert(Matrix a) {
  const size_t n = a.size();
  Matrix inv(n, std::vector<double>(n, 0.0));
  for (size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (size_t col = 0; col < n; ++col) {
    size_t pivot = col;
    for (size_t r = col + 1; r < n; ++r) {
      if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
    }
    if (std::fabs(a[pivot][col]) < 1e-300) return std::nullopt;
    std::swap(a[pivot], a[col]);
    std::swap(inv[pivot], inv[col]);
    const double d = a[col][col];
    for (size_t c = 0; c < n; ++c) {
      a[col][c] /= d;
      inv[col][c] /= d;
    }
    for (size_t r = 0; r < n; ++r) {
      if (r == col || a[r][col] == 0.0) continue;
      const double f = a[r][col];
      for (size_t c = 0; c < n; ++c) {
        a[r][c] -= f * a[col][c];
        inv[r][c] -= f * inv[col][c];
      }
    }
  }
  return inv;
}

struct DenseMeasurement {
  Matrix rows;             // strategy rows over the cells
  std::vector<double> y;   // noisy answers
  double variance = 1.0;   // per-row noise variance
};

struct DenseSolution {
  std::vector<double> estimate;
  Matrix covariance;
};

// Weighted normal equations (sum A^T A / s^2) x = sum A^T y / s^2.
inline std::optional<DenseSolution> NormalEquations(
    const std::vector<DenseMeasurement>& ms, size_t cells) {
  Matrix p(cells, std::vector<double>(cells, 0.0));
  std::vector<double> rhs(cells, 0.0);
  for (const DenseMeasurement& m : ms) {
    for (size_t r = 0; r < m.rows.size(); ++r) {
      for (size_t i = 0; i < cells; ++i) {
        rhs[i] += m.rows[r][i] * m.y[r] / m.variance;
        for (size_t j = 0; j < cells; ++j) {
          p[i][j] += m.rows[r][i] * m.rows[r][j] / m.variance;
        }
      }
    }
  }
  std::optional<Matrix> inv = Invert(p);
  if (!inv) return std::nullopt;
  DenseSolution out{std::vector<double>(cells, 0.0), *inv};
  for (size_t i = 0; i < cells; ++i) {
    for (size_t j = 0; j < cells; ++j) out.estimate[i] += (*inv)[i][j] * rhs[j];
  }
  return out;
}

inline double IntervalScore(double l, double u, double x, double alpha) {
  double s = u - l;
  if (x < l) s += 2.0 / alpha * (l - x);
  if (x > u) s += 2.0 / alpha * (x - u);
  return s;
}

inline double ExpectedIntervalScore(double l, double u,
                                    const std::vector<double>& support,
                                    const std::vector<double>& probs,
                                    double alpha) {
  double e = 0;
  for (size_t i = 0; i < support.size(); ++i) {
    e += probs[i] * IntervalScore(l, u, support[i], alpha);
  }
  return e;
}

// Minimum expected interval score over every endpoint pair drawn from the
// support (piecewise-linear objective, so the optimum sits on support points).
inline double BestExpectedIntervalScore(const std::vector<double>& support,
                                        const std::vector<double>& probs,
                                        double alpha) {
  double best = std::numeric_limits<double>::infinity();
  for (double l : support) {
    for (double u : support) {
      if (l > u) continue;
      best = std::min(best, ExpectedIntervalScore(l, u, support, probs, alpha));
    }
  }
  return best;
}

// Smallest support point whose cumulative mass reaches `level`.
inline double DiscreteQuantile(std::vector<std::pair<double, double>> dist,
                               double level) {
  std::sort(dist.begin(), dist.end());
  double mass = 0;
  for (const auto& [x, p] : dist) {
    mass += p;
    if (mass >= level - 1e-12) return x;
  }
  return dist.back().first;
}

inline double ExpectedBrier(double p, double belief) {
  return belief * 2 * (p - 1) * (p - 1) + (1 - belief) * 2 * p * p;
}

}  // namespace remeasure::oracle

#endif  // REMEASURE_TESTS_ORACLES_H_
