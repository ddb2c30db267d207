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

// Rational-agent simulation of a budgeted analysis block.
//
// A data-generating model (DGM) holds a few versions of a dataset, a prior over
// them and the block's questions. One version is drawn, every question's
// query is measured at the initial epsilon, and remeasures are spent per an
// allocation. A rational agent knows the DGM, computes the exact posterior
// over versions from all noisy answers, reports the optimal forecast under the
// block's proper scoring rules, and is paid per the normalized scores.
//
// Benchmarks (expected per-block dollars):
//   lower bound       fixed reports knowing only the dataset size
//   prior             fixed reports from the prior over version answers
//   posterior, zero   Bayesian reports, no remeasures
//   posterior, rand   Bayesian reports, remeasures assigned at random
//   posterior, ex-ante  best allocation fixed before seeing any estimate
//   posterior, same   Bayesian reports under observed allocations
//   upper bound       Bayesian reports with the full budget on every query
//
// Monte Carlo trial t draws from independent streams DeriveSeed(seed, {t,..}),
// so results are reproducible for any evaluation order. Candidate allocations
// share those streams (common random numbers): measurement m of query q in
// trial t has identical noise under every allocation that includes it.

#ifndef REMEASURE_AGENT_H_
#define REMEASURE_AGENT_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "Eigen/Dense"
#include "absl/status/statusor.h"
#include "nlohmann/json.hpp"
#include "remeasure/domain.h"
#include "remeasure/mechanism.h"
#include "remeasure/scoring.h"
#include "remeasure/session.h"

namespace remeasure {

class DataGeneratingModel {
 public:
  // Requires >= 2 versions sharing one schema, a prior summing to 1 (empty
  // means uniform), and valid questions over that schema. The session
  // config supplies the initial epsilon, remeasure epsilon and budget.
  static absl::StatusOr<DataGeneratingModel> Create(
      std::vector<std::shared_ptr<const Dataset>> versions,
      std::vector<double> prior, std::vector<Question> questions,
      SessionConfig session, double per_question_max = kPerQuestionMax);

  int num_versions() const { return static_cast<int>(versions_.size()); }
  int num_questions() const { return static_cast<int>(questions_.size()); }
  const std::vector<double>& prior() const { return prior_; }
  const std::vector<Question>& questions() const { return questions_; }
  const Question& question(int q) const { return questions_[q]; }
  const SessionConfig& session() const { return session_; }
  const Dataset& version(int v) const { return *versions_[v]; }
  double per_question_max() const { return per_question_max_; }
  size_t dataset_size() const { return versions_.front()->size(); }

  const GroundTruth& truth(int q, int v) const { return truths_[q][v]; }
  const DataVector& counts(int q, int v) const { return counts_[q][v]; }
  // Exact strategy answers A x_v of question q's query under version v.
  const Eigen::VectorXd& exact_answers(int q, int v) const {
    return exact_answers_[q][v];
  }
  const std::shared_ptr<const Strategy>& strategy(int q) const {
    return strategies_[q];
  }
  PayoffConfig payoff_config() const;

  // Replaces question q's normalization constant.
  absl::Status SetNormalizationConstant(int q, double constant);

 private:
  DataGeneratingModel() = default;

  std::vector<std::shared_ptr<const Dataset>> versions_;
  std::vector<double> prior_;
  std::vector<Question> questions_;
  SessionConfig session_;
  double per_question_max_ = kPerQuestionMax;
  std::vector<std::vector<GroundTruth>> truths_;
  std::vector<std::vector<DataVector>> counts_;
  std::vector<std::vector<Eigen::VectorXd>> exact_answers_;
  std::vector<std::shared_ptr<const Strategy>> strategies_;
};

// Remeasures per question, in question order.
using Allocation = std::vector<int>;

bool InBudget(const Allocation& allocation, int total_remeasures);

// All ways to split `total` remeasures over `parts` queries (stars and bars:
// C(total + parts - 1, parts - 1) allocations), in lexicographic order.
std::vector<Allocation> EnumerateCompositions(int total, int parts);

// Reports formed from the dataset size alone: quantitative questions get the
// [alpha/2, 1 - alpha/2] quantiles of the discrete uniform on {0..N}; binary
// questions get the uniform probability of the threshold event.
std::vector<Report> LowerBoundReports(std::span<const Question> questions,
                                      size_t dataset_size,
                                      double alpha = kDefaultAlpha);

// Reports from `draws` resamples of the version answers under the prior:
// nearest-rank quantiles of the draws, or the fraction of "yes" draws.
std::vector<Report> RPriorReports(const DataGeneratingModel& dgm,
                                  int draws = 10000, uint64_t seed = 0,
                                  double alpha = kDefaultAlpha);

// Log Laplace likelihood of one measurement of question q's query under each
// version: sum over rows of -log(2b) - |y - (A x_v)| / b.
std::vector<double> MeasurementLogLikelihood(const DataGeneratingModel& dgm,
                                             int q, const Measurement& m);

// Normalized posterior from a prior and summed log-likelihoods, computed in
// log space.
std::vector<double> PosteriorFromLogLikelihood(std::span<const double> prior,
                                               std::span<const double> loglik);

// Posterior over versions given all measurements, grouped by question
// (by_question[q] holds the measurements of question q's query; it may be
// shorter than the question list).
absl::StatusOr<std::vector<double>> Posterior(
    const DataGeneratingModel& dgm,
    std::span<const std::vector<Measurement>> by_question);

// Quantitative: the [alpha/2, 1 - alpha/2] quantiles of the posterior over
// version answers (smallest answer whose cumulative mass reaches the level).
// Binary: the posterior probability of "yes".
Report OptimalReport(std::span<const double> posterior,
                     const DataGeneratingModel& dgm, int q,
                     double alpha = kDefaultAlpha);

// Exact prior-expected block payoff of a fixed set of reports.
double ExpectedFixedPayoff(const DataGeneratingModel& dgm,
                           std::span<const Report> reports);

// Block payoff of the rational agent that observed `by_question` while the
// true version was `version`.
absl::StatusOr<double> PosteriorPayoff(
    const DataGeneratingModel& dgm, int version,
    std::span<const std::vector<Measurement>> by_question);

struct PayoffEstimate {
  double mean = 0;
  double std_err = 0;
  int trials = 0;
};

// Monte Carlo expected block payoff of the rational agent under a fixed
// allocation. Allocations are not required to be in budget.
absl::StatusOr<PayoffEstimate> ExpectedPayoff(const DataGeneratingModel& dgm,
                                              const Allocation& allocation,
                                              int trials, uint64_t seed);

enum class RandomAllocationMode {
  // Each remeasure independently picks a query uniformly at random.
  kMultinomial,
  // One composition of the budget drawn uniformly.
  kUniformComposition,
};

// What the rational agent is compared against for one observed block.
struct ObservedBlock {
  std::string block_id;
  Allocation allocation;
  // Payoff the analyst earned on this block, when known.
  std::optional<double> payoff;
  // When present, the block's actual version and noisy measurements; the
  // agent's payoff is then computed on these exact estimates.
  std::optional<int> version;
  std::vector<std::vector<Measurement>> measurements;
};

struct BenchmarkOptions {
  int trials = 10000;
  uint64_t seed = 0;
  RandomAllocationMode random_mode = RandomAllocationMode::kMultinomial;
  int prior_draws = 10000;
  std::vector<ObservedBlock> observed;
};

struct BenchmarkEntry {
  double dollars = 0;
  double std_err = 0;
};

struct BenchmarkReport {
  BenchmarkEntry lower_bound;
  BenchmarkEntry r_prior;
  BenchmarkEntry r_posterior_zero;
  BenchmarkEntry r_posterior_rand;
  BenchmarkEntry r_posterior_ex_ante;
  std::optional<BenchmarkEntry> r_posterior_same;
  BenchmarkEntry upper_bound;
  Allocation ex_ante_allocation;
  int ex_ante_candidates = 0;
  // Mean observed payoff over blocks that reported one.
  std::optional<double> observed_payoff;
  int trials = 0;
};

// Fails when an observed allocation is out of budget or has the wrong length.
// The ex-ante allocation is chosen on one set of Monte Carlo streams and its
// payoff re-estimated on an independent set, so the reported value is not
// inflated by the selection.
absl::StatusOr<BenchmarkReport> Benchmarks(const DataGeneratingModel& dgm,
                                           const BenchmarkOptions& options);

// Links of the chain lower <= prior <= zero <= rand <= ex-ante <= upper that
// fail by more than `z` combined standard errors.
std::vector<std::string> OrderingViolations(const BenchmarkReport& report,
                                            double z = 2.0);

struct LossReport {
  double observed_payoff = 0;
  double total_loss = 0;
  double reporting_loss = 0;
  double allocation_loss_overall = 0;
  double allocation_loss_separated = 0;
  double allocation_loss_separated_full_budget = 0;
};

// total = (upper - P) / (upper - lower)
// reporting = (same - P) / (upper - lower)
// allocation overall = (upper - same) / (upper - lower)
// allocation separated = (upper - same) / (upper - zero)
// allocation separated, full budget = (upper - same) / (upper - rand)
// Fails without a "same" benchmark or with a zero denominator.
absl::StatusOr<LossReport> Losses(double observed_payoff,
                                  const BenchmarkReport& report);

struct ParadigmRow {
  double initial_eps = 0;
  double k = 0;
  // Fresh measurement at k x; the initial x is wasted.
  double rmse_mo = 0;
  // Initial x fused with a remeasure at k x.
  double rmse_mor = 0;
  double mc_rmse_mo = 0;
  double mc_rmse_mor = 0;
};

// Per-cell RMSE of both paradigms in closed form (sqrt(2)/(k x) and
// sqrt(2/(x^2 + k^2 x^2))) and by Monte Carlo through Measure and Fuse.
absl::StatusOr<std::vector<ParadigmRow>> CompareParadigms(
    std::span<const double> initial_eps, std::span<const double> ks,
    int trials, uint64_t seed);

// Normalization constant for question q: the 95th percentile of interval
// scores earned by reporting (noisy estimate +/- expected RMSE) after the
// initial measurement, over `draws` simulated blocks. Binary questions get 2.
absl::StatusOr<double> CalibrateNormalizationConstant(
    const DataGeneratingModel& dgm, int q, int draws, uint64_t seed,
    double quantile = 0.95);

nlohmann::json BenchmarkReportToJson(const BenchmarkReport& report);
// CSV with header benchmark,dollars,stdErr.
std::string BenchmarkReportToCsv(const BenchmarkReport& report);
nlohmann::json LossReportToJson(const LossReport& report);

}  // namespace remeasure

#endif  // REMEASURE_AGENT_H_
