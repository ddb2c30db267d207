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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "remeasure/inference.h"
#include "remeasure/rng.h"

namespace remeasure {
namespace {

constexpr double kQuantileSlack = 1e-12;

// Running mean and standard error.
class Accumulator {
 public:
  void Add(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / n_;
    m2_ += delta * (x - mean_);
  }
  double mean() const { return mean_; }
  double std_err() const {
    return n_ > 1 ? std::sqrt(m2_ / (n_ - 1) / n_) : 0.0;
  }
  BenchmarkEntry entry() const { return {mean(), std_err()}; }

 private:
  int64_t n_ = 0;
  double mean_ = 0;
  double m2_ = 0;
};

// Versions of question q ordered by their answer.
std::vector<int> AnswerOrder(const DataGeneratingModel& dgm, int q) {
  std::vector<int> order(dgm.num_versions());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return dgm.truth(q, a).count < dgm.truth(q, b).count;
  });
  return order;
}

// Smallest answer whose cumulative posterior mass reaches `level`.
double PosteriorQuantile(const DataGeneratingModel& dgm, int q,
                         std::span<const double> posterior,
                         std::span<const int> order, double level) {
  double mass = 0;
  for (int v : order) {
    mass += posterior[v];
    if (mass >= level - kQuantileSlack) return dgm.truth(q, v).count;
  }
  return dgm.truth(q, order.back()).count;
}

Report ReportFromOrder(const DataGeneratingModel& dgm, int q,
                       std::span<const double> posterior,
                       std::span<const int> order, double alpha) {
  if (dgm.question(q).kind == QuestionKind::kBinary) {
    double p_yes = 0;
    for (int v = 0; v < dgm.num_versions(); ++v) {
      if (dgm.truth(q, v).yes) p_yes += posterior[v];
    }
    return BinaryReport{std::clamp(p_yes, 0.0, 1.0)};
  }
  return IntervalReport{
      PosteriorQuantile(dgm, q, posterior, order, alpha / 2),
      PosteriorQuantile(dgm, q, posterior, order, 1 - alpha / 2), alpha};
}

double PayoffOf(const DataGeneratingModel& dgm, int q, const Report& report,
                int version) {
  absl::StatusOr<double> payoff =
      ScoreAnswer(report, dgm.truth(q, version),
                  dgm.question(q).normalization_constant,
                  dgm.per_question_max());
  return payoff.ok() ? *payoff : 0.0;
}

int DrawVersion(std::span<const double> prior, Rng& rng) {
  const double u = rng.Uniform01();
  double cdf = 0;
  for (size_t v = 0; v < prior.size(); ++v) {
    cdf += prior[v];
    if (u < cdf) return static_cast<int>(v);
  }
  for (size_t v = prior.size(); v-- > 0;) {
    if (prior[v] > 0) return static_cast<int>(v);
  }
  return 0;
}

// One simulated block. Measurement m of query q in trial t always uses
// stream (t, 1 + q, m), so every allocation sees the same noise for the
// measurements it shares with another. Log-likelihoods are kept as prefix
// sums over measurements: the posterior under allocation a needs only
// cumulative[q][a[q]].
class TrialSampler {
 public:
  TrialSampler(const DataGeneratingModel& dgm, uint64_t seed,
               int max_remeasures)
      : dgm_(dgm),
        seed_(seed),
        max_remeasures_(max_remeasures),
        cumulative_(dgm.num_questions(),
                    std::vector<std::vector<double>>(
                        max_remeasures + 1,
                        std::vector<double>(dgm.num_versions()))),
        log_post_(dgm.num_versions()),
        posterior_(dgm.num_versions()) {
    for (int q = 0; q < dgm.num_questions(); ++q) {
      orders_.push_back(AnswerOrder(dgm, q));
    }
  }

  absl::Status Draw(uint64_t trial) {
    Rng rng(DeriveSeed(seed_, {trial, 0}));
    version_ = DrawVersion(dgm_.prior(), rng);
    const SessionConfig& config = dgm_.session();
    for (int q = 0; q < dgm_.num_questions(); ++q) {
      for (int m = 0; m <= max_remeasures_; ++m) {
        const double eps = m == 0 ? config.initial_epsilon_per_query
                                  : config.epsilon_per_remeasure;
        absl::StatusOr<Measurement> meas = MeasureAnswers(
            dgm_.exact_answers(q, version_), dgm_.strategy(q), eps,
            DeriveSeed(seed_, {trial, static_cast<uint64_t>(1 + q),
                               static_cast<uint64_t>(m)}),
            m);
        if (!meas.ok()) return meas.status();
        std::vector<double> ll = MeasurementLogLikelihood(dgm_, q, *meas);
        for (int v = 0; v < dgm_.num_versions(); ++v) {
          cumulative_[q][m][v] = ll[v] + (m > 0 ? cumulative_[q][m - 1][v] : 0);
        }
      }
    }
    return absl::OkStatus();
  }

  int version() const { return version_; }

  double Payoff(const Allocation& allocation) {
    for (int v = 0; v < dgm_.num_versions(); ++v) {
      double s = 0;
      for (int q = 0; q < dgm_.num_questions(); ++q) {
        s += cumulative_[q][allocation[q]][v];
      }
      log_post_[v] = s;
    }
    posterior_ = PosteriorFromLogLikelihood(dgm_.prior(), log_post_);
    double total = 0;
    for (int q = 0; q < dgm_.num_questions(); ++q) {
      total += PayoffOf(dgm_, q,
                        ReportFromOrder(dgm_, q, posterior_, orders_[q],
                                        kDefaultAlpha),
                        version_);
    }
    return total;
  }

 private:
  const DataGeneratingModel& dgm_;
  uint64_t seed_;
  int max_remeasures_;
  std::vector<std::vector<int>> orders_;
  // [question][measurement][version]
  std::vector<std::vector<std::vector<double>>> cumulative_;
  std::vector<double> log_post_;
  std::vector<double> posterior_;
  int version_ = 0;
};

int MaxEntry(const Allocation& allocation) {
  return allocation.empty()
             ? 0
             : *std::max_element(allocation.begin(), allocation.end());
}

absl::Status CheckAllocation(const DataGeneratingModel& dgm,
                             const Allocation& allocation) {
  if (static_cast<int>(allocation.size()) != dgm.num_questions()) {
    return absl::InvalidArgumentError(
        absl::StrCat("allocation has ", allocation.size(), " entries for ",
                     dgm.num_questions(), " questions"));
  }
  for (int r : allocation) {
    if (r < 0) return absl::InvalidArgumentError("negative remeasure count");
  }
  return absl::OkStatus();
}

}  // namespace

absl::StatusOr<DataGeneratingModel> DataGeneratingModel::Create(
    std::vector<std::shared_ptr<const Dataset>> versions,
    std::vector<double> prior, std::vector<Question> questions,
    SessionConfig session, double per_question_max) {
  if (versions.size() < 2) {
    return absl::InvalidArgumentError("a DGM needs at least two versions");
  }
  for (const auto& v : versions) {
    if (v == nullptr) return absl::InvalidArgumentError("null version");
    if (!(v->schema() == versions.front()->schema())) {
      return absl::InvalidArgumentError("versions do not share one schema");
    }
  }
  if (prior.empty()) {
    prior.assign(versions.size(), 1.0 / versions.size());
  }
  if (prior.size() != versions.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("prior has ", prior.size(), " entries for ",
                     versions.size(), " versions"));
  }
  double mass = 0;
  for (double p : prior) {
    if (!(p >= 0) || !std::isfinite(p)) {
      return absl::InvalidArgumentError("prior entries must be non-negative");
    }
    mass += p;
  }
  if (std::abs(mass - 1.0) > 1e-9) {
    return absl::InvalidArgumentError(
        absl::StrCat("prior sums to ", mass, ", not 1"));
  }
  if (questions.empty()) return absl::InvalidArgumentError("no questions");
  if (absl::Status s = session.Validate(); !s.ok()) return s;
  if (!(per_question_max > 0)) {
    return absl::InvalidArgumentError("per-question max must be positive");
  }

  DataGeneratingModel dgm;
  const Schema& schema = versions.front()->schema();
  for (const Question& question : questions) {
    if (absl::Status s = question.Validate(); !s.ok()) return s;
    // Rebuilding the domain from the schema checks the question's attributes
    // and bin labels against the data.
    absl::StatusOr<QueryDomain> domain = QueryDomain::Create(
        schema, question.functional.domain.attribute_names());
    if (!domain.ok()) return domain.status();
    if (!(*domain == question.functional.domain)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "question '", question.id, "' bins do not match the schema"));
    }
    auto strategy = std::make_shared<const Strategy>(
        BuildStrategy(*domain, session.strategy));
    std::vector<GroundTruth> truths;
    std::vector<DataVector> counts;
    std::vector<Eigen::VectorXd> answers;
    for (const auto& version : versions) {
      absl::StatusOr<DataVector> dv = Vectorize(*version, *domain);
      if (!dv.ok()) return dv.status();
      absl::StatusOr<GroundTruth> truth = Evaluate(question, *dv);
      if (!truth.ok()) return truth.status();
      truths.push_back(*truth);
      answers.push_back(strategy->matrix() * ToEigen(*dv));
      counts.push_back(*std::move(dv));
    }
    dgm.truths_.push_back(std::move(truths));
    dgm.counts_.push_back(std::move(counts));
    dgm.exact_answers_.push_back(std::move(answers));
    dgm.strategies_.push_back(std::move(strategy));
  }
  dgm.versions_ = std::move(versions);
  dgm.prior_ = std::move(prior);
  dgm.questions_ = std::move(questions);
  dgm.session_ = session;
  dgm.per_question_max_ = per_question_max;
  return dgm;
}

PayoffConfig DataGeneratingModel::payoff_config() const {
  PayoffConfig config;
  config.per_question_max = per_question_max_;
  for (const Question& q : questions_) {
    config.questions.push_back({q.id, q.kind, q.normalization_constant});
  }
  return config;
}

absl::Status DataGeneratingModel::SetNormalizationConstant(int q,
                                                           double constant) {
  if (q < 0 || q >= num_questions()) {
    return absl::OutOfRangeError("question index out of range");
  }
  if (!(constant > 0) || !std::isfinite(constant)) {
    return absl::InvalidArgumentError("constant must be positive");
  }
  questions_[q].normalization_constant = constant;
  return absl::OkStatus();
}

bool InBudget(const Allocation& allocation, int total_remeasures) {
  int sum = 0;
  for (int r : allocation) {
    if (r < 0) return false;
    sum += r;
  }
  return sum <= total_remeasures;
}

std::vector<Allocation> EnumerateCompositions(int total, int parts) {
  std::vector<Allocation> out;
  if (parts <= 0 || total < 0) return out;
  Allocation current(parts, 0);
  auto recurse = [&](auto& self, int index, int remaining) -> void {
    if (index == parts - 1) {
      current[index] = remaining;
      out.push_back(current);
      return;
    }
    for (int r = 0; r <= remaining; ++r) {
      current[index] = r;
      self(self, index + 1, remaining - r);
    }
  };
  recurse(recurse, 0, total);
  return out;
}

std::vector<Report> LowerBoundReports(std::span<const Question> questions,
                                      size_t dataset_size, double alpha) {
  const double n = static_cast<double>(dataset_size);
  // Smallest a in {0..N} with (a + 1) / (N + 1) >= p.
  auto quantile = [&](double p) {
    const double a = std::ceil(p * (n + 1) - 1e-9) - 1;
    return std::clamp(a, 0.0, n);
  };
  std::vector<Report> out;
  for (const Question& q : questions) {
    if (q.kind == QuestionKind::kBinary && q.threshold.has_value()) {
      const double t = static_cast<double>(q.threshold->value);
      // Values in {0..N} at or below t.
      const double at_or_below = std::clamp(std::floor(t) + 1, 0.0, n + 1);
      const double p_le = at_or_below / (n + 1);
      out.push_back(BinaryReport{
          q.threshold->direction == ThresholdDirection::kLessThanOrEqual
              ? p_le
              : 1.0 - p_le});
    } else {
      out.push_back(IntervalReport{quantile(alpha / 2),
                                   quantile(1 - alpha / 2), alpha});
    }
  }
  return out;
}

std::vector<Report> RPriorReports(const DataGeneratingModel& dgm, int draws,
                                  uint64_t seed, double alpha) {
  std::vector<Report> out;
  draws = std::max(draws, 1);
  for (int q = 0; q < dgm.num_questions(); ++q) {
    Rng rng(DeriveSeed(seed, {static_cast<uint64_t>(q)}));
    std::vector<int> sample(draws);
    for (int d = 0; d < draws; ++d) sample[d] = DrawVersion(dgm.prior(), rng);
    if (dgm.question(q).kind == QuestionKind::kBinary) {
      int yes = 0;
      for (int v : sample) yes += dgm.truth(q, v).yes ? 1 : 0;
      out.push_back(BinaryReport{static_cast<double>(yes) / draws});
      continue;
    }
    std::vector<double> answers(draws);
    for (int d = 0; d < draws; ++d) answers[d] = dgm.truth(q, sample[d]).count;
    std::sort(answers.begin(), answers.end());
    auto nearest_rank = [&](double p) {
      const int rank = static_cast<int>(std::ceil(p * draws - 1e-9));
      return answers[std::clamp(rank - 1, 0, draws - 1)];
    };
    out.push_back(
        IntervalReport{nearest_rank(alpha / 2), nearest_rank(1 - alpha / 2),
                       alpha});
  }
  return out;
}

std::vector<double> MeasurementLogLikelihood(const DataGeneratingModel& dgm,
                                             int q, const Measurement& m) {
  const double b = m.noise_scale;
  const double log_norm = -std::log(2 * b);
  std::vector<double> out(dgm.num_versions());
  for (int v = 0; v < dgm.num_versions(); ++v) {
    const Eigen::VectorXd& exact = dgm.exact_answers(q, v);
    out[v] = exact.size() * log_norm -
             (m.noisy_answers - exact).cwiseAbs().sum() / b;
  }
  return out;
}

std::vector<double> PosteriorFromLogLikelihood(
    std::span<const double> prior, std::span<const double> loglik) {
  const size_t n = prior.size();
  std::vector<double> log_post(n);
  double top = -std::numeric_limits<double>::infinity();
  for (size_t v = 0; v < n; ++v) {
    log_post[v] = prior[v] > 0 ? std::log(prior[v]) + loglik[v]
                               : -std::numeric_limits<double>::infinity();
    top = std::max(top, log_post[v]);
  }
  std::vector<double> post(n, 0.0);
  if (!std::isfinite(top)) {
    std::copy(prior.begin(), prior.end(), post.begin());
    return post;
  }
  double total = 0;
  for (size_t v = 0; v < n; ++v) {
    post[v] = std::exp(log_post[v] - top);
    total += post[v];
  }
  for (double& p : post) p /= total;
  return post;
}

absl::StatusOr<std::vector<double>> Posterior(
    const DataGeneratingModel& dgm,
    std::span<const std::vector<Measurement>> by_question) {
  if (static_cast<int>(by_question.size()) > dgm.num_questions()) {
    return absl::InvalidArgumentError("more measurement groups than questions");
  }
  std::vector<double> loglik(dgm.num_versions(), 0.0);
  for (size_t q = 0; q < by_question.size(); ++q) {
    const int qi = static_cast<int>(q);
    for (const Measurement& m : by_question[q]) {
      if (m.strategy == nullptr ||
          m.noisy_answers.size() != dgm.exact_answers(qi, 0).size()) {
        return absl::InvalidArgumentError(absl::StrCat(
            "measurement does not match question '", dgm.question(qi).id,
            "'"));
      }
      if (!(m.noise_scale > 0)) {
        return absl::InvalidArgumentError("noise scale must be positive");
      }
      std::vector<double> ll = MeasurementLogLikelihood(dgm, qi, m);
      for (int v = 0; v < dgm.num_versions(); ++v) loglik[v] += ll[v];
    }
  }
  return PosteriorFromLogLikelihood(dgm.prior(), loglik);
}

Report OptimalReport(std::span<const double> posterior,
                     const DataGeneratingModel& dgm, int q, double alpha) {
  const std::vector<int> order = AnswerOrder(dgm, q);
  return ReportFromOrder(dgm, q, posterior, order, alpha);
}

double ExpectedFixedPayoff(const DataGeneratingModel& dgm,
                           std::span<const Report> reports) {
  double expected = 0;
  for (int v = 0; v < dgm.num_versions(); ++v) {
    double block = 0;
    for (int q = 0; q < dgm.num_questions(); ++q) {
      block += PayoffOf(dgm, q, reports[q], v);
    }
    expected += dgm.prior()[v] * block;
  }
  return expected;
}

absl::StatusOr<double> PosteriorPayoff(
    const DataGeneratingModel& dgm, int version,
    std::span<const std::vector<Measurement>> by_question) {
  if (version < 0 || version >= dgm.num_versions()) {
    return absl::OutOfRangeError("version index out of range");
  }
  absl::StatusOr<std::vector<double>> posterior = Posterior(dgm, by_question);
  if (!posterior.ok()) return posterior.status();
  double total = 0;
  for (int q = 0; q < dgm.num_questions(); ++q) {
    total += PayoffOf(dgm, q, OptimalReport(*posterior, dgm, q), version);
  }
  return total;
}

absl::StatusOr<PayoffEstimate> ExpectedPayoff(const DataGeneratingModel& dgm,
                                              const Allocation& allocation,
                                              int trials, uint64_t seed) {
  if (trials < 1) return absl::InvalidArgumentError("trials must be >= 1");
  if (absl::Status s = CheckAllocation(dgm, allocation); !s.ok()) return s;
  TrialSampler sampler(dgm, seed, MaxEntry(allocation));
  Accumulator acc;
  for (int t = 0; t < trials; ++t) {
    if (absl::Status s = sampler.Draw(t); !s.ok()) return s;
    acc.Add(sampler.Payoff(allocation));
  }
  return PayoffEstimate{acc.mean(), acc.std_err(), trials};
}

absl::StatusOr<BenchmarkReport> Benchmarks(const DataGeneratingModel& dgm,
                                           const BenchmarkOptions& options) {
  if (options.trials < 1) {
    return absl::InvalidArgumentError("trials must be >= 1");
  }
  const int budget = dgm.session().total_remeasures;
  const int nq = dgm.num_questions();

  std::vector<const ObservedBlock*> simulated;
  std::vector<double> exact_same;
  double observed_sum = 0;
  int observed_count = 0;
  for (const ObservedBlock& block : options.observed) {
    if (absl::Status s = CheckAllocation(dgm, block.allocation); !s.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat("block '", block.block_id, "': ", s.message()));
    }
    if (!InBudget(block.allocation, budget)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "block '", block.block_id, "' allocation exceeds the budget of ",
          budget, " remeasures"));
    }
    if (block.payoff.has_value()) {
      observed_sum += *block.payoff;
      ++observed_count;
    }
    if (block.version.has_value()) {
      absl::StatusOr<double> payoff =
          PosteriorPayoff(dgm, *block.version, block.measurements);
      if (!payoff.ok()) {
        return absl::InvalidArgumentError(absl::StrCat(
            "block '", block.block_id, "': ", payoff.status().message()));
      }
      exact_same.push_back(*payoff);
    } else {
      simulated.push_back(&block);
    }
  }

  BenchmarkReport report;
  report.trials = options.trials;
  report.lower_bound = {
      ExpectedFixedPayoff(dgm, LowerBoundReports(dgm.questions(),
                                                 dgm.dataset_size())),
      0.0};
  report.r_prior = {ExpectedFixedPayoff(dgm, RPriorReports(dgm,
                                                           options.prior_draws,
                                                           DeriveSeed(
                                                               options.seed,
                                                               {0}))),
                    0.0};

  const std::vector<Allocation> candidates = EnumerateCompositions(budget, nq);
  report.ex_ante_candidates = static_cast<int>(candidates.size());
  const Allocation zero(nq, 0);
  const Allocation full(nq, budget);

  TrialSampler sampler(dgm, DeriveSeed(options.seed, {1}), budget);
  Accumulator zero_acc, rand_acc, upper_acc, same_acc;
  std::vector<double> candidate_sum(candidates.size(), 0.0);
  Allocation random_allocation(nq);
  for (int t = 0; t < options.trials; ++t) {
    if (absl::Status s = sampler.Draw(t); !s.ok()) return s;
    zero_acc.Add(sampler.Payoff(zero));
    upper_acc.Add(sampler.Payoff(full));

    Rng rng(DeriveSeed(options.seed, {2, static_cast<uint64_t>(t)}));
    if (options.random_mode == RandomAllocationMode::kMultinomial) {
      std::fill(random_allocation.begin(), random_allocation.end(), 0);
      for (int r = 0; r < budget; ++r) ++random_allocation[rng.UniformIndex(nq)];
    } else {
      random_allocation = candidates[rng.UniformIndex(candidates.size())];
    }
    rand_acc.Add(sampler.Payoff(random_allocation));

    for (size_t c = 0; c < candidates.size(); ++c) {
      candidate_sum[c] += sampler.Payoff(candidates[c]);
    }
    if (!simulated.empty()) {
      double s = 0;
      for (const ObservedBlock* block : simulated) {
        s += sampler.Payoff(block->allocation);
      }
      same_acc.Add(s / simulated.size());
    }
  }
  report.r_posterior_zero = zero_acc.entry();
  report.r_posterior_rand = rand_acc.entry();
  report.upper_bound = upper_acc.entry();

  const size_t best = static_cast<size_t>(
      std::max_element(candidate_sum.begin(), candidate_sum.end()) -
      candidate_sum.begin());
  report.ex_ante_allocation = candidates[best];
  absl::StatusOr<PayoffEstimate> ex_ante =
      ExpectedPayoff(dgm, candidates[best], options.trials,
                     DeriveSeed(options.seed, {3}));
  if (!ex_ante.ok()) return ex_ante.status();
  report.r_posterior_ex_ante = {ex_ante->mean, ex_ante->std_err};

  if (!options.observed.empty()) {
    const double blocks = static_cast<double>(options.observed.size());
    double sum = 0;
    for (double p : exact_same) sum += p;
    double se = 0;
    if (!simulated.empty()) {
      sum += same_acc.mean() * simulated.size();
      se = same_acc.std_err() * simulated.size() / blocks;
    }
    report.r_posterior_same = BenchmarkEntry{sum / blocks, se};
  }
  if (observed_count > 0) report.observed_payoff = observed_sum / observed_count;
  return report;
}

std::vector<std::string> OrderingViolations(const BenchmarkReport& report,
                                            double z) {
  const std::pair<const char*, const BenchmarkEntry*> chain[] = {
      {"lowerBound", &report.lower_bound},
      {"rPrior", &report.r_prior},
      {"rPosteriorZero", &report.r_posterior_zero},
      {"rPosteriorRand", &report.r_posterior_rand},
      {"rPosteriorExAnte", &report.r_posterior_ex_ante},
      {"upperBound", &report.upper_bound},
  };
  std::vector<std::string> out;
  for (size_t i = 0; i + 1 < std::size(chain); ++i) {
    const BenchmarkEntry& a = *chain[i].second;
    const BenchmarkEntry& b = *chain[i + 1].second;
    const double slack =
        z * std::sqrt(a.std_err * a.std_err + b.std_err * b.std_err) + 1e-9;
    if (a.dollars > b.dollars + slack) {
      out.push_back(absl::StrCat(chain[i].first, " (", a.dollars, ") > ",
                                 chain[i + 1].first, " (", b.dollars, ")"));
    }
  }
  return out;
}

absl::StatusOr<LossReport> Losses(double observed_payoff,
                                  const BenchmarkReport& report) {
  if (!report.r_posterior_same.has_value()) {
    return absl::FailedPreconditionError(
        "losses need the rPosteriorSame benchmark");
  }
  const double upper = report.upper_bound.dollars;
  const double same = report.r_posterior_same->dollars;
  const double range = upper - report.lower_bound.dollars;
  const double zero_range = upper - report.r_posterior_zero.dollars;
  const double rand_range = upper - report.r_posterior_rand.dollars;
  if (range == 0 || zero_range == 0 || rand_range == 0) {
    return absl::FailedPreconditionError(
        "degenerate benchmarks: a loss denominator is zero");
  }
  LossReport out;
  out.observed_payoff = observed_payoff;
  out.total_loss = (upper - observed_payoff) / range;
  out.reporting_loss = (same - observed_payoff) / range;
  out.allocation_loss_overall = (upper - same) / range;
  out.allocation_loss_separated = (upper - same) / zero_range;
  out.allocation_loss_separated_full_budget = (upper - same) / rand_range;
  return out;
}

absl::StatusOr<std::vector<ParadigmRow>> CompareParadigms(
    std::span<const double> initial_eps, std::span<const double> ks,
    int trials, uint64_t seed) {
  if (trials < 1) return absl::InvalidArgumentError("trials must be >= 1");
  absl::StatusOr<Schema> schema =
      Schema::Create({Attribute{"cell", "", {"a", "b"}, {}}});
  if (!schema.ok()) return schema.status();
  const std::vector<std::string> names = {"cell"};
  absl::StatusOr<QueryDomain> domain = QueryDomain::Create(*schema, names);
  if (!domain.ok()) return domain.status();
  const DataVector data{*domain, {500, 500}};
  auto strategy = std::make_shared<const Strategy>(
      BuildStrategy(*domain, StrategyFamily::kIdentity));
  const Eigen::VectorXd exact = ToEigen(data);

  std::vector<ParadigmRow> rows;
  uint64_t row_index = 0;
  for (double x : initial_eps) {
    for (double k : ks) {
      if (!(x > 0) || !(k > 0)) {
        return absl::InvalidArgumentError("epsilon and multiples must be > 0");
      }
      ParadigmRow row;
      row.initial_eps = x;
      row.k = k;
      row.rmse_mo = std::sqrt(2.0) / (k * x);
      row.rmse_mor = std::sqrt(2.0 / (x * x + k * k * x * x));
      double sq_mo = 0, sq_mor = 0;
      for (int t = 0; t < trials; ++t) {
        const uint64_t tt = static_cast<uint64_t>(t);
        absl::StatusOr<Measurement> initial = MeasureAnswers(
            exact, strategy, x, DeriveSeed(seed, {row_index, tt, 0}), 0);
        absl::StatusOr<Measurement> follow = MeasureAnswers(
            exact, strategy, k * x, DeriveSeed(seed, {row_index, tt, 1}), 1);
        if (!initial.ok()) return initial.status();
        if (!follow.ok()) return follow.status();
        absl::StatusOr<EstimateSet> mo =
            Fuse(std::span<const Measurement>(&*follow, 1));
        const Measurement both[] = {*initial, *follow};
        absl::StatusOr<EstimateSet> mor = Fuse(both);
        if (!mo.ok()) return mo.status();
        if (!mor.ok()) return mor.status();
        const double e_mo = mo->cell_estimates[0] - exact[0];
        const double e_mor = mor->cell_estimates[0] - exact[0];
        sq_mo += e_mo * e_mo;
        sq_mor += e_mor * e_mor;
      }
      row.mc_rmse_mo = std::sqrt(sq_mo / trials);
      row.mc_rmse_mor = std::sqrt(sq_mor / trials);
      rows.push_back(row);
      ++row_index;
    }
  }
  return rows;
}

absl::StatusOr<double> CalibrateNormalizationConstant(
    const DataGeneratingModel& dgm, int q, int draws, uint64_t seed,
    double quantile) {
  if (q < 0 || q >= dgm.num_questions()) {
    return absl::OutOfRangeError("question index out of range");
  }
  if (draws < 1) return absl::InvalidArgumentError("draws must be >= 1");
  if (!(quantile > 0 && quantile <= 1)) {
    return absl::InvalidArgumentError("quantile must lie in (0, 1]");
  }
  const Question& question = dgm.question(q);
  if (question.kind == QuestionKind::kBinary) return kBinaryConstant;

  std::vector<double> scores;
  scores.reserve(draws);
  std::optional<double> rmse;
  for (int d = 0; d < draws; ++d) {
    Rng rng(DeriveSeed(seed, {static_cast<uint64_t>(d), 0}));
    const int v = DrawVersion(dgm.prior(), rng);
    absl::StatusOr<Measurement> m = MeasureAnswers(
        dgm.exact_answers(q, v), dgm.strategy(q),
        dgm.session().initial_epsilon_per_query,
        DeriveSeed(seed, {static_cast<uint64_t>(d), 1}), 0);
    if (!m.ok()) return m.status();
    absl::StatusOr<EstimateSet> est = Fuse(std::span<const Measurement>(&*m, 1));
    if (!est.ok()) return est.status();
    if (!rmse.has_value()) {
      absl::StatusOr<double> r = ExpectedRmse(est->precision, question.functional);
      if (!r.ok()) return r.status();
      rmse = *r;
    }
    const double point = est->Estimate(question.functional);
    absl::StatusOr<double> score = IntervalScore(
        {point - *rmse, point + *rmse, kDefaultAlpha}, dgm.truth(q, v).count);
    if (!score.ok()) return score.status();
    scores.push_back(*score);
  }
  std::sort(scores.begin(), scores.end());
  const int rank = static_cast<int>(std::ceil(quantile * draws - 1e-9));
  return scores[std::clamp(rank - 1, 0, draws - 1)];
}

namespace {

nlohmann::json EntryToJson(const BenchmarkEntry& e) {
  return {{"dollars", e.dollars}, {"stdErr", e.std_err}};
}

std::vector<std::pair<std::string, std::optional<BenchmarkEntry>>> Entries(
    const BenchmarkReport& r) {
  return {{"lowerBound", r.lower_bound},
          {"rPrior", r.r_prior},
          {"rPosteriorZero", r.r_posterior_zero},
          {"rPosteriorRand", r.r_posterior_rand},
          {"rPosteriorExAnte", r.r_posterior_ex_ante},
          {"rPosteriorSame", r.r_posterior_same},
          {"upperBound", r.upper_bound}};
}

}  // namespace

nlohmann::json BenchmarkReportToJson(const BenchmarkReport& report) {
  nlohmann::json j;
  for (const auto& [name, entry] : Entries(report)) {
    j[name] = entry.has_value() ? EntryToJson(*entry) : nlohmann::json(nullptr);
  }
  j["exAnteAllocation"] = report.ex_ante_allocation;
  j["exAnteCandidates"] = report.ex_ante_candidates;
  j["upperBoundInBudget"] = false;
  j["trials"] = report.trials;
  j["observedPayoff"] = report.observed_payoff.has_value()
                            ? nlohmann::json(*report.observed_payoff)
                            : nlohmann::json(nullptr);
  return j;
}

std::string BenchmarkReportToCsv(const BenchmarkReport& report) {
  std::string out = "benchmark,dollars,stdErr\n";
  for (const auto& [name, entry] : Entries(report)) {
    if (!entry.has_value()) continue;
    absl::StrAppend(&out, name, ",", entry->dollars, ",", entry->std_err, "\n");
  }
  return out;
}

nlohmann::json LossReportToJson(const LossReport& report) {
  return {{"observedPayoff", report.observed_payoff},
          {"totalLoss", report.total_loss},
          {"reportingLoss", report.reporting_loss},
          {"allocationLossOverall", report.allocation_loss_overall},
          {"allocationLossSeparated", report.allocation_loss_separated},
          {"allocationLossSeparatedFullBudget",
           report.allocation_loss_separated_full_budget}};
}

}  // namespace remeasure
