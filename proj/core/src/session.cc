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

#include "remeasure/session.h"

#include <chrono>
#include <cmath>

#include "string_view_compat.h"
#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "remeasure/ingest.h"
#include "remeasure/rng.h"

namespace remeasure {
namespace {

int64_t NowMillis() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

bool PositiveFinite(double x) { return x > 0 && std::isfinite(x); }

nlohmann::json PerAttribute(const QueryDomain& domain,
                            const std::vector<std::vector<double>>& values) {
  nlohmann::json out = nlohmann::json::object();
  for (int i = 0; i < domain.num_attributes(); ++i) {
    out[domain.attribute_names()[i]] = values[i];
  }
  return out;
}

}  // namespace

absl::Status SessionConfig::Validate() const {
  if (total_remeasures < 0) {
    return absl::InvalidArgumentError("totalRemeasures must be >= 0");
  }
  if (!PositiveFinite(epsilon_per_remeasure)) {
    return absl::InvalidArgumentError("epsilonPerRemeasure must be positive");
  }
  if (!PositiveFinite(initial_epsilon_per_query)) {
    return absl::InvalidArgumentError(
        "initialEpsilonPerQuery must be positive");
  }
  return absl::OkStatus();
}

absl::StatusOr<SessionConfig> SessionConfigFromJson(
    const nlohmann::json& j, const SessionConfig& defaults) {
  SessionConfig c = defaults;
  if (j.is_null()) return c;
  if (!j.is_object()) {
    return absl::InvalidArgumentError("session config must be an object");
  }
  try {
    if (j.contains("totalRemeasures")) {
      c.total_remeasures = j["totalRemeasures"].get<int>();
    }
    if (j.contains("epsilonPerRemeasure")) {
      c.epsilon_per_remeasure = j["epsilonPerRemeasure"].get<double>();
    }
    if (j.contains("initialEpsilonPerQuery")) {
      c.initial_epsilon_per_query = j["initialEpsilonPerQuery"].get<double>();
    }
    if (j.contains("seed")) c.seed = j["seed"].get<uint64_t>();
    if (j.contains("strategy")) {
      absl::StatusOr<StrategyFamily> f =
          ParseStrategyFamily(j["strategy"].get<std::string>());
      if (!f.ok()) return f.status();
      c.strategy = *f;
    }
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("malformed session config: ", e.what()));
  }
  if (absl::Status s = c.Validate(); !s.ok()) return s;
  return c;
}

nlohmann::json SessionConfigToJson(const SessionConfig& config) {
  return {{"totalRemeasures", config.total_remeasures},
          {"epsilonPerRemeasure", config.epsilon_per_remeasure},
          {"initialEpsilonPerQuery", config.initial_epsilon_per_query},
          {"seed", config.seed},
          {"strategy", std::string(ToString(config.strategy))}};
}

int BudgetLedger::RecordQuery() {
  spent_.push_back(0);
  return static_cast<int>(spent_.size()) - 1;
}

absl::Status BudgetLedger::RecordRemeasure(int query) {
  if (query < 0 || query >= static_cast<int>(spent_.size())) {
    return absl::NotFoundError(absl::StrCat("unknown query ", query));
  }
  if (!CanRemeasure()) {
    return absl::ResourceExhaustedError(absl::StrCat(
        "remeasure budget exhausted (", used_, " of ", total_remeasures_,
        " used)"));
  }
  ++spent_[query];
  ++used_;
  return absl::OkStatus();
}

double BudgetLedger::total_epsilon_spent() const {
  double total = 0;
  for (int s : spent_) {
    total += initial_epsilon_per_query_ + s * epsilon_per_remeasure_;
  }
  return total;
}

BudgetStatus BudgetLedger::Snapshot() const {
  return {used_, total_remeasures_, spent_, total_epsilon_spent()};
}

nlohmann::json SessionEventToJson(const SessionEvent& event) {
  nlohmann::json j = {
      {"ts", event.ts_ms},
      {"op", event.op == SessionOp::kAddQuery ? "addQuery" : "remeasure"},
      {"queryId", event.query_id},
      {"epsilon", event.epsilon},
      {"seedIndex", event.seed_index}};
  if (event.op == SessionOp::kAddQuery) {
    j["attributes"] = event.attributes;
    j["filter"] = FilterToJson(event.filter);
  }
  return j;
}

absl::StatusOr<SessionEvent> SessionEventFromJson(const nlohmann::json& j) {
  SessionEvent e;
  try {
    e.ts_ms = j.value("ts", int64_t{0});
    const std::string op = j.at("op").get<std::string>();
    if (op == "addQuery") {
      e.op = SessionOp::kAddQuery;
      e.attributes = j.at("attributes").get<std::vector<std::string>>();
      absl::StatusOr<Filter> f = FilterFromJson(j.value("filter", nlohmann::json()));
      if (!f.ok()) return f.status();
      e.filter = *std::move(f);
    } else if (op == "remeasure") {
      e.op = SessionOp::kRemeasure;
    } else {
      return absl::InvalidArgumentError(absl::StrCat("unknown op '", op, "'"));
    }
    e.query_id = j.value("queryId", 0);
    e.epsilon = j.at("epsilon").get<double>();
    e.seed_index = j.at("seedIndex").get<uint64_t>();
  } catch (const nlohmann::json::exception& ex) {
    return absl::InvalidArgumentError(
        absl::StrCat("malformed session event: ", ex.what()));
  }
  return e;
}

std::string SessionLogToJsonLines(std::span<const SessionEvent> events) {
  std::string out;
  for (const SessionEvent& e : events) {
    absl::StrAppend(&out, SessionEventToJson(e).dump(), "\n");
  }
  return out;
}

absl::StatusOr<std::vector<SessionEvent>> SessionLogFromJsonLines(
    std::string_view text) {
  std::vector<SessionEvent> events;
  for (absl::string_view line :
       absl::StrSplit(Av(text), '\n', absl::SkipWhitespace())) {
    nlohmann::json j = nlohmann::json::parse(Sv(line), nullptr, false);
    if (j.is_discarded()) {
      return absl::InvalidArgumentError(
          absl::StrCat("log line ", events.size() + 1, " is not JSON"));
    }
    absl::StatusOr<SessionEvent> e = SessionEventFromJson(j);
    if (!e.ok()) return e.status();
    events.push_back(*std::move(e));
  }
  return events;
}

absl::StatusOr<std::unique_ptr<Session>> Session::Create(
    std::shared_ptr<const Dataset> dataset, SessionConfig config) {
  if (dataset == nullptr) return absl::InvalidArgumentError("null dataset");
  if (absl::Status s = config.Validate(); !s.ok()) return s;
  return std::unique_ptr<Session>(new Session(std::move(dataset), config));
}

absl::StatusOr<std::unique_ptr<Session>> Session::Replay(
    std::shared_ptr<const Dataset> dataset, SessionConfig config,
    std::span<const SessionEvent> events) {
  absl::StatusOr<std::unique_ptr<Session>> session =
      Create(std::move(dataset), config);
  if (!session.ok()) return session.status();
  for (const SessionEvent& e : events) {
    if (e.seed_index != (*session)->next_seed_index_) {
      return absl::InvalidArgumentError(absl::StrCat(
          "log seed index ", e.seed_index, " does not match replay position ",
          (*session)->next_seed_index_));
    }
    if (e.op == SessionOp::kAddQuery) {
      absl::StatusOr<AddQueryResult> r =
          (*session)->AddQuery(e.attributes, e.filter);
      if (!r.ok()) return r.status();
      if (r->query_id != e.query_id) {
        return absl::InvalidArgumentError("log query ids are out of order");
      }
    } else {
      absl::StatusOr<EstimateSet> r = (*session)->Remeasure(e.query_id);
      if (!r.ok()) return r.status();
    }
  }
  return session;
}

uint64_t Session::MeasurementSeed(uint64_t seed_index) const {
  return DeriveSeed(config_.seed, {seed_index});
}

absl::StatusOr<AddQueryResult> Session::AddQuery(
    const std::vector<std::string>& attributes, const Filter& filter) {
  std::unique_lock lock(mu_);
  absl::StatusOr<QueryDomain> domain =
      QueryDomain::Create(dataset_->schema(), attributes);
  if (!domain.ok()) return domain.status();
  absl::StatusOr<DataVector> counts = Vectorize(*dataset_, *domain, filter);
  if (!counts.ok()) return counts.status();

  auto strategy = std::make_shared<const Strategy>(
      BuildStrategy(*domain, config_.strategy));
  const uint64_t seed_index = next_seed_index_;
  absl::StatusOr<Measurement> m =
      Measure(*counts, strategy, config_.initial_epsilon_per_query,
              MeasurementSeed(seed_index), /*index=*/0);
  if (!m.ok()) return m.status();
  std::vector<Measurement> cache = {*std::move(m)};
  absl::StatusOr<EstimateSet> estimates = Fuse(cache);
  if (!estimates.ok()) return estimates.status();

  const int id = ledger_.RecordQuery();
  ++next_seed_index_;
  queries_.push_back({*domain, filter, *std::move(counts), std::move(strategy),
                      std::move(cache), *estimates});
  log_.push_back({NowMillis(), SessionOp::kAddQuery, id,
                  config_.initial_epsilon_per_query, seed_index, attributes,
                  filter});
  return AddQueryResult{id, *std::move(estimates)};
}

absl::StatusOr<EstimateSet> Session::Remeasure(int query_id) {
  std::unique_lock lock(mu_);
  if (query_id < 0 || query_id >= static_cast<int>(queries_.size())) {
    return absl::NotFoundError(absl::StrCat("unknown query ", query_id));
  }
  if (!ledger_.CanRemeasure()) {
    return absl::ResourceExhaustedError(
        absl::StrCat("remeasure budget exhausted (", ledger_.used(), " of ",
                     ledger_.total(), " used)"));
  }
  QueryState& q = queries_[query_id];
  const uint64_t seed_index = next_seed_index_;
  absl::StatusOr<Measurement> m =
      Measure(q.true_counts, q.strategy, config_.epsilon_per_remeasure,
              MeasurementSeed(seed_index), static_cast<int>(q.cache.size()));
  if (!m.ok()) return m.status();
  std::vector<Measurement> cache = q.cache;
  cache.push_back(*std::move(m));
  absl::StatusOr<EstimateSet> fused = Fuse(cache);
  if (!fused.ok()) return fused.status();
  fused->previous_bin_estimates = q.estimates.bin_estimates;
  fused->previous_bin_rmse = q.estimates.bin_rmse;

  // Commit only after every fallible step succeeded.
  if (absl::Status s = ledger_.RecordRemeasure(query_id); !s.ok()) return s;
  ++next_seed_index_;
  q.cache = std::move(cache);
  q.estimates = *fused;
  log_.push_back({NowMillis(), SessionOp::kRemeasure, query_id,
                  config_.epsilon_per_remeasure, seed_index, {}, {}});
  return fused;
}

BudgetStatus Session::Budget() const {
  std::shared_lock lock(mu_);
  return ledger_.Snapshot();
}

absl::StatusOr<EstimateSet> Session::Estimates(int query_id) const {
  std::shared_lock lock(mu_);
  if (query_id < 0 || query_id >= static_cast<int>(queries_.size())) {
    return absl::NotFoundError(absl::StrCat("unknown query ", query_id));
  }
  return queries_[query_id].estimates;
}

std::vector<QuerySummary> Session::Queries() const {
  std::shared_lock lock(mu_);
  std::vector<QuerySummary> out;
  for (size_t i = 0; i < queries_.size(); ++i) {
    const QueryState& q = queries_[i];
    out.push_back({static_cast<int>(i), q.domain, q.filter,
                   ledger_.spent()[i], q.estimates});
  }
  return out;
}

std::vector<SessionEvent> Session::Log() const {
  std::shared_lock lock(mu_);
  return log_;
}

int Session::num_queries() const {
  std::shared_lock lock(mu_);
  return static_cast<int>(queries_.size());
}

nlohmann::json BudgetToJson(const BudgetStatus& status,
                            const SessionConfig& config) {
  return {{"used", status.used},
          {"total", status.total},
          {"perQuery", status.per_query},
          {"totalEpsilonSpent", status.total_epsilon_spent},
          {"epsilonPerRemeasure", config.epsilon_per_remeasure},
          {"initialEpsilonPerQuery", config.initial_epsilon_per_query}};
}

nlohmann::json EstimatesToJson(const EstimateSet& e) {
  const QueryDomain& d = e.domain;
  nlohmann::json bins = nlohmann::json::object();
  for (int i = 0; i < d.num_attributes(); ++i) {
    bins[d.attribute_names()[i]] = d.bin_labels(i);
  }
  std::vector<int> shape;
  for (int i = 0; i < d.num_attributes(); ++i) shape.push_back(d.num_bins(i));
  const Eigen::Index n = e.cell_estimates.size();
  std::vector<double> cells(e.cell_estimates.data(),
                            e.cell_estimates.data() + n);
  nlohmann::json covariance = nlohmann::json::array();
  for (Eigen::Index r = 0; r < n; ++r) {
    std::vector<double> row(static_cast<size_t>(n));
    for (Eigen::Index c = 0; c < n; ++c) row[c] = e.covariance(r, c);
    covariance.push_back(std::move(row));
  }
  return {
      {"attributes", d.attribute_names()},
      {"bins", std::move(bins)},
      {"binEstimates", PerAttribute(d, e.bin_estimates)},
      {"binRmse", PerAttribute(d, e.bin_rmse)},
      {"previousBinEstimates", e.previous_bin_estimates
                                   ? PerAttribute(d, *e.previous_bin_estimates)
                                   : nlohmann::json(nullptr)},
      {"previousBinRmse", e.previous_bin_rmse
                              ? PerAttribute(d, *e.previous_bin_rmse)
                              : nlohmann::json(nullptr)},
      {"cellShape", std::move(shape)},
      {"cellEstimates", std::move(cells)},
      {"cellCovariance", std::move(covariance)},
  };
}

nlohmann::json QuerySummaryToJson(const QuerySummary& summary) {
  nlohmann::json j = EstimatesToJson(summary.estimates);
  j["queryId"] = summary.query_id;
  j["filter"] = FilterToJson(summary.filter);
  j["remeasuresUsed"] = summary.remeasures_used;
  return j;
}

nlohmann::json SessionToPublicJson(const Session& session) {
  nlohmann::json queries = nlohmann::json::array();
  for (const QuerySummary& q : session.Queries()) {
    queries.push_back(QuerySummaryToJson(q));
  }
  return {{"budget", BudgetToJson(session.Budget(), session.config())},
          {"queries", std::move(queries)}};
}

}  // namespace remeasure
