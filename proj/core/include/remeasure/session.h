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

// Interactive measure / observe / remeasure sessions over one dataset.
//
// Adding a query measures it once at the per-query initial epsilon. Every
// remeasure spends one unit of the remeasure budget at a fixed epsilon, is
// appended to the query's measurement cache, and the whole cache is re-fused.
// Privacy loss composes sequentially:
//
//   total epsilon = sum over queries (initial + remeasures(q) * step).

#ifndef REMEASURE_SESSION_H_
#define REMEASURE_SESSION_H_

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "nlohmann/json.hpp"
#include "remeasure/domain.h"
#include "remeasure/inference.h"
#include "remeasure/mechanism.h"

namespace remeasure {

struct SessionConfig {
  int total_remeasures = 6;
  double epsilon_per_remeasure = 0.3;
  // Not stated for the original study; exposed as configuration.
  double initial_epsilon_per_query = 0.3;
  uint64_t seed = 0;
  StrategyFamily strategy = StrategyFamily::kIdentity;

  absl::Status Validate() const;
};

// Reads known keys (totalRemeasures, epsilonPerRemeasure,
// initialEpsilonPerQuery, seed, strategy) over `defaults`.
absl::StatusOr<SessionConfig> SessionConfigFromJson(
    const nlohmann::json& j, const SessionConfig& defaults = {});
nlohmann::json SessionConfigToJson(const SessionConfig& config);

struct BudgetStatus {
  int used = 0;
  int total = 0;
  std::vector<int> per_query;
  double total_epsilon_spent = 0;
};

class BudgetLedger {
 public:
  BudgetLedger(int total_remeasures, double epsilon_per_remeasure,
               double initial_epsilon_per_query)
      : total_remeasures_(total_remeasures),
        epsilon_per_remeasure_(epsilon_per_remeasure),
        initial_epsilon_per_query_(initial_epsilon_per_query) {}

  // Registers a query's initial measurement; does not touch the remeasure
  // budget. Returns the query's ledger slot.
  int RecordQuery();
  bool CanRemeasure() const { return used() < total_remeasures_; }
  // Fails with ResourceExhausted, leaving the ledger unchanged, when the
  // budget is spent.
  absl::Status RecordRemeasure(int query);

  int used() const { return used_; }
  int total() const { return total_remeasures_; }
  double epsilon_per_remeasure() const { return epsilon_per_remeasure_; }
  double initial_epsilon_per_query() const {
    return initial_epsilon_per_query_;
  }
  const std::vector<int>& spent() const { return spent_; }
  double total_epsilon_spent() const;
  BudgetStatus Snapshot() const;

 private:
  int total_remeasures_;
  double epsilon_per_remeasure_;
  double initial_epsilon_per_query_;
  std::vector<int> spent_;
  int used_ = 0;
};

enum class SessionOp { kAddQuery, kRemeasure };

// One line of the replay log.
struct SessionEvent {
  int64_t ts_ms = 0;
  SessionOp op = SessionOp::kAddQuery;
  int query_id = 0;
  double epsilon = 0;
  uint64_t seed_index = 0;
  // kAddQuery only.
  std::vector<std::string> attributes;
  Filter filter;
};

nlohmann::json SessionEventToJson(const SessionEvent& event);
absl::StatusOr<SessionEvent> SessionEventFromJson(const nlohmann::json& j);
// JSON lines, one event per line.
std::string SessionLogToJsonLines(std::span<const SessionEvent> events);
absl::StatusOr<std::vector<SessionEvent>> SessionLogFromJsonLines(
    std::string_view text);

struct AddQueryResult {
  int query_id = 0;
  EstimateSet estimates;
};

// Public, noise-only description of a query.
struct QuerySummary {
  int query_id = 0;
  QueryDomain domain;
  Filter filter;
  int remeasures_used = 0;
  EstimateSet estimates;
};

// Thread-safe: mutations are serialized, reads may run concurrently between
// them. True counts stay inside the session and are never exported.
class Session {
 public:
  static absl::StatusOr<std::unique_ptr<Session>> Create(
      std::shared_ptr<const Dataset> dataset, SessionConfig config);

  // Replays a session log against the same dataset and config. Seed indices
  // in the log must match the replayed sequence.
  static absl::StatusOr<std::unique_ptr<Session>> Replay(
      std::shared_ptr<const Dataset> dataset, SessionConfig config,
      std::span<const SessionEvent> events);

  absl::StatusOr<AddQueryResult> AddQuery(
      const std::vector<std::string>& attributes, const Filter& filter = {});
  absl::StatusOr<EstimateSet> Remeasure(int query_id);

  BudgetStatus Budget() const;
  absl::StatusOr<EstimateSet> Estimates(int query_id) const;
  std::vector<QuerySummary> Queries() const;
  std::vector<SessionEvent> Log() const;
  const SessionConfig& config() const { return config_; }
  int num_queries() const;

 private:
  struct QueryState {
    QueryDomain domain;
    Filter filter;
    DataVector true_counts;
    std::shared_ptr<const Strategy> strategy;
    std::vector<Measurement> cache;
    EstimateSet estimates;
  };

  Session(std::shared_ptr<const Dataset> dataset, SessionConfig config)
      : dataset_(std::move(dataset)),
        config_(config),
        ledger_(config.total_remeasures, config.epsilon_per_remeasure,
                config.initial_epsilon_per_query) {}

  uint64_t MeasurementSeed(uint64_t seed_index) const;

  std::shared_ptr<const Dataset> dataset_;
  const SessionConfig config_;
  mutable std::shared_mutex mu_;
  BudgetLedger ledger_;
  std::vector<QueryState> queries_;
  std::vector<SessionEvent> log_;
  uint64_t next_seed_index_ = 0;
};

// The externally visible view of a session: estimates, RMSEs and budget, and
// nothing derived from raw counts without noise.
nlohmann::json BudgetToJson(const BudgetStatus& status,
                            const SessionConfig& config);
nlohmann::json EstimatesToJson(const EstimateSet& estimates);
nlohmann::json QuerySummaryToJson(const QuerySummary& summary);
nlohmann::json SessionToPublicJson(const Session& session);

}  // namespace remeasure

#endif  // REMEASURE_SESSION_H_
