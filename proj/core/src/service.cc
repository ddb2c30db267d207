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

#include "remeasure/service.h"

#include <vector>

#include "string_view_compat.h"
#include "absl/status/status.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "httplib.h"
#include "nlohmann/json.hpp"
#include "remeasure/ingest.h"

namespace remeasure {
namespace {

HttpResponse Json(int status, const nlohmann::json& body) {
  return {status, body.dump()};
}

HttpResponse Error(int status, std::string_view code,
                   absl::string_view message) {
  return Json(status, {{"code", code}, {"message", std::string(message)}});
}

HttpResponse FromStatus(const absl::Status& status) {
  switch (status.code()) {
    case absl::StatusCode::kNotFound:
      return Error(404, "not_found", status.message());
    case absl::StatusCode::kResourceExhausted:
      return Error(409, "budget_exhausted", status.message());
    case absl::StatusCode::kInvalidArgument:
    case absl::StatusCode::kOutOfRange:
    case absl::StatusCode::kFailedPrecondition:
      return Error(400, "bad_request", status.message());
    default:
      return Error(500, "internal", status.message());
  }
}

absl::StatusOr<nlohmann::json> ParseBody(std::string_view body) {
  if (body.empty()) return nlohmann::json::object();
  try {
    nlohmann::json j = nlohmann::json::parse(body);
    if (!j.is_object()) {
      return absl::InvalidArgumentError("request body must be a JSON object");
    }
    return j;
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat("malformed JSON: ", e.what()));
  }
}

nlohmann::json QueryResponse(int query_id, const EstimateSet& estimates,
                             const Filter& filter, const BudgetStatus& budget,
                             const SessionConfig& config) {
  QuerySummary summary;
  summary.query_id = query_id;
  summary.domain = estimates.domain;
  summary.filter = filter;
  summary.remeasures_used =
      query_id < static_cast<int>(budget.per_query.size())
          ? budget.per_query[query_id]
          : 0;
  summary.estimates = estimates;
  nlohmann::json j = QuerySummaryToJson(summary);
  j["budget"] = BudgetToJson(budget, config);
  return j;
}

}  // namespace

Service::Service(DatasetRegistry* registry, SessionConfig defaults)
    : registry_(registry), defaults_(defaults) {}

size_t Service::num_sessions() const {
  std::shared_lock lock(mu_);
  return sessions_.size();
}

std::shared_ptr<Session> Service::Find(const std::string& session_id) const {
  std::shared_lock lock(mu_);
  auto it = sessions_.find(session_id);
  return it == sessions_.end() ? nullptr : it->second;
}

uint64_t Service::NewSeed() {
  std::lock_guard<std::mutex> lock(rng_mu_);
  return (static_cast<uint64_t>(random_()) << 32) ^ random_();
}

std::string Service::NewSessionId() {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string id;
  for (int i = 0; i < 2; ++i) {
    uint64_t bits = NewSeed();
    for (int j = 0; j < 16; ++j, bits >>= 4) id += kHex[bits & 0xF];
  }
  return id;
}

HttpResponse Service::Handle(std::string_view method, std::string_view path,
                             std::string_view body) {
  std::vector<std::string> parts =
      absl::StrSplit(Av(path), '/', absl::SkipEmpty());
  if (parts.empty() || parts[0] != "sessions") {
    return Error(404, "not_found", absl::StrCat("no route for ", Av(path)));
  }
  const bool get = method == "GET";
  const bool post = method == "POST";
  auto wrong_method = [&] {
    return Error(405, "method_not_allowed",
                 absl::StrCat(Av(method), " is not allowed on ", Av(path)));
  };
  switch (parts.size()) {
    case 1:
      return post ? CreateSession(body) : wrong_method();
    case 2:
      return get ? View(parts[1]) : wrong_method();
    case 3:
      if (parts[2] == "budget") return get ? Budget(parts[1]) : wrong_method();
      if (parts[2] == "queries") {
        return post ? AddQuery(parts[1], body) : wrong_method();
      }
      break;
    case 5:
      if (parts[2] == "queries" && parts[4] == "remeasure") {
        return post ? Remeasure(parts[1], parts[3]) : wrong_method();
      }
      break;
  }
  return Error(404, "not_found", absl::StrCat("no route for ", Av(path)));
}

HttpResponse Service::CreateSession(std::string_view body) {
  absl::StatusOr<nlohmann::json> j = ParseBody(body);
  if (!j.ok()) return FromStatus(j.status());
  if (!j->contains("datasetId") || !(*j)["datasetId"].is_string()) {
    return Error(400, "bad_request", "datasetId (string) is required");
  }
  SessionConfig defaults = defaults_;
  defaults.seed = NewSeed();
  SessionConfig config = defaults;
  if (j->contains("config")) {
    absl::StatusOr<SessionConfig> parsed =
        SessionConfigFromJson((*j)["config"], defaults);
    if (!parsed.ok()) return Error(400, "bad_request", parsed.status().message());
    config = *parsed;
  }
  if (absl::Status s = config.Validate(); !s.ok()) {
    return Error(400, "bad_request", s.message());
  }
  absl::StatusOr<std::shared_ptr<const Dataset>> dataset =
      registry_->Get((*j)["datasetId"].get<std::string>());
  if (!dataset.ok()) return FromStatus(dataset.status());
  absl::StatusOr<std::unique_ptr<Session>> session =
      Session::Create(*dataset, config);
  if (!session.ok()) return FromStatus(session.status());
  const std::string id = NewSessionId();
  {
    std::unique_lock lock(mu_);
    sessions_[id] = std::shared_ptr<Session>(*std::move(session));
  }
  return Json(201, {{"sessionId", id}});
}

HttpResponse Service::AddQuery(const std::string& session_id,
                               std::string_view body) {
  std::shared_ptr<Session> session = Find(session_id);
  if (session == nullptr) return Error(404, "not_found", "unknown session");
  absl::StatusOr<nlohmann::json> j = ParseBody(body);
  if (!j.ok()) return FromStatus(j.status());
  std::vector<std::string> attributes;
  Filter filter;
  try {
    attributes = j->at("attributes").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception&) {
    return Error(400, "bad_request", "attributes (list of strings) is required");
  }
  if (j->contains("filter")) {
    absl::StatusOr<Filter> f = FilterFromJson((*j)["filter"]);
    if (!f.ok()) return Error(400, "bad_request", f.status().message());
    filter = *std::move(f);
  }
  absl::StatusOr<AddQueryResult> result = session->AddQuery(attributes, filter);
  // Unknown attributes and bins are client errors here, not missing routes.
  if (!result.ok()) return Error(400, "bad_request", result.status().message());
  return Json(201, QueryResponse(result->query_id, result->estimates, filter,
                                 session->Budget(), session->config()));
}

HttpResponse Service::Remeasure(const std::string& session_id,
                                std::string_view qid) {
  std::shared_ptr<Session> session = Find(session_id);
  if (session == nullptr) return Error(404, "not_found", "unknown session");
  int query_id = 0;
  if (!absl::SimpleAtoi(Av(qid), &query_id) || query_id < 0) {
    return Error(404, "not_found", absl::StrCat("unknown query ", Av(qid)));
  }
  absl::StatusOr<EstimateSet> estimates = session->Remeasure(query_id);
  if (!estimates.ok()) return FromStatus(estimates.status());
  Filter filter;
  for (const QuerySummary& q : session->Queries()) {
    if (q.query_id == query_id) filter = q.filter;
  }
  return Json(200, QueryResponse(query_id, *estimates, filter,
                                 session->Budget(), session->config()));
}

HttpResponse Service::View(const std::string& session_id) {
  std::shared_ptr<Session> session = Find(session_id);
  if (session == nullptr) return Error(404, "not_found", "unknown session");
  nlohmann::json j = SessionToPublicJson(*session);
  j["sessionId"] = session_id;
  return Json(200, j);
}

HttpResponse Service::Budget(const std::string& session_id) {
  std::shared_ptr<Session> session = Find(session_id);
  if (session == nullptr) return Error(404, "not_found", "unknown session");
  return Json(200, BudgetToJson(session->Budget(), session->config()));
}

struct HttpServer::Impl {
  httplib::Server server;
  bool bound = false;
};

HttpServer::HttpServer(Service* service) : impl_(std::make_unique<Impl>()) {
  auto handler = [service](const httplib::Request& req,
                           httplib::Response& res) {
    HttpResponse out = service->Handle(req.method, req.path, req.body);
    res.status = out.status;
    res.set_content(out.body, "application/json");
  };
  impl_->server.set_default_headers(
      {{"Access-Control-Allow-Origin", "*"},
       {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
       {"Access-Control-Allow-Headers", "Content-Type"}});
  impl_->server.Get(".*", handler);
  impl_->server.Post(".*", handler);
  impl_->server.Put(".*", handler);
  impl_->server.Delete(".*", handler);
  impl_->server.Options(".*", [](const httplib::Request&,
                                 httplib::Response& res) { res.status = 204; });
}

HttpServer::~HttpServer() { Stop(); }

absl::StatusOr<int> HttpServer::Bind(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) bound = 0;
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = 0;
  }
  if (bound <= 0) {
    return absl::UnavailableError(
        absl::StrCat("cannot bind ", host, ":", port));
  }
  impl_->bound = true;
  return bound;
}

absl::Status HttpServer::Listen() {
  if (!impl_->bound) return absl::FailedPreconditionError("not bound");
  if (!impl_->server.listen_after_bind()) {
    return absl::UnavailableError("server stopped with an error");
  }
  return absl::OkStatus();
}

void HttpServer::Stop() {
  if (impl_ != nullptr) impl_->server.stop();
}

}  // namespace remeasure
