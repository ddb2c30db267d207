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

// JSON-over-HTTP facade for sessions.
//
//   POST /sessions                              {datasetId, config?} -> 201
//   POST /sessions/{id}/queries                 {attributes, filter?} -> 201
//   POST /sessions/{id}/queries/{qid}/remeasure                      -> 200
//   GET  /sessions/{id}                                              -> 200
//   GET  /sessions/{id}/budget                                       -> 200
//
// Errors are {"code", "message"} with 400, 404, 405 or 409. Responses carry
// only noisy estimates, RMSEs and budget state.

#ifndef REMEASURE_SERVICE_H_
#define REMEASURE_SERVICE_H_

#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <shared_mutex>
#include <string>
#include <string_view>

#include "absl/status/statusor.h"
#include "remeasure/registry.h"
#include "remeasure/session.h"

namespace remeasure {

struct HttpResponse {
  int status = 200;
  std::string body;
};

class Service {
 public:
  // `registry` must outlive the service. Sessions whose config omits a seed
  // get a fresh random one.
  Service(DatasetRegistry* registry, SessionConfig defaults);

  // Routes one request. Thread-safe.
  HttpResponse Handle(std::string_view method, std::string_view path,
                      std::string_view body);

  size_t num_sessions() const;

 private:
  HttpResponse CreateSession(std::string_view body);
  HttpResponse AddQuery(const std::string& session_id, std::string_view body);
  HttpResponse Remeasure(const std::string& session_id, std::string_view qid);
  HttpResponse View(const std::string& session_id);
  HttpResponse Budget(const std::string& session_id);

  std::shared_ptr<Session> Find(const std::string& session_id) const;
  std::string NewSessionId();
  uint64_t NewSeed();

  DatasetRegistry* registry_;
  SessionConfig defaults_;
  mutable std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mutex rng_mu_;
  std::random_device random_;
};

// Blocking HTTP/1.1 server over a Service.
class HttpServer {
 public:
  explicit HttpServer(Service* service);
  ~HttpServer();

  // Binds `host:port`; port 0 picks a free port. Returns the bound port.
  absl::StatusOr<int> Bind(const std::string& host, int port);
  // Serves until Stop(). Requires a successful Bind.
  absl::Status Listen();
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace remeasure

#endif  // REMEASURE_SERVICE_H_
