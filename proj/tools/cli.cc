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

#include "cli.h"

#include <cmath>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "nlohmann/json.hpp"
#include "remeasure/agent.h"
#include "remeasure/dgm_config.h"
#include "remeasure/ingest.h"
#include "remeasure/registry.h"
#include "remeasure/scoring.h"
#include "remeasure/service.h"
#include "remeasure/session.h"

namespace remeasure::cli {
namespace {

namespace fs = std::filesystem;

struct CommonFlags {
  uint64_t seed = 0;
  std::string out;
  std::string format = "json";
};

void AddCommonFlags(CLI::App* app, CommonFlags* flags) {
  app->add_option("--seed", flags->seed, "Random seed");
  app->add_option("--out", flags->out, "Output path");
  app->add_option("--format", flags->format, "Output format")
      ->check(CLI::IsMember({"json", "csv"}));
}

std::string FormatDouble(double x) {
  std::ostringstream s;
  s.precision(10);
  s << x;
  return s.str();
}

absl::StatusOr<nlohmann::json> ReadJson(const std::string& path) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat(path, ": ", e.what()));
  }
}

absl::StatusOr<std::vector<std::map<std::string, std::string>>> ReadCsvRecords(
    const std::string& path, const std::vector<std::string>& required) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  absl::StatusOr<std::vector<std::vector<std::string>>> rows = ReadCsv(in);
  if (!rows.ok()) return rows.status();
  if (rows->empty()) return absl::InvalidArgumentError(path + ": empty file");
  const std::vector<std::string>& header = rows->front();
  for (const std::string& column : required) {
    if (std::find(header.begin(), header.end(), column) == header.end()) {
      return absl::InvalidArgumentError(
          absl::StrCat(path, ": missing column '", column, "'"));
    }
  }
  std::vector<std::map<std::string, std::string>> records;
  for (size_t r = 1; r < rows->size(); ++r) {
    std::map<std::string, std::string> record;
    for (size_t c = 0; c < header.size(); ++c) {
      record[header[c]] = c < (*rows)[r].size() ? (*rows)[r][c] : "";
    }
    records.push_back(std::move(record));
  }
  return records;
}

// Writes to --out when given, otherwise to `out`.
absl::Status Emit(const CommonFlags& flags, const std::string& text,
                  std::ostream& out) {
  if (flags.out.empty()) {
    out << text;
    return absl::OkStatus();
  }
  std::ofstream file(flags.out);
  if (!file) return absl::InternalError("cannot write " + flags.out);
  file << text;
  return absl::OkStatus();
}

int Fail(std::ostream& err, const absl::Status& status, int code = kExitUsage) {
  err << "error: " << status.message() << "\n";
  return code;
}

// ingest --------------------------------------------------------------------

struct IngestFlags {
  std::string csv;
  std::string schema;
  std::string registry;
  std::string id;
};

int RunIngest(const IngestFlags& flags, std::ostream& out, std::ostream& err) {
  absl::StatusOr<nlohmann::json> schema_json = ReadJson(flags.schema);
  if (!schema_json.ok()) return Fail(err, schema_json.status());
  absl::StatusOr<Schema> schema = SchemaFromJson(*schema_json);
  if (!schema.ok()) return Fail(err, schema.status());
  std::ifstream csv(flags.csv);
  if (!csv) return Fail(err, absl::NotFoundError("cannot open " + flags.csv));
  absl::StatusOr<Dataset> dataset = Ingest(csv, *schema);
  if (!dataset.ok()) return Fail(err, dataset.status());
  absl::StatusOr<std::unique_ptr<DatasetRegistry>> registry =
      DatasetRegistry::Open(flags.registry);
  if (!registry.ok()) return Fail(err, registry.status());
  absl::StatusOr<std::string> digest = (*registry)->Put(flags.id, *dataset);
  if (!digest.ok()) return Fail(err, digest.status());
  out << nlohmann::json{{"id", flags.id},
                        {"sha256", *digest},
                        {"rows", dataset->size()}}
             .dump()
      << "\n";
  return kExitOk;
}

// serve ---------------------------------------------------------------------

struct ServeFlags {
  std::string listen = "127.0.0.1:8080";
  std::string registry = "registry";
  std::string config;
};

HttpServer* g_server = nullptr;

void HandleSignal(int) {
  if (g_server != nullptr) g_server->Stop();
}

int RunServe(const ServeFlags& flags, std::ostream& out, std::ostream& err) {
  SessionConfig defaults;
  if (!flags.config.empty()) {
    absl::StatusOr<nlohmann::json> j = ReadJson(flags.config);
    if (!j.ok()) return Fail(err, j.status());
    absl::StatusOr<SessionConfig> config = SessionConfigFromJson(*j);
    if (!config.ok()) return Fail(err, config.status());
    defaults = *config;
  }
  const size_t colon = flags.listen.rfind(':');
  int port = 0;
  if (colon == std::string::npos ||
      !absl::SimpleAtoi(flags.listen.substr(colon + 1), &port) || port < 0) {
    return Fail(err, absl::InvalidArgumentError(
                         "--listen must look like host:port"));
  }
  const std::string host = flags.listen.substr(0, colon);
  absl::StatusOr<std::unique_ptr<DatasetRegistry>> registry =
      DatasetRegistry::Open(flags.registry);
  if (!registry.ok()) return Fail(err, registry.status());
  Service service(registry->get(), defaults);
  HttpServer server(&service);
  absl::StatusOr<int> bound = server.Bind(host, port);
  if (!bound.ok()) return Fail(err, bound.status());
  err << "listening on " << host << ":" << *bound << " (registry "
      << flags.registry << ")\n";
  out.flush();
  g_server = &server;
  std::signal(SIGINT, HandleSignal);
  std::signal(SIGTERM, HandleSignal);
  absl::Status s = server.Listen();
  g_server = nullptr;
  if (!s.ok()) return Fail(err, s);
  return kExitOk;
}

// agent-benchmark -----------------------------------------------------------

struct BenchmarkFlags {
  CommonFlags common;
  std::string dgm;
  int trials = 10000;
  std::string allocations;
  std::string random_mode = "multinomial";
  int prior_draws = 10000;
  std::optional<double> observed_payoff;
};

absl::StatusOr<std::vector<ObservedBlock>> ReadAllocations(
    const std::string& path, const DataGeneratingModel& dgm) {
  absl::StatusOr<std::vector<std::map<std::string, std::string>>> records =
      ReadCsvRecords(path, {"blockId", "queryId", "remeasures"});
  if (!records.ok()) return records.status();
  std::vector<ObservedBlock> blocks;
  std::map<std::string, size_t> index;
  for (size_t r = 0; r < records->size(); ++r) {
    const auto& rec = (*records)[r];
    const std::string& block_id = rec.at("blockId");
    auto [it, inserted] = index.try_emplace(block_id, blocks.size());
    if (inserted) {
      ObservedBlock block;
      block.block_id = block_id;
      block.allocation.assign(dgm.num_questions(), 0);
      blocks.push_back(std::move(block));
    }
    ObservedBlock& block = blocks[it->second];
    int q = -1;
    for (int i = 0; i < dgm.num_questions(); ++i) {
      if (dgm.question(i).id == rec.at("queryId")) q = i;
    }
    if (q < 0) {
      return absl::InvalidArgumentError(absl::StrCat(
          path, " row ", r + 1, ": unknown queryId '", rec.at("queryId"), "'"));
    }
    int remeasures = 0;
    if (!absl::SimpleAtoi(rec.at("remeasures"), &remeasures) || remeasures < 0) {
      return absl::InvalidArgumentError(
          absl::StrCat(path, " row ", r + 1, ": bad remeasures '",
                       rec.at("remeasures"), "'"));
    }
    block.allocation[q] += remeasures;
    auto payoff = rec.find("payoff");
    if (payoff != rec.end() && !payoff->second.empty()) {
      double p = 0;
      if (!absl::SimpleAtod(payoff->second, &p)) {
        return absl::InvalidArgumentError(absl::StrCat(
            path, " row ", r + 1, ": bad payoff '", payoff->second, "'"));
      }
      if (block.payoff.has_value() && *block.payoff != p) {
        return absl::InvalidArgumentError(absl::StrCat(
            path, ": block '", block_id, "' has conflicting payoffs"));
      }
      block.payoff = p;
    }
  }
  for (const ObservedBlock& block : blocks) {
    if (!InBudget(block.allocation, dgm.session().total_remeasures)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "block '", block.block_id, "' spends more than ",
          dgm.session().total_remeasures, " remeasures"));
    }
  }
  return blocks;
}

int RunAgentBenchmark(const BenchmarkFlags& flags, std::ostream& out,
                      std::ostream& err) {
  absl::StatusOr<DataGeneratingModel> dgm = LoadDgm(flags.dgm);
  if (!dgm.ok()) return Fail(err, dgm.status());
  BenchmarkOptions options;
  options.trials = flags.trials;
  options.seed = flags.common.seed;
  options.prior_draws = flags.prior_draws;
  options.random_mode = flags.random_mode == "uniform-composition"
                            ? RandomAllocationMode::kUniformComposition
                            : RandomAllocationMode::kMultinomial;
  if (!flags.allocations.empty()) {
    absl::StatusOr<std::vector<ObservedBlock>> blocks =
        ReadAllocations(flags.allocations, *dgm);
    if (!blocks.ok()) return Fail(err, blocks.status());
    options.observed = *std::move(blocks);
  }
  absl::StatusOr<BenchmarkReport> report = Benchmarks(*dgm, options);
  if (!report.ok()) return Fail(err, report.status());

  std::optional<double> observed = flags.observed_payoff.has_value()
                                       ? flags.observed_payoff
                                       : report->observed_payoff;
  std::optional<LossReport> losses;
  if (observed.has_value() && report->r_posterior_same.has_value()) {
    absl::StatusOr<LossReport> l = Losses(*observed, *report);
    if (!l.ok()) {
      err << "warning: " << l.status().message() << "\n";
    } else {
      losses = *l;
    }
  }

  std::string text;
  if (flags.common.format == "csv") {
    text = BenchmarkReportToCsv(*report);
  } else {
    nlohmann::json j = {{"benchmarks", BenchmarkReportToJson(*report)}};
    j["losses"] = losses.has_value() ? LossReportToJson(*losses)
                                     : nlohmann::json(nullptr);
    text = j.dump(2) + "\n";
  }
  if (absl::Status s = Emit(flags.common, text, out); !s.ok()) {
    return Fail(err, s);
  }
  if (losses.has_value() && !flags.common.out.empty()) {
    std::ofstream file(flags.common.out + ".losses.json");
    file << LossReportToJson(*losses).dump(2) << "\n";
  }

  const std::vector<std::string> violations = OrderingViolations(*report);
  for (const std::string& v : violations) {
    err << "ordering violated: " << v << "\n";
  }
  return violations.empty() ? kExitOk : kExitInvariant;
}

// compare-paradigms ---------------------------------------------------------

struct ParadigmFlags {
  CommonFlags common;
  std::vector<double> initial_eps = {0.1, 0.3, 0.5};
  std::vector<double> ks = {2, 3, 4, 5};
  int trials = 100000;
};

int RunCompareParadigms(const ParadigmFlags& flags, std::ostream& out,
                        std::ostream& err) {
  absl::StatusOr<std::vector<ParadigmRow>> rows = CompareParadigms(
      flags.initial_eps, flags.ks, flags.trials, flags.common.seed);
  if (!rows.ok()) return Fail(err, rows.status());
  std::string text;
  bool ordered = true;
  if (flags.common.format == "csv") {
    text = "initialEps,k,rmseMO,rmseMOR,mcRmseMO,mcRmseMOR,ratio\n";
  }
  nlohmann::json table = nlohmann::json::array();
  for (const ParadigmRow& r : *rows) {
    ordered = ordered && r.rmse_mor < r.rmse_mo && r.mc_rmse_mor < r.mc_rmse_mo;
    const double ratio = r.rmse_mor / r.rmse_mo;
    if (flags.common.format == "csv") {
      absl::StrAppend(&text, FormatDouble(r.initial_eps), ",",
                      FormatDouble(r.k), ",", FormatDouble(r.rmse_mo), ",",
                      FormatDouble(r.rmse_mor), ",", FormatDouble(r.mc_rmse_mo),
                      ",", FormatDouble(r.mc_rmse_mor), ",",
                      FormatDouble(ratio), "\n");
    } else {
      table.push_back({{"initialEps", r.initial_eps},
                       {"k", r.k},
                       {"rmseMO", r.rmse_mo},
                       {"rmseMOR", r.rmse_mor},
                       {"mcRmseMO", r.mc_rmse_mo},
                       {"mcRmseMOR", r.mc_rmse_mor},
                       {"ratio", ratio}});
    }
  }
  if (flags.common.format == "json") {
    text = nlohmann::json{{"trials", flags.trials}, {"rows", table}}.dump(2) +
           "\n";
  }
  if (absl::Status s = Emit(flags.common, text, out); !s.ok()) {
    return Fail(err, s);
  }
  if (!ordered) {
    err << "MOR error is not below MO error at every point\n";
    return kExitInvariant;
  }
  return kExitOk;
}

// score ---------------------------------------------------------------------

struct ScoreFlags {
  CommonFlags common;
  std::string reports;
  std::string truths;
  std::string config;
};

std::optional<double> ParseNumber(const std::string& s) {
  double x = 0;
  if (s.empty() || !absl::SimpleAtod(s, &x) || !std::isfinite(x)) {
    return std::nullopt;
  }
  return x;
}

std::optional<bool> ParseYesNo(const std::string& s) {
  if (s == "yes" || s == "true" || s == "1") return true;
  if (s == "no" || s == "false" || s == "0") return false;
  return std::nullopt;
}

int RunScore(const ScoreFlags& flags, std::ostream& out, std::ostream& err) {
  absl::StatusOr<nlohmann::json> config_json = ReadJson(flags.config);
  if (!config_json.ok()) return Fail(err, config_json.status());
  absl::StatusOr<PayoffConfig> config = PayoffConfigFromJson(*config_json);
  if (!config.ok()) return Fail(err, config.status());
  auto reports =
      ReadCsvRecords(flags.reports, {"blockId", "questionId"});
  if (!reports.ok()) return Fail(err, reports.status());
  auto truths =
      ReadCsvRecords(flags.truths, {"blockId", "questionId", "truth"});
  if (!truths.ok()) return Fail(err, truths.status());

  std::map<std::pair<std::string, std::string>, std::string> truth_of;
  for (const auto& t : *truths) {
    truth_of[{t.at("blockId"), t.at("questionId")}] = t.at("truth");
  }

  struct Row {
    std::string block;
    std::string question;
    double score;
    double payoff;
  };
  std::vector<Row> rows;
  std::vector<std::string> block_order;
  std::map<std::string, double> block_total;
  int bad_rows = 0;
  for (size_t r = 0; r < reports->size(); ++r) {
    const auto& rec = (*reports)[r];
    const std::string where = absl::StrCat(flags.reports, " row ", r + 1);
    auto bad = [&](std::string_view message) {
      err << where << ": " << message << "\n";
      ++bad_rows;
    };
    const int qi = config->IndexOf(rec.at("questionId"));
    if (qi < 0) {
      bad(absl::StrCat("unknown question '", rec.at("questionId"), "'"));
      continue;
    }
    const QuestionScoring& q = config->questions[qi];
    auto truth_it = truth_of.find({rec.at("blockId"), rec.at("questionId")});
    if (truth_it == truth_of.end()) {
      bad("no truth for this block and question");
      continue;
    }
    auto field = [&](const char* name) {
      auto it = rec.find(name);
      return it == rec.end() ? std::string() : it->second;
    };
    const std::optional<double> lower = ParseNumber(field("lower"));
    const std::optional<double> upper = ParseNumber(field("upper"));
    const std::optional<double> p_yes = ParseNumber(field("pYes"));
    Report report;
    GroundTruth truth;
    truth.kind = q.kind;
    if (lower.has_value() && upper.has_value() && !p_yes.has_value()) {
      report = IntervalReport{*lower, *upper, kDefaultAlpha};
    } else if (p_yes.has_value() && !lower.has_value() && !upper.has_value()) {
      report = BinaryReport{*p_yes};
    } else {
      bad("a report needs either lower and upper, or pYes");
      continue;
    }
    if (q.kind == QuestionKind::kQuantitative) {
      const std::optional<double> count = ParseNumber(truth_it->second);
      if (!count.has_value()) {
        bad("truth is not a number");
        continue;
      }
      truth.count = *count;
    } else {
      const std::optional<bool> yes = ParseYesNo(truth_it->second);
      if (!yes.has_value()) {
        bad("truth is not yes/no");
        continue;
      }
      truth.yes = *yes;
    }
    absl::StatusOr<double> score =
        std::holds_alternative<IntervalReport>(report)
            ? (q.kind == QuestionKind::kQuantitative
                   ? IntervalScore(std::get<IntervalReport>(report), truth.count)
                   : absl::InvalidArgumentError(
                         "interval report for a binary question"))
            : (q.kind == QuestionKind::kBinary
                   ? BrierScore(std::get<BinaryReport>(report), truth.yes)
                   : absl::InvalidArgumentError(
                         "probability report for a quantitative question"));
    if (!score.ok()) {
      bad(std::string(score.status().message()));
      continue;
    }
    const double payoff =
        NormalizeToPayoff(*score, q.constant, config->per_question_max);
    if (!block_total.count(rec.at("blockId"))) {
      block_order.push_back(rec.at("blockId"));
    }
    block_total[rec.at("blockId")] += payoff;
    rows.push_back({rec.at("blockId"), q.id, *score, payoff});
  }

  std::string text;
  if (flags.common.format == "csv") {
    text = "blockId,questionId,score,payoff\n";
    for (const Row& r : rows) {
      absl::StrAppend(&text, r.block, ",", r.question, ",",
                      FormatDouble(r.score), ",", FormatDouble(r.payoff), "\n");
    }
    for (const std::string& b : block_order) {
      absl::StrAppend(&text, b, ",total,,", FormatDouble(block_total[b]), "\n");
    }
  } else {
    nlohmann::json jr = nlohmann::json::array();
    for (const Row& r : rows) {
      jr.push_back({{"blockId", r.block},
                    {"questionId", r.question},
                    {"score", r.score},
                    {"payoff", r.payoff}});
    }
    nlohmann::json jb = nlohmann::json::array();
    for (const std::string& b : block_order) {
      jb.push_back({{"blockId", b}, {"total", block_total[b]}});
    }
    text = nlohmann::json{{"rows", jr}, {"blocks", jb}}.dump(2) + "\n";
  }
  if (absl::Status s = Emit(flags.common, text, out); !s.ok()) {
    return Fail(err, s);
  }
  return bad_rows == 0 ? kExitOk : kExitUsage;
}

}  // namespace

int Run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Measure-observe-remeasure engine for DP exploratory analysis",
               "remeasure"};
  app.require_subcommand(1);

  IngestFlags ingest;
  CLI::App* ingest_cmd =
      app.add_subcommand("ingest", "Bin a CSV file and register it");
  ingest_cmd->add_option("--csv", ingest.csv, "CSV file")->required();
  ingest_cmd->add_option("--schema", ingest.schema, "Schema JSON")->required();
  ingest_cmd->add_option("--registry", ingest.registry, "Registry directory")
      ->required();
  ingest_cmd->add_option("--id", ingest.id, "Dataset id")->required();

  ServeFlags serve;
  CLI::App* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API");
  serve_cmd->add_option("--listen", serve.listen, "host:port")
      ->envname("REMEASURE_LISTEN");
  serve_cmd->add_option("--registry", serve.registry, "Registry directory")
      ->envname("REMEASURE_REGISTRY");
  serve_cmd->add_option("--config", serve.config,
                        "Default session config JSON");

  BenchmarkFlags bench;
  CLI::App* bench_cmd = app.add_subcommand(
      "agent-benchmark", "Rational-agent benchmarks and loss decomposition");
  AddCommonFlags(bench_cmd, &bench.common);
  bench_cmd->add_option("--dgm", bench.dgm, "DGM JSON")->required();
  bench_cmd->add_option("--trials", bench.trials, "Monte Carlo trials")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--allocations", bench.allocations,
                        "Observed allocations CSV");
  bench_cmd->add_option("--random-mode", bench.random_mode,
                        "Random allocation distribution")
      ->check(CLI::IsMember({"multinomial", "uniform-composition"}));
  bench_cmd->add_option("--prior-draws", bench.prior_draws,
                        "Resamples for the prior benchmark")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--observed-payoff", bench.observed_payoff,
                        "Observed mean block payoff P");

  ParadigmFlags paradigm;
  CLI::App* paradigm_cmd = app.add_subcommand(
      "compare-paradigms", "Measure-observe vs measure-observe-remeasure error");
  AddCommonFlags(paradigm_cmd, &paradigm.common);
  paradigm_cmd->add_option("--initial-eps", paradigm.initial_eps)
      ->delimiter(',');
  paradigm_cmd->add_option("--k-list", paradigm.ks)->delimiter(',');
  paradigm_cmd->add_option("--trials", paradigm.trials)
      ->check(CLI::PositiveNumber);

  ScoreFlags score;
  CLI::App* score_cmd =
      app.add_subcommand("score", "Score report files into payoffs");
  AddCommonFlags(score_cmd, &score.common);
  score_cmd->add_option("--reports", score.reports, "Reports CSV")->required();
  score_cmd->add_option("--truths", score.truths, "Truths CSV")->required();
  score_cmd->add_option("--config", score.config, "Scoring config JSON")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    if (e.get_exit_code() == 0) return kExitOk;
    return kExitUsage;
  }

  if (ingest_cmd->parsed()) return RunIngest(ingest, out, err);
  if (serve_cmd->parsed()) return RunServe(serve, out, err);
  if (bench_cmd->parsed()) return RunAgentBenchmark(bench, out, err);
  if (paradigm_cmd->parsed()) return RunCompareParadigms(paradigm, out, err);
  if (score_cmd->parsed()) return RunScore(score, out, err);
  return kExitUsage;
}

}  // namespace remeasure::cli
