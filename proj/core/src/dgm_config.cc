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

#include "remeasure/dgm_config.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <numbers>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "remeasure/ingest.h"
#include "remeasure/rng.h"

namespace remeasure {
namespace {

constexpr int kDefaultCalibrationDraws = 10000;
constexpr uint64_t kDefaultCalibrationSeed = 7;

double StandardNormal(Rng& rng) {
  const double u1 = rng.Uniform01();
  const double u2 = rng.Uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2 * std::numbers::pi * u2);
}

absl::StatusOr<nlohmann::json> ReadJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    return absl::NotFoundError(absl::StrCat("cannot open ", path.string()));
  }
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat(path.string(), ": ", e.what()));
  }
}

absl::StatusOr<Dataset> LoadVersion(const std::filesystem::path& path,
                                    const Schema& schema) {
  if (path.extension() == ".json") {
    absl::StatusOr<nlohmann::json> j = ReadJsonFile(path);
    if (!j.ok()) return j.status();
    absl::StatusOr<Dataset> ds = DatasetFromJson(*j);
    if (!ds.ok()) return ds.status();
    if (!(ds->schema() == schema)) {
      return absl::InvalidArgumentError(
          absl::StrCat(path.string(), " does not use the DGM schema"));
    }
    return ds;
  }
  std::ifstream in(path);
  if (!in) {
    return absl::NotFoundError(absl::StrCat("cannot open ", path.string()));
  }
  absl::StatusOr<Dataset> ds = Ingest(in, schema);
  if (!ds.ok()) {
    return absl::InvalidArgumentError(
        absl::StrCat(path.string(), ": ", ds.status().message()));
  }
  return ds;
}

absl::StatusOr<SyntheticSpec> SyntheticSpecFromJson(const nlohmann::json& j) {
  SyntheticSpec spec;
  try {
    spec.count = j.value("count", spec.count);
    spec.size = j.value("size", spec.size);
    spec.population_seed = j.value("populationSeed", spec.population_seed);
    spec.seed = j.value("seed", spec.seed);
    spec.perturbation = j.value("perturbation", spec.perturbation);
    spec.resample_fraction =
        j.value("resampleFraction", spec.resample_fraction);
    if (j.contains("marginals")) {
      spec.marginals =
          j["marginals"].get<std::map<std::string, std::vector<double>>>();
    }
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("malformed synthetic spec: ", e.what()));
  }
  return spec;
}

}  // namespace

absl::StatusOr<std::vector<Dataset>> GenerateSyntheticVersions(
    const Schema& schema, const SyntheticSpec& spec) {
  if (spec.count < 1) return absl::InvalidArgumentError("count must be >= 1");
  if (!(spec.perturbation >= 0)) {
    return absl::InvalidArgumentError("perturbation must be >= 0");
  }
  if (!(spec.resample_fraction >= 0 && spec.resample_fraction <= 1)) {
    return absl::InvalidArgumentError("resampleFraction must lie in [0, 1]");
  }
  const int width = schema.num_attributes();
  std::vector<std::vector<double>> weights(width);
  size_t cells = 1;
  for (int a = 0; a < width; ++a) {
    const Attribute& attr = schema.attribute(a);
    auto it = spec.marginals.find(attr.name);
    if (it == spec.marginals.end()) {
      weights[a].assign(attr.num_bins(), 1.0);
    } else {
      if (static_cast<int>(it->second.size()) != attr.num_bins()) {
        return absl::InvalidArgumentError(absl::StrCat(
            "marginal for '", attr.name, "' needs ", attr.num_bins(),
            " weights"));
      }
      weights[a] = it->second;
      for (double w : weights[a]) {
        if (!(w > 0)) {
          return absl::InvalidArgumentError("marginal weights must be > 0");
        }
      }
    }
    cells *= attr.num_bins();
  }
  for (const auto& [name, w] : spec.marginals) {
    if (!schema.IndexOf(name).ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat("marginal for unknown attribute '", name, "'"));
    }
  }

  // Row-major joint, last attribute fastest.
  Rng population_rng(spec.population_seed);
  std::vector<double> cdf(cells);
  double total = 0;
  std::vector<int> bins(width, 0);
  for (size_t c = 0; c < cells; ++c) {
    double p = std::exp(spec.perturbation * StandardNormal(population_rng));
    for (int a = 0; a < width; ++a) p *= weights[a][bins[a]];
    total += p;
    cdf[c] = total;
    for (int a = width - 1; a >= 0; --a) {
      if (++bins[a] < schema.attribute(a).num_bins()) break;
      bins[a] = 0;
    }
  }

  auto draw_cell = [&](Rng& rng) {
    const double u = rng.Uniform01() * total;
    const size_t cell = static_cast<size_t>(
        std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    return std::min(cell, cells - 1);
  };
  Rng base_rng(DeriveSeed(spec.seed, {0}));
  std::vector<size_t> base(spec.size);
  for (size_t& cell : base) cell = draw_cell(base_rng);

  std::vector<Dataset> versions;
  for (int v = 0; v < spec.count; ++v) {
    Rng rng(DeriveSeed(spec.seed, {1, static_cast<uint64_t>(v)}));
    std::vector<int32_t> flat;
    flat.reserve(spec.size * width);
    std::vector<int32_t> record(width);
    for (size_t r = 0; r < spec.size; ++r) {
      size_t cell = base[r];
      if (rng.Uniform01() < spec.resample_fraction) cell = draw_cell(rng);
      for (int a = width - 1; a >= 0; --a) {
        const int n = schema.attribute(a).num_bins();
        record[a] = static_cast<int32_t>(cell % n);
        cell /= n;
      }
      flat.insert(flat.end(), record.begin(), record.end());
    }
    absl::StatusOr<Dataset> ds = Dataset::Create(schema, std::move(flat));
    if (!ds.ok()) return ds.status();
    versions.push_back(*std::move(ds));
  }
  return versions;
}

absl::StatusOr<Question> QuestionFromJson(const nlohmann::json& j,
                                          const Schema& schema) {
  Question q;
  try {
    q.id = j.at("id").get<std::string>();
    absl::StatusOr<QuestionKind> kind =
        ParseQuestionKind(j.at("kind").get<std::string>());
    if (!kind.ok()) return kind.status();
    q.kind = *kind;
    if (j.contains("valueStyle")) {
      absl::StatusOr<ValueStyle> style =
          ParseValueStyle(j["valueStyle"].get<std::string>());
      if (!style.ok()) return style.status();
      q.value_style = *style;
    }
    const auto attributes = j.at("attributes").get<std::vector<std::string>>();
    absl::StatusOr<QueryDomain> domain = QueryDomain::Create(schema, attributes);
    if (!domain.ok()) return domain.status();
    std::map<std::string, std::vector<std::string>> selection;
    if (j.contains("select")) {
      selection =
          j["select"].get<std::map<std::string, std::vector<std::string>>>();
    }
    absl::StatusOr<LinearQuery> functional =
        LinearQuery::FromSelection(*domain, selection);
    if (!functional.ok()) return functional.status();
    q.functional = *std::move(functional);
    if (j.contains("threshold")) {
      const nlohmann::json& t = j["threshold"];
      Threshold threshold;
      threshold.value = t.at("value").get<int64_t>();
      absl::StatusOr<ThresholdDirection> dir = ParseThresholdDirection(
          t.value("direction", std::string("greater-than")));
      if (!dir.ok()) return dir.status();
      threshold.direction = *dir;
      q.threshold = threshold;
    }
    q.normalization_constant = j.value("constant", kBinaryConstant);
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("malformed question: ", e.what()));
  }
  if (absl::Status s = q.Validate(); !s.ok()) return s;
  return q;
}

absl::StatusOr<DataGeneratingModel> DgmFromJson(
    const nlohmann::json& j, const std::filesystem::path& base_dir,
    const SessionConfig& session_defaults) {
  if (!j.is_object()) return absl::InvalidArgumentError("DGM must be an object");
  if (!j.contains("schema")) return absl::InvalidArgumentError("missing schema");
  absl::StatusOr<Schema> schema = SchemaFromJson(j["schema"]);
  if (!schema.ok()) return schema.status();

  std::vector<std::shared_ptr<const Dataset>> versions;
  if (!j.contains("versions")) {
    return absl::InvalidArgumentError("missing versions");
  }
  const nlohmann::json& jv = j["versions"];
  if (jv.is_object() && jv.contains("synthetic")) {
    absl::StatusOr<SyntheticSpec> spec = SyntheticSpecFromJson(jv["synthetic"]);
    if (!spec.ok()) return spec.status();
    absl::StatusOr<std::vector<Dataset>> generated =
        GenerateSyntheticVersions(*schema, *spec);
    if (!generated.ok()) return generated.status();
    for (Dataset& d : *generated) {
      versions.push_back(std::make_shared<const Dataset>(std::move(d)));
    }
  } else if (jv.is_array()) {
    for (const nlohmann::json& p : jv) {
      if (!p.is_string()) {
        return absl::InvalidArgumentError("version entries must be paths");
      }
      absl::StatusOr<Dataset> ds =
          LoadVersion(base_dir / p.get<std::string>(), *schema);
      if (!ds.ok()) return ds.status();
      versions.push_back(std::make_shared<const Dataset>(*std::move(ds)));
    }
  } else {
    return absl::InvalidArgumentError(
        "versions must be a list of paths or {\"synthetic\": {...}}");
  }

  std::vector<double> prior;
  SessionConfig session = session_defaults;
  double per_question_max = kPerQuestionMax;
  int calibration_draws = kDefaultCalibrationDraws;
  uint64_t calibration_seed = kDefaultCalibrationSeed;
  std::vector<Question> questions;
  std::vector<int> uncalibrated;
  try {
    if (j.contains("prior")) prior = j["prior"].get<std::vector<double>>();
    if (j.contains("session")) {
      absl::StatusOr<SessionConfig> s =
          SessionConfigFromJson(j["session"], session_defaults);
      if (!s.ok()) return s.status();
      session = *s;
    }
    per_question_max = j.value("perQuestionMax", kPerQuestionMax);
    if (j.contains("calibration")) {
      calibration_draws = j["calibration"].value("draws", calibration_draws);
      calibration_seed = j["calibration"].value("seed", calibration_seed);
    }
    for (const nlohmann::json& jq : j.at("questions")) {
      absl::StatusOr<Question> q = QuestionFromJson(jq, *schema);
      if (!q.ok()) return q.status();
      if (q->kind == QuestionKind::kQuantitative && !jq.contains("constant")) {
        uncalibrated.push_back(static_cast<int>(questions.size()));
      }
      questions.push_back(*std::move(q));
    }
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat("malformed DGM: ", e.what()));
  }

  absl::StatusOr<DataGeneratingModel> dgm = DataGeneratingModel::Create(
      std::move(versions), std::move(prior), std::move(questions), session,
      per_question_max);
  if (!dgm.ok()) return dgm.status();
  for (int q : uncalibrated) {
    absl::StatusOr<double> constant = CalibrateNormalizationConstant(
        *dgm, q, calibration_draws,
        DeriveSeed(calibration_seed, {static_cast<uint64_t>(q)}));
    if (!constant.ok()) return constant.status();
    if (absl::Status s = dgm->SetNormalizationConstant(q, *constant); !s.ok()) {
      return s;
    }
  }
  return dgm;
}

absl::StatusOr<DataGeneratingModel> LoadDgm(const std::filesystem::path& path) {
  absl::StatusOr<nlohmann::json> j = ReadJsonFile(path);
  if (!j.ok()) return j.status();
  return DgmFromJson(*j, path.parent_path());
}

}  // namespace remeasure
