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

// JSON description of a data-generating model.
//
//   {
//     "schema": {"attributes": [...]},
//     "versions": ["v1.csv", "v2.json", ...]            // relative to the file
//              | {"synthetic": {"count": 4, "size": 1000, "populationSeed": 1,
//                               "seed": 2, "perturbation": 0.3,
//                               "resampleFraction": 0.05,
//                               "marginals": {"attr": [weights...]}}},
//     "prior": [0.25, 0.25, 0.25, 0.25],                 // optional
//     "session": {"totalRemeasures": 6, ...},            // optional
//     "perQuestionMax": 2.5,                             // optional
//     "calibration": {"draws": 10000, "seed": 7},        // optional
//     "questions": [{
//       "id": "Q1", "kind": "quantitative" | "binary",
//       "valueStyle": "single-value" | "multi-value",
//       "attributes": ["race", "age"],
//       "select": {"race": ["Black", "Asian"], "age": ["55-64", "65+"]},
//       "threshold": {"value": 327, "direction": "greater-than"},
//       "constant": 75.0
//     }]
//   }
//
// A quantitative question without "constant" is calibrated from the DGM with
// CalibrateNormalizationConstant; a binary one gets 2.

#ifndef REMEASURE_DGM_CONFIG_H_
#define REMEASURE_DGM_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "nlohmann/json.hpp"
#include "remeasure/agent.h"
#include "remeasure/domain.h"
#include "remeasure/session.h"

namespace remeasure {

struct SyntheticSpec {
  int count = 4;
  size_t size = 1000;
  uint64_t population_seed = 1;
  uint64_t seed = 2;
  // Log-scale jitter applied to the product-of-marginals population.
  double perturbation = 0.3;
  // Versions start from one shared base sample; each record is redrawn from
  // the population with this probability. 1 gives independent samples.
  double resample_fraction = 1.0;
  // Unnormalized bin weights per attribute; missing attributes are uniform.
  std::map<std::string, std::vector<double>> marginals;
};

// Versions are samples of `size` records from one population joint: the
// product of the marginals times exp(perturbation * z_cell) with z_cell
// standard normal, normalized. See SyntheticSpec::resample_fraction for how
// much they overlap.
absl::StatusOr<std::vector<Dataset>> GenerateSyntheticVersions(
    const Schema& schema, const SyntheticSpec& spec);

absl::StatusOr<Question> QuestionFromJson(const nlohmann::json& j,
                                          const Schema& schema);

absl::StatusOr<DataGeneratingModel> DgmFromJson(
    const nlohmann::json& j, const std::filesystem::path& base_dir,
    const SessionConfig& session_defaults = {});

absl::StatusOr<DataGeneratingModel> LoadDgm(const std::filesystem::path& path);

}  // namespace remeasure

#endif  // REMEASURE_DGM_CONFIG_H_
