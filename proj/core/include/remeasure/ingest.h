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

#ifndef REMEASURE_INGEST_H_
#define REMEASURE_INGEST_H_

#include <cstddef>
#include <istream>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "nlohmann/json.hpp"
#include "remeasure/domain.h"

namespace remeasure {

// Splits UTF-8 comma-separated text into rows of fields. Handles quoted
// fields with embedded commas, doubled quotes and newlines, CRLF line endings
// and a leading byte-order mark. Blank lines are skipped.
absl::StatusOr<std::vector<std::vector<std::string>>> ReadCsv(
    std::istream& in);

// A row that could not be mapped onto the schema. `row` is the 1-based data
// row number (the header is row 0).
struct RowError {
  size_t row = 0;
  std::string attribute;
  std::string value;
  std::string message;
};

// Maps every CSV row onto a bin-index tuple. Fails with "empty file" when
// there is no header or no data row, names missing columns, and rejects the
// whole file when any value is unmappable; the individual failures are
// listed in the status message and, when `row_errors` is non-null, returned
// there as well.
absl::StatusOr<Dataset> Ingest(std::istream& csv, const Schema& schema,
                               std::vector<RowError>* row_errors = nullptr);

// Schema config: {"attributes":[{"name", "column"?, "bins":[...],
// "breakpoints"?:[...]}]}.
absl::StatusOr<Schema> SchemaFromJson(const nlohmann::json& j);
nlohmann::json SchemaToJson(const Schema& schema);

// {"schema": ..., "size": n, "records": [[bin, ...], ...]}
nlohmann::json DatasetToJson(const Dataset& dataset);
absl::StatusOr<Dataset> DatasetFromJson(const nlohmann::json& j);

// [{"attribute": name, "bins": [label, ...]}, ...]
nlohmann::json FilterToJson(const Filter& filter);
absl::StatusOr<Filter> FilterFromJson(const nlohmann::json& j);

}  // namespace remeasure

#endif  // REMEASURE_INGEST_H_
