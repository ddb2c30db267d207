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

#include "remeasure/ingest.h"

#include <iterator>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace remeasure {
namespace {

constexpr size_t kMaxListedErrors = 20;

bool IsBlank(const std::vector<std::string>& row) {
  return row.size() == 1 && row[0].empty();
}

}  // namespace

absl::StatusOr<std::vector<std::vector<std::string>>> ReadCsv(
    std::istream& in) {
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) {
    text.erase(0, 3);
  }
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  for (size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started && !field.empty()) {
          return absl::InvalidArgumentError(absl::StrCat(
              "stray quote in unquoted field on line ", rows.size() + 1));
        }
        quoted = true;
        field_started = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
        break;
      case '\r':
        break;
      case '\n':
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
        if (!IsBlank(row)) rows.push_back(std::move(row));
        row.clear();
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (quoted) return absl::InvalidArgumentError("unterminated quoted field");
  if (field_started || !row.empty()) {
    row.push_back(std::move(field));
    if (!IsBlank(row)) rows.push_back(std::move(row));
  }
  return rows;
}

absl::StatusOr<Dataset> Ingest(std::istream& csv, const Schema& schema,
                               std::vector<RowError>* row_errors) {
  absl::StatusOr<std::vector<std::vector<std::string>>> rows = ReadCsv(csv);
  if (!rows.ok()) return rows.status();
  if (rows->size() < 2) return absl::InvalidArgumentError("empty file");

  const std::vector<std::string>& header = (*rows)[0];
  std::vector<size_t> column_of;
  for (const Attribute& attr : schema.attributes()) {
    size_t found = header.size();
    for (size_t c = 0; c < header.size(); ++c) {
      if (header[c] == attr.source_column()) {
        found = c;
        break;
      }
    }
    if (found == header.size()) {
      return absl::InvalidArgumentError(
          absl::StrCat("missing column '", attr.source_column(),
                       "' for attribute '", attr.name, "'"));
    }
    column_of.push_back(found);
  }

  const size_t width = schema.attributes().size();
  std::vector<int32_t> records;
  records.reserve((rows->size() - 1) * width);
  std::vector<RowError> errors;
  for (size_t r = 1; r < rows->size(); ++r) {
    const std::vector<std::string>& row = (*rows)[r];
    for (size_t a = 0; a < width; ++a) {
      const Attribute& attr = schema.attribute(static_cast<int>(a));
      if (column_of[a] >= row.size()) {
        errors.push_back({r, attr.name, "", "row has too few fields"});
        records.push_back(0);
        continue;
      }
      const std::string& raw = row[column_of[a]];
      absl::StatusOr<int> bin = attr.BinOf(raw);
      if (!bin.ok()) {
        errors.push_back({r, attr.name, raw, std::string(bin.status().message())});
        records.push_back(0);
        continue;
      }
      records.push_back(*bin);
    }
  }
  if (!errors.empty()) {
    std::string msg = absl::StrCat(errors.size(), " unmappable value(s):");
    for (size_t i = 0; i < errors.size() && i < kMaxListedErrors; ++i) {
      absl::StrAppend(&msg, "\n  row ", errors[i].row, ", attribute '",
                      errors[i].attribute, "', value '", errors[i].value,
                      "': ", errors[i].message);
    }
    if (errors.size() > kMaxListedErrors) {
      absl::StrAppend(&msg, "\n  ...");
    }
    if (row_errors != nullptr) *row_errors = std::move(errors);
    return absl::InvalidArgumentError(msg);
  }
  return Dataset::Create(schema, std::move(records));
}

absl::StatusOr<Schema> SchemaFromJson(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("attributes") ||
      !j["attributes"].is_array()) {
    return absl::InvalidArgumentError("schema needs an 'attributes' array");
  }
  std::vector<Attribute> attributes;
  try {
    for (const nlohmann::json& a : j["attributes"]) {
      Attribute attr;
      attr.name = a.at("name").get<std::string>();
      attr.column = a.value("column", std::string());
      attr.bins = a.at("bins").get<std::vector<std::string>>();
      if (a.contains("breakpoints")) {
        attr.breakpoints = a["breakpoints"].get<std::vector<double>>();
      }
      attributes.push_back(std::move(attr));
    }
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("malformed schema: ", e.what()));
  }
  return Schema::Create(std::move(attributes));
}

nlohmann::json SchemaToJson(const Schema& schema) {
  nlohmann::json attrs = nlohmann::json::array();
  for (const Attribute& a : schema.attributes()) {
    nlohmann::json j = {{"name", a.name}, {"bins", a.bins}};
    if (!a.column.empty()) j["column"] = a.column;
    if (a.numeric()) j["breakpoints"] = a.breakpoints;
    attrs.push_back(std::move(j));
  }
  return {{"attributes", std::move(attrs)}};
}

nlohmann::json DatasetToJson(const Dataset& dataset) {
  nlohmann::json records = nlohmann::json::array();
  for (size_t r = 0; r < dataset.size(); ++r) {
    std::span<const int32_t> rec = dataset.record(r);
    records.push_back(std::vector<int32_t>(rec.begin(), rec.end()));
  }
  return {{"schema", SchemaToJson(dataset.schema())},
          {"size", dataset.size()},
          {"records", std::move(records)}};
}

absl::StatusOr<Dataset> DatasetFromJson(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("schema") || !j.contains("records")) {
    return absl::InvalidArgumentError("dataset needs 'schema' and 'records'");
  }
  absl::StatusOr<Schema> schema = SchemaFromJson(j["schema"]);
  if (!schema.ok()) return schema.status();
  std::vector<int32_t> flat;
  const size_t width = schema->attributes().size();
  try {
    for (const nlohmann::json& rec : j["records"]) {
      if (!rec.is_array() || rec.size() != width) {
        return absl::InvalidArgumentError("record width does not match schema");
      }
      for (const nlohmann::json& v : rec) flat.push_back(v.get<int32_t>());
    }
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("malformed dataset: ", e.what()));
  }
  absl::StatusOr<Dataset> ds = Dataset::Create(*std::move(schema), std::move(flat));
  if (!ds.ok()) return ds.status();
  if (j.contains("size") && j["size"].get<size_t>() != ds->size()) {
    return absl::InvalidArgumentError("dataset size does not match records");
  }
  return ds;
}

nlohmann::json FilterToJson(const Filter& filter) {
  nlohmann::json out = nlohmann::json::array();
  for (const BinSetClause& c : filter) {
    out.push_back({{"attribute", c.attribute}, {"bins", c.bins}});
  }
  return out;
}

absl::StatusOr<Filter> FilterFromJson(const nlohmann::json& j) {
  if (j.is_null()) return Filter{};
  if (!j.is_array()) return absl::InvalidArgumentError("filter must be an array");
  Filter filter;
  try {
    for (const nlohmann::json& c : j) {
      filter.push_back({c.at("attribute").get<std::string>(),
                        c.at("bins").get<std::vector<std::string>>()});
    }
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat("malformed filter: ", e.what()));
  }
  return filter;
}

}  // namespace remeasure
