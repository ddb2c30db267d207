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

// Binned categorical schemas, datasets of bin-index records, query domains
// (cross products of attribute bins) and linear counting queries over them.

#ifndef REMEASURE_DOMAIN_H_
#define REMEASURE_DOMAIN_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"

namespace remeasure {

// One binned attribute. Categorical attributes map a raw value to the bin with
// the identical label. Numeric attributes carry breakpoints b0 < b1 < ... < bn
// defining n bins [b0,b1), [b1,b2), ..., [b(n-1),bn]; the last bin is closed.
struct Attribute {
  std::string name;
  // Source column in ingested CSV files. Defaults to `name` when empty.
  std::string column;
  std::vector<std::string> bins;
  std::vector<double> breakpoints;

  bool numeric() const { return !breakpoints.empty(); }
  const std::string& source_column() const {
    return column.empty() ? name : column;
  }

  // Maps a raw CSV cell to its bin. Fails when the value is not parseable or
  // falls outside every bin.
  absl::StatusOr<int> BinOf(std::string_view raw) const;
  absl::StatusOr<int> BinIndex(std::string_view label) const;
  int num_bins() const { return static_cast<int>(bins.size()); }
};

class Schema {
 public:
  // Validates: at least one attribute, unique attribute names, >= 2 bins per
  // attribute, unique bin labels, and strictly increasing breakpoints whose
  // count is bins + 1.
  static absl::StatusOr<Schema> Create(std::vector<Attribute> attributes);

  Schema() = default;

  const std::vector<Attribute>& attributes() const { return attributes_; }
  const Attribute& attribute(int i) const { return attributes_[i]; }
  int num_attributes() const { return static_cast<int>(attributes_.size()); }
  absl::StatusOr<int> IndexOf(std::string_view name) const;

  friend bool operator==(const Schema& a, const Schema& b);

 private:
  explicit Schema(std::vector<Attribute> attributes)
      : attributes_(std::move(attributes)) {}

  std::vector<Attribute> attributes_;
};

// Records stored row-major as bin indices, one per schema attribute.
class Dataset {
 public:
  static absl::StatusOr<Dataset> Create(Schema schema,
                                        std::vector<int32_t> flat_records);

  Dataset() = default;

  const Schema& schema() const { return schema_; }
  size_t size() const { return size_; }
  std::span<const int32_t> record(size_t i) const {
    const size_t width = schema_.attributes().size();
    return {records_.data() + i * width, width};
  }
  const std::vector<int32_t>& flat_records() const { return records_; }

 private:
  Dataset(Schema schema, std::vector<int32_t> records, size_t size)
      : schema_(std::move(schema)), records_(std::move(records)), size_(size) {}

  Schema schema_;
  std::vector<int32_t> records_;
  size_t size_ = 0;
};

// Cross product of an ordered tuple of schema attributes. Cells are
// enumerated row-major in attribute order (the last attribute varies
// fastest), identically for every measurement of the query.
class QueryDomain {
 public:
  static absl::StatusOr<QueryDomain> Create(
      const Schema& schema, std::span<const std::string> attribute_names);

  QueryDomain() = default;

  int num_attributes() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& attribute_names() const { return names_; }
  // Schema positions of the domain attributes.
  const std::vector<int>& schema_indices() const { return schema_indices_; }
  const std::vector<std::string>& bin_labels(int position) const {
    return labels_[position];
  }
  int num_bins(int position) const {
    return static_cast<int>(labels_[position].size());
  }
  int num_cells() const { return num_cells_; }

  int CellIndex(std::span<const int> bins) const;
  std::vector<int> CellBins(int cell) const;
  // Bin of attribute `position` within `cell`.
  int BinOfCell(int cell, int position) const {
    return (cell / strides_[position]) % num_bins(position);
  }

  friend bool operator==(const QueryDomain& a, const QueryDomain& b) {
    return a.names_ == b.names_ && a.labels_ == b.labels_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<int> schema_indices_;
  std::vector<std::vector<std::string>> labels_;
  std::vector<int> strides_;
  int num_cells_ = 0;
};

// A query-level filter: a conjunction of bin-set memberships. A record passes
// when, for every clause, its bin of `attribute` is one of `bins`.
struct BinSetClause {
  std::string attribute;
  std::vector<std::string> bins;
};
using Filter = std::vector<BinSetClause>;

struct DataVector {
  QueryDomain domain;
  std::vector<int64_t> counts;

  int64_t total() const;
};

absl::StatusOr<DataVector> Vectorize(const Dataset& dataset,
                                     const QueryDomain& domain,
                                     const Filter& filter = {});

struct LinearQuery {
  QueryDomain domain;
  std::vector<double> weights;

  // Indicator of the cells whose bin of attribute `position` is `bin`.
  static LinearQuery BinMarginal(const QueryDomain& domain, int position,
                                 int bin);
  // Indicator of the cross product of selected bins. Attributes absent from
  // `selection` are unrestricted.
  static absl::StatusOr<LinearQuery> FromSelection(
      const QueryDomain& domain,
      const std::map<std::string, std::vector<std::string>>& selection);

  absl::StatusOr<double> Apply(const DataVector& data) const;
};

enum class QuestionKind { kQuantitative, kBinary };
enum class ValueStyle { kSingleValue, kMultiValue };
enum class ThresholdDirection { kGreaterThan, kLessThanOrEqual };

struct Threshold {
  int64_t value = 0;
  ThresholdDirection direction = ThresholdDirection::kGreaterThan;

  bool Holds(double count) const {
    return direction == ThresholdDirection::kGreaterThan ? count > value
                                                         : count <= value;
  }
};

struct Question {
  std::string id;
  QuestionKind kind = QuestionKind::kQuantitative;
  LinearQuery functional;
  std::optional<Threshold> threshold;
  ValueStyle value_style = ValueStyle::kSingleValue;
  double normalization_constant = 2.0;

  // Binary questions carry a threshold and quantitative ones do not; the
  // normalization constant is positive.
  absl::Status Validate() const;
};

// Ground truth of a question: the count, plus the yes/no outcome for binary
// questions.
struct GroundTruth {
  QuestionKind kind = QuestionKind::kQuantitative;
  double count = 0;
  bool yes = false;
};

absl::StatusOr<GroundTruth> Evaluate(const Question& question,
                                     const DataVector& counts);

std::string_view ToString(QuestionKind kind);
absl::StatusOr<QuestionKind> ParseQuestionKind(std::string_view s);
std::string_view ToString(ThresholdDirection direction);
absl::StatusOr<ThresholdDirection> ParseThresholdDirection(std::string_view s);
std::string_view ToString(ValueStyle style);
absl::StatusOr<ValueStyle> ParseValueStyle(std::string_view s);

}  // namespace remeasure

#endif  // REMEASURE_DOMAIN_H_
