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

#include "remeasure/domain.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "string_view_compat.h"
#include "absl/status/status.h"
#include "absl/strings/ascii.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"

namespace remeasure {

absl::StatusOr<int> Attribute::BinIndex(std::string_view label) const {
  for (int i = 0; i < num_bins(); ++i) {
    if (bins[i] == label) return i;
  }
  return absl::NotFoundError(
      absl::StrCat("attribute '", name, "' has no bin '", Av(label), "'"));
}

absl::StatusOr<int> Attribute::BinOf(std::string_view raw) const {
  const absl::string_view value = absl::StripAsciiWhitespace(Av(raw));
  if (!numeric()) {
    for (int i = 0; i < num_bins(); ++i) {
      if (bins[i] == value) return i;
    }
    return absl::InvalidArgumentError(
        absl::StrCat("value '", value, "' matches no bin of '", name, "'"));
  }
  double x = 0;
  if (!absl::SimpleAtod(value, &x) || !std::isfinite(x)) {
    return absl::InvalidArgumentError(
        absl::StrCat("value '", value, "' is not numeric for '", name, "'"));
  }
  const int n = num_bins();
  if (x < breakpoints.front() || x > breakpoints.back()) {
    return absl::InvalidArgumentError(
        absl::StrCat("value '", value, "' is outside [", breakpoints.front(),
                     ", ", breakpoints.back(), "] for '", name, "'"));
  }
  // Left-closed, right-open bins; the final bin also takes its right edge.
  auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), x);
  int bin = static_cast<int>(it - breakpoints.begin()) - 1;
  return std::min(bin, n - 1);
}

absl::StatusOr<Schema> Schema::Create(std::vector<Attribute> attributes) {
  if (attributes.empty()) {
    return absl::InvalidArgumentError("schema has no attributes");
  }
  std::set<std::string> names;
  for (const Attribute& a : attributes) {
    if (a.name.empty()) {
      return absl::InvalidArgumentError("attribute with empty name");
    }
    if (!names.insert(a.name).second) {
      return absl::InvalidArgumentError(
          absl::StrCat("duplicate attribute '", a.name, "'"));
    }
    if (a.bins.size() < 2) {
      return absl::InvalidArgumentError(
          absl::StrCat("attribute '", a.name, "' needs at least 2 bins"));
    }
    std::set<std::string> labels(a.bins.begin(), a.bins.end());
    if (labels.size() != a.bins.size()) {
      return absl::InvalidArgumentError(
          absl::StrCat("attribute '", a.name, "' has duplicate bin labels"));
    }
    if (a.numeric()) {
      if (a.breakpoints.size() != a.bins.size() + 1) {
        return absl::InvalidArgumentError(absl::StrCat(
            "attribute '", a.name, "' has ", a.bins.size(), " bins but ",
            a.breakpoints.size(), " breakpoints (expected bins + 1)"));
      }
      for (size_t i = 0; i + 1 < a.breakpoints.size(); ++i) {
        if (!(a.breakpoints[i] < a.breakpoints[i + 1])) {
          return absl::InvalidArgumentError(absl::StrCat(
              "attribute '", a.name, "' breakpoints not increasing"));
        }
      }
    }
  }
  return Schema(std::move(attributes));
}

absl::StatusOr<int> Schema::IndexOf(std::string_view name) const {
  for (int i = 0; i < num_attributes(); ++i) {
    if (attributes_[i].name == name) return i;
  }
  return absl::NotFoundError(absl::StrCat("unknown attribute '", Av(name), "'"));
}

bool operator==(const Schema& a, const Schema& b) {
  if (a.attributes_.size() != b.attributes_.size()) return false;
  for (size_t i = 0; i < a.attributes_.size(); ++i) {
    const Attribute& x = a.attributes_[i];
    const Attribute& y = b.attributes_[i];
    if (x.name != y.name || x.bins != y.bins ||
        x.breakpoints != y.breakpoints || x.source_column() != y.source_column())
      return false;
  }
  return true;
}

absl::StatusOr<Dataset> Dataset::Create(Schema schema,
                                        std::vector<int32_t> flat_records) {
  const size_t width = schema.attributes().size();
  if (width == 0) return absl::InvalidArgumentError("empty schema");
  if (flat_records.size() % width != 0) {
    return absl::InvalidArgumentError(
        "record buffer is not a multiple of the schema width");
  }
  const size_t n = flat_records.size() / width;
  for (size_t r = 0; r < n; ++r) {
    for (size_t a = 0; a < width; ++a) {
      const int32_t bin = flat_records[r * width + a];
      if (bin < 0 || bin >= schema.attribute(static_cast<int>(a)).num_bins()) {
        return absl::OutOfRangeError(absl::StrCat(
            "record ", r, " has bin ", bin, " out of range for '",
            schema.attribute(static_cast<int>(a)).name, "'"));
      }
    }
  }
  return Dataset(std::move(schema), std::move(flat_records), n);
}

absl::StatusOr<QueryDomain> QueryDomain::Create(
    const Schema& schema, std::span<const std::string> attribute_names) {
  if (attribute_names.empty()) {
    return absl::InvalidArgumentError("query domain needs an attribute");
  }
  QueryDomain d;
  std::set<std::string> seen;
  for (const std::string& name : attribute_names) {
    absl::StatusOr<int> idx = schema.IndexOf(name);
    if (!idx.ok()) return idx.status();
    if (!seen.insert(name).second) {
      return absl::InvalidArgumentError(
          absl::StrCat("attribute '", name, "' repeated in query"));
    }
    d.names_.push_back(name);
    d.schema_indices_.push_back(*idx);
    d.labels_.push_back(schema.attribute(*idx).bins);
  }
  const int k = d.num_attributes();
  d.strides_.assign(k, 1);
  for (int i = k - 2; i >= 0; --i) {
    d.strides_[i] = d.strides_[i + 1] * d.num_bins(i + 1);
  }
  d.num_cells_ = d.strides_[0] * d.num_bins(0);
  return d;
}

int QueryDomain::CellIndex(std::span<const int> bins) const {
  int cell = 0;
  for (int i = 0; i < num_attributes(); ++i) cell += bins[i] * strides_[i];
  return cell;
}

std::vector<int> QueryDomain::CellBins(int cell) const {
  std::vector<int> bins(num_attributes());
  for (int i = 0; i < num_attributes(); ++i) bins[i] = BinOfCell(cell, i);
  return bins;
}

int64_t DataVector::total() const {
  int64_t sum = 0;
  for (int64_t c : counts) sum += c;
  return sum;
}

namespace {

struct ResolvedClause {
  int schema_index;
  std::vector<bool> allowed;
};

absl::StatusOr<std::vector<ResolvedClause>> ResolveFilter(
    const Schema& schema, const Filter& filter) {
  std::vector<ResolvedClause> out;
  for (const BinSetClause& clause : filter) {
    absl::StatusOr<int> idx = schema.IndexOf(clause.attribute);
    if (!idx.ok()) return idx.status();
    const Attribute& attr = schema.attribute(*idx);
    ResolvedClause rc{*idx, std::vector<bool>(attr.num_bins(), false)};
    for (const std::string& label : clause.bins) {
      absl::StatusOr<int> bin = attr.BinIndex(label);
      if (!bin.ok()) return bin.status();
      rc.allowed[*bin] = true;
    }
    out.push_back(std::move(rc));
  }
  return out;
}

}  // namespace

absl::StatusOr<DataVector> Vectorize(const Dataset& dataset,
                                     const QueryDomain& domain,
                                     const Filter& filter) {
  const Schema& schema = dataset.schema();
  for (int i = 0; i < domain.num_attributes(); ++i) {
    absl::StatusOr<int> idx = schema.IndexOf(domain.attribute_names()[i]);
    if (!idx.ok()) return idx.status();
    if (*idx != domain.schema_indices()[i] ||
        schema.attribute(*idx).bins != domain.bin_labels(i)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "query attribute '", domain.attribute_names()[i],
          "' does not match the dataset schema"));
    }
  }
  absl::StatusOr<std::vector<ResolvedClause>> clauses =
      ResolveFilter(schema, filter);
  if (!clauses.ok()) return clauses.status();

  DataVector out{domain, std::vector<int64_t>(domain.num_cells(), 0)};
  std::vector<int> bins(domain.num_attributes());
  for (size_t r = 0; r < dataset.size(); ++r) {
    std::span<const int32_t> rec = dataset.record(r);
    bool pass = true;
    for (const ResolvedClause& c : *clauses) {
      if (!c.allowed[rec[c.schema_index]]) {
        pass = false;
        break;
      }
    }
    if (!pass) continue;
    for (int i = 0; i < domain.num_attributes(); ++i) {
      bins[i] = rec[domain.schema_indices()[i]];
    }
    ++out.counts[domain.CellIndex(bins)];
  }
  return out;
}

LinearQuery LinearQuery::BinMarginal(const QueryDomain& domain, int position,
                                     int bin) {
  LinearQuery q{domain, std::vector<double>(domain.num_cells(), 0.0)};
  for (int c = 0; c < domain.num_cells(); ++c) {
    if (domain.BinOfCell(c, position) == bin) q.weights[c] = 1.0;
  }
  return q;
}

absl::StatusOr<LinearQuery> LinearQuery::FromSelection(
    const QueryDomain& domain,
    const std::map<std::string, std::vector<std::string>>& selection) {
  std::vector<std::vector<bool>> allowed;
  for (int i = 0; i < domain.num_attributes(); ++i) {
    allowed.emplace_back(domain.num_bins(i), true);
  }
  for (const auto& [name, labels] : selection) {
    const auto& names = domain.attribute_names();
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) {
      return absl::NotFoundError(
          absl::StrCat("attribute '", name, "' is not in the query domain"));
    }
    const int pos = static_cast<int>(it - names.begin());
    std::vector<bool> mask(domain.num_bins(pos), false);
    for (const std::string& label : labels) {
      const auto& bl = domain.bin_labels(pos);
      auto b = std::find(bl.begin(), bl.end(), label);
      if (b == bl.end()) {
        return absl::NotFoundError(
            absl::StrCat("attribute '", name, "' has no bin '", Av(label), "'"));
      }
      mask[b - bl.begin()] = true;
    }
    allowed[pos] = std::move(mask);
  }
  LinearQuery q{domain, std::vector<double>(domain.num_cells(), 0.0)};
  for (int c = 0; c < domain.num_cells(); ++c) {
    bool in = true;
    for (int i = 0; i < domain.num_attributes() && in; ++i) {
      in = allowed[i][domain.BinOfCell(c, i)];
    }
    if (in) q.weights[c] = 1.0;
  }
  return q;
}

absl::StatusOr<double> LinearQuery::Apply(const DataVector& data) const {
  if (!(domain == data.domain) || weights.size() != data.counts.size()) {
    return absl::InvalidArgumentError("query and data vector domains differ");
  }
  double sum = 0;
  for (size_t i = 0; i < weights.size(); ++i) {
    sum += weights[i] * static_cast<double>(data.counts[i]);
  }
  return sum;
}

absl::Status Question::Validate() const {
  if (kind == QuestionKind::kBinary && !threshold.has_value()) {
    return absl::InvalidArgumentError(
        absl::StrCat("binary question '", id, "' needs a threshold"));
  }
  if (kind == QuestionKind::kQuantitative && threshold.has_value()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "quantitative question '", id, "' must not carry a threshold"));
  }
  if (!(normalization_constant > 0) || !std::isfinite(normalization_constant)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "question '", id, "' needs a positive normalization constant"));
  }
  if (static_cast<int>(functional.weights.size()) !=
      functional.domain.num_cells()) {
    return absl::InvalidArgumentError(
        absl::StrCat("question '", id, "' functional has wrong length"));
  }
  return absl::OkStatus();
}

absl::StatusOr<GroundTruth> Evaluate(const Question& question,
                                     const DataVector& counts) {
  absl::StatusOr<double> value = question.functional.Apply(counts);
  if (!value.ok()) return value.status();
  GroundTruth truth{question.kind, *value, false};
  if (question.kind == QuestionKind::kBinary) {
    if (!question.threshold) {
      return absl::InvalidArgumentError("binary question without threshold");
    }
    truth.yes = question.threshold->Holds(*value);
  }
  return truth;
}

std::string_view ToString(QuestionKind kind) {
  return kind == QuestionKind::kBinary ? "binary" : "quantitative";
}

absl::StatusOr<QuestionKind> ParseQuestionKind(std::string_view s) {
  if (s == "quantitative") return QuestionKind::kQuantitative;
  if (s == "binary") return QuestionKind::kBinary;
  return absl::InvalidArgumentError(absl::StrCat("unknown kind '", Av(s), "'"));
}

std::string_view ToString(ThresholdDirection direction) {
  return direction == ThresholdDirection::kGreaterThan
             ? "greater-than"
             : "less-than-or-equal";
}

absl::StatusOr<ThresholdDirection> ParseThresholdDirection(std::string_view s) {
  if (s == "greater-than") return ThresholdDirection::kGreaterThan;
  if (s == "less-than-or-equal") return ThresholdDirection::kLessThanOrEqual;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown threshold direction '", Av(s), "'"));
}

std::string_view ToString(ValueStyle style) {
  return style == ValueStyle::kMultiValue ? "multi-value" : "single-value";
}

absl::StatusOr<ValueStyle> ParseValueStyle(std::string_view s) {
  if (s == "single-value") return ValueStyle::kSingleValue;
  if (s == "multi-value") return ValueStyle::kMultiValue;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown value style '", Av(s), "'"));
}

}  // namespace remeasure
