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

#include <fstream>

#include "gtest/gtest.h"
#include "remeasure/ingest.h"
#include "test_support.h"

namespace remeasure {
namespace {

namespace fs = std::filesystem;

Schema CensusSchema() {
  std::ifstream in(test::Fixture("census/schema.json"));
  return *SchemaFromJson(nlohmann::json::parse(in));
}

TEST(SyntheticVersionsTest, SizesAndDeterminism) {
  const Schema schema = test::MakeSchema({"x", "y"}, {3, 4});
  SyntheticSpec spec;
  spec.count = 3;
  spec.size = 500;
  const auto a = GenerateSyntheticVersions(schema, spec);
  const auto b = GenerateSyntheticVersions(schema, spec);
  ASSERT_OK(a);
  ASSERT_EQ(a->size(), 3u);
  for (size_t v = 0; v < 3; ++v) {
    EXPECT_EQ((*a)[v].size(), 500u);
    EXPECT_EQ((*a)[v].flat_records(), (*b)[v].flat_records());
  }
  EXPECT_NE((*a)[0].flat_records(), (*a)[1].flat_records());
  spec.seed = 99;
  EXPECT_NE(GenerateSyntheticVersions(schema, spec)->front().flat_records(),
            a->front().flat_records());
}

TEST(SyntheticVersionsTest, ResampleFractionControlsOverlap) {
  const Schema schema = test::MakeSchema({"x"}, {6});
  SyntheticSpec spec;
  spec.size = 400;
  spec.resample_fraction = 0;
  const auto same = *GenerateSyntheticVersions(schema, spec);
  for (const Dataset& d : same) {
    EXPECT_EQ(d.flat_records(), same.front().flat_records());
  }
  spec.resample_fraction = 0.05;
  const auto close = *GenerateSyntheticVersions(schema, spec);
  int differing = 0;
  for (size_t r = 0; r < 400; ++r) {
    differing += close[0].record(r)[0] != close[1].record(r)[0];
  }
  EXPECT_GT(differing, 0);
  EXPECT_LT(differing, 80);
}

TEST(SyntheticVersionsTest, MarginalsShapeThePopulation) {
  const Schema schema = test::MakeSchema({"x"}, {3});
  SyntheticSpec spec;
  spec.size = 5000;
  spec.count = 2;
  spec.perturbation = 0;
  spec.marginals["x"] = {8, 1, 1};
  const auto versions = *GenerateSyntheticVersions(schema, spec);
  const QueryDomain d = test::MakeDomain(schema, {"x"});
  const DataVector counts = *Vectorize(versions[0], d);
  EXPECT_NEAR(counts.counts[0] / 5000.0, 0.8, 0.03);
}

TEST(SyntheticVersionsTest, RejectsBadSpecs) {
  const Schema schema = test::MakeSchema({"x"}, {3});
  SyntheticSpec spec;
  spec.count = 0;
  EXPECT_FALSE(GenerateSyntheticVersions(schema, spec).ok());
  spec = {};
  spec.resample_fraction = 1.5;
  EXPECT_FALSE(GenerateSyntheticVersions(schema, spec).ok());
  spec = {};
  spec.marginals["x"] = {1, 2};
  EXPECT_FALSE(GenerateSyntheticVersions(schema, spec).ok());
  spec = {};
  spec.marginals["nope"] = {1, 2, 3};
  EXPECT_FALSE(GenerateSyntheticVersions(schema, spec).ok());
  spec = {};
  spec.marginals["x"] = {1, 0, 3};
  EXPECT_FALSE(GenerateSyntheticVersions(schema, spec).ok());
}

TEST(QuestionFromJsonTest, ParsesSelectionAndThreshold) {
  const Schema schema = CensusSchema();
  const auto q = QuestionFromJson(nlohmann::json::parse(R"({
      "id": "Q2", "kind": "binary", "valueStyle": "multi-value",
      "attributes": ["marital", "income"],
      "select": {"marital": ["Never married"]},
      "threshold": {"value": 327, "direction": "less-than-or-equal"}})"),
                                  schema);
  ASSERT_OK(q);
  EXPECT_EQ(q->kind, QuestionKind::kBinary);
  EXPECT_EQ(q->value_style, ValueStyle::kMultiValue);
  EXPECT_EQ(q->threshold->value, 327);
  EXPECT_EQ(q->threshold->direction, ThresholdDirection::kLessThanOrEqual);
  EXPECT_EQ(q->normalization_constant, 2.0);
  // "Never married" across all 5 income bins.
  double ones = 0;
  for (double w : q->functional.weights) ones += w;
  EXPECT_EQ(ones, 5);
}

TEST(QuestionFromJsonTest, Rejections) {
  const Schema schema = CensusSchema();
  for (const char* text : {
           R"({"kind": "quantitative", "attributes": ["race"]})",
           R"({"id": "Q", "kind": "ordinal", "attributes": ["race"]})",
           R"({"id": "Q", "kind": "quantitative", "attributes": ["zodiac"]})",
           R"({"id": "Q", "kind": "quantitative", "attributes": ["race"],
               "select": {"race": ["Martian"]}})",
           R"({"id": "Q", "kind": "binary", "attributes": ["race"]})",
           R"({"id": "Q", "kind": "quantitative", "attributes": ["race"],
               "threshold": {"value": 3}})"}) {
    EXPECT_FALSE(QuestionFromJson(nlohmann::json::parse(text), schema).ok())
        << text;
  }
}

struct FixtureConstants {
  const char* file;
  std::vector<double> constants;
};

class DgmFixtureTest : public ::testing::TestWithParam<FixtureConstants> {};

TEST_P(DgmFixtureTest, LoadsWithPinnedConstants) {
  const auto dgm = LoadDgm(test::Fixture(std::string("dgm/") + GetParam().file));
  ASSERT_OK(dgm);
  EXPECT_EQ(dgm->num_versions(), 4);
  ASSERT_EQ(dgm->num_questions(), 4);
  EXPECT_EQ(dgm->dataset_size(), 1000u);
  EXPECT_EQ(dgm->session().total_remeasures, 6);
  EXPECT_EQ(dgm->session().epsilon_per_remeasure, 0.02);
  EXPECT_EQ(dgm->session().initial_epsilon_per_query, 0.02);
  for (int q = 0; q < 4; ++q) {
    EXPECT_EQ(dgm->question(q).normalization_constant, GetParam().constants[q]);
  }
  for (double p : dgm->prior()) EXPECT_DOUBLE_EQ(p, 0.25);
}

INSTANTIATE_TEST_SUITE_P(
    Fixtures, DgmFixtureTest,
    ::testing::Values(
        FixtureConstants{"census_like.json", {75, 2, 217.69, 56.8}},
        FixtureConstants{"diabetes_like.json", {113.4, 283.3, 186.2, 2}},
        FixtureConstants{"student_like.json", {178.8, 185.6, 2, 56.8}}));

TEST(DgmFromJsonTest, CsvVersionsAndCalibratedConstants) {
  test::TempDir dir;
  // Two versions: the sample and the sample without its last 10 rows.
  std::ifstream src(test::Fixture("census/sample.csv"));
  std::vector<std::string> lines;
  for (std::string line; std::getline(src, line);) lines.push_back(line);
  {
    std::ofstream a(dir.path() / "v1.csv"), b(dir.path() / "v2.csv");
    for (size_t i = 0; i < lines.size(); ++i) {
      a << lines[i] << "\n";
      if (i + 10 < lines.size()) b << lines[i] << "\n";
    }
  }
  std::ifstream schema_in(test::Fixture("census/schema.json"));
  const nlohmann::json j = {
      {"schema", nlohmann::json::parse(schema_in)},
      {"versions", {"v1.csv", "v2.csv"}},
      {"prior", {0.4, 0.6}},
      {"session", {{"totalRemeasures", 3}}},
      {"calibration", {{"draws", 500}, {"seed", 3}}},
      {"questions",
       {{{"id", "Q1"}, {"kind", "quantitative"}, {"attributes", {"race"}},
         {"select", {{"race", {"White"}}}}}}}};
  const auto dgm = DgmFromJson(j, dir.path());
  ASSERT_OK(dgm);
  EXPECT_EQ(dgm->num_versions(), 2);
  EXPECT_EQ(dgm->session().total_remeasures, 3);
  EXPECT_EQ(dgm->session().epsilon_per_remeasure, 0.3);
  EXPECT_GT(dgm->question(0).normalization_constant, 0);
  EXPECT_NE(dgm->question(0).normalization_constant, kBinaryConstant);
  EXPECT_EQ(dgm->question(0).normalization_constant,
            DgmFromJson(j, dir.path())->question(0).normalization_constant);

  nlohmann::json missing = j;
  missing["versions"] = {"v1.csv", "absent.csv"};
  EXPECT_FALSE(DgmFromJson(missing, dir.path()).ok());
  nlohmann::json one = j;
  one["versions"] = {"v1.csv"};
  EXPECT_FALSE(DgmFromJson(one, dir.path()).ok());
  nlohmann::json bad_prior = j;
  bad_prior["prior"] = {0.5, 0.6};
  EXPECT_FALSE(DgmFromJson(bad_prior, dir.path()).ok());
  EXPECT_FALSE(DgmFromJson(nlohmann::json::array(), dir.path()).ok());
  EXPECT_FALSE(LoadDgm(dir.path() / "nothing.json").ok());
}

}  // namespace
}  // namespace remeasure
