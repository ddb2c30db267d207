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

#include <memory>
#include <string>
#include <vector>

#include "benchmark/benchmark.h"
#include "remeasure/agent.h"
#include "remeasure/dgm_config.h"
#include "remeasure/inference.h"
#include "remeasure/mechanism.h"
#include "remeasure/rng.h"

namespace remeasure {
namespace {

QueryDomain SquareDomain(int bins) {
  std::vector<Attribute> attrs;
  for (const char* name : {"a", "b"}) {
    Attribute a;
    a.name = name;
    for (int i = 0; i < bins; ++i) a.bins.push_back(std::to_string(i));
    attrs.push_back(std::move(a));
  }
  const Schema schema = *Schema::Create(std::move(attrs));
  return *QueryDomain::Create(schema, std::vector<std::string>{"a", "b"});
}

DataVector Counts(const QueryDomain& d) {
  DataVector v{d, std::vector<int64_t>(d.num_cells())};
  for (int c = 0; c < d.num_cells(); ++c) v.counts[c] = 10 + 7 * c % 50;
  return v;
}

void BM_Measure(benchmark::State& state) {
  const QueryDomain d = SquareDomain(static_cast<int>(state.range(0)));
  const DataVector data = Counts(d);
  auto s = std::make_shared<const Strategy>(
      BuildStrategy(d, StrategyFamily::kIdentityPlusMargins));
  uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(Measure(data, s, 0.3, ++seed));
  }
}
BENCHMARK(BM_Measure)->Arg(4)->Arg(8);

void BM_Fuse(benchmark::State& state) {
  const QueryDomain d = SquareDomain(static_cast<int>(state.range(0)));
  const DataVector data = Counts(d);
  auto s = std::make_shared<const Strategy>(
      BuildStrategy(d, StrategyFamily::kIdentity));
  std::vector<Measurement> cache;
  for (int i = 0; i < 7; ++i) {
    cache.push_back(*Measure(data, s, 0.3, DeriveSeed(1, {uint64_t(i)}), i));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(Fuse(cache));
  }
}
BENCHMARK(BM_Fuse)->Arg(4)->Arg(8);

void BM_BenchmarksPerTrial(benchmark::State& state) {
  const absl::StatusOr<DataGeneratingModel> dgm = LoadDgm(
      std::string(REMEASURE_FIXTURES_DIR) + "/dgm/census_like.json");
  if (!dgm.ok()) {
    state.SkipWithError("cannot load the census-like fixture");
    return;
  }
  BenchmarkOptions options;
  options.trials = 100;
  options.prior_draws = 1000;
  for (auto _ : state) {
    benchmark::DoNotOptimize(Benchmarks(*dgm, options));
  }
  state.SetItemsProcessed(state.iterations() * options.trials);
}
BENCHMARK(BM_BenchmarksPerTrial)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace remeasure

BENCHMARK_MAIN();
