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

#ifndef REMEASURE_RNG_H_
#define REMEASURE_RNG_H_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace remeasure {

// Mixes a base seed with a path of stream coordinates (e.g. trial index,
// query index, measurement index) into an independent 64-bit seed. Streams
// derived from distinct paths are statistically independent, so Monte Carlo
// results do not depend on evaluation order or thread count.
uint64_t DeriveSeed(uint64_t seed, std::initializer_list<uint64_t> path);

// Seedable generator with bit-reproducible sampling routines. Only the raw
// 64-bit output of std::mt19937_64 is used; all transforms are done here so
// results do not depend on the standard library's distribution classes.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }

  // Uniform on the open interval (0, 1).
  double Uniform01();

  // Laplace(0, scale) by inverse CDF. scale == 0 yields exactly 0.
  double Laplace(double scale);

  // Uniform integer in [0, n). n must be positive.
  uint64_t UniformIndex(uint64_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace remeasure

#endif  // REMEASURE_RNG_H_
