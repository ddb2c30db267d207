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

#include "remeasure/rng.h"

#include <cmath>

namespace remeasure {
namespace {

// SplitMix64 finalizer.
uint64_t Mix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

uint64_t DeriveSeed(uint64_t seed, std::initializer_list<uint64_t> path) {
  uint64_t h = Mix(seed);
  for (uint64_t p : path) {
    h = Mix(h ^ Mix(p + 0x632be59bd9b4e019ULL));
  }
  return h;
}

double Rng::Uniform01() {
  // 53 random mantissa bits, offset by half an ulp so 0 is excluded.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::Laplace(double scale) {
  const double u = Uniform01() - 0.5;
  if (scale == 0.0) return 0.0;
  const double magnitude = -scale * std::log1p(-2.0 * std::fabs(u));
  return u < 0 ? -magnitude : magnitude;
}

uint64_t Rng::UniformIndex(uint64_t n) {
  // Rejection sampling against the largest multiple of n.
  const uint64_t threshold = (0 - n) % n;
  while (true) {
    const uint64_t r = engine_();
    if (r >= threshold) return r % n;
  }
}

}  // namespace remeasure
