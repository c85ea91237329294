// Copyright 2026 The dpopt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>

namespace dpopt {

// Counter-based random stream. Output i is a pure function of (key, i), so a
// stream can be forked per iteration / per coordinate and two algorithms that
// fork the same way consume identical values regardless of how many draws each
// fork makes. This is what lets the distributed run replay the centralized
// run's noise and subsampling streams exactly.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  // Independent root stream for (seed, domain). Domains keep the noise,
  // subsampling, output-selection, ... streams of one run disjoint.
  static CounterRng seeded(std::uint64_t seed, std::uint64_t domain) {
    return CounterRng(mix(mix(seed ^ 0x9e3779b97f4a7c15ULL, domain), seed));
  }

  // Child stream with its own counter; lane values need not be contiguous.
  CounterRng fork(std::uint64_t lane) const {
    return CounterRng(mix(key_, lane ^ 0xd1b54a32d192ed03ULL));
  }

  std::uint64_t next_u64() { return mix(key_, counter_++); }

  // Uniform double in the open interval (0, 1): 53-bit dyadic rational,
  // re-drawn on exact zero.
  double next_unit() {
    for (;;) {
      const double u =
          static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
      if (u > 0.0) return u;
    }
  }

  // Unbiased uniform integer in [0, n), n >= 1, via rejection.
  std::uint64_t uniform_below(std::uint64_t n) {
    const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
    for (;;) {
      const std::uint64_t v = next_u64();
      if (v < limit) return v % n;
    }
  }

 private:
  // splitmix64-style finalizer over a Weyl-advanced counter word.
  static std::uint64_t mix(std::uint64_t key, std::uint64_t word) {
    std::uint64_t z = key + word * 0x9e3779b97f4a7c15ULL + 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    z += key ^ (word * 0x2545f4914f6cdd1dULL);
    z ^= z >> 29;
    z *= 0x9e3779b97f4a7c15ULL;
    z ^= z >> 32;
    return z;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Stream domains shared across the optimizer and distributed modules.
namespace rng_domain {
inline constexpr std::uint64_t kNoise = 1;
inline constexpr std::uint64_t kSampling = 2;
inline constexpr std::uint64_t kOutputSelect = 3;
inline constexpr std::uint64_t kShares = 4;
inline constexpr std::uint64_t kPartition = 5;
inline constexpr std::uint64_t kSynthetic = 6;
}  // namespace rng_domain

}  // namespace dpopt
