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
#include <vector>

#include "dpopt/objectives.hpp"
#include "dpopt/rng.hpp"

namespace dpopt {

inline constexpr int kDefaultFracBits = 20;

// Real vector carried as 64-bit ring elements (two's complement, arithmetic
// mod 2^64) with frac_bits of fractional precision.
struct FixedPointVector {
  std::vector<std::uint64_t> words;
  int frac_bits = kDefaultFracBits;

  Index size() const { return static_cast<Index>(words.size()); }
};

// One additive share of a FixedPointVector; the ring sum of all m shares of a
// sharing equals the encoded input exactly.
struct ShareVector {
  int party_id = 0;
  std::vector<std::uint64_t> words;
};

// word_i = round(v_i * 2^f) in the ring. Inputs must satisfy
// |v_i| < 2^(63-f); violations raise FixedPointRangeError.
FixedPointVector encode_fixed(const Vector& v, int frac_bits);
Vector decode_fixed(const FixedPointVector& v);

// Splits v into m additive shares: the first m-1 are ring-uniform, the last
// is v minus their ring sum. m must be >= 2.
std::vector<ShareVector> share(const FixedPointVector& v, int m,
                               CounterRng& rng);
FixedPointVector reconstruct(const std::vector<ShareVector>& shares,
                             int frac_bits);

// Standard normal variate by the ratio-of-uniforms rejection method:
// x = (2 u2 - 1) sqrt(2/e) / u1, accepted iff x^2 <= -4 ln u1.
double ratio_of_uniforms_gaussian(CounterRng& rng);

// Expected acceptance rate of the sampler, sqrt(pi e)/4.
double ratio_of_uniforms_acceptance_rate();

// Instrumented variant for the acceptance-rate check: counts proposal pairs.
double ratio_of_uniforms_gaussian_counted(CounterRng& rng,
                                          long long* proposals);

// Ideal secure-aggregation functionality on the fixed-point carrier:
// releases (1/m) sum_j v_j + sigma * z with z drawn per coordinate by
// ratio_of_uniforms_gaussian from per-coordinate forks of rng. Only the
// perturbed aggregate leaves this function. m >= 2; equal lengths required.
Vector secure_aggregate(const std::vector<Vector>& party_vectors, double sigma,
                        int frac_bits, CounterRng& rng);

namespace detail {
// Shared fixed-point mean + in-circuit noise path; tolerates m == 1 so the
// distributed optimizer's single-party degenerate case matches the
// centralized iterates up to quantization. party sums are formed from the
// provided encoded words (already the ring total when shares were summed).
Vector aggregate_encoded(const std::vector<std::uint64_t>& ring_total,
                         Index dim, int m, double sigma, int frac_bits,
                         CounterRng& rng);
}  // namespace detail

}  // namespace dpopt
