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

#include "dpopt/secure_agg.hpp"

#include <cmath>

#include "dpopt/errors.hpp"

namespace dpopt {
namespace {

// round(x * 2^f) as a ring element; |x * 2^f| must stay below 2^63.
std::uint64_t encode_scalar(double x, int frac_bits) {
  const double scaled = x * std::ldexp(1.0, frac_bits);
  if (!(std::abs(scaled) < 9.223372036854775808e18))
    throw FixedPointRangeError("fixed-point encode overflow");
  return static_cast<std::uint64_t>(static_cast<std::int64_t>(std::llround(scaled)));
}

double decode_scalar(std::uint64_t w, int frac_bits) {
  return std::ldexp(static_cast<double>(static_cast<std::int64_t>(w)),
                    -frac_bits);
}

}  // namespace

FixedPointVector encode_fixed(const Vector& v, int frac_bits) {
  if (frac_bits < 0 || frac_bits > 62)
    throw InvalidInputError("frac_bits must be in [0, 62]");
  FixedPointVector out;
  out.frac_bits = frac_bits;
  out.words.resize(static_cast<std::size_t>(v.size()));
  for (Index i = 0; i < v.size(); ++i)
    out.words[static_cast<std::size_t>(i)] = encode_scalar(v[i], frac_bits);
  return out;
}

Vector decode_fixed(const FixedPointVector& v) {
  Vector out(v.size());
  for (Index i = 0; i < v.size(); ++i)
    out[i] = decode_scalar(v.words[static_cast<std::size_t>(i)], v.frac_bits);
  return out;
}

std::vector<ShareVector> share(const FixedPointVector& v, int m,
                               CounterRng& rng) {
  if (m < 2) throw InvalidInputError("share: need at least 2 parties");
  std::vector<ShareVector> shares(static_cast<std::size_t>(m));
  std::vector<std::uint64_t> rest(v.words.size(), 0);
  for (int j = 0; j < m - 1; ++j) {
    shares[static_cast<std::size_t>(j)].party_id = j;
    auto& words = shares[static_cast<std::size_t>(j)].words;
    words.resize(v.words.size());
    for (std::size_t i = 0; i < v.words.size(); ++i) {
      words[i] = rng.next_u64();
      rest[i] += words[i];  // wraparound is the ring sum
    }
  }
  auto& last = shares[static_cast<std::size_t>(m - 1)];
  last.party_id = m - 1;
  last.words.resize(v.words.size());
  for (std::size_t i = 0; i < v.words.size(); ++i)
    last.words[i] = v.words[i] - rest[i];
  return shares;
}

FixedPointVector reconstruct(const std::vector<ShareVector>& shares,
                             int frac_bits) {
  if (shares.empty()) throw InvalidInputError("reconstruct: no shares");
  FixedPointVector out;
  out.frac_bits = frac_bits;
  out.words.assign(shares.front().words.size(), 0);
  for (const auto& s : shares) {
    if (s.words.size() != out.words.size())
      throw InvalidInputError("reconstruct: share length mismatch");
    for (std::size_t i = 0; i < out.words.size(); ++i) out.words[i] += s.words[i];
  }
  return out;
}

double ratio_of_uniforms_gaussian(CounterRng& rng) {
  return ratio_of_uniforms_gaussian_counted(rng, nullptr);
}

double ratio_of_uniforms_acceptance_rate() {
  return std::sqrt(M_PI * M_E) / 4.0;
}

double ratio_of_uniforms_gaussian_counted(CounterRng& rng,
                                          long long* proposals) {
  static const double kScale = std::sqrt(2.0 / M_E);
  for (;;) {
    const double u1 = rng.next_unit();
    const double u2 = rng.next_unit();
    if (proposals != nullptr) ++*proposals;
    const double x = (2.0 * u2 - 1.0) * kScale / u1;
    if (x * x <= -4.0 * std::log(u1)) return x;
  }
}

namespace detail {

Vector aggregate_encoded(const std::vector<std::uint64_t>& ring_total,
                         Index dim, int m, double sigma, int frac_bits,
                         CounterRng& rng) {
  // Noise is sampled inside the joint computation and pre-scaled by m so the
  // single division after decoding yields mean + sigma * z.
  std::vector<std::uint64_t> words = ring_total;
  if (sigma > 0.0) {
    for (Index i = 0; i < dim; ++i) {
      CounterRng lane = rng.fork(static_cast<std::uint64_t>(i));
      const double z = ratio_of_uniforms_gaussian(lane);
      words[static_cast<std::size_t>(i)] +=
          encode_scalar(static_cast<double>(m) * sigma * z, frac_bits);
    }
  }
  Vector out(dim);
  for (Index i = 0; i < dim; ++i)
    out[i] = decode_scalar(words[static_cast<std::size_t>(i)], frac_bits) /
             static_cast<double>(m);
  return out;
}

}  // namespace detail

Vector secure_aggregate(const std::vector<Vector>& party_vectors, double sigma,
                        int frac_bits, CounterRng& rng) {
  if (party_vectors.size() < 2)
    throw InvalidInputError("secure_aggregate: need at least 2 parties");
  const Index dim = party_vectors.front().size();
  std::vector<std::uint64_t> total(static_cast<std::size_t>(dim), 0);
  for (const auto& v : party_vectors) {
    if (v.size() != dim)
      throw InvalidInputError("secure_aggregate: length mismatch");
    const FixedPointVector enc = encode_fixed(v, frac_bits);
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += enc.words[i];
  }
  return detail::aggregate_encoded(total, dim,
                                   static_cast<int>(party_vectors.size()),
                                   sigma, frac_bits, rng);
}

}  // namespace dpopt
