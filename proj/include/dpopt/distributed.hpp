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

#include <utility>
#include <vector>

#include "dpopt/optimizer.hpp"
#include "dpopt/secure_agg.hpp"

namespace dpopt {

struct PartyState {
  int party_id = 0;
  Dataset data;
  std::uint64_t share_stream_key = 0;  // per-party randomness for sharing
};

// Per-party local index sets of one joint draw; sizes sum to m * b_bar.
struct JointSample {
  std::vector<std::vector<Index>> per_party;
  long long total = 0;
};

// Random disjoint split into m parties of floor(n/m) examples each; the
// remainder indices are dropped and reported via dropped (may be null).
// m > n is invalid input.
std::vector<PartyState> partition(const Dataset& data, int m, CounterRng& rng,
                                  std::vector<Index>* dropped = nullptr);

// Order-preserving split (party j holds rows [j*n_tilde, (j+1)*n_tilde)).
// Used by the distributed==centralized equivalence harness, where global
// index k must address the same example in both runs.
std::vector<PartyState> sequential_partition(const Dataset& data, int m,
                                             std::uint64_t seed,
                                             std::vector<Index>* dropped = nullptr);

// Uniformly samples m * b_bar distinct indices from the combined index set
// and routes each to its owning party. Every size-(m b_bar) subset is
// equiprobable; realized per-party counts vary.
JointSample joint_sample(const std::vector<PartyState>& parties, Index b_bar,
                         CounterRng& rng);

// Multi-party DP-SRGD over an additive-sharing simulation of the aggregation
// circuit. Checkpoints aggregate per-party clipped full gradients; inner
// steps aggregate per-party sums of clipped gradient differences over a
// joint without-replacement draw; Gaussian noise is generated inside the
// aggregation on the fixed-point carrier. Update rule, output selection,
// ledger and streams mirror dp_srgd, so a matched-seed centralized run
// differs only by fixed-point quantization.
RunOutput ddp_srgd(const Objective& obj, const std::vector<PartyState>& parties,
                   const NoisePlan& plan, std::uint64_t seed,
                   const RunOptions& options = {},
                   int frac_bits = kDefaultFracBits);

// Converted (epsilon, delta) of the T-event distributed ledger with
// sensitivities 2G/(m n_tilde) and 2 zeta/(m b_bar) at rate tau = b_bar/n_tilde.
std::pair<double, double> trace_privacy_distributed(const NoisePlan& plan,
                                                    long long T);

}  // namespace dpopt
