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

#include <vector>

#include "dpopt/objectives.hpp"
#include "dpopt/privacy.hpp"
#include "dpopt/rng.hpp"

namespace dpopt {

struct TraceRow {
  long long iter = 0;
  double data_passes = 0.0;
  double loss = 0.0;       // full training loss; non-private diagnostic
  double grad_norm = 0.0;  // ||grad F(theta)||_2; non-private diagnostic
  double vp_norm = 0.0;    // norm of the released private estimator
  double eps_spent = 0.0;
  double wall_ms = 0.0;
};

struct RunTrace {
  std::vector<TraceRow> rows;
  // Evaluation counter at the closed-form accounting rate: n per checkpoint
  // plus the minibatch size on every iteration.
  long long grad_evals = 0;
  double max_step_norm = 0.0;  // max ||theta^{t+1} - theta^t|| over the run
  long long messages = 0;      // aggregation messages (distributed runs)
  long long ring_words = 0;    // ring words transferred (distributed runs)
};

struct RunOutput {
  ModelParams theta_out;   // iterate chosen uniformly from theta^0..theta^{T-1}
  ModelParams theta_last;  // theta^T
  RunTrace trace;
  NoisePlan plan;
  long long output_index = 0;
  double epsilon_spent = 0.0;
};

struct RunOptions {
  ModelParams theta0;         // empty -> zeros(d)
  double step_factor = 1.0;   // multiplicative tuning factor on the step rule
  long long trace_every = 1;  // record a trace row every k iterations
};

// b distinct indices in [0, n), every size-b subset equiprobable
// (partial Fisher-Yates).
std::vector<Index> sample_without_replacement(Index n, Index b,
                                              CounterRng& rng);

// min(zeta / (L ||v_p||), 1/(2L)); the zero-estimator convention is 1/(2L).
double step_size(double v_p_norm, double zeta, double smoothness_L);

// ceil(T/l) * n + T * b.
long long gradient_complexity(long long T, long long l, long long b,
                              long long n);

// Uniform index in [0, num_iterates).
Index select_output(Index num_iterates, CounterRng& rng);

// Recursive variance-reduced private descent. Checkpoint iterations
// (t mod l == 0) release the clipped full gradient plus N(0, sigma1^2 I);
// the rest release the minibatch gradient difference added onto the previous
// release plus N(0, sigma2^2 I). The ledger composes one event per iteration
// and the output iterate is selected uniformly. A plan with zero noise runs
// the same loop non-privately (the SPIDER reference path).
RunOutput dp_srgd(const Objective& obj, const Dataset& data,
                  const NoisePlan& plan, std::uint64_t seed,
                  const RunOptions& options = {});

// Non-private SPIDER reference: the dp_srgd loop with the plan's noise
// stripped and no privacy accounting.
RunOutput spider_reference(const Objective& obj, const Dataset& data,
                           const NoisePlan& plan, std::uint64_t seed,
                           const RunOptions& options = {});

// Perturbed full-gradient descent baseline: constant step 1/(2L), noise
// calibrated so T Gaussian events of sensitivity 2G/n at the budget's order
// spend exactly beta * epsilon.
RunOutput dp_gd(const Objective& obj, const Dataset& data,
                const PrivacyBudget& budget, long long T, std::uint64_t seed,
                const RunOptions& options = {});

// Subsampled clipped minibatch gradient + Gaussian noise baseline; sigma is
// found by bisection so the T-event ledger converts to the full budget within
// 1e-6 (from below). b == n bypasses amplification (plain Gaussian events).
RunOutput dp_sgd(const Objective& obj, const Dataset& data,
                 const PrivacyBudget& budget, long long T, long long b,
                 std::uint64_t seed, const RunOptions& options = {});

namespace detail {
// z ~ N(0, I_dim) with one ratio-of-uniforms draw per per-coordinate fork of
// base; both the centralized and distributed paths consume this layout.
Vector gaussian_vector(const CounterRng& base, Index dim);

// Structural usability of a plan for a dataset of size n (the amplification
// condition flags ride along in plan.checks and do not gate the run).
void check_plan_runnable(const NoisePlan& plan, Index n);
}  // namespace detail

}  // namespace dpopt
