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

#include <optional>
#include <string>
#include <vector>

#include "dpopt/distributed.hpp"
#include "dpopt/io.hpp"
#include "dpopt/optimizer.hpp"

namespace dpopt {

inline constexpr int kTraceFormatVersion = 1;
inline constexpr int kSummaryFormatVersion = 1;

enum class Algorithm { kDpSrgd, kDdpSrgd, kDpGd, kDpSgd, kSpider };

Algorithm algorithm_from_name(const std::string& name);
std::string algorithm_name(Algorithm algo);

struct SyntheticSpec {
  Index n = 0;
  Index d = 0;
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  std::string dataset_path;
  std::string test_dataset_path;
  std::optional<SyntheticSpec> synthetic;  // exactly one data source
  Index dim = 0;                           // 0 -> infer from the train file

  Algorithm algorithm = Algorithm::kDpSrgd;
  double epsilon = 0.5;
  double delta = 1e-5;
  double beta = 0.5;
  double clip = 1.0;
  double lambda = 0.001;
  double smoothness_override = 0.0;  // 0 -> smoothness_bound(data, lambda)
  double loss_gap_override = 0.0;    // 0 -> F(theta0) on the training set
  long long T_override = 0;
  long long l_override = 0;
  long long b_override = 0;
  int parties = 1;
  int frac_bits = kDefaultFracBits;
  double step_factor = 1.0;
  long long trace_every = 0;  // 0 -> max(1, T/200)
  bool scale_max_norm = false;
  bool enforce_constraints = false;  // benchmark default: record, don't gate
  bool sequential_split = false;     // order-preserving party split

  std::vector<std::uint64_t> seeds = {1};
  std::string out_dir;  // empty -> no files written
};

struct SeedResult {
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  double test_error = 0.0;
  double final_train_loss = 0.0;
  double final_grad_norm = 0.0;
  double eps_spent = 0.0;
  long long grad_evals = 0;
  double data_passes = 0.0;
  double wall_ms = 0.0;
  long long output_index = 0;
};

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;  // population
};

struct RunSummary {
  int format_version = kSummaryFormatVersion;
  ExperimentConfig config;
  NoisePlan plan;
  std::vector<SeedResult> per_seed;
  Aggregate test_error, final_train_loss, final_grad_norm, eps_spent,
      data_passes, wall_ms;
  long long messages_total = 0;
  long long ring_words_total = 0;
  long long dropped_examples = 0;
  double smoothness_L = 0.0;
  double loss_gap = 0.0;
  bool scaled_max_norm = false;
};

// Two separable Gaussian blobs, classes alternating by index; deterministic
// under seed.
Dataset gen_synthetic(Index n, Index d, std::uint64_t seed);

// Fraction misclassified with sigmoid(x.theta) >= 0.5 -> class 1.
double evaluate(const ModelParams& theta, const Dataset& test);

Aggregate aggregate_of(const std::vector<double>& values);

// Resolves data and the plan from the config, runs every seed (a failing
// seed is recorded and does not abort the others), and, when out_dir is set,
// writes one trace CSV and one theta file per seed plus a structured-text
// summary. Deterministic per seed.
RunSummary run_experiment(const ExperimentConfig& config);

// Serialization of the summary document (format_version, config echo, plan,
// per-seed blocks, aggregates).
std::string format_summary(const RunSummary& summary);
void write_summary(const RunSummary& summary, const std::string& path);

// Reads back selected numeric fields of a summary document; used by tests to
// recompute aggregates from per-seed records.
std::vector<std::pair<std::string, std::string>> parse_summary_fields(
    const std::string& path);

void write_trace_csv(const RunTrace& trace, const std::string& path);

}  // namespace dpopt
