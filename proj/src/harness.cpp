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

#include "dpopt/harness.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace dpopt {
namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void append_plan(std::ostringstream& os, const NoisePlan& plan) {
  os << "[plan]\n";
  os << "n = " << plan.n << "\n";
  os << "T = " << plan.T << "\n";
  os << "l = " << plan.l << "\n";
  os << "b = " << plan.b << "\n";
  os << "alpha = " << fmt(plan.alpha) << "\n";
  os << "zeta = " << fmt(plan.zeta) << "\n";
  os << "sigma1_sq = " << fmt(plan.sigma1_sq) << "\n";
  os << "sigma2_sq = " << fmt(plan.sigma2_sq) << "\n";
  os << "rho_checkpoint = " << fmt(plan.rho_checkpoint) << "\n";
  os << "rho_inner = " << fmt(plan.rho_inner) << "\n";
  os << "epsilon = " << fmt(plan.budget.epsilon) << "\n";
  os << "delta = " << fmt(plan.budget.delta) << "\n";
  os << "beta = " << fmt(plan.budget.beta) << "\n";
  os << "parties = " << plan.parties << "\n";
  if (plan.parties > 1) {
    os << "per_party_n = " << plan.per_party_n << "\n";
    os << "per_party_batch = " << plan.per_party_batch << "\n";
  }
  for (const auto& c : plan.checks) {
    os << "constraint = \"" << c.name << "\" lhs " << fmt(c.lhs) << " rhs "
       << fmt(c.rhs) << " " << (c.satisfied ? "satisfied" : "VIOLATED")
       << "\n";
  }
}

}  // namespace

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "dp-srgd") return Algorithm::kDpSrgd;
  if (name == "ddp-srgd") return Algorithm::kDdpSrgd;
  if (name == "dp-gd") return Algorithm::kDpGd;
  if (name == "dp-sgd") return Algorithm::kDpSgd;
  if (name == "spider") return Algorithm::kSpider;
  throw InvalidInputError("unknown algorithm '" + name + "'");
}

std::string algorithm_name(Algorithm algo) {
  switch (algo) {
    case Algorithm::kDpSrgd: return "dp-srgd";
    case Algorithm::kDdpSrgd: return "ddp-srgd";
    case Algorithm::kDpGd: return "dp-gd";
    case Algorithm::kDpSgd: return "dp-sgd";
    case Algorithm::kSpider: return "spider";
  }
  return "unknown";
}

Dataset gen_synthetic(Index n, Index d, std::uint64_t seed) {
  if (n < 2 || d < 1) throw InvalidInputError("gen_synthetic: need n >= 2, d >= 1");
  CounterRng rng = CounterRng::seeded(seed, rng_domain::kSynthetic);
  // Class means at +/- mu with ||2 mu|| = 4 and unit noise: the classes are
  // well separated but overlap enough to exercise the loss.
  const double mu = 2.0 / std::sqrt(static_cast<double>(d));
  Matrix features(n, d);
  Vector labels(n);
  for (Index i = 0; i < n; ++i) {
    const double y = static_cast<double>(i % 2);
    labels[i] = y;
    CounterRng row = rng.fork(static_cast<std::uint64_t>(i));
    for (Index j = 0; j < d; ++j) {
      CounterRng lane = row.fork(static_cast<std::uint64_t>(j));
      features(i, j) = (y > 0.5 ? mu : -mu) + ratio_of_uniforms_gaussian(lane);
    }
  }
  return Dataset::create(std::move(features), std::move(labels));
}

double evaluate(const ModelParams& theta, const Dataset& test) {
  if (theta.size() != test.dim())
    throw InvalidInputError("evaluate: dimension mismatch");
  const Vector z = test.features() * theta;
  double wrong = 0.0;
  for (Index i = 0; i < test.n(); ++i) {
    const double predicted = z[i] >= 0.0 ? 1.0 : 0.0;  // ties to class 1
    if (predicted != test.labels()[i]) wrong += 1.0;
  }
  return wrong / static_cast<double>(test.n());
}

Aggregate aggregate_of(const std::vector<double>& values) {
  Aggregate a;
  if (values.empty()) return a;
  for (double v : values) a.mean += v;
  a.mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - a.mean) * (v - a.mean);
  a.stddev = std::sqrt(var / static_cast<double>(values.size()));
  return a;
}

void write_trace_csv(const RunTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# format_version=" << kTraceFormatVersion << "\n";
  out << "iter,data_passes,loss,grad_norm,vp_norm,eps_spent,wall_ms\n";
  for (const auto& r : trace.rows) {
    out << r.iter << ',' << fmt(r.data_passes) << ',' << fmt(r.loss) << ','
        << fmt(r.grad_norm) << ',' << fmt(r.vp_norm) << ',' << fmt(r.eps_spent)
        << ',' << fmt(r.wall_ms) << "\n";
  }
}

RunSummary run_experiment(const ExperimentConfig& config) {
  if (config.synthetic.has_value() == !config.dataset_path.empty())
    throw InvalidInputError("config: exactly one data source required");
  if (config.seeds.empty()) throw InvalidInputError("config: seeds nonempty");
  if (!(config.delta > 0.0 && config.delta < 1.0))
    throw InvalidInputError("config: delta in (0,1)");

  Dataset train = config.synthetic
                      ? gen_synthetic(config.synthetic->n, config.synthetic->d,
                                      config.synthetic->seed)
                      : load_libsvm(config.dataset_path, config.dim);
  if (config.scale_max_norm) train.scale_to_unit_max_norm();

  std::optional<Dataset> test;
  if (!config.test_dataset_path.empty()) {
    test = load_libsvm(config.test_dataset_path,
                       config.dim > 0 ? config.dim : train.dim());
    if (config.scale_max_norm) test->scale_to_unit_max_norm();
  }

  RunSummary summary;
  summary.config = config;
  summary.scaled_max_norm = config.scale_max_norm;

  const double L = config.smoothness_override > 0.0
                       ? config.smoothness_override
                       : smoothness_bound(train, config.lambda);
  const Objective obj = Objective::with_clip(config.clip, config.lambda, L);
  const double loss_gap =
      config.loss_gap_override > 0.0
          ? config.loss_gap_override
          : loss_value(ModelParams::Zero(train.dim()), train, config.lambda);
  summary.smoothness_L = L;
  summary.loss_gap = loss_gap;

  PrivacyBudget budget{config.epsilon, config.delta, config.beta};
  CalibrationOptions cal{config.enforce_constraints};

  // Resolve the plan (closed-form defaults, then overrides re-calibrated).
  NoisePlan plan;
  const bool distributed = config.algorithm == Algorithm::kDdpSrgd;
  std::vector<PartyState> parties;
  std::vector<Index> dropped;
  if (distributed) {
    if (config.parties < 1) throw InvalidInputError("config: parties >= 1");
    CounterRng prng = CounterRng::seeded(config.seeds.front(),
                                         rng_domain::kPartition);
    parties = config.sequential_split
                  ? sequential_partition(train, config.parties,
                                         config.seeds.front(), &dropped)
                  : partition(train, config.parties, prng, &dropped);
    summary.dropped_examples = static_cast<long long>(dropped.size());
    const long long n_tilde = parties.front().data.n();
    plan = plan_distributed(config.parties, n_tilde, train.dim(),
                            obj.lipschitz_G, L, loss_gap, budget, cal);
    if (config.b_override > 0 || config.T_override > 0 ||
        config.l_override > 0) {
      const long long b_bar =
          config.b_override > 0 ? config.b_override / config.parties
                                : plan.per_party_batch;
      plan = calibrate_distributed(
          config.parties, n_tilde, std::max<long long>(1, b_bar),
          config.T_override > 0 ? config.T_override : plan.T, obj.lipschitz_G,
          plan.zeta, budget, cal);
      plan.l = config.l_override > 0 ? config.l_override : plan.l;
    }
  } else {
    plan = plan_hyperparams(train.n(), train.dim(), obj.lipschitz_G, L,
                            loss_gap, budget, cal);
    if (config.b_override > 0 || config.T_override > 0 ||
        config.l_override > 0) {
      plan = calibrate(train.n(),
                       config.b_override > 0 ? config.b_override : plan.b,
                       config.T_override > 0 ? config.T_override : plan.T,
                       obj.lipschitz_G, plan.zeta, budget, cal);
      plan.l = config.l_override > 0 ? config.l_override : plan.l;
    }
  }
  summary.plan = plan;

  const long long dpgd_T = config.T_override > 0 ? config.T_override : 20;
  if (!config.out_dir.empty())
    std::filesystem::create_directories(config.out_dir);

  std::vector<double> errs, losses, grads, epss, passes, walls;
  for (std::uint64_t seed : config.seeds) {
    SeedResult r;
    r.seed = seed;
    try {
      RunOptions opts;
      opts.step_factor = config.step_factor;
      opts.trace_every = config.trace_every > 0
                             ? config.trace_every
                             : std::max<long long>(1, plan.T / 200);
      RunOutput run;
      switch (config.algorithm) {
        case Algorithm::kDpSrgd:
          run = dp_srgd(obj, train, plan, seed, opts);
          break;
        case Algorithm::kSpider:
          run = spider_reference(obj, train, plan, seed, opts);
          break;
        case Algorithm::kDpGd:
          opts.trace_every = config.trace_every > 0 ? config.trace_every : 1;
          run = dp_gd(obj, train, budget, dpgd_T, seed, opts);
          break;
        case Algorithm::kDpSgd:
          run = dp_sgd(obj, train, budget,
                       config.T_override > 0 ? config.T_override : plan.T,
                       config.b_override > 0 ? config.b_override : plan.b,
                       seed, opts);
          break;
        case Algorithm::kDdpSrgd:
          run = ddp_srgd(obj, parties, plan, seed, opts, config.frac_bits);
          break;
      }
      r.test_error = test ? evaluate(run.theta_out, *test) : 0.0;
      r.final_train_loss = run.trace.rows.empty()
                               ? loss_value(run.theta_last, train, obj.lambda)
                               : run.trace.rows.back().loss;
      r.final_grad_norm =
          run.trace.rows.empty() ? 0.0 : run.trace.rows.back().grad_norm;
      r.eps_spent = run.epsilon_spent;
      r.grad_evals = run.trace.grad_evals;
      r.data_passes = static_cast<double>(run.trace.grad_evals) /
                      static_cast<double>(plan.n);
      r.wall_ms = run.trace.rows.empty() ? 0.0 : run.trace.rows.back().wall_ms;
      r.output_index = run.output_index;
      summary.messages_total += run.trace.messages;
      summary.ring_words_total += run.trace.ring_words;

      if (!config.out_dir.empty()) {
        const std::string stem =
            config.out_dir + "/seed_" + std::to_string(seed);
        write_trace_csv(run.trace, stem + ".csv");
        std::ofstream theta_out(stem + "_theta.txt");
        theta_out.precision(17);
        for (Index i = 0; i < run.theta_out.size(); ++i)
          theta_out << run.theta_out[i] << "\n";
      }

      errs.push_back(r.test_error);
      losses.push_back(r.final_train_loss);
      grads.push_back(r.final_grad_norm);
      epss.push_back(r.eps_spent);
      passes.push_back(r.data_passes);
      walls.push_back(r.wall_ms);
    } catch (const std::exception& e) {
      r.failed = true;
      r.error = e.what();
    }
    summary.per_seed.push_back(std::move(r));
    // Flush partial results after every seed so a later failure keeps them.
    if (!config.out_dir.empty())
      write_summary(summary, config.out_dir + "/summary.txt");
  }

  summary.test_error = aggregate_of(errs);
  summary.final_train_loss = aggregate_of(losses);
  summary.final_grad_norm = aggregate_of(grads);
  summary.eps_spent = aggregate_of(epss);
  summary.data_passes = aggregate_of(passes);
  summary.wall_ms = aggregate_of(walls);
  if (!config.out_dir.empty())
    write_summary(summary, config.out_dir + "/summary.txt");
  return summary;
}

std::string format_summary(const RunSummary& summary) {
  std::ostringstream os;
  os << "format_version = " << summary.format_version << "\n";
  os << "[config]\n";
  os << "algorithm = " << algorithm_name(summary.config.algorithm) << "\n";
  if (summary.config.synthetic) {
    os << "synthetic = " << summary.config.synthetic->n << "x"
       << summary.config.synthetic->d << " seed "
       << summary.config.synthetic->seed << "\n";
  } else {
    os << "dataset = " << summary.config.dataset_path << "\n";
  }
  if (!summary.config.test_dataset_path.empty())
    os << "test_dataset = " << summary.config.test_dataset_path << "\n";
  os << "epsilon = " << fmt(summary.config.epsilon) << "\n";
  os << "delta = " << fmt(summary.config.delta) << "\n";
  os << "beta = " << fmt(summary.config.beta) << "\n";
  os << "clip = " << fmt(summary.config.clip) << "\n";
  os << "lambda = " << fmt(summary.config.lambda) << "\n";
  os << "step_factor = " << fmt(summary.config.step_factor) << "\n";
  os << "parties = " << summary.config.parties << "\n";
  os << "frac_bits = " << summary.config.frac_bits << "\n";
  os << "smoothness_L = " << fmt(summary.smoothness_L) << "\n";
  os << "loss_gap = " << fmt(summary.loss_gap) << "\n";
  os << "scaled_max_norm = " << (summary.scaled_max_norm ? 1 : 0) << "\n";
  os << "seeds =";
  for (auto s : summary.config.seeds) os << " " << s;
  os << "\n";
  append_plan(os, summary.plan);
  if (summary.dropped_examples > 0)
    os << "dropped_examples = " << summary.dropped_examples << "\n";
  if (summary.messages_total > 0) {
    os << "messages_total = " << summary.messages_total << "\n";
    os << "ring_words_total = " << summary.ring_words_total << "\n";
    const long long m = summary.plan.parties;
    os << "messages_per_iteration = " << m * (m - 1) + m << "\n";
  }
  for (const auto& r : summary.per_seed) {
    os << "[seed " << r.seed << "]\n";
    if (r.failed) {
      os << "failed = " << r.error << "\n";
      continue;
    }
    os << "test_error = " << fmt(r.test_error) << "\n";
    os << "final_train_loss = " << fmt(r.final_train_loss) << "\n";
    os << "final_grad_norm = " << fmt(r.final_grad_norm) << "\n";
    os << "eps_spent = " << fmt(r.eps_spent) << "\n";
    os << "grad_evals = " << r.grad_evals << "\n";
    os << "data_passes = " << fmt(r.data_passes) << "\n";
    os << "wall_ms = " << fmt(r.wall_ms) << "\n";
    os << "output_index = " << r.output_index << "\n";
  }
  os << "[aggregate]\n";
  const auto agg = [&](const char* name, const Aggregate& a) {
    os << name << "_mean = " << fmt(a.mean) << "\n";
    os << name << "_std = " << fmt(a.stddev) << "\n";
  };
  agg("test_error", summary.test_error);
  agg("final_train_loss", summary.final_train_loss);
  agg("final_grad_norm", summary.final_grad_norm);
  agg("eps_spent", summary.eps_spent);
  agg("data_passes", summary.data_passes);
  agg("wall_ms", summary.wall_ms);
  return os.str();
}

void write_summary(const RunSummary& summary, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << format_summary(summary);
}

std::vector<std::pair<std::string, std::string>> parse_summary_fields(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<std::pair<std::string, std::string>> fields;
  std::string line;
  std::string section;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.front() == '[') {
      section = line.substr(1, line.find(']') - 1);
      continue;
    }
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    fields.emplace_back(section.empty() ? line.substr(0, eq)
                                        : section + "." + line.substr(0, eq),
                        line.substr(eq + 3));
  }
  return fields;
}

}  // namespace dpopt
