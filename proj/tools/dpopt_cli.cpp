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

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "dpopt/harness.hpp"

namespace {

constexpr int kExitInfeasible = 2;
constexpr int kExitParse = 3;
constexpr int kExitNumeric = 4;

void print_plan(const dpopt::NoisePlan& plan) {
  std::cout << "n = " << plan.n << "\nT = " << plan.T << "\nl = " << plan.l
            << "\nb = " << plan.b << "\nalpha = " << plan.alpha
            << "\nzeta = " << plan.zeta << "\nsigma1_sq = " << plan.sigma1_sq
            << "\nsigma2_sq = " << plan.sigma2_sq
            << "\nrho_checkpoint = " << plan.rho_checkpoint
            << "\nrho_inner = " << plan.rho_inner << "\n";
  if (plan.parties > 1)
    std::cout << "parties = " << plan.parties
              << "\nper_party_n = " << plan.per_party_n
              << "\nper_party_batch = " << plan.per_party_batch << "\n";
  for (const auto& c : plan.checks)
    std::cout << "constraint \"" << c.name << "\": lhs " << c.lhs << ", rhs "
              << c.rhs << " -> " << (c.satisfied ? "satisfied" : "VIOLATED")
              << "\n";
}

dpopt::ModelParams read_theta(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw dpopt::ParseError("cannot open theta file " + path, 0, 0);
  std::vector<double> values;
  double v;
  while (in >> v) values.push_back(v);
  dpopt::ModelParams theta(static_cast<dpopt::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i)
    theta[static_cast<dpopt::Index>(i)] = values[i];
  return theta;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"differentially private nonconvex ERM toolkit"};
  app.require_subcommand(1);

  dpopt::ExperimentConfig cfg;
  std::string algo_name = "dp-srgd";
  std::vector<std::uint64_t> seeds;
  long long syn_n = 0, syn_d = 0;
  std::uint64_t syn_seed = 1;
  bool strict = false;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--dataset", cfg.dataset_path, "training file (sparse text)");
    cmd->add_option("--test-dataset", cfg.test_dataset_path, "test file");
    cmd->add_option("--dim", cfg.dim, "feature dimension (0 = infer)");
    cmd->add_option("--synthetic-n", syn_n, "synthetic example count");
    cmd->add_option("--synthetic-d", syn_d, "synthetic dimension");
    cmd->add_option("--synthetic-seed", syn_seed, "synthetic data seed");
    cmd->add_option("--epsilon", cfg.epsilon, "privacy budget epsilon");
    cmd->add_option("--delta", cfg.delta, "privacy budget delta");
    cmd->add_option("--beta", cfg.beta, "budget split beta");
    cmd->add_option("--clip", cfg.clip, "per-example clip threshold C");
    cmd->add_option("--lambda", cfg.lambda, "regularizer weight");
    cmd->add_option("--L", cfg.smoothness_override, "smoothness override");
    cmd->add_option("--DF", cfg.loss_gap_override, "loss-gap override");
    cmd->add_option("--T", cfg.T_override, "iteration override");
    cmd->add_option("--l", cfg.l_override, "epoch length override");
    cmd->add_option("--b", cfg.b_override, "batch size override");
    cmd->add_option("--step-factor", cfg.step_factor, "step tuning factor");
    cmd->add_option("--trace-every", cfg.trace_every, "trace row stride");
    cmd->add_option("--seeds", seeds, "run seeds");
    cmd->add_option("--out", cfg.out_dir, "output directory");
    cmd->add_option("--parties", cfg.parties, "party count");
    cmd->add_option("--frac-bits", cfg.frac_bits, "fixed-point precision");
    cmd->add_flag("--scale-max-norm", cfg.scale_max_norm,
                  "rescale features to unit max norm");
    cmd->add_flag("--strict", strict, "fail on violated plan constraints");
    cmd->add_flag("--sequential-split", cfg.sequential_split,
                  "order-preserving party split");
  };

  auto* cal = app.add_subcommand("calibrate", "print the noise plan");
  add_common(cal);
  bool grid = false;
  cal->add_flag("--diagnose-grid", grid, "report best epsilon over an order grid");

  auto* train = app.add_subcommand("train", "centralized run");
  add_common(train);
  train->add_option("--algo", algo_name, "dp-srgd|dp-gd|dp-sgd|spider");

  auto* train_dist = app.add_subcommand("train-dist", "multi-party run");
  add_common(train_dist);

  auto* account = app.add_subcommand("account", "ledger math from flags");
  double acc_sens = 1.0, acc_sigma_sq = 1.0, acc_alpha = 2.0, acc_tau = 0.0,
         acc_delta = 1e-5;
  long long acc_count = 1;
  account->add_option("--sensitivity", acc_sens, "query sensitivity")->required();
  account->add_option("--sigma-sq", acc_sigma_sq, "noise variance")->required();
  account->add_option("--alpha", acc_alpha, "RDP order")->required();
  account->add_option("--tau", acc_tau, "subsample rate (0 = none)");
  account->add_option("--count", acc_count, "number of composed events");
  account->add_option("--delta", acc_delta, "conversion delta");

  auto* gen = app.add_subcommand("gen-data", "write a synthetic dataset");
  std::string gen_out;
  gen->add_option("--n", syn_n, "example count")->required();
  gen->add_option("--d", syn_d, "dimension")->required();
  gen->add_option("--seed", syn_seed, "seed");
  gen->add_option("--out", gen_out, "output path")->required();

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a theta file");
  std::string theta_path;
  eval_cmd->add_option("--theta", theta_path, "theta file")->required();
  eval_cmd->add_option("--dataset", cfg.dataset_path, "test file")->required();
  eval_cmd->add_option("--dim", cfg.dim, "feature dimension (0 = infer)");

  CLI11_PARSE(app, argc, argv);

  try {
    cfg.enforce_constraints = strict;
    if (!seeds.empty()) cfg.seeds = seeds;
    if (syn_n > 0)
      cfg.synthetic = dpopt::SyntheticSpec{static_cast<dpopt::Index>(syn_n),
                                           static_cast<dpopt::Index>(syn_d),
                                           syn_seed};

    if (cal->parsed()) {
      dpopt::Dataset data =
          cfg.synthetic ? dpopt::gen_synthetic(cfg.synthetic->n,
                                               cfg.synthetic->d,
                                               cfg.synthetic->seed)
                        : dpopt::load_libsvm(cfg.dataset_path, cfg.dim);
      if (cfg.scale_max_norm) data.scale_to_unit_max_norm();
      const double L = cfg.smoothness_override > 0.0
                           ? cfg.smoothness_override
                           : dpopt::smoothness_bound(data, cfg.lambda);
      const double gap =
          cfg.loss_gap_override > 0.0
              ? cfg.loss_gap_override
              : dpopt::loss_value(dpopt::ModelParams::Zero(data.dim()), data,
                                  cfg.lambda);
      dpopt::PrivacyBudget budget{cfg.epsilon, cfg.delta, cfg.beta};
      dpopt::CalibrationOptions opts{cfg.enforce_constraints};
      dpopt::NoisePlan plan;
      if (cfg.parties > 1) {
        plan = dpopt::plan_distributed(cfg.parties, data.n() / cfg.parties,
                                       data.dim(), cfg.clip, L, gap, budget,
                                       opts);
      } else {
        plan = dpopt::plan_hyperparams(data.n(), data.dim(), cfg.clip, L, gap,
                                       budget, opts);
      }
      print_plan(plan);
      if (grid)
        std::cout << "best_epsilon_on_grid = "
                  << dpopt::best_epsilon_on_grid(plan, cfg.delta) << "\n";
      if (!plan.feasible()) {
        std::cout << "plan INFEASIBLE under the stated validity conditions\n";
        return kExitInfeasible;
      }
      return 0;
    }

    if (train->parsed() || train_dist->parsed()) {
      cfg.algorithm = train_dist->parsed()
                          ? dpopt::Algorithm::kDdpSrgd
                          : dpopt::algorithm_from_name(algo_name);
      const dpopt::RunSummary summary = dpopt::run_experiment(cfg);
      std::cout << dpopt::format_summary(summary);
      for (const auto& r : summary.per_seed)
        if (r.failed) return kExitNumeric;
      return 0;
    }

    if (account->parsed()) {
      const double rho =
          acc_tau > 0.0
              ? dpopt::subsampled_gaussian_rdp(acc_sens, acc_sigma_sq,
                                               acc_alpha, acc_tau)
              : dpopt::gaussian_rdp(acc_sens, acc_sigma_sq, acc_alpha);
      dpopt::RdpLedger ledger(acc_alpha);
      for (long long i = 0; i < acc_count; ++i)
        ledger.compose(acc_tau > 0.0
                           ? dpopt::MechanismKind::kSubsampledGaussian
                           : dpopt::MechanismKind::kGaussian,
                       rho);
      std::cout << "rho_per_event = " << rho << "\n"
                << "rho_total = " << ledger.rho_total() << "\n"
                << "epsilon = " << ledger.epsilon_at(acc_delta) << "\n"
                << "delta = " << acc_delta << "\n";
      return 0;
    }

    if (gen->parsed()) {
      dpopt::save_libsvm(
          dpopt::gen_synthetic(static_cast<dpopt::Index>(syn_n),
                               static_cast<dpopt::Index>(syn_d), syn_seed),
          gen_out);
      std::cout << "wrote " << gen_out << "\n";
      return 0;
    }

    if (eval_cmd->parsed()) {
      const dpopt::Dataset data = dpopt::load_libsvm(cfg.dataset_path, cfg.dim);
      const dpopt::ModelParams theta = read_theta(theta_path);
      std::cout << "test_error = " << dpopt::evaluate(theta, data) << "\n";
      return 0;
    }
  } catch (const dpopt::InfeasiblePlanError& e) {
    std::cerr << e.what() << "\n";
    return kExitInfeasible;
  } catch (const dpopt::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitParse;
  } catch (const dpopt::FixedPointRangeError& e) {
    std::cerr << "range error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const dpopt::InvalidInputError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return 0;
}
