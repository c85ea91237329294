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

#include "dpopt/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dpopt {
namespace {

// Both validity conditions of the subsampled Gaussian bound, in terms of
// sigma_prime_sq = sigma^2 / sensitivity^2.
std::vector<ConstraintCheck> subsample_checks(double sigma_prime_sq,
                                              double alpha, double tau) {
  std::vector<ConstraintCheck> checks;
  checks.push_back({"sigma^2/sensitivity^2 >= 1.5", sigma_prime_sq, 1.5,
                    sigma_prime_sq >= 1.5});
  const double alpha_bound = std::log(1.0 / (tau * (1.0 + sigma_prime_sq)));
  checks.push_back({"alpha <= log(1/(tau (1 + sigma^2/sensitivity^2)))", alpha,
                    alpha_bound, alpha <= alpha_bound});
  return checks;
}

std::string describe_violations(const std::vector<ConstraintCheck>& checks) {
  std::ostringstream os;
  os << "infeasible plan:";
  bool first = true;
  for (const auto& c : checks) {
    if (c.satisfied) continue;
    if (!first) os << ";";
    first = false;
    os << " " << c.name << " violated (lhs " << c.lhs << ", rhs " << c.rhs
       << ")";
  }
  return os.str();
}

void enforce(const std::vector<ConstraintCheck>& checks) {
  for (const auto& c : checks)
    if (!c.satisfied) throw InfeasiblePlanError(describe_violations(checks));
}

long long round_ties_even(double x) {
  return static_cast<long long>(std::nearbyint(x));
}

}  // namespace

void RdpLedger::compose(MechanismKind kind, double rho) {
  if (rho < 0.0) throw InvalidInputError("compose: rho must be >= 0");
  rho_total_ += rho;
  events_.push_back({kind, rho});
}

double RdpLedger::epsilon_at(double delta) const {
  return rdp_to_dp(alpha_, rho_total_, delta);
}

double gaussian_rdp(double sensitivity, double sigma_sq, double alpha) {
  if (sensitivity < 0.0)
    throw InvalidInputError("gaussian_rdp: sensitivity must be >= 0");
  if (!(sigma_sq > 0.0))
    throw InvalidInputError("gaussian_rdp: sigma^2 must be > 0");
  if (!(alpha > 1.0)) throw InvalidInputError("gaussian_rdp: alpha must be > 1");
  return alpha * sensitivity * sensitivity / (2.0 * sigma_sq);
}

double subsampled_gaussian_rdp(double sensitivity, double sigma_sq,
                               double alpha, double tau) {
  if (!(sensitivity > 0.0))
    throw InvalidInputError("subsampled_gaussian_rdp: sensitivity must be > 0");
  if (!(sigma_sq > 0.0))
    throw InvalidInputError("subsampled_gaussian_rdp: sigma^2 must be > 0");
  if (!(alpha > 1.0))
    throw InvalidInputError("subsampled_gaussian_rdp: alpha must be > 1");
  if (!(tau > 0.0 && tau < 1.0))
    throw InvalidInputError("subsampled_gaussian_rdp: tau must be in (0,1)");
  const double sigma_prime_sq = sigma_sq / (sensitivity * sensitivity);
  enforce(subsample_checks(sigma_prime_sq, alpha, tau));
  return 5.0 * tau * tau * sensitivity * sensitivity * alpha / sigma_sq;
}

double rdp_to_dp(double alpha, double rho, double delta) {
  if (!(alpha > 1.0)) throw InvalidInputError("rdp_to_dp: alpha must be > 1");
  if (rho < 0.0) throw InvalidInputError("rdp_to_dp: rho must be >= 0");
  if (!(delta > 0.0 && delta < 1.0))
    throw InvalidInputError("rdp_to_dp: delta must be in (0,1)");
  return rho + std::log(1.0 / delta) / (alpha - 1.0);
}

NoisePlan NoisePlan::noiseless(long long n, long long b, long long l,
                               long long T, double zeta, double lipschitz_G) {
  NoisePlan plan;
  plan.n = n;
  plan.b = b;
  plan.l = l;
  plan.T = T;
  plan.zeta = zeta;
  plan.lipschitz_G = lipschitz_G;
  plan.alpha = 2.0;  // unused; keeps ledger construction valid
  return plan;
}

double rdp_order_for(const PrivacyBudget& budget) {
  budget.validate();
  return std::log(1.0 / budget.delta) /
             ((1.0 - budget.beta) * budget.epsilon) +
         1.0;
}

NoisePlan calibrate(long long n, long long b, long long T, double lipschitz_G,
                    double zeta, const PrivacyBudget& budget,
                    const CalibrationOptions& options) {
  budget.validate();
  if (n < 1 || b < 1 || T < 1)
    throw InvalidInputError("calibrate: n, b, T must be >= 1");
  if (b > n) throw InvalidInputError("calibrate: b must be <= n");
  if (!(lipschitz_G > 0.0)) throw InvalidInputError("calibrate: G must be > 0");
  if (!(zeta > 0.0)) throw InvalidInputError("calibrate: zeta must be > 0");

  NoisePlan plan;
  plan.budget = budget;
  plan.n = n;
  plan.b = b;
  plan.l = std::min(b, T);  // epoch default; planners override (1 <= l <= T)
  plan.T = T;
  plan.zeta = zeta;
  plan.lipschitz_G = lipschitz_G;
  plan.alpha = rdp_order_for(budget);

  const double nn = static_cast<double>(n);
  const double tt = static_cast<double>(T);
  const double denom = budget.beta * nn * nn * budget.epsilon;
  plan.sigma1_sq = 2.0 * tt * lipschitz_G * lipschitz_G * plan.alpha / denom;
  plan.sigma2_sq = 20.0 * tt * zeta * zeta * plan.alpha / denom;

  plan.sens_checkpoint = 2.0 * lipschitz_G / nn;
  plan.sens_inner = 2.0 * zeta / static_cast<double>(b);
  plan.tau = static_cast<double>(b) / nn;
  plan.rho_checkpoint =
      gaussian_rdp(plan.sens_checkpoint, plan.sigma1_sq, plan.alpha);
  // 5 tau^2 sens^2 alpha / sigma2^2; equals beta*eps/T by construction.
  plan.rho_inner = 5.0 * plan.tau * plan.tau * plan.sens_inner *
                   plan.sens_inner * plan.alpha / plan.sigma2_sq;

  const double sigma_prime_sq =
      plan.sigma2_sq / (plan.sens_inner * plan.sens_inner);
  plan.checks = subsample_checks(sigma_prime_sq, plan.alpha, plan.tau);
  if (options.enforce_constraints) enforce(plan.checks);
  return plan;
}

NoisePlan plan_hyperparams(long long n, long long d, double lipschitz_G,
                           double smoothness_L, double loss_gap,
                           const PrivacyBudget& budget,
                           const CalibrationOptions& options) {
  budget.validate();
  if (n < 1 || d < 1) throw InvalidInputError("plan_hyperparams: n, d >= 1");
  if (!(lipschitz_G > 0.0 && smoothness_L > 0.0 && loss_gap > 0.0))
    throw InvalidInputError("plan_hyperparams: G, L, D_F must be > 0");

  const long long lb = round_ties_even(std::sqrt(static_cast<double>(n)));
  const double log_inv_delta = std::log(1.0 / budget.delta);
  const double zeta_sq =
      lipschitz_G *
      std::sqrt(static_cast<double>(d) * smoothness_L * loss_gap *
                log_inv_delta) /
      (static_cast<double>(n) * budget.epsilon);
  const double t_real = 4.0 * static_cast<double>(n) * budget.epsilon *
                        std::sqrt(smoothness_L * loss_gap) /
                        (lipschitz_G *
                         std::sqrt(static_cast<double>(d) * log_inv_delta));
  const long long T = std::max<long long>(1, static_cast<long long>(t_real));

  NoisePlan plan = calibrate(n, std::max<long long>(1, lb), T, lipschitz_G,
                             std::sqrt(zeta_sq), budget, options);
  plan.l = std::clamp<long long>(lb, 1, T);
  return plan;
}

NoisePlan calibrate_distributed(long long m, long long n_tilde,
                                long long b_bar, long long T,
                                double lipschitz_G, double zeta,
                                const PrivacyBudget& budget,
                                const CalibrationOptions& options) {
  budget.validate();
  if (m < 1) throw InvalidInputError("calibrate_distributed: m must be >= 1");
  if (n_tilde < 1 || b_bar < 1 || T < 1)
    throw InvalidInputError("calibrate_distributed: n_tilde, b_bar, T >= 1");
  if (b_bar > n_tilde)
    throw InvalidInputError("calibrate_distributed: b_bar must be <= n_tilde");

  // Combined-scale noise (replace n with m * n_tilde), per-party-scale checks.
  CalibrationOptions relaxed = options;
  relaxed.enforce_constraints = false;
  NoisePlan plan = calibrate(m * n_tilde, m * b_bar, T, lipschitz_G, zeta,
                             budget, relaxed);
  plan.parties = m;
  plan.per_party_n = n_tilde;
  plan.per_party_batch = b_bar;

  const double sigma_prime_sq = 5.0 * static_cast<double>(b_bar * b_bar) *
                                static_cast<double>(T) * plan.alpha /
                                (budget.beta * static_cast<double>(n_tilde) *
                                 static_cast<double>(n_tilde) *
                                 budget.epsilon);
  plan.checks = subsample_checks(sigma_prime_sq, plan.alpha,
                                 static_cast<double>(b_bar) /
                                     static_cast<double>(n_tilde));
  if (options.enforce_constraints) enforce(plan.checks);
  return plan;
}

NoisePlan plan_distributed(long long m, long long n_tilde, long long d,
                           double lipschitz_G, double smoothness_L,
                           double loss_gap, const PrivacyBudget& budget,
                           const CalibrationOptions& options) {
  budget.validate();
  if (m < 1 || n_tilde < 1 || d < 1)
    throw InvalidInputError("plan_distributed: m, n_tilde, d >= 1");
  if (!(lipschitz_G > 0.0 && smoothness_L > 0.0 && loss_gap > 0.0))
    throw InvalidInputError("plan_distributed: G, L, D_F must be > 0");

  const double total = static_cast<double>(m) * static_cast<double>(n_tilde);
  const long long l = round_ties_even(std::sqrt(total));
  const long long b_bar = round_ties_even(
      std::sqrt(static_cast<double>(n_tilde) / static_cast<double>(m)));
  if (b_bar < 1)
    throw InvalidInputError(
        "plan_distributed: per-party batch rounds to 0 (m too large for "
        "n_tilde)");

  const double log_inv_delta = std::log(1.0 / budget.delta);
  const double zeta_sq =
      lipschitz_G *
      std::sqrt(static_cast<double>(d) * smoothness_L * loss_gap *
                log_inv_delta) /
      (total * budget.epsilon);
  const double t_real =
      4.0 * total * budget.epsilon * std::sqrt(smoothness_L * loss_gap) /
      (lipschitz_G * std::sqrt(static_cast<double>(d) * log_inv_delta));
  const long long T = std::max<long long>(1, static_cast<long long>(t_real));

  NoisePlan plan = calibrate_distributed(m, n_tilde, b_bar, T, lipschitz_G,
                                         std::sqrt(zeta_sq), budget, options);
  plan.l = std::clamp<long long>(l, 1, T);
  return plan;
}

double best_epsilon_on_grid(const NoisePlan& plan, double delta) {
  const long long checkpoints = (plan.T + plan.l - 1) / plan.l;
  const long long inner = plan.T - checkpoints;
  double best = rdp_to_dp(plan.alpha, checkpoints * plan.rho_checkpoint +
                                          inner * plan.rho_inner,
                          delta);
  const double sigma_prime_sq =
      plan.sigma2_sq / (plan.sens_inner * plan.sens_inner);
  const double check_tau =
      plan.parties > 1 ? static_cast<double>(plan.per_party_batch) /
                             static_cast<double>(plan.per_party_n)
                       : plan.tau;
  for (double alpha = 1.5; alpha <= 128.0;
       alpha = (alpha == 1.5 ? 2.0 : alpha + 1.0)) {
    const auto checks = subsample_checks(sigma_prime_sq, alpha, check_tau);
    bool ok = true;
    for (const auto& c : checks) ok = ok && c.satisfied;
    if (!ok) continue;
    const double rho0 =
        gaussian_rdp(plan.sens_checkpoint, plan.sigma1_sq, alpha);
    const double rho1 = 5.0 * plan.tau * plan.tau * plan.sens_inner *
                        plan.sens_inner * alpha / plan.sigma2_sq;
    best = std::min(
        best, rdp_to_dp(alpha, checkpoints * rho0 + inner * rho1, delta));
  }
  return best;
}

}  // namespace dpopt
