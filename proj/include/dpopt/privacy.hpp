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
#include <string>
#include <vector>

#include "dpopt/errors.hpp"

namespace dpopt {

// Target (epsilon, delta)-DP budget with the beta split between the RDP mass
// spent on mechanism events (beta * epsilon) and the conversion slack
// ((1 - beta) * epsilon).
struct PrivacyBudget {
  double epsilon = 1.0;
  double delta = 1e-5;
  double beta = 0.5;

  void validate() const {
    if (!(epsilon > 0.0)) throw InvalidInputError("epsilon must be > 0");
    if (!(delta > 0.0 && delta < 1.0))
      throw InvalidInputError("delta must be in (0,1)");
    if (!(beta > 0.0 && beta < 1.0))
      throw InvalidInputError("beta must be in (0,1)");
  }
};

enum class MechanismKind : std::uint8_t { kGaussian, kSubsampledGaussian };

struct RdpEvent {
  MechanismKind kind;
  double rho;
};

// Accumulated Renyi divergence at a fixed order alpha. Composition is
// additive; conversion to (epsilon, delta)-DP adds log(1/delta)/(alpha - 1).
class RdpLedger {
 public:
  explicit RdpLedger(double alpha) : alpha_(alpha) {
    if (!(alpha > 1.0)) throw InvalidInputError("ledger alpha must be > 1");
  }

  double alpha() const { return alpha_; }
  double rho_total() const { return rho_total_; }
  const std::vector<RdpEvent>& events() const { return events_; }

  void compose(MechanismKind kind, double rho);
  double epsilon_at(double delta) const;

 private:
  double alpha_;
  double rho_total_ = 0.0;
  std::vector<RdpEvent> events_;
};

// RDP cost of the Gaussian mechanism: alpha * sensitivity^2 / (2 sigma^2).
double gaussian_rdp(double sensitivity, double sigma_sq, double alpha);

// RDP cost of the Gaussian mechanism applied to a uniform
// without-replacement subsample at rate tau: 5 tau^2 sensitivity^2 alpha
// / sigma^2, valid when sigma^2/sensitivity^2 >= 1.5 and
// alpha <= log(1/(tau (1 + sigma^2/sensitivity^2))). Violations raise
// InfeasiblePlanError naming the inequality with both sides.
double subsampled_gaussian_rdp(double sensitivity, double sigma_sq,
                               double alpha, double tau);

// (epsilon, delta)-DP from (alpha, rho)-RDP: rho + log(1/delta)/(alpha - 1).
double rdp_to_dp(double alpha, double rho, double delta);

// One recorded validity condition of a plan, with both sides numeric.
struct ConstraintCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool satisfied = false;
};

// Calibrated run plan. sigma1_sq covers the full-gradient checkpoints
// (sensitivity 2G/n), sigma2_sq the recursive steps (sensitivity 2 zeta / b
// amplified at rate tau = b/n); each event then costs exactly
// beta * epsilon / T at order alpha, so the T-event ledger converts to the
// full budget. The distributed variant substitutes n = parties * per_party_n
// and b = parties * per_party_batch into the same closed forms and keeps the
// validity conditions at the per-party scale.
struct NoisePlan {
  double sigma1_sq = 0.0;
  double sigma2_sq = 0.0;
  double alpha = 0.0;
  long long T = 0;
  double zeta = 0.0;
  long long l = 0;
  long long b = 0;
  PrivacyBudget budget;

  long long n = 0;
  double lipschitz_G = 0.0;
  double sens_checkpoint = 0.0;  // 2G/n
  double sens_inner = 0.0;       // 2 zeta / b
  double tau = 0.0;              // b / n
  double rho_checkpoint = 0.0;   // per-event RDP cost at alpha
  double rho_inner = 0.0;

  long long parties = 1;
  long long per_party_n = 0;
  long long per_party_batch = 0;

  std::vector<ConstraintCheck> checks;

  bool feasible() const {
    for (const auto& c : checks)
      if (!c.satisfied) return false;
    return true;
  }

  // Ledger-free plan for the non-private SPIDER reference path.
  static NoisePlan noiseless(long long n, long long b, long long l,
                             long long T, double zeta, double lipschitz_G);
};

struct CalibrationOptions {
  // When set, a violated amplification-validity condition raises
  // InfeasiblePlanError. When cleared the plan is returned with the violated
  // checks recorded (the benchmark harness runs this way; the closed-form
  // noise is applied and the ledger tracks the stated per-event costs).
  bool enforce_constraints = true;
};

// alpha = log(1/delta) / ((1 - beta) epsilon) + 1.
double rdp_order_for(const PrivacyBudget& budget);

// Noise calibration for T iterations with epoch length folded in later:
// sigma1^2 = 2 T G^2 alpha / (beta n^2 eps),
// sigma2^2 = 20 T zeta^2 alpha / (beta n^2 eps),
// with the two validity conditions recorded (and enforced per options).
NoisePlan calibrate(long long n, long long b, long long T, double lipschitz_G,
                    double zeta, const PrivacyBudget& budget,
                    const CalibrationOptions& options = {});

// Closed-form hyperparameter schedule: l = b = round(sqrt(n)),
// zeta^2 = G sqrt(d L D_F log(1/delta)) / (n eps),
// T = floor(4 n eps sqrt(L D_F) / (G sqrt(d log(1/delta)))), then calibrate.
NoisePlan plan_hyperparams(long long n, long long d, double lipschitz_G,
                           double smoothness_L, double loss_gap,
                           const PrivacyBudget& budget,
                           const CalibrationOptions& options = {});

// Distributed calibration: n := m * n_tilde, b := m * b_bar; conditions are
// checked at the per-party scale (n_tilde, b_bar).
NoisePlan calibrate_distributed(long long m, long long n_tilde,
                                long long b_bar, long long T,
                                double lipschitz_G, double zeta,
                                const PrivacyBudget& budget,
                                const CalibrationOptions& options = {});

// Distributed hyperparameters: l = round(sqrt(m n_tilde)),
// b_bar = round(sqrt(n_tilde / m)) (ties to even; 0 is invalid input),
// T = floor(4 m n_tilde eps sqrt(L D_F) / (G sqrt(d log(1/delta)))).
NoisePlan plan_distributed(long long m, long long n_tilde, long long d,
                           double lipschitz_G, double smoothness_L,
                           double loss_gap, const PrivacyBudget& budget,
                           const CalibrationOptions& options = {});

// Diagnostic only: best converted epsilon for the plan's event schedule over
// the order grid {1.5, 2, 3, ..., 128}, skipping orders whose subsampling
// conditions fail. Returns the plan-order conversion when no grid order is
// valid. The plan itself always uses the closed-form alpha.
double best_epsilon_on_grid(const NoisePlan& plan, double delta);

}  // namespace dpopt
