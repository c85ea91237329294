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

#include "dpopt/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "dpopt/secure_agg.hpp"

namespace dpopt {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

ModelParams initial_theta(const RunOptions& options, Index dim) {
  if (options.theta0.size() == 0) return ModelParams::Zero(dim);
  if (options.theta0.size() != dim)
    throw InvalidInputError("theta0 dimension mismatch");
  return options.theta0;
}

struct LedgerState {
  RdpLedger ledger;
  PrivacyBudget budget;

  void charge(MechanismKind kind, double rho) {
    ledger.compose(kind, rho);
    const double eps = ledger.epsilon_at(budget.delta);
    if (eps > budget.epsilon + 1e-9)
      throw BudgetExceededError("privacy ledger exceeded the budget mid-run");
  }
  double epsilon() const { return ledger.epsilon_at(budget.delta); }
};

}  // namespace

namespace detail {

Vector gaussian_vector(const CounterRng& base, Index dim) {
  Vector z(dim);
  for (Index i = 0; i < dim; ++i) {
    CounterRng lane = base.fork(static_cast<std::uint64_t>(i));
    z[i] = ratio_of_uniforms_gaussian(lane);
  }
  return z;
}

void check_plan_runnable(const NoisePlan& plan, Index n) {
  if (plan.T < 1 || plan.l < 1 || plan.b < 1)
    throw InvalidInputError("plan: T, l, b must be >= 1");
  if (plan.n != n)
    throw InvalidInputError("plan was calibrated for a different dataset size");
  if (plan.b > n) throw InvalidInputError("plan: batch exceeds dataset");
  if (!(plan.zeta > 0.0)) throw InvalidInputError("plan: zeta must be > 0");
  if (plan.sigma1_sq < 0.0 || plan.sigma2_sq < 0.0)
    throw InvalidInputError("plan: negative noise variance");
}

}  // namespace detail

std::vector<Index> sample_without_replacement(Index n, Index b,
                                              CounterRng& rng) {
  if (n < 1 || b < 1 || b > n)
    throw InvalidInputError("sample_without_replacement: need 1 <= b <= n");
  std::vector<Index> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index k = 0; k < b; ++k) {
    const Index j =
        k + static_cast<Index>(rng.uniform_below(static_cast<std::uint64_t>(n - k)));
    std::swap(pool[static_cast<std::size_t>(k)], pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(b));
  return pool;
}

double step_size(double v_p_norm, double zeta, double smoothness_L) {
  if (!(smoothness_L > 0.0) || !(zeta > 0.0))
    throw InvalidInputError("step_size: L and zeta must be > 0");
  if (v_p_norm < 0.0) throw InvalidInputError("step_size: negative norm");
  const double cap = 1.0 / (2.0 * smoothness_L);
  if (v_p_norm == 0.0) return cap;
  return std::min(zeta / (smoothness_L * v_p_norm), cap);
}

long long gradient_complexity(long long T, long long l, long long b,
                              long long n) {
  if (T < 1 || l < 1 || b < 1 || n < 1)
    throw InvalidInputError("gradient_complexity: positive inputs required");
  return ((T + l - 1) / l) * n + T * b;
}

Index select_output(Index num_iterates, CounterRng& rng) {
  if (num_iterates < 1)
    throw InvalidInputError("select_output: need at least one iterate");
  return static_cast<Index>(
      rng.uniform_below(static_cast<std::uint64_t>(num_iterates)));
}

namespace {

RunOutput run_srgd_loop(const Objective& obj, const Dataset& data,
                        const NoisePlan& plan, std::uint64_t seed,
                        const RunOptions& options, bool with_noise) {
  detail::check_plan_runnable(plan, data.n());
  const Index n = data.n();
  const Index d = data.dim();
  const auto start = Clock::now();

  CounterRng noise_root = CounterRng::seeded(seed, rng_domain::kNoise);
  CounterRng sample_root = CounterRng::seeded(seed, rng_domain::kSampling);
  CounterRng out_rng = CounterRng::seeded(seed, rng_domain::kOutputSelect);

  std::vector<Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Index{0});

  const bool track_privacy =
      with_noise && (plan.sigma1_sq > 0.0 || plan.sigma2_sq > 0.0);
  LedgerState ledger{RdpLedger(plan.alpha), plan.budget};

  RunOutput out;
  out.plan = plan;
  out.output_index = select_output(static_cast<Index>(plan.T), out_rng);

  ModelParams theta = initial_theta(options, d);
  ModelParams theta_prev = theta;
  Vector vp = Vector::Zero(d);
  const double sigma1 = std::sqrt(plan.sigma1_sq);
  const double sigma2 = std::sqrt(plan.sigma2_sq);
  const double step_bound =
      options.step_factor * plan.zeta / obj.smoothness_L + 1e-12;

  for (long long t = 0; t < plan.T; ++t) {
    if (t == out.output_index) out.theta_out = theta;

    Vector v;
    if (t % plan.l == 0) {
      v = batch_clipped_grad(theta, data, all, obj);
      out.trace.grad_evals += n;
      if (with_noise && sigma1 > 0.0)
        v += sigma1 * detail::gaussian_vector(
                          noise_root.fork(static_cast<std::uint64_t>(t)), d);
      if (track_privacy)
        ledger.charge(MechanismKind::kGaussian, plan.rho_checkpoint);
    } else {
      CounterRng st = sample_root.fork(static_cast<std::uint64_t>(t));
      const auto batch =
          sample_without_replacement(n, static_cast<Index>(plan.b), st);
      v = batch_clipped_grad(theta, data, batch, obj) -
          batch_clipped_grad(theta_prev, data, batch, obj) + vp;
      if (with_noise && sigma2 > 0.0)
        v += sigma2 * detail::gaussian_vector(
                          noise_root.fork(static_cast<std::uint64_t>(t)), d);
      if (track_privacy)
        ledger.charge(MechanismKind::kSubsampledGaussian, plan.rho_inner);
    }
    out.trace.grad_evals += plan.b;
    vp = v;

    const double eta =
        options.step_factor * step_size(vp.norm(), plan.zeta, obj.smoothness_L);
    theta_prev = theta;
    theta -= eta * vp;

    const double step_norm = (theta - theta_prev).norm();
    out.trace.max_step_norm = std::max(out.trace.max_step_norm, step_norm);
    if (step_norm > step_bound)
      throw std::logic_error("step bound ||theta^{t+1}-theta^t|| <= zeta/L violated");

    if (t % options.trace_every == 0 || t + 1 == plan.T) {
      TraceRow row;
      row.iter = t;
      row.data_passes =
          static_cast<double>(out.trace.grad_evals) / static_cast<double>(n);
      row.loss = loss_value(theta, data, obj.lambda);
      row.grad_norm = full_gradient(theta, data, obj.lambda).norm();
      row.vp_norm = vp.norm();
      row.eps_spent = track_privacy ? ledger.epsilon() : 0.0;
      row.wall_ms = elapsed_ms(start);
      out.trace.rows.push_back(row);
    }
  }

  out.theta_last = theta;
  out.epsilon_spent = track_privacy ? ledger.epsilon() : 0.0;
  return out;
}

}  // namespace

RunOutput dp_srgd(const Objective& obj, const Dataset& data,
                  const NoisePlan& plan, std::uint64_t seed,
                  const RunOptions& options) {
  return run_srgd_loop(obj, data, plan, seed, options, /*with_noise=*/true);
}

RunOutput spider_reference(const Objective& obj, const Dataset& data,
                           const NoisePlan& plan, std::uint64_t seed,
                           const RunOptions& options) {
  return run_srgd_loop(obj, data, plan, seed, options, /*with_noise=*/false);
}

RunOutput dp_gd(const Objective& obj, const Dataset& data,
                const PrivacyBudget& budget, long long T, std::uint64_t seed,
                const RunOptions& options) {
  budget.validate();
  if (T < 1) throw InvalidInputError("dp_gd: T must be >= 1");
  const Index n = data.n();
  const Index d = data.dim();
  const auto start = Clock::now();

  NoisePlan plan;
  plan.budget = budget;
  plan.n = n;
  plan.b = n;
  plan.l = 1;
  plan.T = T;
  plan.lipschitz_G = obj.lipschitz_G;
  plan.alpha = rdp_order_for(budget);
  plan.sens_checkpoint = 2.0 * obj.lipschitz_G / static_cast<double>(n);
  plan.sigma1_sq = 2.0 * static_cast<double>(T) * obj.lipschitz_G *
                   obj.lipschitz_G * plan.alpha /
                   (budget.beta * static_cast<double>(n) *
                    static_cast<double>(n) * budget.epsilon);
  plan.rho_checkpoint =
      gaussian_rdp(plan.sens_checkpoint, plan.sigma1_sq, plan.alpha);

  CounterRng noise_root = CounterRng::seeded(seed, rng_domain::kNoise);
  CounterRng out_rng = CounterRng::seeded(seed, rng_domain::kOutputSelect);
  LedgerState ledger{RdpLedger(plan.alpha), budget};

  std::vector<Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Index{0});

  RunOutput out;
  out.plan = plan;
  out.output_index = select_output(static_cast<Index>(T), out_rng);

  ModelParams theta = initial_theta(options, d);
  const double eta = options.step_factor / (2.0 * obj.smoothness_L);
  const double sigma = std::sqrt(plan.sigma1_sq);

  for (long long t = 0; t < T; ++t) {
    if (t == out.output_index) out.theta_out = theta;
    Vector g = batch_clipped_grad(theta, data, all, obj);
    out.trace.grad_evals += n;
    g += sigma * detail::gaussian_vector(
                     noise_root.fork(static_cast<std::uint64_t>(t)), d);
    ledger.charge(MechanismKind::kGaussian, plan.rho_checkpoint);

    const ModelParams prev = theta;
    theta -= eta * g;
    out.trace.max_step_norm =
        std::max(out.trace.max_step_norm, (theta - prev).norm());

    if (t % options.trace_every == 0 || t + 1 == T) {
      TraceRow row;
      row.iter = t;
      row.data_passes =
          static_cast<double>(out.trace.grad_evals) / static_cast<double>(n);
      row.loss = loss_value(theta, data, obj.lambda);
      row.grad_norm = full_gradient(theta, data, obj.lambda).norm();
      row.vp_norm = g.norm();
      row.eps_spent = ledger.epsilon();
      row.wall_ms = elapsed_ms(start);
      out.trace.rows.push_back(row);
    }
  }
  out.theta_last = theta;
  out.epsilon_spent = ledger.epsilon();
  return out;
}

RunOutput dp_sgd(const Objective& obj, const Dataset& data,
                 const PrivacyBudget& budget, long long T, long long b,
                 std::uint64_t seed, const RunOptions& options) {
  budget.validate();
  const Index n = data.n();
  if (T < 1 || b < 1 || b > n) throw InvalidInputError("dp_sgd: need 1 <= b <= n, T >= 1");
  const Index d = data.dim();
  const auto start = Clock::now();

  const double alpha = rdp_order_for(budget);
  const double sens = 2.0 * obj.lipschitz_G / static_cast<double>(b);
  const double tau = static_cast<double>(b) / static_cast<double>(n);
  const bool subsampled = b < n;

  const auto rho_at = [&](double sigma_sq) {
    return subsampled ? 5.0 * tau * tau * sens * sens * alpha / sigma_sq
                      : alpha * sens * sens / (2.0 * sigma_sq);
  };
  const auto eps_at = [&](double sigma_sq) {
    return rdp_to_dp(alpha, static_cast<double>(T) * rho_at(sigma_sq),
                     budget.delta);
  };

  // eps is monotone decreasing in sigma^2; bracket around the closed form and
  // bisect, returning the high side so the ledger never exceeds the budget.
  const double closed_form =
      subsampled ? 5.0 * tau * tau * sens * sens * alpha *
                       static_cast<double>(T) / (budget.beta * budget.epsilon)
                 : alpha * sens * sens * static_cast<double>(T) /
                       (2.0 * budget.beta * budget.epsilon);
  double lo = closed_form / 4.0, hi = closed_form * 4.0;
  while (eps_at(hi) > budget.epsilon) hi *= 2.0;
  while (eps_at(lo) < budget.epsilon) lo /= 2.0;
  while (eps_at(lo) - eps_at(hi) > 1e-6) {
    const double mid = 0.5 * (lo + hi);
    (eps_at(mid) > budget.epsilon ? lo : hi) = mid;
  }
  const double sigma_sq = hi;

  NoisePlan plan;
  plan.budget = budget;
  plan.n = n;
  plan.b = b;
  plan.l = 1;
  plan.T = T;
  plan.alpha = alpha;
  plan.lipschitz_G = obj.lipschitz_G;
  plan.sens_inner = sens;
  plan.tau = tau;
  plan.sigma2_sq = sigma_sq;
  plan.rho_inner = rho_at(sigma_sq);
  if (subsampled) {
    const double sigma_prime_sq = sigma_sq / (sens * sens);
    plan.checks.push_back({"sigma^2/sensitivity^2 >= 1.5", sigma_prime_sq, 1.5,
                           sigma_prime_sq >= 1.5});
    const double bound = std::log(1.0 / (tau * (1.0 + sigma_prime_sq)));
    plan.checks.push_back(
        {"alpha <= log(1/(tau (1 + sigma^2/sensitivity^2)))", alpha, bound,
         alpha <= bound});
  }

  CounterRng noise_root = CounterRng::seeded(seed, rng_domain::kNoise);
  CounterRng sample_root = CounterRng::seeded(seed, rng_domain::kSampling);
  CounterRng out_rng = CounterRng::seeded(seed, rng_domain::kOutputSelect);
  LedgerState ledger{RdpLedger(alpha), budget};

  RunOutput out;
  out.plan = plan;
  out.output_index = select_output(static_cast<Index>(T), out_rng);

  ModelParams theta = initial_theta(options, d);
  const double eta = options.step_factor / (2.0 * obj.smoothness_L);
  const double sigma = std::sqrt(sigma_sq);

  for (long long t = 0; t < T; ++t) {
    if (t == out.output_index) out.theta_out = theta;
    CounterRng st = sample_root.fork(static_cast<std::uint64_t>(t));
    const auto batch = sample_without_replacement(n, static_cast<Index>(b), st);
    Vector g = batch_clipped_grad(theta, data, batch, obj);
    out.trace.grad_evals += b;
    g += sigma * detail::gaussian_vector(
                     noise_root.fork(static_cast<std::uint64_t>(t)), d);
    ledger.charge(subsampled ? MechanismKind::kSubsampledGaussian
                             : MechanismKind::kGaussian,
                  plan.rho_inner);

    const ModelParams prev = theta;
    theta -= eta * g;
    out.trace.max_step_norm =
        std::max(out.trace.max_step_norm, (theta - prev).norm());

    if (t % options.trace_every == 0 || t + 1 == T) {
      TraceRow row;
      row.iter = t;
      row.data_passes =
          static_cast<double>(out.trace.grad_evals) / static_cast<double>(n);
      row.loss = loss_value(theta, data, obj.lambda);
      row.grad_norm = full_gradient(theta, data, obj.lambda).norm();
      row.vp_norm = g.norm();
      row.eps_spent = ledger.epsilon();
      row.wall_ms = elapsed_ms(start);
      out.trace.rows.push_back(row);
    }
  }
  out.theta_last = theta;
  out.epsilon_spent = ledger.epsilon();
  return out;
}

}  // namespace dpopt
