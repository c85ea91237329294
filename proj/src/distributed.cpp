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

#include "dpopt/distributed.hpp"

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

std::vector<PartyState> split_by_indices(const Dataset& data,
                                         const std::vector<Index>& order,
                                         int m, std::uint64_t share_seed,
                                         std::vector<Index>* dropped) {
  const Index n = data.n();
  const Index per_party = n / m;
  CounterRng share_root = CounterRng::seeded(share_seed, rng_domain::kShares);
  std::vector<PartyState> parties;
  parties.reserve(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    const auto begin = order.begin() + static_cast<std::ptrdiff_t>(j) * per_party;
    std::vector<Index> rows(begin, begin + per_party);
    PartyState p;
    p.party_id = j;
    p.data = data.subset(rows);
    p.share_stream_key =
        share_root.fork(static_cast<std::uint64_t>(j)).next_u64();
    parties.push_back(std::move(p));
  }
  if (dropped != nullptr)
    dropped->assign(order.begin() + static_cast<std::ptrdiff_t>(m) * per_party,
                    order.end());
  return parties;
}

// One round of the simulated aggregation: every party splits its encoded
// input into m additive shares, exchanges them, partial ring sums are formed
// per receiving party and folded in fixed party order. The fold equals the
// ring sum of the encoded inputs exactly, which is then noised and released.
Vector aggregate_round(const std::vector<Vector>& inputs, double sigma,
                       int frac_bits, CounterRng& noise_rng,
                       std::vector<CounterRng>& share_streams, RunTrace* trace) {
  const int m = static_cast<int>(inputs.size());
  const Index dim = inputs.front().size();
  std::vector<std::uint64_t> total(static_cast<std::size_t>(dim), 0);

  if (m == 1) {
    total = encode_fixed(inputs[0], frac_bits).words;
  } else {
    std::vector<std::vector<std::uint64_t>> received(
        static_cast<std::size_t>(m),
        std::vector<std::uint64_t>(static_cast<std::size_t>(dim), 0));
    for (int j = 0; j < m; ++j) {
      const FixedPointVector enc = encode_fixed(inputs[static_cast<std::size_t>(j)], frac_bits);
      const auto shares = share(enc, m, share_streams[static_cast<std::size_t>(j)]);
      for (int k = 0; k < m; ++k) {
        auto& sink = received[static_cast<std::size_t>(k)];
        const auto& words = shares[static_cast<std::size_t>(k)].words;
        for (std::size_t i = 0; i < sink.size(); ++i) sink[i] += words[i];
      }
    }
    for (int k = 0; k < m; ++k)
      for (std::size_t i = 0; i < total.size(); ++i)
        total[i] += received[static_cast<std::size_t>(k)][i];
    if (trace != nullptr) {
      // m(m-1) share transfers plus m partial-sum broadcasts, d words each.
      trace->messages += static_cast<long long>(m) * (m - 1) + m;
      trace->ring_words +=
          (static_cast<long long>(m) * (m - 1) + m) * static_cast<long long>(dim);
    }
  }
  return detail::aggregate_encoded(total, dim, m, sigma, frac_bits, noise_rng);
}

}  // namespace

std::vector<PartyState> partition(const Dataset& data, int m, CounterRng& rng,
                                  std::vector<Index>* dropped) {
  if (m < 1) throw InvalidInputError("partition: m must be >= 1");
  if (static_cast<Index>(m) > data.n())
    throw InvalidInputError("partition: more parties than examples");
  auto order = sample_without_replacement(data.n(), data.n(), rng);
  return split_by_indices(data, order, m, rng.next_u64(), dropped);
}

std::vector<PartyState> sequential_partition(const Dataset& data, int m,
                                             std::uint64_t seed,
                                             std::vector<Index>* dropped) {
  if (m < 1) throw InvalidInputError("partition: m must be >= 1");
  if (static_cast<Index>(m) > data.n())
    throw InvalidInputError("partition: more parties than examples");
  std::vector<Index> order(static_cast<std::size_t>(data.n()));
  std::iota(order.begin(), order.end(), Index{0});
  return split_by_indices(data, order, m, seed, dropped);
}

JointSample joint_sample(const std::vector<PartyState>& parties, Index b_bar,
                         CounterRng& rng) {
  if (parties.empty()) throw InvalidInputError("joint_sample: no parties");
  const Index m = static_cast<Index>(parties.size());
  const Index n_tilde = parties.front().data.n();
  for (const auto& p : parties)
    if (p.data.n() != n_tilde)
      throw InvalidInputError("joint_sample: parties must hold equal sizes");
  if (b_bar < 1 || m * b_bar > m * n_tilde)
    throw InvalidInputError("joint_sample: need 1 <= m*b_bar <= m*n_tilde");

  const auto global = sample_without_replacement(m * n_tilde, m * b_bar, rng);
  JointSample js;
  js.per_party.resize(static_cast<std::size_t>(m));
  js.total = static_cast<long long>(global.size());
  for (Index g : global)
    js.per_party[static_cast<std::size_t>(g / n_tilde)].push_back(g % n_tilde);
  return js;
}

RunOutput ddp_srgd(const Objective& obj, const std::vector<PartyState>& parties,
                   const NoisePlan& plan, std::uint64_t seed,
                   const RunOptions& options, int frac_bits) {
  if (parties.empty()) throw InvalidInputError("ddp_srgd: no parties");
  const int m = static_cast<int>(parties.size());
  const Index n_tilde = parties.front().data.n();
  const Index d = parties.front().data.dim();
  for (const auto& p : parties) {
    if (p.data.n() != n_tilde)
      throw InvalidInputError("ddp_srgd: parties must hold equal sizes");
    if (p.data.dim() != d)
      throw InvalidInputError("ddp_srgd: party dimension mismatch");
  }
  const Index n_total = static_cast<Index>(m) * n_tilde;
  detail::check_plan_runnable(plan, n_total);
  if (plan.parties > 1 && plan.parties != m)
    throw InvalidInputError("ddp_srgd: plan party count mismatch");
  if (plan.b % m != 0)
    throw InvalidInputError("ddp_srgd: plan batch not divisible across parties");
  const Index b_bar = static_cast<Index>(plan.b / m);
  const auto start = Clock::now();

  // Same stream layout as dp_srgd; matched seeds replay the centralized run.
  CounterRng noise_root = CounterRng::seeded(seed, rng_domain::kNoise);
  CounterRng sample_root = CounterRng::seeded(seed, rng_domain::kSampling);
  CounterRng out_rng = CounterRng::seeded(seed, rng_domain::kOutputSelect);
  std::vector<CounterRng> share_streams;
  share_streams.reserve(parties.size());
  for (const auto& p : parties) share_streams.emplace_back(p.share_stream_key);

  // Combined copy for the non-private loss/gradient diagnostics only.
  Matrix all_features(n_total, d);
  Vector all_labels(n_total);
  for (int j = 0; j < m; ++j) {
    all_features.middleRows(static_cast<Index>(j) * n_tilde, n_tilde) =
        parties[static_cast<std::size_t>(j)].data.features();
    all_labels.segment(static_cast<Index>(j) * n_tilde, n_tilde) =
        parties[static_cast<std::size_t>(j)].data.labels();
  }
  const Dataset combined = Dataset::create(std::move(all_features),
                                           std::move(all_labels));

  const bool track_privacy = plan.sigma1_sq > 0.0 || plan.sigma2_sq > 0.0;
  RdpLedger ledger(plan.alpha);
  const auto charge = [&](MechanismKind kind, double rho) {
    ledger.compose(kind, rho);
    if (ledger.epsilon_at(plan.budget.delta) > plan.budget.epsilon + 1e-9)
      throw BudgetExceededError("privacy ledger exceeded the budget mid-run");
  };

  std::vector<std::vector<Index>> all_local(static_cast<std::size_t>(m));
  for (auto& v : all_local) {
    v.resize(static_cast<std::size_t>(n_tilde));
    std::iota(v.begin(), v.end(), Index{0});
  }

  RunOutput out;
  out.plan = plan;
  out.output_index = select_output(static_cast<Index>(plan.T), out_rng);

  ModelParams theta =
      options.theta0.size() == 0 ? ModelParams::Zero(d) : options.theta0;
  if (theta.size() != d) throw InvalidInputError("theta0 dimension mismatch");
  ModelParams theta_prev = theta;
  Vector vp = Vector::Zero(d);
  const double sigma1 = std::sqrt(plan.sigma1_sq);
  const double sigma2 = std::sqrt(plan.sigma2_sq);
  const double step_bound =
      options.step_factor * plan.zeta / obj.smoothness_L + 1e-12;
  std::vector<Vector> inputs(static_cast<std::size_t>(m));

  for (long long t = 0; t < plan.T; ++t) {
    if (t == out.output_index) out.theta_out = theta;
    CounterRng noise_t = noise_root.fork(static_cast<std::uint64_t>(t));

    if (t % plan.l == 0) {
      // Local clipped full gradients; the release is their noised mean.
      for (int j = 0; j < m; ++j)
        inputs[static_cast<std::size_t>(j)] = batch_clipped_grad(
            theta, parties[static_cast<std::size_t>(j)].data,
            all_local[static_cast<std::size_t>(j)], obj);
      out.trace.grad_evals += n_total;
      vp = aggregate_round(inputs, sigma1, frac_bits, noise_t, share_streams,
                           &out.trace);
      if (track_privacy)
        charge(MechanismKind::kGaussian, plan.rho_checkpoint);
    } else {
      CounterRng st = sample_root.fork(static_cast<std::uint64_t>(t));
      const JointSample js = joint_sample(parties, b_bar, st);
      // Party j contributes its clipped-difference sum scaled by 1/b_bar, so
      // the aggregate mean equals (1/(m b_bar)) sum_j sum_{i in B_j} (...).
      for (int j = 0; j < m; ++j) {
        const auto& batch = js.per_party[static_cast<std::size_t>(j)];
        auto& u = inputs[static_cast<std::size_t>(j)];
        if (batch.empty()) {
          u = Vector::Zero(d);
        } else {
          const auto& local = parties[static_cast<std::size_t>(j)].data;
          u = (batch_clipped_grad(theta, local, batch, obj) -
               batch_clipped_grad(theta_prev, local, batch, obj)) *
              (static_cast<double>(batch.size()) / static_cast<double>(b_bar));
        }
      }
      const Vector released = aggregate_round(inputs, sigma2, frac_bits,
                                              noise_t, share_streams,
                                              &out.trace);
      vp = released + vp;
      if (track_privacy)
        charge(MechanismKind::kSubsampledGaussian, plan.rho_inner);
    }
    out.trace.grad_evals += plan.b;

    const double eta =
        options.step_factor * step_size(vp.norm(), plan.zeta, obj.smoothness_L);
    theta_prev = theta;
    theta -= eta * vp;

    const double step_norm = (theta - theta_prev).norm();
    out.trace.max_step_norm = std::max(out.trace.max_step_norm, step_norm);
    if (step_norm > step_bound)
      throw std::logic_error(
          "step bound ||theta^{t+1}-theta^t|| <= zeta/L violated");

    if (t % options.trace_every == 0 || t + 1 == plan.T) {
      TraceRow row;
      row.iter = t;
      row.data_passes = static_cast<double>(out.trace.grad_evals) /
                        static_cast<double>(n_total);
      row.loss = loss_value(theta, combined, obj.lambda);
      row.grad_norm = full_gradient(theta, combined, obj.lambda).norm();
      row.vp_norm = vp.norm();
      row.eps_spent =
          track_privacy ? ledger.epsilon_at(plan.budget.delta) : 0.0;
      row.wall_ms = elapsed_ms(start);
      out.trace.rows.push_back(row);
    }
  }

  out.theta_last = theta;
  out.epsilon_spent = track_privacy ? ledger.epsilon_at(plan.budget.delta) : 0.0;
  return out;
}

std::pair<double, double> trace_privacy_distributed(const NoisePlan& plan,
                                                    long long T) {
  if (plan.parties < 1 || plan.per_party_n < 1 || plan.per_party_batch < 1)
    throw InvalidInputError("trace_privacy_distributed: not a distributed plan");
  RdpLedger ledger(plan.alpha);
  const double m = static_cast<double>(plan.parties);
  const double n_tilde = static_cast<double>(plan.per_party_n);
  const double b_bar = static_cast<double>(plan.per_party_batch);
  const double sens0 = 2.0 * plan.lipschitz_G / (m * n_tilde);
  const double sens1 = 2.0 * plan.zeta / (m * b_bar);
  const double tau = b_bar / n_tilde;
  for (long long t = 0; t < T; ++t) {
    if (t % plan.l == 0) {
      ledger.compose(MechanismKind::kGaussian,
                     gaussian_rdp(sens0, plan.sigma1_sq, plan.alpha));
    } else {
      ledger.compose(MechanismKind::kSubsampledGaussian,
                     5.0 * tau * tau * sens1 * sens1 * plan.alpha /
                         plan.sigma2_sq);
    }
  }
  return {ledger.epsilon_at(plan.budget.delta), plan.budget.delta};
}

}  // namespace dpopt
