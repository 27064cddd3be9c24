// Copyright 2026 The apg-control Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "apg/mpc.hpp"

#include <chrono>
#include <cmath>

namespace apg {

MpcSolver::MpcSolver(const System& system, MpcConfig config)
    : system_(system), config_(config) {
  if (config_.iterations < 0) throw ConfigError("mpc: iterations must be >= 0");
  if (config_.horizon < 1) throw ConfigError("mpc: horizon must be >= 1");
  logits_ = Tensor::zeros(config_.horizon * system_.action_dim());
}

void MpcSolver::reset() {
  logits_ = Tensor::zeros(config_.horizon * system_.action_dim());
  has_previous_ = false;
}

void MpcSolver::warm_start_from(const Tensor& logits) {
  if (logits.size() != config_.horizon * system_.action_dim())
    throw ShapeError("mpc: warm start plan has the wrong width");
  logits_ = logits;
  has_previous_ = true;
}

MpcSolver::Solution MpcSolver::solve(const RolloutSpec& spec, const Tensor& state,
                                     int t) {
  auto start = std::chrono::steady_clock::now();
  const int act = system_.action_dim();
  const int T = config_.horizon;

  std::vector<Tensor> refs = system_.reference_rows(spec, state, t, T);

  auto plan_cost = [&](const Tensor& plan) {
    Tape probe;
    Val u = probe.constant(plan);
    Val s = probe.constant(state);
    std::vector<Val> states, raws;
    for (int k = 0; k < T; ++k) {
      ScaledAction a =
          apply_scaling(probe, system_.action_scaling(), slice(u, k * act, act), 1);
      s = system_.step(probe, s, a.scaled);
      states.push_back(s);
      raws.push_back(a.raw);
    }
    return system_.horizon_loss(probe, states, raws, refs).scalar();
  };

  if (config_.warm_start && has_previous_) {
    // shift by one action, repeat the final one; fall back to the cold
    // plan when the stale shift scores worse
    Tensor shifted = logits_;
    for (int i = 0; i < (T - 1) * act; ++i) shifted[i] = logits_[i + act];
    for (int i = 0; i < act; ++i)
      shifted[(T - 1) * act + i] = logits_[(T - 1) * act + i];
    if (config_.iterations > 0) {
      Tensor cold = Tensor::zeros(T * act);
      logits_ = plan_cost(shifted) <= plan_cost(cold) ? std::move(shifted)
                                                      : std::move(cold);
    } else {
      logits_ = std::move(shifted);
    }
  } else if (!config_.warm_start) {
    logits_ = Tensor::zeros(T * act);
  }
  Tensor velocity = Tensor::zeros(T * act);
  Tensor best = logits_;
  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<Tensor> best_predicted;

  Tape tape;
  for (int iter = 0; iter <= config_.iterations; ++iter) {
    tape.clear();
    Val u = tape.variable(logits_);
    Val s = tape.constant(state);
    std::vector<Val> states, raws;
    for (int k = 0; k < T; ++k) {
      ScaledAction a =
          apply_scaling(tape, system_.action_scaling(), slice(u, k * act, act), 1);
      s = system_.step(tape, s, a.scaled);
      states.push_back(s);
      raws.push_back(a.raw);
    }
    Val cost = system_.horizon_loss(tape, states, raws, refs);
    double c = cost.scalar();
    if (!std::isfinite(c)) {
      if (iter == 0)
        throw NumericalError("mpc: non-finite cost at the warm start");
      logits_ = best;  // keep the last finite iterate
      break;
    }
    if (c < best_cost) {
      best_cost = c;
      best = logits_;
      best_predicted.clear();
      for (const Val& sv : states) best_predicted.push_back(sv.value());
    }
    if (iter == config_.iterations) break;

    Adjoints adj = tape.backward(cost);
    const Tensor& g = adj.of(u);
    const bool squashed =
        system_.action_scaling().kind != ActionScaling::Kind::kIdentity;
    for (int i = 0; i < velocity.size(); ++i) {
      velocity[i] = config_.momentum * velocity[i] + g[i];
      logits_[i] -= config_.step_size * velocity[i];
      if (squashed) {
        // projection keeps the squashing nonlinearity out of its
        // saturated (zero-gradient) region
        if (logits_[i] > 6.0) logits_[i] = 6.0;
        if (logits_[i] < -6.0) logits_[i] = -6.0;
      }
    }
  }

  logits_ = best;
  has_previous_ = true;

  Solution sol;
  sol.cost = best_cost;
  sol.predicted = std::move(best_predicted);
  // first action through the same squashing map
  Tape out_tape;
  ScaledAction first = apply_scaling(out_tape, system_.action_scaling(),
                                     out_tape.constant(Tensor::from(
                                         std::span<const double>(best.data.data(),
                                                                 static_cast<size_t>(act)))),
                                     1);
  sol.action = first.scaled.value();
  auto end = std::chrono::steady_clock::now();
  sol.solve_ms = std::chrono::duration<double, std::milli>(end - start).count();
  return sol;
}

Tensor MpcController::act(const System&, const RolloutSpec& spec,
                          const Tensor& state, int t, double* elapsed_ms) {
  MpcSolver::Solution sol = solver_.solve(spec, state, t);
  if (elapsed_ms != nullptr) *elapsed_ms = sol.solve_ms;
  return sol.action;
}

EvaluationReport mpc_evaluate(const System& system, const MpcConfig& config,
                              std::span<const RolloutSpec> specs,
                              const EvaluationOptions& opts, int threads) {
  return evaluate(
      system,
      [&]() { return std::make_unique<MpcController>(system, config); }, specs,
      opts, threads);
}

}  // namespace apg
