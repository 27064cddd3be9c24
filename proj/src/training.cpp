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

#include "apg/training.hpp"

#include <cmath>
#include <ostream>
#include <thread>

#include "apg/evaluation.hpp"
#include "apg/random.hpp"

namespace apg {

double clip_gradient(std::span<double> grad, double max_norm) {
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    double scale = max_norm / norm;
    for (double& g : grad) g *= scale;
  }
  return norm;
}

void sgd_step(std::vector<double>& params, std::span<const double> grad,
              const OptimizerConfig& cfg, OptimizerState& state) {
  if (grad.size() != params.size())
    throw ShapeError("sgd_step: gradient/parameter size mismatch");
  if (state.velocity.empty()) state.velocity.assign(params.size(), 0.0);
  if (state.velocity.size() != params.size())
    throw ShapeError("sgd_step: velocity buffer size mismatch");
  for (double g : grad)
    if (!std::isfinite(g))
      throw NumericalError("sgd_step: non-finite gradient, step skipped");
  for (size_t i = 0; i < params.size(); ++i) {
    state.velocity[i] = cfg.momentum * state.velocity[i] + grad[i];
    params[i] -= cfg.learning_rate * state.velocity[i];
  }
}

namespace {

struct PolicyInputs {
  Val obs;
  Val features;
};

PolicyInputs policy_inputs(Tape& tape, const System& system,
                           const PolicyNodes& policy, const RolloutSpec& spec,
                           Val state, int t) {
  PolicyInputs in;
  in.obs = system.observe(tape, state);
  if (policy.params->ref_rows > 0)
    in.features =
        system.reference_features(tape, spec, state, t, policy.params->ref_rows);
  return in;
}

}  // namespace

Unrolled unroll_concurrent(Tape& tape, const System& system,
                           const PolicyNodes& policy, const RolloutSpec& spec,
                           const Tensor& s0, int t, int horizon) {
  if (horizon != policy.params->horizon)
    throw ConfigError("unroll_concurrent: horizon does not match policy output count");
  const int act = system.action_dim();
  Unrolled u;
  Val state = tape.constant(s0);
  PolicyInputs in = policy_inputs(tape, system, policy, spec, state, t);
  PolicyOutput out = policy_forward(tape, policy, in.obs, in.features);
  for (int k = 0; k < horizon; ++k) {
    Val a_raw = slice(out.raw, k * act, act);
    Val a_scaled = slice(out.scaled, k * act, act);
    state = system.step(tape, state, a_scaled);
    u.states.push_back(state);
    u.actions_raw.push_back(a_raw);
    u.actions_scaled.push_back(a_scaled);
  }
  return u;
}

Unrolled unroll_recurrent(Tape& tape, const System& system,
                          const PolicyNodes& policy, const RolloutSpec& spec,
                          const Tensor& s0, int t, int horizon) {
  if (horizon != policy.params->horizon)
    throw ConfigError("unroll_recurrent: horizon does not match policy output count");
  const int act = system.action_dim();
  Unrolled u;
  Val state = tape.constant(s0);
  for (int k = 0; k < horizon; ++k) {
    PolicyInputs in = policy_inputs(tape, system, policy, spec, state, t + k);
    PolicyOutput out = policy_forward(tape, policy, in.obs, in.features);
    Val a_raw = slice(out.raw, 0, act);
    Val a_scaled = slice(out.scaled, 0, act);
    state = system.step(tape, state, a_scaled);
    u.states.push_back(state);
    u.actions_raw.push_back(a_raw);
    u.actions_scaled.push_back(a_scaled);
  }
  return u;
}

Val pair_loss(Tape& tape, const System& system, const PolicyNodes& policy,
              const RolloutSpec& spec, const Pair& pair,
              const HorizonConfig& horizon) {
  Unrolled u = horizon.mode == HorizonMode::kConcurrent
                   ? unroll_concurrent(tape, system, policy, spec, pair.state,
                                       pair.t, horizon.steps)
                   : unroll_recurrent(tape, system, policy, spec, pair.state,
                                      pair.t, horizon.steps);
  std::vector<Tensor> refs =
      system.reference_rows(spec, pair.state, pair.t, horizon.steps);
  return system.horizon_loss(tape, u.states, u.actions_raw, refs);
}

namespace {

// gradient of one pair in canonical flat order, finite-checked
void sample_gradient(Tape& tape, const System& system,
                     const PolicyParameters& policy,
                     std::span<const RolloutSpec> specs, const Pair& pair,
                     const HorizonConfig& horizon, std::vector<double>& grad_out,
                     double& loss_out) {
  tape.clear();
  PolicyNodes nodes = bind_policy(tape, policy, /*trainable=*/true);
  const RolloutSpec& spec = specs[static_cast<size_t>(pair.spec_index)];
  Val loss = pair_loss(tape, system, nodes, spec, pair, horizon);
  loss_out = loss.scalar();
  Adjoints adj = tape.backward(loss, /*check_finite=*/true);
  grad_out.clear();
  grad_out.reserve(policy.param_count());
  auto push = [&](const std::vector<DenseNodes>& layers) {
    for (const DenseNodes& l : layers) {
      for (double g : adj.of(l.weights).data) grad_out.push_back(g);
      for (double g : adj.of(l.bias).data) grad_out.push_back(g);
    }
  };
  push(nodes.state_branch);
  push(nodes.ref_branch);
  push(nodes.trunk);
}

}  // namespace

BatchGradient batch_gradient(const System& system, const PolicyParameters& policy,
                             std::span<const RolloutSpec> specs,
                             std::span<const Pair> pairs,
                             const HorizonConfig& horizon, int threads) {
  if (pairs.empty()) throw ConfigError("batch_gradient: empty batch");
  const size_t n = pairs.size();
  std::vector<std::vector<double>> grads(n);
  std::vector<double> losses(n, 0.0);
  std::exception_ptr failure;

  auto worker = [&](size_t begin, size_t end) {
    Tape tape;
    for (size_t i = begin; i < end; ++i) {
      try {
        sample_gradient(tape, system, policy, specs, pairs[i], horizon, grads[i],
                        losses[i]);
      } catch (...) {
        failure = std::current_exception();
        return;
      }
    }
  };

  if (threads <= 1 || n < 2) {
    worker(0, n);
  } else {
    size_t used = std::min<size_t>(static_cast<size_t>(threads), n);
    size_t chunk = (n + used - 1) / used;
    std::vector<std::thread> pool;
    for (size_t w = 0; w < used; ++w) {
      size_t begin = w * chunk, end = std::min(n, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(worker, begin, end);
    }
    for (std::thread& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  BatchGradient out;
  out.grad.assign(policy.param_count(), 0.0);
  const double inv = 1.0 / static_cast<double>(n);
  for (size_t i = 0; i < n; ++i) {  // fixed order keeps this deterministic
    for (size_t j = 0; j < out.grad.size(); ++j) out.grad[j] += grads[i][j];
    out.loss += losses[i];
  }
  for (double& g : out.grad) g *= inv;
  out.loss *= inv;
  return out;
}

// ---- training loop ------------------------------------------------------

std::vector<RolloutSpec> eval_specs_cartpole(const TrainOptions& options, int count,
                                             std::uint64_t seed) {
  RandomStream rng(seed);
  std::vector<RolloutSpec> specs(static_cast<size_t>(count));
  for (RolloutSpec& s : specs) {
    s.start_state = Tensor::vec(
        {0.0, 0.0, rng.uniform(-options.cp_eval_alpha, options.cp_eval_alpha), 0.0});
    s.max_steps = 200;  // 10 s balance window
  }
  return specs;
}

std::vector<RolloutSpec> eval_specs_fixedwing(const TrainOptions& options, int count,
                                              std::uint64_t seed) {
  RandomStream rng(seed);
  std::vector<RolloutSpec> specs(static_cast<size_t>(count));
  for (RolloutSpec& s : specs) {
    s.target = Tensor::vec(
        {options.fw_target_x,
         rng.uniform(-options.fw_target_span, options.fw_target_span),
         rng.uniform(-options.fw_target_span, options.fw_target_span)});
    s.max_steps = options.fw_max_steps;
  }
  return specs;
}

namespace {

struct EpochData {
  std::vector<ReferenceTrajectory> scaled;  // owns stage-scaled copies
  std::vector<RolloutSpec> specs;
};

EpochData collection_specs(const System& interact, const TrainOptions& options,
                           const TrajectorySet* trajectories, double stage,
                           RandomStream& rng) {
  EpochData data;
  switch (interact.kind()) {
    case SystemKind::kQuadrotor: {
      if (trajectories == nullptr || trajectories->train.empty())
        throw ConfigError("quadrotor training needs a trajectory set");
      data.scaled.reserve(static_cast<size_t>(options.rollouts_per_epoch));
      for (int i = 0; i < options.rollouts_per_epoch; ++i) {
        const ReferenceTrajectory& traj = trajectories->train[static_cast<size_t>(
            rng.integer(trajectories->train.size()))];
        data.scaled.push_back(scale_speed(traj, stage));
      }
      for (const ReferenceTrajectory& traj : data.scaled) {
        RolloutSpec spec;
        spec.trajectory = &traj;
        spec.max_steps = traj.length() - 1;
        data.specs.push_back(spec);
      }
      break;
    }
    case SystemKind::kCartPole: {
      for (int i = 0; i < options.rollouts_per_epoch; ++i) {
        RolloutSpec spec;
        spec.start_state =
            Tensor::vec({0.0, rng.uniform(-options.cp_start_rate, options.cp_start_rate),
                         rng.uniform(-options.cp_start_alpha, options.cp_start_alpha),
                         rng.uniform(-options.cp_start_rate, options.cp_start_rate)});
        spec.max_steps = options.collect_steps;
        data.specs.push_back(spec);
      }
      break;
    }
    case SystemKind::kFixedWing: {
      for (int i = 0; i < options.rollouts_per_epoch; ++i) {
        RolloutSpec spec;
        spec.target = Tensor::vec(
            {options.fw_target_x,
             rng.uniform(-options.fw_target_span, options.fw_target_span),
             rng.uniform(-options.fw_target_span, options.fw_target_span)});
        spec.max_steps = options.fw_max_steps;
        data.specs.push_back(spec);
      }
      break;
    }
  }
  return data;
}

EpochData evaluation_specs(const System& interact, const TrainOptions& options,
                           const TrajectorySet* trajectories, double stage) {
  EpochData data;
  switch (interact.kind()) {
    case SystemKind::kQuadrotor: {
      if (trajectories == nullptr || trajectories->test.empty())
        throw ConfigError("quadrotor training needs held-out trajectories");
      size_t count = std::min<size_t>(static_cast<size_t>(options.eval_rollouts),
                                      trajectories->test.size());
      for (size_t i = 0; i < count; ++i)
        data.scaled.push_back(scale_speed(trajectories->test[i], stage));
      for (const ReferenceTrajectory& traj : data.scaled) {
        RolloutSpec spec;
        spec.trajectory = &traj;
        spec.max_steps = traj.length() - 1;
        data.specs.push_back(spec);
      }
      break;
    }
    case SystemKind::kCartPole:
      data.specs = eval_specs_cartpole(options, options.eval_rollouts,
                                       options.seed ^ 0xE7A1ull);
      break;
    case SystemKind::kFixedWing:
      data.specs = eval_specs_fixedwing(options, options.eval_rollouts,
                                        options.seed ^ 0xE7A1ull);
      break;
  }
  return data;
}

void write_metrics_header(std::ostream* out) {
  if (out != nullptr)
    *out << "# epoch tau_div speed_stage train_loss eval_tracking_error_mean "
            "eval_tracking_error_std eval_success_ratio\n";
}

void write_metrics_row(std::ostream* out, const EpochMetrics& m) {
  if (out == nullptr) return;
  char line[256];
  std::snprintf(line, sizeof(line), "%d %.17g %.17g %.17g %.17g %.17g %.17g\n",
                m.epoch, m.tau_div, m.speed_stage, m.train_loss, m.eval_error_mean,
                m.eval_error_std, m.eval_success);
  *out << line;
}

}  // namespace

TrainResult train(const System& interact, const System& model,
                  PolicyParameters policy, const TrainOptions& options,
                  const TrajectorySet* trajectories, std::ostream* metrics_out) {
  TrainResult result;
  RandomStream rng(options.seed);
  OptimizerState opt_state;
  std::vector<double> flat = policy.export_flat();
  size_t stage_idx = 0;
  int bad_epochs = 0;
  std::vector<double> best_flat;
  double best_success = -1.0, best_error = 0.0;
  write_metrics_header(metrics_out);

  EvaluationOptions eval_opts;
  eval_opts.diverge_limit = options.eval_diverge_limit;

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    const double tau = options.curriculum.tau(epoch);
    const double stage = (!options.curriculum.enabled ||
                          options.curriculum.speed_stages.empty())
                             ? 1.0
                             : options.curriculum.speed_stages[stage_idx];

    // fresh dataset every epoch with the current policy and threshold
    EpochData collect = collection_specs(interact, options, trajectories, stage, rng);
    long remaining = options.sample_budget > 0
                         ? options.sample_budget - result.samples_used
                         : 0;
    if (options.sample_budget > 0 && remaining <= 0) break;
    PolicyController controller(policy);
    PairDataset ds = collect_pairs(
        interact, controller, std::span<const RolloutSpec>(collect.specs), tau,
        options.horizon.steps,
        options.sample_budget > 0 ? static_cast<int>(remaining) : 0);
    result.samples_used += ds.steps;
    if (ds.pairs.empty()) break;

    // one pass of minibatch SGD over the freshly collected pairs
    std::vector<int> order = rng.permutation(static_cast<int>(ds.pairs.size()));
    double loss_sum = 0.0;
    int batches = 0;
    for (size_t at = 0; at + 1 <= order.size();) {
      size_t take = std::min<size_t>(static_cast<size_t>(options.batch_size),
                                     order.size() - at);
      std::vector<Pair> batch;
      batch.reserve(take);
      for (size_t i = 0; i < take; ++i)
        batch.push_back(ds.pairs[static_cast<size_t>(order[at + i])]);
      at += take;
      try {
        BatchGradient bg =
            batch_gradient(model, policy, std::span<const RolloutSpec>(collect.specs),
                           std::span<const Pair>(batch), options.horizon,
                           options.threads);
        // a blown-up horizon (finite but unphysical) carries no signal
        if (!std::isfinite(bg.loss) || bg.loss > 1e9) continue;
        clip_gradient(std::span<double>(bg.grad), options.optimizer.grad_clip);
        sgd_step(flat, std::span<const double>(bg.grad), options.optimizer,
                 opt_state);
        policy.import_flat(flat);
        loss_sum += bg.loss;
        ++batches;
      } catch (const Error&) {
        // diverged sample or non-finite gradient: skip the batch
        continue;
      }
    }
    double train_loss = batches > 0 ? loss_sum / batches
                                    : std::numeric_limits<double>::quiet_NaN();

    // held-out evaluation at the current curriculum stage
    EpochData eval = evaluation_specs(interact, options, trajectories, stage);
    EvaluationReport report = evaluate(
        interact,
        [&]() { return std::make_unique<PolicyController>(policy); },
        std::span<const RolloutSpec>(eval.specs), eval_opts, options.threads);

    EpochMetrics m;
    m.epoch = epoch;
    m.tau_div = tau;
    m.speed_stage = stage;
    m.train_loss = train_loss;
    m.eval_error_mean = report.error_mean;
    m.eval_error_std = report.error_std;
    m.eval_success = report.success_ratio;
    result.metrics.push_back(m);
    write_metrics_row(metrics_out, m);

    // track the best evaluation epoch at the final stage speed
    if (options.keep_best &&
        (!options.curriculum.enabled ||
         stage_idx + 1 == options.curriculum.speed_stages.size())) {
      double err = std::isfinite(report.error_mean) ? report.error_mean
                                                    : options.eval_diverge_limit;
      if (report.success_ratio > best_success ||
          (report.success_ratio == best_success && err < best_error)) {
        best_success = report.success_ratio;
        best_error = err;
        best_flat = flat;
      }
    }

    // advance the speed stage once tracking at this stage is reliable
    if (stage_idx + 1 < options.curriculum.speed_stages.size() &&
        report.success_ratio >= options.curriculum.stage_success_threshold)
      ++stage_idx;

    if (!std::isfinite(train_loss)) {
      if (++bad_epochs >= 3) {
        result.diverged = true;
        break;
      }
    } else {
      bad_epochs = 0;
    }
  }

  if (options.keep_best && !best_flat.empty()) policy.import_flat(best_flat);
  result.policy = std::move(policy);
  return result;
}

}  // namespace apg
