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

// Policy training by backpropagation through the dynamics over a
// receding horizon: concurrent/recurrent unrolling, SGD with momentum,
// and curriculum-scheduled data collection.

#ifndef APG_TRAINING_HPP_
#define APG_TRAINING_HPP_

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "apg/policy.hpp"
#include "apg/reference.hpp"
#include "apg/system.hpp"

namespace apg {

enum class HorizonMode : std::uint8_t { kConcurrent = 0, kRecurrent = 1 };

struct HorizonConfig {
  int steps = 10;
  HorizonMode mode = HorizonMode::kConcurrent;
};

struct CurriculumSchedule {
  bool enabled = true;
  double tau_init = 0.1;       // m
  double tau_increment = 0.05; // m
  double tau_max = 2.0;        // m
  int epochs_per_increment = 5;
  std::vector<double> speed_stages{1.0};
  double stage_success_threshold = 0.95;

  // Non-decreasing in the epoch, clamped at tau_max; infinite when the
  // curriculum is disabled.
  double tau(int epoch) const {
    if (!enabled) return std::numeric_limits<double>::infinity();
    double t = tau_init + tau_increment * (epoch / epochs_per_increment);
    return t < tau_max ? t : tau_max;
  }
};

struct OptimizerConfig {
  double learning_rate = 1e-5;
  double momentum = 0.9;
  double grad_clip = 10.0;  // global norm; <= 0 disables clipping
};

struct OptimizerState {
  std::vector<double> velocity;
};

// Scales the gradient to the given global norm when it exceeds it;
// returns the pre-clip norm.
double clip_gradient(std::span<double> grad, double max_norm);

// Classical momentum: v <- mu v + g; theta <- theta - lr v.
// Raises NumericalError on a non-finite gradient (step not applied).
void sgd_step(std::vector<double>& params, std::span<const double> grad,
              const OptimizerConfig& cfg, OptimizerState& state);

struct Unrolled {
  std::vector<Val> states;          // s_{t+1..t+T}
  std::vector<Val> actions_raw;     // squashed pre-rescale commands
  std::vector<Val> actions_scaled;
};

// One policy invocation predicts all T actions; the tape then passes T
// times through the dynamics but only once through the policy.
Unrolled unroll_concurrent(Tape& tape, const System& system,
                           const PolicyNodes& policy, const RolloutSpec& spec,
                           const Tensor& s0, int t, int horizon);

// The policy is re-invoked on every simulated state and only its first
// predicted action applied, giving T policy subgraphs on the tape.
Unrolled unroll_recurrent(Tape& tape, const System& system,
                          const PolicyNodes& policy, const RolloutSpec& spec,
                          const Tensor& s0, int t, int horizon);

// Unroll + per-system weighted loss for one state-reference pair.
Val pair_loss(Tape& tape, const System& system, const PolicyNodes& policy,
              const RolloutSpec& spec, const Pair& pair, const HorizonConfig& horizon);

struct BatchGradient {
  std::vector<double> grad;  // mean over the batch, canonical flat order
  double loss = 0.0;         // mean over the batch
};

// Per-sample tapes (optionally across threads), aggregated in sample
// order so results are bitwise deterministic.
BatchGradient batch_gradient(const System& system, const PolicyParameters& policy,
                             std::span<const RolloutSpec> specs,
                             std::span<const Pair> pairs,
                             const HorizonConfig& horizon, int threads = 1);

struct TrainOptions {
  HorizonConfig horizon;
  CurriculumSchedule curriculum;
  OptimizerConfig optimizer;
  int epochs = 0;
  int batch_size = 8;
  int rollouts_per_epoch = 24;
  int eval_rollouts = 100;
  int collect_steps = 100;   // CartPole collection rollout length
  int threads = 2;
  std::uint64_t seed = 1;
  long sample_budget = 0;    // cap on interaction steps; 0 = unlimited
  double eval_diverge_limit = 5.0;
  // return the parameters of the best evaluation epoch (success ratio,
  // then error) instead of the final ones
  bool keep_best = false;

  // start/target distributions for the systems without trajectory files
  double cp_start_alpha = 0.12;
  double cp_start_rate = 0.1;
  double cp_eval_alpha = 0.1;
  double fw_target_x = 50.0;
  double fw_target_span = 5.0;
  int fw_max_steps = 220;
};

struct EpochMetrics {
  int epoch = 0;
  double tau_div = 0.0;
  double speed_stage = 1.0;
  double train_loss = 0.0;
  double eval_error_mean = 0.0;
  double eval_error_std = 0.0;
  double eval_success = 0.0;
};

struct TrainResult {
  PolicyParameters policy;
  std::vector<EpochMetrics> metrics;
  bool diverged = false;
  long samples_used = 0;
};

// Per-epoch: collect state-reference pairs by rolling the current
// policy in `interact` under the curriculum threshold, make one pass of
// minibatch SGD differentiating through `model`, then evaluate on
// held-out rollouts. For plain training interact and model are the same
// system; adaptation fine-tuning interacts with the target dynamics
// while differentiating through the learned residual model.
TrainResult train(const System& interact, const System& model,
                  PolicyParameters policy, const TrainOptions& options,
                  const TrajectorySet* trajectories,
                  std::ostream* metrics_out = nullptr);

// Evaluation rollout specs used by train(); exposed for the CLI.
std::vector<RolloutSpec> eval_specs_cartpole(const TrainOptions& options, int count,
                                             std::uint64_t seed);
std::vector<RolloutSpec> eval_specs_fixedwing(const TrainOptions& options, int count,
                                              std::uint64_t seed);

}  // namespace apg

#endif  // APG_TRAINING_HPP_
