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

// Few-shot adaptation to perturbed dynamics: collect state-action-state
// triples under the target dynamics, fit an additive state residual on
// top of the nominal model, then fine-tune the pretrained policy
// through the residual-augmented dynamics.

#ifndef APG_ADAPTATION_HPP_
#define APG_ADAPTATION_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "apg/nn.hpp"
#include "apg/policy.hpp"
#include "apg/system.hpp"
#include "apg/training.hpp"

namespace apg {

struct TransitionTriple {
  Tensor state;
  Tensor action;      // scaled (physical) command
  Tensor next_state;  // exactly one target-dynamics step
};

struct TripleSet {
  std::vector<TransitionTriple> items;
  bool clipped = false;  // fewer steps available than requested
};

// Rolls the controller in the target dynamics with curriculum-style
// resets, recording exactly `budget` triples (or fewer, flagged).
TripleSet collect_triples(const System& target, Controller& controller,
                          std::span<const RolloutSpec> specs, int budget,
                          double tau_div);

// Additive state-increment network: input is (observation, action),
// output one increment per physical state component.
struct ResidualModel {
  SystemKind system = SystemKind::kQuadrotor;
  std::vector<Dense> layers;
  Normalizer input_norm;

  std::size_t param_count() const { return params_of(layers); }
  std::vector<double> export_flat() const;
  void import_flat(std::span<const double> flat);
};

// Default architecture: two tanh hidden layers of 64, linear head.
ResidualModel make_residual(const System& system, std::uint64_t seed);

struct ResidualNodes {
  const ResidualModel* model = nullptr;
  std::vector<DenseNodes> layers;
};

ResidualNodes bind_residual(Tape& tape, const ResidualModel& model, bool trainable);

// The state increment Delta(s, a).
Val residual_delta(Tape& tape, const System& base, const ResidualNodes& nodes,
                   Val state, Val action_scaled);

// base(s, a) + Delta(s, a); differentiable w.r.t. the residual
// parameters, the state, and the action.
Val residual_step(Tape& tape, const System& base, const ResidualNodes& nodes,
                  Val state, Val action_scaled);

// Frozen-parameter wrapper so the training loop, rollouts and the MPC
// baseline can run on the augmented dynamics.
class ResidualSystem : public System {
 public:
  ResidualSystem(const System& base, const ResidualModel& model);

  SystemKind kind() const override { return base_.kind(); }
  int state_dim() const override { return base_.state_dim(); }
  int obs_dim() const override { return base_.obs_dim(); }
  int action_dim() const override { return base_.action_dim(); }
  int ref_dim() const override { return base_.ref_dim(); }
  double dt() const override { return base_.dt(); }
  const ActionScaling& action_scaling() const override {
    return base_.action_scaling();
  }
  Val step(Tape& tape, Val state, Val action) const override;
  Val observe(Tape& tape, Val state) const override {
    return base_.observe(tape, state);
  }
  std::vector<Tensor> reference_rows(const RolloutSpec& s, const Tensor& st, int t,
                                     int c) const override {
    return base_.reference_rows(s, st, t, c);
  }
  Val reference_features(Tape& tp, const RolloutSpec& s, Val st, int t,
                         int r) const override {
    return base_.reference_features(tp, s, st, t, r);
  }
  int reference_feature_dim(int rows) const override {
    return base_.reference_feature_dim(rows);
  }
  Val horizon_loss(Tape& tp, std::span<const Val> s, std::span<const Val> a,
                   std::span<const Tensor> r) const override {
    return base_.horizon_loss(tp, s, a, r);
  }
  double divergence(const Tensor& s, const Tensor& r) const override {
    return base_.divergence(s, r);
  }
  Tensor reset_onto(const Tensor& r, const Tensor& n) const override {
    return base_.reset_onto(r, n);
  }
  Tensor initial_state(const RolloutSpec& s) const override {
    return base_.initial_state(s);
  }
  bool state_ok(const Tensor& s) const override { return base_.state_ok(s); }
  int velocity_offset() const override { return base_.velocity_offset(); }
  bool rollout_done(const RolloutSpec& sp, const Tensor& s) const override {
    return base_.rollout_done(sp, s);
  }

 private:
  const System& base_;
  const ResidualModel& model_;
};

struct ResidualTrainResult {
  std::vector<double> loss_curve;  // per full-batch epoch
  double initial_loss = 0.0;
  double final_loss = 0.0;
  bool diverged = false;
};

// Minimizes the summed Euclidean-norm one-step error
//   sum ||f(s, a) + Delta(s, a) - s*||
// by full-batch SGD with momentum; keeps the best parameters seen.
ResidualTrainResult train_residual(const System& base, ResidualModel& model,
                                   const TripleSet& triples, int epochs,
                                   double learning_rate, double momentum);

struct FineTuneResult {
  PolicyParameters policy;
  std::vector<EpochMetrics> metrics;
  long samples_used = 0;
  bool diverged = false;
};

// Same loop as train(): data collection runs in the target dynamics
// (counted against the sample budget), gradients flow through the
// residual-augmented model.
FineTuneResult fine_tune(const System& target, const System& base,
                         const ResidualModel& residual, PolicyParameters policy,
                         const TrainOptions& options,
                         const TrajectorySet* trajectories,
                         std::ostream* metrics_out = nullptr);

}  // namespace apg

#endif  // APG_ADAPTATION_HPP_
