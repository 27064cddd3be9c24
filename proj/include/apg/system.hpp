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

// Uniform facade over the dynamic systems: flat state representation,
// differentiable stepping/observation, reference handling, losses and
// rollout bookkeeping. Training, evaluation, the MPC baseline and the
// adaptation loop all run against this interface.

#ifndef APG_SYSTEM_HPP_
#define APG_SYSTEM_HPP_

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "apg/cartpole.hpp"
#include "apg/fixedwing.hpp"
#include "apg/quadrotor.hpp"
#include "apg/reference.hpp"
#include "apg/tape.hpp"

namespace apg {

enum class SystemKind : std::uint8_t { kCartPole = 0, kQuadrotor = 1, kFixedWing = 2 };

const char* system_name(SystemKind kind);
SystemKind system_from_name(const std::string& name);

// Maps raw network outputs to bounded commands. SigmoidAffine squashes
// to [0, 1] then rescales per output; TanhSymmetric relies on a tanh
// head; Identity passes through (toy systems and tests).
struct ActionScaling {
  enum class Kind : std::uint8_t { kSigmoidAffine = 0, kTanhSymmetric = 1, kIdentity = 2 };
  Kind kind = Kind::kSigmoidAffine;
  std::vector<double> lo, hi;  // one entry per action dimension

  int dim() const { return static_cast<int>(lo.size()); }
  void validate() const;
};

struct ScaledAction {
  Val raw;     // post-squash, pre-rescale ([0,1] for sigmoid scaling)
  Val scaled;  // physical units
};

// `pre` holds `repeat` stacked action vectors; bounds tile accordingly.
ScaledAction apply_scaling(Tape& tape, const ActionScaling& scaling, Val pre,
                           int repeat);

class System {
 public:
  virtual ~System() = default;

  virtual SystemKind kind() const = 0;
  virtual int state_dim() const = 0;
  virtual int obs_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual int ref_dim() const = 0;
  virtual double dt() const = 0;
  virtual const ActionScaling& action_scaling() const = 0;

  virtual Val step(Tape& tape, Val state, Val action_scaled) const = 0;
  virtual Val observe(Tape& tape, Val state) const = 0;

  // Reference rows nu_{t+1} .. nu_{t+count} for the loss and for
  // divergence checks, derived from the spec and (where the reference
  // is state-relative) the given state.
  virtual std::vector<Tensor> reference_rows(const RolloutSpec& spec,
                                             const Tensor& state, int t,
                                             int count) const = 0;

  // Policy reference input built on the tape; differentiable through
  // `state` where the encoding is state-relative.
  virtual Val reference_features(Tape& tape, const RolloutSpec& spec, Val state,
                                 int t, int rows) const = 0;
  virtual int reference_feature_dim(int rows) const = 0;

  // Horizon-summed weighted tracking loss. states are s_{t+1..t+T},
  // actions_raw the squashed pre-rescale commands that produced them.
  virtual Val horizon_loss(Tape& tape, std::span<const Val> states,
                           std::span<const Val> actions_raw,
                           std::span<const Tensor> refs) const = 0;

  virtual double divergence(const Tensor& state, const Tensor& ref_row) const = 0;
  virtual Tensor reset_onto(const Tensor& ref_row, const Tensor& next_row) const = 0;
  virtual Tensor initial_state(const RolloutSpec& spec) const = 0;
  virtual bool state_ok(const Tensor& state) const { return state.all_finite(); }

  // Offset of the 3-dim velocity block targeted by drag perturbations;
  // -1 when the system has none.
  virtual int velocity_offset() const { return -1; }

  // True when a rollout has reached its natural end (e.g. the
  // fixed-wing target plane); collection stops there.
  virtual bool rollout_done(const RolloutSpec& spec, const Tensor& state) const {
    (void)spec;
    (void)state;
    return false;
  }
};

class CartPoleSystem : public System {
 public:
  explicit CartPoleSystem(CartPoleParams params = {});
  const CartPoleParams& params() const { return params_; }

  SystemKind kind() const override { return SystemKind::kCartPole; }
  int state_dim() const override { return 4; }
  int obs_dim() const override { return 4; }
  int action_dim() const override { return 1; }
  int ref_dim() const override { return 4; }
  double dt() const override { return params_.dt; }
  const ActionScaling& action_scaling() const override { return scaling_; }

  Val step(Tape& tape, Val state, Val action) const override;
  Val observe(Tape& tape, Val state) const override { return state; }
  std::vector<Tensor> reference_rows(const RolloutSpec&, const Tensor& state, int t,
                                     int count) const override;
  Val reference_features(Tape&, const RolloutSpec&, Val, int, int) const override {
    return Val{};
  }
  int reference_feature_dim(int) const override { return 0; }
  Val horizon_loss(Tape&, std::span<const Val>, std::span<const Val>,
                   std::span<const Tensor>) const override;
  double divergence(const Tensor& state, const Tensor& ref_row) const override;
  Tensor reset_onto(const Tensor& ref_row, const Tensor&) const override;
  Tensor initial_state(const RolloutSpec& spec) const override;
  bool state_ok(const Tensor& state) const override;

  // balance envelope used for tracking success
  double max_cart_offset = 2.4;   // m
  double max_pole_angle = 0.4;    // rad

 private:
  CartPoleParams params_;
  ActionScaling scaling_;
};

class QuadrotorSystem : public System {
 public:
  explicit QuadrotorSystem(QuadrotorParams params = {});
  const QuadrotorParams& params() const { return params_; }

  SystemKind kind() const override { return SystemKind::kQuadrotor; }
  int state_dim() const override { return kQuadStateDim; }
  int obs_dim() const override { return kQuadObsDim; }
  int action_dim() const override { return 4; }
  int ref_dim() const override { return 6; }
  double dt() const override { return params_.dt; }
  const ActionScaling& action_scaling() const override { return scaling_; }

  Val step(Tape& tape, Val state, Val action) const override;
  Val observe(Tape& tape, Val state) const override;
  std::vector<Tensor> reference_rows(const RolloutSpec&, const Tensor&, int t,
                                     int count) const override;
  Val reference_features(Tape&, const RolloutSpec&, Val state, int t,
                         int rows) const override;
  int reference_feature_dim(int rows) const override { return 6 * rows; }
  Val horizon_loss(Tape&, std::span<const Val>, std::span<const Val>,
                   std::span<const Tensor>) const override;
  double divergence(const Tensor& state, const Tensor& ref_row) const override;
  Tensor reset_onto(const Tensor& ref_row, const Tensor&) const override;
  Tensor initial_state(const RolloutSpec& spec) const override;
  int velocity_offset() const override { return 3; }

 private:
  QuadrotorParams params_;
  ActionScaling scaling_;
};

class FixedWingSystem : public System {
 public:
  explicit FixedWingSystem(FixedWingParams params = {});
  const FixedWingParams& params() const { return params_; }

  SystemKind kind() const override { return SystemKind::kFixedWing; }
  int state_dim() const override { return kFixedWingStateDim; }
  int obs_dim() const override { return kFixedWingStateDim; }
  int action_dim() const override { return 4; }
  int ref_dim() const override { return 3; }
  double dt() const override { return params_.dt; }
  const ActionScaling& action_scaling() const override { return scaling_; }

  Val step(Tape& tape, Val state, Val action) const override;
  Val observe(Tape& tape, Val state) const override { return state; }
  std::vector<Tensor> reference_rows(const RolloutSpec&, const Tensor&, int t,
                                     int count) const override;
  Val reference_features(Tape&, const RolloutSpec&, Val state, int t,
                         int rows) const override;
  int reference_feature_dim(int) const override { return 3; }
  Val horizon_loss(Tape&, std::span<const Val>, std::span<const Val>,
                   std::span<const Tensor>) const override;
  double divergence(const Tensor& state, const Tensor& ref_row) const override;
  Tensor reset_onto(const Tensor& ref_row, const Tensor& next_row) const override;
  Tensor initial_state(const RolloutSpec& spec) const override;
  bool state_ok(const Tensor& state) const override;
  int velocity_offset() const override { return 3; }
  bool rollout_done(const RolloutSpec& spec, const Tensor& state) const override;

 private:
  FixedWingParams params_;
  ActionScaling scaling_;
};

// Target dynamics f*: the wrapped system with the translational
// acceleration reduced by drag_rate * v before integration. With a zero
// rate the step is bitwise identical to the base step.
class DragPerturbedSystem : public System {
 public:
  DragPerturbedSystem(const System& base, double drag_rate);

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
  Val observe(Tape& tape, Val state) const override { return base_.observe(tape, state); }
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
  double drag_rate_;
};

std::unique_ptr<System> make_system(SystemKind kind);

// Plain-value step on a scratch tape; identical arithmetic to the
// differentiated path.
Tensor step_plain(const System& system, const Tensor& state, const Tensor& action);

// Closed-loop action source for rollouts and data collection.
class Controller {
 public:
  virtual ~Controller() = default;
  // Returns the scaled action to apply at (state, t). When elapsed_ms
  // is given, the implementation reports its per-call compute time.
  virtual Tensor act(const System& system, const RolloutSpec& spec,
                     const Tensor& state, int t, double* elapsed_ms) = 0;
};

}  // namespace apg

#endif  // APG_SYSTEM_HPP_
