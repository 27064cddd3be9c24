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

#include "apg/system.hpp"

#include <algorithm>
#include <cmath>

#include "apg/losses.hpp"

namespace apg {

const char* system_name(SystemKind kind) {
  switch (kind) {
    case SystemKind::kCartPole: return "cartpole";
    case SystemKind::kQuadrotor: return "quadrotor";
    case SystemKind::kFixedWing: return "fixedwing";
  }
  return "unknown";
}

SystemKind system_from_name(const std::string& name) {
  if (name == "cartpole") return SystemKind::kCartPole;
  if (name == "quadrotor") return SystemKind::kQuadrotor;
  if (name == "fixedwing") return SystemKind::kFixedWing;
  throw ConfigError("unknown system '" + name + "'");
}

void ActionScaling::validate() const {
  if (lo.size() != hi.size()) throw ConfigError("action scaling: bound size mismatch");
  for (size_t i = 0; i < lo.size(); ++i)
    if (!(lo[i] < hi[i]))
      throw ConfigError("action scaling: lower bound must be below upper bound");
}

ScaledAction apply_scaling(Tape& tape, const ActionScaling& scaling, Val pre,
                           int repeat) {
  const int dim = scaling.dim();
  if (scaling.kind != ActionScaling::Kind::kIdentity) {
    if (pre.size() != dim * repeat)
      throw ShapeError("apply_scaling: output width does not match bounds");
  }
  switch (scaling.kind) {
    case ActionScaling::Kind::kIdentity:
      return {pre, pre};
    case ActionScaling::Kind::kTanhSymmetric: {
      Val raw = tanh(pre);
      Tensor mid(dim * repeat, 1), half(dim * repeat, 1);
      for (int r = 0; r < repeat; ++r)
        for (int i = 0; i < dim; ++i) {
          mid[r * dim + i] = 0.5 * (scaling.hi[static_cast<size_t>(i)] +
                                    scaling.lo[static_cast<size_t>(i)]);
          half[r * dim + i] = 0.5 * (scaling.hi[static_cast<size_t>(i)] -
                                     scaling.lo[static_cast<size_t>(i)]);
        }
      Val scaled = tape.constant(std::move(mid)) + raw * tape.constant(std::move(half));
      return {raw, scaled};
    }
    case ActionScaling::Kind::kSigmoidAffine: {
      Val raw = sigmoid(pre);
      Tensor lo(dim * repeat, 1), range(dim * repeat, 1);
      for (int r = 0; r < repeat; ++r)
        for (int i = 0; i < dim; ++i) {
          lo[r * dim + i] = scaling.lo[static_cast<size_t>(i)];
          range[r * dim + i] = scaling.hi[static_cast<size_t>(i)] -
                               scaling.lo[static_cast<size_t>(i)];
        }
      Val scaled = tape.constant(std::move(lo)) + raw * tape.constant(std::move(range));
      return {raw, scaled};
    }
  }
  throw ConfigError("apply_scaling: unknown scaling kind");
}

// ---- CartPole -----------------------------------------------------------

CartPoleSystem::CartPoleSystem(CartPoleParams params) : params_(params) {
  scaling_.kind = ActionScaling::Kind::kTanhSymmetric;
  scaling_.lo = {-1.0};
  scaling_.hi = {1.0};
}

Val CartPoleSystem::step(Tape& tape, Val state, Val action) const {
  return cartpole_step(tape, params_, state, elem(action, 0));
}

std::vector<Tensor> CartPoleSystem::reference_rows(const RolloutSpec&,
                                                   const Tensor& state, int,
                                                   int count) const {
  return cartpole_reference(state, count);
}

Val CartPoleSystem::horizon_loss(Tape& tape, std::span<const Val> states,
                                 std::span<const Val>,
                                 std::span<const Tensor> refs) const {
  return loss_cartpole(tape, states, refs);
}

double CartPoleSystem::divergence(const Tensor& state, const Tensor& ref_row) const {
  // weighted state distance; unused in practice (no CartPole curriculum)
  double da = state[2] - ref_row[2];
  double dv = state[1] - ref_row[1];
  double dw = state[3] - ref_row[3];
  return std::sqrt(10.0 * da * da + 3.0 * dv * dv + dw * dw);
}

Tensor CartPoleSystem::reset_onto(const Tensor& ref_row, const Tensor&) const {
  return ref_row;
}

Tensor CartPoleSystem::initial_state(const RolloutSpec& spec) const {
  if (spec.start_state.size() == 4) return spec.start_state;
  return Tensor::zeros(4);
}

bool CartPoleSystem::state_ok(const Tensor& state) const {
  if (!state.all_finite()) return false;
  // balance-task validity envelope: past this the interpolation-to-
  // upright reference is meaningless
  return std::abs(state[2]) <= 1.0 && std::abs(state[0]) <= 3.0;
}

// ---- Quadrotor ----------------------------------------------------------

QuadrotorSystem::QuadrotorSystem(QuadrotorParams params) : params_(params) {
  scaling_.kind = ActionScaling::Kind::kSigmoidAffine;
  scaling_.lo = {params_.thrust_min, -params_.body_rate_max, -params_.body_rate_max,
                 -params_.body_rate_max};
  scaling_.hi = {params_.thrust_max, params_.body_rate_max, params_.body_rate_max,
                 params_.body_rate_max};
}

Val QuadrotorSystem::step(Tape& tape, Val state, Val action) const {
  return quadrotor_step(tape, params_, state, action);
}

Val QuadrotorSystem::observe(Tape& tape, Val state) const {
  return quadrotor_observe(tape, state);
}

std::vector<Tensor> QuadrotorSystem::reference_rows(const RolloutSpec& spec,
                                                    const Tensor&, int t,
                                                    int count) const {
  if (spec.trajectory == nullptr)
    throw ConfigError("quadrotor rollout needs a reference trajectory");
  std::vector<Tensor> rows;
  rows.reserve(static_cast<size_t>(count));
  for (int k = 1; k <= count; ++k) rows.push_back(spec.trajectory->row(t + k));
  return rows;
}

Val QuadrotorSystem::reference_features(Tape& tape, const RolloutSpec& spec,
                                        Val state, int t, int rows) const {
  if (spec.trajectory == nullptr)
    throw ConfigError("quadrotor rollout needs a reference trajectory");
  Val pos = slice(state, 0, 3);
  std::vector<Val> parts;
  parts.reserve(static_cast<size_t>(2 * rows));
  for (int k = 1; k <= rows; ++k) {
    Tensor row = spec.trajectory->row(t + k);
    Val ref_pos = tape.constant(Tensor::vec({row[0], row[1], row[2]}));
    Val ref_vel = tape.constant(Tensor::vec({row[3], row[4], row[5]}));
    parts.push_back(ref_pos - pos);  // desired position relative to the vehicle
    parts.push_back(ref_vel);
  }
  return concat(std::span<const Val>(parts));
}

Val QuadrotorSystem::horizon_loss(Tape& tape, std::span<const Val> states,
                                  std::span<const Val> actions_raw,
                                  std::span<const Tensor> refs) const {
  return loss_quadrotor(tape, states, actions_raw, refs);
}

double QuadrotorSystem::divergence(const Tensor& state, const Tensor& ref_row) const {
  double dx = state[0] - ref_row[0];
  double dy = state[1] - ref_row[1];
  double dz = state[2] - ref_row[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

Tensor QuadrotorSystem::reset_onto(const Tensor& ref_row, const Tensor&) const {
  // position and velocity from the reference, level attitude, zero rates
  return Tensor::vec({ref_row[0], ref_row[1], ref_row[2], ref_row[3], ref_row[4],
                      ref_row[5], 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0});
}

Tensor QuadrotorSystem::initial_state(const RolloutSpec& spec) const {
  if (spec.start_state.size() == kQuadStateDim) return spec.start_state;
  if (spec.trajectory == nullptr || spec.trajectory->length() == 0)
    throw ConfigError("quadrotor rollout needs a trajectory or a start state");
  return reset_onto(spec.trajectory->row(0), spec.trajectory->row(1));
}

// ---- Fixed-wing ---------------------------------------------------------

FixedWingSystem::FixedWingSystem(FixedWingParams params) : params_(params) {
  scaling_.kind = ActionScaling::Kind::kSigmoidAffine;
  scaling_.lo = {params_.thrust_min, -params_.elevator_max, -params_.aileron_max,
                 -params_.rudder_max};
  scaling_.hi = {params_.thrust_max, params_.elevator_max, params_.aileron_max,
                 params_.rudder_max};
}

Val FixedWingSystem::step(Tape& tape, Val state, Val action) const {
  return fixedwing_step(tape, params_, state, action);
}

std::vector<Tensor> FixedWingSystem::reference_rows(const RolloutSpec& spec,
                                                    const Tensor& state, int,
                                                    int count) const {
  if (spec.target.size() != 3)
    throw ConfigError("fixed-wing rollout needs a 3-dim target");
  return fixedwing_reference(state, spec.target, count, params_.dt);
}

Val FixedWingSystem::reference_features(Tape& tape, const RolloutSpec& spec,
                                        Val state, int, int rows) const {
  if (spec.target.size() != 3)
    throw ConfigError("fixed-wing rollout needs a 3-dim target");
  // relative position of the `rows`-th desired state on the line toward
  // the target at the current speed, clamped at the target
  Val pos = slice(state, 0, 3);
  Val vb = slice(state, 3, 3);
  Val to_target = tape.constant(spec.target) - pos;
  Val dist = norm(to_target, 1e-6);
  Val speed = norm(vb, 1e-9);
  Val span_len = speed * (params_.dt * static_cast<double>(rows));
  // min(span_len, dist)
  Val reach = span_len - relu_floor(span_len - dist);
  return to_target * (reach / dist);
}

Val FixedWingSystem::horizon_loss(Tape& tape, std::span<const Val> states,
                                  std::span<const Val> actions_raw,
                                  std::span<const Tensor> refs) const {
  return loss_fixedwing(tape, states, actions_raw, refs);
}

double FixedWingSystem::divergence(const Tensor& state, const Tensor& ref_row) const {
  double dx = state[0] - ref_row[0];
  double dy = state[1] - ref_row[1];
  double dz = state[2] - ref_row[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

Tensor FixedWingSystem::reset_onto(const Tensor& ref_row, const Tensor& next_row) const {
  double dir[3] = {next_row[0] - ref_row[0], next_row[1] - ref_row[1],
                   next_row[2] - ref_row[2]};
  double len = std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
  double speed = params_.cruise_speed;
  double yaw = 0.0, pitch = 0.0;
  if (len > 1e-9) {
    speed = std::max(len / params_.dt, 0.5 * params_.cruise_speed);
    yaw = std::atan2(dir[1], dir[0]);
    pitch = std::atan2(-dir[2], std::sqrt(dir[0] * dir[0] + dir[1] * dir[1]));
    // keep the reset inside a plausible flight envelope even when the
    // reference direction is nearly vertical
    pitch = std::clamp(pitch, -0.35, 0.35);
  }
  // on-reference, wings level, airspeed along the reference direction
  return Tensor::vec({ref_row[0], ref_row[1], ref_row[2], speed, 0.0, 0.0, 0.0,
                      pitch, yaw, 0.0, 0.0, 0.0});
}

Tensor FixedWingSystem::initial_state(const RolloutSpec& spec) const {
  if (spec.start_state.size() == kFixedWingStateDim) return spec.start_state;
  return Tensor::vec({0.0, 0.0, 0.0, params_.cruise_speed, 0.0, 0.0, 0.0, 0.0, 0.0,
                      0.0, 0.0, 0.0});
}

bool FixedWingSystem::rollout_done(const RolloutSpec& spec,
                                   const Tensor& state) const {
  if (spec.target.size() != 3) return false;
  // past the target plane (the target lies ahead in x) or within one
  // reference step of it
  if (state[0] >= spec.target[0] - 1e-9) return true;
  double dx = spec.target[0] - state[0];
  double dy = spec.target[1] - state[1];
  double dz = spec.target[2] - state[2];
  double speed = std::sqrt(state[3] * state[3] + state[4] * state[4] +
                           state[5] * state[5]);
  return std::sqrt(dx * dx + dy * dy + dz * dz) < 0.75 * speed * params_.dt;
}

bool FixedWingSystem::state_ok(const Tensor& state) const {
  if (!state.all_finite()) return false;
  double va = std::sqrt(state[3] * state[3] + state[4] * state[4] +
                        state[5] * state[5]);
  if (va < params_.airspeed_floor) return false;
  return std::abs(state[7]) < 1.45;  // Euler kinematics valid away from +-pi/2
}

// ---- drag perturbation --------------------------------------------------

DragPerturbedSystem::DragPerturbedSystem(const System& base, double drag_rate)
    : base_(base), drag_rate_(drag_rate) {
  if (drag_rate < 0.0)
    throw ConfigError("drag_perturbed: drag rate must be non-negative");
  if (base.velocity_offset() < 0)
    throw ConfigError("drag_perturbed: base system has no velocity block");
}

Val DragPerturbedSystem::step(Tape& tape, Val state, Val action) const {
  Val next = base_.step(tape, state, action);
  if (drag_rate_ == 0.0) return next;
  const int off = base_.velocity_offset();
  const int dim = base_.state_dim();
  // v_dot <- v_dot - r v folds into the Euler update as -dt r v
  Val v_now = slice(state, off, 3);
  Val v_next = slice(next, off, 3) - v_now * (drag_rate_ * base_.dt());
  std::vector<Val> parts;
  if (off > 0) parts.push_back(slice(next, 0, off));
  parts.push_back(v_next);
  if (off + 3 < dim) parts.push_back(slice(next, off + 3, dim - off - 3));
  return concat(std::span<const Val>(parts));
}

std::unique_ptr<System> make_system(SystemKind kind) {
  switch (kind) {
    case SystemKind::kCartPole: return std::make_unique<CartPoleSystem>();
    case SystemKind::kQuadrotor: return std::make_unique<QuadrotorSystem>();
    case SystemKind::kFixedWing: return std::make_unique<FixedWingSystem>();
  }
  throw ConfigError("make_system: unknown system kind");
}

}  // namespace apg
