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

// Quadrotor rigid-body dynamics commanded by collective thrust and
// desired body rates. World frame is z-up; attitude is carried as a
// unit quaternion on the flat representation, exposed as a rotation
// matrix on the typed state.

#ifndef APG_QUADROTOR_HPP_
#define APG_QUADROTOR_HPP_

#include "apg/geometry.hpp"
#include "apg/tape.hpp"
#include "apg/tensor.hpp"

namespace apg {

struct QuadrotorParams {
  double mass = 1.0;              // kg; hover thrust of 9.81 N forces this
  double gravity = 9.81;          // m/s^2
  double dt = 0.1;                // s
  double body_rate_gain = 10.0;   // 1/s, first-order lag toward commanded rates
  double thrust_min = 2.21;       // N
  double thrust_max = 17.31;      // N
  double body_rate_max = 0.5;     // rad/s, symmetric bound
  double orthonormality_tol = 1e-6;
};

// Typed state. flat() encodes [p(3), v(3), q(wxyz), omega(3)] = 13.
struct QuadrotorState {
  Vec3 position;
  Vec3 velocity;             // world frame
  Mat3 rotation;             // body -> world
  Vec3 angular_velocity;     // body frame

  Tensor flat() const;
  static QuadrotorState from_flat(const Tensor& t);
};

inline constexpr int kQuadStateDim = 13;
inline constexpr int kQuadObsDim = 15;

// One Euler step on the tape. `action` is [thrust_N, wx, wy, wz] in
// physical units. Differentiable w.r.t. state and action.
Val quadrotor_step(Tape& tape, const QuadrotorParams& p, Val state, Val action);

// Observation: [v_world(3), v_body(3), R column 0, R column 1, omega(3)].
Val quadrotor_observe(Tape& tape, Val state);

// Typed wrapper; rejects rotations that are not orthonormal within
// tolerance (and non-finite inputs).
QuadrotorState quadrotor_step(const QuadrotorParams& p, const QuadrotorState& s,
                              double thrust, const Vec3& omega_des);

}  // namespace apg

#endif  // APG_QUADROTOR_HPP_
