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

#include "apg/quadrotor.hpp"

#include <cmath>

namespace apg {

Tensor QuadrotorState::flat() const {
  Quat q = matrix_to_quat(rotation);
  return Tensor::vec({position.x, position.y, position.z, velocity.x, velocity.y,
                      velocity.z, q.w, q.x, q.y, q.z, angular_velocity.x,
                      angular_velocity.y, angular_velocity.z});
}

QuadrotorState QuadrotorState::from_flat(const Tensor& t) {
  QuadrotorState s;
  s.position = {t[0], t[1], t[2]};
  s.velocity = {t[3], t[4], t[5]};
  s.rotation = quat_to_matrix(Quat{t[6], t[7], t[8], t[9]}.normalized());
  s.angular_velocity = {t[10], t[11], t[12]};
  return s;
}

namespace {

struct QuatVals {
  Val w, x, y, z;
};

QuatVals unit_quat(Tape& tape, Val state) {
  Val q = slice(state, 6, 4);
  Val qn = q / norm(q);
  return {elem(qn, 0), elem(qn, 1), elem(qn, 2), elem(qn, 3)};
}

// Columns of the body->world rotation for a unit quaternion.
Val rot_column(const QuatVals& q, int c) {
  switch (c) {
    case 0:
      return concat({1.0 - 2.0 * (q.y * q.y + q.z * q.z),
                     2.0 * (q.x * q.y + q.w * q.z),
                     2.0 * (q.x * q.z - q.w * q.y)});
    case 1:
      return concat({2.0 * (q.x * q.y - q.w * q.z),
                     1.0 - 2.0 * (q.x * q.x + q.z * q.z),
                     2.0 * (q.y * q.z + q.w * q.x)});
    default:
      return concat({2.0 * (q.x * q.z + q.w * q.y),
                     2.0 * (q.y * q.z - q.w * q.x),
                     1.0 - 2.0 * (q.x * q.x + q.y * q.y)});
  }
}

}  // namespace

Val quadrotor_step(Tape& tape, const QuadrotorParams& p, Val state, Val action) {
  if (!state.value().all_finite())
    throw InvalidStateError("quadrotor_step: non-finite state");
  if (state.size() != kQuadStateDim)
    throw ShapeError("quadrotor_step: state must be 13-dim");
  if (action.size() != 4) throw ShapeError("quadrotor_step: action must be 4-dim");

  Val pos = slice(state, 0, 3);
  Val vel = slice(state, 3, 3);
  Val omega = slice(state, 10, 3);
  QuatVals q = unit_quat(tape, state);

  Val thrust = elem(action, 0);
  Val omega_des = slice(action, 1, 3);

  // v_dot = -g e_z + R e_z T / m
  Val body_z = rot_column(q, 2);
  Val gravity = tape.constant(Tensor::vec({0.0, 0.0, -p.gravity}));
  Val v_dot = gravity + body_z * (thrust / p.mass);

  // commanded body rates tracked through a first-order lag
  Val omega_dot = (omega_des - omega) * p.body_rate_gain;

  // q_dot = 1/2 q (x) (0, omega)
  Val wx = elem(omega, 0), wy = elem(omega, 1), wz = elem(omega, 2);
  Val q_dot = concat({-0.5 * (q.x * wx + q.y * wy + q.z * wz),
                      0.5 * (q.w * wx + q.y * wz - q.z * wy),
                      0.5 * (q.w * wy + q.z * wx - q.x * wz),
                      0.5 * (q.w * wz + q.x * wy - q.y * wx)});

  Val pos_next = pos + vel * p.dt;
  Val vel_next = vel + v_dot * p.dt;
  Val q_raw = concat({q.w, q.x, q.y, q.z}) + q_dot * p.dt;
  Val q_next = q_raw / norm(q_raw);  // keeps the rotation orthonormal
  Val omega_next = omega + omega_dot * p.dt;

  return concat({pos_next, vel_next, q_next, omega_next});
}

Val quadrotor_observe(Tape& tape, Val state) {
  if (state.size() != kQuadStateDim)
    throw ShapeError("quadrotor_observe: state must be 13-dim");
  Val vel = slice(state, 3, 3);
  Val omega = slice(state, 10, 3);
  QuatVals q = unit_quat(tape, state);
  Val c0 = rot_column(q, 0);
  Val c1 = rot_column(q, 1);
  Val c2 = rot_column(q, 2);
  // body velocity = R^T v
  Val v_body = concat({dot(c0, vel), dot(c1, vel), dot(c2, vel)});
  return concat({vel, v_body, c0, c1, omega});
}

QuadrotorState quadrotor_step(const QuadrotorParams& p, const QuadrotorState& s,
                              double thrust, const Vec3& omega_des) {
  if (s.rotation.orthonormality_defect() > p.orthonormality_tol ||
      s.rotation.det() < 0.0)
    throw InvalidStateError("quadrotor_step: rotation is not orthonormal");
  Tensor flat = s.flat();
  if (!flat.all_finite()) throw InvalidStateError("quadrotor_step: non-finite state");

  thread_local Tape tape;
  tape.clear();
  Val state = tape.constant(std::move(flat));
  Val action =
      tape.constant(Tensor::vec({thrust, omega_des.x, omega_des.y, omega_des.z}));
  Val next = quadrotor_step(tape, p, state, action);
  return QuadrotorState::from_flat(next.value());
}

}  // namespace apg
