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

#include "apg/cartpole.hpp"

namespace apg {

Val cartpole_step(Tape& tape, const CartPoleParams& p, Val state, Val command) {
  if (!state.value().all_finite() || !command.value().all_finite())
    throw InvalidStateError("cartpole_step: non-finite input");
  if (state.size() != 4) throw ShapeError("cartpole_step: state must be 4-dim");

  const double total_mass = p.cart_mass + p.pole_mass;

  Val x = elem(state, 0);
  Val x_dot = elem(state, 1);
  Val alpha = elem(state, 2);
  Val alpha_dot = elem(state, 3);

  Val force = command * p.force_scale;
  Val sin_a = sin(alpha);
  Val cos_a = cos(alpha);

  // Pole-on-cart equations of motion (force on the cart, pole hinged on
  // top, alpha measured from upright):
  //   a_dd = [g sin a - cos a (F + m_p l a_d^2 sin a) / M]
  //          / [l (4/3 - m_p cos^2 a / M)]
  //   x_dd = (F + m_p l (a_d^2 sin a - a_dd cos a)) / M
  Val temp = (force + p.pole_mass * p.half_length * alpha_dot * alpha_dot * sin_a) /
             total_mass;
  Val denom = p.half_length *
              (4.0 / 3.0 - p.pole_mass / total_mass * cos_a * cos_a);
  Val alpha_dd = (p.gravity * sin_a - cos_a * temp) / denom;
  Val x_dd = (force + p.pole_mass * p.half_length *
                          (alpha_dot * alpha_dot * sin_a - alpha_dd * cos_a)) /
             total_mass;

  // explicit Euler, simultaneous update from current derivatives
  return concat({x + p.dt * x_dot, x_dot + p.dt * x_dd, alpha + p.dt * alpha_dot,
                 alpha_dot + p.dt * alpha_dd});
}

CartPoleState cartpole_step(const CartPoleParams& p, const CartPoleState& s,
                            double command) {
  thread_local Tape tape;
  tape.clear();
  Val state = tape.constant(s.flat());
  Val cmd = tape.constant(command);
  Val next = cartpole_step(tape, p, state, cmd);
  return CartPoleState::from_flat(next.value());
}

}  // namespace apg
