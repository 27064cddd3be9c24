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

// Pole-on-cart dynamics with continuous force commands, differentiable
// through the gradient tape.

#ifndef APG_CARTPOLE_HPP_
#define APG_CARTPOLE_HPP_

#include "apg/tape.hpp"
#include "apg/tensor.hpp"

namespace apg {

struct CartPoleParams {
  double cart_mass = 1.0;    // kg
  double pole_mass = 0.1;    // kg
  double half_length = 0.5;  // m
  double gravity = 9.81;     // m/s^2
  double force_scale = 30.0; // N per unit command
  double dt = 0.05;          // s
};

// Flat layout: [x, x_dot, alpha, alpha_dot]; alpha = 0 is upright.
struct CartPoleState {
  double x = 0.0;
  double x_dot = 0.0;
  double alpha = 0.0;
  double alpha_dot = 0.0;

  Tensor flat() const { return Tensor::vec({x, x_dot, alpha, alpha_dot}); }
  static CartPoleState from_flat(const Tensor& t) {
    return {t[0], t[1], t[2], t[3]};
  }
};

// One Euler step on the tape. `command` is the scalar force command in
// [-1, 1]; differentiable with respect to state and command.
Val cartpole_step(Tape& tape, const CartPoleParams& p, Val state, Val command);

// Plain-value convenience wrapper (runs on a scratch tape so the
// arithmetic path is identical to training). Validates finiteness.
CartPoleState cartpole_step(const CartPoleParams& p, const CartPoleState& s,
                            double command);

}  // namespace apg

#endif  // APG_CARTPOLE_HPP_
