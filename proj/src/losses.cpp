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

#include "apg/losses.hpp"

namespace apg {

namespace {

void check_lengths(size_t states, size_t refs, size_t actions, bool with_actions) {
  if (states == 0) throw ShapeError("horizon loss: empty state sequence");
  if (states != refs) throw ShapeError("horizon loss: states/references length mismatch");
  if (with_actions && states != actions)
    throw ShapeError("horizon loss: states/actions length mismatch");
}

}  // namespace

Val loss_cartpole(Tape& tape, std::span<const Val> states,
                  std::span<const Tensor> refs) {
  check_lengths(states.size(), refs.size(), 0, false);
  Val total = tape.constant(0.0);
  for (size_t k = 0; k < states.size(); ++k) {
    if (states[k].size() != 4 || refs[k].size() != 4)
      throw ShapeError("loss_cartpole: expected 4-dim states and references");
    Val x_dot = elem(states[k], 1);
    Val alpha = elem(states[k], 2);
    Val alpha_dot = elem(states[k], 3);
    Val e_xd = x_dot - refs[k][1];
    Val e_a = alpha - refs[k][2];
    Val e_ad = alpha_dot - refs[k][3];
    total = total + 10.0 * (e_a * e_a) + 3.0 * (e_xd * e_xd) + e_ad * e_ad;
  }
  return total;
}

Val loss_quadrotor(Tape& tape, std::span<const Val> states,
                   std::span<const Val> actions_raw, std::span<const Tensor> refs) {
  check_lengths(states.size(), refs.size(), actions_raw.size(), true);
  Val total = tape.constant(0.0);
  for (size_t k = 0; k < states.size(); ++k) {
    if (states[k].size() != 13) throw ShapeError("loss_quadrotor: bad state width");
    if (refs[k].size() != 6) throw ShapeError("loss_quadrotor: bad reference width");
    if (actions_raw[k].size() != 4) throw ShapeError("loss_quadrotor: bad action width");

    Val pos = slice(states[k], 0, 3);
    Val vel = slice(states[k], 3, 3);
    Val omega = slice(states[k], 10, 3);
    Val ref = tape.constant(refs[k]);
    Val e_p = pos - slice(ref, 0, 3);
    Val e_v = vel - slice(ref, 3, 3);
    Val t_raw = elem(actions_raw[k], 0);
    Val w_raw = slice(actions_raw[k], 1, 3);

    total = total + 10.0 * squared_norm(e_p) + squared_norm(e_v) +
            5.0 * ((t_raw - 0.5) * (t_raw - 0.5)) +
            0.1 * squared_norm(w_raw - 0.5) + 0.1 * squared_norm(omega);
  }
  return total;
}

Val loss_fixedwing(Tape& tape, std::span<const Val> states,
                   std::span<const Val> actions_raw, std::span<const Tensor> refs) {
  check_lengths(states.size(), refs.size(), actions_raw.size(), true);
  Val total = tape.constant(0.0);
  for (size_t k = 0; k < states.size(); ++k) {
    if (states[k].size() != 12) throw ShapeError("loss_fixedwing: bad state width");
    if (refs[k].size() != 3) throw ShapeError("loss_fixedwing: bad reference width");
    if (actions_raw[k].size() != 4) throw ShapeError("loss_fixedwing: bad action width");

    Val pos = slice(states[k], 0, 3);
    Val e_p = pos - tape.constant(refs[k]);
    Val surfaces = slice(actions_raw[k], 1, 3);  // thrust stays unregularized
    total = total + 10.0 * squared_norm(e_p) + 0.1 * squared_norm(surfaces - 0.5);
  }
  return total;
}

}  // namespace apg
