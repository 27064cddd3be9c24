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

// Per-system weighted tracking losses, summed over the horizon. The
// weights mirror the cost used by the online-optimization baseline.

#ifndef APG_LOSSES_HPP_
#define APG_LOSSES_HPP_

#include <span>

#include "apg/tape.hpp"
#include "apg/tensor.hpp"

namespace apg {

// Weighted MSE on (angle: 10, cart velocity: 3, angular velocity: 1);
// the cart position is unconstrained. refs rows are state-shaped.
Val loss_cartpole(Tape& tape, std::span<const Val> states,
                  std::span<const Tensor> refs);

// Sum over the horizon of
//   10 |p - p_ref|^2 + |v - v_ref|^2 + 5 (T_raw - 0.5)^2
//   + 0.1 |w_raw - 0.5|^2 + 0.1 |w|^2
// with raw actions in [0, 1] (post-sigmoid, pre-rescale).
Val loss_quadrotor(Tape& tape, std::span<const Val> states,
                   std::span<const Val> actions_raw, std::span<const Tensor> refs);

// Sum over the horizon of 10 |p - p_ref|^2 plus 0.1 (a_i - 0.5)^2 for
// the three control surfaces; thrust is unregularized.
Val loss_fixedwing(Tape& tape, std::span<const Val> states,
                   std::span<const Val> actions_raw, std::span<const Tensor> refs);

}  // namespace apg

#endif  // APG_LOSSES_HPP_
