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

// Reference trajectory generation and state-reference pair collection.

#ifndef APG_REFERENCE_HPP_
#define APG_REFERENCE_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "apg/tensor.hpp"

namespace apg {

class System;
class Controller;

// Time-indexed desired states. Rows are [px, py, pz, vx, vy, vz].
struct ReferenceTrajectory {
  double dt = 0.1;
  std::vector<Tensor> rows;

  int length() const { return static_cast<int>(rows.size()); }
  // row with hold-last padding past the end (velocity zeroed there)
  Tensor row(int t) const;
};

struct PolynomialOptions {
  double duration_s = 10.0;
  double dt = 0.1;
  double v_max = 3.0;        // m/s; feasible range is [3, 5]
  double a_max = 5.0;        // m/s^2
  int waypoints = 5;
  double cube_half = 5.0;    // waypoints drawn from a 10 m cube
  int max_rescale_iters = 5;
  int max_retries = 20;
};

// Piecewise-quintic polynomial through random waypoints, C2-continuous
// at the joins, spatially rescaled until both the velocity and
// acceleration caps hold. Deterministic for a fixed seed.
ReferenceTrajectory generate_polynomial(std::uint64_t seed,
                                        const PolynomialOptions& opts);

// Same trajectory traversed at `fraction` of its speed: samples the
// prefix [0, fraction * duration] over the full duration.
ReferenceTrajectory scale_speed(const ReferenceTrajectory& traj, double fraction);

// Linear interpolation from the current CartPole state to the upright
// rest target over k steps. Rows are [x, x_dot, alpha, alpha_dot] with
// the position column unconstrained (kept at the current value).
std::vector<Tensor> cartpole_reference(const Tensor& state, int k);

// k equally spaced positions from the current position toward the
// target at the current speed, clamped at the target.
std::vector<Tensor> fixedwing_reference(const Tensor& state, const Tensor& target,
                                        int k, double dt);

// What one rollout tracks: a trajectory (quadrotor), a target point
// (fixed-wing), or just a start state (CartPole).
struct RolloutSpec {
  const ReferenceTrajectory* trajectory = nullptr;
  Tensor target;
  Tensor start_state;
  int max_steps = 0;
};

// One training example: the visited state plus where on its rollout it
// was seen, so reference windows can be sliced on demand.
struct Pair {
  Tensor state;
  int spec_index = 0;
  int t = 0;
};

struct PairDataset {
  std::vector<Pair> pairs;
  int resets = 0;
  int steps = 0;  // simulator steps spent collecting
};

// Rolls the controller through each spec, storing every visited
// (state, t) pair; whenever the divergence from the next reference row
// exceeds tau_div the state is reset onto the reference. `horizon`
// caps the last usable pair start so a full loss window exists.
PairDataset collect_pairs(const System& system, Controller& controller,
                          std::span<const RolloutSpec> specs, double tau_div,
                          int horizon, int max_pairs = 0);

// Split bookkeeping for a generated trajectory set.
struct TrajectorySet {
  std::vector<ReferenceTrajectory> train;
  std::vector<ReferenceTrajectory> test;
  std::uint64_t seed = 0;
};

TrajectorySet generate_trajectory_set(std::uint64_t seed, int count,
                                      const PolynomialOptions& opts,
                                      double test_fraction = 0.1);

}  // namespace apg

#endif  // APG_REFERENCE_HPP_
