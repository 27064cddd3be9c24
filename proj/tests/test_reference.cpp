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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "apg/reference.hpp"
#include "apg/system.hpp"

using namespace apg;

namespace {

double row_speed(const Tensor& row) {
  return std::sqrt(row[3] * row[3] + row[4] * row[4] + row[5] * row[5]);
}

}  // namespace

TEST_CASE("polynomial: speed cap, feasibility and start at rest") {
  PolynomialOptions opts;
  opts.v_max = 3.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ReferenceTrajectory traj = generate_polynomial(seed, opts);
    REQUIRE(traj.length() == 101);
    CHECK(row_speed(traj.rows.front()) == 0.0);
    for (const Tensor& row : traj.rows) CHECK(row_speed(row) <= opts.v_max + 1e-9);
    // sampled acceleration within the cap (discrete check on the grid)
    for (int t = 0; t + 1 < traj.length(); ++t) {
      double ax = (traj.rows[t + 1][3] - traj.rows[t][3]) / opts.dt;
      double ay = (traj.rows[t + 1][4] - traj.rows[t][4]) / opts.dt;
      double az = (traj.rows[t + 1][5] - traj.rows[t][5]) / opts.dt;
      CHECK(std::sqrt(ax * ax + ay * ay + az * az) <= opts.a_max * 1.05);
    }
  }
}

TEST_CASE("polynomial: stored velocities consistent with positions") {
  PolynomialOptions opts;
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    ReferenceTrajectory traj = generate_polynomial(seed, opts);
    for (int t = 0; t + 1 < traj.length(); ++t) {
      double ex = (traj.rows[t + 1][0] - traj.rows[t][0]) / opts.dt - traj.rows[t][3];
      double ey = (traj.rows[t + 1][1] - traj.rows[t][1]) / opts.dt - traj.rows[t][4];
      double ez = (traj.rows[t + 1][2] - traj.rows[t][2]) / opts.dt - traj.rows[t][5];
      CHECK(std::sqrt(ex * ex + ey * ey + ez * ez) < 0.1 * opts.v_max);
    }
  }
}

TEST_CASE("polynomial: deterministic per seed") {
  PolynomialOptions opts;
  ReferenceTrajectory a = generate_polynomial(7, opts);
  ReferenceTrajectory b = generate_polynomial(7, opts);
  REQUIRE(a.length() == b.length());
  for (int t = 0; t < a.length(); ++t)
    for (int i = 0; i < 6; ++i) CHECK(a.rows[t][i] == b.rows[t][i]);
}

TEST_CASE("polynomial: velocity continuity on a fine grid") {
  // C2 construction: velocity jump across sampled steps bounded by a_max * dt;
  // here probed at the stored grid against interpolation of neighbors.
  PolynomialOptions opts;
  opts.dt = 0.01;  // fine sampling exposes discontinuities directly
  ReferenceTrajectory traj = generate_polynomial(3, opts);
  for (int t = 1; t + 1 < traj.length(); ++t) {
    for (int i = 3; i < 6; ++i) {
      double jump = std::abs(traj.rows[t + 1][i] - traj.rows[t][i]);
      CHECK(jump <= opts.a_max * opts.dt * 1.2 + 1e-9);
    }
  }
}

TEST_CASE("scale_speed: dilates time and scales velocity") {
  PolynomialOptions opts;
  ReferenceTrajectory traj = generate_polynomial(9, opts);
  ReferenceTrajectory half = scale_speed(traj, 0.5);
  REQUIRE(half.length() == traj.length());
  // same start, covers the first half of the path
  for (int i = 0; i < 3; ++i) CHECK(half.rows[0][i] == traj.rows[0][i]);
  CHECK(half.rows[100][0] == doctest::Approx(traj.rows[50][0]).epsilon(1e-9));
  // velocities scale by the fraction
  CHECK(row_speed(half.rows[40]) == doctest::Approx(0.5 * row_speed(traj.rows[20])).epsilon(1e-6));
  // identity at fraction one
  ReferenceTrajectory same = scale_speed(traj, 1.0);
  CHECK(same.rows[33][2] == traj.rows[33][2]);
}

TEST_CASE("cartpole reference: linear interpolation to upright rest") {
  Tensor at_target = Tensor::vec({0.3, 0.0, 0.0, 0.0});
  for (const Tensor& row : cartpole_reference(at_target, 5)) {
    CHECK(row[1] == 0.0);
    CHECK(row[2] == 0.0);
    CHECK(row[3] == 0.0);
  }

  Tensor tilted = Tensor::vec({0.0, 0.4, 0.2, -0.6});
  std::vector<Tensor> rows = cartpole_reference(tilted, 10);
  REQUIRE(rows.size() == 10);
  CHECK(rows[4][2] == doctest::Approx(0.1));   // midpoint of the interpolation
  CHECK(rows[9][1] == 0.0);                    // cart velocity reaches zero
  CHECK(rows[9][2] == 0.0);
  CHECK(rows[9][3] == 0.0);
}

TEST_CASE("fixedwing reference: spacing, clamping, lateral slope") {
  Tensor state = Tensor::vec({0, 0, 0, 11.5, 0, 0, 0, 0, 0, 0, 0, 0});
  Tensor target = Tensor::vec({50.0, 0.0, 0.0});
  std::vector<Tensor> rows = fixedwing_reference(state, target, 10, 0.05);
  CHECK(rows[0][0] == doctest::Approx(0.575).epsilon(1e-12));
  CHECK(rows[0][1] == 0.0);

  // reached target: every row clamps there
  Tensor near = Tensor::vec({49.999, 0, 0, 11.5, 0, 0, 0, 0, 0, 0, 0, 0});
  std::vector<Tensor> clamped = fixedwing_reference(near, target, 10, 0.05);
  CHECK(clamped[5][0] == doctest::Approx(50.0));
  CHECK(clamped[9][0] == doctest::Approx(50.0));

  // constant lateral slope toward an offset target
  Tensor off = Tensor::vec({50.0, 5.0, 0.0});
  std::vector<Tensor> sloped = fixedwing_reference(state, off, 10, 0.05);
  double ratio0 = sloped[0][1] / sloped[0][0];
  double ratio7 = sloped[7][1] / sloped[7][0];
  CHECK(ratio0 == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(ratio7 == doctest::Approx(0.1).epsilon(1e-9));

  CHECK_THROWS_AS(
      fixedwing_reference(Tensor::vec({50, 0, 0, 11.5, 0, 0, 0, 0, 0, 0, 0, 0}),
                          target, 10, 0.05),
      InvalidStateError);
}

namespace {

// stand-in for a trained policy: constant action source
class ConstController : public Controller {
 public:
  explicit ConstController(Tensor action) : action_(std::move(action)) {}
  Tensor act(const System&, const RolloutSpec&, const Tensor&, int,
             double*) override {
    return action_;
  }

 private:
  Tensor action_;
};

ReferenceTrajectory hover_trajectory(int steps) {
  ReferenceTrajectory traj;
  traj.dt = 0.1;
  for (int i = 0; i <= steps; ++i)
    traj.rows.push_back(Tensor::vec({0, 0, 0, 0, 0, 0}));
  return traj;
}

}  // namespace

TEST_CASE("collect_pairs: perfect tracking yields zero resets") {
  QuadrotorSystem sys;
  ReferenceTrajectory traj = hover_trajectory(60);
  RolloutSpec spec;
  spec.trajectory = &traj;
  spec.max_steps = 60;
  ConstController hover(Tensor::vec({9.81, 0, 0, 0}));
  PairDataset ds = collect_pairs(sys, hover, std::span<const RolloutSpec>(&spec, 1),
                                 0.1, 10);
  CHECK(ds.resets == 0);
  CHECK(ds.pairs.size() == 59);
  for (const Pair& pair : ds.pairs) {
    CHECK(sys.divergence(pair.state, traj.row(pair.t)) == doctest::Approx(0.0));
  }
}

TEST_CASE("collect_pairs: divergence beyond the threshold resets onto the reference") {
  QuadrotorSystem sys;
  ReferenceTrajectory traj = hover_trajectory(30);
  RolloutSpec spec;
  spec.trajectory = &traj;
  spec.max_steps = 30;
  ConstController fall(Tensor::vec({2.21, 0, 0, 0}));  // far below hover thrust
  PairDataset ds = collect_pairs(sys, fall, std::span<const RolloutSpec>(&spec, 1),
                                 0.1, 10);
  CHECK(ds.resets > 0);
  // every stored pair sits within tau of its reference row (post-reset
  // states are exactly on it)
  for (const Pair& pair : ds.pairs)
    CHECK(sys.divergence(pair.state, traj.row(pair.t)) <= 0.1 + 1e-12);
}

TEST_CASE("collect_pairs: infinite threshold behaves as a free rollout") {
  QuadrotorSystem sys;
  ReferenceTrajectory traj = hover_trajectory(40);
  RolloutSpec spec;
  spec.trajectory = &traj;
  spec.max_steps = 40;
  ConstController drift(Tensor::vec({10.5, 0.05, 0, 0}));
  PairDataset ds = collect_pairs(sys, drift, std::span<const RolloutSpec>(&spec, 1),
                                 std::numeric_limits<double>::infinity(), 10);
  CHECK(ds.resets == 0);
  CHECK(ds.pairs.size() == 39);  // pair count equals usable trajectory length
}

TEST_CASE("collect_pairs: rollouts start on the reference") {
  QuadrotorSystem sys;
  PolynomialOptions opts;
  ReferenceTrajectory traj = generate_polynomial(21, opts);
  RolloutSpec spec;
  spec.trajectory = &traj;
  spec.max_steps = 20;
  ConstController hover(Tensor::vec({9.81, 0, 0, 0}));
  PairDataset ds = collect_pairs(sys, hover, std::span<const RolloutSpec>(&spec, 1),
                                 0.5, 10);
  REQUIRE(!ds.pairs.empty());
  const Tensor& s0 = ds.pairs.front().state;
  CHECK(s0[0] == traj.rows[0][0]);
  CHECK(s0[3] == traj.rows[0][3]);  // velocity initialized from the reference
}

TEST_CASE("trajectory set: seeded disjoint split") {
  PolynomialOptions opts;
  TrajectorySet set = generate_trajectory_set(3, 30, opts, 0.1);
  CHECK(set.train.size() == 27);
  CHECK(set.test.size() == 3);
  TrajectorySet again = generate_trajectory_set(3, 30, opts, 0.1);
  CHECK(again.train[0].rows[50][0] == set.train[0].rows[50][0]);
}
