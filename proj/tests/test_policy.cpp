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

#include "apg/policy.hpp"
#include "apg/random.hpp"
#include "support/finite_diff.hpp"

using namespace apg;
using apg::testing::fd_gradient;
using apg::testing::grad_matches;

namespace {

void zero_params(PolicyParameters& p) {
  std::vector<double> flat(p.param_count(), 0.0);
  p.import_flat(flat);
}

ReferenceTrajectory line_trajectory(int n) {
  ReferenceTrajectory traj;
  traj.dt = 0.1;
  for (int i = 0; i < n; ++i)
    traj.rows.push_back(Tensor::vec({0.3 * i, 0.1 * i, -0.05 * i, 3, 1, -0.5}));
  return traj;
}

PolicyOutput forward_quad(Tape& tape, const QuadrotorSystem& sys,
                          const PolicyParameters& policy, const RolloutSpec& spec,
                          const Tensor& state) {
  PolicyNodes nodes = bind_policy(tape, policy, false);
  Val s = tape.constant(state);
  Val obs = sys.observe(tape, s);
  Val feat = sys.reference_features(tape, spec, s, 0, policy.ref_rows);
  return policy_forward(tape, nodes, obs, feat);
}

}  // namespace

TEST_CASE("cartpole policy: zero weights give zero commands, tanh bounds hold") {
  CartPoleSystem sys;
  PolicyParameters p = make_policy(sys, 10, 1);
  REQUIRE(p.trunk.size() == 5);  // 32-64-64-32-10 stack
  CHECK(p.trunk[0].out == 32);
  CHECK(p.trunk[4].out == 10);

  zero_params(p);
  Tape tape;
  PolicyNodes nodes = bind_policy(tape, p, false);
  Val obs = tape.constant(Tensor::vec({0.3, -0.2, 0.1, 0.4}));
  PolicyOutput out = policy_forward(tape, nodes, obs, Val{});
  REQUIRE(out.scaled.size() == 10);
  for (int i = 0; i < 10; ++i) CHECK(out.scaled.value()[i] == 0.0);

  // random weights, extreme inputs: strictly inside [-1, 1]
  PolicyParameters q = make_policy(sys, 10, 3);
  RandomStream rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    Tape t2;
    PolicyNodes n2 = bind_policy(t2, q, false);
    Val o = t2.constant(Tensor::vec({rng.uniform(-5, 5), rng.uniform(-5, 5),
                                     rng.uniform(-3, 3), rng.uniform(-8, 8)}));
    PolicyOutput y = policy_forward(t2, n2, o, Val{});
    for (int i = 0; i < 10; ++i) {
      CHECK(y.scaled.value()[i] > -1.0);
      CHECK(y.scaled.value()[i] < 1.0);
    }
  }
}

TEST_CASE("quadrotor policy: zero weights center the action range") {
  QuadrotorSystem sys;
  PolicyParameters p = make_policy(sys, 10, 1);
  zero_params(p);
  ReferenceTrajectory traj = line_trajectory(30);
  RolloutSpec spec;
  spec.trajectory = &traj;
  spec.max_steps = 20;
  Tape tape;
  PolicyOutput out = forward_quad(tape, sys, p, spec, sys.initial_state(spec));
  REQUIRE(out.scaled.size() == 40);
  for (int k = 0; k < 10; ++k) {
    // sigmoid(0) = 0.5: thrust at the midpoint of [2.21, 17.31]
    CHECK(out.raw.value()[4 * k] == doctest::Approx(0.5));
    CHECK(out.scaled.value()[4 * k] == doctest::Approx(9.76).epsilon(1e-12));
    for (int d = 1; d < 4; ++d)
      CHECK(out.scaled.value()[4 * k + d] == doctest::Approx(0.0));
  }
}

TEST_CASE("quadrotor policy: bounds hold for random weights and inputs") {
  QuadrotorSystem sys;
  PolicyParameters p = make_policy(sys, 10, 9);
  ReferenceTrajectory traj = line_trajectory(30);
  RolloutSpec spec;
  spec.trajectory = &traj;
  spec.max_steps = 20;
  RandomStream rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    Quat q{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    q = q.normalized();
    Tensor state = Tensor::vec({rng.uniform(-3, 3), rng.uniform(-3, 3),
                                rng.uniform(-3, 3), rng.uniform(-4, 4),
                                rng.uniform(-4, 4), rng.uniform(-4, 4), q.w, q.x,
                                q.y, q.z, rng.uniform(-0.5, 0.5),
                                rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)});
    Tape tape;
    PolicyOutput out = forward_quad(tape, sys, p, spec, state);
    for (int k = 0; k < 10; ++k) {
      double thrust = out.scaled.value()[4 * k];
      CHECK(thrust >= 2.21);
      CHECK(thrust <= 17.31);
      for (int d = 1; d < 4; ++d) {
        CHECK(out.scaled.value()[4 * k + d] >= -0.5);
        CHECK(out.scaled.value()[4 * k + d] <= 0.5);
      }
    }
  }
}

TEST_CASE("quadrotor policy: reference window has ref_rows rows") {
  QuadrotorSystem sys;
  PolicyParameters p = make_policy(sys, 10, 2);
  CHECK(p.ref_rows == 10);
  CHECK(sys.reference_feature_dim(p.ref_rows) == 60);
  // short horizons keep at least the convolution's kernel width
  PolicyParameters p1 = make_policy(sys, 1, 2);
  CHECK(p1.ref_rows == 3);
  ReferenceTrajectory traj = line_trajectory(30);
  RolloutSpec spec;
  spec.trajectory = &traj;
  spec.max_steps = 20;
  Tape tape;
  Val s = tape.constant(sys.initial_state(spec));
  Val feat = sys.reference_features(tape, spec, s, 0, p.ref_rows);
  CHECK(feat.size() == 60);
}

TEST_CASE("fixedwing policy: zero weights center thrust, surfaces stay bounded") {
  FixedWingSystem sys;
  PolicyParameters p = make_policy(sys, 10, 1);
  p.normalizer.identity = false;
  p.normalizer.mean.assign(12, 0.0);
  p.normalizer.stddev.assign(12, 1.0);
  zero_params(p);

  RolloutSpec spec;
  spec.target = Tensor::vec({50.0, 2.0, -1.0});
  spec.max_steps = 100;
  Tape tape;
  PolicyNodes nodes = bind_policy(tape, p, false);
  Val s = tape.constant(sys.initial_state(spec));
  Val obs = sys.observe(tape, s);
  Val feat = sys.reference_features(tape, spec, s, 0, p.ref_rows);
  PolicyOutput out = policy_forward(tape, nodes, obs, feat);
  CHECK(out.scaled.value()[0] == doctest::Approx(3.5).epsilon(1e-12));
  for (int d = 1; d < 4; ++d)
    CHECK(out.scaled.value()[d] == doctest::Approx(0.0).epsilon(1e-12));

  // aileron bound: 2.5 degrees
  PolicyParameters q = make_policy(sys, 10, 8);
  q.normalizer = p.normalizer;
  RandomStream rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    Tape t2;
    PolicyNodes n2 = bind_policy(t2, q, false);
    Tensor st(12, 1);
    for (int i = 0; i < 12; ++i) st[i] = rng.uniform(-6, 6);
    st[3] = rng.uniform(8, 14);
    Val sv = t2.constant(st);
    PolicyOutput y = policy_forward(t2, n2, sys.observe(t2, sv),
                                    sys.reference_features(t2, spec, sv, 0, q.ref_rows));
    for (int k = 0; k < 10; ++k) {
      double aileron = y.scaled.value()[4 * k + 2];
      CHECK(std::abs(aileron) <= 2.5 * 3.14159265358979 / 180.0 + 1e-12);
    }
  }
}

TEST_CASE("fixedwing policy: missing normalizer is rejected, mean maps to zero") {
  FixedWingSystem sys;
  std::vector<Tensor> states;
  RandomStream rng(7);
  for (int i = 0; i < 1200; ++i) {
    Tensor s(12, 1);
    for (int j = 0; j < 12; ++j) s[j] = rng.uniform(-2, 2) + j;
    states.push_back(s);
  }
  Normalizer n = fit_normalizer(states);
  REQUIRE(!n.identity);

  // normalizing the collection dataset itself: component-wise mean 0
  std::vector<double> sums(12, 0.0);
  Tape tape;
  for (const Tensor& s : states) {
    Val z = apply_normalizer(tape, n, tape.constant(s));
    for (int j = 0; j < 12; ++j) sums[static_cast<size_t>(j)] += z.value()[j];
  }
  for (double s : sums) CHECK(std::abs(s / 1200.0) < 1e-9);

  // the dataset mean itself maps exactly to the zero vector
  Tape t2;
  Val z = apply_normalizer(t2, n, t2.constant(Tensor::from(n.mean)));
  for (int j = 0; j < 12; ++j) CHECK(z.value()[j] == 0.0);
}

TEST_CASE("normalizer: floor, symmetric data, and guards") {
  std::vector<Tensor> constant(1500, Tensor::vec({2.0, -3.0}));
  Normalizer n = fit_normalizer(constant);
  CHECK(n.stddev[0] == doctest::Approx(1e-6));
  Tape tape;
  Val z = apply_normalizer(tape, n, tape.constant(Tensor::vec({2.0, -3.0})));
  CHECK(z.value()[0] == 0.0);
  CHECK(z.value()[1] == 0.0);

  std::vector<Tensor> pm;
  for (int i = 0; i < 1000; ++i)
    pm.push_back(Tensor::vec({i % 2 == 0 ? -1.0 : 1.0}));
  Normalizer n2 = fit_normalizer(pm);
  CHECK(n2.mean[0] == doctest::Approx(0.0));
  CHECK(n2.stddev[0] == doctest::Approx(1.0));

  std::vector<Tensor> empty;
  CHECK_THROWS_AS(fit_normalizer(empty), ConfigError);
  std::vector<Tensor> few(10, Tensor::vec({1.0}));
  CHECK_THROWS_AS(fit_normalizer(few), ConfigError);
}

TEST_CASE("initialization: deterministic, fan-in guard, near-midpoint outputs") {
  QuadrotorSystem sys;
  PolicyParameters a = make_policy(sys, 10, 123);
  PolicyParameters b = make_policy(sys, 10, 123);
  std::vector<double> fa = a.export_flat(), fb = b.export_flat();
  REQUIRE(fa.size() == fb.size());
  for (size_t i = 0; i < fa.size(); ++i) CHECK(fa[i] == fb[i]);

  Dense bad;
  bad.in = 0;
  bad.out = 4;
  RandomStream rng(1);
  CHECK_THROWS_AS(init_dense(bad, rng), ConfigError);

  // freshly initialized policy at hover: thrust within 0.5 N of midpoint
  ReferenceTrajectory traj;
  traj.dt = 0.1;
  for (int i = 0; i < 20; ++i) traj.rows.push_back(Tensor::zeros(6));
  RolloutSpec spec;
  spec.trajectory = &traj;
  spec.max_steps = 15;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    PolicyParameters p = make_policy(sys, 10, seed);
    Tape tape;
    PolicyOutput out = forward_quad(tape, sys, p, spec, sys.initial_state(spec));
    for (int k = 0; k < 10; ++k)
      CHECK(std::abs(out.scaled.value()[4 * k] - 9.76) < 0.5);
  }
}

TEST_CASE("policy gradients match finite differences") {
  QuadrotorSystem sys;
  PolicyParameters policy = make_policy(sys, 10, 31);
  ReferenceTrajectory traj = line_trajectory(30);
  RolloutSpec spec;
  spec.trajectory = &traj;
  spec.max_steps = 20;
  Tensor state = sys.initial_state(spec);

  // scalar probe: sum of all scaled outputs
  auto value_at = [&](const std::vector<double>& flat) {
    PolicyParameters p = policy;
    p.import_flat(flat);
    Tape tape;
    PolicyOutput out = forward_quad(tape, sys, p, spec, state);
    return sum(out.scaled).scalar();
  };

  Tape tape;
  PolicyNodes nodes = bind_policy(tape, policy, true);
  Val s = tape.constant(state);
  PolicyOutput out = policy_forward(tape, nodes, sys.observe(tape, s),
                                    sys.reference_features(tape, spec, s, 0,
                                                           policy.ref_rows));
  Adjoints adj = tape.backward(sum(out.scaled));
  std::vector<double> analytic;
  auto push = [&](const std::vector<DenseNodes>& layers) {
    for (const DenseNodes& l : layers) {
      for (double g : adj.of(l.weights).data) analytic.push_back(g);
      for (double g : adj.of(l.bias).data) analytic.push_back(g);
    }
  };
  push(nodes.state_branch);
  push(nodes.ref_branch);
  push(nodes.trunk);

  // probe 60 random parameters with central differences
  std::vector<double> flat = policy.export_flat();
  RandomStream rng(17);
  for (int probe = 0; probe < 60; ++probe) {
    size_t i = static_cast<size_t>(rng.integer(flat.size()));
    double saved = flat[i];
    const double h = 1e-5;
    flat[i] = saved + h;
    double fp = value_at(flat);
    flat[i] = saved - h;
    double fm = value_at(flat);
    flat[i] = saved;
    double numeric = (fp - fm) / (2.0 * h);
    CHECK_MESSAGE(grad_matches(analytic[i], numeric), "parameter " << i);
  }
}
