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
#include <vector>

#include "apg/random.hpp"
#include "apg/system.hpp"
#include "support/finite_diff.hpp"

using namespace apg;
using apg::testing::fd_jacobian;
using apg::testing::grad_matches;

namespace {

// Full step Jacobian w.r.t. [state; action] via one backward pass per
// output component, compared against the finite-difference oracle.
void check_step_jacobian(const System& sys, const Tensor& state,
                         const Tensor& action) {
  const int sd = sys.state_dim();
  const int ad = sys.action_dim();

  auto flat_step = [&](const std::vector<double>& q) {
    Tensor s(sd, 1), a(ad, 1);
    for (int i = 0; i < sd; ++i) s[i] = q[static_cast<size_t>(i)];
    for (int i = 0; i < ad; ++i) a[i] = q[static_cast<size_t>(sd + i)];
    Tensor out = step_plain(sys, s, a);
    return std::vector<double>(out.data.begin(), out.data.end());
  };

  std::vector<double> q(static_cast<size_t>(sd + ad));
  for (int i = 0; i < sd; ++i) q[static_cast<size_t>(i)] = state[i];
  for (int i = 0; i < ad; ++i) q[static_cast<size_t>(sd + i)] = action[i];
  auto numeric = fd_jacobian(flat_step, q);

  Tape tape;
  Val s = tape.variable(state);
  Val a = tape.variable(action);
  Val next = sys.step(tape, s, a);
  for (int j = 0; j < sd; ++j) {
    Adjoints adj = tape.backward(elem(next, j));
    for (int i = 0; i < sd; ++i)
      CHECK_MESSAGE(grad_matches(adj.of(s)[i], numeric[static_cast<size_t>(j)][static_cast<size_t>(i)]),
                    "d state[" << j << "]/d state[" << i << "]");
    for (int i = 0; i < ad; ++i)
      CHECK_MESSAGE(
          grad_matches(adj.of(a)[i], numeric[static_cast<size_t>(j)][static_cast<size_t>(sd + i)]),
          "d state[" << j << "]/d action[" << i << "]");
  }
}

Tensor random_quad_state(RandomStream& rng) {
  Quat q{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
  q = q.normalized();
  return Tensor::vec({rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2),
                      rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2),
                      q.w, q.x, q.y, q.z, rng.uniform(-0.4, 0.4),
                      rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4)});
}

Tensor random_fw_state(RandomStream& rng) {
  return Tensor::vec({rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5),
                      rng.uniform(9, 14), rng.uniform(-1, 1), rng.uniform(-1, 1),
                      rng.uniform(-0.4, 0.4), rng.uniform(-0.3, 0.3),
                      rng.uniform(-3.1, 3.1), rng.uniform(-0.5, 0.5),
                      rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)});
}

Tensor random_action(const System& sys, RandomStream& rng) {
  const ActionScaling& sc = sys.action_scaling();
  Tensor a(sys.action_dim(), 1);
  for (int i = 0; i < a.size(); ++i)
    a[i] = rng.uniform(sc.lo[static_cast<size_t>(i)], sc.hi[static_cast<size_t>(i)]);
  return a;
}

}  // namespace

// ---- CartPole -----------------------------------------------------------

TEST_CASE("cartpole: upright rest is a fixed point") {
  CartPoleParams p;
  CartPoleState s;
  CartPoleState next = cartpole_step(p, s, 0.0);
  CHECK(next.x == 0.0);
  CHECK(next.x_dot == 0.0);
  CHECK(next.alpha == 0.0);
  CHECK(next.alpha_dot == 0.0);
}

TEST_CASE("cartpole: tilted pole falls further") {
  CartPoleParams p;
  CartPoleState s;
  s.alpha = 0.1;
  // closed form at alpha = 0.1, zero command, zero rates
  double total = p.cart_mass + p.pole_mass;
  double expected_add =
      (p.gravity * std::sin(0.1) - std::cos(0.1) * 0.0 / total) /
      (p.half_length * (4.0 / 3.0 - p.pole_mass * std::cos(0.1) * std::cos(0.1) / total));
  CHECK(expected_add > 0.0);
  CartPoleState next = cartpole_step(p, s, 0.0);
  CHECK(next.alpha_dot == doctest::Approx(p.dt * expected_add));
  CHECK(next.alpha_dot > 0.0);
}

TEST_CASE("cartpole: closed-form accelerations at full push") {
  CartPoleParams p;
  // independent evaluation of the equations of motion at alpha = 0
  double total = p.cart_mass + p.pole_mass;
  double force = p.force_scale;
  double alpha_dd =
      (0.0 - 1.0 * force / total) /
      (p.half_length * (4.0 / 3.0 - p.pole_mass / total));
  double x_dd = (force + p.pole_mass * p.half_length * (0.0 - alpha_dd)) / total;

  CartPoleState next = cartpole_step(p, CartPoleState{}, 1.0);
  CHECK(next.x_dot == doctest::Approx(p.dt * x_dd).epsilon(1e-12));
  CHECK(next.alpha_dot == doctest::Approx(p.dt * alpha_dd).epsilon(1e-12));
}

TEST_CASE("cartpole: non-finite input rejected") {
  CartPoleParams p;
  CartPoleState s;
  s.x_dot = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(cartpole_step(p, s, 0.0), InvalidStateError);
}

TEST_CASE("cartpole: step Jacobians match finite differences") {
  CartPoleSystem sys;
  RandomStream rng(11);
  for (int i = 0; i < 100; ++i) {
    Tensor s = Tensor::vec({rng.uniform(-1, 1), rng.uniform(-1, 1),
                            rng.uniform(-0.5, 0.5), rng.uniform(-1, 1)});
    check_step_jacobian(sys, s, random_action(sys, rng));
  }
}

// ---- Quadrotor ----------------------------------------------------------

TEST_CASE("quadrotor: hover is an exact equilibrium") {
  QuadrotorParams p;
  QuadrotorState s;  // identity attitude, everything at rest
  QuadrotorState next = quadrotor_step(p, s, 9.81, Vec3{});
  CHECK(next.position.x == 0.0);
  CHECK(next.position.y == 0.0);
  CHECK(next.position.z == 0.0);
  CHECK(next.velocity.norm() == 0.0);
  CHECK(next.angular_velocity.norm() == 0.0);
}

TEST_CASE("quadrotor: free fall and max-thrust climb") {
  QuadrotorParams p;
  QuadrotorState s;
  QuadrotorState fall = quadrotor_step(p, s, 0.0, Vec3{});
  CHECK(fall.velocity.z == doctest::Approx(-0.981).epsilon(1e-12));

  QuadrotorState climb = quadrotor_step(p, s, 17.31, Vec3{});
  CHECK(climb.velocity.z / p.dt == doctest::Approx(7.5).epsilon(1e-12));
}

TEST_CASE("quadrotor: non-orthonormal rotation rejected") {
  QuadrotorParams p;
  QuadrotorState s;
  s.rotation.at(0, 0) = 1.1;
  CHECK_THROWS_AS(quadrotor_step(p, s, 9.81, Vec3{}), InvalidStateError);
}

TEST_CASE("quadrotor: rotation stays orthonormal over 1000 bounded steps") {
  QuadrotorParams p;
  QuadrotorSystem sys(p);
  RandomStream rng(5);
  Tensor state = QuadrotorState{}.flat();
  for (int t = 0; t < 1000; ++t)
    state = step_plain(sys, state, random_action(sys, rng));
  REQUIRE(state.all_finite());
  QuadrotorState s = QuadrotorState::from_flat(state);
  CHECK(s.rotation.orthonormality_defect() < 1e-6);
  CHECK(s.rotation.det() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("quadrotor: step Jacobians match finite differences") {
  QuadrotorSystem sys;
  RandomStream rng(12);
  for (int i = 0; i < 100; ++i)
    check_step_jacobian(sys, random_quad_state(rng), random_action(sys, rng));
}

TEST_CASE("quadrotor: observation layout and body velocity") {
  Tape tape;
  RandomStream rng(3);
  Tensor state = random_quad_state(rng);
  Val obs = quadrotor_observe(tape, tape.constant(state));
  REQUIRE(obs.size() == 15);
  QuadrotorState s = QuadrotorState::from_flat(state);
  // world velocity block
  CHECK(obs.value()[0] == doctest::Approx(s.velocity.x));
  // body velocity = R^T v
  Vec3 vb{dot(s.rotation.col(0), s.velocity), dot(s.rotation.col(1), s.velocity),
          dot(s.rotation.col(2), s.velocity)};
  CHECK(obs.value()[3] == doctest::Approx(vb.x).epsilon(1e-9));
  CHECK(obs.value()[4] == doctest::Approx(vb.y).epsilon(1e-9));
  CHECK(obs.value()[5] == doctest::Approx(vb.z).epsilon(1e-9));
  // first two rotation columns
  CHECK(obs.value()[6] == doctest::Approx(s.rotation.at(0, 0)).epsilon(1e-9));
  CHECK(obs.value()[9] == doctest::Approx(s.rotation.at(0, 1)).epsilon(1e-9));
  // angular velocity
  CHECK(obs.value()[12] == doctest::Approx(s.angular_velocity.x));
}

// ---- Fixed-wing ---------------------------------------------------------

namespace {

// Trim oracle: Newton iteration (finite-difference Jacobian) for
// (alpha, elevator, thrust) such that u_dot = w_dot = q_dot = 0 in
// level flight at the given airspeed.
struct Trim {
  double alpha, elevator, thrust;
  FixedWingState state;
};

Trim find_trim(const FixedWingParams& p, double airspeed) {
  auto residual = [&](double alpha, double elev, double thrust) {
    FixedWingState s;
    s.body_velocity = {airspeed * std::cos(alpha), 0.0, airspeed * std::sin(alpha)};
    s.attitude = {0.0, alpha, 0.0};
    FixedWingState n = fixedwing_step(p, s, thrust, elev, 0.0, 0.0);
    return std::array<double, 3>{(n.body_velocity.x - s.body_velocity.x) / p.dt,
                                 (n.body_velocity.z - s.body_velocity.z) / p.dt,
                                 (n.body_rates.y - s.body_rates.y) / p.dt};
  };

  double x[3] = {0.02, 0.0, 1.0};
  for (int iter = 0; iter < 50; ++iter) {
    auto r = residual(x[0], x[1], x[2]);
    double mag = std::abs(r[0]) + std::abs(r[1]) + std::abs(r[2]);
    if (mag < 1e-10) break;
    // finite-difference Jacobian
    double jac[3][3];
    const double h = 1e-6;
    for (int c = 0; c < 3; ++c) {
      double xs[3] = {x[0], x[1], x[2]};
      xs[c] += h;
      auto rp = residual(xs[0], xs[1], xs[2]);
      for (int rr = 0; rr < 3; ++rr) jac[rr][c] = (rp[static_cast<size_t>(rr)] - r[static_cast<size_t>(rr)]) / h;
    }
    // solve jac * dx = -r (Cramer)
    double det = jac[0][0] * (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1]) -
                 jac[0][1] * (jac[1][0] * jac[2][2] - jac[1][2] * jac[2][0]) +
                 jac[0][2] * (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0]);
    REQUIRE(std::abs(det) > 1e-12);
    double b[3] = {-r[0], -r[1], -r[2]};
    auto solve_col = [&](int col) {
      double m[3][3];
      for (int rr = 0; rr < 3; ++rr)
        for (int cc = 0; cc < 3; ++cc) m[rr][cc] = (cc == col) ? b[rr] : jac[rr][cc];
      return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
              m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
              m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])) /
             det;
    };
    x[0] += solve_col(0);
    x[1] += solve_col(1);
    x[2] += solve_col(2);
  }

  Trim t;
  t.alpha = x[0];
  t.elevator = x[1];
  t.thrust = x[2];
  t.state.body_velocity = {airspeed * std::cos(x[0]), 0.0, airspeed * std::sin(x[0])};
  t.state.attitude = {0.0, x[0], 0.0};
  return t;
}

}  // namespace

TEST_CASE("fixedwing: trimmed flight holds pitch and altitude") {
  FixedWingParams p;
  Trim trim = find_trim(p, p.cruise_speed);
  CHECK(trim.thrust > 0.0);
  CHECK(trim.thrust < p.thrust_max);
  CHECK(std::abs(trim.elevator) < p.elevator_max);

  FixedWingState next =
      fixedwing_step(p, trim.state, trim.thrust, trim.elevator, 0.0, 0.0);
  CHECK(std::abs(next.attitude.y - trim.state.attitude.y) < 1e-3);
  CHECK(std::abs(next.position.z - trim.state.position.z) < 1e-3);
}

TEST_CASE("fixedwing: zero thrust bleeds airspeed") {
  FixedWingParams p;
  Trim trim = find_trim(p, p.cruise_speed);
  FixedWingState s = trim.state;
  double prev = s.body_velocity.norm();
  for (int t = 0; t < 20; ++t) {
    s = fixedwing_step(p, s, 0.0, trim.elevator, 0.0, 0.0);
    double va = s.body_velocity.norm();
    CHECK(va < prev);
    prev = va;
  }
}

TEST_CASE("fixedwing: elevator sign follows the configured moment slope") {
  FixedWingParams p;
  Trim trim = find_trim(p, p.cruise_speed);
  FixedWingState next =
      fixedwing_step(p, trim.state, trim.thrust, trim.elevator + 0.1, 0.0, 0.0);
  double dq = next.body_rates.y - trim.state.body_rates.y;
  CHECK(dq * p.Cm_delta_e > 0.0);
}

TEST_CASE("fixedwing: stall floor rejected") {
  FixedWingParams p;
  FixedWingState s;
  s.body_velocity = {0.01, 0.0, 0.0};
  CHECK_THROWS_AS(fixedwing_step(p, s, 1.0, 0.0, 0.0, 0.0), InvalidStateError);
}

TEST_CASE("fixedwing: step Jacobians match finite differences") {
  FixedWingSystem sys;
  RandomStream rng(13);
  for (int i = 0; i < 100; ++i)
    check_step_jacobian(sys, random_fw_state(rng), random_action(sys, rng));
}

// ---- drag perturbation --------------------------------------------------

TEST_CASE("drag: zero rate is bitwise identical to the base step") {
  QuadrotorSystem base;
  DragPerturbedSystem dragged(base, 0.0);
  RandomStream rng(17);
  Tensor s = random_quad_state(rng);
  Tensor a = random_action(base, rng);
  Tensor n0 = step_plain(base, s, a);
  Tensor n1 = step_plain(dragged, s, a);
  REQUIRE(n0.size() == n1.size());
  for (int i = 0; i < n0.size(); ++i) CHECK(n0[i] == n1[i]);
}

TEST_CASE("drag: at rest the drag force vanishes") {
  QuadrotorSystem base;
  DragPerturbedSystem dragged(base, 0.3);
  Tensor s = QuadrotorState{}.flat();
  Tensor a = Tensor::vec({9.81, 0.0, 0.0, 0.0});
  Tensor n0 = step_plain(base, s, a);
  Tensor n1 = step_plain(dragged, s, a);
  for (int i = 0; i < n0.size(); ++i) CHECK(n0[i] == n1[i]);
}

TEST_CASE("drag: analytic velocity reduction") {
  QuadrotorSystem base;
  DragPerturbedSystem dragged(base, 0.3);
  QuadrotorState qs;
  qs.velocity = {1.0, 0.0, 0.0};
  Tensor s = qs.flat();
  Tensor a = Tensor::vec({9.81, 0.0, 0.0, 0.0});
  Tensor n0 = step_plain(base, s, a);
  Tensor n1 = step_plain(dragged, s, a);
  CHECK(n0[3] - n1[3] == doctest::Approx(0.3 * 1.0 * 0.1).epsilon(1e-12));
  CHECK(n0[4] == n1[4]);
}

TEST_CASE("drag: negative rate and cartpole base rejected") {
  QuadrotorSystem quad;
  CHECK_THROWS_AS(DragPerturbedSystem(quad, -0.1), ConfigError);
  CartPoleSystem cp;
  CHECK_THROWS_AS(DragPerturbedSystem(cp, 0.3), ConfigError);
}
