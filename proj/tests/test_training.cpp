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

#include "apg/losses.hpp"
#include "apg/training.hpp"

using namespace apg;

namespace {

Tensor quad_state_at(double px) {
  return Tensor::vec({px, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0});
}

Tensor zeros6() { return Tensor::zeros(6); }

}  // namespace

// ---- losses ---------------------------------------------------------------

TEST_CASE("quadrotor loss: zero at perfect tracking with centered actions") {
  Tape t;
  std::vector<Val> states = {t.constant(quad_state_at(0.0))};
  std::vector<Val> raw = {t.constant(Tensor::vec({0.5, 0.5, 0.5, 0.5}))};
  std::vector<Tensor> refs = {zeros6()};
  CHECK(loss_quadrotor(t, states, raw, refs).scalar() == 0.0);
}

TEST_CASE("quadrotor loss: single position term and quadratic scaling") {
  Tape t;
  std::vector<Val> raw = {t.constant(Tensor::vec({0.5, 0.5, 0.5, 0.5}))};
  std::vector<Tensor> refs = {zeros6()};

  std::vector<Val> off1 = {t.constant(quad_state_at(0.1))};
  double l1 = loss_quadrotor(t, off1, raw, refs).scalar();
  CHECK(l1 == doctest::Approx(0.1).epsilon(1e-12));

  std::vector<Val> off2 = {t.constant(quad_state_at(0.2))};
  double l2 = loss_quadrotor(t, off2, raw, refs).scalar();
  CHECK(l2 == doctest::Approx(4.0 * l1).epsilon(1e-12));
}

TEST_CASE("quadrotor loss: action regularizers and angular velocity term") {
  Tape t;
  std::vector<Tensor> refs = {zeros6()};
  std::vector<Val> states = {t.constant(quad_state_at(0.0))};
  // thrust raw at 1.0: 5 * 0.25
  std::vector<Val> raw = {t.constant(Tensor::vec({1.0, 0.5, 0.5, 0.5}))};
  CHECK(loss_quadrotor(t, states, raw, refs).scalar() ==
        doctest::Approx(5.0 * 0.25).epsilon(1e-12));
  // angular velocity 0.2 on one axis: 0.1 * 0.04
  Tensor spinning = quad_state_at(0.0);
  spinning[10] = 0.2;
  std::vector<Val> states2 = {t.constant(spinning)};
  std::vector<Val> raw2 = {t.constant(Tensor::vec({0.5, 0.5, 0.5, 0.5}))};
  CHECK(loss_quadrotor(t, states2, raw2, refs).scalar() ==
        doctest::Approx(0.1 * 0.04).epsilon(1e-12));
}

TEST_CASE("cartpole loss: weights and weight ratio") {
  Tape t;
  std::vector<Tensor> refs = {Tensor::zeros(4)};

  std::vector<Val> on_ref = {t.constant(Tensor::zeros(4))};
  CHECK(loss_cartpole(t, on_ref, refs).scalar() == 0.0);

  std::vector<Val> angle_err = {t.constant(Tensor::vec({0, 0, 0.1, 0}))};
  double la = loss_cartpole(t, angle_err, refs).scalar();
  CHECK(la == doctest::Approx(0.1).epsilon(1e-12));

  std::vector<Val> vel_err = {t.constant(Tensor::vec({0, 0.1, 0, 0}))};
  double lv = loss_cartpole(t, vel_err, refs).scalar();
  CHECK(lv / la == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("fixedwing loss: position term and surface regularizer") {
  Tape t;
  std::vector<Tensor> refs = {Tensor::zeros(3)};
  Tensor state = Tensor::zeros(12);

  std::vector<Val> on_ref = {t.constant(state)};
  std::vector<Val> centered = {t.constant(Tensor::vec({0.5, 0.5, 0.5, 0.5}))};
  CHECK(loss_fixedwing(t, on_ref, centered, refs).scalar() == 0.0);

  Tensor off = state;
  off[1] = 1.0;  // one meter off on one axis
  std::vector<Val> off_ref = {t.constant(off)};
  CHECK(loss_fixedwing(t, off_ref, centered, refs).scalar() ==
        doctest::Approx(10.0).epsilon(1e-12));

  // full elevator deflection (raw 1.0) adds 0.1 * 0.25; thrust is free
  std::vector<Val> deflected = {t.constant(Tensor::vec({1.0, 1.0, 0.5, 0.5}))};
  CHECK(loss_fixedwing(t, on_ref, deflected, refs).scalar() ==
        doctest::Approx(0.025).epsilon(1e-12));
}

TEST_CASE("losses reject mismatched lengths") {
  Tape t;
  std::vector<Val> states = {t.constant(Tensor::zeros(4)),
                             t.constant(Tensor::zeros(4))};
  std::vector<Tensor> refs = {Tensor::zeros(4)};
  CHECK_THROWS_AS(loss_cartpole(t, states, refs), ShapeError);
}

// ---- optimizer ------------------------------------------------------------

TEST_CASE("sgd: zero gradient leaves parameters unchanged") {
  std::vector<double> params = {1.0, -2.0};
  std::vector<double> grad = {0.0, 0.0};
  OptimizerConfig cfg{.learning_rate = 0.1, .momentum = 0.9};
  OptimizerState state;
  sgd_step(params, grad, cfg, state);
  CHECK(params[0] == 1.0);
  CHECK(params[1] == -2.0);
}

TEST_CASE("sgd: zero momentum is plain gradient descent") {
  std::vector<double> params = {1.0};
  std::vector<double> grad = {2.0};
  OptimizerConfig cfg{.learning_rate = 0.5, .momentum = 0.0};
  OptimizerState state;
  sgd_step(params, grad, cfg, state);
  CHECK(params[0] == doctest::Approx(0.0));
}

TEST_CASE("sgd: two steps of constant gradient accumulate (2 + mu)") {
  const double lr = 0.01, mu = 0.9, g = 3.0;
  std::vector<double> params = {5.0};
  std::vector<double> grad = {g};
  OptimizerConfig cfg{.learning_rate = lr, .momentum = mu};
  OptimizerState state;
  sgd_step(params, grad, cfg, state);
  sgd_step(params, grad, cfg, state);
  CHECK(params[0] == doctest::Approx(5.0 - lr * g * (2.0 + mu)).epsilon(1e-12));
}

TEST_CASE("sgd: non-finite gradient raises and skips") {
  std::vector<double> params = {1.0};
  std::vector<double> grad = {std::numeric_limits<double>::quiet_NaN()};
  OptimizerConfig cfg;
  OptimizerState state;
  CHECK_THROWS_AS(sgd_step(params, grad, cfg, state), NumericalError);
  CHECK(params[0] == 1.0);
}

TEST_CASE("gradient clipping at the global norm") {
  std::vector<double> g = {3.0, 4.0};
  double norm = clip_gradient(std::span<double>(g), 10.0);
  CHECK(norm == doctest::Approx(5.0));
  CHECK(g[0] == 3.0);  // below the cap: untouched
  std::vector<double> big = {30.0, 40.0};
  clip_gradient(std::span<double>(big), 10.0);
  CHECK(std::sqrt(big[0] * big[0] + big[1] * big[1]) == doctest::Approx(10.0));
}

// ---- curriculum -----------------------------------------------------------

TEST_CASE("curriculum schedule arithmetic") {
  CurriculumSchedule quad;  // 0.1 + 0.05 every 5 epochs, cap 2
  CHECK(quad.tau(0) == doctest::Approx(0.1));
  CHECK(quad.tau(12) == doctest::Approx(0.2));  // 0.1 + 2 * 0.05

  CurriculumSchedule fw;
  fw.tau_init = 4.0;
  fw.tau_increment = 0.5;
  fw.epochs_per_increment = 1;
  fw.tau_max = 20.0;
  CHECK(fw.tau(3) == doctest::Approx(5.5));  // 4 + 3 * 0.5
  CHECK(fw.tau(100) == doctest::Approx(20.0));

  // monotone and clamped
  double prev = 0.0;
  for (int e = 0; e < 250; ++e) {
    double tau = quad.tau(e);
    CHECK(tau >= prev);
    CHECK(tau <= quad.tau_max);
    prev = tau;
  }

  CurriculumSchedule off;
  off.enabled = false;
  CHECK(std::isinf(off.tau(0)));
}

// ---- unrolling ------------------------------------------------------------

namespace {

// 1-dim toy: s' = s + a, zero reference, quadratic loss. Exposes the
// chain rule structure for hand verification.
class Toy1D : public System {
 public:
  Toy1D() {
    scaling_.kind = ActionScaling::Kind::kIdentity;
    scaling_.lo = {-1e9};
    scaling_.hi = {1e9};
  }
  SystemKind kind() const override { return SystemKind::kCartPole; }
  int state_dim() const override { return 1; }
  int obs_dim() const override { return 1; }
  int action_dim() const override { return 1; }
  int ref_dim() const override { return 1; }
  double dt() const override { return 1.0; }
  const ActionScaling& action_scaling() const override { return scaling_; }
  Val step(Tape&, Val state, Val action) const override { return state + action; }
  Val observe(Tape&, Val state) const override { return state; }
  std::vector<Tensor> reference_rows(const RolloutSpec&, const Tensor&, int,
                                     int count) const override {
    return std::vector<Tensor>(static_cast<size_t>(count), Tensor::zeros(1));
  }
  Val reference_features(Tape&, const RolloutSpec&, Val, int, int) const override {
    return Val{};
  }
  int reference_feature_dim(int) const override { return 0; }
  Val horizon_loss(Tape& tape, std::span<const Val> states, std::span<const Val>,
                   std::span<const Tensor> refs) const override {
    Val total = tape.constant(0.0);
    for (size_t k = 0; k < states.size(); ++k) {
      Val e = states[k] - tape.constant(refs[k]);
      total = total + squared_norm(e);
    }
    return total;
  }
  double divergence(const Tensor& s, const Tensor& r) const override {
    return std::abs(s[0] - r[0]);
  }
  Tensor reset_onto(const Tensor& r, const Tensor&) const override { return r; }
  Tensor initial_state(const RolloutSpec& spec) const override {
    return spec.start_state;
  }

 private:
  ActionScaling scaling_;
};

// policy with a single linear layer mapping s -> horizon actions
PolicyParameters toy_policy(int horizon, double w0, double b0) {
  PolicyParameters p;
  p.system = SystemKind::kCartPole;
  p.horizon = horizon;
  p.ref_rows = 0;
  Dense layer;
  layer.in = 1;
  layer.out = horizon;
  layer.act = Activation::kLinear;
  layer.weights.assign(static_cast<size_t>(horizon), 0.05);
  layer.bias.assign(static_cast<size_t>(horizon), 0.01);
  layer.weights[0] = w0;
  layer.bias[0] = b0;
  p.trunk = {layer};
  p.scaling.kind = ActionScaling::Kind::kIdentity;
  p.scaling.lo = {-1e9};
  p.scaling.hi = {1e9};
  return p;
}

}  // namespace

TEST_CASE("horizon one: concurrent and recurrent are identical") {
  QuadrotorSystem sys;
  ReferenceTrajectory traj;
  traj.dt = 0.1;
  for (int i = 0; i < 5; ++i) traj.rows.push_back(Tensor::vec({0.2 * i, 0, 0, 2, 0, 0}));
  RolloutSpec spec;
  spec.trajectory = &traj;
  spec.max_steps = 4;
  PolicyParameters policy = make_policy(sys, 1, 99);
  Pair pair{sys.initial_state(spec), 0, 0};
  HorizonConfig con{1, HorizonMode::kConcurrent};
  HorizonConfig rec{1, HorizonMode::kRecurrent};

  auto grads = [&](const HorizonConfig& hc, double* loss_value) {
    Tape tape;
    PolicyNodes nodes = bind_policy(tape, policy, true);
    Val loss = pair_loss(tape, sys, nodes, spec, pair, hc);
    *loss_value = loss.scalar();
    Adjoints adj = tape.backward(loss);
    std::vector<double> flat;
    for (NodeId v : tape.variable_ids())
      for (double g : adj.of(v).data) flat.push_back(g);
    return flat;
  };

  double l_con = 0, l_rec = 0;
  std::vector<double> g_con = grads(con, &l_con);
  std::vector<double> g_rec = grads(rec, &l_rec);
  CHECK(l_con == l_rec);
  REQUIRE(g_con.size() == g_rec.size());
  for (size_t i = 0; i < g_con.size(); ++i) CHECK(g_con[i] == g_rec[i]);
}

TEST_CASE("concurrent tape grows linearly in the horizon") {
  QuadrotorSystem sys;
  ReferenceTrajectory traj;
  traj.dt = 0.1;
  for (int i = 0; i < 40; ++i) traj.rows.push_back(Tensor::zeros(6));
  RolloutSpec spec;
  spec.trajectory = &traj;
  spec.max_steps = 30;
  Pair pair{sys.initial_state(spec), 0, 0};

  auto nodes_for = [&](int T) {
    PolicyParameters policy = make_policy(sys, T, 7);
    Tape tape;
    PolicyNodes nodes = bind_policy(tape, policy, true);
    pair_loss(tape, sys, nodes, spec, pair, {T, HorizonMode::kConcurrent});
    return tape.node_count();
  };
  size_t n5 = nodes_for(5), n10 = nodes_for(10), n15 = nodes_for(15);
  CHECK(n10 - n5 == n15 - n10);  // constant per-step growth
}

TEST_CASE("recurrent tape holds one policy subgraph per step") {
  QuadrotorSystem sys;
  ReferenceTrajectory traj;
  traj.dt = 0.1;
  for (int i = 0; i < 40; ++i) traj.rows.push_back(Tensor::zeros(6));
  RolloutSpec spec;
  spec.trajectory = &traj;
  spec.max_steps = 30;
  Pair pair{sys.initial_state(spec), 0, 0};
  const int T = 4;
  PolicyParameters policy = make_policy(sys, T, 7);

  auto matvecs_for = [&](HorizonMode mode) {
    Tape tape;
    PolicyNodes nodes = bind_policy(tape, policy, true);
    pair_loss(tape, sys, nodes, spec, pair, {T, mode});
    return tape.count_ops(OpKind::kMatvec);
  };
  size_t con = matvecs_for(HorizonMode::kConcurrent);
  size_t rec = matvecs_for(HorizonMode::kRecurrent);
  // the policy is the only matvec user: recurrent re-invokes it T times
  CHECK(rec == T * con);
}

TEST_CASE("recurrent gradient equals the manual chain rule on a toy system") {
  const double w = 0.3, b = -0.2, s0 = 0.7;
  const int T = 3;
  Toy1D sys;
  PolicyParameters policy = toy_policy(T, w, b);
  RolloutSpec spec;
  spec.start_state = Tensor::vec({s0});
  spec.max_steps = 10;
  Pair pair{spec.start_state, 0, 0};

  Tape tape;
  PolicyNodes nodes = bind_policy(tape, policy, true);
  Val loss = pair_loss(tape, sys, nodes, spec, pair, {T, HorizonMode::kRecurrent});
  Adjoints adj = tape.backward(loss);

  // manual expansion: a_t = w s_t + b, s_{t+1} = s_t + a_t
  double s1 = s0 + (w * s0 + b);
  double s2 = s1 + (w * s1 + b);
  double s3 = s2 + (w * s2 + b);
  CHECK(loss.scalar() == doctest::Approx(s1 * s1 + s2 * s2 + s3 * s3).epsilon(1e-12));

  double ds1_dw = s0;
  double ds2_dw = s1 + (1 + w) * ds1_dw;
  double ds3_dw = s2 + (1 + w) * ds2_dw;
  double dl_dw = 2 * (s1 * ds1_dw + s2 * ds2_dw + s3 * ds3_dw);
  double ds1_db = 1.0;
  double ds2_db = 1.0 + (1 + w) * ds1_db;
  double ds3_db = 1.0 + (1 + w) * ds2_db;
  double dl_db = 2 * (s1 * ds1_db + s2 * ds2_db + s3 * ds3_db);

  const Tensor& gw = adj.of(nodes.trunk[0].weights);
  const Tensor& gb = adj.of(nodes.trunk[0].bias);
  CHECK(gw[0] == doctest::Approx(dl_dw).epsilon(1e-12));
  CHECK(gb[0] == doctest::Approx(dl_db).epsilon(1e-12));
  // rows beyond the applied action receive no gradient in recurrent mode
  CHECK(gw[1] == 0.0);
  CHECK(gb[2] == 0.0);
}

TEST_CASE("batch gradient equals the mean of per-sample gradients") {
  QuadrotorSystem sys;
  ReferenceTrajectory traj;
  traj.dt = 0.1;
  for (int i = 0; i < 30; ++i)
    traj.rows.push_back(Tensor::vec({0.1 * i, 0.05 * i, 0, 1, 0.5, 0}));
  RolloutSpec spec;
  spec.trajectory = &traj;
  spec.max_steps = 20;
  PolicyParameters policy = make_policy(sys, 5, 3);
  HorizonConfig hc{5, HorizonMode::kConcurrent};

  std::vector<Pair> pairs = {Pair{sys.initial_state(spec), 0, 0},
                             Pair{sys.reset_onto(traj.row(4), traj.row(5)), 0, 4}};
  BatchGradient both = batch_gradient(sys, policy, {&spec, 1}, pairs, hc, 1);
  BatchGradient first = batch_gradient(sys, policy, {&spec, 1}, {&pairs[0], 1}, hc, 1);
  BatchGradient second = batch_gradient(sys, policy, {&spec, 1}, {&pairs[1], 1}, hc, 1);

  REQUIRE(both.grad.size() == first.grad.size());
  for (size_t i = 0; i < both.grad.size(); ++i)
    CHECK(both.grad[i] ==
          doctest::Approx(0.5 * (first.grad[i] + second.grad[i])).epsilon(1e-12));
  CHECK(both.loss == doctest::Approx(0.5 * (first.loss + second.loss)).epsilon(1e-12));

  // and threading does not change the result bitwise
  BatchGradient threaded = batch_gradient(sys, policy, {&spec, 1}, pairs, hc, 2);
  for (size_t i = 0; i < both.grad.size(); ++i) CHECK(both.grad[i] == threaded.grad[i]);
}

TEST_CASE("one tiny step along the gradient does not increase the loss") {
  QuadrotorSystem sys;
  ReferenceTrajectory traj;
  traj.dt = 0.1;
  for (int i = 0; i < 30; ++i) traj.rows.push_back(Tensor::vec({0.2 * i, 0, 0, 2, 0, 0}));
  RolloutSpec spec;
  spec.trajectory = &traj;
  spec.max_steps = 20;
  PolicyParameters policy = make_policy(sys, 5, 4);
  HorizonConfig hc{5, HorizonMode::kConcurrent};
  std::vector<Pair> batch = {Pair{sys.initial_state(spec), 0, 0},
                             Pair{sys.reset_onto(traj.row(3), traj.row(4)), 0, 3}};

  BatchGradient bg = batch_gradient(sys, policy, {&spec, 1}, batch, hc, 1);
  std::vector<double> flat = policy.export_flat();
  OptimizerConfig cfg{.learning_rate = 1e-8, .momentum = 0.0};
  OptimizerState st;
  sgd_step(flat, bg.grad, cfg, st);
  policy.import_flat(flat);
  BatchGradient after = batch_gradient(sys, policy, {&spec, 1}, batch, hc, 1);
  CHECK(after.loss <= bg.loss + 1e-12);
}

TEST_CASE("train with zero epochs returns the initial parameters") {
  CartPoleSystem sys;
  PolicyParameters policy = make_policy(sys, 10, 5);
  std::vector<double> before = policy.export_flat();
  TrainOptions options;
  options.epochs = 0;
  TrainResult result = train(sys, sys, policy, options, nullptr);
  CHECK(result.metrics.empty());
  std::vector<double> after = result.policy.export_flat();
  REQUIRE(before.size() == after.size());
  for (size_t i = 0; i < before.size(); ++i) CHECK(before[i] == after[i]);
}

TEST_CASE("cartpole training smoke run produces finite metrics") {
  CartPoleSystem sys;
  PolicyParameters policy = make_policy(sys, 10, 5);
  TrainOptions options;
  options.epochs = 2;
  options.rollouts_per_epoch = 4;
  options.collect_steps = 30;
  options.eval_rollouts = 4;
  options.batch_size = 8;
  options.threads = 2;
  options.curriculum.enabled = false;
  options.optimizer.learning_rate = 1e-7;
  TrainResult result = train(sys, sys, policy, options, nullptr);
  REQUIRE(result.metrics.size() == 2);
  for (const EpochMetrics& m : result.metrics) {
    CHECK(std::isfinite(m.train_loss));
    CHECK(m.train_loss >= 0.0);
  }
  CHECK(!result.diverged);
}

TEST_CASE("training is deterministic for a fixed seed") {
  CartPoleSystem sys;
  TrainOptions options;
  options.epochs = 1;
  options.rollouts_per_epoch = 3;
  options.collect_steps = 20;
  options.eval_rollouts = 2;
  options.threads = 2;
  options.curriculum.enabled = false;
  options.optimizer.learning_rate = 1e-6;
  options.seed = 77;

  TrainResult a = train(sys, sys, make_policy(sys, 10, 42), options, nullptr);
  TrainResult b = train(sys, sys, make_policy(sys, 10, 42), options, nullptr);
  std::vector<double> fa = a.policy.export_flat();
  std::vector<double> fb = b.policy.export_flat();
  REQUIRE(fa.size() == fb.size());
  for (size_t i = 0; i < fa.size(); ++i) CHECK(fa[i] == fb[i]);
}
