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

#include "apg/reference.hpp"

#include <array>
#include <cmath>

#include "apg/errors.hpp"
#include "apg/random.hpp"
#include "apg/system.hpp"

namespace apg {

Tensor ReferenceTrajectory::row(int t) const {
  if (rows.empty()) throw InvalidStateError("empty reference trajectory");
  if (t < length()) return rows[static_cast<size_t>(t < 0 ? 0 : t)];
  // hold the final position at rest past the end
  Tensor last = rows.back();
  last[3] = last[4] = last[5] = 0.0;
  return last;
}

namespace {

struct QuinticSegment {
  // per-axis coefficients c0..c5
  std::array<std::array<double, 6>, 3> c;
  double duration = 0.0;

  double pos(int axis, double t) const {
    const auto& a = c[static_cast<size_t>(axis)];
    return a[0] + t * (a[1] + t * (a[2] + t * (a[3] + t * (a[4] + t * a[5]))));
  }
  double vel(int axis, double t) const {
    const auto& a = c[static_cast<size_t>(axis)];
    return a[1] + t * (2 * a[2] + t * (3 * a[3] + t * (4 * a[4] + t * 5 * a[5])));
  }
  double acc(int axis, double t) const {
    const auto& a = c[static_cast<size_t>(axis)];
    return 2 * a[2] + t * (6 * a[3] + t * (12 * a[4] + t * 20 * a[5]));
  }
};

// Quintic Hermite fit matching (p, v, a) at both segment ends.
QuinticSegment fit_segment(const std::array<double, 3>& p0,
                           const std::array<double, 3>& v0,
                           const std::array<double, 3>& a0,
                           const std::array<double, 3>& p1,
                           const std::array<double, 3>& v1,
                           const std::array<double, 3>& a1, double tau) {
  QuinticSegment seg;
  seg.duration = tau;
  for (int ax = 0; ax < 3; ++ax) {
    size_t i = static_cast<size_t>(ax);
    double dp = p1[i] - p0[i] - v0[i] * tau - 0.5 * a0[i] * tau * tau;
    double dv = (v1[i] - v0[i] - a0[i] * tau) * tau;
    double da = (a1[i] - a0[i]) * tau * tau;
    double t3 = tau * tau * tau;
    seg.c[i][0] = p0[i];
    seg.c[i][1] = v0[i];
    seg.c[i][2] = 0.5 * a0[i];
    seg.c[i][3] = (10.0 * dp - 4.0 * dv + 0.5 * da) / t3;
    seg.c[i][4] = (-15.0 * dp + 7.0 * dv - da) / (t3 * tau);
    seg.c[i][5] = (6.0 * dp - 3.0 * dv + 0.5 * da) / (t3 * tau * tau);
  }
  return seg;
}

struct Spline {
  std::vector<QuinticSegment> segments;
  std::vector<double> knots;  // segment start times, plus the total duration

  void sample(double t, double* pos, double* vel, double* acc) const {
    size_t j = 0;
    while (j + 1 < segments.size() && t >= knots[j + 1]) ++j;
    double local = t - knots[j];
    if (local > segments[j].duration) local = segments[j].duration;
    for (int ax = 0; ax < 3; ++ax) {
      if (pos) pos[ax] = segments[j].pos(ax, local);
      if (vel) vel[ax] = segments[j].vel(ax, local);
      if (acc) acc[ax] = segments[j].acc(ax, local);
    }
  }
};

Spline build_spline(const std::vector<std::array<double, 3>>& wp, double duration) {
  const size_t n = wp.size();
  // segment times proportional to leg length, with a smoothing floor
  std::vector<double> lengths(n - 1);
  double total = 0.0;
  for (size_t i = 0; i + 1 < n; ++i) {
    double d = 0.0;
    for (int ax = 0; ax < 3; ++ax) {
      double e = wp[i + 1][static_cast<size_t>(ax)] - wp[i][static_cast<size_t>(ax)];
      d += e * e;
    }
    lengths[i] = std::sqrt(d) + 0.3;
    total += lengths[i];
  }

  // waypoint velocities: zero at the ends, chord heuristic inside
  std::vector<std::array<double, 3>> vel(n, {0.0, 0.0, 0.0});
  std::vector<double> times(n, 0.0);
  for (size_t i = 1; i < n; ++i)
    times[i] = times[i - 1] + duration * lengths[i - 1] / total;
  for (size_t i = 1; i + 1 < n; ++i)
    for (int ax = 0; ax < 3; ++ax)
      vel[i][static_cast<size_t>(ax)] =
          (wp[i + 1][static_cast<size_t>(ax)] - wp[i - 1][static_cast<size_t>(ax)]) /
          (times[i + 1] - times[i - 1]);

  Spline s;
  std::array<double, 3> zero{0.0, 0.0, 0.0};
  for (size_t i = 0; i + 1 < n; ++i) {
    s.knots.push_back(times[i]);
    s.segments.push_back(fit_segment(wp[i], vel[i], zero, wp[i + 1], vel[i + 1],
                                     zero, times[i + 1] - times[i]));
  }
  s.knots.push_back(duration);
  return s;
}

}  // namespace

ReferenceTrajectory generate_polynomial(std::uint64_t seed,
                                        const PolynomialOptions& opts) {
  if (opts.v_max <= 0.0 || opts.a_max <= 0.0)
    throw ConfigError("generate_polynomial: speed/acceleration caps must be positive");
  RandomStream rng(seed);

  for (int attempt = 0; attempt < opts.max_retries; ++attempt) {
    std::vector<std::array<double, 3>> wp(static_cast<size_t>(opts.waypoints));
    wp[0] = {0.0, 0.0, 0.0};
    for (size_t i = 1; i < wp.size(); ++i)
      for (int ax = 0; ax < 3; ++ax)
        wp[i][static_cast<size_t>(ax)] = rng.uniform(-opts.cube_half, opts.cube_half);

    // Spatial rescaling about the start point: velocity and
    // acceleration are linear in the waypoint amplitudes, so one exact
    // shrink enforces both caps. The loop guards re-sampling noise.
    bool feasible = false;
    for (int iter = 0; iter < opts.max_rescale_iters; ++iter) {
      Spline spline = build_spline(wp, opts.duration_s);
      double v_peak = 0.0, a_peak = 0.0;
      const double fine = opts.dt / 5.0;
      for (double t = 0.0; t <= opts.duration_s + 1e-9; t += fine) {
        double v[3], a[3];
        spline.sample(std::min(t, opts.duration_s), nullptr, v, a);
        v_peak = std::max(v_peak, std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]));
        a_peak = std::max(a_peak, std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]));
      }
      double shrink = 1.0;
      if (v_peak > opts.v_max) shrink = std::min(shrink, opts.v_max / v_peak);
      if (a_peak > opts.a_max) shrink = std::min(shrink, opts.a_max / a_peak);
      if (shrink >= 1.0) {
        ReferenceTrajectory traj;
        traj.dt = opts.dt;
        int steps = static_cast<int>(std::llround(opts.duration_s / opts.dt));
        for (int i = 0; i <= steps; ++i) {
          double t = std::min(static_cast<double>(i) * opts.dt, opts.duration_s);
          double p[3], v[3];
          spline.sample(t, p, v, nullptr);
          traj.rows.push_back(Tensor::vec({p[0], p[1], p[2], v[0], v[1], v[2]}));
        }
        feasible = true;
        return traj;
      }
      shrink *= 0.995;  // margin against the finite sampling grid
      for (size_t i = 1; i < wp.size(); ++i)
        for (int ax = 0; ax < 3; ++ax)
          wp[i][static_cast<size_t>(ax)] =
              wp[0][static_cast<size_t>(ax)] +
              shrink * (wp[i][static_cast<size_t>(ax)] - wp[0][static_cast<size_t>(ax)]);
    }
    (void)feasible;
  }
  throw GenerationError("generate_polynomial: no feasible trajectory after retries");
}

ReferenceTrajectory scale_speed(const ReferenceTrajectory& traj, double fraction) {
  if (fraction <= 0.0 || fraction > 1.0)
    throw ConfigError("scale_speed: fraction must be in (0, 1]");
  if (fraction == 1.0) return traj;
  ReferenceTrajectory out;
  out.dt = traj.dt;
  const int n = traj.length();
  for (int i = 0; i < n; ++i) {
    double s = fraction * static_cast<double>(i);
    int j = static_cast<int>(s);
    double frac = s - j;
    Tensor row(6, 1);
    const Tensor& a = traj.rows[static_cast<size_t>(std::min(j, n - 1))];
    const Tensor& b = traj.rows[static_cast<size_t>(std::min(j + 1, n - 1))];
    for (int k = 0; k < 3; ++k)
      row[k] = a[k] + frac * (b[k] - a[k]);
    for (int k = 3; k < 6; ++k)
      row[k] = fraction * (a[k] + frac * (b[k] - a[k]));
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::vector<Tensor> cartpole_reference(const Tensor& state, int k) {
  if (k < 1) throw ConfigError("cartpole_reference: need k >= 1");
  if (state.size() != 4) throw ShapeError("cartpole_reference: 4-dim state expected");
  std::vector<Tensor> rows;
  rows.reserve(static_cast<size_t>(k));
  for (int j = 1; j <= k; ++j) {
    double keep = 1.0 - static_cast<double>(j) / static_cast<double>(k);
    rows.push_back(
        Tensor::vec({state[0], state[1] * keep, state[2] * keep, state[3] * keep}));
  }
  return rows;
}

std::vector<Tensor> fixedwing_reference(const Tensor& state, const Tensor& target,
                                        int k, double dt) {
  if (k < 1) throw ConfigError("fixedwing_reference: need k >= 1");
  if (state.size() != 12 || target.size() != 3)
    throw ShapeError("fixedwing_reference: bad state/target width");
  double dir[3] = {target[0] - state[0], target[1] - state[1], target[2] - state[2]};
  double dist = std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
  if (dist < 1e-9)
    throw InvalidStateError("fixedwing_reference: degenerate zero-length direction");
  double speed = std::sqrt(state[3] * state[3] + state[4] * state[4] +
                           state[5] * state[5]);
  std::vector<Tensor> rows;
  rows.reserve(static_cast<size_t>(k));
  for (int j = 1; j <= k; ++j) {
    double reach = std::min(speed * dt * static_cast<double>(j), dist);
    rows.push_back(Tensor::vec({state[0] + dir[0] / dist * reach,
                                state[1] + dir[1] / dist * reach,
                                state[2] + dir[2] / dist * reach}));
  }
  return rows;
}

Tensor step_plain(const System& system, const Tensor& state, const Tensor& action) {
  thread_local Tape tape;
  tape.clear();
  Val s = tape.constant(state);
  Val a = tape.constant(action);
  return system.step(tape, s, a).value();
}

PairDataset collect_pairs(const System& system, Controller& controller,
                          std::span<const RolloutSpec> specs, double tau_div,
                          int horizon, int max_pairs) {
  if (tau_div <= 0.0) throw ConfigError("collect_pairs: tau_div must be positive");
  (void)horizon;
  PairDataset ds;
  for (size_t spec_idx = 0; spec_idx < specs.size(); ++spec_idx) {
    const RolloutSpec& spec = specs[spec_idx];
    Tensor state = system.initial_state(spec);
    for (int t = 0; t + 1 < spec.max_steps; ++t) {
      if (max_pairs > 0 && static_cast<int>(ds.pairs.size()) >= max_pairs) return ds;
      if (system.rollout_done(spec, state)) break;
      ds.pairs.push_back(Pair{state, static_cast<int>(spec_idx), t});

      std::vector<Tensor> next_refs = system.reference_rows(spec, state, t, 2);
      Tensor action = controller.act(system, spec, state, t, nullptr);
      Tensor next = step_plain(system, state, action);
      ds.steps++;

      if (!system.state_ok(next) ||
          system.divergence(next, next_refs[0]) > tau_div) {
        // without a curriculum there is nothing to reset onto: the
        // rollout ends when the state leaves the model's validity range
        if (std::isinf(tau_div) && !system.state_ok(next)) break;
        next = system.reset_onto(next_refs[0], next_refs[1]);
        ds.resets++;
        if (!system.state_ok(next)) break;
      }
      state = std::move(next);
    }
  }
  return ds;
}

TrajectorySet generate_trajectory_set(std::uint64_t seed, int count,
                                      const PolynomialOptions& opts,
                                      double test_fraction) {
  if (count < 1) throw ConfigError("generate_trajectory_set: count must be >= 1");
  TrajectorySet set;
  set.seed = seed;
  std::vector<ReferenceTrajectory> all;
  all.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i)
    all.push_back(generate_polynomial(
        seed ^ (0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(i + 1)), opts));

  RandomStream rng(seed ^ 0xA5A5A5A5A5A5A5A5ull);
  std::vector<int> order = rng.permutation(count);
  int n_test = static_cast<int>(std::llround(test_fraction * count));
  std::vector<bool> is_test(static_cast<size_t>(count), false);
  for (int i = 0; i < n_test; ++i) is_test[static_cast<size_t>(order[static_cast<size_t>(i)])] = true;
  for (int i = 0; i < count; ++i) {
    if (is_test[static_cast<size_t>(i)])
      set.test.push_back(std::move(all[static_cast<size_t>(i)]));
    else
      set.train.push_back(std::move(all[static_cast<size_t>(i)]));
  }
  return set;
}

}  // namespace apg
