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

#include "apg/evaluation.hpp"

#include <cmath>
#include <thread>

namespace apg {

namespace {

RolloutOutcome rollout_cartpole(const System& sys, Controller& ctrl,
                                const RolloutSpec& spec,
                                const EvaluationOptions& opts) {
  RolloutOutcome out;
  Tensor state = sys.initial_state(spec);
  int steps = spec.max_steps > 0 ? spec.max_steps : opts.cartpole_steps;
  double speed_sum = 0.0, ms_sum = 0.0;
  int ms_count = 0;
  for (int t = 0; t < steps; ++t) {
    double ms = 0.0;
    Tensor action = ctrl.act(sys, spec, state, t, &ms);
    if (t > 0) {
      ms_sum += ms;
      ++ms_count;
    }
    state = step_plain(sys, state, action);
    ++out.steps;
    if (!state.all_finite() || std::abs(state[0]) > opts.cp_max_offset ||
        std::abs(state[2]) > opts.cp_max_angle) {
      out.success = false;
      break;
    }
    speed_sum += std::abs(state[1]);
  }
  out.error = out.steps > 0 ? speed_sum / out.steps : 0.0;
  out.compute_ms = ms_count > 0 ? ms_sum / ms_count : 0.0;
  return out;
}

RolloutOutcome rollout_quadrotor(const System& sys, Controller& ctrl,
                                 const RolloutSpec& spec,
                                 const EvaluationOptions& opts) {
  RolloutOutcome out;
  if (spec.trajectory == nullptr)
    throw ConfigError("quadrotor evaluation needs a trajectory");
  int steps = spec.max_steps > 0 ? spec.max_steps : spec.trajectory->length() - 1;
  Tensor state = sys.initial_state(spec);
  double err_sum = 0.0, ms_sum = 0.0;
  int ms_count = 0;
  for (int t = 0; t < steps; ++t) {
    std::vector<Tensor> ref = sys.reference_rows(spec, state, t, 1);
    double ms = 0.0;
    Tensor action = ctrl.act(sys, spec, state, t, &ms);
    if (t > 0) {
      ms_sum += ms;
      ++ms_count;
    }
    state = step_plain(sys, state, action);
    ++out.steps;
    if (!sys.state_ok(state)) {
      out.success = false;
      break;
    }
    double err = sys.divergence(state, ref[0]);
    err_sum += err;
    if (err > opts.diverge_limit) {
      out.success = false;
      break;
    }
  }
  out.error = out.steps > 0 ? err_sum / out.steps : 0.0;
  out.compute_ms = ms_count > 0 ? ms_sum / ms_count : 0.0;
  return out;
}

RolloutOutcome rollout_fixedwing(const System& sys, Controller& ctrl,
                                 const RolloutSpec& spec,
                                 const EvaluationOptions& opts) {
  RolloutOutcome out;
  if (spec.target.size() != 3)
    throw ConfigError("fixed-wing evaluation needs a target");
  Tensor state = sys.initial_state(spec);
  const double sx = state[0], sy = state[1], sz = state[2];
  double ux = spec.target[0] - sx, uy = spec.target[1] - sy, uz = spec.target[2] - sz;
  double ulen = std::sqrt(ux * ux + uy * uy + uz * uz);
  ux /= ulen;
  uy /= ulen;
  uz /= ulen;

  auto line_distance = [&](const Tensor& s) {
    double rx = s[0] - sx, ry = s[1] - sy, rz = s[2] - sz;
    double along = rx * ux + ry * uy + rz * uz;
    double dx = rx - along * ux, dy = ry - along * uy, dz = rz - along * uz;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
  };
  auto along_track = [&](const Tensor& s) {
    return (s[0] - spec.target[0]) * ux + (s[1] - spec.target[1]) * uy +
           (s[2] - spec.target[2]) * uz;
  };

  int steps = spec.max_steps > 0 ? spec.max_steps : opts.fw_max_steps;
  double line_sum = 0.0, ms_sum = 0.0;
  int ms_count = 0;
  bool crossed = false;
  Tensor prev = state;
  for (int t = 0; t < steps; ++t) {
    double ms = 0.0;
    Tensor action = ctrl.act(sys, spec, state, t, &ms);
    if (t > 0) {
      ms_sum += ms;
      ++ms_count;
    }
    prev = state;
    state = step_plain(sys, state, action);
    ++out.steps;
    if (!sys.state_ok(state)) {
      out.success = false;
      break;
    }
    line_sum += line_distance(state);
    if (line_distance(state) > opts.diverge_limit) {
      out.success = false;
      break;
    }
    if (along_track(state) >= 0.0) {
      crossed = true;
      break;
    }
  }

  if (crossed) {
    // interpolate the crossing of the target plane for the miss distance
    double a0 = along_track(prev), a1 = along_track(state);
    double lam = (a1 - a0) != 0.0 ? (0.0 - a0) / (a1 - a0) : 1.0;
    double px = prev[0] + lam * (state[0] - prev[0]) - spec.target[0];
    double py = prev[1] + lam * (state[1] - prev[1]) - spec.target[1];
    double pz = prev[2] + lam * (state[2] - prev[2]) - spec.target[2];
    double along = px * ux + py * uy + pz * uz;
    px -= along * ux;
    py -= along * uy;
    pz -= along * uz;
    out.error = std::sqrt(px * px + py * py + pz * pz);
  } else {
    out.success = false;
    out.error = std::numeric_limits<double>::quiet_NaN();
  }
  out.secondary = out.steps > 0 ? line_sum / out.steps : 0.0;
  out.compute_ms = ms_count > 0 ? ms_sum / ms_count : 0.0;
  return out;
}

}  // namespace

RolloutOutcome run_rollout(const System& system, Controller& controller,
                           const RolloutSpec& spec, const EvaluationOptions& opts,
                           int index) {
  RolloutOutcome out;
  switch (system.kind()) {
    case SystemKind::kCartPole:
      out = rollout_cartpole(system, controller, spec, opts);
      break;
    case SystemKind::kQuadrotor:
      out = rollout_quadrotor(system, controller, spec, opts);
      break;
    case SystemKind::kFixedWing:
      out = rollout_fixedwing(system, controller, spec, opts);
      break;
  }
  out.index = index;
  return out;
}

void EvaluationReport::finalize() {
  successes = 0;
  undefined = rows.empty();
  double err_sum = 0.0, sec_sum = 0.0, ms_sum = 0.0;
  for (const RolloutOutcome& r : rows) {
    ms_sum += r.compute_ms;
    if (r.success) {
      ++successes;
      err_sum += r.error;
      sec_sum += r.secondary;
    }
  }
  success_ratio = rows.empty() ? std::numeric_limits<double>::quiet_NaN()
                               : static_cast<double>(successes) / rows.size();
  compute_ms_mean = rows.empty() ? 0.0 : ms_sum / rows.size();
  if (successes > 0) {
    error_mean = err_sum / successes;
    secondary_mean = sec_sum / successes;
    double var = 0.0;
    for (const RolloutOutcome& r : rows)
      if (r.success) var += (r.error - error_mean) * (r.error - error_mean);
    error_std = std::sqrt(var / successes);
  } else {
    error_mean = error_std = secondary_mean =
        std::numeric_limits<double>::quiet_NaN();
  }
}

EvaluationReport evaluate(const System& system, const ControllerFactory& make,
                          std::span<const RolloutSpec> specs,
                          const EvaluationOptions& opts, int threads) {
  EvaluationReport report;
  report.rows.resize(specs.size());
  if (specs.empty()) {
    report.finalize();
    return report;
  }

  auto worker = [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      std::unique_ptr<Controller> ctrl = make();
      report.rows[i] = run_rollout(system, *ctrl, specs[i], opts,
                                   static_cast<int>(i));
    }
  };

  if (threads <= 1 || specs.size() < 2) {
    worker(0, specs.size());
  } else {
    size_t n = specs.size();
    size_t used = std::min<size_t>(static_cast<size_t>(threads), n);
    std::vector<std::thread> pool;
    size_t chunk = (n + used - 1) / used;
    for (size_t w = 0; w < used; ++w) {
      size_t begin = w * chunk;
      size_t end = std::min(n, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(worker, begin, end);
    }
    for (std::thread& th : pool) th.join();
  }

  report.finalize();
  return report;
}

}  // namespace apg
