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

// Closed-loop rollouts and aggregate tracking metrics. A run counts as
// successful when it never diverges more than the limit from its
// reference; error aggregates are computed over successful runs only.

#ifndef APG_EVALUATION_HPP_
#define APG_EVALUATION_HPP_

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "apg/system.hpp"

namespace apg {

struct RolloutOutcome {
  int index = 0;
  double error = 0.0;       // CartPole: mean |cart velocity|; quadrotor: mean
                            // distance to the reference; fixed-wing: miss
                            // distance at the target plane
  double secondary = 0.0;   // fixed-wing: mean distance to the reference line
  bool success = true;
  int steps = 0;
  double compute_ms = 0.0;  // mean controller time per step (first call excluded)
};

struct EvaluationOptions {
  double diverge_limit = 5.0;  // m
  int cartpole_steps = 200;    // 10 s at dt = 0.05
  double cp_max_offset = 2.4;  // balance envelope
  double cp_max_angle = 0.4;
  int fw_max_steps = 300;
};

RolloutOutcome run_rollout(const System& system, Controller& controller,
                           const RolloutSpec& spec, const EvaluationOptions& opts,
                           int index = 0);

struct EvaluationReport {
  std::vector<RolloutOutcome> rows;
  double error_mean = 0.0;
  double error_std = 0.0;
  double secondary_mean = 0.0;
  double success_ratio = 0.0;
  double compute_ms_mean = 0.0;
  int successes = 0;
  bool undefined = false;  // zero rollouts

  void finalize();
};

using ControllerFactory = std::function<std::unique_ptr<Controller>()>;

// One controller instance per rollout (warm starts reset per rollout);
// rollouts may run on several threads, aggregation stays in index order.
EvaluationReport evaluate(const System& system, const ControllerFactory& make,
                          std::span<const RolloutSpec> specs,
                          const EvaluationOptions& opts = {}, int threads = 1);

}  // namespace apg

#endif  // APG_EVALUATION_HPP_
