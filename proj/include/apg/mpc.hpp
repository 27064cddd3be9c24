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

// Receding-horizon baseline: at every step, first-order shooting with
// momentum over the raw action sequence through the same differentiable
// dynamics and cost as policy training. Bounds stay intrinsic because
// the decision variables live before the squashing nonlinearity.

#ifndef APG_MPC_HPP_
#define APG_MPC_HPP_

#include <memory>
#include <vector>

#include "apg/evaluation.hpp"
#include "apg/system.hpp"

namespace apg {

struct MpcConfig {
  int horizon = 10;
  int iterations = 50;
  double step_size = 0.05;
  double momentum = 0.8;
  bool warm_start = true;
};

class MpcSolver {
 public:
  MpcSolver(const System& system, MpcConfig config);

  struct Solution {
    Tensor action;                    // first scaled action
    std::vector<Tensor> predicted;    // optimized horizon states
    double cost = 0.0;
    double solve_ms = 0.0;
  };

  // Minimizes the horizon cost from `state` against the references the
  // spec provides at time t, warm-started from the previous solution
  // shifted by one step.
  Solution solve(const RolloutSpec& spec, const Tensor& state, int t);

  void reset();

  // Seeds the warm start with a known raw-action plan.
  void warm_start_from(const Tensor& logits);
  const Tensor& warm_logits() const { return logits_; }

 private:
  const System& system_;
  MpcConfig config_;
  Tensor logits_;
  bool has_previous_ = false;
};

// Controller adapter; one instance per rollout keeps warm starts local.
class MpcController : public Controller {
 public:
  MpcController(const System& system, MpcConfig config)
      : solver_(system, config) {}
  Tensor act(const System& system, const RolloutSpec& spec, const Tensor& state,
             int t, double* elapsed_ms) override;

 private:
  MpcSolver solver_;
};

EvaluationReport mpc_evaluate(const System& system, const MpcConfig& config,
                              std::span<const RolloutSpec> specs,
                              const EvaluationOptions& opts = {}, int threads = 1);

}  // namespace apg

#endif  // APG_MPC_HPP_
