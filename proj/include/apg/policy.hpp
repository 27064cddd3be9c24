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

// The neural control policies: per-system architecture, input
// featurization and normalization, and bounded action scaling. One
// forward pass predicts the next `horizon` actions.

#ifndef APG_POLICY_HPP_
#define APG_POLICY_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "apg/nn.hpp"
#include "apg/system.hpp"

namespace apg {

struct PolicyParameters {
  SystemKind system = SystemKind::kCartPole;
  int horizon = 10;    // actions predicted per forward pass
  int ref_rows = 0;    // reference window rows fed to the network
  bool conv_ref = false;

  std::vector<Dense> state_branch;  // CartPole keeps its whole MLP in trunk
  std::vector<Dense> ref_branch;    // conv kernel (quadrotor) or dense branch
  std::vector<Dense> trunk;

  ActionScaling scaling;
  Normalizer normalizer;

  std::size_t param_count() const;
  std::vector<double> export_flat() const;
  void import_flat(std::span<const double> flat);
};

// Architecture and seeded initialization for a system's policy.
// CartPole: five tanh layers (32, 64, 64, 32, horizon).
// Quadrotor: dense-64 state branch, 20-filter kernel-3 convolution over
//   the reference window, then three 64-wide tanh layers into a
//   4*horizon sigmoid-scaled head.
// Fixed-wing: two dense-64 branches (normalized state, relative target
//   feature), same trunk shape as the quadrotor.
PolicyParameters make_policy(const System& system, int horizon, std::uint64_t seed);

struct PolicyNodes {
  const PolicyParameters* params = nullptr;
  std::vector<DenseNodes> state_branch, ref_branch, trunk;
};

PolicyNodes bind_policy(Tape& tape, const PolicyParameters& params, bool trainable);

struct PolicyOutput {
  Val raw;     // horizon * act_dim squashed commands
  Val scaled;  // physical units
};

// obs comes from System::observe, ref_features from
// System::reference_features (empty Val when the system has none).
PolicyOutput policy_forward(Tape& tape, const PolicyNodes& policy, Val obs,
                            Val ref_features);

// Runs the policy on a scratch tape and returns the first scaled
// action; used by rollouts, data collection, and runtime measurement.
class PolicyController : public Controller {
 public:
  explicit PolicyController(const PolicyParameters& params) : params_(&params) {}
  Tensor act(const System& system, const RolloutSpec& spec, const Tensor& state,
             int t, double* elapsed_ms) override;

 private:
  const PolicyParameters* params_;
};

// Gathers states visited under uniformly random bounded actions; feeds
// fit_normalizer for systems that normalize their inputs.
std::vector<Tensor> random_policy_states(const System& system,
                                         std::span<const RolloutSpec> specs,
                                         std::uint64_t seed, int min_states);

}  // namespace apg

#endif  // APG_POLICY_HPP_
