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

#include "apg/policy.hpp"

#include <chrono>

namespace apg {

std::size_t PolicyParameters::param_count() const {
  return params_of(state_branch) + params_of(ref_branch) + params_of(trunk);
}

std::vector<double> PolicyParameters::export_flat() const {
  std::vector<double> flat(param_count());
  size_t at = 0;
  export_params(state_branch, std::span<double>(flat).subspan(at, params_of(state_branch)));
  at += params_of(state_branch);
  export_params(ref_branch, std::span<double>(flat).subspan(at, params_of(ref_branch)));
  at += params_of(ref_branch);
  export_params(trunk, std::span<double>(flat).subspan(at, params_of(trunk)));
  return flat;
}

void PolicyParameters::import_flat(std::span<const double> flat) {
  if (flat.size() != param_count())
    throw ShapeError("import_flat: parameter count mismatch");
  size_t at = 0;
  import_params(state_branch, flat.subspan(at, params_of(state_branch)));
  at += params_of(state_branch);
  import_params(ref_branch, flat.subspan(at, params_of(ref_branch)));
  at += params_of(ref_branch);
  import_params(trunk, flat.subspan(at, params_of(trunk)));
}

namespace {

Dense dense(int in, int out, Activation act) {
  Dense d;
  d.in = in;
  d.out = out;
  d.act = act;
  return d;
}

void init_all(PolicyParameters& p, std::uint64_t seed) {
  RandomStream rng(seed);
  for (Dense& l : p.state_branch) init_dense(l, rng);
  for (Dense& l : p.ref_branch) init_dense(l, rng);
  for (Dense& l : p.trunk) init_dense(l, rng);
}

}  // namespace

PolicyParameters make_policy(const System& system, int horizon, std::uint64_t seed) {
  if (horizon < 1) throw ConfigError("make_policy: horizon must be >= 1");
  PolicyParameters p;
  p.system = system.kind();
  p.horizon = horizon;
  p.scaling = system.action_scaling();
  const int act = system.action_dim();

  switch (system.kind()) {
    case SystemKind::kCartPole:
      p.ref_rows = 0;
      // the output layer's tanh lives in the action scaling
      p.trunk = {dense(4, 32, Activation::kTanh), dense(32, 64, Activation::kTanh),
                 dense(64, 64, Activation::kTanh), dense(64, 32, Activation::kTanh),
                 dense(32, horizon * act, Activation::kLinear)};
      break;
    case SystemKind::kQuadrotor: {
      p.ref_rows = horizon < 3 ? 3 : horizon;  // kernel-3 convolution needs 3 rows
      p.conv_ref = true;
      p.state_branch = {dense(kQuadObsDim, 64, Activation::kTanh)};
      p.ref_branch = {dense(18, 20, Activation::kTanh)};  // 3-row window, 6 channels
      const int conv_out = 20 * (p.ref_rows - 2);
      p.trunk = {dense(64 + conv_out, 64, Activation::kTanh),
                 dense(64, 64, Activation::kTanh), dense(64, 64, Activation::kTanh),
                 dense(64, horizon * act, Activation::kLinear)};
      break;
    }
    case SystemKind::kFixedWing:
      p.ref_rows = horizon;
      // plain linear branches: the reference feature spans several
      // meters and would saturate a tanh at initialization
      p.state_branch = {dense(kFixedWingStateDim, 64, Activation::kLinear)};
      p.ref_branch = {dense(3, 64, Activation::kLinear)};
      p.trunk = {dense(128, 64, Activation::kTanh), dense(64, 64, Activation::kTanh),
                 dense(64, 64, Activation::kTanh),
                 dense(64, horizon * act, Activation::kLinear)};
      break;
  }
  init_all(p, seed);
  return p;
}

PolicyNodes bind_policy(Tape& tape, const PolicyParameters& params, bool trainable) {
  PolicyNodes nodes;
  nodes.params = &params;
  for (const Dense& l : params.state_branch)
    nodes.state_branch.push_back(bind_dense(tape, l, trainable));
  for (const Dense& l : params.ref_branch)
    nodes.ref_branch.push_back(bind_dense(tape, l, trainable));
  for (const Dense& l : params.trunk)
    nodes.trunk.push_back(bind_dense(tape, l, trainable));
  return nodes;
}

PolicyOutput policy_forward(Tape& tape, const PolicyNodes& policy, Val obs,
                            Val ref_features) {
  const PolicyParameters& p = *policy.params;
  if (obs.size() != (p.trunk.empty() ? 0 : (p.state_branch.empty()
                                                ? p.trunk.front().in
                                                : p.state_branch.front().in)))
    throw ConfigError("policy_forward: observation width mismatch");

  Val h = apply_normalizer(tape, p.normalizer, obs);
  for (const DenseNodes& l : policy.state_branch) h = apply_dense(l, h);

  if (p.ref_rows > 0) {
    if (!ref_features.valid())
      throw ConfigError("policy_forward: missing reference features");
    Val r;
    if (p.conv_ref) {
      // 1-D convolution over the reference window: 6 channels per row,
      // kernel 3, no padding, shared dense kernel, position-major output
      const DenseNodes& kernel = policy.ref_branch.front();
      if (ref_features.size() != 6 * p.ref_rows)
        throw ConfigError("policy_forward: reference window width mismatch");
      std::vector<Val> feats;
      for (int pos = 0; pos + 2 < p.ref_rows; ++pos)
        feats.push_back(apply_dense(kernel, slice(ref_features, 6 * pos, 18)));
      r = concat(std::span<const Val>(feats));
    } else {
      r = ref_features;
      for (const DenseNodes& l : policy.ref_branch) r = apply_dense(l, r);
    }
    h = concat({h, r});
  }

  for (const DenseNodes& l : policy.trunk) h = apply_dense(l, h);
  ScaledAction out = apply_scaling(tape, p.scaling, h, p.horizon);
  return {out.raw, out.scaled};
}

Tensor PolicyController::act(const System& system, const RolloutSpec& spec,
                             const Tensor& state, int t, double* elapsed_ms) {
  auto start = std::chrono::steady_clock::now();
  thread_local Tape tape;
  tape.clear();
  PolicyNodes nodes = bind_policy(tape, *params_, /*trainable=*/false);
  Val s = tape.constant(state);
  Val obs = system.observe(tape, s);
  Val features;
  if (params_->ref_rows > 0)
    features = system.reference_features(tape, spec, s, t, params_->ref_rows);
  PolicyOutput out = policy_forward(tape, nodes, obs, features);
  Tensor action(system.action_dim(), 1);
  const Tensor& scaled = out.scaled.value();
  for (int i = 0; i < action.size(); ++i) action[i] = scaled[i];
  if (elapsed_ms != nullptr) {
    auto end = std::chrono::steady_clock::now();
    *elapsed_ms = std::chrono::duration<double, std::milli>(end - start).count();
  }
  return action;
}

std::vector<Tensor> random_policy_states(const System& system,
                                         std::span<const RolloutSpec> specs,
                                         std::uint64_t seed, int min_states) {
  if (specs.empty()) throw ConfigError("random_policy_states: no rollout specs");
  RandomStream rng(seed);
  std::vector<Tensor> states;
  size_t spec_idx = 0;
  while (static_cast<int>(states.size()) < min_states) {
    // a freshly initialized network per rollout; its near-centered
    // commands keep the visited states in the normal flight regime
    PolicyParameters random_policy = make_policy(system, 10, rng.raw());
    PolicyController controller(random_policy);
    const RolloutSpec& spec = specs[spec_idx % specs.size()];
    ++spec_idx;
    Tensor state = system.initial_state(spec);
    for (int t = 0; t < spec.max_steps; ++t) {
      if (system.rollout_done(spec, state)) break;
      states.push_back(state);
      Tensor action = controller.act(system, spec, state, t, nullptr);
      Tensor next = step_plain(system, state, action);
      if (!system.state_ok(next)) break;
      state = std::move(next);
    }
  }
  return states;
}

}  // namespace apg
