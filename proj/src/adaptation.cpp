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

#include "apg/adaptation.hpp"

#include <cmath>

namespace apg {

TripleSet collect_triples(const System& target, Controller& controller,
                          std::span<const RolloutSpec> specs, int budget,
                          double tau_div) {
  if (budget < 1) throw ConfigError("collect_triples: budget must be >= 1");
  TripleSet set;
  set.items.reserve(static_cast<size_t>(budget));
  for (size_t spec_idx = 0; spec_idx < specs.size(); ++spec_idx) {
    const RolloutSpec& spec = specs[spec_idx];
    Tensor state = target.initial_state(spec);
    for (int t = 0; t + 1 < spec.max_steps; ++t) {
      if (static_cast<int>(set.items.size()) >= budget) return set;
      if (target.rollout_done(spec, state)) break;
      std::vector<Tensor> refs = target.reference_rows(spec, state, t, 2);
      Tensor action = controller.act(target, spec, state, t, nullptr);
      Tensor next = step_plain(target, state, action);
      set.items.push_back(TransitionTriple{state, action, next});
      if (!target.state_ok(next) || target.divergence(next, refs[0]) > tau_div) {
        next = target.reset_onto(refs[0], refs[1]);
        if (!target.state_ok(next)) break;
      }
      state = std::move(next);
    }
  }
  set.clipped = static_cast<int>(set.items.size()) < budget;
  return set;
}

std::vector<double> ResidualModel::export_flat() const {
  std::vector<double> flat(param_count());
  export_params(layers, std::span<double>(flat));
  return flat;
}

void ResidualModel::import_flat(std::span<const double> flat) {
  if (flat.size() != param_count())
    throw ShapeError("residual import: parameter count mismatch");
  import_params(std::span<Dense>(layers), flat);
}

ResidualModel make_residual(const System& system, std::uint64_t seed) {
  ResidualModel m;
  m.system = system.kind();
  const int in = system.obs_dim() + system.action_dim();
  const int out = system.state_dim();
  Dense l1, l2, l3;
  l1.in = in;
  l1.out = 64;
  l1.act = Activation::kTanh;
  l2.in = 64;
  l2.out = 64;
  l2.act = Activation::kTanh;
  l3.in = 64;
  l3.out = out;
  l3.act = Activation::kLinear;
  m.layers = {l1, l2, l3};
  RandomStream rng(seed);
  for (Dense& l : m.layers) init_dense(l, rng);
  // a residual should start near zero: shrink the head
  for (double& w : m.layers.back().weights) w *= 0.01;
  return m;
}

ResidualNodes bind_residual(Tape& tape, const ResidualModel& model, bool trainable) {
  ResidualNodes nodes;
  nodes.model = &model;
  for (const Dense& l : model.layers)
    nodes.layers.push_back(bind_dense(tape, l, trainable));
  return nodes;
}

Val residual_delta(Tape& tape, const System& base, const ResidualNodes& nodes,
                   Val state, Val action_scaled) {
  Val obs = base.observe(tape, state);
  Val x = concat({obs, action_scaled});
  if (x.size() != nodes.model->layers.front().in)
    throw ShapeError("residual_delta: input width mismatch");
  x = apply_normalizer(tape, nodes.model->input_norm, x);
  for (const DenseNodes& l : nodes.layers) x = apply_dense(l, x);
  if (x.size() != base.state_dim())
    throw ShapeError("residual_delta: output width does not match the state");
  return x;
}

Val residual_step(Tape& tape, const System& base, const ResidualNodes& nodes,
                  Val state, Val action_scaled) {
  return base.step(tape, state, action_scaled) +
         residual_delta(tape, base, nodes, state, action_scaled);
}

ResidualSystem::ResidualSystem(const System& base, const ResidualModel& model)
    : base_(base), model_(model) {
  if (model.layers.empty())
    throw ConfigError("residual system: model has no layers");
  if (model.layers.back().out != base.state_dim())
    throw ShapeError("residual system: output width does not match the state");
}

Val ResidualSystem::step(Tape& tape, Val state, Val action) const {
  ResidualNodes nodes = bind_residual(tape, model_, /*trainable=*/false);
  return residual_step(tape, base_, nodes, state, action);
}

ResidualTrainResult train_residual(const System& base, ResidualModel& model,
                                   const TripleSet& triples, int epochs,
                                   double learning_rate, double momentum) {
  if (triples.items.empty())
    throw ConfigError("train_residual: empty triple dataset");

  // Pre-compute per-triple inputs and residual targets s* - f(s, a);
  // the nominal prediction does not depend on the parameters.
  std::vector<Tensor> inputs, targets;
  inputs.reserve(triples.items.size());
  targets.reserve(triples.items.size());
  {
    Tape scratch;
    for (const TransitionTriple& tr : triples.items) {
      scratch.clear();
      Val s = scratch.constant(tr.state);
      Val obs = base.observe(scratch, s);
      Tensor x(obs.size() + tr.action.size(), 1);
      for (int i = 0; i < obs.size(); ++i) x[i] = obs.value()[i];
      for (int i = 0; i < tr.action.size(); ++i) x[obs.size() + i] = tr.action[i];
      inputs.push_back(std::move(x));

      Tensor f = step_plain(base, tr.state, tr.action);
      Tensor r(f.size(), 1);
      for (int i = 0; i < f.size(); ++i) r[i] = tr.next_state[i] - f[i];
      targets.push_back(std::move(r));
    }
  }
  model.input_norm = fit_normalizer(inputs, /*min_count=*/1);

  OptimizerConfig cfg{.learning_rate = learning_rate, .momentum = momentum,
                      .grad_clip = 0.0};
  OptimizerState opt;
  std::vector<double> flat = model.export_flat();
  std::vector<double> best = flat;
  double best_loss = std::numeric_limits<double>::infinity();

  ResidualTrainResult result;
  Tape tape;
  for (int epoch = 0; epoch <= epochs; ++epoch) {
    tape.clear();
    ResidualNodes nodes = bind_residual(tape, model, /*trainable=*/true);
    Val total = tape.constant(0.0);
    for (size_t i = 0; i < inputs.size(); ++i) {
      Val x = tape.constant(inputs[i]);
      x = apply_normalizer(tape, model.input_norm, x);
      for (const DenseNodes& l : nodes.layers) x = apply_dense(l, x);
      total = total + norm(x - tape.constant(targets[i]), 1e-16);
    }
    // batch mean keeps the step size independent of the triple count
    total = total / static_cast<double>(inputs.size());
    double loss = total.scalar();
    if (epoch == 0) result.initial_loss = loss;
    result.loss_curve.push_back(loss);
    if (!std::isfinite(loss)) {
      result.diverged = true;
      break;
    }
    if (loss < best_loss) {
      best_loss = loss;
      best = flat;
    }
    if (epoch == epochs) break;

    Adjoints adj = tape.backward(total, /*check_finite=*/true);
    std::vector<double> grad;
    grad.reserve(flat.size());
    for (const DenseNodes& l : nodes.layers) {
      for (double g : adj.of(l.weights).data) grad.push_back(g);
      for (double g : adj.of(l.bias).data) grad.push_back(g);
    }
    sgd_step(flat, grad, cfg, opt);
    model.import_flat(flat);
  }

  model.import_flat(best);
  result.final_loss = best_loss;
  return result;
}

FineTuneResult fine_tune(const System& target, const System& base,
                         const ResidualModel& residual, PolicyParameters policy,
                         const TrainOptions& options,
                         const TrajectorySet* trajectories,
                         std::ostream* metrics_out) {
  ResidualSystem model(base, residual);
  TrainResult tr = train(target, model, std::move(policy), options, trajectories,
                         metrics_out);
  FineTuneResult out;
  out.policy = std::move(tr.policy);
  out.metrics = std::move(tr.metrics);
  out.samples_used = tr.samples_used;
  out.diverged = tr.diverged;
  return out;
}

}  // namespace apg
