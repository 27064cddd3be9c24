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

#include "apg/nn.hpp"

#include <cmath>

namespace apg {

void init_dense(Dense& layer, RandomStream& rng) {
  if (layer.in <= 0 || layer.out <= 0)
    throw ConfigError("dense layer needs positive fan-in and fan-out");
  double bound = std::sqrt(1.0 / layer.in);
  layer.weights.resize(static_cast<size_t>(layer.in) * layer.out);
  layer.bias.assign(static_cast<size_t>(layer.out), 0.0);
  for (double& w : layer.weights) w = rng.uniform(-bound, bound);
}

Normalizer fit_normalizer(std::span<const Tensor> states, int min_count) {
  if (states.empty()) throw ConfigError("fit_normalizer: empty state collection");
  if (static_cast<int>(states.size()) < min_count)
    throw ConfigError("fit_normalizer: need at least " + std::to_string(min_count) +
                      " states, got " + std::to_string(states.size()));
  const int dim = states[0].size();
  Normalizer n;
  n.identity = false;
  n.mean.assign(static_cast<size_t>(dim), 0.0);
  n.stddev.assign(static_cast<size_t>(dim), 0.0);
  for (const Tensor& s : states) {
    if (s.size() != dim) throw ShapeError("fit_normalizer: inconsistent state width");
    for (int i = 0; i < dim; ++i) n.mean[static_cast<size_t>(i)] += s[i];
  }
  for (double& m : n.mean) m /= static_cast<double>(states.size());
  for (const Tensor& s : states)
    for (int i = 0; i < dim; ++i) {
      double d = s[i] - n.mean[static_cast<size_t>(i)];
      n.stddev[static_cast<size_t>(i)] += d * d;
    }
  for (double& v : n.stddev)
    v = std::max(std::sqrt(v / static_cast<double>(states.size())), 1e-6);
  return n;
}

Val apply_normalizer(Tape& tape, const Normalizer& n, Val x) {
  if (n.identity) return x;
  if (static_cast<size_t>(x.size()) != n.mean.size())
    throw ShapeError("normalizer width does not match input");
  Val mean = tape.constant(Tensor::from(n.mean));
  Val stddev = tape.constant(Tensor::from(n.stddev));
  return (x - mean) / stddev;
}

DenseNodes bind_dense(Tape& tape, const Dense& layer, bool trainable) {
  Tensor w(layer.out, layer.in);
  w.data = layer.weights;
  Tensor b = Tensor::from(layer.bias);
  DenseNodes nodes;
  nodes.act = layer.act;
  nodes.weights = trainable ? tape.variable(std::move(w)) : tape.constant(std::move(w));
  nodes.bias = trainable ? tape.variable(std::move(b)) : tape.constant(std::move(b));
  return nodes;
}

Val apply_dense(const DenseNodes& layer, Val x) {
  Val y = matvec(layer.weights, x) + layer.bias;
  return layer.act == Activation::kTanh ? tanh(y) : y;
}

std::size_t params_of(std::span<const Dense> layers) {
  std::size_t n = 0;
  for (const Dense& l : layers) n += l.param_count();
  return n;
}

void export_params(std::span<const Dense> layers, std::span<double> out) {
  size_t at = 0;
  for (const Dense& l : layers) {
    for (double w : l.weights) out[at++] = w;
    for (double b : l.bias) out[at++] = b;
  }
}

void import_params(std::span<Dense> layers, std::span<const double> in) {
  size_t at = 0;
  for (Dense& l : layers) {
    for (double& w : l.weights) w = in[at++];
    for (double& b : l.bias) b = in[at++];
  }
}

}  // namespace apg
