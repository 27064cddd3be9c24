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

// Dense layers and normalization shared by the policies and the
// residual dynamics network.

#ifndef APG_NN_HPP_
#define APG_NN_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "apg/random.hpp"
#include "apg/tape.hpp"
#include "apg/tensor.hpp"

namespace apg {

enum class Activation : std::uint8_t { kTanh = 0, kLinear = 1 };

struct Dense {
  int in = 0;
  int out = 0;
  Activation act = Activation::kTanh;
  std::vector<double> weights;  // row-major out x in
  std::vector<double> bias;

  std::size_t param_count() const {
    return static_cast<std::size_t>(in) * out + static_cast<std::size_t>(out);
  }
};

// weights ~ uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)), biases zero
void init_dense(Dense& layer, RandomStream& rng);

struct Normalizer {
  bool identity = true;
  std::vector<double> mean, stddev;
};

// Per-component mean/std over a state collection; std floored at 1e-6.
// Requires at least `min_count` samples.
Normalizer fit_normalizer(std::span<const Tensor> states, int min_count = 1000);

Val apply_normalizer(Tape& tape, const Normalizer& n, Val x);

struct DenseNodes {
  Val weights, bias;
  Activation act = Activation::kTanh;
};

// Records a layer's parameters on the tape, as differentiation roots
// when trainable.
DenseNodes bind_dense(Tape& tape, const Dense& layer, bool trainable);

Val apply_dense(const DenseNodes& layer, Val x);

// Canonical flat parameter order: per layer, weights then bias.
std::size_t params_of(std::span<const Dense> layers);
void export_params(std::span<const Dense> layers, std::span<double> out);
void import_params(std::span<Dense> layers, std::span<const double> in);

}  // namespace apg

#endif  // APG_NN_HPP_
