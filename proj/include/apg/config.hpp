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

// Layered plain-text configuration. An empty file reproduces the
// built-in per-system defaults; every key is validated.

#ifndef APG_CONFIG_HPP_
#define APG_CONFIG_HPP_

#include <cstdint>
#include <memory>
#include <string>

#include "apg/mpc.hpp"
#include "apg/system.hpp"
#include "apg/training.hpp"

namespace apg {

struct ExperimentConfig {
  SystemKind system = SystemKind::kQuadrotor;
  std::uint64_t seed = 1;

  CartPoleParams cartpole;
  QuadrotorParams quadrotor;
  FixedWingParams fixedwing;

  TrainOptions training;
  MpcConfig mpc;

  PolynomialOptions trajectories;
  int trajectory_count = 600;
  double test_fraction = 0.1;
  int normalizer_samples = 1500;

  // built-in defaults per system (optimizer, curriculum, horizons)
  static ExperimentConfig defaults_for(SystemKind kind);

  // parse a file over the defaults for its `system` key
  static ExperimentConfig load(const std::string& path);
  static ExperimentConfig parse(const std::string& text);

  std::string serialize() const;   // canonical key ordering
  std::uint64_t hash() const;      // FNV-1a over serialize()

  std::unique_ptr<System> make_system() const;
};

}  // namespace apg

#endif  // APG_CONFIG_HPP_
