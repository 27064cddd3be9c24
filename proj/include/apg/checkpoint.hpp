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

// Versioned binary checkpoints: header (kind, system, architecture,
// scaling, normalizer, config hash) followed by row-major 64-bit
// weights. Loss-free round trip.

#ifndef APG_CHECKPOINT_HPP_
#define APG_CHECKPOINT_HPP_

#include <cstdint>
#include <string>

#include "apg/adaptation.hpp"
#include "apg/policy.hpp"

namespace apg {

enum class CheckpointKind : std::uint8_t { kPolicy = 0, kResidual = 1 };

struct CheckpointInfo {
  CheckpointKind kind = CheckpointKind::kPolicy;
  SystemKind system = SystemKind::kCartPole;
  std::uint32_t version = 0;
  std::uint64_t config_hash = 0;
  std::size_t param_count = 0;
  int horizon = 0;
};

void save_policy_checkpoint(const std::string& path, const PolicyParameters& policy,
                            std::uint64_t config_hash);
PolicyParameters load_policy_checkpoint(const std::string& path,
                                        std::uint64_t* config_hash = nullptr);

void save_residual_checkpoint(const std::string& path, const ResidualModel& model,
                              std::uint64_t config_hash);
ResidualModel load_residual_checkpoint(const std::string& path,
                                       std::uint64_t* config_hash = nullptr);

CheckpointInfo inspect_checkpoint(const std::string& path);

}  // namespace apg

#endif  // APG_CHECKPOINT_HPP_
