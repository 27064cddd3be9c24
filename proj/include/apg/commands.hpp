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

// Command entry points shared by the CLI binary and the test suites.
// Exit codes: 0 ok, 2 configuration error, 3 numerical failure.

#ifndef APG_COMMANDS_HPP_
#define APG_COMMANDS_HPP_

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "apg/config.hpp"
#include "apg/evaluation.hpp"
#include "apg/reference.hpp"

namespace apg {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

// ---- trajectory files -----------------------------------------------------
// Columnar text, one row per step: t px py pz vx vy vz.

void write_trajectory_file(const std::string& path, const ReferenceTrajectory& traj);
ReferenceTrajectory read_trajectory_file(const std::string& path);

void write_trajectory_set(const std::string& dir, const TrajectorySet& set,
                          const PolynomialOptions& opts);
TrajectorySet read_trajectory_set(const std::string& dir);

// ---- report files -----------------------------------------------------------
// Line-delimited records, one per rollout plus one aggregate; keys
// ending in _ms carry wall-clock timings.

void write_report(std::ostream& out, const EvaluationReport& report,
                  const std::vector<std::pair<std::string, std::string>>& meta);
void write_report_file(const std::string& path, const EvaluationReport& report,
                       const std::vector<std::pair<std::string, std::string>>& meta);

// ---- commands ---------------------------------------------------------------

struct TrainArgs {
  std::string config_path;      // empty: built-in defaults for `system`
  std::string system = "quadrotor";
  std::string trajectory_dir;   // quadrotor only
  std::string checkpoint_out = "policy.ckpt";
  std::string metrics_out;      // optional columnar log
  long seed = -1;               // overrides
  int epochs = -1;
  int horizon = -1;
  std::string mode;             // concurrent | recurrent
};
int cmd_train(const TrainArgs& args, std::ostream& log);

struct EvaluateArgs {
  std::string checkpoint;
  std::string config_path;
  std::string system = "";      // checked against the checkpoint
  std::string trajectory_dir;
  std::string report_out;
  int count = -1;               // default: 50 quadrotor, 30 fixed-wing, 20 cartpole
  long seed = -1;
  int threads = 1;
  double drag = 0.0;            // evaluate under drag-perturbed dynamics
  std::string residual;         // evaluate under a residual-augmented model
};
int cmd_evaluate(const EvaluateArgs& args, std::ostream& log);

struct GenerateArgs {
  std::string out_dir;
  std::string config_path;
  int count = -1;
  long seed = -1;
  double v_max = -1.0;
};
int cmd_generate_trajectories(const GenerateArgs& args, std::ostream& log);

struct AdaptArgs {
  std::string checkpoint;
  std::string config_path;
  std::string trajectory_dir;
  std::string checkpoint_out = "adapted.ckpt";
  std::string residual_out = "residual.ckpt";
  std::string report_out;
  std::string metrics_out;
  double drag = 0.3;
  int budget = 1000;             // triples for the residual fit
  int fine_tune_samples = 1000;  // target-dynamics steps during fine-tuning
  long seed = -1;
  int residual_epochs = 200;
  double residual_lr = 1e-3;
  int fine_tune_epochs = 6;
};
int cmd_adapt(const AdaptArgs& args, std::ostream& log);

struct MpcArgs {
  std::string config_path;
  std::string system = "quadrotor";
  std::string trajectory_dir;
  std::string report_out;
  int count = -1;
  long seed = -1;
  int threads = 1;
};
int cmd_mpc(const MpcArgs& args, std::ostream& log);

int cmd_inspect(const std::string& checkpoint, std::ostream& log);

// Shared helpers (exposed for the acceptance suite).
PolicyParameters prepare_initial_policy(const System& system,
                                        const ExperimentConfig& config);
std::vector<RolloutSpec> evaluation_specs(const System& system,
                                          const ExperimentConfig& config,
                                          const TrajectorySet* set, int count,
                                          std::uint64_t seed);

}  // namespace apg

#endif  // APG_COMMANDS_HPP_
