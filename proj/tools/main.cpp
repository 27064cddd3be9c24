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

#include <CLI11.hpp>
#include <iostream>

#include "apg/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"apgc - differentiable-simulation trajectory tracking toolkit"};
  app.require_subcommand(1);

  apg::TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "train a tracking policy");
  train->add_option("--config", train_args.config_path, "config file");
  train->add_option("--system", train_args.system,
                    "cartpole | quadrotor | fixedwing (when no config given)");
  train->add_option("--trajectories", train_args.trajectory_dir,
                    "trajectory set directory (quadrotor)");
  train->add_option("--out", train_args.checkpoint_out, "checkpoint output path");
  train->add_option("--metrics", train_args.metrics_out, "per-epoch metrics log");
  train->add_option("--seed", train_args.seed, "seed override");
  train->add_option("--epochs", train_args.epochs, "epoch override");
  train->add_option("--horizon", train_args.horizon, "horizon override");
  train->add_option("--mode", train_args.mode, "concurrent | recurrent");

  apg::EvaluateArgs eval_args;
  CLI::App* eval = app.add_subcommand("evaluate", "evaluate a checkpoint");
  eval->add_option("--checkpoint", eval_args.checkpoint, "policy checkpoint")
      ->required();
  eval->add_option("--config", eval_args.config_path, "config file");
  eval->add_option("--system", eval_args.system, "expected system name");
  eval->add_option("--trajectories", eval_args.trajectory_dir,
                   "trajectory set directory (quadrotor)");
  eval->add_option("--report", eval_args.report_out, "report output path");
  eval->add_option("--count", eval_args.count, "number of rollouts");
  eval->add_option("--seed", eval_args.seed, "evaluation seed");
  eval->add_option("--threads", eval_args.threads, "worker threads");
  eval->add_option("--drag", eval_args.drag, "evaluate under velocity drag (1/s)");
  eval->add_option("--residual", eval_args.residual,
                   "evaluate on base dynamics plus this residual checkpoint");

  apg::GenerateArgs gen_args;
  CLI::App* gen =
      app.add_subcommand("generate-trajectories", "write a polynomial trajectory set");
  gen->add_option("--out", gen_args.out_dir, "output directory")->required();
  gen->add_option("--config", gen_args.config_path, "config file");
  gen->add_option("--count", gen_args.count, "number of trajectories");
  gen->add_option("--seed", gen_args.seed, "generation seed");
  gen->add_option("--vmax", gen_args.v_max, "maximum desired speed (m/s)");

  apg::AdaptArgs adapt_args;
  CLI::App* adapt =
      app.add_subcommand("adapt", "residual fit and fine-tune under perturbed dynamics");
  adapt->add_option("--checkpoint", adapt_args.checkpoint, "source policy checkpoint")
      ->required();
  adapt->add_option("--config", adapt_args.config_path, "config file");
  adapt->add_option("--trajectories", adapt_args.trajectory_dir,
                    "trajectory set directory (quadrotor)");
  adapt->add_option("--out", adapt_args.checkpoint_out, "adapted checkpoint path");
  adapt->add_option("--residual-out", adapt_args.residual_out,
                    "residual checkpoint path");
  adapt->add_option("--report", adapt_args.report_out, "before/after report path");
  adapt->add_option("--metrics", adapt_args.metrics_out, "fine-tune metrics log");
  adapt->add_option("--drag", adapt_args.drag, "drag factor (1/s)");
  adapt->add_option("--budget", adapt_args.budget, "residual triple budget");
  adapt->add_option("--fine-tune-samples", adapt_args.fine_tune_samples,
                    "target-dynamics step budget for fine-tuning");
  adapt->add_option("--fine-tune-epochs", adapt_args.fine_tune_epochs,
                    "fine-tune epoch cap");
  adapt->add_option("--seed", adapt_args.seed, "seed override");

  apg::MpcArgs mpc_args;
  CLI::App* mpc = app.add_subcommand("mpc", "run the online-optimization baseline");
  mpc->add_option("--config", mpc_args.config_path, "config file");
  mpc->add_option("--system", mpc_args.system, "system name (when no config given)");
  mpc->add_option("--trajectories", mpc_args.trajectory_dir,
                  "trajectory set directory (quadrotor)");
  mpc->add_option("--report", mpc_args.report_out, "report output path");
  mpc->add_option("--count", mpc_args.count, "number of rollouts");
  mpc->add_option("--seed", mpc_args.seed, "evaluation seed");
  mpc->add_option("--threads", mpc_args.threads, "worker threads");

  std::string inspect_path;
  CLI::App* inspect = app.add_subcommand("inspect-checkpoint", "print checkpoint header");
  inspect->add_option("checkpoint", inspect_path, "checkpoint path")->required();

  CLI11_PARSE(app, argc, argv);

  if (train->parsed()) return apg::cmd_train(train_args, std::cout);
  if (eval->parsed()) return apg::cmd_evaluate(eval_args, std::cout);
  if (gen->parsed()) return apg::cmd_generate_trajectories(gen_args, std::cout);
  if (adapt->parsed()) return apg::cmd_adapt(adapt_args, std::cout);
  if (mpc->parsed()) return apg::cmd_mpc(mpc_args, std::cout);
  if (inspect->parsed()) return apg::cmd_inspect(inspect_path, std::cout);
  return apg::kExitConfig;
}
