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

#include "apg/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <functional>
#include <fstream>
#include <ostream>
#include <sstream>

#include "apg/adaptation.hpp"
#include "apg/checkpoint.hpp"
#include "apg/mpc.hpp"
#include "apg/training.hpp"

namespace apg {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int guard(std::ostream& log, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    log << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    log << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const fs::filesystem_error& e) {
    log << "filesystem error: " << e.what() << "\n";
    return kExitConfig;
  }
}

ExperimentConfig load_config(const std::string& path, const std::string& system) {
  if (!path.empty()) return ExperimentConfig::load(path);
  return ExperimentConfig::defaults_for(system_from_name(system));
}

}  // namespace

// ---- trajectory files -------------------------------------------------------

void write_trajectory_file(const std::string& path,
                           const ReferenceTrajectory& traj) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write trajectory file '" + path + "'");
  out << "# t px py pz vx vy vz\n";
  for (int i = 0; i < traj.length(); ++i) {
    const Tensor& r = traj.rows[static_cast<size_t>(i)];
    out << num(i * traj.dt);
    for (int k = 0; k < 6; ++k) out << " " << num(r[k]);
    out << "\n";
  }
}

ReferenceTrajectory read_trajectory_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trajectory file '" + path + "'");
  ReferenceTrajectory traj;
  std::string line;
  double prev_t = 0.0;
  bool have_dt = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    double t;
    Tensor row(6, 1);
    if (!(ss >> t >> row[0] >> row[1] >> row[2] >> row[3] >> row[4] >> row[5]))
      throw ConfigError("malformed trajectory row in '" + path + "'");
    if (!have_dt && !traj.rows.empty()) {
      traj.dt = t - prev_t;
      have_dt = true;
    }
    prev_t = t;
    traj.rows.push_back(std::move(row));
  }
  if (traj.rows.empty()) throw ConfigError("empty trajectory file '" + path + "'");
  return traj;
}

void write_trajectory_set(const std::string& dir, const TrajectorySet& set,
                          const PolynomialOptions& opts) {
  fs::create_directories(dir);
  std::ofstream manifest(fs::path(dir) / "manifest.txt");
  if (!manifest) throw ConfigError("cannot write manifest in '" + dir + "'");
  manifest << "# apg-trajectories seed=" << set.seed
           << " count=" << set.train.size() + set.test.size() << " dt="
           << num(opts.dt) << " v_max=" << num(opts.v_max) << " a_max="
           << num(opts.a_max) << "\n";
  int index = 0;
  auto dump = [&](const std::vector<ReferenceTrajectory>& trajs,
                  const char* split) {
    for (const ReferenceTrajectory& traj : trajs) {
      char name[32];
      std::snprintf(name, sizeof(name), "traj_%05d.txt", index++);
      write_trajectory_file((fs::path(dir) / name).string(), traj);
      manifest << name << " " << split << "\n";
    }
  };
  dump(set.train, "train");
  dump(set.test, "test");
}

TrajectorySet read_trajectory_set(const std::string& dir) {
  std::ifstream manifest(fs::path(dir) / "manifest.txt");
  if (!manifest)
    throw ConfigError("cannot open trajectory manifest in '" + dir + "'");
  TrajectorySet set;
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string name, split;
    if (!(ss >> name >> split))
      throw ConfigError("malformed manifest line: " + line);
    ReferenceTrajectory traj = read_trajectory_file((fs::path(dir) / name).string());
    if (split == "train")
      set.train.push_back(std::move(traj));
    else if (split == "test")
      set.test.push_back(std::move(traj));
    else
      throw ConfigError("unknown split '" + split + "' in manifest");
  }
  if (set.train.empty() && set.test.empty())
    throw ConfigError("trajectory manifest lists no files");
  return set;
}

// ---- reports ------------------------------------------------------------------

void write_report(std::ostream& out, const EvaluationReport& report,
                  const std::vector<std::pair<std::string, std::string>>& meta) {
  out << "record=meta";
  for (const auto& [k, v] : meta) out << " " << k << "=" << v;
  out << "\n";
  for (const RolloutOutcome& r : report.rows) {
    out << "record=rollout index=" << r.index << " error=" << num(r.error)
        << " secondary=" << num(r.secondary) << " success=" << (r.success ? 1 : 0)
        << " steps=" << r.steps << " compute_ms=" << num(r.compute_ms) << "\n";
  }
  out << "record=aggregate count=" << report.rows.size()
      << " successes=" << report.successes;
  if (report.undefined)
    out << " success_ratio=undefined";
  else
    out << " success_ratio=" << num(report.success_ratio);
  out << " error_mean=" << num(report.error_mean)
      << " error_std=" << num(report.error_std)
      << " secondary_mean=" << num(report.secondary_mean)
      << " compute_ms_mean=" << num(report.compute_ms_mean) << "\n";
}

void write_report_file(const std::string& path, const EvaluationReport& report,
                       const std::vector<std::pair<std::string, std::string>>& meta) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write report '" + path + "'");
  write_report(out, report, meta);
}

// ---- shared helpers -----------------------------------------------------------

PolicyParameters prepare_initial_policy(const System& system,
                                        const ExperimentConfig& config) {
  PolicyParameters policy =
      make_policy(system, config.training.horizon.steps, config.seed);
  if (system.kind() == SystemKind::kFixedWing) {
    // input normalizer from states visited under a random policy
    std::vector<RolloutSpec> specs =
        eval_specs_fixedwing(config.training, 8, config.seed ^ 0x5EEDull);
    std::vector<Tensor> states = random_policy_states(
        system, specs, config.seed ^ 0xAB1Eull, config.normalizer_samples);
    policy.normalizer = fit_normalizer(states, config.normalizer_samples);
  }
  return policy;
}

std::vector<RolloutSpec> evaluation_specs(const System& system,
                                          const ExperimentConfig& config,
                                          const TrajectorySet* set, int count,
                                          std::uint64_t seed) {
  switch (system.kind()) {
    case SystemKind::kCartPole:
      return eval_specs_cartpole(config.training, count, seed);
    case SystemKind::kFixedWing:
      return eval_specs_fixedwing(config.training, count, seed);
    case SystemKind::kQuadrotor: {
      if (set == nullptr || set->test.empty())
        throw ConfigError("quadrotor evaluation needs a trajectory set");
      size_t n = std::min<size_t>(static_cast<size_t>(count), set->test.size());
      std::vector<RolloutSpec> specs(n);
      for (size_t i = 0; i < n; ++i) {
        specs[i].trajectory = &set->test[i];
        specs[i].max_steps = set->test[i].length() - 1;
      }
      return specs;
    }
  }
  throw ConfigError("unknown system");
}

// ---- commands -------------------------------------------------------------------

int cmd_train(const TrainArgs& args, std::ostream& log) {
  return guard(log, [&]() {
    ExperimentConfig config = load_config(args.config_path, args.system);
    if (args.seed >= 0) config.seed = static_cast<std::uint64_t>(args.seed);
    if (args.epochs >= 0) config.training.epochs = args.epochs;
    if (args.horizon >= 0) config.training.horizon.steps = args.horizon;
    if (!args.mode.empty()) {
      if (args.mode == "concurrent")
        config.training.horizon.mode = HorizonMode::kConcurrent;
      else if (args.mode == "recurrent")
        config.training.horizon.mode = HorizonMode::kRecurrent;
      else
        throw ConfigError("mode must be concurrent or recurrent");
    }
    config.training.seed = config.seed;

    std::unique_ptr<System> system = config.make_system();
    TrajectorySet set;
    const TrajectorySet* set_ptr = nullptr;
    if (system->kind() == SystemKind::kQuadrotor) {
      if (args.trajectory_dir.empty())
        throw ConfigError("quadrotor training needs --trajectories <dir>");
      set = read_trajectory_set(args.trajectory_dir);
      set_ptr = &set;
    }

    PolicyParameters policy = prepare_initial_policy(*system, config);

    std::ofstream metrics;
    std::ostream* metrics_out = nullptr;
    if (!args.metrics_out.empty()) {
      metrics.open(args.metrics_out);
      if (!metrics) throw ConfigError("cannot write metrics '" + args.metrics_out + "'");
      metrics_out = &metrics;
    }

    TrainResult result =
        train(*system, *system, std::move(policy), config.training, set_ptr,
              metrics_out);
    save_policy_checkpoint(args.checkpoint_out, result.policy, config.hash());
    log << "trained " << system_name(system->kind()) << " for "
        << result.metrics.size() << " epochs; checkpoint: " << args.checkpoint_out
        << "\n";
    if (!result.metrics.empty()) {
      const EpochMetrics& last = result.metrics.back();
      log << "final eval: error " << last.eval_error_mean << " +- "
          << last.eval_error_std << ", success " << last.eval_success << "\n";
    }
    if (result.diverged) {
      log << "training diverged; last finite checkpoint retained\n";
      return kExitNumerical;
    }
    return kExitOk;
  });
}

int cmd_evaluate(const EvaluateArgs& args, std::ostream& log) {
  return guard(log, [&]() {
    PolicyParameters policy = load_policy_checkpoint(args.checkpoint);
    if (!args.system.empty() && system_from_name(args.system) != policy.system)
      throw ConfigError("checkpoint system does not match the requested system");

    ExperimentConfig config =
        load_config(args.config_path, system_name(policy.system));
    if (config.system != policy.system)
      throw ConfigError("config system does not match the checkpoint");
    std::unique_ptr<System> base = config.make_system();

    // optional perturbed/augmented dynamics
    std::unique_ptr<DragPerturbedSystem> dragged;
    ResidualModel residual;
    std::unique_ptr<ResidualSystem> augmented;
    const System* system = base.get();
    if (args.drag > 0.0) {
      dragged = std::make_unique<DragPerturbedSystem>(*base, args.drag);
      system = dragged.get();
    }
    if (!args.residual.empty()) {
      residual = load_residual_checkpoint(args.residual);
      augmented = std::make_unique<ResidualSystem>(*base, residual);
      system = augmented.get();
    }

    int count = args.count;
    if (count < 0)
      count = policy.system == SystemKind::kQuadrotor   ? 50
              : policy.system == SystemKind::kFixedWing ? 30
                                                        : 20;
    std::uint64_t seed =
        args.seed >= 0 ? static_cast<std::uint64_t>(args.seed) : config.seed ^ 0xE7A1ull;

    TrajectorySet set;
    const TrajectorySet* set_ptr = nullptr;
    if (policy.system == SystemKind::kQuadrotor) {
      if (args.trajectory_dir.empty())
        throw ConfigError("quadrotor evaluation needs --trajectories <dir>");
      set = read_trajectory_set(args.trajectory_dir);
      set_ptr = &set;
    }
    std::vector<RolloutSpec> specs =
        evaluation_specs(*system, config, set_ptr, count, seed);

    EvaluationOptions opts;
    opts.diverge_limit = config.training.eval_diverge_limit;
    EvaluationReport report = evaluate(
        *system, [&]() { return std::make_unique<PolicyController>(policy); },
        specs, opts, args.threads);

    std::vector<std::pair<std::string, std::string>> meta = {
        {"command", "evaluate"},
        {"system", system_name(policy.system)},
        {"checkpoint", args.checkpoint},
        {"count", std::to_string(specs.size())},
        {"seed", std::to_string(seed)},
        {"drag", num(args.drag)},
    };
    if (!args.report_out.empty()) write_report_file(args.report_out, report, meta);
    write_report(log, report, meta);
    return kExitOk;
  });
}

int cmd_generate_trajectories(const GenerateArgs& args, std::ostream& log) {
  return guard(log, [&]() {
    ExperimentConfig config = load_config(args.config_path, "quadrotor");
    int count = args.count > 0 ? args.count : config.trajectory_count;
    std::uint64_t seed =
        args.seed >= 0 ? static_cast<std::uint64_t>(args.seed) : config.seed;
    PolynomialOptions opts = config.trajectories;
    if (args.v_max > 0.0) opts.v_max = args.v_max;
    if (count < 1) throw ConfigError("trajectory count must be >= 1");

    TrajectorySet set =
        generate_trajectory_set(seed, count, opts, config.test_fraction);
    write_trajectory_set(args.out_dir, set, opts);
    log << "wrote " << set.train.size() << " train / " << set.test.size()
        << " test trajectories to " << args.out_dir << "\n";
    return kExitOk;
  });
}

int cmd_adapt(const AdaptArgs& args, std::ostream& log) {
  return guard(log, [&]() {
    PolicyParameters policy = load_policy_checkpoint(args.checkpoint);
    ExperimentConfig config =
        load_config(args.config_path, system_name(policy.system));
    if (config.system != policy.system)
      throw ConfigError("config system does not match the checkpoint");
    if (args.drag < 0.0) throw ConfigError("drag rate must be non-negative");
    std::unique_ptr<System> base = config.make_system();
    DragPerturbedSystem target(*base, args.drag);
    std::uint64_t seed =
        args.seed >= 0 ? static_cast<std::uint64_t>(args.seed) : config.seed;

    TrajectorySet set;
    const TrajectorySet* set_ptr = nullptr;
    if (policy.system == SystemKind::kQuadrotor) {
      if (args.trajectory_dir.empty())
        throw ConfigError("quadrotor adaptation needs --trajectories <dir>");
      set = read_trajectory_set(args.trajectory_dir);
      set_ptr = &set;
    }

    // zero-shot: the source policy in the target dynamics
    std::vector<RolloutSpec> eval_specs = evaluation_specs(
        target, config, set_ptr, 50, seed ^ 0xE7A1ull);
    EvaluationOptions eval_opts;
    EvaluationReport zero_shot = evaluate(
        target, [&]() { return std::make_unique<PolicyController>(policy); },
        eval_specs, eval_opts, config.training.threads);

    // residual fit on a budget of target-dynamics triples
    RandomStream rng(seed ^ 0x7121ull);
    std::vector<RolloutSpec> collect_specs;
    std::vector<ReferenceTrajectory> storage;
    if (set_ptr != nullptr) {
      int needed = 2 + args.budget / 90;
      for (int i = 0; i < needed; ++i) {
        const ReferenceTrajectory& traj =
            set.train[static_cast<size_t>(rng.integer(set.train.size()))];
        storage.push_back(traj);
      }
      for (const ReferenceTrajectory& traj : storage) {
        RolloutSpec spec;
        spec.trajectory = &traj;
        spec.max_steps = traj.length() - 1;
        collect_specs.push_back(spec);
      }
    } else if (policy.system == SystemKind::kFixedWing) {
      collect_specs = eval_specs_fixedwing(config.training, 2 + args.budget / 100,
                                           seed ^ 0x7122ull);
    } else {
      throw ConfigError("adaptation supports the quadrotor and fixed-wing systems");
    }

    PolicyController collector(policy);
    int budget = args.budget;
    long available = 0;
    for (const RolloutSpec& s : collect_specs) available += s.max_steps - 1;
    if (budget > available) {
      log << "warning: budget " << budget << " clipped to " << available
          << " available steps\n";
      budget = static_cast<int>(available);
    }
    TripleSet triples = collect_triples(target, collector, collect_specs, budget,
                                        config.training.curriculum.tau_init * 5.0);

    ResidualModel residual = make_residual(*base, seed ^ 0xD317ull);
    ResidualTrainResult fit = train_residual(*base, residual, triples,
                                             args.residual_epochs, args.residual_lr,
                                             0.9);
    save_residual_checkpoint(args.residual_out, residual, config.hash());
    log << "residual: " << triples.items.size() << " triples, loss "
        << fit.initial_loss << " -> " << fit.final_loss << "\n";

    // fine-tune through the augmented model, interacting with the target
    TrainOptions ft = config.training;
    ft.seed = seed ^ 0xF17Eull;
    ft.epochs = args.fine_tune_epochs;
    ft.sample_budget = args.fine_tune_samples;
    ft.rollouts_per_epoch = std::max(2, ft.rollouts_per_epoch / 4);
    std::ofstream metrics;
    std::ostream* metrics_out = nullptr;
    if (!args.metrics_out.empty()) {
      metrics.open(args.metrics_out);
      metrics_out = &metrics;
    }
    FineTuneResult tuned = fine_tune(target, *base, residual, policy, ft, set_ptr,
                                     metrics_out);
    save_policy_checkpoint(args.checkpoint_out, tuned.policy, config.hash());

    EvaluationReport few_shot = evaluate(
        target,
        [&]() { return std::make_unique<PolicyController>(tuned.policy); },
        eval_specs, eval_opts, config.training.threads);

    std::vector<std::pair<std::string, std::string>> meta = {
        {"command", "adapt"},
        {"system", system_name(policy.system)},
        {"drag", num(args.drag)},
        {"budget", std::to_string(triples.items.size())},
        {"fine_tune_samples", std::to_string(tuned.samples_used)},
    };
    log << "zero-shot error " << zero_shot.error_mean << ", few-shot error "
        << few_shot.error_mean << "\n";
    if (!args.report_out.empty()) {
      std::ofstream out(args.report_out);
      if (!out) throw ConfigError("cannot write report '" + args.report_out + "'");
      std::vector<std::pair<std::string, std::string>> zs = meta;
      zs.emplace_back("phase", "zero_shot");
      write_report(out, zero_shot, zs);
      std::vector<std::pair<std::string, std::string>> fs_meta = meta;
      fs_meta.emplace_back("phase", "few_shot");
      write_report(out, few_shot, fs_meta);
    }
    return tuned.diverged ? kExitNumerical : kExitOk;
  });
}

int cmd_mpc(const MpcArgs& args, std::ostream& log) {
  return guard(log, [&]() {
    ExperimentConfig config = load_config(args.config_path, args.system);
    std::unique_ptr<System> system = config.make_system();
    std::uint64_t seed =
        args.seed >= 0 ? static_cast<std::uint64_t>(args.seed) : config.seed ^ 0xE7A1ull;
    int count = args.count;
    if (count < 0)
      count = system->kind() == SystemKind::kQuadrotor   ? 50
              : system->kind() == SystemKind::kFixedWing ? 30
                                                         : 20;

    TrajectorySet set;
    const TrajectorySet* set_ptr = nullptr;
    if (system->kind() == SystemKind::kQuadrotor) {
      if (args.trajectory_dir.empty())
        throw ConfigError("quadrotor mpc needs --trajectories <dir>");
      set = read_trajectory_set(args.trajectory_dir);
      set_ptr = &set;
    }
    std::vector<RolloutSpec> specs =
        evaluation_specs(*system, config, set_ptr, count, seed);

    EvaluationOptions opts;
    opts.diverge_limit = config.training.eval_diverge_limit;
    EvaluationReport report =
        mpc_evaluate(*system, config.mpc, specs, opts, args.threads);

    std::vector<std::pair<std::string, std::string>> meta = {
        {"command", "mpc"},
        {"system", system_name(system->kind())},
        {"count", std::to_string(specs.size())},
        {"seed", std::to_string(seed)},
        {"iterations", std::to_string(config.mpc.iterations)},
    };
    if (!args.report_out.empty()) write_report_file(args.report_out, report, meta);
    write_report(log, report, meta);

    int failed = static_cast<int>(report.rows.size()) - report.successes;
    if (!report.rows.empty() && failed * 2 > static_cast<int>(report.rows.size())) {
      log << "mpc failed on more than half of the rollouts\n";
      return kExitNumerical;
    }
    return kExitOk;
  });
}

int cmd_inspect(const std::string& checkpoint, std::ostream& log) {
  return guard(log, [&]() {
    CheckpointInfo info = inspect_checkpoint(checkpoint);
    log << "kind: "
        << (info.kind == CheckpointKind::kPolicy ? "policy" : "residual") << "\n"
        << "system: " << system_name(info.system) << "\n"
        << "version: " << info.version << "\n"
        << "parameters: " << info.param_count << "\n";
    if (info.kind == CheckpointKind::kPolicy)
      log << "horizon: " << info.horizon << "\n";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(info.config_hash));
    log << "config_hash: " << buf << "\n";
    return kExitOk;
  });
}

}  // namespace apg
