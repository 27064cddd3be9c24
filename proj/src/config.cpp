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

#include "apg/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace apg {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double to_number(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: key '" + key + "' expects true/false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_number(key, trim(item)));
  if (out.empty()) throw ConfigError("config: key '" + key + "' expects a list");
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ",";
    out += fmt(v[i]);
  }
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults_for(SystemKind kind) {
  ExperimentConfig c;
  c.system = kind;
  c.training.horizon.steps = 10;
  c.training.horizon.mode = HorizonMode::kConcurrent;
  c.training.batch_size = 8;
  c.training.optimizer.grad_clip = 10.0;
  c.mpc.horizon = 10;
  c.mpc.iterations = 50;
  c.mpc.momentum = 0.8;

  switch (kind) {
    case SystemKind::kCartPole:
      c.training.optimizer.learning_rate = 1e-7;
      c.training.optimizer.momentum = 0.0;
      c.training.curriculum.enabled = false;
      c.training.epochs = 30;
      c.training.rollouts_per_epoch = 20;
      c.training.eval_rollouts = 20;
      c.mpc.step_size = 0.001;
      break;
    case SystemKind::kQuadrotor:
      c.training.optimizer.learning_rate = 1e-5;
      c.training.optimizer.momentum = 0.9;
      c.training.curriculum.enabled = true;
      c.training.curriculum.tau_init = 0.1;
      c.training.curriculum.tau_increment = 0.05;
      c.training.curriculum.epochs_per_increment = 5;
      c.training.curriculum.tau_max = 2.0;
      c.training.curriculum.speed_stages = {0.5, 0.75, 1.0};
      c.training.epochs = 40;
      c.training.rollouts_per_epoch = 24;
      c.training.eval_rollouts = 100;
      c.mpc.step_size = 0.05;
      break;
    case SystemKind::kFixedWing:
      c.training.optimizer.learning_rate = 1e-4;
      c.training.optimizer.momentum = 0.9;
      c.training.curriculum.enabled = true;
      c.training.curriculum.tau_init = 4.0;
      c.training.curriculum.tau_increment = 0.5;
      c.training.curriculum.epochs_per_increment = 1;
      c.training.curriculum.tau_max = 20.0;
      c.training.curriculum.speed_stages = {1.0};
      c.training.epochs = 12;
      c.training.rollouts_per_epoch = 16;
      c.training.eval_rollouts = 30;
      c.mpc.step_size = 0.005;
      c.mpc.momentum = 0.5;
      break;
  }
  return c;
}

namespace {

// Field registry: one lambda pair per key keeps parse and serialize in
// lockstep.
struct Field {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define NUM_FIELD(expr)                                                     \
  Field{[](ExperimentConfig& c, const std::string& v) {                    \
          c.expr = static_cast<decltype(c.expr)>(to_number(#expr, v));     \
        },                                                                  \
        [](const ExperimentConfig& c) { return fmt(static_cast<double>(c.expr)); }}

#define BOOL_FIELD(expr)                                                   \
  Field{[](ExperimentConfig& c, const std::string& v) {                   \
          c.expr = to_bool(#expr, v);                                      \
        },                                                                 \
        [](const ExperimentConfig& c) { return c.expr ? "true" : "false"; }}

const std::map<std::string, Field>& field_registry() {
  static const std::map<std::string, Field> reg = {
      {"dynamics.cartpole_cart_mass", NUM_FIELD(cartpole.cart_mass)},
      {"dynamics.cartpole_pole_mass", NUM_FIELD(cartpole.pole_mass)},
      {"dynamics.cartpole_half_length", NUM_FIELD(cartpole.half_length)},
      {"dynamics.cartpole_gravity", NUM_FIELD(cartpole.gravity)},
      {"dynamics.cartpole_force_scale", NUM_FIELD(cartpole.force_scale)},
      {"dynamics.cartpole_dt", NUM_FIELD(cartpole.dt)},
      {"dynamics.quad_mass", NUM_FIELD(quadrotor.mass)},
      {"dynamics.quad_gravity", NUM_FIELD(quadrotor.gravity)},
      {"dynamics.quad_dt", NUM_FIELD(quadrotor.dt)},
      {"dynamics.quad_body_rate_gain", NUM_FIELD(quadrotor.body_rate_gain)},
      {"dynamics.quad_thrust_min", NUM_FIELD(quadrotor.thrust_min)},
      {"dynamics.quad_thrust_max", NUM_FIELD(quadrotor.thrust_max)},
      {"dynamics.quad_body_rate_max", NUM_FIELD(quadrotor.body_rate_max)},
      {"dynamics.fw_mass", NUM_FIELD(fixedwing.mass)},
      {"dynamics.fw_gravity", NUM_FIELD(fixedwing.gravity)},
      {"dynamics.fw_rho", NUM_FIELD(fixedwing.rho)},
      {"dynamics.fw_wing_area", NUM_FIELD(fixedwing.wing_area)},
      {"dynamics.fw_wingspan", NUM_FIELD(fixedwing.wingspan)},
      {"dynamics.fw_chord", NUM_FIELD(fixedwing.chord)},
      {"dynamics.fw_Jx", NUM_FIELD(fixedwing.Jx)},
      {"dynamics.fw_Jy", NUM_FIELD(fixedwing.Jy)},
      {"dynamics.fw_Jz", NUM_FIELD(fixedwing.Jz)},
      {"dynamics.fw_Jxz", NUM_FIELD(fixedwing.Jxz)},
      {"dynamics.fw_CL0", NUM_FIELD(fixedwing.CL0)},
      {"dynamics.fw_CL_alpha", NUM_FIELD(fixedwing.CL_alpha)},
      {"dynamics.fw_CL_q", NUM_FIELD(fixedwing.CL_q)},
      {"dynamics.fw_CL_delta_e", NUM_FIELD(fixedwing.CL_delta_e)},
      {"dynamics.fw_CD0", NUM_FIELD(fixedwing.CD0)},
      {"dynamics.fw_CD_alpha", NUM_FIELD(fixedwing.CD_alpha)},
      {"dynamics.fw_CD_q", NUM_FIELD(fixedwing.CD_q)},
      {"dynamics.fw_CD_delta_e", NUM_FIELD(fixedwing.CD_delta_e)},
      {"dynamics.fw_Cm0", NUM_FIELD(fixedwing.Cm0)},
      {"dynamics.fw_Cm_alpha", NUM_FIELD(fixedwing.Cm_alpha)},
      {"dynamics.fw_Cm_q", NUM_FIELD(fixedwing.Cm_q)},
      {"dynamics.fw_Cm_delta_e", NUM_FIELD(fixedwing.Cm_delta_e)},
      {"dynamics.fw_CY0", NUM_FIELD(fixedwing.CY0)},
      {"dynamics.fw_CY_beta", NUM_FIELD(fixedwing.CY_beta)},
      {"dynamics.fw_CY_p", NUM_FIELD(fixedwing.CY_p)},
      {"dynamics.fw_CY_r", NUM_FIELD(fixedwing.CY_r)},
      {"dynamics.fw_CY_delta_a", NUM_FIELD(fixedwing.CY_delta_a)},
      {"dynamics.fw_CY_delta_r", NUM_FIELD(fixedwing.CY_delta_r)},
      {"dynamics.fw_Cl0", NUM_FIELD(fixedwing.Cl0)},
      {"dynamics.fw_Cl_beta", NUM_FIELD(fixedwing.Cl_beta)},
      {"dynamics.fw_Cl_p", NUM_FIELD(fixedwing.Cl_p)},
      {"dynamics.fw_Cl_r", NUM_FIELD(fixedwing.Cl_r)},
      {"dynamics.fw_Cl_delta_a", NUM_FIELD(fixedwing.Cl_delta_a)},
      {"dynamics.fw_Cl_delta_r", NUM_FIELD(fixedwing.Cl_delta_r)},
      {"dynamics.fw_Cn0", NUM_FIELD(fixedwing.Cn0)},
      {"dynamics.fw_Cn_beta", NUM_FIELD(fixedwing.Cn_beta)},
      {"dynamics.fw_Cn_p", NUM_FIELD(fixedwing.Cn_p)},
      {"dynamics.fw_Cn_r", NUM_FIELD(fixedwing.Cn_r)},
      {"dynamics.fw_Cn_delta_a", NUM_FIELD(fixedwing.Cn_delta_a)},
      {"dynamics.fw_Cn_delta_r", NUM_FIELD(fixedwing.Cn_delta_r)},
      {"dynamics.fw_dt", NUM_FIELD(fixedwing.dt)},
      {"dynamics.fw_airspeed_floor", NUM_FIELD(fixedwing.airspeed_floor)},
      {"dynamics.fw_cruise_speed", NUM_FIELD(fixedwing.cruise_speed)},
      {"dynamics.fw_thrust_min", NUM_FIELD(fixedwing.thrust_min)},
      {"dynamics.fw_thrust_max", NUM_FIELD(fixedwing.thrust_max)},
      {"dynamics.fw_elevator_max", NUM_FIELD(fixedwing.elevator_max)},
      {"dynamics.fw_aileron_max", NUM_FIELD(fixedwing.aileron_max)},
      {"dynamics.fw_rudder_max", NUM_FIELD(fixedwing.rudder_max)},

      {"policy.normalizer_samples", NUM_FIELD(normalizer_samples)},

      {"training.horizon", NUM_FIELD(training.horizon.steps)},
      {"training.epochs", NUM_FIELD(training.epochs)},
      {"training.batch_size", NUM_FIELD(training.batch_size)},
      {"training.learning_rate", NUM_FIELD(training.optimizer.learning_rate)},
      {"training.momentum", NUM_FIELD(training.optimizer.momentum)},
      {"training.grad_clip", NUM_FIELD(training.optimizer.grad_clip)},
      {"training.rollouts_per_epoch", NUM_FIELD(training.rollouts_per_epoch)},
      {"training.eval_rollouts", NUM_FIELD(training.eval_rollouts)},
      {"training.collect_steps", NUM_FIELD(training.collect_steps)},
      {"training.threads", NUM_FIELD(training.threads)},
      {"training.sample_budget", NUM_FIELD(training.sample_budget)},
      {"training.eval_diverge_limit", NUM_FIELD(training.eval_diverge_limit)},
      {"training.cp_start_alpha", NUM_FIELD(training.cp_start_alpha)},
      {"training.cp_start_rate", NUM_FIELD(training.cp_start_rate)},
      {"training.cp_eval_alpha", NUM_FIELD(training.cp_eval_alpha)},
      {"training.fw_target_x", NUM_FIELD(training.fw_target_x)},
      {"training.fw_target_span", NUM_FIELD(training.fw_target_span)},
      {"training.fw_max_steps", NUM_FIELD(training.fw_max_steps)},
      {"training.keep_best", BOOL_FIELD(training.keep_best)},

      {"curriculum.enabled", BOOL_FIELD(training.curriculum.enabled)},
      {"curriculum.tau_init", NUM_FIELD(training.curriculum.tau_init)},
      {"curriculum.tau_increment", NUM_FIELD(training.curriculum.tau_increment)},
      {"curriculum.tau_max", NUM_FIELD(training.curriculum.tau_max)},
      {"curriculum.epochs_per_increment",
       NUM_FIELD(training.curriculum.epochs_per_increment)},
      {"curriculum.stage_success_threshold",
       NUM_FIELD(training.curriculum.stage_success_threshold)},

      {"mpc.horizon", NUM_FIELD(mpc.horizon)},
      {"mpc.iterations", NUM_FIELD(mpc.iterations)},
      {"mpc.step_size", NUM_FIELD(mpc.step_size)},
      {"mpc.momentum", NUM_FIELD(mpc.momentum)},
      {"mpc.warm_start", BOOL_FIELD(mpc.warm_start)},

      {"trajectories.count", NUM_FIELD(trajectory_count)},
      {"trajectories.test_fraction", NUM_FIELD(test_fraction)},
      {"trajectories.duration_s", NUM_FIELD(trajectories.duration_s)},
      {"trajectories.dt", NUM_FIELD(trajectories.dt)},
      {"trajectories.v_max", NUM_FIELD(trajectories.v_max)},
      {"trajectories.a_max", NUM_FIELD(trajectories.a_max)},
      {"trajectories.waypoints", NUM_FIELD(trajectories.waypoints)},
      {"trajectories.cube_half", NUM_FIELD(trajectories.cube_half)},
  };
  return reg;
}

#undef NUM_FIELD
#undef BOOL_FIELD

}  // namespace

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  // first pass: find the system key so defaults can be layered under it
  SystemKind kind = SystemKind::kQuadrotor;
  {
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
      line = trim(line.substr(0, line.find('#')));
      size_t eq = line.find('=');
      if (eq == std::string::npos) continue;
      if (trim(line.substr(0, eq)) == "system")
        kind = system_from_name(trim(line.substr(eq + 1)));
    }
  }

  ExperimentConfig c = defaults_for(kind);
  std::stringstream ss(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));

    if (section.empty()) {
      if (key == "system") continue;  // handled in the first pass
      if (key == "seed") {
        c.seed = static_cast<std::uint64_t>(to_number(key, value));
        continue;
      }
      throw ConfigError("config: unknown top-level key '" + key + "'");
    }
    if (section == "training" && key == "mode") {
      if (value == "concurrent")
        c.training.horizon.mode = HorizonMode::kConcurrent;
      else if (value == "recurrent")
        c.training.horizon.mode = HorizonMode::kRecurrent;
      else
        throw ConfigError("config: mode must be concurrent or recurrent");
      continue;
    }
    if (section == "curriculum" && key == "speed_stages") {
      c.training.curriculum.speed_stages = to_list(key, value);
      continue;
    }
    auto it = field_registry().find(section + "." + key);
    if (it == field_registry().end())
      throw ConfigError("config: unknown key '" + key + "' in section [" + section +
                        "]");
    it->second.set(c, value);
  }

  if (c.training.horizon.steps < 1)
    throw ConfigError("config: horizon must be >= 1");
  if (c.training.batch_size < 1)
    throw ConfigError("config: batch_size must be >= 1");
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

std::string ExperimentConfig::serialize() const {
  std::string out;
  out += "system = " + std::string(system_name(system)) + "\n";
  out += "seed = " + std::to_string(seed) + "\n";
  out += std::string("[training]\nmode = ") +
         (training.horizon.mode == HorizonMode::kConcurrent ? "concurrent"
                                                            : "recurrent") +
         "\n";
  out += "[curriculum]\nspeed_stages = " +
         fmt_list(training.curriculum.speed_stages) + "\n";
  std::string section;
  for (const auto& [key, field] : field_registry()) {
    size_t dotpos = key.find('.');
    std::string sec = key.substr(0, dotpos);
    if (sec != section) {
      out += "[" + sec + "]\n";
      section = sec;
    }
    out += key.substr(dotpos + 1) + " = " + field.get(*this) + "\n";
  }
  return out;
}

std::uint64_t ExperimentConfig::hash() const {
  std::string text = serialize();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::unique_ptr<System> ExperimentConfig::make_system() const {
  switch (system) {
    case SystemKind::kCartPole: return std::make_unique<CartPoleSystem>(cartpole);
    case SystemKind::kQuadrotor: return std::make_unique<QuadrotorSystem>(quadrotor);
    case SystemKind::kFixedWing: return std::make_unique<FixedWingSystem>(fixedwing);
  }
  throw ConfigError("config: unknown system");
}

}  // namespace apg
