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

// Six-degree-of-freedom small-UAV dynamics with linear aerodynamic
// force and moment coefficients, after the standard small-aircraft
// textbook formulation. Inertial frame is NED (z down); body velocities
// are (u, v, w); attitude is Euler roll/pitch/yaw.

#ifndef APG_FIXEDWING_HPP_
#define APG_FIXEDWING_HPP_

#include "apg/geometry.hpp"
#include "apg/tape.hpp"
#include "apg/tensor.hpp"

namespace apg {

struct FixedWingParams {
  // airframe
  double mass = 1.1;        // kg
  double gravity = 9.81;    // m/s^2
  double rho = 1.225;       // kg/m^3
  double wing_area = 0.276; // m^2
  double wingspan = 1.29;   // m
  double chord = 0.24;      // m
  double Jx = 0.045, Jy = 0.057, Jz = 0.095, Jxz = 0.0;  // kg m^2

  // lift / drag / pitch moment (linear in alpha, rates, elevator)
  double CL0 = 0.28, CL_alpha = 5.0, CL_q = 0.0, CL_delta_e = 0.0;
  double CD0 = 0.03, CD_alpha = 0.30, CD_q = 0.0, CD_delta_e = 0.0;
  double Cm0 = 0.05, Cm_alpha = -0.9, Cm_q = -6.0, Cm_delta_e = -0.5;

  // side force / roll / yaw (linear in beta, rates, aileron, rudder)
  double CY0 = 0.0, CY_beta = -0.8, CY_p = 0.0, CY_r = 0.0;
  double CY_delta_a = 0.0, CY_delta_r = 0.19;
  double Cl0 = 0.0, Cl_beta = -0.12, Cl_p = -0.45, Cl_r = 0.03;
  double Cl_delta_a = 0.45, Cl_delta_r = 0.0;
  double Cn0 = 0.0, Cn_beta = 0.12, Cn_p = 0.0, Cn_r = -0.35;
  double Cn_delta_a = 0.0, Cn_delta_r = -0.1;

  // integration and envelope
  double dt = 0.05;               // s
  double airspeed_floor = 0.1;    // m/s, below this the model is invalid
  double cruise_speed = 11.5;     // m/s, initialization and references

  // control bounds: thrust [N], elevator/aileron/rudder [rad]
  double thrust_min = 0.0, thrust_max = 7.0;
  double elevator_max = 20.0 * 3.14159265358979323846 / 180.0;
  double aileron_max = 2.5 * 3.14159265358979323846 / 180.0;
  double rudder_max = 20.0 * 3.14159265358979323846 / 180.0;
};

// Flat layout: [pn, pe, pd, u, v, w, phi, theta, psi, p, q, r] = 12.
struct FixedWingState {
  Vec3 position;       // NED
  Vec3 body_velocity;  // u, v, w
  Vec3 attitude;       // roll, pitch, yaw
  Vec3 body_rates;     // p, q, r

  Tensor flat() const {
    return Tensor::vec({position.x, position.y, position.z, body_velocity.x,
                        body_velocity.y, body_velocity.z, attitude.x, attitude.y,
                        attitude.z, body_rates.x, body_rates.y, body_rates.z});
  }
  static FixedWingState from_flat(const Tensor& t) {
    return {{t[0], t[1], t[2]},
            {t[3], t[4], t[5]},
            {t[6], t[7], t[8]},
            {t[9], t[10], t[11]}};
  }
};

inline constexpr int kFixedWingStateDim = 12;

// One Euler step on the tape. `controls` is [thrust_N, elevator,
// aileron, rudder] in physical units (rad for surfaces).
Val fixedwing_step(Tape& tape, const FixedWingParams& p, Val state, Val controls);

FixedWingState fixedwing_step(const FixedWingParams& p, const FixedWingState& s,
                              double thrust, double elevator, double aileron,
                              double rudder);

}  // namespace apg

#endif  // APG_FIXEDWING_HPP_
