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

#include "apg/fixedwing.hpp"

#include <cmath>

namespace apg {

Val fixedwing_step(Tape& tape, const FixedWingParams& fw, Val state, Val controls) {
  if (!state.value().all_finite())
    throw InvalidStateError("fixedwing_step: non-finite state");
  if (state.size() != kFixedWingStateDim)
    throw ShapeError("fixedwing_step: state must be 12-dim");
  if (controls.size() != 4)
    throw ShapeError("fixedwing_step: controls must be 4-dim");

  {
    const Tensor& s = state.value();
    double va = std::sqrt(s[3] * s[3] + s[4] * s[4] + s[5] * s[5]);
    if (va < fw.airspeed_floor)
      throw InvalidStateError("fixedwing_step: airspeed below model validity floor");
    if (std::abs(s[7]) >= 1.5)
      throw InvalidStateError(
          "fixedwing_step: pitch outside the Euler-kinematics validity range");
  }

  Val pos = slice(state, 0, 3);
  Val vb = slice(state, 3, 3);
  Val u = elem(state, 3), v = elem(state, 4), w = elem(state, 5);
  Val phi = elem(state, 6), theta = elem(state, 7), psi = elem(state, 8);
  Val rp = elem(state, 9), rq = elem(state, 10), rr = elem(state, 11);

  Val thrust = elem(controls, 0);
  Val delta_e = elem(controls, 1);
  Val delta_a = elem(controls, 2);
  Val delta_r = elem(controls, 3);

  Val s_phi = sin(phi), c_phi = cos(phi);
  Val s_theta = sin(theta), c_theta = cos(theta);
  Val s_psi = sin(psi), c_psi = cos(psi);

  // airflow
  Val va = norm(vb, 1e-9);
  Val alpha = atan2(w, u);
  Val beta = atan2(v, sqrt(clamp(u * u + w * w, 1e-12,
                                 std::numeric_limits<double>::infinity())));
  Val qbar_s = (0.5 * fw.rho * fw.wing_area) * va * va;
  Val b_2va = fw.wingspan / (2.0 * va);
  Val c_2va = fw.chord / (2.0 * va);

  // longitudinal coefficients
  Val cl = fw.CL0 + fw.CL_alpha * alpha + fw.CL_q * (c_2va * rq) +
           fw.CL_delta_e * delta_e;
  Val cd = fw.CD0 + fw.CD_alpha * alpha + fw.CD_q * (c_2va * rq) +
           fw.CD_delta_e * delta_e;
  Val lift = qbar_s * cl;
  Val drag = qbar_s * cd;

  Val s_alpha = sin(alpha), c_alpha = cos(alpha);
  Val fx_aero = -1.0 * drag * c_alpha + lift * s_alpha;
  Val fz_aero = -1.0 * drag * s_alpha - lift * c_alpha;
  Val fy_aero = qbar_s * (fw.CY0 + fw.CY_beta * beta + fw.CY_p * (b_2va * rp) +
                          fw.CY_r * (b_2va * rr) + fw.CY_delta_a * delta_a +
                          fw.CY_delta_r * delta_r);

  // gravity in body axes plus thrust along body x
  const double mg = fw.mass * fw.gravity;
  Val fx = fx_aero + thrust - mg * s_theta;
  Val fy = fy_aero + mg * c_theta * s_phi;
  Val fz = fz_aero + mg * c_theta * c_phi;

  // translational dynamics
  Val u_dot = rr * v - rq * w + fx / fw.mass;
  Val v_dot = rp * w - rr * u + fy / fw.mass;
  Val w_dot = rq * u - rp * v + fz / fw.mass;

  // moments
  Val ml = qbar_s * fw.wingspan *
           (fw.Cl0 + fw.Cl_beta * beta + fw.Cl_p * (b_2va * rp) +
            fw.Cl_r * (b_2va * rr) + fw.Cl_delta_a * delta_a +
            fw.Cl_delta_r * delta_r);
  Val mm = qbar_s * fw.chord *
           (fw.Cm0 + fw.Cm_alpha * alpha + fw.Cm_q * (c_2va * rq) +
            fw.Cm_delta_e * delta_e);
  Val mn = qbar_s * fw.wingspan *
           (fw.Cn0 + fw.Cn_beta * beta + fw.Cn_p * (b_2va * rp) +
            fw.Cn_r * (b_2va * rr) + fw.Cn_delta_a * delta_a +
            fw.Cn_delta_r * delta_r);

  // rotational dynamics with the usual inertia couplings
  const double gamma = fw.Jx * fw.Jz - fw.Jxz * fw.Jxz;
  const double g1 = fw.Jxz * (fw.Jx - fw.Jy + fw.Jz) / gamma;
  const double g2 = (fw.Jz * (fw.Jz - fw.Jy) + fw.Jxz * fw.Jxz) / gamma;
  const double g3 = fw.Jz / gamma;
  const double g4 = fw.Jxz / gamma;
  const double g5 = (fw.Jz - fw.Jx) / fw.Jy;
  const double g6 = fw.Jxz / fw.Jy;
  const double g7 = ((fw.Jx - fw.Jy) * fw.Jx + fw.Jxz * fw.Jxz) / gamma;
  const double g8 = fw.Jx / gamma;

  Val p_dot = g1 * (rp * rq) - g2 * (rq * rr) + g3 * ml + g4 * mn;
  Val q_dot = g5 * (rp * rr) - g6 * (rp * rp - rr * rr) + mm / fw.Jy;
  Val r_dot = g7 * (rp * rq) - g1 * (rq * rr) + g4 * ml + g8 * mn;

  // Euler-angle kinematics
  Val tan_theta = s_theta / c_theta;
  Val phi_dot = rp + tan_theta * (rq * s_phi + rr * c_phi);
  Val theta_dot = rq * c_phi - rr * s_phi;
  Val psi_dot = (rq * s_phi + rr * c_phi) / c_theta;

  // body -> NED position kinematics
  Val pn_dot = (c_theta * c_psi) * u + (s_phi * s_theta * c_psi - c_phi * s_psi) * v +
               (c_phi * s_theta * c_psi + s_phi * s_psi) * w;
  Val pe_dot = (c_theta * s_psi) * u + (s_phi * s_theta * s_psi + c_phi * c_psi) * v +
               (c_phi * s_theta * s_psi - s_phi * c_psi) * w;
  Val pd_dot = -1.0 * s_theta * u + s_phi * c_theta * v + c_phi * c_theta * w;

  const double dt = fw.dt;
  return concat({pos + concat({pn_dot, pe_dot, pd_dot}) * dt,
                 concat({u + u_dot * dt, v + v_dot * dt, w + w_dot * dt}),
                 concat({phi + phi_dot * dt, theta + theta_dot * dt,
                         psi + psi_dot * dt}),
                 concat({rp + p_dot * dt, rq + q_dot * dt, rr + r_dot * dt})});
}

FixedWingState fixedwing_step(const FixedWingParams& p, const FixedWingState& s,
                              double thrust, double elevator, double aileron,
                              double rudder) {
  thread_local Tape tape;
  tape.clear();
  Val state = tape.constant(s.flat());
  Val controls = tape.constant(Tensor::vec({thrust, elevator, aileron, rudder}));
  Val next = fixedwing_step(tape, p, state, controls);
  return FixedWingState::from_flat(next.value());
}

}  // namespace apg
