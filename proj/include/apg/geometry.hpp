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

#ifndef APG_GEOMETRY_HPP_
#define APG_GEOMETRY_HPP_

#include <array>
#include <cmath>

namespace apg {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
};

inline double dot(const Vec3& a, const Vec3& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

// Unit quaternion, scalar-first.
struct Quat {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
  Quat normalized() const {
    double n = norm();
    return {w / n, x / n, y / n, z / n};
  }
};

// Row-major 3x3 rotation matrix.
struct Mat3 {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  double at(int r, int c) const { return m[static_cast<size_t>(3 * r + c)]; }
  double& at(int r, int c) { return m[static_cast<size_t>(3 * r + c)]; }

  Vec3 col(int c) const { return {at(0, c), at(1, c), at(2, c)}; }

  Vec3 operator*(const Vec3& v) const {
    return {at(0, 0) * v.x + at(0, 1) * v.y + at(0, 2) * v.z,
            at(1, 0) * v.x + at(1, 1) * v.y + at(1, 2) * v.z,
            at(2, 0) * v.x + at(2, 1) * v.y + at(2, 2) * v.z};
  }

  double det() const {
    return at(0, 0) * (at(1, 1) * at(2, 2) - at(1, 2) * at(2, 1)) -
           at(0, 1) * (at(1, 0) * at(2, 2) - at(1, 2) * at(2, 0)) +
           at(0, 2) * (at(1, 0) * at(2, 1) - at(1, 1) * at(2, 0));
  }

  // max |R^T R - I| entry
  double orthonormality_defect() const {
    double worst = 0.0;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += at(k, i) * at(k, j);
        double target = (i == j) ? 1.0 : 0.0;
        worst = std::max(worst, std::abs(s - target));
      }
    }
    return worst;
  }
};

inline Mat3 quat_to_matrix(const Quat& q) {
  Mat3 r;
  double w = q.w, x = q.x, y = q.y, z = q.z;
  r.m = {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
         2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
         2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
  return r;
}

// Shepperd's method; assumes a proper rotation.
inline Quat matrix_to_quat(const Mat3& r) {
  Quat q;
  double tr = r.at(0, 0) + r.at(1, 1) + r.at(2, 2);
  if (tr > 0.0) {
    double s = std::sqrt(tr + 1.0) * 2.0;
    q.w = 0.25 * s;
    q.x = (r.at(2, 1) - r.at(1, 2)) / s;
    q.y = (r.at(0, 2) - r.at(2, 0)) / s;
    q.z = (r.at(1, 0) - r.at(0, 1)) / s;
  } else if (r.at(0, 0) > r.at(1, 1) && r.at(0, 0) > r.at(2, 2)) {
    double s = std::sqrt(1.0 + r.at(0, 0) - r.at(1, 1) - r.at(2, 2)) * 2.0;
    q.w = (r.at(2, 1) - r.at(1, 2)) / s;
    q.x = 0.25 * s;
    q.y = (r.at(0, 1) + r.at(1, 0)) / s;
    q.z = (r.at(0, 2) + r.at(2, 0)) / s;
  } else if (r.at(1, 1) > r.at(2, 2)) {
    double s = std::sqrt(1.0 + r.at(1, 1) - r.at(0, 0) - r.at(2, 2)) * 2.0;
    q.w = (r.at(0, 2) - r.at(2, 0)) / s;
    q.x = (r.at(0, 1) + r.at(1, 0)) / s;
    q.y = 0.25 * s;
    q.z = (r.at(1, 2) + r.at(2, 1)) / s;
  } else {
    double s = std::sqrt(1.0 + r.at(2, 2) - r.at(0, 0) - r.at(1, 1)) * 2.0;
    q.w = (r.at(1, 0) - r.at(0, 1)) / s;
    q.x = (r.at(0, 2) + r.at(2, 0)) / s;
    q.y = (r.at(1, 2) + r.at(2, 1)) / s;
    q.z = 0.25 * s;
  }
  return q.normalized();
}

}  // namespace apg

#endif  // APG_GEOMETRY_HPP_
