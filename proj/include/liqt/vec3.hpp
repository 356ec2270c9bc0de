// Copyright 2026 The li-qt Authors
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

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "liqt/error.hpp"
#include "liqt/rng.hpp"

namespace liqt {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend constexpr Vec3 operator-(Vec3 a) { return {-a.x, -a.y, -a.z}; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend constexpr bool operator==(Vec3, Vec3) = default;
};

constexpr double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }

/// Direction in space. Renormalized on construction so that |v| = 1 to
/// rounding; the zero vector is rejected.
class UnitVector3 {
 public:
  UnitVector3() = default;
  UnitVector3(double x, double y, double z) : UnitVector3(Vec3{x, y, z}) {}
  explicit UnitVector3(Vec3 v) {
    const double n = norm(v);
    require(n > 0.0 && std::isfinite(n), ErrorCode::InvalidArgument, "direction must be a nonzero finite vector");
    v_ = (1.0 / n) * v;
  }

  static UnitVector3 polar(double theta, double azimuth = 0.0) {
    return UnitVector3(std::sin(theta) * std::cos(azimuth), std::sin(theta) * std::sin(azimuth), std::cos(theta));
  }

  double x() const { return v_.x; }
  double y() const { return v_.y; }
  double z() const { return v_.z; }
  Vec3 vec() const { return v_; }
  operator Vec3() const { return v_; }

  UnitVector3 operator-() const { return UnitVector3(-v_); }
  friend bool operator==(const UnitVector3&, const UnitVector3&) = default;

 private:
  Vec3 v_{0.0, 0.0, 1.0};
};

/// a.b clamped to [-1, 1].
inline double cos_angle(const UnitVector3& a, const UnitVector3& b) {
  return std::clamp(dot(a.vec(), b.vec()), -1.0, 1.0);
}

/// Angle in [0, pi].
inline double angle_between(const UnitVector3& a, const UnitVector3& b) { return std::acos(cos_angle(a, b)); }

inline UnitVector3 random_direction(Rng& rng) {
  for (;;) {
    const Vec3 v{rng.normal(), rng.normal(), rng.normal()};
    if (norm(v) > 1e-6) return UnitVector3(v);
  }
}

/// n nearly uniform directions on the sphere (Fibonacci lattice).
inline std::vector<UnitVector3> fibonacci_directions(std::size_t n) {
  require(n >= 1, ErrorCode::InvalidArgument, "need at least one direction");
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  std::vector<UnitVector3> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * static_cast<double>(i);
    out.emplace_back(Vec3{r * std::cos(phi), r * std::sin(phi), z});
  }
  return out;
}

class Rotation {
 public:
  Rotation() = default;

  /// Uniformly distributed rotation from a random unit quaternion.
  static Rotation random(Rng& rng) {
    double q[4];
    double n2 = 0.0;
    do {
      n2 = 0.0;
      for (double& c : q) {
        c = rng.normal();
        n2 += c * c;
      }
    } while (n2 < 1e-12);
    const double n = std::sqrt(n2);
    const double w = q[0] / n, x = q[1] / n, y = q[2] / n, z = q[3] / n;
    Rotation r;
    r.m_ = {{{1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)},
             {2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)},
             {2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)}}};
    return r;
  }

  Vec3 apply(Vec3 v) const {
    return {m_[0][0] * v.x + m_[0][1] * v.y + m_[0][2] * v.z, m_[1][0] * v.x + m_[1][1] * v.y + m_[1][2] * v.z,
            m_[2][0] * v.x + m_[2][1] * v.y + m_[2][2] * v.z};
  }
  UnitVector3 apply(const UnitVector3& v) const { return UnitVector3(apply(v.vec())); }

 private:
  std::array<std::array<double, 3>, 3> m_{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
};

}  // namespace liqt
