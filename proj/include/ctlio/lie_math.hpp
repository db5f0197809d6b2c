// Copyright 2026 The ctlio Authors
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

#include "ctlio/types.hpp"

namespace ctlio {

/// Hat operator: skew(v) * w == v.cross(w).
Mat3 skew(const Vec3& v);

/// Rodrigues exponential of a rotation vector (rad).
Rot3 exp_so3(const Vec3& phi);

/// Principal logarithm, |result| <= pi. At exactly pi the axis sign is chosen
/// so that its last nonzero component is nonnegative.
Vec3 log_so3(const Rot3& R);

/// Right Jacobian of SO(3): Exp(phi + d) ~= Exp(phi) Exp(J_r(phi) d).
Mat3 right_jacobian_so3(const Vec3& phi);

/// Exp(phi) and J_r(phi) sharing one trigonometric evaluation.
Rot3 exp_so3(const Vec3& phi, Mat3* right_jacobian);

/// Left Jacobian, equal to J_r(-phi) and J_r(phi)^T.
Mat3 left_jacobian_so3(const Vec3& phi);

/// Right-perturbation difference: Log(b^T a), so that a = b * Exp(result).
Vec3 so3_boxminus(const Rot3& a, const Rot3& b);

bool is_rotation(const Mat3& R, double tol = 1e-9);

/// Unit direction on S^2 with a deterministic tangent basis.
///
/// Gravity is carried as a direction plus a fixed magnitude held by the
/// owner; only the direction has an error state (2 dof).
class GravityDir {
 public:
  GravityDir();
  /// Normalizes `v`; throws std::invalid_argument on a zero vector.
  explicit GravityDir(const Vec3& v);

  const Vec3& vec() const { return dir_; }

  /// 3x2 orthonormal basis of the tangent plane at this direction.
  Mat32 tangent_basis() const;

 private:
  Vec3 dir_;
};

/// d [+] delta = Exp(B_d delta) d.
GravityDir s2_boxplus(const GravityDir& d, const Vec2& delta);

/// s [-] d = B_d^T (d x s / |d x s|) atan2(|d x s|, d . s).
/// Throws std::domain_error when s is antipodal to d.
Vec2 s2_boxminus(const GravityDir& s, const GravityDir& d);

/// Derivative of (s [+] delta) [-] d with respect to delta at delta = 0.
Mat2 s2_boxminus_jacobian(const GravityDir& s, const GravityDir& d);

}  // namespace ctlio
