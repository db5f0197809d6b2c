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

#include "ctlio/lie_math.hpp"

#include <cmath>
#include <stdexcept>

namespace ctlio {

namespace {

constexpr double kExpLogEps = 1e-8;
constexpr double kJacobianEps = 1e-6;

Vec3 vee(const Mat3& S) { return Vec3(S(2, 1), S(0, 2), S(1, 0)); }

}  // namespace

Mat3 skew(const Vec3& v) {
  Mat3 S;
  S << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return S;
}

Rot3 exp_so3(const Vec3& phi) {
  const double theta = phi.norm();
  const Mat3 K = skew(phi);
  if (theta < kExpLogEps) {
    return Mat3::Identity() + K + 0.5 * K * K;
  }
  // K^2 = phi phi^T - theta^2 I. Same operation order as the overload with the
  // Jacobian, so both return identical bits.
  const Mat3 ppT = phi * phi.transpose();
  const double s = std::sin(theta), c = std::cos(theta);
  const double b = (1.0 - c) / (theta * theta);
  return c * Mat3::Identity() + (s / theta) * K + b * ppT;
}

Vec3 log_so3(const Rot3& R) {
  const Vec3 w = 0.5 * vee(R - R.transpose());  // sin(theta) * axis
  const double s = w.norm();
  const double c = 0.5 * (R.trace() - 1.0);
  const double theta = std::atan2(s, c);

  if (theta < kExpLogEps) {
    // (R - R^T)/2 = sin(theta) [a]x; theta/sin(theta) ~ 1 + theta^2/6.
    return w * (1.0 + s * s / 6.0);
  }
  if (theta < M_PI - 1e-3) {
    return w * (theta / s);
  }

  // Near pi the antisymmetric part vanishes; read the axis from the symmetric
  // part (R + R^T)/2 - cos(theta) I = (1 - cos(theta)) a a^T.
  const Mat3 B = 0.5 * (R + R.transpose()) - c * Mat3::Identity();
  int k = 0;
  B.diagonal().maxCoeff(&k);
  Vec3 axis = B.col(k).normalized();
  if (s > 1e-12) {
    if (axis.dot(w) < 0.0) axis = -axis;
  } else {
    for (int i = 2; i >= 0; --i) {
      if (std::abs(axis[i]) > 1e-12) {
        if (axis[i] < 0.0) axis = -axis;
        break;
      }
    }
  }
  return axis * theta;
}

Mat3 right_jacobian_so3(const Vec3& phi) {
  const double theta = phi.norm();
  const Mat3 K = skew(phi);
  if (theta < kJacobianEps) {
    return Mat3::Identity() - 0.5 * K + K * K / 6.0;
  }
  const double t2 = theta * theta;
  const double s = std::sin(theta);
  return (s / theta) * Mat3::Identity() - (1.0 - std::cos(theta)) / t2 * K +
         (theta - s) / (t2 * theta) * phi * phi.transpose();
}

Rot3 exp_so3(const Vec3& phi, Mat3* right_jacobian) {
  const double theta = phi.norm();
  if (theta < kJacobianEps) {
    *right_jacobian = right_jacobian_so3(phi);
    return exp_so3(phi);
  }
  const Mat3 K = skew(phi);
  const Mat3 ppT = phi * phi.transpose();
  const double t2 = theta * theta;
  const double s = std::sin(theta), c = std::cos(theta);
  const double b = (1.0 - c) / t2;
  *right_jacobian = (s / theta) * Mat3::Identity() - b * K + ((theta - s) / (t2 * theta)) * ppT;
  return c * Mat3::Identity() + (s / theta) * K + b * ppT;
}

Mat3 left_jacobian_so3(const Vec3& phi) { return right_jacobian_so3(-phi); }

Vec3 so3_boxminus(const Rot3& a, const Rot3& b) {
  return log_so3(b.transpose() * a);
}

bool is_rotation(const Mat3& R, double tol) {
  if (!R.allFinite()) return false;
  return (R.transpose() * R - Mat3::Identity()).norm() <= tol &&
         std::abs(R.determinant() - 1.0) <= tol;
}

GravityDir::GravityDir() : dir_(Vec3::UnitZ()) {}

GravityDir::GravityDir(const Vec3& v) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw std::invalid_argument("GravityDir: direction must be a nonzero finite vector");
  }
  dir_ = v / n;
}

Mat32 GravityDir::tangent_basis() const {
  // Image of e1, e2 under the rotation taking +z (or -z) onto the direction.
  const double x = dir_.x(), y = dir_.y(), z = dir_.z();
  Mat32 B;
  if (z >= 0.0) {
    const double k = 1.0 / (1.0 + z);
    B << 1.0 - x * x * k, -x * y * k,
         -x * y * k, 1.0 - y * y * k,
         -x, -y;
  } else {
    const double k = 1.0 / (1.0 - z);
    B << 1.0 - x * x * k, -x * y * k,
         -x * y * k, 1.0 - y * y * k,
         x, y;
  }
  return B;
}

GravityDir s2_boxplus(const GravityDir& d, const Vec2& delta) {
  return GravityDir(exp_so3(d.tangent_basis() * delta) * d.vec());
}

Vec2 s2_boxminus(const GravityDir& s, const GravityDir& d) {
  const Vec3 c = d.vec().cross(s.vec());
  const double n = c.norm();
  const double w = d.vec().dot(s.vec());
  if (n < 1e-12) {
    if (w < 0.0) {
      throw std::domain_error("s2_boxminus: antipodal directions");
    }
    return d.tangent_basis().transpose() * c / w;
  }
  return d.tangent_basis().transpose() * c * (std::atan2(n, w) / n);
}

Mat2 s2_boxminus_jacobian(const GravityDir& s, const GravityDir& d) {
  const Vec3& sv = s.vec();
  const Vec3& dv = d.vec();
  const Vec3 c = dv.cross(sv);
  const double n = c.norm();
  const double w = dv.dot(sv);
  const Mat3 dc_ds = skew(dv);

  // theta(s) = c * phi / n with phi = atan2(n, w).
  Mat3 dtheta_ds;
  if (n < 1e-9) {
    if (w < 0.0) {
      throw std::domain_error("s2_boxminus_jacobian: antipodal directions");
    }
    dtheta_ds = dc_ds / w;
  } else {
    const double phi = std::atan2(n, w);
    const Eigen::RowVector3d dn_ds = c.transpose() * dc_ds / n;
    const Eigen::RowVector3d dw_ds = dv.transpose();
    const Eigen::RowVector3d dphi_ds = (w * dn_ds - n * dw_ds) / (n * n + w * w);
    const Eigen::RowVector3d dratio_ds = dphi_ds / n - phi * dn_ds / (n * n);
    dtheta_ds = (phi / n) * dc_ds + c * dratio_ds;
  }
  const Mat32 ds_ddelta = -skew(sv) * s.tangent_basis();
  return d.tangent_basis().transpose() * dtheta_ds * ds_ddelta;
}

}  // namespace ctlio
