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

#include "ctlio/lie_math.hpp"
#include "ctlio/spline.hpp"
#include "ctlio/types.hpp"

namespace ctlio {

/// Error-state layout: 4 rotational increments, 4 positional increments,
/// gyro bias, accel bias, gravity tangent.
inline constexpr int kStateDim = 32;
inline constexpr int kSplineDim = 24;

namespace state_index {
inline constexpr int kRot = 0;
inline constexpr int kPos = 12;
inline constexpr int kBiasGyro = 24;
inline constexpr int kBiasAcc = 27;
inline constexpr int kGravity = 30;
inline constexpr int rot(int j) { return kRot + 3 * j; }
inline constexpr int pos(int j) { return kPos + 3 * j; }
}  // namespace state_index

using StateVec = Eigen::Matrix<double, kStateDim, 1>;
using Covariance = Eigen::Matrix<double, kStateDim, kStateDim>;

/// Filter state: live spline increments plus IMU biases and gravity.
///
/// `gravity` is the direction of the specific force a static accelerometer
/// reads, expressed in the world frame; its magnitude is configuration.
struct HybridState {
  SegmentIncrements inc = SegmentIncrements::Zero();
  Vec3 bias_gyro = Vec3::Zero();
  Vec3 bias_acc = Vec3::Zero();
  GravityDir gravity;

  /// Additive on increments and biases, S^2 retraction on gravity.
  HybridState boxplus(const StateVec& delta) const;
  /// this [-] other, the inverse of boxplus.
  StateVec boxminus(const HybridState& other) const;
};

/// Transition applied at a knot jump: d'_j <- d_{j+1} (j < 3), d'_3 <- d_2,
/// identity on biases and gravity. Identity when no knot is added.
Covariance transition_matrix(bool knot_added);

void symmetrize(Covariance& P);

}  // namespace ctlio
