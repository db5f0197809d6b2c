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

#include <vector>

#include "ctlio/measurement.hpp"
#include "ctlio/spline.hpp"
#include "ctlio/state.hpp"

namespace ctlio {

struct ImuSample {
  double t;
  Vec3 gyro;  // rad/s
  Vec3 acc;   // m/s^2, specific force
};

/// Per-sample white noise (discrete standard deviations).
struct ImuNoise {
  double gyro_sigma = 2e-3;  // rad/s
  double acc_sigma = 2e-2;   // m/s^2
};

/// Estimate of the bias and gravity blocks kept after an update, used to
/// anchor the current estimate for samples that fall in its interval.
struct ImuStateSnapshot {
  double t;  // end of the interval the estimate was computed for
  Vec3 bias_gyro;
  Vec3 bias_acc;
  GravityDir gravity;
  Eigen::Matrix<double, 8, 8> cov;
};

struct ImuResidualOptions {
  ImuNoise noise;
  double gravity_magnitude = 9.81;
  int stride = 1;
  // random-walk densities used to age a snapshot's covariance
  double bias_gyro_walk = 1e-4;
  double bias_acc_walk = 1e-3;
  double gravity_walk = 1e-5;
  bool use_snapshots = true;
};

struct ImuResidualStats {
  int used = 0;
  int skipped = 0;  // outside the trajectory span
  int snapshot_blocks = 0;
};

/// IMU residual block: per sample 3 gyro rows h_w = omega(t) + b_w - w_m and
/// 3 accel rows h_a = R(t)^T (a(t) + g) + b_a - a_m, followed by one 8-row
/// pseudo-observation per referenced snapshot. `snapshots` is time-sorted; a
/// sample at t references the first snapshot with snap.t >= t.
MeasurementStack build_imu_residuals(const SplineTrajectory& traj, const HybridState& x,
                                     const std::vector<ImuSample>& samples,
                                     const std::vector<ImuStateSnapshot>& snapshots,
                                     const ImuResidualOptions& opt,
                                     ImuResidualStats* stats = nullptr);

struct FittingErrorModel {
  Mat3 rot = Mat3::Zero();  // rad^2
  Mat3 pos = Mat3::Zero();  // m^2
};

struct FittingErrorCaps {
  double rot = 0.05;  // eigenvalue cap, rad^2
  double pos = 0.05;  // eigenvalue cap, m^2
};

/// Sample covariances of the discrepancy between reference poses and the
/// spline at the same times. References outside the span are ignored; with
/// fewer than two usable references `previous` is returned unchanged.
FittingErrorModel estimate_fitting_error(const SplineTrajectory& traj,
                                         const std::vector<PoseStamped>& reference,
                                         const FittingErrorModel& previous,
                                         const FittingErrorCaps& caps = {});

struct NavState {
  double t;
  Rot3 R;
  Vec3 p;
  Vec3 v;
};

/// Strapdown integration from `seed` to `t_end`, trapezoidal between samples.
/// `gravity` is the world-frame specific force at rest. Returns the state at
/// every sample time inside (seed.t, t_end] and at t_end itself.
std::vector<NavState> imu_forward_propagate(const std::vector<ImuSample>& samples,
                                            const NavState& seed, const Vec3& bias_gyro,
                                            const Vec3& bias_acc, const Vec3& gravity,
                                            double t_end);

/// Samples with t in [t0, t1], assuming `samples` is time-sorted.
std::vector<ImuSample> imu_window(const std::vector<ImuSample>& samples, double t0, double t1);

}  // namespace ctlio
