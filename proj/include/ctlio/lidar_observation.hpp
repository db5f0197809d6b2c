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

#include <cstdint>
#include <vector>

#include "ctlio/imu_observation.hpp"
#include "ctlio/measurement.hpp"
#include "ctlio/spline.hpp"
#include "ctlio/voxel_map.hpp"

namespace ctlio {

/// LiDAR return in the sensor frame with its own timestamp.
struct TimedPoint {
  double t;
  Vec3 p;  // m
};

struct LidarNoise {
  double range_sigma = 0.02;                   // m
  double bearing_sigma = 0.05 * M_PI / 180.0;  // rad
};

/// Range noise along the beam, bearing noise (scaled by range) across it.
Mat3 lidar_point_covariance(const Vec3& p, const LidarNoise& noise);

struct Extrinsics {
  Rot3 R = Rot3::Identity();  // LiDAR to IMU
  Vec3 t = Vec3::Zero();
};

struct LidarResidualOptions {
  Extrinsics extrinsics;
  LidarNoise noise;
  bool use_mean_cov = false;  // feature mean uncertainty (off by default)
  double gate_sigma = 3.0;
  int max_rows = 4000;  // per pass, 0 = unlimited
  double lambda_floor() const { return 0.01 * noise.range_sigma * noise.range_sigma; }
};

enum class PointStatus : std::uint8_t {
  kUnused = 0,
  kPlane,
  kVoxel,
  kGated,
  kNoFeature,
  kOutOfSpan,
  kSubsampled,
};

/// One to three residual rows with Jacobian and noise covariance.
struct LidarResidual {
  int rows = 0;
  Vec3 value = Vec3::Zero();
  Eigen::Matrix<double, 3, kStateDim> H = Eigen::Matrix<double, 3, kStateDim>::Zero();
  Mat3 cov = Mat3::Zero();
  bool accepted = false;
};

/// u1^T (p_w - q) with p_w the point moved into the world at its own time.
LidarResidual point_to_plane_residual(const TimedPoint& pt, const VoxelNode& node,
                                      const SplineTrajectory& traj, const FittingErrorModel& fit,
                                      const LidarResidualOptions& opt);

/// Rows k_i u_i^T (p_w - q), k_i = max(lambda_i, floor)^-1/2; accepted only if
/// all three rows pass the gate.
LidarResidual point_to_voxel_residual(const TimedPoint& pt, const VoxelNode& node,
                                      const SplineTrajectory& traj, const FittingErrorModel& fit,
                                      const LidarResidualOptions& opt);

struct ScanResidualStats {
  int n_total = 0;  // points evaluated
  int n_plane = 0;
  int n_voxel = 0;
  int n_gated = 0;
  int n_no_feature = 0;
  int n_out_of_span = 0;
  int n_subsampled = 0;
};

/// Stacks residuals for every point of the slice. If the slice has more than
/// max_rows points a uniform subset is used. `status`, when given, receives one
/// entry per input point.
MeasurementStack build_scan_residuals(const std::vector<TimedPoint>& points, const VoxelMap& map,
                                      const SplineTrajectory& traj, const FittingErrorModel& fit,
                                      const LidarResidualOptions& opt,
                                      ScanResidualStats* stats = nullptr,
                                      std::vector<PointStatus>* status = nullptr);

/// World position of a sensor-frame point at its timestamp.
Vec3 point_to_world(const TimedPoint& pt, const SplineTrajectory& traj, const Extrinsics& ext);

}  // namespace ctlio
