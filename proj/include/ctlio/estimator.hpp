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
#include <deque>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ctlio/imu_observation.hpp"
#include "ctlio/lidar_observation.hpp"
#include "ctlio/spline.hpp"
#include "ctlio/state_filter.hpp"
#include "ctlio/voxel_map.hpp"

namespace ctlio {

enum class Mode { kLO, kLIO };

struct EstimatorConfig {
  Mode mode = Mode::kLIO;
  double knot_frequency_hz = 50.0;
  double delta_t = 0.0;  // propagation interval, 0 = one knot interval
  int n_thre = 1000;     // points per estimation pass
  int k_max = 5;         // passes per interval
  std::uint64_t sampling_seed = 7;  // assignment of points to passes
  IekfOptions iekf;
  ProcessNoise process;
  ImuResidualOptions imu;
  // IMU samples used per pass: those of the last `imu_window_intervals`
  // propagation intervals; rows are added on the first pass of an interval.
  int imu_window_intervals = 1;
  // Adds the historical bias/gravity prior rows to each update. Off by
  // default: with a one-interval window the referenced estimate is the
  // filter prior itself, so the rows would fuse it a second time.
  bool snapshot_priors = false;
  LidarResidualOptions lidar;
  MapConfig map;
  bool online_fitting_error = true;
  FittingErrorCaps fit_caps;
  FittingErrorModel fixed_fit;  // used when online estimation is off or in LO mode
  double init_window = 0.5;     // s of static IMU data for initialization
  // Initial standard deviations.
  double init_inc_rot_sigma = 0.01;
  double init_inc_pos_sigma = 0.01;
  double init_bias_gyro_sigma = 0.01;
  double init_bias_acc_sigma = 0.02;
  double init_gravity_sigma = 0.01;
  bool add_pose_cov_to_map = true;
  bool record_point_status = false;
  // A pose update larger than this (m) is treated as divergence.
  double divergence_jump = 5.0;
};

/// Per-pass diagnostics.
struct PassRecord {
  int scan_index;
  double t_begin;
  double t_end;
  int pass_index;
  int n_total;
  int n_plane;
  int n_voxel;
  int n_gated;
  int iterations;
  int rows;
};

struct ScanResult {
  double t_end;
  Rot3 R;
  Vec3 p;
  double elapsed_ms = 0.0;  // estimation only
  int passes = 0;
  int truncated = 0;  // points left over after k_max passes
  std::vector<PointStatus> status;  // per input point, if recorded
};

class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Continuous-time LiDAR(-inertial) odometry over scans with per-point times.
///
/// Time is cut into propagation intervals aligned to the knots starting at
/// the first scan. For each interval the filter is predicted to its end, then
/// its points are consumed in up to k_max passes of n_thre points; after each
/// pass the map and the fitting error are refreshed.
class Estimator {
 public:
  explicit Estimator(EstimatorConfig cfg);

  /// Samples must arrive in time order and cover the scans that follow.
  void add_imu(const ImuSample& s);
  void add_imu(const std::vector<ImuSample>& s);

  /// Points sorted by time within [t_start, t_end). Throws NumericalFailure
  /// if the estimate diverges.
  ScanResult process_scan(const std::vector<TimedPoint>& points, double t_start, double t_end);

  const SplineTrajectory& trajectory() const { return *traj_; }
  const FilterState& filter() const { return fs_; }
  const VoxelMap& map() const { return map_; }
  const FittingErrorModel& fitting_error() const { return fit_; }
  const std::vector<PassRecord>& passes() const { return passes_; }
  const EstimatorConfig& config() const { return cfg_; }
  bool initialized() const { return traj_.has_value(); }
  /// Poses before this time no longer change: their segments have left the
  /// live window. -inf before the first scan.
  double settled_time() const;
  /// Pose on the current trajectory estimate at a retained time.
  TrajectorySample pose_at(double t) const;

 private:
  void initialize(double t0);
  void process_interval(const std::vector<TimedPoint>& points, std::size_t begin, std::size_t end,
                        double a, double b, ScanResult* result, std::vector<std::size_t>* order);
  void update_map(const std::vector<TimedPoint>& points, const std::vector<std::size_t>& idx);
  void refresh_fitting_error(double a, double b);
  void record_reference(double a, double b);
  void push_snapshot(double t);
  std::vector<ImuSample> imu_between(double t0, double t1) const;

  EstimatorConfig cfg_;
  double dt_ = 0.0;
  double delta_ = 0.0;
  double t0_ = 0.0;
  long interval_ = 0;  // index of the next propagation interval
  std::optional<SplineTrajectory> traj_;
  FilterState fs_;
  VoxelMap map_;
  FittingErrorModel fit_;
  std::vector<ImuSample> imu_;
  std::vector<ImuStateSnapshot> snapshots_;
  std::deque<PoseStamped> recorded_;
  std::vector<PassRecord> passes_;
  int scan_index_ = 0;
  bool map_seeded_ = false;
};

}  // namespace ctlio
