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
#include <string>
#include <vector>

#include "ctlio/imu_observation.hpp"
#include "ctlio/lidar_observation.hpp"
#include "ctlio/spline.hpp"

namespace ctlio {

/// Smooth SE(3) path: Euler angles (roll, pitch, yaw; R = Rz Ry Rx) and
/// position, each a constant rate plus sinusoids in a warped time tau(t).
/// tau is frozen during `static_time` and ramps in with a C2 profile over
/// `ramp_time`, so the body starts at rest at the origin with R = I.
struct MotionSpec {
  Vec3 pos_amplitude = Vec3(2.0, 1.5, 0.3);  // m
  Vec3 pos_frequency = Vec3(0.05, 0.07, 0.11);  // Hz
  Vec3 pos_phase = Vec3(0.0, 0.0, 0.0);
  Vec3 pos_rate = Vec3::Zero();  // m/s
  Vec3 euler_amplitude = Vec3(0.05, 0.05, 0.6);  // rad
  Vec3 euler_frequency = Vec3(0.13, 0.17, 0.05);  // Hz
  Vec3 euler_rate = Vec3::Zero();  // rad/s
  double static_time = 1.0;  // s
  double ramp_time = 2.0;    // s
};

// Walls are kept off the map lattice: a wall lying on a cell face splits its
// noisy points between two cells by sign, biasing both fits.
struct RoomSpec {
  Vec3 min = Vec3(-6.37, -4.81, -1.43);
  Vec3 max = Vec3(7.72, 5.29, 2.86);
};

struct LidarSpec {
  double scan_period = 0.1;  // s
  int points_per_scan = 3000;
  int rings = 16;
  double fov_low = -25.0 * M_PI / 180.0;
  double fov_high = 25.0 * M_PI / 180.0;
  double max_range = 100.0;
  double range_sigma = 0.0;    // m
  double bearing_sigma = 0.0;  // rad
  double outlier_fraction = 0.0;
  Extrinsics extrinsics;
};

struct ImuSpec {
  double rate = 200.0;  // Hz
  double gyro_sigma = 0.0;
  double acc_sigma = 0.0;
  Vec3 bias_gyro = Vec3::Zero();
  Vec3 bias_acc = Vec3::Zero();
};

struct ScenarioSpec {
  std::string name = "benign";
  double duration = 60.0;  // s
  double gravity = 9.81;
  std::uint64_t seed = 1;
  MotionSpec motion;
  RoomSpec room;
  LidarSpec lidar;
  ImuSpec imu;
};

ScenarioSpec benign_scenario();
/// +-30 deg pitch oscillation at 1 Hz on top of a slow translation.
ScenarioSpec aggressive_scenario();
/// Consumer-grade sensor noise and constant biases; outliers stay as configured.
ScenarioSpec with_sensor_noise(ScenarioSpec spec);
/// Preset by name ("benign", "aggressive", or either with a "-noisy" suffix);
/// throws std::invalid_argument.
ScenarioSpec scenario_preset(const std::string& name);

struct TruthSample {
  double t;
  Rot3 R;
  Vec3 p;
  Vec3 v;      // world
  Vec3 a;      // world
  Vec3 omega;  // body
};

/// Closed-form ground truth of the motion.
TruthSample truth_at(const MotionSpec& m, double t);

struct Scan {
  double t_start;
  std::vector<TimedPoint> points;  // sensor frame, time-sorted
  std::vector<std::uint8_t> outlier;  // simulator label, same length
};

struct Dataset {
  std::vector<TruthSample> truth;  // at IMU rate
  std::vector<ImuSample> imu;
  std::vector<Scan> scans;
};

Dataset generate(const ScenarioSpec& spec);

/// Distance along a ray from inside the room to its first wall (inf if none).
double raycast_room(const RoomSpec& room, const Vec3& origin, const Vec3& dir);

}  // namespace ctlio
