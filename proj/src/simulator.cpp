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

#include "ctlio/simulator.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "ctlio/lie_math.hpp"

namespace ctlio {

ScenarioSpec benign_scenario() { return ScenarioSpec{}; }

ScenarioSpec aggressive_scenario() {
  ScenarioSpec s;
  s.name = "aggressive";
  s.duration = 20.0;
  s.motion.pos_amplitude = Vec3(1.5, 1.0, 0.2);
  s.motion.pos_frequency = Vec3(0.1, 0.13, 0.5);
  s.motion.euler_amplitude = Vec3(0.1, 30.0 * M_PI / 180.0, 0.5);
  s.motion.euler_frequency = Vec3(0.7, 1.0, 0.1);
  return s;
}

ScenarioSpec with_sensor_noise(ScenarioSpec spec) {
  spec.lidar.range_sigma = 0.02;
  spec.lidar.bearing_sigma = 0.05 * M_PI / 180.0;
  spec.imu.gyro_sigma = 2e-3;
  spec.imu.acc_sigma = 2e-2;
  spec.imu.bias_gyro = Vec3(1e-3, -2e-3, 1.5e-3);
  spec.imu.bias_acc = Vec3(0.03, -0.02, 0.04);
  return spec;
}

ScenarioSpec scenario_preset(const std::string& name) {
  if (name == "benign") return benign_scenario();
  if (name == "aggressive") return aggressive_scenario();
  if (name == "benign-noisy") return with_sensor_noise(benign_scenario());
  if (name == "aggressive-noisy") return with_sensor_noise(aggressive_scenario());
  throw std::invalid_argument("unknown scenario preset: " + name);
}

namespace {

struct Warp {
  double tau, rate, accel;  // tau, dtau/dt, d2tau/dt2
};

Warp warp(const MotionSpec& m, double t) {
  if (t <= m.static_time) return {0.0, 0.0, 0.0};
  if (m.ramp_time <= 0.0) return {t - m.static_time, 1.0, 0.0};
  const double x = (t - m.static_time) / m.ramp_time;
  if (x >= 1.0) return {0.5 * m.ramp_time + (t - m.static_time - m.ramp_time), 1.0, 0.0};
  const double x2 = x * x, x3 = x2 * x;
  const double S = 2.5 * x3 * x - 3.0 * x3 * x2 + x3 * x3;  // integral of the smoothstep
  const double s = 10.0 * x3 - 15.0 * x3 * x + 6.0 * x3 * x2;
  const double ds = 30.0 * x2 - 60.0 * x3 + 30.0 * x3 * x;
  return {m.ramp_time * S, s, ds / m.ramp_time};
}

struct Channel {
  double f, df, ddf;
};

Channel channel(double rate, double amp, double hz, double phase, double tau) {
  const double w = 2.0 * M_PI * hz;
  return {rate * tau + amp * (std::sin(w * tau + phase) - std::sin(phase)),
          rate + amp * w * std::cos(w * tau + phase), -amp * w * w * std::sin(w * tau + phase)};
}

}  // namespace

TruthSample truth_at(const MotionSpec& m, double t) {
  const Warp w = warp(m, t);
  Vec3 e, de;
  TruthSample out;
  out.t = t;
  for (int i = 0; i < 3; ++i) {
    const Channel p = channel(m.pos_rate[i], m.pos_amplitude[i], m.pos_frequency[i], m.pos_phase[i], w.tau);
    out.p[i] = p.f;
    out.v[i] = p.df * w.rate;
    out.a[i] = p.ddf * w.rate * w.rate + p.df * w.accel;
    const Channel r = channel(m.euler_rate[i], m.euler_amplitude[i], m.euler_frequency[i], 0.0, w.tau);
    e[i] = r.f;
    de[i] = r.df * w.rate;
  }
  const double roll = e[0], pitch = e[1], yaw = e[2];
  out.R = exp_so3(Vec3(0, 0, yaw)) * exp_so3(Vec3(0, pitch, 0)) * exp_so3(Vec3(roll, 0, 0));
  const double sr = std::sin(roll), cr = std::cos(roll);
  const double sp = std::sin(pitch), cp = std::cos(pitch);
  out.omega = Vec3(de[0] - de[2] * sp, de[1] * cr + de[2] * sr * cp, -de[1] * sr + de[2] * cr * cp);
  return out;
}

double raycast_room(const RoomSpec& room, const Vec3& origin, const Vec3& dir) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (dir[i] == 0.0) continue;
    const double wall = dir[i] > 0.0 ? room.max[i] : room.min[i];
    const double t = (wall - origin[i]) / dir[i];
    if (t > 0.0 && t < best) best = t;
  }
  return best;
}

Dataset generate(const ScenarioSpec& spec) {
  if (!(spec.duration > 0.0) || !(spec.imu.rate > 0.0) || !(spec.lidar.scan_period > 0.0) ||
      spec.lidar.points_per_scan <= 0 || spec.lidar.rings <= 0) {
    throw std::invalid_argument("generate: rates, duration and point counts must be positive");
  }
  Dataset ds;
  std::mt19937_64 imu_rng(spec.seed * 2 + 1);
  std::mt19937_64 lidar_rng(spec.seed * 2 + 2);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const Vec3 g(0.0, 0.0, spec.gravity);

  const long n_imu = static_cast<long>(std::floor(spec.duration * spec.imu.rate + 1e-9));
  for (long k = 0; k <= n_imu; ++k) {
    const double t = static_cast<double>(k) / spec.imu.rate;
    const TruthSample tr = truth_at(spec.motion, t);
    ds.truth.push_back(tr);
    ImuSample m;
    m.t = t;
    m.gyro = tr.omega + spec.imu.bias_gyro;
    m.acc = tr.R.transpose() * (tr.a + g) + spec.imu.bias_acc;
    for (int i = 0; i < 3; ++i) m.gyro[i] += spec.imu.gyro_sigma * normal(imu_rng);
    for (int i = 0; i < 3; ++i) m.acc[i] += spec.imu.acc_sigma * normal(imu_rng);
    ds.imu.push_back(m);
  }

  const LidarSpec& L = spec.lidar;
  const long n_scans = static_cast<long>(std::floor(spec.duration / L.scan_period + 1e-9));
  for (long s = 0; s < n_scans; ++s) {
    Scan scan;
    scan.t_start = static_cast<double>(s) * L.scan_period;
    for (int k = 0; k < L.points_per_scan; ++k) {
      const double frac = static_cast<double>(k) / L.points_per_scan;
      const double t = scan.t_start + L.scan_period * frac;
      const int ring = k % L.rings;
      const double elev = L.rings > 1 ? L.fov_low + (L.fov_high - L.fov_low) * ring / (L.rings - 1)
                                      : 0.5 * (L.fov_low + L.fov_high);
      const double az = 2.0 * M_PI * frac;
      const Vec3 b(std::cos(elev) * std::cos(az), std::cos(elev) * std::sin(az), std::sin(elev));

      const double n_r = normal(lidar_rng);
      const double n_b1 = normal(lidar_rng), n_b2 = normal(lidar_rng);
      const double u_out = uniform(lidar_rng), u_scale = uniform(lidar_rng);

      const TruthSample tr = truth_at(spec.motion, t);
      const Vec3 origin = tr.R * L.extrinsics.t + tr.p;
      const Vec3 dir = tr.R * L.extrinsics.R * b;
      const double range = raycast_room(spec.room, origin, dir);
      if (!std::isfinite(range) || range > L.max_range) continue;

      double r = range + L.range_sigma * n_r;
      const bool outlier = u_out < L.outlier_fraction;
      if (outlier) r = range * (0.3 + 0.65 * u_scale);
      const Vec3 e1 = b.unitOrthogonal(), e2 = b.cross(e1);
      const Vec3 b_meas = exp_so3(L.bearing_sigma * (n_b1 * e1 + n_b2 * e2)) * b;
      scan.points.push_back(TimedPoint{t, r * b_meas});
      scan.outlier.push_back(outlier ? 1 : 0);
    }
    ds.scans.push_back(std::move(scan));
  }
  return ds;
}

}  // namespace ctlio
