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

#include "ctlio/spline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ctlio/lie_math.hpp"

namespace ctlio {

const Eigen::Matrix4d& cumulative_blending_matrix() {
  static const Eigen::Matrix4d kMatrix = [] {
    Eigen::Matrix4d m;
    m << 6.0, 0.0, 0.0, 0.0,
         5.0, 3.0, -3.0, 1.0,
         1.0, 3.0, 3.0, -2.0,
         0.0, 0.0, 0.0, 1.0;
    return Eigen::Matrix4d(m / 6.0);
  }();
  return kMatrix;
}

Vec4 lambda_eval(double u, int order, double dt) {
  Vec4 basis;
  switch (order) {
    case 0:
      basis << 1.0, u, u * u, u * u * u;
      break;
    case 1:
      basis << 0.0, 1.0 / dt, 2.0 * u / dt, 3.0 * u * u / dt;
      break;
    case 2:
      basis << 0.0, 0.0, 2.0 / (dt * dt), 6.0 * u / (dt * dt);
      break;
    default:
      throw std::invalid_argument("lambda_eval: order must be 0, 1 or 2");
  }
  return cumulative_blending_matrix() * basis;
}

SegmentIncrements SegmentIncrements::Zero() {
  SegmentIncrements inc;
  inc.rot.fill(Vec3::Zero());
  inc.pos.fill(Vec3::Zero());
  return inc;
}

SplineTrajectory::SplineTrajectory(double t_start, double dt, const Rot3& R0,
                                   const Vec3& p0, std::size_t history)
    : t0_(t_start), dt_(dt), first_index_(-kOrder), newest_(0),
      capacity_(std::max<std::size_t>(history, 2 * kOrder)) {
  if (!(dt > 0.0)) throw std::invalid_argument("SplineTrajectory: knot interval must be positive");
  for (int i = 0; i < 2 * kOrder; ++i) {
    cps_.push_back(ControlPoint{R0, p0, Vec3::Zero(), Vec3::Zero()});
  }
}

bool SplineTrajectory::contains(double t) const {
  const double tol = 1e-9 * dt_;
  return t >= span_begin() - tol && t <= span_end() + tol;
}

SplineTrajectory::Locus SplineTrajectory::locate(double t) const {
  if (!contains(t)) {
    throw std::out_of_range("SplineTrajectory: query time " + std::to_string(t) +
                            " outside span [" + std::to_string(span_begin()) + ", " +
                            std::to_string(span_end()) + "]");
  }
  const double x = (t - t0_) / dt_;
  long s = static_cast<long>(std::floor(x));
  s = std::clamp(s, oldest_segment(), newest_);
  const double u = std::clamp(x - static_cast<double>(s), 0.0, 1.0);
  return Locus{s, u};
}

SegmentIncrements SplineTrajectory::live_increments() const {
  SegmentIncrements inc;
  for (int j = 0; j < kOrder; ++j) {
    inc.rot[j] = cp(newest_ + j).inc_rot;
    inc.pos[j] = cp(newest_ + j).inc_pos;
  }
  return inc;
}

void SplineTrajectory::set_live_increments(const SegmentIncrements& inc) {
  for (int j = 0; j < kOrder; ++j) {
    const ControlPoint& prev = cp(newest_ + j - 1);
    ControlPoint& c = cp(newest_ + j);
    c.inc_rot = inc.rot[j];
    c.inc_pos = inc.pos[j];
    c.R = prev.R * exp_so3(inc.rot[j]);
    c.p = prev.p + inc.pos[j];
  }
}

void SplineTrajectory::extend_constant_velocity() {
  const ControlPoint& last = cps_.back();
  const ControlPoint& source = cp(newest_ + kOrder - 2);
  ControlPoint next;
  next.inc_rot = source.inc_rot;
  next.inc_pos = source.inc_pos;
  next.R = last.R * exp_so3(next.inc_rot);
  next.p = last.p + next.inc_pos;
  cps_.push_back(next);
  ++newest_;
  while (cps_.size() > capacity_) {
    cps_.pop_front();
    ++first_index_;
  }
}

const SplineTrajectory::ControlPoint& SplineTrajectory::control_point(long index) const {
  if (index < first_index_ || index > last_control_index()) {
    throw std::out_of_range("SplineTrajectory: control point index out of range");
  }
  return cp(index);
}

Rot3 SplineTrajectory::rotation(double t) const { return sample(t).R; }
Vec3 SplineTrajectory::angular_rate(double t) const { return sample(t).omega; }
Vec3 SplineTrajectory::position(double t) const { return sample(t).p; }
Vec3 SplineTrajectory::velocity(double t) const { return sample(t).v; }
Vec3 SplineTrajectory::acceleration(double t) const { return sample(t).a; }

TrajectorySample SplineTrajectory::sample(double t) const { return sample(t, nullptr); }

SplineJacobians SplineTrajectory::jacobians(double t) const {
  SplineJacobians jac;
  sample(t, &jac);
  return jac;
}

TrajectorySample SplineTrajectory::sample(double t, SplineJacobians* jac,
                                          bool rate_jacobians) const {
  const Locus loc = locate(t);
  const long s = loc.segment;
  const Vec4 lam = lambda_eval(loc.u, 0, dt_);
  const Vec4 dlam = lambda_eval(loc.u, 1, dt_);
  const Vec4 ddlam = lambda_eval(loc.u, 2, dt_);

  const ControlPoint& anchor = cp(s - 1);
  std::array<Mat3, kOrder> A, Jr;
  std::array<Vec3, kOrder + 1> w;  // w[j] is the recursion input to step j
  w[0].setZero();

  TrajectorySample out;
  out.R = anchor.R;
  out.p = anchor.p;
  out.v.setZero();
  out.a.setZero();
  for (int j = 0; j < kOrder; ++j) {
    const ControlPoint& c = cp(s + j);
    const bool live = jac != nullptr && s + j >= newest_;
    A[j] = live ? exp_so3(lam[j] * c.inc_rot, &Jr[j]) : exp_so3(lam[j] * c.inc_rot);
    out.R = out.R * A[j];
    w[j + 1] = A[j].transpose() * w[j] + dlam[j] * c.inc_rot;
    out.p += lam[j] * c.inc_pos;
    out.v += dlam[j] * c.inc_pos;
    out.a += ddlam[j] * c.inc_pos;
  }
  out.omega = w[kOrder];

  if (jac != nullptr) {
    jac->rot.fill(Mat3::Zero());
    jac->omega.fill(Mat3::Zero());
    jac->pos.setZero();
    jac->vel.setZero();
    jac->acc.setZero();
    Mat3 P = Mat3::Identity();  // P_j = A_{N-1}^T ... A_{j+1}^T
    for (int j = kOrder - 1; j >= 0; --j) {
      if (j < kOrder - 1) P = P * A[j + 1].transpose();
      const long live = s + j - newest_;
      if (live < 0 || live >= kOrder) continue;
      jac->rot[live] = lam[j] * P * Jr[j];
      jac->pos[live] = lam[j];
      if (!rate_jacobians) continue;
      // J_r(-phi) = J_r(phi)^T
      jac->omega[live] = P * (lam[j] * A[j].transpose() * skew(w[j]) * Jr[j].transpose() +
                              dlam[j] * Mat3::Identity());
      jac->vel[live] = dlam[j];
      jac->acc[live] = ddlam[j];
    }
  }
  return out;
}

std::vector<PoseStamped> SplineTrajectory::sample_poses(double t_begin, double t_end,
                                                        double rate_hz) const {
  std::vector<PoseStamped> poses;
  if (!(rate_hz > 0.0)) return poses;
  t_begin = std::max(t_begin, span_begin());
  t_end = std::min(t_end, span_end());
  const double step = 1.0 / rate_hz;
  for (long k = 0;; ++k) {
    const double t = t_begin + static_cast<double>(k) * step;
    if (t > t_end + 1e-12) break;
    const TrajectorySample smp = sample(t);
    poses.push_back(PoseStamped{t, smp.R, smp.p});
  }
  return poses;
}

}  // namespace ctlio
