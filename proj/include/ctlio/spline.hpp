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

#include <array>
#include <cstddef>
#include <deque>
#include <vector>

#include "ctlio/types.hpp"

namespace ctlio {

/// Cumulative blending matrix of the uniform cubic B-spline. Row j holds the
/// polynomial coefficients of lambda_j(u) in the basis [1, u, u^2, u^3].
const Eigen::Matrix4d& cumulative_blending_matrix();

/// Cumulative basis values (order 0), or their first/second time derivatives
/// (order 1/2, carrying the 1/dt and 1/dt^2 factors).
Vec4 lambda_eval(double u, int order, double dt);

/// Control-point increments of one spline segment. Rotational increments are
/// d_j = Log(R_{i+j-1}^T R_{i+j}) (rad), positional ones p_{i+j} - p_{i+j-1} (m).
struct SegmentIncrements {
  std::array<Vec3, kOrder> rot;
  std::array<Vec3, kOrder> pos;

  static SegmentIncrements Zero();
};

struct TrajectorySample {
  Rot3 R;
  Vec3 p;
  Vec3 v;      // world frame
  Vec3 a;      // world frame
  Vec3 omega;  // body frame
};

/// Partials of an interpolated quantity with respect to the four live
/// increments. Increments that do not influence the queried time get zeros.
/// Rotation partials use the right (body-frame) perturbation R * Exp(dtheta).
struct SplineJacobians {
  std::array<Mat3, kOrder> rot;
  std::array<Mat3, kOrder> omega;
  Vec4 pos;  // dp/d(d_p,l) = pos[l] * I
  Vec4 vel;
  Vec4 acc;
};

struct PoseStamped {
  double t;
  Rot3 R;
  Vec3 p;
};

/// Uniform cumulative cubic B-spline over SO(3) x R^3 in increment form.
///
/// Segment s covers [t0 + s*dt, t0 + (s+1)*dt) and is shaped by control
/// points s..s+3, evaluated relative to the anchor control point s-1. The
/// newest segment's four increments are the live (estimated) ones; every
/// older control point is frozen. Value type, no internal locking.
class SplineTrajectory {
 public:
  struct ControlPoint {
    Rot3 R;
    Vec3 p;
    Vec3 inc_rot;  // relative to the previous control point
    Vec3 inc_pos;
  };

  /// Stationary trajectory at (R0, p0) whose newest segment starts at t_start.
  /// `history` bounds the number of retained control points (>= 2N).
  SplineTrajectory(double t_start, double dt, const Rot3& R0, const Vec3& p0,
                   std::size_t history = 64);

  double knot_interval() const { return dt_; }
  double segment_start(long s) const { return t0_ + static_cast<double>(s) * dt_; }
  long newest_segment() const { return newest_; }
  long oldest_segment() const { return first_index_ + 1; }

  /// Query span [begin, end], inclusive of the newest segment's right end.
  double span_begin() const { return segment_start(oldest_segment()); }
  double span_end() const { return segment_start(newest_ + 1); }
  /// Span of the segments touched by the live increments.
  double live_span_begin() const { return segment_start(newest_ - (kOrder - 1)); }
  bool contains(double t) const;

  SegmentIncrements live_increments() const;
  /// Rebuilds the newest N control points from the frozen anchor.
  void set_live_increments(const SegmentIncrements& inc);

  /// Appends one segment initialized with the constant-velocity guess
  /// d'_j = d_{j+1} (j < N-1), d'_{N-1} = d_{N-2}. The anchor advances onto
  /// the control point set by the consumed increment.
  void extend_constant_velocity();

  const ControlPoint& control_point(long index) const;
  long first_control_index() const { return first_index_; }
  long last_control_index() const { return first_index_ + static_cast<long>(cps_.size()) - 1; }

  Rot3 rotation(double t) const;
  Vec3 angular_rate(double t) const;
  Vec3 position(double t) const;
  Vec3 velocity(double t) const;
  Vec3 acceleration(double t) const;
  TrajectorySample sample(double t) const;

  SplineJacobians jacobians(double t) const;

  /// Both at once; the Jacobian pass reuses the forward products. With
  /// rate_jacobians false only `rot` and `pos` are filled.
  TrajectorySample sample(double t, SplineJacobians* jac, bool rate_jacobians = true) const;

  /// Poses sampled at `rate_hz` over [t_begin, t_end] (clipped to the span).
  std::vector<PoseStamped> sample_poses(double t_begin, double t_end, double rate_hz) const;

 private:
  struct Locus {
    long segment;
    double u;
  };
  Locus locate(double t) const;
  const ControlPoint& cp(long index) const { return cps_[static_cast<std::size_t>(index - first_index_)]; }
  ControlPoint& cp(long index) { return cps_[static_cast<std::size_t>(index - first_index_)]; }

  double t0_;
  double dt_;
  long first_index_;
  long newest_;
  std::size_t capacity_;
  std::deque<ControlPoint> cps_;
};

}  // namespace ctlio
