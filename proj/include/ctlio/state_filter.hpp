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

#include <functional>

#include "ctlio/measurement.hpp"
#include "ctlio/spline.hpp"
#include "ctlio/state.hpp"

namespace ctlio {

/// Process noise of the hybrid model. Flow noise is diagonal per block and
/// scales with elapsed time; jump noise only hits the increment block the
/// constant-velocity guess initializes.
struct ProcessNoise {
  double inc_rot_sigma = 1e-3;   // rad, accumulated over one knot interval
  double inc_pos_sigma = 1e-3;   // m, accumulated over one knot interval
  double bias_gyro_walk = 1e-4;  // rad/s/sqrt(s)
  double bias_acc_walk = 1e-3;   // m/s^2/sqrt(s)
  double gravity_walk = 1e-5;    // rad/sqrt(s)
  double jump_rot_sigma = 1e-3;  // rad
  double jump_pos_sigma = 1e-3;  // m
};

struct FilterState {
  HybridState x;
  Covariance P = Covariance::Identity() * 1e-6;
  double time = 0.0;
};

/// Flow + jump propagation to `to_time`. Each crossed knot shifts the live
/// increments (and extends `traj`) and injects jump noise on the new block.
/// Returns the number of knots crossed. Throws std::invalid_argument if
/// `to_time` is behind the filter time.
int predict(FilterState& fs, SplineTrajectory& traj, double to_time, const ProcessNoise& q);

struct IekfOptions {
  int max_iterations = 5;
  double epsilon = 1e-4;
  double damping = 1e-9;  // relative to trace(S)/n, only used if S is not PD
};

struct IekfResult {
  HybridState x;
  Covariance P;
  int iterations = 0;
  bool converged = false;
  bool aborted = false;  // non-finite residuals; prior returned
  int rows = 0;
};

using ResidualBuilder = std::function<MeasurementStack(const HybridState&)>;

/// Iterated EKF in information form:
///   delta = K r - (I - K H)(x_i [-] x_prior),
///   K = (H^T R^-1 H + P^-1)^-1 H^T R^-1,  r = -h(x_i),
/// iterated until |delta| <= eps or the iteration cap; then P = (I - K H) P.
IekfResult iekf_update(const HybridState& prior, const Covariance& P,
                       const ResidualBuilder& build, const IekfOptions& opt);

/// Gain computed both ways; they agree for PD P and R. The covariance form
/// P H^T (H P H^T + R)^-1 inverts an m x m matrix.
MatX kalman_gain_information(const MatX& P, const MatX& H, const MatX& R);
MatX kalman_gain_covariance(const MatX& P, const MatX& H, const MatX& R);

/// Flop-count model of the gain (S_K) and covariance update (S_P) for state
/// dimension n and observation dimension m. The O(m^3), O(n^3) terms of the
/// gain are taken with unit coefficients.
struct ComplexityModel {
  double gain;
  double covariance;
};
ComplexityModel complexity_probe(long n, long m);

}  // namespace ctlio
