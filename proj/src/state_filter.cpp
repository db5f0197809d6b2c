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

#include "ctlio/state_filter.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/QR>

namespace ctlio {

using namespace state_index;

namespace {

void add_flow_noise(Covariance& P, double elapsed, double knot_interval, const ProcessNoise& q) {
  if (elapsed <= 0.0) return;
  const double rot_var = q.inc_rot_sigma * q.inc_rot_sigma * elapsed / knot_interval;
  const double pos_var = q.inc_pos_sigma * q.inc_pos_sigma * elapsed / knot_interval;
  for (int i = 0; i < 12; ++i) {
    P(kRot + i, kRot + i) += rot_var;
    P(kPos + i, kPos + i) += pos_var;
  }
  for (int i = 0; i < 3; ++i) {
    P(kBiasGyro + i, kBiasGyro + i) += q.bias_gyro_walk * q.bias_gyro_walk * elapsed;
    P(kBiasAcc + i, kBiasAcc + i) += q.bias_acc_walk * q.bias_acc_walk * elapsed;
  }
  for (int i = 0; i < 2; ++i) {
    P(kGravity + i, kGravity + i) += q.gravity_walk * q.gravity_walk * elapsed;
  }
}

}  // namespace

int predict(FilterState& fs, SplineTrajectory& traj, double to_time, const ProcessNoise& q) {
  if (to_time < fs.time) {
    throw std::invalid_argument("predict: target time is behind the filter time");
  }
  traj.set_live_increments(fs.x.inc);
  const double dt = traj.knot_interval();
  const double tol = 1e-9 * dt;
  static const Covariance kJump = transition_matrix(true);

  int jumps = 0;
  while (to_time > traj.span_end() + tol) {
    const double knot = traj.span_end();
    add_flow_noise(fs.P, knot - fs.time, dt, q);
    fs.time = std::max(fs.time, knot);

    traj.extend_constant_velocity();
    fs.x.inc = traj.live_increments();
    fs.P = kJump * fs.P * kJump.transpose();
    const int last = kOrder - 1;
    for (int i = 0; i < 3; ++i) {
      fs.P(rot(last) + i, rot(last) + i) += q.jump_rot_sigma * q.jump_rot_sigma;
      fs.P(pos(last) + i, pos(last) + i) += q.jump_pos_sigma * q.jump_pos_sigma;
    }
    ++jumps;
  }
  add_flow_noise(fs.P, to_time - fs.time, dt, q);
  fs.time = to_time;
  symmetrize(fs.P);
  return jumps;
}

IekfResult iekf_update(const HybridState& prior, const Covariance& P,
                       const ResidualBuilder& build, const IekfOptions& opt) {
  IekfResult result{prior, P, 0, false, false, 0};

  Eigen::LLT<Covariance> p_llt(P);
  Covariance P_inv;
  if (p_llt.info() == Eigen::Success) {
    P_inv = p_llt.solve(Covariance::Identity());
  } else {
    P_inv = P.completeOrthogonalDecomposition().pseudoInverse();
  }

  HybridState x = prior;
  Covariance S_inv = P;
  for (int it = 0; it < opt.max_iterations; ++it) {
    const MeasurementStack stack = build(x);
    if (!stack.all_finite()) {
      result = IekfResult{prior, P, it, false, true, stack.rows()};
      return result;
    }
    result.rows = stack.rows();
    if (stack.empty()) {
      result.x = x;
      result.P = P;
      result.iterations = it;
      result.converged = true;
      return result;
    }

    MatX H;
    VecX h;
    if (!stack.whiten(&H, &h)) {
      result = IekfResult{prior, P, it, false, true, stack.rows()};
      return result;
    }

    // Lower triangle only; LLT reads nothing else.
    Covariance S = P_inv;
    S.selfadjointView<Eigen::Lower>().rankUpdate(H.transpose());
    const StateVec g = -(H.transpose() * h);
    const StateVec e = x.boxminus(prior);

    Eigen::LLT<Covariance> s_llt(S);
    if (s_llt.info() != Eigen::Success) {
      const double lambda = opt.damping * S.trace() / kStateDim;
      S.diagonal().array() += lambda;
      s_llt.compute(S);
    }
    // delta = S^-1 (H^T R^-1 r - P^-1 e) == K r - (I - K H) e.
    const StateVec delta = s_llt.solve(g - P_inv * e);
    S_inv = s_llt.solve(Covariance::Identity());

    x = x.boxplus(delta);
    result.iterations = it + 1;
    if (!delta.allFinite()) {
      result = IekfResult{prior, P, it + 1, false, true, stack.rows()};
      return result;
    }
    if (delta.norm() <= opt.epsilon) {
      result.converged = true;
      break;
    }
  }
  result.x = x;
  result.P = S_inv;
  symmetrize(result.P);
  return result;
}

MatX kalman_gain_information(const MatX& P, const MatX& H, const MatX& R) {
  const MatX R_inv_H = R.llt().solve(H);
  const MatX S = H.transpose() * R_inv_H + P.llt().solve(MatX::Identity(P.rows(), P.cols()));
  return S.llt().solve(R_inv_H.transpose());
}

MatX kalman_gain_covariance(const MatX& P, const MatX& H, const MatX& R) {
  const MatX PHt = P * H.transpose();
  const MatX innovation = H * PHt + R;
  return innovation.llt().solve(PHt.transpose()).transpose();
}

ComplexityModel complexity_probe(long n, long m) {
  if (n < 1 || m < 1) throw std::invalid_argument("complexity_probe: n and m must be >= 1");
  const double nd = static_cast<double>(n);
  const double md = static_cast<double>(m);
  ComplexityModel c;
  c.gain = 6.0 * nd * nd * md + 2.0 * nd * md * md + nd * nd - 4.0 * md * nd + md * md * md +
           nd * nd * nd;
  c.covariance = 2.0 * nd * nd * nd + 2.0 * nd * nd * md - nd * nd;
  return c;
}

}  // namespace ctlio
