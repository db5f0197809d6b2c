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

#include "ctlio/imu_observation.hpp"

#include <algorithm>

#include "ctlio/lie_math.hpp"

namespace ctlio {

using namespace state_index;

MeasurementStack build_imu_residuals(const SplineTrajectory& traj, const HybridState& x,
                                     const std::vector<ImuSample>& samples,
                                     const std::vector<ImuStateSnapshot>& snapshots,
                                     const ImuResidualOptions& opt, ImuResidualStats* stats) {
  MeasurementStack stack;
  ImuResidualStats st;
  const int stride = std::max(1, opt.stride);
  const Vec3 g = opt.gravity_magnitude * x.gravity.vec();
  const Mat32 dg = -opt.gravity_magnitude * skew(x.gravity.vec()) * x.gravity.tangent_basis();

  Eigen::Matrix<double, 6, 6> cov = Eigen::Matrix<double, 6, 6>::Zero();
  cov.diagonal().head<3>().setConstant(opt.noise.gyro_sigma * opt.noise.gyro_sigma);
  cov.diagonal().tail<3>().setConstant(opt.noise.acc_sigma * opt.noise.acc_sigma);

  std::vector<int> referenced(snapshots.size(), 0);
  Eigen::Matrix<double, 6, kStateDim> H;
  Eigen::Matrix<double, 6, 1> h;
  for (std::size_t i = 0; i < samples.size(); i += static_cast<std::size_t>(stride)) {
    const ImuSample& m = samples[i];
    if (!traj.contains(m.t)) {
      ++st.skipped;
      continue;
    }
    SplineJacobians jac;
    const TrajectorySample s = traj.sample(m.t, &jac);
    const Vec3 f = s.R.transpose() * (s.a + g);

    H.setZero();
    h.head<3>() = s.omega + x.bias_gyro - m.gyro;
    h.tail<3>() = f + x.bias_acc - m.acc;
    const Mat3 df_dR = skew(f);
    for (int j = 0; j < kOrder; ++j) {
      H.block<3, 3>(0, rot(j)) = jac.omega[j];
      H.block<3, 3>(3, rot(j)) = df_dR * jac.rot[j];
      H.block<3, 3>(3, pos(j)) = jac.acc[j] * s.R.transpose();
    }
    H.block<3, 3>(0, kBiasGyro).setIdentity();
    H.block<3, 3>(3, kBiasAcc).setIdentity();
    H.block<3, 2>(3, kGravity) = s.R.transpose() * dg;
    stack.append(H, h, cov);
    ++st.used;

    if (opt.use_snapshots) {
      auto it = std::lower_bound(snapshots.begin(), snapshots.end(), m.t,
                                 [](const ImuStateSnapshot& a, double t) { return a.t < t; });
      if (it != snapshots.end()) ++referenced[static_cast<std::size_t>(it - snapshots.begin())];
    }
  }

  const double t_now = samples.empty() ? 0.0 : samples.back().t;
  for (std::size_t k = 0; k < snapshots.size(); ++k) {
    if (referenced[k] == 0) continue;
    const ImuStateSnapshot& snap = snapshots[k];
    Eigen::Matrix<double, 8, kStateDim> Hs = Eigen::Matrix<double, 8, kStateDim>::Zero();
    Eigen::Matrix<double, 8, 1> hs;
    hs.segment<3>(0) = x.bias_gyro - snap.bias_gyro;
    hs.segment<3>(3) = x.bias_acc - snap.bias_acc;
    hs.segment<2>(6) = s2_boxminus(x.gravity, snap.gravity);
    Hs.block<3, 3>(0, kBiasGyro).setIdentity();
    Hs.block<3, 3>(3, kBiasAcc).setIdentity();
    Hs.block<2, 2>(6, kGravity) = s2_boxminus_jacobian(x.gravity, snap.gravity);

    Eigen::Matrix<double, 8, 8> c = snap.cov;
    const double age = std::max(0.0, t_now - snap.t);
    c.diagonal().segment<3>(0).array() += opt.bias_gyro_walk * opt.bias_gyro_walk * age;
    c.diagonal().segment<3>(3).array() += opt.bias_acc_walk * opt.bias_acc_walk * age;
    c.diagonal().segment<2>(6).array() += opt.gravity_walk * opt.gravity_walk * age;
    c.diagonal().array() += 1e-12;
    stack.append(Hs, hs, c);
    ++st.snapshot_blocks;
  }

  if (stats != nullptr) *stats = st;
  return stack;
}

namespace {

void cap_eigenvalues(Mat3& S, double cap) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(0.5 * (S + S.transpose()));
  const Vec3 ev = es.eigenvalues().cwiseMax(0.0).cwiseMin(cap);
  S = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

FittingErrorModel estimate_fitting_error(const SplineTrajectory& traj,
                                         const std::vector<PoseStamped>& reference,
                                         const FittingErrorModel& previous,
                                         const FittingErrorCaps& caps) {
  FittingErrorModel out;
  int n = 0;
  for (const PoseStamped& ref : reference) {
    if (!traj.contains(ref.t)) continue;
    const TrajectorySample s = traj.sample(ref.t);
    const Vec3 dtheta = so3_boxminus(ref.R, s.R);
    const Vec3 dp = ref.p - s.p;
    out.rot += dtheta * dtheta.transpose();
    out.pos += dp * dp.transpose();
    ++n;
  }
  if (n < 2) return previous;
  out.rot /= n;
  out.pos /= n;
  cap_eigenvalues(out.rot, caps.rot);
  cap_eigenvalues(out.pos, caps.pos);
  return out;
}

namespace {

// Piecewise-linear signal through the samples, held flat outside.
void interpolate(const std::vector<ImuSample>& samples, double t, Vec3* w, Vec3* a) {
  auto it = std::lower_bound(samples.begin(), samples.end(), t,
                             [](const ImuSample& s, double v) { return s.t < v; });
  if (it == samples.begin()) {
    *w = it->gyro;
    *a = it->acc;
    return;
  }
  if (it == samples.end()) {
    *w = samples.back().gyro;
    *a = samples.back().acc;
    return;
  }
  const ImuSample& hi = *it;
  const ImuSample& lo = *(it - 1);
  const double r = (hi.t > lo.t) ? (t - lo.t) / (hi.t - lo.t) : 1.0;
  *w = (1.0 - r) * lo.gyro + r * hi.gyro;
  *a = (1.0 - r) * lo.acc + r * hi.acc;
}

}  // namespace

std::vector<NavState> imu_forward_propagate(const std::vector<ImuSample>& samples,
                                            const NavState& seed, const Vec3& bias_gyro,
                                            const Vec3& bias_acc, const Vec3& gravity,
                                            double t_end) {
  std::vector<NavState> out;
  if (samples.empty() || t_end <= seed.t) return out;

  std::vector<double> stops;
  for (const ImuSample& s : samples) {
    if (s.t > seed.t && s.t < t_end) stops.push_back(s.t);
  }
  stops.push_back(t_end);

  NavState cur = seed;
  Vec3 w0, a0;
  interpolate(samples, cur.t, &w0, &a0);
  for (double t : stops) {
    const double h = t - cur.t;
    if (h <= 0.0) continue;
    Vec3 w1, a1;
    interpolate(samples, t, &w1, &a1);
    NavState next;
    next.t = t;
    next.R = cur.R * exp_so3((0.5 * (w0 + w1) - bias_gyro) * h);
    const Vec3 f0 = cur.R * (a0 - bias_acc) - gravity;
    const Vec3 f1 = next.R * (a1 - bias_acc) - gravity;
    next.v = cur.v + 0.5 * (f0 + f1) * h;
    next.p = cur.p + cur.v * h + (2.0 * f0 + f1) * (h * h / 6.0);
    out.push_back(next);
    cur = next;
    w0 = w1;
    a0 = a1;
  }
  return out;
}

std::vector<ImuSample> imu_window(const std::vector<ImuSample>& samples, double t0, double t1) {
  auto lo = std::lower_bound(samples.begin(), samples.end(), t0,
                             [](const ImuSample& s, double v) { return s.t < v; });
  auto hi = std::upper_bound(samples.begin(), samples.end(), t1,
                             [](double v, const ImuSample& s) { return v < s.t; });
  if (hi <= lo) return {};
  return std::vector<ImuSample>(lo, hi);
}

}  // namespace ctlio
