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

#include "ctlio/lidar_observation.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <numeric>
#include <random>

#include "ctlio/lie_math.hpp"

namespace ctlio {

using namespace state_index;

Mat3 lidar_point_covariance(const Vec3& p, const LidarNoise& noise) {
  const double r = p.norm();
  if (r < 1e-9) return Mat3::Identity() * noise.range_sigma * noise.range_sigma;
  const Vec3 b = p / r;
  const Mat3 along = b * b.transpose();
  const double tangential = r * noise.bearing_sigma;
  return noise.range_sigma * noise.range_sigma * along +
         tangential * tangential * (Mat3::Identity() - along);
}

Vec3 point_to_world(const TimedPoint& pt, const SplineTrajectory& traj, const Extrinsics& ext) {
  const TrajectorySample s = traj.sample(pt.t);
  return s.R * (ext.R * pt.p + ext.t) + s.p;
}

namespace {

struct Projected {
  Vec3 s;    // point in the body frame
  Vec3 pw;   // world
  Rot3 R;
  Eigen::Matrix<double, 3, kSplineDim> dpw;  // d p_w / d spline increments
};

Projected project(const TimedPoint& pt, const SplineTrajectory& traj, const Extrinsics& ext) {
  SplineJacobians jac;
  const TrajectorySample smp = traj.sample(pt.t, &jac, false);
  Projected out;
  out.s = ext.R * pt.p + ext.t;
  out.R = smp.R;
  out.pw = smp.R * out.s + smp.p;
  const Mat3 dR = -smp.R * skew(out.s);
  for (int j = 0; j < kOrder; ++j) {
    out.dpw.block<3, 3>(0, rot(j)) = dR * jac.rot[j];
    out.dpw.block<3, 3>(0, pos(j)) = jac.pos[j] * Mat3::Identity();
  }
  return out;
}

// Noise of rows A (p_w - q) from the point, the fitting error and optionally
// the feature mean, where A is k x 3.
template <int K>
Eigen::Matrix<double, K, K> geometric_noise(const Eigen::Matrix<double, K, 3>& A,
                                            const Projected& pr, const TimedPoint& pt,
                                            const VoxelNode& node, const FittingErrorModel& fit,
                                            const LidarResidualOptions& opt) {
  const Mat3 cov_l = lidar_point_covariance(pt.p, opt.noise);
  const Eigen::Matrix<double, K, 3> J_lp = A * pr.R * opt.extrinsics.R;
  const Eigen::Matrix<double, K, 3> J_r = -A * pr.R * skew(pr.s);
  Eigen::Matrix<double, K, K> cov = J_lp * cov_l * J_lp.transpose() +
                                    J_r * fit.rot * J_r.transpose() +
                                    A * fit.pos * A.transpose();
  if (opt.use_mean_cov) cov += A * node.mean_cov * A.transpose();
  return cov;
}

LidarResidual plane_residual(const Projected& pr, const TimedPoint& pt, const VoxelNode& node,
                             const FittingErrorModel& fit, const LidarResidualOptions& opt) {
  LidarResidual res;
  const Vec3 u = node.normal();
  const Vec3 d = pr.pw - node.mean;
  res.rows = 1;
  res.value[0] = u.dot(d);
  res.H.block<1, kSplineDim>(0, 0) = u.transpose() * pr.dpw;

  const Eigen::RowVector3d A = u.transpose();
  double var = geometric_noise<1>(A, pr, pt, node, fit, opt)(0, 0);
  var += d.transpose() * node.eigvec_cov(0) * d;
  res.cov(0, 0) = std::max(var, 1e-12);
  res.accepted = std::abs(res.value[0]) <= opt.gate_sigma * std::sqrt(res.cov(0, 0));
  return res;
}

LidarResidual voxel_residual(const Projected& pr, const TimedPoint& pt, const VoxelNode& node,
                             const FittingErrorModel& fit, const LidarResidualOptions& opt) {
  LidarResidual res;
  const Vec3 d = pr.pw - node.mean;
  const double floor = opt.lambda_floor();

  Mat3 A;  // rows k_i u_i^T
  Eigen::Matrix<double, 3, 12> J_feat = Eigen::Matrix<double, 3, 12>::Zero();
  for (int i = 0; i < 3; ++i) {
    const Vec3 u = node.eigvecs.col(i);
    const double lam = node.eigvals[i];
    const double k = 1.0 / std::sqrt(std::max(lam, floor));
    A.row(i) = k * u.transpose();
    if (lam > floor) J_feat(i, i) = -0.5 * k * k * k * u.dot(d);
    J_feat.block<1, 3>(i, 3 + 3 * i) = k * d.transpose();
  }
  res.rows = 3;
  res.value = A * d;
  res.H.block<3, kSplineDim>(0, 0) = A * pr.dpw;
  res.cov = geometric_noise<3>(A, pr, pt, node, fit, opt) +
            J_feat * node.feature_cov * J_feat.transpose();
  res.cov = 0.5 * (res.cov + res.cov.transpose()).eval();
  res.cov.diagonal() = res.cov.diagonal().cwiseMax(1e-12);
  res.accepted = true;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(res.value[i]) > opt.gate_sigma * std::sqrt(res.cov(i, i))) res.accepted = false;
  }
  return res;
}

}  // namespace

LidarResidual point_to_plane_residual(const TimedPoint& pt, const VoxelNode& node,
                                      const SplineTrajectory& traj, const FittingErrorModel& fit,
                                      const LidarResidualOptions& opt) {
  return plane_residual(project(pt, traj, opt.extrinsics), pt, node, fit, opt);
}

LidarResidual point_to_voxel_residual(const TimedPoint& pt, const VoxelNode& node,
                                      const SplineTrajectory& traj, const FittingErrorModel& fit,
                                      const LidarResidualOptions& opt) {
  return voxel_residual(project(pt, traj, opt.extrinsics), pt, node, fit, opt);
}

MeasurementStack build_scan_residuals(const std::vector<TimedPoint>& points, const VoxelMap& map,
                                      const SplineTrajectory& traj, const FittingErrorModel& fit,
                                      const LidarResidualOptions& opt, ScanResidualStats* stats,
                                      std::vector<PointStatus>* status) {
  MeasurementStack stack;
  ScanResidualStats st;
  if (status != nullptr) status->assign(points.size(), PointStatus::kUnused);
  const std::size_t n = points.size();
  const std::size_t cap = opt.max_rows > 0 ? static_cast<std::size_t>(opt.max_rows) : n;

  // Uniform random subset with a fixed seed, so repeated calls within one
  // update see the same rows. A fixed stride would alias with ring order.
  std::vector<char> keep(n, 1);
  if (n > cap) {
    std::vector<std::size_t> all(n), chosen;
    std::iota(all.begin(), all.end(), std::size_t{0});
    chosen.reserve(cap);
    std::mt19937_64 rng(0x9e3779b97f4a7c15ULL ^ n);
    std::sample(all.begin(), all.end(), std::back_inserter(chosen), cap, rng);
    std::fill(keep.begin(), keep.end(), 0);
    for (std::size_t i : chosen) keep[i] = 1;
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto mark = [&](PointStatus s) {
      if (status != nullptr) (*status)[i] = s;
    };
    if (!keep[i]) {
      ++st.n_subsampled;
      mark(PointStatus::kSubsampled);
      continue;
    }
    const TimedPoint& pt = points[i];
    ++st.n_total;
    if (!traj.contains(pt.t)) {
      ++st.n_out_of_span;
      mark(PointStatus::kOutOfSpan);
      continue;
    }
    const Projected pr = project(pt, traj, opt.extrinsics);
    const VoxelNode* node = map.query(pr.pw);
    if (node == nullptr) {
      ++st.n_no_feature;
      mark(PointStatus::kNoFeature);
      continue;
    }
    const bool plane = node->cls == FeatureClass::kPlane;
    const LidarResidual r = plane ? plane_residual(pr, pt, *node, fit, opt)
                                  : voxel_residual(pr, pt, *node, fit, opt);
    if (!r.accepted) {
      ++st.n_gated;
      mark(PointStatus::kGated);
      continue;
    }
    stack.append(r.H.topRows(r.rows), r.value.head(r.rows), r.cov.topLeftCorner(r.rows, r.rows));
    if (plane) {
      ++st.n_plane;
      mark(PointStatus::kPlane);
    } else {
      ++st.n_voxel;
      mark(PointStatus::kVoxel);
    }
  }
  if (stats != nullptr) *stats = st;
  return stack;
}

}  // namespace ctlio
