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

#include "ctlio/estimator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "ctlio/lie_math.hpp"

namespace ctlio {

using namespace state_index;

Estimator::Estimator(EstimatorConfig cfg) : cfg_(std::move(cfg)), map_(cfg_.map) {
  if (!(cfg_.knot_frequency_hz > 0.0) || cfg_.delta_t < 0.0 || cfg_.k_max < 1 || cfg_.n_thre < 1 ||
      !(cfg_.iekf.epsilon > 0.0) || cfg_.iekf.max_iterations < 1) {
    throw std::invalid_argument("Estimator: invalid re-estimation settings");
  }
  dt_ = 1.0 / cfg_.knot_frequency_hz;
  delta_ = cfg_.delta_t > 0.0 ? cfg_.delta_t : dt_;
  fit_ = cfg_.fixed_fit;
}

double Estimator::settled_time() const {
  return traj_ ? traj_->live_span_begin() : -std::numeric_limits<double>::infinity();
}

TrajectorySample Estimator::pose_at(double t) const {
  if (!traj_) throw std::logic_error("Estimator: no trajectory before the first scan");
  return traj_->sample(t);
}

void Estimator::add_imu(const ImuSample& s) {
  if (!imu_.empty() && s.t <= imu_.back().t) {
    throw std::invalid_argument("Estimator: IMU samples must be strictly increasing in time");
  }
  imu_.push_back(s);
}

void Estimator::add_imu(const std::vector<ImuSample>& s) {
  for (const ImuSample& m : s) add_imu(m);
}

std::vector<ImuSample> Estimator::imu_between(double t0, double t1) const {
  return imu_window(imu_, t0, t1);
}

void Estimator::initialize(double t0) {
  t0_ = t0;
  traj_.emplace(t0, dt_, Rot3::Identity(), Vec3::Zero(), 64);
  fs_ = FilterState{};
  fs_.time = t0;
  if (cfg_.mode == Mode::kLIO) {
    const auto win = imu_between(t0, t0 + cfg_.init_window);
    if (win.empty()) throw std::invalid_argument("Estimator: no IMU data in the initialization window");
    Vec3 acc = Vec3::Zero(), gyro = Vec3::Zero();
    for (const ImuSample& m : win) {
      acc += m.acc;
      gyro += m.gyro;
    }
    fs_.x.gravity = GravityDir(acc / static_cast<double>(win.size()));
    fs_.x.bias_gyro = gyro / static_cast<double>(win.size());
  }
  auto set = [&](int at, int n, double sigma) {
    fs_.P.block(at, at, n, n) = MatX::Identity(n, n) * sigma * sigma;
  };
  fs_.P.setZero();
  set(kRot, 12, cfg_.init_inc_rot_sigma);
  set(kPos, 12, cfg_.init_inc_pos_sigma);
  set(kBiasGyro, 3, cfg_.init_bias_gyro_sigma);
  set(kBiasAcc, 3, cfg_.init_bias_acc_sigma);
  set(kGravity, 2, cfg_.init_gravity_sigma);
  fit_ = cfg_.fixed_fit;
}

ScanResult Estimator::process_scan(const std::vector<TimedPoint>& points, double t_start,
                                   double t_end) {
  const auto clock_start = std::chrono::steady_clock::now();
  if (!initialized()) initialize(t_start);

  ScanResult result;
  result.t_end = t_end;
  if (cfg_.record_point_status) result.status.assign(points.size(), PointStatus::kUnused);

  const double tol = 1e-9 * delta_;
  std::size_t cursor = 0;
  for (;;) {
    const double a = t0_ + static_cast<double>(interval_) * delta_;
    if (a >= t_end - tol) break;
    const double b = t0_ + static_cast<double>(interval_ + 1) * delta_;
    // points that precede the current interval cannot be used any more
    while (cursor < points.size() && points[cursor].t < a - tol) {
      ++cursor;
      ++result.truncated;
    }
    std::size_t end = cursor;
    while (end < points.size() && points[end].t < b - tol) ++end;
    std::vector<std::size_t> order;
    process_interval(points, cursor, end, a, b, &result, &order);
    cursor = end;
    ++interval_;
  }
  result.truncated += static_cast<int>(points.size() - cursor);
  if (map_.root_count() > 0) map_seeded_ = true;

  const TrajectorySample s = traj_->sample(std::min(t_end, traj_->span_end()));
  result.R = s.R;
  result.p = s.p;
  ++scan_index_;
  result.elapsed_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - clock_start).count();
  return result;
}

void Estimator::process_interval(const std::vector<TimedPoint>& points, std::size_t begin,
                                 std::size_t end, double a, double b, ScanResult* result,
                                 std::vector<std::size_t>* order) {
  predict(fs_, *traj_, b, cfg_.process);
  const bool lio = cfg_.mode == Mode::kLIO;

  // Points of this interval, split into k random subsets. A fixed stride
  // would alias with the ring order of a spinning scanner.
  const std::size_t n = end - begin;
  const int k = std::max<int>(1, std::min<int>(cfg_.k_max, static_cast<int>((n + cfg_.n_thre - 1) / cfg_.n_thre)));
  const std::size_t budget = static_cast<std::size_t>(k) * static_cast<std::size_t>(cfg_.n_thre);
  std::vector<std::size_t> selected(n);
  std::iota(selected.begin(), selected.end(), begin);
  if (k > 1 || n > budget) {
    std::mt19937_64 rng(cfg_.sampling_seed + static_cast<std::uint64_t>(interval_));
    std::shuffle(selected.begin(), selected.end(), rng);
  }
  if (n > budget) {
    selected.resize(budget);
    result->truncated += static_cast<int>(n - budget);
  }
  *order = selected;

  ImuResidualOptions imu_opt = cfg_.imu;
  imu_opt.use_snapshots = cfg_.snapshot_priors;
  std::vector<ImuSample> imu;
  if (lio) {
    const double w0 = std::max(traj_->live_span_begin(), b - cfg_.imu_window_intervals * delta_);
    for (const ImuSample& m : imu_between(w0, b)) {
      if (m.t < b - 1e-9 * delta_) imu.push_back(m);
    }
  }

  for (int pass = 0; pass < k; ++pass) {
    const std::size_t lo = selected.size() * static_cast<std::size_t>(pass) / static_cast<std::size_t>(k);
    const std::size_t hi = selected.size() * static_cast<std::size_t>(pass + 1) / static_cast<std::size_t>(k);
    std::vector<std::size_t> idx(selected.begin() + static_cast<std::ptrdiff_t>(lo),
                                 selected.begin() + static_cast<std::ptrdiff_t>(hi));
    std::sort(idx.begin(), idx.end());
    std::vector<TimedPoint> pts;
    pts.reserve(idx.size());
    for (std::size_t i : idx) pts.push_back(points[i]);
    const bool use_imu = lio && pass == 0 && !imu.empty();
    // Until the first scan has seeded the map, points are only inserted.
    const bool use_lidar = map_seeded_ && !pts.empty();
    if (!use_lidar && !use_imu) {
      update_map(points, idx);
      continue;
    }

    const FittingErrorModel fit = (cfg_.online_fitting_error && lio) ? fit_ : cfg_.fixed_fit;
    ScanResidualStats stats;
    std::vector<PointStatus> status;
    const bool want_status = cfg_.record_point_status;
    ResidualBuilder build = [&](const HybridState& x) {
      traj_->set_live_increments(x.inc);
      MeasurementStack s;
      if (use_lidar) {
        s = build_scan_residuals(pts, map_, *traj_, fit, cfg_.lidar, &stats, want_status ? &status : nullptr);
      }
      if (use_imu) s.append(build_imu_residuals(*traj_, x, imu, snapshots_, imu_opt));
      return s;
    };

    const Vec3 p_before = traj_->position(b);
    const IekfResult res = iekf_update(fs_.x, fs_.P, build, cfg_.iekf);
    if (!res.aborted) {
      fs_.x = res.x;
      fs_.P = res.P;
    }
    traj_->set_live_increments(fs_.x.inc);
    const Vec3 p_after = traj_->position(b);
    if (!p_after.allFinite() || !fs_.P.allFinite() || (p_after - p_before).norm() > cfg_.divergence_jump) {
      throw NumericalFailure("estimate diverged at t=" + std::to_string(b));
    }

    if (want_status) {
      for (std::size_t i = 0; i < idx.size() && i < status.size(); ++i) result->status[idx[i]] = status[i];
    }
    passes_.push_back(PassRecord{scan_index_, a, b, pass, stats.n_total, stats.n_plane, stats.n_voxel,
                                 stats.n_gated, res.iterations, res.rows});
    ++result->passes;

    update_map(points, idx);
    if (lio && cfg_.online_fitting_error) refresh_fitting_error(a, b);
  }
  if (lio) {
    record_reference(a, b);
    push_snapshot(b);
  }
}

void Estimator::update_map(const std::vector<TimedPoint>& points, const std::vector<std::size_t>& idx) {
  if (idx.empty()) return;
  const FittingErrorModel fit = (cfg_.online_fitting_error && cfg_.mode == Mode::kLIO) ? fit_ : cfg_.fixed_fit;
  using Block12 = Eigen::Matrix<double, 3 * kOrder, 3 * kOrder>;
  const Block12 P_rot = fs_.P.block<3 * kOrder, 3 * kOrder>(rot(0), rot(0));
  const Block12 P_pos = fs_.P.block<3 * kOrder, 3 * kOrder>(pos(0), pos(0));
  std::vector<TimedPointWorld> batch;
  batch.reserve(idx.size());
  for (std::size_t i : idx) {
    const TimedPoint& pt = points[i];
    if (!traj_->contains(pt.t)) continue;
    TimedPointWorld w;
    w.t = pt.t;
    const TrajectorySample s0 = traj_->sample(pt.t);
    w.p = s0.R * (cfg_.lidar.extrinsics.R * pt.p + cfg_.lidar.extrinsics.t) + s0.p;
    if (map_.frozen_at(w.p)) {
      // The map drops it but still records the visit; skip the covariance.
      w.cov.setZero();
      batch.push_back(w);
      continue;
    }
    SplineJacobians jac;
    const TrajectorySample s = traj_->sample(pt.t, &jac, false);
    Mat3 cov_rot = fit.rot, cov_pos = fit.pos;
    if (cfg_.add_pose_cov_to_map) {
      // Diagonal blocks of G P G^T, with G = [J_rot | J_pos] block sparse.
      Eigen::Matrix<double, 3, 3 * kOrder> G;
      for (int k = 0; k < kOrder; ++k) G.middleCols<3>(3 * k) = jac.rot[k];
      const Eigen::Matrix<double, 3, 3 * kOrder> GP = G.lazyProduct(P_rot);
      cov_rot.noalias() += GP.lazyProduct(G.transpose());
      for (int j = 0; j < kOrder; ++j) {
        for (int k = 0; k < kOrder; ++k) {
          cov_pos += (jac.pos[j] * jac.pos[k]) * P_pos.block<3, 3>(3 * j, 3 * k);
        }
      }
    }
    const Mat3 cov_l = lidar_point_covariance(pt.p, cfg_.lidar.noise);
    w.cov = project_point_uncertainty(pt.p, cov_l, s.R, cov_rot, cov_pos, cfg_.lidar.extrinsics.R,
                                      cfg_.lidar.extrinsics.t);
    batch.push_back(w);
  }
  map_.insert_points(batch);
}

void Estimator::refresh_fitting_error(double a, double b) {
  std::vector<PoseStamped> ref;
  const double live = traj_->live_span_begin();
  for (const PoseStamped& p : recorded_) {
    if (p.t >= live && p.t < a) ref.push_back(p);
  }
  const double margin = 2.0 * delta_;
  const auto samples = imu_between(a - margin, b + margin);
  if (!samples.empty()) {
    const TrajectorySample s = traj_->sample(a);
    const NavState seed{a, s.R, s.p, s.v};
    const Vec3 g = cfg_.imu.gravity_magnitude * fs_.x.gravity.vec();
    for (const NavState& ns : imu_forward_propagate(samples, seed, fs_.x.bias_gyro, fs_.x.bias_acc, g, b)) {
      ref.push_back(PoseStamped{ns.t, ns.R, ns.p});
    }
  }
  fit_ = estimate_fitting_error(*traj_, ref, fit_, cfg_.fit_caps);
}

void Estimator::record_reference(double a, double b) {
  for (const ImuSample& m : imu_between(a, b)) {
    if (m.t >= b) break;
    const TrajectorySample s = traj_->sample(m.t);
    recorded_.push_back(PoseStamped{m.t, s.R, s.p});
  }
  const double live = traj_->live_span_begin();
  while (!recorded_.empty() && recorded_.front().t < live) recorded_.pop_front();
}

void Estimator::push_snapshot(double t) {
  ImuStateSnapshot snap;
  snap.t = t;
  snap.bias_gyro = fs_.x.bias_gyro;
  snap.bias_acc = fs_.x.bias_acc;
  snap.gravity = fs_.x.gravity;
  snap.cov = fs_.P.bottomRightCorner<8, 8>();
  snapshots_.push_back(snap);
  const double keep = traj_->live_span_begin() - delta_;
  snapshots_.erase(std::remove_if(snapshots_.begin(), snapshots_.end(),
                                  [&](const ImuStateSnapshot& s) { return s.t < keep; }),
                   snapshots_.end());
}

}  // namespace ctlio
