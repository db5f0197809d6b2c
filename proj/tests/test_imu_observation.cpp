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

#include <random>

#include <gtest/gtest.h>

#include "ctlio/imu_observation.hpp"
#include "ctlio/lie_math.hpp"
#include "oracles.hpp"

namespace ctlio {
namespace {

using namespace state_index;

constexpr double kG = 9.81;

double rel_err(const MatX& a, const MatX& ref) {
  return (a - ref).norm() / std::max(1.0, ref.norm());
}

// Smooth test motion with closed-form derivatives.
struct Wave {
  Rot3 R(double t) const {
    return oracle::rotation(Vec3(0.3 * std::sin(2.0 * t), 0.2 * std::cos(1.5 * t), 0.5 * t));
  }
  Vec3 p(double t) const { return Vec3(std::sin(t), 0.5 * std::cos(0.7 * t), 0.1 * t * t); }
  std::pair<Rot3, Vec3> operator()(double t) const { return {R(t), p(t)}; }
};

std::vector<ImuSample> samples_from(const SplineTrajectory& traj, const HybridState& x,
                                    double t0, double t1, double rate) {
  std::vector<ImuSample> out;
  for (long k = 0;; ++k) {
    const double t = t0 + k / rate;
    if (t > t1) break;
    const TrajectorySample s = traj.sample(t);
    out.push_back(ImuSample{t, s.omega + x.bias_gyro,
                            s.R.transpose() * (s.a + kG * x.gravity.vec()) + x.bias_acc});
  }
  return out;
}

TEST(ImuResiduals, ConsistentMeasurementsGiveZero) {
  std::mt19937_64 rng(1);
  SplineTrajectory traj = oracle::random_trajectory(rng, 6, 0.05, 0.02);
  HybridState x;
  x.inc = traj.live_increments();
  x.bias_gyro = Vec3(0.01, -0.02, 0.005);
  x.bias_acc = Vec3(0.1, 0.05, -0.02);
  x.gravity = GravityDir(Vec3(0.05, -0.02, 1.0));
  const auto samples = samples_from(traj, x, traj.live_span_begin(), traj.span_end(), 1000.0);
  ImuResidualStats st;
  const MeasurementStack s = build_imu_residuals(traj, x, samples, {}, ImuResidualOptions{}, &st);
  EXPECT_EQ(st.used, static_cast<int>(samples.size()));
  EXPECT_EQ(s.rows(), 6 * st.used);
  EXPECT_LT(s.values().cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ImuResiduals, StationaryGravityOnly) {
  SplineTrajectory traj(0.0, 0.02, Rot3::Identity(), Vec3::Zero());
  HybridState x;
  std::vector<ImuSample> samples;
  for (int i = 0; i <= 4; ++i) samples.push_back(ImuSample{0.005 * i, Vec3::Zero(), Vec3(0, 0, kG)});
  const MeasurementStack s = build_imu_residuals(traj, x, samples, {}, ImuResidualOptions{});
  EXPECT_LT(s.values().cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ImuResiduals, AccelBiasShiftsRows) {
  std::mt19937_64 rng(2);
  SplineTrajectory traj = oracle::random_trajectory(rng, 6, 0.05, 0.02);
  HybridState x;
  x.inc = traj.live_increments();
  const auto samples = samples_from(traj, x, traj.live_span_begin(), traj.span_end(), 400.0);
  const VecX h0 = build_imu_residuals(traj, x, samples, {}, ImuResidualOptions{}).values();
  const Vec3 delta(0.01, -0.02, 0.03);
  x.bias_acc += delta;
  const VecX h1 = build_imu_residuals(traj, x, samples, {}, ImuResidualOptions{}).values();
  for (int i = 0; i < h0.size() / 6; ++i) {
    EXPECT_LT((h1.segment<3>(6 * i + 3) - h0.segment<3>(6 * i + 3) - delta).norm(), 1e-14);
    EXPECT_LT((h1.segment<3>(6 * i) - h0.segment<3>(6 * i)).norm(), 1e-15);
  }
}

TEST(ImuResiduals, OutOfSpanSamplesAreSkipped) {
  SplineTrajectory traj(0.0, 0.02, Rot3::Identity(), Vec3::Zero());
  HybridState x;
  std::vector<ImuSample> samples = {ImuSample{-1.0, Vec3::Zero(), Vec3::Zero()},
                                    ImuSample{0.01, Vec3::Zero(), Vec3(0, 0, kG)},
                                    ImuSample{0.5, Vec3::Zero(), Vec3::Zero()}};
  ImuResidualStats st;
  const MeasurementStack s = build_imu_residuals(traj, x, samples, {}, ImuResidualOptions{}, &st);
  EXPECT_EQ(st.used, 1);
  EXPECT_EQ(st.skipped, 2);
  EXPECT_EQ(s.rows(), 6);
}

TEST(ImuResiduals, JacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  const double h = 1e-6;
  for (int trial = 0; trial < 50; ++trial) {
    SplineTrajectory traj = oracle::random_trajectory(rng, 6, 0.3, 0.05);
    HybridState x;
    x.inc = traj.live_increments();
    x.bias_gyro = oracle::random_vec(rng, 0.05);
    x.bias_acc = oracle::random_vec(rng, 0.2);
    x.gravity = GravityDir(Vec3(0, 0, 1) + oracle::random_vec(rng, 0.3));
    std::vector<ImuSample> samples;
    std::uniform_real_distribution<double> ut(traj.span_begin(), traj.span_end());
    for (int i = 0; i < 8; ++i) {
      samples.push_back(ImuSample{ut(rng), oracle::random_vec(rng, 1.0), oracle::random_vec(rng, 10.0)});
    }
    std::sort(samples.begin(), samples.end(), [](auto& a, auto& b) { return a.t < b.t; });
    std::vector<ImuStateSnapshot> snaps;
    for (int k = 0; k < 3; ++k) {
      ImuStateSnapshot sn{samples[2 * k + 1].t, oracle::random_vec(rng, 0.05), oracle::random_vec(rng, 0.2),
                          GravityDir(Vec3(0, 0, 1) + oracle::random_vec(rng, 0.2)),
                          Eigen::Matrix<double, 8, 8>::Identity() * 1e-4};
      snaps.push_back(sn);
    }

    auto eval = [&](const HybridState& xs) {
      traj.set_live_increments(xs.inc);
      return build_imu_residuals(traj, xs, samples, snaps, ImuResidualOptions{});
    };
    const MeasurementStack base = eval(x);
    EXPECT_GT(base.rows(), 6 * 8);
    const MatX H = base.jacobian();
    MatX fd(H.rows(), kStateDim);
    for (int k = 0; k < kStateDim; ++k) {
      StateVec e = StateVec::Zero();
      e[k] = h;
      fd.col(k) = (eval(x.boxplus(e)).values() - eval(x.boxplus(-e)).values()) / (2 * h);
    }
    traj.set_live_increments(x.inc);
    EXPECT_LT(rel_err(H, fd), 1e-5);
    for (int r = 0; r < H.rows(); ++r) {
      EXPECT_LT((H.row(r) - fd.row(r)).norm(), 1e-5 * std::max(1.0, fd.row(r).norm())) << r;
    }
  }
}

TEST(ImuResiduals, FrozenSamplesOnlyTouchLiveColumns) {
  std::mt19937_64 rng(4);
  SplineTrajectory traj = oracle::random_trajectory(rng, 6, 0.3, 0.05);
  HybridState x;
  x.inc = traj.live_increments();
  const double t_frozen = traj.live_span_begin() - 0.5 * traj.knot_interval();
  const double t_old_live = traj.live_span_begin() + 0.5 * traj.knot_interval();
  std::vector<ImuSample> samples = {ImuSample{t_frozen, Vec3::Zero(), Vec3::Zero()},
                                    ImuSample{t_old_live, Vec3::Zero(), Vec3::Zero()}};
  const MatX H = build_imu_residuals(traj, x, samples, {}, ImuResidualOptions{}).jacobian();
  EXPECT_TRUE(H.block(0, 0, 6, kSplineDim).isZero(0));
  // The oldest live segment only sees the first increment.
  EXPECT_GT(H.block(6, rot(0), 6, 3).norm(), 0.0);
  EXPECT_TRUE(H.block(6, rot(1), 6, 9).isZero(0));
  EXPECT_TRUE(H.block(6, pos(1), 6, 9).isZero(0));
}

TEST(FittingError, ExactReferencesGiveZero) {
  std::mt19937_64 rng(5);
  const SplineTrajectory traj = oracle::random_trajectory(rng, 6, 0.3, 0.05);
  const auto ref = traj.sample_poses(traj.span_begin(), traj.span_end(), 500.0);
  const FittingErrorModel m = estimate_fitting_error(traj, ref, FittingErrorModel{});
  EXPECT_LT(m.rot.norm(), 1e-20);
  EXPECT_LT(m.pos.norm(), 1e-20);
}

TEST(FittingError, ConstantRotationOffset) {
  std::mt19937_64 rng(6);
  const SplineTrajectory traj = oracle::random_trajectory(rng, 6, 0.3, 0.05);
  auto ref = traj.sample_poses(traj.span_begin(), traj.span_end(), 500.0);
  const Vec3 d0(0.01, -0.02, 0.015);
  for (auto& r : ref) r.R = r.R * oracle::rotation(d0);
  const FittingErrorModel m = estimate_fitting_error(traj, ref, FittingErrorModel{});
  EXPECT_LT((m.rot - d0 * d0.transpose()).norm(), 1e-12);
}

TEST(FittingError, PsdAndCapped) {
  std::mt19937_64 rng(7);
  const SplineTrajectory traj = oracle::random_trajectory(rng, 6, 0.3, 0.05);
  for (int trial = 0; trial < 50; ++trial) {
    auto ref = traj.sample_poses(traj.span_begin(), traj.span_end(), 300.0);
    for (auto& r : ref) {
      r.R = r.R * oracle::rotation(oracle::random_vec(rng, 0.5));
      r.p += oracle::random_vec(rng, 0.5);
    }
    const FittingErrorModel m = estimate_fitting_error(traj, ref, FittingErrorModel{}, FittingErrorCaps{0.01, 0.02});
    const Vec3 er = Eigen::SelfAdjointEigenSolver<Mat3>(m.rot).eigenvalues();
    const Vec3 ep = Eigen::SelfAdjointEigenSolver<Mat3>(m.pos).eigenvalues();
    EXPECT_GE(er.minCoeff(), -1e-15);
    EXPECT_LE(er.maxCoeff(), 0.01 + 1e-12);
    EXPECT_GE(ep.minCoeff(), -1e-15);
    EXPECT_LE(ep.maxCoeff(), 0.02 + 1e-12);
    EXPECT_LT((m.rot - m.rot.transpose()).norm(), 1e-15);
  }
}

TEST(FittingError, EmptyBufferKeepsPrevious) {
  SplineTrajectory traj(0.0, 0.02, Rot3::Identity(), Vec3::Zero());
  FittingErrorModel prev;
  prev.rot = Mat3::Identity() * 1e-4;
  const FittingErrorModel m = estimate_fitting_error(traj, {}, prev);
  EXPECT_EQ(m.rot, prev.rot);
}

TEST(FittingError, ShrinksWithKnotFrequency) {
  const Wave wave;
  double last_rot = 1e9, last_pos = 1e9;
  for (double hz : {10.0, 20.0, 40.0}) {
    const double dt = 1.0 / hz;
    const SplineTrajectory traj = oracle::spline_through(wave, 0.0, dt, static_cast<int>(2.0 * hz));
    std::vector<PoseStamped> ref;
    for (double t = traj.span_begin(); t <= traj.span_end(); t += 0.002) ref.push_back(PoseStamped{t, wave.R(t), wave.p(t)});
    const FittingErrorModel m = estimate_fitting_error(traj, ref, FittingErrorModel{});
    EXPECT_LT(m.rot.trace(), last_rot);
    EXPECT_LT(m.pos.trace(), last_pos);
    EXPECT_GT(m.pos.trace(), 0.0);
    last_rot = m.rot.trace();
    last_pos = m.pos.trace();
  }
}

TEST(ForwardPropagation, StaticGravityCancels) {
  std::vector<ImuSample> samples;
  const Rot3 R = oracle::rotation(Vec3(0.2, -0.1, 0.4));
  const Vec3 g(0, 0, kG);
  for (int i = 0; i <= 20; ++i) samples.push_back(ImuSample{0.005 * i, Vec3::Zero(), R.transpose() * g});
  const NavState seed{0.0, R, Vec3(1, 2, 3), Vec3::Zero()};
  const auto out = imu_forward_propagate(samples, seed, Vec3::Zero(), Vec3::Zero(), g, 0.1);
  ASSERT_EQ(out.size(), 20u);
  for (const NavState& s : out) {
    EXPECT_LT((s.R - R).norm(), 1e-14);
    EXPECT_LT((s.p - seed.p).norm(), 1e-12);
  }
}

TEST(ForwardPropagation, PureRotation) {
  const Vec3 w(0.3, -0.2, 1.0), ba(0.1, 0.2, 0.3);
  std::vector<ImuSample> samples;
  for (int i = 0; i <= 20; ++i) samples.push_back(ImuSample{0.005 * i, w, ba});
  const NavState seed{0.0, Rot3::Identity(), Vec3::Zero(), Vec3::Zero()};
  const auto out = imu_forward_propagate(samples, seed, Vec3::Zero(), ba, Vec3::Zero(), 0.1);
  for (const NavState& s : out) {
    EXPECT_LT((s.R - oracle::rotation(w * s.t)).norm(), 1e-12);
    EXPECT_LT(s.p.norm(), 1e-15);
  }
}

// RK4 straight on the matrix ODE R' = R [w]x.
struct Deriv {
  Mat3 dR;
  Vec3 dv, dp;
};

TEST(ForwardPropagation, MatchesRk4) {
  auto gyro = [](double t) { return Vec3(0.5 * std::sin(3 * t), 0.3 * std::cos(2 * t), 0.8); };
  auto acc = [](double t) { return Vec3(1.0 + std::sin(5 * t), 0.5 * std::cos(4 * t), 9.81 + 0.3 * t); };
  const Vec3 bg(0.01, -0.02, 0.005), ba(0.05, -0.03, 0.02), g(0, 0, 9.81);
  std::vector<ImuSample> samples;
  for (int i = 0; i <= 1000; ++i) {
    const double t = 1e-4 * i;
    samples.push_back(ImuSample{t, gyro(t), acc(t)});
  }
  const NavState seed{0.0, oracle::rotation(Vec3(0.1, 0.2, 0.3)), Vec3(1, 0, 0), Vec3(0.5, -0.2, 0.1)};
  const auto out = imu_forward_propagate(samples, seed, bg, ba, g, 0.1);

  auto f = [&](double t, const Mat3& R, const Vec3& v) {
    return Deriv{R * skew(gyro(t) - bg), R * (acc(t) - ba) - g, v};
  };
  Mat3 R = seed.R;
  Vec3 v = seed.v, p = seed.p;
  const double h = 1e-5;
  for (int i = 0; i < 10000; ++i) {
    const double t = i * h;
    const Deriv k1 = f(t, R, v);
    const Deriv k2 = f(t + h / 2, R + h / 2 * k1.dR, v + h / 2 * k1.dv);
    const Deriv k3 = f(t + h / 2, R + h / 2 * k2.dR, v + h / 2 * k2.dv);
    const Deriv k4 = f(t + h, R + h * k3.dR, v + h * k3.dv);
    R += h / 6 * (k1.dR + 2 * k2.dR + 2 * k3.dR + k4.dR);
    v += h / 6 * (k1.dv + 2 * k2.dv + 2 * k3.dv + k4.dv);
    p += h / 6 * (k1.dp + 2 * k2.dp + 2 * k3.dp + k4.dp);
  }
  const NavState& end = out.back();
  EXPECT_NEAR(end.t, 0.1, 1e-12);
  EXPECT_LT((end.R - R).norm(), 1e-6);
  EXPECT_LT((end.v - v).norm(), 1e-6);
  EXPECT_LT((end.p - p).norm(), 1e-6);
}

TEST(ImuWindow, Inclusive) {
  std::vector<ImuSample> s;
  for (int i = 0; i < 10; ++i) s.push_back(ImuSample{0.1 * i, Vec3::Zero(), Vec3::Zero()});
  const auto w = imu_window(s, 0.2, 0.5);
  ASSERT_EQ(w.size(), 4u);
  EXPECT_DOUBLE_EQ(w.front().t, 0.2);
  EXPECT_TRUE(imu_window(s, 5.0, 6.0).empty());
}

}  // namespace
}  // namespace ctlio
