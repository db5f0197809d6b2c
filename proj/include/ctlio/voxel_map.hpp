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
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <unordered_map>
#include <vector>

#include "ctlio/types.hpp"

namespace ctlio {

struct TimedPointWorld {
  double t;
  Vec3 p;    // world frame, m
  Mat3 cov;  // m^2
};

enum class FeatureClass : std::uint8_t { kImmature = 0, kPlane = 1, kVoxel = 2 };

const char* to_string(FeatureClass c);

struct MapConfig {
  double root_size = 1.0;  // m
  int max_depth = 3;
  int min_points = 20;
  double planarity_ratio = 0.01;  // lambda_1 / lambda_3
  // Planar candidates with lambda_2 below this fraction of lambda_3 are
  // near-collinear (e.g. a single scan ring) and their normal is undefined;
  // they stay immature until better spread.
  double min_spread_ratio = 0.05;
  // A planar candidate is rejected when a point lies farther from the plane
  // than max(outlier_sigma * sqrt(lambda_1), outlier_floor). This catches a
  // few points of a second surface, which barely move lambda_1. 0 disables.
  double outlier_sigma = 4.0;
  double outlier_floor = 0.005;  // m
  // A node stops absorbing points once it holds this many; its statistics
  // and feature are then fixed.
  int max_points = 100;
  std::size_t max_roots = 100000;
  double eigvec_saturation = 1.0;  // variance assigned along degenerate directions
};

/// World-frame point covariance:
///   R R_IL S_L (.)^T + S_t + R [s]x S_R [s]x^T R^T,  s = R_IL p_L + t_IL,
/// with S_R the right-perturbation rotation covariance of the body pose.
Mat3 project_point_uncertainty(const Vec3& p_lidar, const Mat3& cov_lidar, const Rot3& R,
                               const Mat3& cov_rot, const Mat3& cov_trans, const Rot3& R_il,
                               const Vec3& t_il);

/// Octree cell. Eigenvalues ascend, so eigvecs.col(0) is the normal candidate.
struct VoxelNode {
  int depth = 0;
  Eigen::Vector3i key = Eigen::Vector3i::Zero();  // lattice index at this depth
  Vec3 center = Vec3::Zero();
  double size = 0.0;

  // Moments about `center` (keeps cancellation small).
  std::int64_t count = 0;
  Vec3 sum = Vec3::Zero();
  Mat3 sum_sq = Mat3::Zero();

  Vec3 mean = Vec3::Zero();
  Mat3 scatter = Mat3::Zero();  // (1/N) sum (p - q)(p - q)^T
  Vec3 eigvals = Vec3::Zero();
  Mat3 eigvecs = Mat3::Identity();

  FeatureClass cls = FeatureClass::kImmature;
  bool subdivided = false;
  bool frozen = false;

  // Covariance of [lambda_1..3, u_1, u_2, u_3] (12x12) and of the mean.
  Eigen::Matrix<double, 12, 12> feature_cov = Eigen::Matrix<double, 12, 12>::Zero();
  Mat3 mean_cov = Mat3::Zero();

  std::vector<TimedPointWorld> points;
  std::array<std::unique_ptr<VoxelNode>, 8> children;
  std::uint64_t last_touch = 0;

  Vec3 normal() const { return eigvecs.col(0); }
  Mat3 eigvec_cov(int k) const { return feature_cov.block<3, 3>(3 + 3 * k, 3 + 3 * k); }
  double eigval_var(int k) const { return feature_cov(k, k); }
  bool is_feature() const { return cls != FeatureClass::kImmature && !subdivided; }

  /// Recompute mean, scatter and eigen pairs from the moments.
  void refresh_statistics();
};

/// First-order propagation of point covariances to eigenvalues and
/// eigenvectors of the node scatter (12x12, order lambda_1..3, u_1..3).
/// Point covariances come from the retained points.
Eigen::Matrix<double, 12, 12> feature_uncertainty(const VoxelNode& node,
                                                  double eigvec_saturation = 1.0);

/// Partials of eigenvalue k and eigenvector k with respect to point p_i of
/// a node with mean q and eigen pairs (vals, vecs) over n points.
Eigen::RowVector3d eigval_gradient(const Vec3& p, const Vec3& q, const Mat3& vecs, int k,
                                   double n);
Mat3 eigvec_gradient(const Vec3& p, const Vec3& q, const Vec3& vals, const Mat3& vecs, int k,
                     double n, double min_gap);

struct LatticeHash {
  std::size_t operator()(const Eigen::Vector3i& k) const {
    const std::uint64_t x = static_cast<std::uint32_t>(k.x());
    const std::uint64_t y = static_cast<std::uint32_t>(k.y());
    const std::uint64_t z = static_cast<std::uint32_t>(k.z());
    return static_cast<std::size_t>((x * 73856093ULL) ^ (y * 19349663ULL) ^ (z * 83492791ULL));
  }
};

class VoxelMap {
 public:
  explicit VoxelMap(MapConfig cfg = {});

  const MapConfig& config() const { return cfg_; }

  /// Routes points to their leaves, updates moments, then re-evaluates the
  /// touched leaves (classification, subdivision, feature uncertainty).
  void insert_points(const std::vector<TimedPointWorld>& batch);

  /// True when p would land in a frozen leaf, so insert_points would drop it.
  bool frozen_at(const Vec3& p) const;

  /// Deepest plane/voxel feature node whose cell contains p, or nullptr.
  const VoxelNode* query(const Vec3& p) const;

  /// Cell index at `depth`; a point on a face goes to the lower index.
  Eigen::Vector3i lattice_key(const Vec3& p) const;

  std::size_t root_count() const { return roots_.size(); }
  std::size_t feature_count(FeatureClass c) const;

  template <typename Fn>
  void for_each_node(Fn&& fn) const {
    for (const auto& [key, node] : roots_) visit(*node, fn);
  }

  /// "level,kx,ky,kz,qx,qy,qz,l1,l2,l3,nx,ny,nz,class,count"
  void write_csv(std::ostream& os) const;
  /// ASCII PLY of the retained points.
  void write_ply(std::ostream& os) const;

 private:
  template <typename Fn>
  static void visit(const VoxelNode& n, Fn& fn) {
    fn(n);
    for (const auto& c : n.children) {
      if (c) visit(*c, fn);
    }
  }
  VoxelNode* leaf_for(const Vec3& p);
  void evaluate(VoxelNode& node);
  void add_point(VoxelNode& node, const TimedPointWorld& pt) const;
  static int child_slot(const VoxelNode& node, const Vec3& p);
  VoxelNode& child(VoxelNode& node, int slot);
  void prune();

  MapConfig cfg_;
  std::unordered_map<Eigen::Vector3i, std::unique_ptr<VoxelNode>, LatticeHash> roots_;
  std::uint64_t clock_ = 0;
};

}  // namespace ctlio
