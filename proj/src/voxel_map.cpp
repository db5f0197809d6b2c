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

#include "ctlio/voxel_map.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <unordered_set>

#include "ctlio/lie_math.hpp"

namespace ctlio {

const char* to_string(FeatureClass c) {
  switch (c) {
    case FeatureClass::kPlane:
      return "plane";
    case FeatureClass::kVoxel:
      return "voxel";
    default:
      return "immature";
  }
}

Mat3 project_point_uncertainty(const Vec3& p_lidar, const Mat3& cov_lidar, const Rot3& R,
                               const Mat3& cov_rot, const Mat3& cov_trans, const Rot3& R_il,
                               const Vec3& t_il) {
  const Vec3 s = R_il * p_lidar + t_il;
  const Mat3 A = R * R_il;
  const Mat3 B = R * skew(s);
  Mat3 out = A * cov_lidar * A.transpose() + cov_trans + B * cov_rot * B.transpose();
  return 0.5 * (out + out.transpose());
}

void VoxelNode::refresh_statistics() {
  if (count == 0) return;
  const double n = static_cast<double>(count);
  const Vec3 m = sum / n;
  mean = center + m;
  scatter = sum_sq / n - m * m.transpose();
  scatter = 0.5 * (scatter + scatter.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Mat3> es(scatter);
  eigvals = es.eigenvalues().cwiseMax(0.0);
  eigvecs = es.eigenvectors();
}

Eigen::RowVector3d eigval_gradient(const Vec3& p, const Vec3& q, const Mat3& vecs, int k,
                                   double n) {
  const Vec3 u = vecs.col(k);
  return (2.0 / n) * (p - q).dot(u) * u.transpose();
}

Mat3 eigvec_gradient(const Vec3& p, const Vec3& q, const Vec3& vals, const Mat3& vecs, int k,
                     double n, double min_gap) {
  const Vec3 d = p - q;
  const Vec3 uk = vecs.col(k);
  Mat3 J = Mat3::Zero();
  for (int m = 0; m < 3; ++m) {
    if (m == k) continue;
    const double gap = vals[k] - vals[m];
    if (std::abs(gap) < min_gap) continue;
    const Vec3 um = vecs.col(m);
    J += um * (d.dot(uk) * um.transpose() + d.dot(um) * uk.transpose()) / (n * gap);
  }
  return J;
}

Eigen::Matrix<double, 12, 12> feature_uncertainty(const VoxelNode& node,
                                                  double eigvec_saturation) {
  Eigen::Matrix<double, 12, 12> cov = Eigen::Matrix<double, 12, 12>::Zero();
  if (node.points.empty()) return cov;
  const double n = static_cast<double>(node.points.size());
  const double min_gap = std::max(1e-6 * node.eigvals[2], 1e-300);
  Eigen::Matrix<double, 12, 3> J;
  for (const TimedPointWorld& pt : node.points) {
    for (int k = 0; k < 3; ++k) {
      J.row(k) = eigval_gradient(pt.p, node.mean, node.eigvecs, k, n);
      J.block<3, 3>(3 + 3 * k, 0) =
          eigvec_gradient(pt.p, node.mean, node.eigvals, node.eigvecs, k, n, min_gap);
    }
    const Eigen::Matrix<double, 12, 3> JC = J * pt.cov;
    cov.noalias() += JC.lazyProduct(J.transpose());
  }
  for (int k = 0; k < 3; ++k) {
    for (int m = 0; m < 3; ++m) {
      if (m != k && std::abs(node.eigvals[k] - node.eigvals[m]) < min_gap) {
        const Vec3 um = node.eigvecs.col(m);
        cov.block<3, 3>(3 + 3 * k, 3 + 3 * k) += eigvec_saturation * um * um.transpose();
      }
    }
  }
  return 0.5 * (cov + cov.transpose());
}

VoxelMap::VoxelMap(MapConfig cfg) : cfg_(cfg) {}

Eigen::Vector3i VoxelMap::lattice_key(const Vec3& p) const {
  // Cells are (k s, (k+1) s]; a face point belongs to the lower index.
  Eigen::Vector3i k;
  for (int i = 0; i < 3; ++i) {
    k[i] = static_cast<int>(std::ceil(p[i] / cfg_.root_size)) - 1;
  }
  return k;
}

int VoxelMap::child_slot(const VoxelNode& node, const Vec3& p) {
  int slot = 0;
  for (int i = 0; i < 3; ++i) {
    if (p[i] > node.center[i]) slot |= (1 << i);
  }
  return slot;
}

VoxelNode& VoxelMap::child(VoxelNode& node, int slot) {
  auto& c = node.children[static_cast<std::size_t>(slot)];
  if (!c) {
    c = std::make_unique<VoxelNode>();
    c->depth = node.depth + 1;
    c->size = 0.5 * node.size;
    for (int i = 0; i < 3; ++i) {
      const int bit = (slot >> i) & 1;
      c->key[i] = 2 * node.key[i] + bit;
      c->center[i] = node.center[i] + (bit ? 0.25 : -0.25) * node.size;
    }
  }
  return *c;
}

VoxelNode* VoxelMap::leaf_for(const Vec3& p) {
  const Eigen::Vector3i key = lattice_key(p);
  auto it = roots_.find(key);
  if (it == roots_.end()) {
    auto node = std::make_unique<VoxelNode>();
    node->key = key;
    node->size = cfg_.root_size;
    node->center = (key.cast<double>() + Vec3::Constant(0.5)) * cfg_.root_size;
    it = roots_.emplace(key, std::move(node)).first;
  }
  VoxelNode* n = it->second.get();
  n->last_touch = clock_;
  while (n->subdivided) n = &child(*n, child_slot(*n, p));
  return n;
}

void VoxelMap::add_point(VoxelNode& node, const TimedPointWorld& pt) const {
  const Vec3 d = pt.p - node.center;
  ++node.count;
  node.sum += d;
  node.sum_sq += d * d.transpose();
  node.points.push_back(pt);
}

void VoxelMap::evaluate(VoxelNode& node) {
  if (node.frozen || node.subdivided) return;
  if (node.count < cfg_.min_points) {
    node.cls = FeatureClass::kImmature;
    return;
  }
  node.refresh_statistics();
  const double l1 = node.eigvals[0], l3 = node.eigvals[2];
  bool planar = l3 > 0.0 && l1 < cfg_.planarity_ratio * l3;
  if (planar && cfg_.outlier_sigma > 0.0) {
    const Vec3 u = node.eigvecs.col(0);
    const double limit = std::max(cfg_.outlier_sigma * std::sqrt(std::max(l1, 0.0)), cfg_.outlier_floor);
    for (const TimedPointWorld& pt : node.points) {
      if (std::abs(u.dot(pt.p - node.mean)) > limit) {
        planar = false;
        break;
      }
    }
  }
  if (planar && node.eigvals[1] < cfg_.min_spread_ratio * l3) {
    node.cls = FeatureClass::kImmature;
    if (node.count >= cfg_.max_points) node.frozen = true;
    return;
  }
  if (!planar && node.depth < cfg_.max_depth) {
    node.subdivided = true;
    node.cls = FeatureClass::kImmature;
    std::vector<TimedPointWorld> pts;
    pts.swap(node.points);
    std::array<bool, 8> used{};
    for (const TimedPointWorld& pt : pts) {
      const int slot = child_slot(node, pt.p);
      add_point(child(node, slot), pt);
      used[static_cast<std::size_t>(slot)] = true;
    }
    for (int s = 0; s < 8; ++s) {
      if (used[static_cast<std::size_t>(s)]) evaluate(*node.children[static_cast<std::size_t>(s)]);
    }
    return;
  }
  node.cls = planar ? FeatureClass::kPlane : FeatureClass::kVoxel;
  node.feature_cov = feature_uncertainty(node, cfg_.eigvec_saturation);
  Mat3 mc = Mat3::Zero();
  for (const TimedPointWorld& pt : node.points) mc += pt.cov;
  node.mean_cov = mc / static_cast<double>(node.count * node.count);
  if (node.count >= cfg_.max_points) node.frozen = true;
}

void VoxelMap::insert_points(const std::vector<TimedPointWorld>& batch) {
  ++clock_;
  std::vector<VoxelNode*> touched;
  std::unordered_set<VoxelNode*> seen;
  for (const TimedPointWorld& pt : batch) {
    if (!pt.p.allFinite()) continue;
    VoxelNode* leaf = leaf_for(pt.p);
    if (leaf->frozen) continue;
    if (seen.insert(leaf).second) touched.push_back(leaf);
    add_point(*leaf, pt);
  }
  for (VoxelNode* n : touched) evaluate(*n);
  if (roots_.size() > cfg_.max_roots) prune();
}

void VoxelMap::prune() {
  std::vector<std::pair<std::uint64_t, Eigen::Vector3i>> order;
  order.reserve(roots_.size());
  for (const auto& [key, node] : roots_) order.emplace_back(node->last_touch, key);
  const std::size_t target = cfg_.max_roots - cfg_.max_roots / 10;
  const std::size_t drop = roots_.size() - std::min(target, roots_.size());
  std::nth_element(order.begin(), order.begin() + static_cast<long>(drop), order.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 0; i < drop; ++i) roots_.erase(order[i].second);
}

bool VoxelMap::frozen_at(const Vec3& p) const {
  auto it = roots_.find(lattice_key(p));
  if (it == roots_.end()) return false;
  const VoxelNode* n = it->second.get();
  while (n->subdivided) {
    const auto& c = n->children[static_cast<std::size_t>(child_slot(*n, p))];
    if (!c) return false;
    n = c.get();
  }
  return n->frozen;
}

const VoxelNode* VoxelMap::query(const Vec3& p) const {
  auto it = roots_.find(lattice_key(p));
  if (it == roots_.end()) return nullptr;
  const VoxelNode* n = it->second.get();
  const VoxelNode* best = n->is_feature() ? n : nullptr;
  while (n->subdivided) {
    const auto& c = n->children[static_cast<std::size_t>(child_slot(*n, p))];
    if (!c) break;
    n = c.get();
    if (n->is_feature()) best = n;
  }
  return best;
}

std::size_t VoxelMap::feature_count(FeatureClass c) const {
  std::size_t n = 0;
  for_each_node([&](const VoxelNode& node) {
    if (node.is_feature() && node.cls == c) ++n;
  });
  return n;
}

void VoxelMap::write_csv(std::ostream& os) const {
  os << "level,kx,ky,kz,qx,qy,qz,l1,l2,l3,nx,ny,nz,class,count\n";
  for_each_node([&](const VoxelNode& n) {
    if (n.count == 0 || n.subdivided) return;
    const Vec3 u = n.normal();
    os << n.depth << ',' << n.key.x() << ',' << n.key.y() << ',' << n.key.z() << ',' << n.mean.x()
       << ',' << n.mean.y() << ',' << n.mean.z() << ',' << n.eigvals[0] << ',' << n.eigvals[1]
       << ',' << n.eigvals[2] << ',' << u.x() << ',' << u.y() << ',' << u.z() << ','
       << to_string(n.cls) << ',' << n.count << '\n';
  });
}

void VoxelMap::write_ply(std::ostream& os) const {
  std::size_t total = 0;
  for_each_node([&](const VoxelNode& n) { total += n.points.size(); });
  os << "ply\nformat ascii 1.0\nelement vertex " << total
     << "\nproperty float x\nproperty float y\nproperty float z\nproperty uchar label\nend_header\n";
  for_each_node([&](const VoxelNode& n) {
    for (const TimedPointWorld& pt : n.points) {
      os << pt.p.x() << ' ' << pt.p.y() << ' ' << pt.p.z() << ' ' << static_cast<int>(n.cls) << '\n';
    }
  });
}

}  // namespace ctlio
