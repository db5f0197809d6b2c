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

#include "ctlio/measurement.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace ctlio {

void MeasurementStack::append(const Eigen::Ref<const MatX>& jacobian,
                              const Eigen::Ref<const VecX>& value,
                              const Eigen::Ref<const MatX>& cov) {
  const int k = static_cast<int>(value.size());
  if (jacobian.rows() != k || jacobian.cols() != kStateDim || cov.rows() != k || cov.cols() != k) {
    throw std::invalid_argument("MeasurementStack::append: inconsistent block shapes");
  }
  blocks_.push_back(Block{rows(), k, cov_.size()});
  for (int i = 0; i < k; ++i) {
    values_.push_back(value[i]);
    rows_.push_back(jacobian.row(i));
  }
  for (int c = 0; c < k; ++c) {
    for (int r = 0; r < k; ++r) cov_.push_back(cov(r, c));
  }
}

void MeasurementStack::append_scalar(const Row& jacobian, double value, double variance) {
  blocks_.push_back(Block{rows(), 1, cov_.size()});
  values_.push_back(value);
  rows_.push_back(jacobian);
  cov_.push_back(variance);
}

void MeasurementStack::append(const MeasurementStack& other) {
  const int base = rows();
  const std::size_t cov_base = cov_.size();
  values_.insert(values_.end(), other.values_.begin(), other.values_.end());
  rows_.insert(rows_.end(), other.rows_.begin(), other.rows_.end());
  cov_.insert(cov_.end(), other.cov_.begin(), other.cov_.end());
  for (const Block& b : other.blocks_) {
    blocks_.push_back(Block{b.offset + base, b.size, b.cov_offset + cov_base});
  }
}

bool MeasurementStack::all_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  for (const Row& r : rows_) {
    if (!r.allFinite()) return false;
  }
  for (double c : cov_) {
    if (!std::isfinite(c)) return false;
  }
  return true;
}

MatX MeasurementStack::jacobian() const {
  MatX H(rows(), kStateDim);
  for (int i = 0; i < rows(); ++i) H.row(i) = rows_[static_cast<std::size_t>(i)];
  return H;
}

VecX MeasurementStack::values() const {
  return Eigen::Map<const VecX>(values_.data(), rows());
}

MatX MeasurementStack::covariance() const {
  MatX R = MatX::Zero(rows(), rows());
  for (const Block& b : blocks_) {
    R.block(b.offset, b.offset, b.size, b.size) =
        Eigen::Map<const MatX>(cov_.data() + b.cov_offset, b.size, b.size);
  }
  return R;
}

bool MeasurementStack::whiten(MatX* jacobian, VecX* values) const {
  jacobian->resize(rows(), kStateDim);
  values->resize(rows());
  for (const Block& b : blocks_) {
    if (b.size == 1) {
      const double var = cov_[b.cov_offset];
      if (!(var > 0.0)) return false;
      const double inv = 1.0 / std::sqrt(var);
      jacobian->row(b.offset) = rows_[static_cast<std::size_t>(b.offset)] * inv;
      (*values)[b.offset] = values_[static_cast<std::size_t>(b.offset)] * inv;
      continue;
    }
    const Eigen::Map<const MatX> C(cov_.data() + b.cov_offset, b.size, b.size);
    Eigen::LLT<MatX> llt(C);
    if (llt.info() != Eigen::Success) return false;
    MatX J(b.size, kStateDim);
    VecX h(b.size);
    for (int i = 0; i < b.size; ++i) {
      J.row(i) = rows_[static_cast<std::size_t>(b.offset + i)];
      h[i] = values_[static_cast<std::size_t>(b.offset + i)];
    }
    jacobian->middleRows(b.offset, b.size) = llt.matrixL().solve(J);
    values->segment(b.offset, b.size) = llt.matrixL().solve(h);
  }
  return true;
}

}  // namespace ctlio
