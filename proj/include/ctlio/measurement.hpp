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

#include <vector>

#include "ctlio/state.hpp"
#include "ctlio/types.hpp"

namespace ctlio {

/// Stacked observation h(x) (ideal value zero), its Jacobian with respect to
/// the 32-dim error state, and a block-diagonal noise covariance.
class MeasurementStack {
 public:
  using Row = Eigen::Matrix<double, 1, kStateDim>;

  int rows() const { return static_cast<int>(values_.size()); }
  bool empty() const { return values_.empty(); }

  /// Appends a block of k rows; `cov` is its k x k noise covariance.
  void append(const Eigen::Ref<const MatX>& jacobian, const Eigen::Ref<const VecX>& value,
              const Eigen::Ref<const MatX>& cov);
  void append_scalar(const Row& jacobian, double value, double variance);
  void append(const MeasurementStack& other);

  double value(int row) const { return values_[static_cast<std::size_t>(row)]; }
  const Row& jacobian_row(int row) const { return rows_[static_cast<std::size_t>(row)]; }

  bool all_finite() const;

  /// Dense copies (for analysis and the covariance-form gain).
  MatX jacobian() const;
  VecX values() const;
  MatX covariance() const;

  /// Applies L^{-1} per block (cov = L L^T) so the result has unit noise.
  /// Returns false if a block covariance is not positive definite.
  bool whiten(MatX* jacobian, VecX* values) const;

 private:
  struct Block {
    int offset;
    int size;
    std::size_t cov_offset;
  };
  std::vector<double> values_;
  std::vector<Row> rows_;
  std::vector<Block> blocks_;
  std::vector<double> cov_;
};

}  // namespace ctlio
