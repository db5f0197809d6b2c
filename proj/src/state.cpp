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

#include "ctlio/state.hpp"

namespace ctlio {

using namespace state_index;

HybridState HybridState::boxplus(const StateVec& delta) const {
  HybridState out = *this;
  for (int j = 0; j < kOrder; ++j) {
    out.inc.rot[j] += delta.segment<3>(rot(j));
    out.inc.pos[j] += delta.segment<3>(pos(j));
  }
  out.bias_gyro += delta.segment<3>(kBiasGyro);
  out.bias_acc += delta.segment<3>(kBiasAcc);
  out.gravity = s2_boxplus(gravity, delta.segment<2>(kGravity));
  return out;
}

StateVec HybridState::boxminus(const HybridState& other) const {
  StateVec d;
  for (int j = 0; j < kOrder; ++j) {
    d.segment<3>(rot(j)) = inc.rot[j] - other.inc.rot[j];
    d.segment<3>(pos(j)) = inc.pos[j] - other.inc.pos[j];
  }
  d.segment<3>(kBiasGyro) = bias_gyro - other.bias_gyro;
  d.segment<3>(kBiasAcc) = bias_acc - other.bias_acc;
  d.segment<2>(kGravity) = s2_boxminus(gravity, other.gravity);
  return d;
}

Covariance transition_matrix(bool knot_added) {
  Covariance A = Covariance::Identity();
  if (!knot_added) return A;
  for (int block : {kRot, kPos}) {
    A.block<12, 12>(block, block).setZero();
    for (int j = 0; j < kOrder - 1; ++j) {
      A.block<3, 3>(block + 3 * j, block + 3 * (j + 1)).setIdentity();
    }
    A.block<3, 3>(block + 3 * (kOrder - 1), block + 3 * (kOrder - 2)).setIdentity();
  }
  return A;
}

void symmetrize(Covariance& P) { P = 0.5 * (P + P.transpose()).eval(); }

}  // namespace ctlio
