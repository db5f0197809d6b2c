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

#include "ctlio/spline.hpp"

namespace ctlio {

struct ApeOptions {
  double tolerance = 0.01;    // s, max timestamp gap for a pair
  bool align_origin = false;  // map the first estimate onto its ground-truth pose
};

struct ApeStats {
  double rmse = 0.0;
  double max = 0.0;
  double mean = 0.0;
  long pairs = 0;
};

/// Absolute position error. Each estimate is paired with the nearest
/// ground-truth timestamp within the tolerance; both inputs must be sorted
/// by time. Throws std::invalid_argument with fewer than two pairs.
ApeStats evaluate_ape(const std::vector<PoseStamped>& ground_truth, const std::vector<PoseStamped>& estimate,
                      const ApeOptions& opt = {});

}  // namespace ctlio
