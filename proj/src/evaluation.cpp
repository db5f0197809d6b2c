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

#include "ctlio/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ctlio {

namespace {

void require_sorted(const std::vector<PoseStamped>& v, const char* what) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i].t < v[i - 1].t) throw std::invalid_argument(std::string(what) + " is not sorted by time");
  }
}

}  // namespace

ApeStats evaluate_ape(const std::vector<PoseStamped>& ground_truth, const std::vector<PoseStamped>& estimate,
                      const ApeOptions& opt) {
  if (!(opt.tolerance >= 0.0)) throw std::invalid_argument("tolerance must be >= 0");
  require_sorted(ground_truth, "ground truth");
  require_sorted(estimate, "estimate");

  std::vector<std::pair<const PoseStamped*, const PoseStamped*>> pairs;
  for (const PoseStamped& e : estimate) {
    auto it = std::lower_bound(ground_truth.begin(), ground_truth.end(), e.t,
                               [](const PoseStamped& g, double t) { return g.t < t; });
    const PoseStamped* best = nullptr;
    if (it != ground_truth.end()) best = &*it;
    if (it != ground_truth.begin()) {
      const PoseStamped* prev = &*(it - 1);
      if (!best || e.t - prev->t <= best->t - e.t) best = prev;
    }
    if (best && std::abs(best->t - e.t) <= opt.tolerance) pairs.emplace_back(best, &e);
  }
  if (pairs.size() < 2) throw std::invalid_argument("trajectories share fewer than two timestamps");

  Rot3 Ra = Rot3::Identity();
  Vec3 ta = Vec3::Zero();
  if (opt.align_origin) {
    const PoseStamped& g = *pairs.front().first;
    const PoseStamped& e = *pairs.front().second;
    Ra = g.R * e.R.transpose();
    ta = g.p - Ra * e.p;
  }

  ApeStats st;
  double sq = 0.0, sum = 0.0;
  for (const auto& [g, e] : pairs) {
    const double err = (g->p - (Ra * e->p + ta)).norm();
    sq += err * err;
    sum += err;
    st.max = std::max(st.max, err);
  }
  st.pairs = static_cast<long>(pairs.size());
  st.rmse = std::sqrt(sq / static_cast<double>(st.pairs));
  st.mean = sum / static_cast<double>(st.pairs);
  return st;
}

}  // namespace ctlio
