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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "ctlio/estimator.hpp"
#include "ctlio/io.hpp"
#include "ctlio/simulator.hpp"

namespace ctlio {

/// Process exit codes shared by the subcommands.
enum ExitCode : int { kExitOk = 0, kExitNumerical = 1, kExitUsage = 2 };

struct SimOptions {
  std::string preset = "benign";
  std::filesystem::path spec;  // optional JSON with scenario overrides
  std::optional<std::uint64_t> seed;
  std::filesystem::path output;
};

/// Scenario from a preset plus the overrides in a JSON object (keys:
/// preset, duration, seed, noisy, points_per_scan, outlier_fraction,
/// range_sigma, bearing_sigma_deg, gyro_sigma, acc_sigma, scan_period,
/// imu_rate).
ScenarioSpec scenario_from_json(const std::string& json_text, const std::string& fallback_preset);

/// Run configuration written next to simulated data: paths relative to the
/// dataset directory and estimator settings suited to the simulated room.
RunConfig simulated_run_config(const ScenarioSpec& spec);

/// Writes imu.csv, scans/, groundtruth.tum and a matching config.json.
/// Ground truth is expressed in the body frame at the first scan start,
/// which is the estimator's origin.
int cmd_sim(const SimOptions& opt, std::ostream& out, std::ostream& err);

struct RunOptions {
  std::filesystem::path config;
  std::optional<Mode> mode;
  std::optional<std::filesystem::path> output;
  std::optional<std::uint64_t> seed;  // point-to-pass sampling seed
};

/// Streams the scans through the estimator. Writes trajectory.tum (poses at
/// scan end times, taken from the trajectory once they have settled),
/// passes.csv and frames.csv. On numerical failure the poses written so far
/// are kept and kExitNumerical is returned.
int cmd_run(const RunOptions& opt, std::ostream& out, std::ostream& err);

struct EvalOptions {
  std::filesystem::path ground_truth;
  std::filesystem::path estimate;
  double tolerance = 0.01;
  bool align_origin = false;
  std::filesystem::path output;  // optional JSON report
};

int cmd_eval(const EvalOptions& opt, std::ostream& out, std::ostream& err);

}  // namespace ctlio
