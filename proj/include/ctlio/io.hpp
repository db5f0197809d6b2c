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

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctlio/estimator.hpp"
#include "ctlio/imu_observation.hpp"
#include "ctlio/lidar_observation.hpp"
#include "ctlio/spline.hpp"

namespace ctlio {

/// Malformed input; the message carries the file and 1-based line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& file, long line, const std::string& what);
  long line() const { return line_; }

 private:
  long line_;
};

/// Missing or unreadable input file.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// "t,wx,wy,wz,ax,ay,az" with a header row; times strictly increasing.
std::vector<ImuSample> read_imu_csv(const std::filesystem::path& path);
void write_imu_csv(const std::filesystem::path& path, const std::vector<ImuSample>& samples);

/// "t,x,y,z" sensor-frame points with a header row, sorted by time.
std::vector<TimedPoint> read_scan_csv(const std::filesystem::path& path);
void write_scan_csv(const std::filesystem::path& path, const std::vector<TimedPoint>& points);

/// One row of a scan directory's index.csv ("file,t_start,t_end").
struct ScanEntry {
  std::string file;  // relative to the scan directory
  double t_start;
  double t_end;
};

std::vector<ScanEntry> read_scan_index(const std::filesystem::path& dir);
void write_scan_index(const std::filesystem::path& dir, const std::vector<ScanEntry>& entries);
/// File name used for scan `index` ("000042.csv").
std::string scan_file_name(std::size_t index);

/// TUM trajectory "t x y z qx qy qz qw", 9 decimal places.
std::vector<PoseStamped> read_tum(const std::filesystem::path& path);
void write_tum(const std::filesystem::path& path, const std::vector<PoseStamped>& poses);
std::string tum_line(const PoseStamped& pose);

/// Inputs and estimator settings of one run.
struct RunConfig {
  std::filesystem::path imu;    // empty in LO mode
  std::filesystem::path scans;  // directory with index.csv
  std::filesystem::path output;
  EstimatorConfig estimator;
  bool has_fixed_fit = false;  // fit_rot_sigma and fit_pos_sigma were given
};

/// Flat JSON object. Relative paths resolve against the file's directory.
/// Unknown keys are rejected. LO mode requires fit_rot_sigma and
/// fit_pos_sigma, since no IMU is available to estimate the fitting error.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& json_text, const std::filesystem::path& base_dir,
                           const std::string& source = "<config>");
/// Serializes every recognized key.
std::string dump_run_config(const RunConfig& cfg);

Mode parse_mode(const std::string& s);
std::string to_string(Mode m);

}  // namespace ctlio
