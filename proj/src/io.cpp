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

#include "ctlio/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>

#include <Eigen/Geometry>
#include <json.hpp>

namespace ctlio {

namespace fs = std::filesystem;
using nlohmann::json;

ParseError::ParseError(const std::string& file, long line, const std::string& what)
    : std::runtime_error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}

namespace {

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(trim(field));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string field;
  while (ss >> field) out.push_back(field);
  return out;
}

double to_double(const std::string& s, const fs::path& file, long line) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  if (b != e && *b == '+') ++b;
  const auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e || s.empty()) {
    throw ParseError(file.string(), line, "not a number: '" + s + "'");
  }
  if (!std::isfinite(v)) throw ParseError(file.string(), line, "non-finite value: '" + s + "'");
  return v;
}

/// Reads a CSV with the given header; calls `row` with parsed numbers.
void read_numeric_csv(const fs::path& path, const std::vector<std::string>& header,
                      const std::function<void(const std::vector<double>&, long)>& row) {
  std::ifstream in = open_in(path);
  std::string line;
  long n = 0;
  bool seen_header = false;
  std::vector<double> values(header.size());
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    const auto fields = split(trim(line), ',');
    if (!seen_header) {
      if (fields != header) {
        std::string expected;
        for (const auto& h : header) expected += (expected.empty() ? "" : ",") + h;
        throw ParseError(path.string(), n, "expected header '" + expected + "'");
      }
      seen_header = true;
      continue;
    }
    if (fields.size() != header.size()) {
      throw ParseError(path.string(), n,
                       "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
    }
    for (std::size_t i = 0; i < fields.size(); ++i) values[i] = to_double(fields[i], path, n);
    row(values, n);
  }
  if (!seen_header) throw ParseError(path.string(), n, "missing header");
}

void set_precision(std::ostream& out) { out << std::setprecision(17); }

}  // namespace

std::vector<ImuSample> read_imu_csv(const fs::path& path) {
  std::vector<ImuSample> out;
  read_numeric_csv(path, {"t", "wx", "wy", "wz", "ax", "ay", "az"}, [&](const std::vector<double>& v, long n) {
    if (!out.empty() && v[0] <= out.back().t) throw ParseError(path.string(), n, "timestamps must increase");
    out.push_back(ImuSample{v[0], Vec3(v[1], v[2], v[3]), Vec3(v[4], v[5], v[6])});
  });
  return out;
}

void write_imu_csv(const fs::path& path, const std::vector<ImuSample>& samples) {
  std::ofstream out = open_out(path);
  set_precision(out);
  out << "t,wx,wy,wz,ax,ay,az\n";
  for (const ImuSample& s : samples) {
    out << s.t << ',' << s.gyro.x() << ',' << s.gyro.y() << ',' << s.gyro.z() << ',' << s.acc.x() << ','
        << s.acc.y() << ',' << s.acc.z() << '\n';
  }
}

std::vector<TimedPoint> read_scan_csv(const fs::path& path) {
  std::vector<TimedPoint> out;
  read_numeric_csv(path, {"t", "x", "y", "z"}, [&](const std::vector<double>& v, long n) {
    if (!out.empty() && v[0] < out.back().t) throw ParseError(path.string(), n, "points must be sorted by time");
    out.push_back(TimedPoint{v[0], Vec3(v[1], v[2], v[3])});
  });
  return out;
}

void write_scan_csv(const fs::path& path, const std::vector<TimedPoint>& points) {
  std::ofstream out = open_out(path);
  set_precision(out);
  out << "t,x,y,z\n";
  for (const TimedPoint& p : points) out << p.t << ',' << p.p.x() << ',' << p.p.y() << ',' << p.p.z() << '\n';
}

std::string scan_file_name(std::size_t index) {
  std::ostringstream ss;
  ss << std::setw(6) << std::setfill('0') << index << ".csv";
  return ss.str();
}

std::vector<ScanEntry> read_scan_index(const fs::path& dir) {
  const fs::path path = dir / "index.csv";
  std::ifstream in = open_in(path);
  std::vector<ScanEntry> out;
  std::string line;
  long n = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    const auto f = split(trim(line), ',');
    if (!seen_header) {
      if (f != std::vector<std::string>{"file", "t_start", "t_end"}) {
        throw ParseError(path.string(), n, "expected header 'file,t_start,t_end'");
      }
      seen_header = true;
      continue;
    }
    if (f.size() != 3 || f[0].empty()) throw ParseError(path.string(), n, "expected 'file,t_start,t_end'");
    ScanEntry e{f[0], to_double(f[1], path, n), to_double(f[2], path, n)};
    if (!(e.t_end > e.t_start)) throw ParseError(path.string(), n, "t_end must exceed t_start");
    if (!out.empty() && e.t_start < out.back().t_end - 1e-9) {
      throw ParseError(path.string(), n, "scans must be in time order and not overlap");
    }
    out.push_back(e);
  }
  if (!seen_header) throw ParseError(path.string(), n, "missing header");
  return out;
}

void write_scan_index(const fs::path& dir, const std::vector<ScanEntry>& entries) {
  std::ofstream out = open_out(dir / "index.csv");
  set_precision(out);
  out << "file,t_start,t_end\n";
  for (const ScanEntry& e : entries) out << e.file << ',' << e.t_start << ',' << e.t_end << '\n';
}

std::string tum_line(const PoseStamped& pose) {
  const Eigen::Quaterniond q(pose.R);
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(9) << pose.t << ' ' << pose.p.x() << ' ' << pose.p.y() << ' ' << pose.p.z()
     << ' ' << q.x() << ' ' << q.y() << ' ' << q.z() << ' ' << q.w();
  return ss.str();
}

std::vector<PoseStamped> read_tum(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::vector<PoseStamped> out;
  std::string line;
  long n = 0;
  while (std::getline(in, line)) {
    ++n;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto f = split_ws(t);
    if (f.size() != 8) throw ParseError(path.string(), n, "expected 't x y z qx qy qz qw'");
    double v[8];
    for (int i = 0; i < 8; ++i) v[i] = to_double(f[static_cast<std::size_t>(i)], path, n);
    Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
    if (q.norm() < 1e-6) throw ParseError(path.string(), n, "zero quaternion");
    q.normalize();
    out.push_back(PoseStamped{v[0], q.toRotationMatrix(), Vec3(v[1], v[2], v[3])});
  }
  return out;
}

void write_tum(const fs::path& path, const std::vector<PoseStamped>& poses) {
  std::ofstream out = open_out(path);
  for (const PoseStamped& p : poses) out << tum_line(p) << '\n';
}

Mode parse_mode(const std::string& s) {
  if (s == "LIO" || s == "lio") return Mode::kLIO;
  if (s == "LO" || s == "lo") return Mode::kLO;
  throw std::invalid_argument("mode must be LIO or LO, got '" + s + "'");
}

std::string to_string(Mode m) { return m == Mode::kLIO ? "LIO" : "LO"; }

namespace {

struct Field {
  std::function<json(const RunConfig&)> get;
  std::function<void(RunConfig&, const json&)> set;
};

template <typename T>
Field number(T EstimatorConfig::*outer, double T::*member) {
  return {[=](const RunConfig& c) { return json((c.estimator.*outer).*member); },
          [=](RunConfig& c, const json& v) { (c.estimator.*outer).*member = v.get<double>(); }};
}

Field number(double EstimatorConfig::*member) {
  return {[=](const RunConfig& c) { return json(c.estimator.*member); },
          [=](RunConfig& c, const json& v) { c.estimator.*member = v.get<double>(); }};
}

Field integer(int EstimatorConfig::*member) {
  return {[=](const RunConfig& c) { return json(c.estimator.*member); },
          [=](RunConfig& c, const json& v) { c.estimator.*member = v.get<int>(); }};
}

Field flag(bool EstimatorConfig::*member) {
  return {[=](const RunConfig& c) { return json(c.estimator.*member); },
          [=](RunConfig& c, const json& v) { c.estimator.*member = v.get<bool>(); }};
}

// Sigma keys for an isotropic covariance.
Field iso_sigma(Mat3 FittingErrorModel::*member) {
  return {[=](const RunConfig& c) { return json(std::sqrt((c.estimator.fixed_fit.*member)(0, 0))); },
          [=](RunConfig& c, const json& v) {
            const double s = v.get<double>();
            if (s < 0.0) throw std::invalid_argument("fitting-error sigma must be >= 0");
            c.estimator.fixed_fit.*member = Mat3::Identity() * s * s;
          }};
}

Field path_field(std::filesystem::path RunConfig::*member) {
  return {[=](const RunConfig& c) { return json((c.*member).string()); },
          [=](RunConfig& c, const json& v) { c.*member = v.get<std::string>(); }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    using E = EstimatorConfig;
    std::map<std::string, Field> t;
    t["imu"] = path_field(&RunConfig::imu);
    t["scans"] = path_field(&RunConfig::scans);
    t["output"] = path_field(&RunConfig::output);
    t["mode"] = {[](const RunConfig& c) { return json(to_string(c.estimator.mode)); },
                 [](RunConfig& c, const json& v) { c.estimator.mode = parse_mode(v.get<std::string>()); }};
    t["knot_frequency_hz"] = number(&E::knot_frequency_hz);
    t["delta_t"] = number(&E::delta_t);
    t["n_thre"] = integer(&E::n_thre);
    t["k_max"] = integer(&E::k_max);
    t["sampling_seed"] = {[](const RunConfig& c) { return json(c.estimator.sampling_seed); },
                          [](RunConfig& c, const json& v) { c.estimator.sampling_seed = v.get<std::uint64_t>(); }};
    t["iekf_max_iter"] = {[](const RunConfig& c) { return json(c.estimator.iekf.max_iterations); },
                          [](RunConfig& c, const json& v) { c.estimator.iekf.max_iterations = v.get<int>(); }};
    t["iekf_eps"] = number(&E::iekf, &IekfOptions::epsilon);
    t["inc_rot_sigma"] = number(&E::process, &ProcessNoise::inc_rot_sigma);
    t["inc_pos_sigma"] = number(&E::process, &ProcessNoise::inc_pos_sigma);
    t["jump_rot_sigma"] = number(&E::process, &ProcessNoise::jump_rot_sigma);
    t["jump_pos_sigma"] = number(&E::process, &ProcessNoise::jump_pos_sigma);
    t["bias_gyro_walk"] = {[](const RunConfig& c) { return json(c.estimator.process.bias_gyro_walk); },
                           [](RunConfig& c, const json& v) {
                             c.estimator.process.bias_gyro_walk = c.estimator.imu.bias_gyro_walk = v.get<double>();
                           }};
    t["bias_acc_walk"] = {[](const RunConfig& c) { return json(c.estimator.process.bias_acc_walk); },
                          [](RunConfig& c, const json& v) {
                            c.estimator.process.bias_acc_walk = c.estimator.imu.bias_acc_walk = v.get<double>();
                          }};
    t["gravity_walk"] = {[](const RunConfig& c) { return json(c.estimator.process.gravity_walk); },
                         [](RunConfig& c, const json& v) {
                           c.estimator.process.gravity_walk = c.estimator.imu.gravity_walk = v.get<double>();
                         }};
    t["gyro_sigma"] = {[](const RunConfig& c) { return json(c.estimator.imu.noise.gyro_sigma); },
                       [](RunConfig& c, const json& v) { c.estimator.imu.noise.gyro_sigma = v.get<double>(); }};
    t["acc_sigma"] = {[](const RunConfig& c) { return json(c.estimator.imu.noise.acc_sigma); },
                      [](RunConfig& c, const json& v) { c.estimator.imu.noise.acc_sigma = v.get<double>(); }};
    t["gravity_magnitude"] = number(&E::imu, &ImuResidualOptions::gravity_magnitude);
    t["imu_stride"] = {[](const RunConfig& c) { return json(c.estimator.imu.stride); },
                       [](RunConfig& c, const json& v) { c.estimator.imu.stride = v.get<int>(); }};
    t["imu_window_intervals"] = integer(&E::imu_window_intervals);
    t["snapshot_priors"] = flag(&E::snapshot_priors);
    t["range_sigma"] = {[](const RunConfig& c) { return json(c.estimator.lidar.noise.range_sigma); },
                        [](RunConfig& c, const json& v) { c.estimator.lidar.noise.range_sigma = v.get<double>(); }};
    t["bearing_sigma_deg"] = {
        [](const RunConfig& c) { return json(c.estimator.lidar.noise.bearing_sigma * 180.0 / M_PI); },
        [](RunConfig& c, const json& v) { c.estimator.lidar.noise.bearing_sigma = v.get<double>() * M_PI / 180.0; }};
    t["gate_sigma"] = number(&E::lidar, &LidarResidualOptions::gate_sigma);
    t["max_rows"] = {[](const RunConfig& c) { return json(c.estimator.lidar.max_rows); },
                     [](RunConfig& c, const json& v) { c.estimator.lidar.max_rows = v.get<int>(); }};
    t["use_mean_cov"] = {[](const RunConfig& c) { return json(c.estimator.lidar.use_mean_cov); },
                         [](RunConfig& c, const json& v) { c.estimator.lidar.use_mean_cov = v.get<bool>(); }};
    t["extrinsic_rotation"] = {
        [](const RunConfig& c) {
          const Eigen::Quaterniond q(c.estimator.lidar.extrinsics.R);
          return json::array({q.x(), q.y(), q.z(), q.w()});
        },
        [](RunConfig& c, const json& v) {
          const auto a = v.get<std::vector<double>>();
          if (a.size() != 4) throw std::invalid_argument("extrinsic_rotation must be [qx, qy, qz, qw]");
          Eigen::Quaterniond q(a[3], a[0], a[1], a[2]);
          if (q.norm() < 1e-6) throw std::invalid_argument("extrinsic_rotation is a zero quaternion");
          c.estimator.lidar.extrinsics.R = q.normalized().toRotationMatrix();
        }};
    t["extrinsic_translation"] = {
        [](const RunConfig& c) {
          const Vec3& p = c.estimator.lidar.extrinsics.t;
          return json::array({p.x(), p.y(), p.z()});
        },
        [](RunConfig& c, const json& v) {
          const auto a = v.get<std::vector<double>>();
          if (a.size() != 3) throw std::invalid_argument("extrinsic_translation must be [x, y, z]");
          c.estimator.lidar.extrinsics.t = Vec3(a[0], a[1], a[2]);
        }};
    t["map_root_size"] = number(&E::map, &MapConfig::root_size);
    t["map_max_depth"] = {[](const RunConfig& c) { return json(c.estimator.map.max_depth); },
                          [](RunConfig& c, const json& v) { c.estimator.map.max_depth = v.get<int>(); }};
    t["map_min_points"] = {[](const RunConfig& c) { return json(c.estimator.map.min_points); },
                           [](RunConfig& c, const json& v) { c.estimator.map.min_points = v.get<int>(); }};
    t["map_planarity_ratio"] = number(&E::map, &MapConfig::planarity_ratio);
    t["map_max_points"] = {[](const RunConfig& c) { return json(c.estimator.map.max_points); },
                           [](RunConfig& c, const json& v) { c.estimator.map.max_points = v.get<int>(); }};
    t["map_max_roots"] = {[](const RunConfig& c) { return json(c.estimator.map.max_roots); },
                          [](RunConfig& c, const json& v) { c.estimator.map.max_roots = v.get<std::size_t>(); }};
    t["online_fitting_error"] = flag(&E::online_fitting_error);
    t["fit_rot_sigma"] = iso_sigma(&FittingErrorModel::rot);
    t["fit_pos_sigma"] = iso_sigma(&FittingErrorModel::pos);
    t["fit_cap_rot"] = number(&E::fit_caps, &FittingErrorCaps::rot);
    t["fit_cap_pos"] = number(&E::fit_caps, &FittingErrorCaps::pos);
    t["init_window"] = number(&E::init_window);
    t["add_pose_cov_to_map"] = flag(&E::add_pose_cov_to_map);
    t["divergence_jump"] = number(&E::divergence_jump);
    return t;
  }();
  return table;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text, const fs::path& base_dir, const std::string& source) {
  const std::string& name = source;
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    // byte offset to line number
    const std::size_t upto = std::min<std::size_t>(e.byte, json_text.size());
    const long line = 1 + static_cast<long>(std::count(json_text.begin(), json_text.begin() + static_cast<long>(upto), '\n'));
    throw ParseError(name, line, "invalid JSON");
  }
  if (!j.is_object()) throw ParseError(name, 1, "config must be a JSON object");
  RunConfig cfg;
  for (const auto& [key, value] : j.items()) {
    const auto it = fields().find(key);
    if (it == fields().end()) throw std::invalid_argument("unknown config key '" + key + "'");
    try {
      it->second.set(cfg, value);
    } catch (const json::exception& e) {
      throw std::invalid_argument("config key '" + key + "': wrong type");
    }
  }
  cfg.has_fixed_fit = j.contains("fit_rot_sigma") && j.contains("fit_pos_sigma");
  if (cfg.estimator.mode == Mode::kLO && !cfg.has_fixed_fit) {
    throw std::invalid_argument("LO mode requires fit_rot_sigma and fit_pos_sigma");
  }
  auto resolve = [&](fs::path& p) {
    if (!p.empty() && p.is_relative()) p = base_dir / p;
  };
  resolve(cfg.imu);
  resolve(cfg.scans);
  resolve(cfg.output);
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig cfg = parse_run_config(ss.str(), path.parent_path(), path.string());
  return cfg;
}

std::string dump_run_config(const RunConfig& cfg) {
  json j = json::object();
  for (const auto& [key, f] : fields()) j[key] = f.get(cfg);
  return j.dump(2) + "\n";
}

}  // namespace ctlio
