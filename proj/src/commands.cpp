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

#include "ctlio/commands.hpp"

#include <deque>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "ctlio/evaluation.hpp"
#include "ctlio/io.hpp"

namespace ctlio {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

ScenarioSpec scenario_from_json(const std::string& json_text, const std::string& fallback_preset) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("scenario JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("scenario JSON must be an object");
  ScenarioSpec spec = scenario_preset(j.value("preset", fallback_preset));
  if (j.value("noisy", false)) spec = with_sensor_noise(spec);
  for (const auto& [key, v] : j.items()) {
    if (key == "preset" || key == "noisy") continue;
    if (key == "duration") spec.duration = v.get<double>();
    else if (key == "seed") spec.seed = v.get<std::uint64_t>();
    else if (key == "points_per_scan") spec.lidar.points_per_scan = v.get<int>();
    else if (key == "outlier_fraction") spec.lidar.outlier_fraction = v.get<double>();
    else if (key == "range_sigma") spec.lidar.range_sigma = v.get<double>();
    else if (key == "bearing_sigma_deg") spec.lidar.bearing_sigma = v.get<double>() * M_PI / 180.0;
    else if (key == "gyro_sigma") spec.imu.gyro_sigma = v.get<double>();
    else if (key == "acc_sigma") spec.imu.acc_sigma = v.get<double>();
    else if (key == "scan_period") spec.lidar.scan_period = v.get<double>();
    else if (key == "imu_rate") spec.imu.rate = v.get<double>();
    else throw std::invalid_argument("unknown scenario key '" + key + "'");
  }
  return spec;
}

int cmd_sim(const SimOptions& opt, std::ostream& out, std::ostream& err) {
  ScenarioSpec spec;
  try {
    spec = opt.spec.empty() ? scenario_preset(opt.preset) : scenario_from_json(read_text(opt.spec), opt.preset);
    if (opt.seed) spec.seed = *opt.seed;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  if (opt.output.empty()) {
    err << "error: an output directory is required\n";
    return kExitUsage;
  }

  Dataset d;
  try {
    d = generate(spec);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  if (d.scans.empty()) {
    err << "error: scenario produced no scans\n";
    return kExitUsage;
  }

  try {
    const fs::path dir = opt.output;
    write_imu_csv(dir / "imu.csv", d.imu);
    std::vector<ScanEntry> index;
    for (std::size_t i = 0; i < d.scans.size(); ++i) {
      const Scan& s = d.scans[i];
      const std::string name = scan_file_name(i);
      write_scan_csv(dir / "scans" / name, s.points);
      index.push_back(ScanEntry{name, s.t_start, s.t_start + spec.lidar.scan_period});
    }
    write_scan_index(dir / "scans", index);

    // Ground truth relative to the body pose at the first scan start.
    const double t0 = d.scans.front().t_start;
    const TruthSample origin = truth_at(spec.motion, t0);
    std::vector<PoseStamped> gt;
    gt.reserve(d.truth.size());
    for (const TruthSample& s : d.truth) {
      if (s.t < t0) continue;
      gt.push_back(PoseStamped{s.t, origin.R.transpose() * s.R, origin.R.transpose() * (s.p - origin.p)});
    }
    write_tum(dir / "groundtruth.tum", gt);

    const RunConfig rc = simulated_run_config(spec);
    std::ofstream cfg(dir / "config.json");
    cfg << dump_run_config(rc);
    if (!cfg) throw InputError("cannot write " + (dir / "config.json").string());

    out << "scenario " << spec.name << " seed " << spec.seed << ": " << d.imu.size() << " IMU samples, "
        << d.scans.size() << " scans written to " << dir.string() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}

RunConfig simulated_run_config(const ScenarioSpec& spec) {
  RunConfig rc;
  rc.imu = "imu.csv";
  rc.scans = "scans";
  rc.output = "run";
  rc.estimator.lidar.extrinsics = spec.lidar.extrinsics;
  rc.estimator.imu.gravity_magnitude = spec.gravity;
  // 3 cm leaves keep the room's edges out of the plane fits.
  rc.estimator.map.max_depth = 5;
  // Fixed fitting error for LO runs, which have no IMU to estimate it.
  rc.estimator.fixed_fit.rot = Mat3::Identity() * 1e-6;
  rc.estimator.fixed_fit.pos = Mat3::Identity() * 1e-6;
  rc.has_fixed_fit = true;
  return rc;
}

int cmd_run(const RunOptions& opt, std::ostream& out, std::ostream& err) {
  RunConfig rc;
  std::vector<ImuSample> imu;
  std::vector<ScanEntry> index;
  try {
    rc = load_run_config(opt.config);
    if (opt.mode) {
      rc.estimator.mode = *opt.mode;
      if (*opt.mode == Mode::kLO && !rc.has_fixed_fit) {
        throw std::invalid_argument("LO mode requires fit_rot_sigma and fit_pos_sigma in the config");
      }
    }
    if (opt.output) rc.output = *opt.output;
    if (opt.seed) rc.estimator.sampling_seed = *opt.seed;
    if (rc.scans.empty()) throw std::invalid_argument("config has no 'scans' directory");
    if (rc.output.empty()) throw std::invalid_argument("config has no 'output' directory");
    if (rc.estimator.mode == Mode::kLIO) {
      if (rc.imu.empty()) throw std::invalid_argument("LIO mode needs an 'imu' file");
      imu = read_imu_csv(rc.imu);
    }
    index = read_scan_index(rc.scans);
    if (index.empty()) throw std::invalid_argument("scan index is empty");
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  std::optional<Estimator> est;
  try {
    est.emplace(rc.estimator);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  if (!imu.empty()) est->add_imu(imu);

  fs::create_directories(rc.output);
  std::ofstream traj(rc.output / "trajectory.tum");
  std::ofstream passes(rc.output / "passes.csv");
  std::ofstream frames(rc.output / "frames.csv");
  if (!traj || !passes || !frames) {
    err << "error: cannot write to " << rc.output.string() << '\n';
    return kExitUsage;
  }
  passes << "scan,t_begin,t_end,pass,n_total,n_plane,n_voxel,n_gated,iterations,rows\n";
  frames << "scan,t_end,elapsed_ms,passes,truncated\n";
  frames << std::setprecision(17);
  passes << std::setprecision(17);

  std::deque<double> pending;  // scan end times not yet written
  std::size_t passes_written = 0;
  double total_ms = 0.0;
  long truncated = 0;
  std::size_t done = 0;
  auto flush = [&](bool all) {
    while (!pending.empty() && (all || pending.front() < est->settled_time())) {
      const TrajectorySample s = est->pose_at(pending.front());
      traj << tum_line(PoseStamped{pending.front(), s.R, s.p}) << '\n';
      pending.pop_front();
    }
    for (; passes_written < est->passes().size(); ++passes_written) {
      const PassRecord& p = est->passes()[passes_written];
      passes << p.scan_index << ',' << p.t_begin << ',' << p.t_end << ',' << p.pass_index << ',' << p.n_total << ','
             << p.n_plane << ',' << p.n_voxel << ',' << p.n_gated << ',' << p.iterations << ',' << p.rows << '\n';
    }
  };

  for (std::size_t i = 0; i < index.size(); ++i) {
    const ScanEntry& e = index[i];
    std::vector<TimedPoint> points;
    try {
      points = read_scan_csv(rc.scans / e.file);
    } catch (const std::exception& ex) {
      flush(false);
      err << "error: " << ex.what() << '\n';
      return kExitUsage;
    }
    try {
      const ScanResult r = est->process_scan(points, e.t_start, e.t_end);
      total_ms += r.elapsed_ms;
      truncated += r.truncated;
      frames << i << ',' << e.t_end << ',' << r.elapsed_ms << ',' << r.passes << ',' << r.truncated << '\n';
      pending.push_back(e.t_end);
      flush(false);
      ++done;
    } catch (const NumericalFailure& ex) {
      // Only settled poses are trustworthy; they are already written.
      pending.clear();
      flush(false);
      err << "error: numerical failure in scan " << i << ": " << ex.what() << '\n';
      return kExitNumerical;
    } catch (const std::invalid_argument& ex) {
      flush(false);
      err << "error: scan " << i << ": " << ex.what() << '\n';
      return kExitUsage;
    }
  }
  flush(true);
  out << "frames " << done << " mean_ms " << std::fixed << std::setprecision(3)
      << (done ? total_ms / static_cast<double>(done) : 0.0) << " truncated " << truncated << " output "
      << rc.output.string() << '\n';
  return kExitOk;
}

int cmd_eval(const EvalOptions& opt, std::ostream& out, std::ostream& err) {
  ApeStats st;
  try {
    const auto gt = read_tum(opt.ground_truth);
    const auto est = read_tum(opt.estimate);
    st = evaluate_ape(gt, est, ApeOptions{opt.tolerance, opt.align_origin});
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  out << std::setprecision(9) << std::fixed << "APE_RMSE " << st.rmse << "\nAPE_MAX " << st.max << "\nAPE_MEAN "
      << st.mean << "\npairs " << st.pairs << '\n';
  if (!opt.output.empty()) {
    std::ofstream f(opt.output);
    json j = {{"APE_RMSE", st.rmse}, {"APE_MAX", st.max}, {"APE_MEAN", st.mean}, {"pairs", st.pairs}};
    f << j.dump(2) << '\n';
    if (!f) {
      err << "error: cannot write " << opt.output.string() << '\n';
      return kExitUsage;
    }
  }
  return kExitOk;
}

}  // namespace ctlio
