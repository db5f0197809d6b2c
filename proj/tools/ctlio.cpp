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

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ctlio/commands.hpp"
#include "ctlio/io.hpp"

int main(int argc, char** argv) {
  using namespace ctlio;
  CLI::App app{"Continuous-time LiDAR-inertial odometry: simulate, run, evaluate"};
  app.require_subcommand(1);

  SimOptions sim;
  std::uint64_t sim_seed = 0;
  auto* sim_cmd = app.add_subcommand("sim", "Generate a synthetic dataset");
  sim_cmd->add_option("--preset", sim.preset, "benign, aggressive, benign-noisy or aggressive-noisy")
      ->capture_default_str();
  sim_cmd->add_option("--config", sim.spec, "JSON file with scenario overrides");
  auto* sim_seed_opt = sim_cmd->add_option("--seed", sim_seed, "Random seed");
  sim_cmd->add_option("--output,-o", sim.output, "Output directory")->required();

  RunOptions run;
  std::string run_mode;
  std::string run_output;
  std::uint64_t run_seed = 0;
  auto* run_cmd = app.add_subcommand("run", "Run the estimator on a dataset");
  run_cmd->add_option("--config", run.config, "Run configuration (JSON)")->required();
  auto* run_mode_opt = run_cmd->add_option("--mode", run_mode, "LIO or LO; overrides the config");
  auto* run_output_opt = run_cmd->add_option("--output,-o", run_output, "Output directory; overrides the config");
  auto* run_seed_opt = run_cmd->add_option("--seed", run_seed, "Seed for assigning points to passes");

  EvalOptions ev;
  std::string eval_output;
  auto* eval_cmd = app.add_subcommand("eval", "Absolute position error of an estimate");
  eval_cmd->add_option("ground_truth", ev.ground_truth, "Ground-truth TUM file")->required();
  eval_cmd->add_option("estimate", ev.estimate, "Estimated TUM file")->required();
  eval_cmd->add_option("--tolerance", ev.tolerance, "Max timestamp gap (s)")->capture_default_str();
  eval_cmd->add_flag("--align-origin", ev.align_origin, "Align the first estimated pose to ground truth");
  eval_cmd->add_option("--output,-o", eval_output, "Write the metrics as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (*sim_cmd) {
    if (*sim_seed_opt) sim.seed = sim_seed;
    return cmd_sim(sim, std::cout, std::cerr);
  }
  if (*run_cmd) {
    if (*run_mode_opt) {
      try {
        run.mode = parse_mode(run_mode);
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
      }
    }
    if (*run_output_opt) run.output = run_output;
    if (*run_seed_opt) run.seed = run_seed;
    return cmd_run(run, std::cout, std::cerr);
  }
  ev.output = eval_output;
  return cmd_eval(ev, std::cout, std::cerr);
}
