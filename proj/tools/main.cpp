#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include <fmt/format.h>

#include "cli/commands.hpp"

namespace {

using namespace spikesim;
using namespace spikesim::cli;

struct CommonFlags {
  std::string design;
  std::uint64_t seed = 0;
  bool strict = false;
  bool saturate = false;
  bool prefetch = false;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--design", f.design, "Integration style: 2d or 3d")
      ->check(CLI::IsMember({"2d", "3d", "2D", "3D"}));
  app->add_option("--seed", f.seed, "Seed for synthetic inputs");
  auto* strict = app->add_flag("--strict", f.strict, "Throw on any register overflow");
  auto* sat = app->add_flag("--saturate", f.saturate, "Clamp overflowing registers");
  strict->excludes(sat);
  app->add_flag("--prefetch", f.prefetch, "Hide load cycles behind the previous tile");
}

Overrides to_overrides(const CommonFlags& f, const CLI::App* app) {
  Overrides o;
  if (!f.design.empty()) o.design = parse_design(f.design);
  if (app->count("--seed") > 0) o.seed = f.seed;
  if (f.strict) o.overflow = OverflowMode::kStrict;
  if (f.saturate) o.overflow = OverflowMode::kSaturate;
  o.prefetch = f.prefetch;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cycle-level simulator of a 3D-stacked spiking transformer accelerator", "spikesim"};
  app.require_subcommand(1);

  CommonFlags run_flags, verify_flags, compare_flags, sweep_flags, replay_flags;

  RunOptions run;
  std::string run_out = ".";
  auto* run_cmd = app.add_subcommand("run", "Simulate one workload and write its report");
  run_cmd->add_option("--config", run.config, "Workload config file")->required();
  run_cmd->add_option("--output-dir,-o", run_out, "Directory for report files");
  run_cmd->add_flag("--trace", run.trace, "Also write the step trace");
  run_cmd->add_flag("--verify", run.verify, "Check the output against the golden model");
  add_common(run_cmd, run_flags);

  VerifyOptions verify;
  auto* verify_cmd = app.add_subcommand("verify", "Randomized systolic-vs-golden trials");
  verify_cmd->add_option("--config", verify.config, "Workload config file")->required();
  verify_cmd->add_option("--trials", verify.trials, "Number of random instances");
  verify_cmd->add_flag("--inject-bitflip", verify.inject_bitflip,
                       "Corrupt one output bit of the first trial");
  add_common(verify_cmd, verify_flags);

  CompareOptions compare;
  std::string compare_out;
  auto* compare_cmd = app.add_subcommand("compare", "2D versus 3D reduction figures");
  compare_cmd->add_option("--config", compare.config, "Workload config file")->required();
  compare_cmd->add_option("--output-dir,-o", compare_out, "Also write compare.txt here");
  add_common(compare_cmd, compare_flags);

  SweepOptions sweep;
  std::string sweep_out;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run the cartesian product of config overrides");
  sweep_cmd->add_option("--config", sweep.config, "Base workload config file")->required();
  sweep_cmd->add_option("--vary", sweep.vary, "section.key=v1,v2,... (repeatable)");
  sweep_cmd->add_option("--output,-o", sweep_out, "CSV file (default stdout)");
  sweep_cmd->add_option("--jobs,-j", sweep.jobs, "Concurrent runs (default: hardware threads)");
  add_common(sweep_cmd, sweep_flags);

  ReplayOptions replay;
  std::string replay_out;
  auto* replay_cmd = app.add_subcommand("trace-replay", "Rebuild a report from a trace file");
  replay_cmd->add_option("--trace", replay.trace, "Trace CSV written by run --trace")->required();
  replay_cmd->add_option("--config", replay.config, "Config supplying cost settings")->required();
  replay_cmd->add_option("--output-dir,-o", replay_out, "Also write report files here");
  add_common(replay_cmd, replay_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run_cmd) {
      run.output_dir = run_out;
      run.overrides = to_overrides(run_flags, run_cmd);
      return cmd_run(run, std::cout);
    }
    if (*verify_cmd) {
      verify.overrides = to_overrides(verify_flags, verify_cmd);
      if (verify.overrides.seed) verify.seed = *verify.overrides.seed;
      return cmd_verify(verify, std::cout);
    }
    if (*compare_cmd) {
      if (!compare_out.empty()) compare.output_dir = compare_out;
      compare.overrides = to_overrides(compare_flags, compare_cmd);
      return cmd_compare(compare, std::cout);
    }
    if (*sweep_cmd) {
      if (!sweep_out.empty()) sweep.output = sweep_out;
      sweep.overrides = to_overrides(sweep_flags, sweep_cmd);
      return cmd_sweep(sweep, std::cout);
    }
    if (*replay_cmd) {
      if (!replay_out.empty()) replay.output_dir = replay_out;
      replay.overrides = to_overrides(replay_flags, replay_cmd);
      return cmd_trace_replay(replay, std::cout);
    }
  } catch (const std::exception& e) {
    std::cout.flush();
    fmt::print(stderr, "spikesim: error: {}\n", e.what());
    return exit_code_for(e);
  }
  return kExitInternal;
}
