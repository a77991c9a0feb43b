#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "spikesim/presets.hpp"
#include "spikesim/run_stats.hpp"
#include "spikesim/tensor.hpp"
#include "spikesim/trace.hpp"

namespace spikesim::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitInternal = 3;

// Maps an exception escaping a command to its exit code.
int exit_code_for(const std::exception& e);

// Command-line settings layered over the config file.
struct Overrides {
  std::optional<Design> design;
  std::optional<std::uint64_t> seed;
  std::optional<OverflowMode> overflow;
  bool prefetch = false;

  void apply(WorkloadConfig& c) const;
};

struct Inputs {
  SpikeTensor s_in;
  std::vector<WeightMatrix> weights;
  SpikeTensor q;
  SpikeTensor k;
  SpikeTensor v;
};

// Loads input files named by the config and fills the rest from the seed.
Inputs make_inputs(const WorkloadConfig& c);

struct SimResult {
  SpikeTensor spikes;
  Trace trace;
  report::RunStats stats;
};

SimResult simulate(const WorkloadConfig& c, const Inputs& in);
SpikeTensor golden(const WorkloadConfig& c, const Inputs& in);

// Config path, then SPIKESIM_PRESETS, then the embedded table.
mem::PresetTable load_presets(const WorkloadConfig& c);
mem::PresetKey preset_key(const WorkloadConfig& c, Design design);

struct RunOptions {
  std::filesystem::path config;
  std::filesystem::path output_dir = ".";
  Overrides overrides;
  bool trace = false;
  bool verify = false;
};

// Writes report.txt and phases.csv (and trace.csv with `trace`) to the
// output directory and prints the report.
int cmd_run(const RunOptions& o, std::ostream& out);

struct VerifyOptions {
  std::filesystem::path config;
  std::int64_t trials = 100;
  std::uint64_t seed = 1;
  bool inject_bitflip = false;
  Overrides overrides;
};

int cmd_verify(const VerifyOptions& o, std::ostream& out);

struct CompareOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> output_dir;
  Overrides overrides;
};

int cmd_compare(const CompareOptions& o, std::ostream& out);

struct SweepOptions {
  std::filesystem::path config;
  // "section.key=v1,v2,..."; the sweep covers the cartesian product.
  std::vector<std::string> vary;
  std::optional<std::filesystem::path> output;
  unsigned jobs = 0;  // 0: hardware concurrency
  Overrides overrides;
};

int cmd_sweep(const SweepOptions& o, std::ostream& out);

struct ReplayOptions {
  std::filesystem::path trace;
  std::filesystem::path config;
  std::optional<std::filesystem::path> output_dir;
  Overrides overrides;
};

// Rebuilds the report from a trace file alone plus the config's cost
// settings.
int cmd_trace_replay(const ReplayOptions& o, std::ostream& out);

}  // namespace spikesim::cli
