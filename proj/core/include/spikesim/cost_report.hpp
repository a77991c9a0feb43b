#pragma once

// Turns RunStats plus a cost preset into a report, and compares a 2D report
// against a 3D one.
//
// Memory-access latency here is the simulator's own serial accounting: the
// sum over access events of the buffer's per-access latency, never
// overlapped with compute. The comparison uses the per-access preset values.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spikesim/memory.hpp"
#include "spikesim/presets.hpp"
#include "spikesim/run_stats.hpp"

namespace spikesim::report {

// Optional per-buffer energy in pJ per access event.
struct EnergyTable {
  std::array<std::optional<double>, mem::kNumBuffers> pj_per_access{};

  bool empty() const;
  friend bool operator==(const EnergyTable&, const EnergyTable&) = default;
};

struct BufferLine {
  mem::Endpoint buffer = mem::Endpoint::kNone;
  mem::BufferCounters counters;
  double access_latency_ps = 0;
  double latency_total_ps = 0;
  std::optional<double> energy_pj;

  friend bool operator==(const BufferLine&, const BufferLine&) = default;
};

struct Report {
  RunStats stats;
  Design design = Design::k3D;
  std::string preset_key;

  double effective_freq_ghz = 0;
  double wall_time_ns = 0;

  std::vector<BufferLine> buffers;
  double mem_latency_total_ps = 0;

  // Echoed preset figures.
  double mem_access_latency_ps = 0;
  double mem_access_power_mw = 0;
  double internal_power_mw = 0;
  double switching_power_mw = 0;
  double leakage_power_mw = 0;
  double total_power_mw = 0;

  // active PE cycles / (total_cycles * rows * cols)
  double utilization = 0;
  // active PE cycles / PE cycles of the mapped compute steps
  double compute_utilization = 0;

  // total_power_mw * wall_time_ns
  double power_energy_pj = 0;
  std::optional<double> buffer_energy_pj;

  friend bool operator==(const Report&, const Report&) = default;
};

// Per-access latency applied to a buffer: the preset's per-buffer figure
// when it has one, else its aggregate per-access latency.
double buffer_access_latency_ps(const mem::CostPreset& preset, mem::Endpoint buffer);

// Throws ConfigError when the preset's workload or array differs from the
// stats.
Report aggregate(const RunStats& stats, const mem::CostPreset& preset,
                 const EnergyTable& energy = {});

// key=value records in a fixed order.
std::vector<std::pair<std::string, std::string>> to_records(const Report& report);
std::string to_text(const Report& report);
// phase,cycles,share
std::string phase_table_csv(const Report& report);

// Round to `decimals` places, ties to even.
double round_half_even(double value, int decimals = 1);

struct Comparison {
  Workload workload = Workload::kMlp;
  int rows = 0;
  int cols = 0;

  // 3D value / 2D value
  double mem_latency_ratio = 0;
  double mem_power_ratio = 0;
  double freq_ratio = 0;
  double total_power_ratio = 0;

  // Unrounded percentages; reductions are 1 - ratio, the gain is ratio - 1.
  double mem_latency_reduction_pct = 0;
  double mem_power_reduction_pct = 0;
  double freq_gain_pct = 0;
  double total_power_reduction_pct = 0;
  // Only when both reports have nonzero cycles.
  std::optional<double> wall_time_reduction_pct;

  friend bool operator==(const Comparison&, const Comparison&) = default;
};

// Throws ConfigError when the reports differ in workload or array size and
// Error when a 2D figure is zero.
Comparison compare(const Report& report_2d, const Report& report_3d);

std::vector<std::pair<std::string, std::string>> to_records(const Comparison& c);
std::string to_text(const Comparison& c);

}  // namespace spikesim::report
