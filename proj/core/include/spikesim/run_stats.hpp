#pragma once

#include <array>
#include <cstdint>

#include "spikesim/memory.hpp"
#include "spikesim/trace.hpp"
#include "spikesim/workload.hpp"

namespace spikesim::report {

struct PhaseCycles {
  std::int64_t load = 0;
  std::int64_t compute = 0;
  std::int64_t extract = 0;
  std::int64_t generate = 0;

  std::int64_t total() const { return load + compute + extract + generate; }
  std::int64_t& operator[](Phase p);
  std::int64_t operator[](Phase p) const;

  friend bool operator==(const PhaseCycles&, const PhaseCycles&) = default;
};

// Everything a report needs, derived from a trace alone.
struct RunStats {
  Workload workload = Workload::kMlp;
  int rows = 0;
  int cols = 0;

  std::int64_t total_cycles = 0;  // == phases.total()
  PhaseCycles phases;
  mem::AccessCounters counters;
  // Records that touch at least one buffer.
  std::int64_t transfer_events = 0;
  std::int64_t peak_attention_residency = 0;
  std::int64_t active_pe_cycles = 0;
  std::int64_t mapped_pe_cycles = 0;
  std::array<std::int64_t, kNumActions> action_counts{};

  std::int64_t count(Action a) const { return action_counts[static_cast<std::size_t>(a)]; }

  static RunStats from_trace(const Trace& trace);

  friend bool operator==(const RunStats&, const RunStats&) = default;
};

}  // namespace spikesim::report
