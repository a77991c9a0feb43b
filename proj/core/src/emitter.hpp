#pragma once

#include <algorithm>
#include <array>
#include <cstdint>

#include "spikesim/memory.hpp"
#include "spikesim/trace.hpp"

namespace spikesim::detail {

// Performs transfers on the hierarchy and appends the matching records.
// A transfer costs one cycle per word on its wider side. With prefetch on,
// load-phase transfers are hidden behind the compute budget left over from
// the previous tile.
class Emitter {
 public:
  Emitter(Trace& trace, mem::MemoryHierarchy& mem, bool prefetch)
      : trace_(trace), mem_(mem), prefetch_(prefetch) {}

  mem::TransferWords transfer(Action action, std::array<std::int64_t, 4> tile, mem::Endpoint src,
                              mem::Endpoint dst, std::int64_t bits,
                              mem::Placement placement = mem::Placement::kAllocate,
                              bool timed = true) {
    const auto words = mem_.transfer(src, dst, bits, placement);
    std::int64_t cycles = timed ? std::max(words.src_words, words.dst_words) : 0;
    if (prefetch_ && phase_of(action) == Phase::kLoad) {
      const auto hidden = std::min(budget_, cycles);
      budget_ -= hidden;
      cycles -= hidden;
    }
    TraceRecord r;
    r.action = action;
    r.tile = tile;
    r.cycles = cycles;
    r.src = src;
    r.dst = dst;
    r.src_words = words.src_words;
    r.dst_words = words.dst_words;
    trace_.append(r);
    return words;
  }

  void step(Action action, std::array<std::int64_t, 4> tile, std::int64_t cycles,
            mem::Endpoint src = mem::Endpoint::kNone, mem::Endpoint dst = mem::Endpoint::kNone,
            std::int64_t active = 0, std::int64_t mapped = 0, std::int64_t resident = 0) {
    TraceRecord r;
    r.action = action;
    r.tile = tile;
    r.cycles = cycles;
    r.src = src;
    r.dst = dst;
    r.active_pe_cycles = active;
    r.mapped_pe_cycles = mapped;
    r.resident = resident;
    trace_.append(r);
  }

  // Compute cycles of the tile just finished become the prefetch window for
  // the next tile's loads.
  void set_prefetch_budget(std::int64_t cycles) { budget_ = prefetch_ ? cycles : 0; }

  mem::MemoryHierarchy& mem() { return mem_; }

 private:
  Trace& trace_;
  mem::MemoryHierarchy& mem_;
  bool prefetch_;
  std::int64_t budget_ = 0;
};

}  // namespace spikesim::detail
