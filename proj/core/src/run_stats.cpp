#include "spikesim/run_stats.hpp"

#include <algorithm>

namespace spikesim::report {

std::int64_t& PhaseCycles::operator[](Phase p) {
  switch (p) {
    case Phase::kLoad: return load;
    case Phase::kCompute: return compute;
    case Phase::kExtract: return extract;
    case Phase::kGenerate: return generate;
  }
  return compute;
}

std::int64_t PhaseCycles::operator[](Phase p) const {
  return const_cast<PhaseCycles&>(*this)[p];
}

RunStats RunStats::from_trace(const Trace& trace) {
  RunStats s;
  s.workload = trace.header().workload;
  s.rows = trace.header().rows;
  s.cols = trace.header().cols;
  for (const auto& r : trace.records()) {
    s.phases[phase_of(r.action)] += r.cycles;
    ++s.action_counts[static_cast<std::size_t>(r.action)];
    const bool src_buf = mem::is_buffer(r.src);
    const bool dst_buf = mem::is_buffer(r.dst);
    if (src_buf) s.counters.record_read(r.src, r.src_words);
    if (dst_buf) s.counters.record_write(r.dst, r.dst_words);
    if (src_buf || dst_buf) ++s.transfer_events;
    s.active_pe_cycles += r.active_pe_cycles;
    s.mapped_pe_cycles += r.mapped_pe_cycles;
    s.peak_attention_residency = std::max(s.peak_attention_residency, r.resident);
  }
  s.total_cycles = s.phases.total();
  return s;
}

}  // namespace spikesim::report
