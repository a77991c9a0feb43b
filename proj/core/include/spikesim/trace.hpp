#pragma once

// Step trace emitted by the array simulators. One record per scheduled
// action; cost-report rebuilds RunStats from a trace alone, so replaying a
// trace file reproduces the original report.
//
// CSV layout (after '#' header lines):
//   step,action,i0,i1,i2,i3,cycles,src,dst,src_words,dst_words,active_pe_cycles,mapped_pe_cycles,resident
// Tile indices are (of,n,t,if) for MLP steps and (h,t,i,j) for attention
// steps; unused indices are -1.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "spikesim/memory.hpp"
#include "spikesim/workload.hpp"

namespace spikesim {

enum class Action : std::uint8_t {
  kPreload,        // host fills a global buffer
  kLoadW,          // W GLB -> W buf
  kLoadS,          // Act GLB -> Act buf
  kCompute,        // streaming synaptic integration over one IF chunk
  kDrain,          // systolic fill/drain skew of one (of,n,t) tile
  kExtract,        // PE x registers -> spike generators
  kGenerate,       // membrane update + threshold
  kWriteThrough,   // spike generators -> Act GLB
  kInitX,          // zero the X GLB region of one (h,t)
  kLoadKV,         // Act GLB -> K/V buf
  kLoadQ,          // Act GLB -> Q buf
  kModeSwitch,     // reconfigurable array changes mode
  kMode1,          // A = Q K^T, attention stationary
  kLoadX,          // X GLB -> X buf (partial synaptic integration)
  kMode2,          // X += A V
  kExtractX,       // X buf -> X GLB
  kReadX,          // X GLB -> spike generators
  kFeed,           // local buffer -> array edge, concurrent with compute
  kCollect,        // array edge -> local buffer, concurrent with compute
};

inline constexpr std::size_t kNumActions = 19;

enum class Phase : std::uint8_t { kLoad, kCompute, kExtract, kGenerate };

std::string_view to_string(Action a);
Action parse_action(std::string_view text);
Phase phase_of(Action a);
std::string_view to_string(Phase p);

struct TraceRecord {
  std::int64_t step = 0;
  Action action = Action::kCompute;
  std::array<std::int64_t, 4> tile{-1, -1, -1, -1};
  std::int64_t cycles = 0;
  mem::Endpoint src = mem::Endpoint::kNone;
  mem::Endpoint dst = mem::Endpoint::kNone;
  std::int64_t src_words = 0;
  std::int64_t dst_words = 0;
  std::int64_t active_pe_cycles = 0;
  std::int64_t mapped_pe_cycles = 0;
  // Attention values resident in the array after this step (mode1 only).
  std::int64_t resident = 0;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct TraceHeader {
  Workload workload = Workload::kMlp;
  int rows = 0;
  int cols = 0;
  friend bool operator==(const TraceHeader&, const TraceHeader&) = default;
};

class Trace {
 public:
  Trace() = default;
  explicit Trace(TraceHeader header) : header_(header) {}

  const TraceHeader& header() const { return header_; }
  const std::vector<TraceRecord>& records() const { return records_; }

  // Assigns the next step index and appends.
  const TraceRecord& append(TraceRecord record);
  // Appends every record of `other` (renumbered). Headers must agree.
  void extend(const Trace& other);

  std::int64_t count(Action a) const;

  void write_csv(std::ostream& out) const;
  std::string to_csv() const;
  // Throws ConfigError with a line number on malformed input.
  static Trace read_csv(std::istream& in);

  friend bool operator==(const Trace&, const Trace&) = default;

 private:
  TraceHeader header_;
  std::vector<TraceRecord> records_;
};

}  // namespace spikesim
