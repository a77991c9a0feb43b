#include "spikesim/trace.hpp"

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "spikesim/errors.hpp"

namespace spikesim {
namespace {

constexpr std::array<std::string_view, kNumActions> kActionNames = {
    "preload",  "load-W",      "load-S", "compute", "drain",  "extract",
    "generate", "write-through", "init-X", "load-KV", "load-Q", "mode-switch",
    "mode1",    "load-X",      "mode2",  "extract-X", "read-X", "feed",
    "collect",
};

constexpr std::string_view kMagic = "# spikesim-trace v1";
constexpr std::string_view kColumns =
    "step,action,i0,i1,i2,i3,cycles,src,dst,src_words,dst_words,active_pe_cycles,"
    "mapped_pe_cycles,resident";

std::int64_t parse_int(std::string_view tok, int line) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
    throw ConfigError(fmt::format("trace line {}: '{}' is not an integer", line, tok));
  }
  return v;
}

}  // namespace

std::string_view to_string(Action a) { return kActionNames[static_cast<std::size_t>(a)]; }

Action parse_action(std::string_view text) {
  for (std::size_t i = 0; i < kActionNames.size(); ++i) {
    if (kActionNames[i] == text) return static_cast<Action>(i);
  }
  throw ConfigError(fmt::format("unknown trace action '{}'", text));
}

Phase phase_of(Action a) {
  switch (a) {
    case Action::kPreload:
    case Action::kLoadW:
    case Action::kLoadS:
    case Action::kInitX:
    case Action::kLoadKV:
    case Action::kLoadQ:
    case Action::kLoadX:
    case Action::kReadX:
      return Phase::kLoad;
    case Action::kCompute:
    case Action::kDrain:
    case Action::kModeSwitch:
    case Action::kMode1:
    case Action::kMode2:
    case Action::kFeed:
    case Action::kCollect:
      return Phase::kCompute;
    case Action::kExtract:
    case Action::kExtractX:
      return Phase::kExtract;
    case Action::kGenerate:
    case Action::kWriteThrough:
      return Phase::kGenerate;
  }
  return Phase::kCompute;
}

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::kLoad: return "load";
    case Phase::kCompute: return "compute";
    case Phase::kExtract: return "extract";
    case Phase::kGenerate: return "generate";
  }
  return "?";
}

const TraceRecord& Trace::append(TraceRecord record) {
  record.step = static_cast<std::int64_t>(records_.size());
  records_.push_back(record);
  return records_.back();
}

void Trace::extend(const Trace& other) {
  if (!(other.header_ == header_)) throw InternalError("cannot join traces with different headers");
  for (const auto& r : other.records_) append(r);
}

std::int64_t Trace::count(Action a) const {
  std::int64_t n = 0;
  for (const auto& r : records_) n += r.action == a ? 1 : 0;
  return n;
}

void Trace::write_csv(std::ostream& out) const {
  fmt::print(out, "{}\n# workload={}\n# array={}x{}\n{}\n", kMagic, to_string(header_.workload),
             header_.rows, header_.cols, kColumns);
  for (const auto& r : records_) {
    fmt::print(out, "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.step, to_string(r.action),
               r.tile[0], r.tile[1], r.tile[2], r.tile[3], r.cycles, mem::name(r.src),
               mem::name(r.dst), r.src_words, r.dst_words, r.active_pe_cycles,
               r.mapped_pe_cycles, r.resident);
  }
}

std::string Trace::to_csv() const {
  std::ostringstream out;
  write_csv(out);
  return out.str();
}

Trace Trace::read_csv(std::istream& in) {
  std::string line;
  int lineno = 0;
  bool saw_magic = false;
  bool saw_columns = false;
  bool saw_workload = false;
  bool saw_array = false;
  TraceHeader header;
  std::vector<TraceRecord> records;

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line == kMagic) {
        saw_magic = true;
      } else if (line.rfind("# workload=", 0) == 0) {
        header.workload = parse_workload(line.substr(11));
        saw_workload = true;
      } else if (line.rfind("# array=", 0) == 0) {
        if (std::sscanf(line.c_str() + 8, "%dx%d", &header.rows, &header.cols) != 2) {
          throw ConfigError(fmt::format("trace line {}: bad array size", lineno));
        }
        saw_array = true;
      }
      continue;
    }
    if (line == kColumns) {
      saw_columns = true;
      continue;
    }
    if (!saw_columns) throw ConfigError(fmt::format("trace line {}: missing column header", lineno));

    std::vector<std::string_view> f;
    std::string_view rest = line;
    while (true) {
      const auto comma = rest.find(',');
      f.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (f.size() != 14) {
      throw ConfigError(fmt::format("trace line {}: expected 14 fields, got {}", lineno, f.size()));
    }
    TraceRecord r;
    try {
      r.step = parse_int(f[0], lineno);
      r.action = parse_action(f[1]);
      for (std::size_t i = 0; i < 4; ++i) r.tile[i] = parse_int(f[2 + i], lineno);
      r.cycles = parse_int(f[6], lineno);
      r.src = mem::parse_endpoint(f[7]);
      r.dst = mem::parse_endpoint(f[8]);
      r.src_words = parse_int(f[9], lineno);
      r.dst_words = parse_int(f[10], lineno);
      r.active_pe_cycles = parse_int(f[11], lineno);
      r.mapped_pe_cycles = parse_int(f[12], lineno);
      r.resident = parse_int(f[13], lineno);
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      if (msg.rfind("trace line", 0) == 0) throw;
      throw ConfigError(fmt::format("trace line {}: {}", lineno, msg));
    }
    if (r.step != static_cast<std::int64_t>(records.size())) {
      throw ConfigError(fmt::format("trace line {}: step {} out of sequence", lineno, r.step));
    }
    records.push_back(r);
  }
  if (!saw_magic || !saw_workload || !saw_array || !saw_columns) {
    throw ConfigError("trace is missing its header lines");
  }
  Trace trace(header);
  trace.records_ = std::move(records);
  return trace;
}

}  // namespace spikesim
