#include "spikesim/memory.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "spikesim/fixed_point.hpp"

namespace spikesim::mem {
namespace {

constexpr std::array<std::string_view, kNumEndpoints> kNames = {
    "act_glb0", "act_glb1", "w_glb",    "x_glb",    "act_buf",   "w_buf", "q_buf",
    "kv_buf",   "x_buf",    "host",     "zero",     "pe_array", "spike_gen", "-",
};

}  // namespace

std::string_view name(Endpoint e) { return kNames[static_cast<std::size_t>(e)]; }

Endpoint parse_endpoint(std::string_view text) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == text) return static_cast<Endpoint>(i);
  }
  throw ConfigError(fmt::format("unknown buffer or endpoint '{}'", text));
}

std::int64_t BufferSpec::words_for(std::int64_t bits) const {
  return fixed::ceil_div(bits, word_bits);
}

BufferConfig BufferConfig::defaults() {
  BufferConfig c;
  const BufferSpec glb{3072, 128, Tier::kTop};
  const BufferSpec local{96, 128, Tier::kBottom};
  c[Endpoint::kActGlb0] = glb;
  c[Endpoint::kActGlb1] = glb;
  c[Endpoint::kWGlb] = glb;
  c[Endpoint::kXGlb] = glb;
  c[Endpoint::kActBuf] = local;
  c[Endpoint::kWBuf] = local;
  c[Endpoint::kQBuf] = local;
  c[Endpoint::kKvBuf] = local;
  c[Endpoint::kXBuf] = BufferSpec{192, 256, Tier::kBottom};
  return c;
}

void AccessCounters::record_read(Endpoint e, std::int64_t words) {
  auto& c = (*this)[e];
  c.read_words += words;
  ++c.read_events;
}

void AccessCounters::record_write(Endpoint e, std::int64_t words) {
  auto& c = (*this)[e];
  c.write_words += words;
  ++c.write_events;
}

std::int64_t AccessCounters::total_events() const {
  std::int64_t total = 0;
  for (const auto& c : counters_) total += c.events();
  return total;
}

CapacityError::CapacityError(Endpoint buffer, std::int64_t requested_words,
                             std::int64_t free_words)
    : Error(fmt::format("capacity exceeded: {} requested {} words but only {} are free",
                        name(buffer), requested_words, free_words)),
      buffer_(buffer),
      requested_(requested_words),
      free_(free_words) {}

MemoryHierarchy::MemoryHierarchy(BufferConfig config) : config_(config) {
  for (const auto& spec : config_.specs) {
    if (spec.depth < 1 || spec.word_bits < 1) {
      throw ConfigError("buffer depth and word width must be >= 1");
    }
  }
}

TransferWords MemoryHierarchy::transfer(Endpoint src, Endpoint dst, std::int64_t bits,
                                        Placement placement) {
  if (bits < 0) throw InternalError("negative transfer size");
  TransferWords words;
  if (is_buffer(dst)) {
    words.dst_words = spec(dst).words_for(bits);
    if (placement == Placement::kAllocate) {
      if (words.dst_words > free_words(dst)) {
        throw CapacityError(dst, words.dst_words, free_words(dst));
      }
      auto& occ = occupancy_[buffer_index(dst)];
      occ += words.dst_words;
      peak_[buffer_index(dst)] = std::max(peak_[buffer_index(dst)], occ);
    } else if (words.dst_words > spec(dst).depth) {
      throw CapacityError(dst, words.dst_words, spec(dst).depth);
    }
  }
  if (is_buffer(src)) {
    words.src_words = spec(src).words_for(bits);
    counters_.record_read(src, words.src_words);
  }
  if (is_buffer(dst)) counters_.record_write(dst, words.dst_words);
  return words;
}

void MemoryHierarchy::release(Endpoint buffer, std::int64_t words) {
  auto& occ = occupancy_[buffer_index(buffer)];
  if (words > occ) {
    throw InternalError(fmt::format("releasing {} words from {} which holds {}", words,
                                    name(buffer), occ));
  }
  occ -= words;
}

std::int64_t MemoryHierarchy::free_words(Endpoint buffer) const {
  return spec(buffer).depth - occupancy(buffer);
}

void MemoryHierarchy::reset() {
  counters_ = AccessCounters{};
  occupancy_.fill(0);
  peak_.fill(0);
}

}  // namespace spikesim::mem
