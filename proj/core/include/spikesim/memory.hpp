#pragma once

// Two-tier buffer hierarchy: global buffers on the top tier, local buffers
// next to the systolic array on the bottom tier. Every transfer is counted
// at word granularity on each buffer it touches.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "spikesim/errors.hpp"

namespace spikesim::mem {

// Transfer endpoints. The first kNumBuffers entries are SRAM buffers; the
// rest are compute units or the host and are never counted.
enum class Endpoint : std::uint8_t {
  kActGlb0,
  kActGlb1,
  kWGlb,
  kXGlb,
  kActBuf,
  kWBuf,
  kQBuf,
  kKvBuf,
  kXBuf,
  kHost,
  kZeroFill,
  kPeArray,
  kSpikeGen,
  kNone,
};

inline constexpr std::size_t kNumBuffers = 9;
inline constexpr std::size_t kNumEndpoints = 14;

constexpr bool is_buffer(Endpoint e) { return static_cast<std::size_t>(e) < kNumBuffers; }
constexpr std::size_t buffer_index(Endpoint e) { return static_cast<std::size_t>(e); }
constexpr Endpoint buffer_at(std::size_t i) { return static_cast<Endpoint>(i); }

std::string_view name(Endpoint e);
// Throws ConfigError on an unknown name.
Endpoint parse_endpoint(std::string_view text);

enum class Tier { kTop, kBottom };

struct BufferSpec {
  std::int64_t depth = 0;  // words
  int word_bits = 128;
  Tier tier = Tier::kTop;

  std::int64_t capacity_bits() const { return depth * word_bits; }
  // ceil(bits / word_bits)
  std::int64_t words_for(std::int64_t bits) const;

  friend bool operator==(const BufferSpec&, const BufferSpec&) = default;
};

// Specs for every buffer, indexed by buffer_index().
struct BufferConfig {
  std::array<BufferSpec, kNumBuffers> specs;

  // 3072x128b global buffers, 96x128b activation/weight/Q/KV local buffers,
  // and an X buffer built from two 96x256b macros.
  static BufferConfig defaults();

  BufferSpec& operator[](Endpoint e) { return specs[buffer_index(e)]; }
  const BufferSpec& operator[](Endpoint e) const { return specs[buffer_index(e)]; }

  friend bool operator==(const BufferConfig&, const BufferConfig&) = default;
};

struct BufferCounters {
  std::int64_t read_words = 0;
  std::int64_t write_words = 0;
  std::int64_t read_events = 0;
  std::int64_t write_events = 0;

  std::int64_t events() const { return read_events + write_events; }
  friend bool operator==(const BufferCounters&, const BufferCounters&) = default;
};

class AccessCounters {
 public:
  BufferCounters& operator[](Endpoint e) { return counters_[buffer_index(e)]; }
  const BufferCounters& operator[](Endpoint e) const { return counters_[buffer_index(e)]; }

  void record_read(Endpoint e, std::int64_t words);
  void record_write(Endpoint e, std::int64_t words);

  std::int64_t total_events() const;

  friend bool operator==(const AccessCounters&, const AccessCounters&) = default;

 private:
  std::array<BufferCounters, kNumBuffers> counters_{};
};

class CapacityError : public Error {
 public:
  CapacityError(Endpoint buffer, std::int64_t requested_words, std::int64_t free_words);

  Endpoint buffer() const { return buffer_; }
  std::int64_t requested_words() const { return requested_; }
  std::int64_t free_words() const { return free_; }

 private:
  Endpoint buffer_;
  std::int64_t requested_;
  std::int64_t free_;
};

enum class Placement {
  kAllocate,   // destination gains new resident words
  kOverwrite,  // destination region already allocated
};

struct TransferWords {
  std::int64_t src_words = 0;
  std::int64_t dst_words = 0;
};

// Owns the counters and occupancy of one simulation run.
class MemoryHierarchy {
 public:
  explicit MemoryHierarchy(BufferConfig config = BufferConfig::defaults());

  // Moves `bits` from src to dst. Buffer endpoints are charged
  // ceil(bits / word_bits) words each and one access event. With
  // kAllocate the destination must have that many free words.
  TransferWords transfer(Endpoint src, Endpoint dst, std::int64_t bits,
                         Placement placement = Placement::kAllocate);

  // Frees resident words in a buffer (consumed or evicted data).
  void release(Endpoint buffer, std::int64_t words);

  std::int64_t occupancy(Endpoint buffer) const { return occupancy_[buffer_index(buffer)]; }
  std::int64_t free_words(Endpoint buffer) const;
  std::int64_t peak_occupancy(Endpoint buffer) const { return peak_[buffer_index(buffer)]; }

  const BufferSpec& spec(Endpoint buffer) const { return config_[buffer]; }
  const BufferConfig& config() const { return config_; }
  const AccessCounters& counters() const { return counters_; }

  // Zeroes counters and occupancy; buffer specs are kept.
  void reset();

 private:
  BufferConfig config_;
  AccessCounters counters_;
  std::array<std::int64_t, kNumBuffers> occupancy_{};
  std::array<std::int64_t, kNumBuffers> peak_{};
};

}  // namespace spikesim::mem
