#pragma once

// Raw spike tensor files.
//
//   offset 0   "SPK1"
//   offset 4   N, T, D as little-endian uint32
//   offset 16  bit order: 0 = LSB first, 1 = MSB first within each byte
//   offset 17  ceil(N*T*D / 8) payload bytes, bits in (n, t, f) order

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "spikesim/tensor.hpp"

namespace spikesim::cli {

enum class BitOrder : std::uint8_t { kLsbFirst = 0, kMsbFirst = 1 };

void write_spikes(std::ostream& out, const SpikeTensor& s, BitOrder order = BitOrder::kLsbFirst);
// Throws ConfigError on a bad magic, bit order or truncated payload.
SpikeTensor read_spikes(std::istream& in);

void save_spikes(const std::filesystem::path& path, const SpikeTensor& s,
                 BitOrder order = BitOrder::kLsbFirst);
SpikeTensor load_spikes(const std::filesystem::path& path);

}  // namespace spikesim::cli
