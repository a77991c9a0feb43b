#include "spike_io.hpp"

#include <array>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

#include <fmt/format.h>

#include "spikesim/errors.hpp"

namespace spikesim::cli {

namespace {

constexpr std::array<char, 4> kMagic{'S', 'P', 'K', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(std::istream& in) {
  std::array<unsigned char, 4> b{};
  in.read(reinterpret_cast<char*>(b.data()), 4);
  if (!in) throw ConfigError("spike file: truncated header");
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

int bit_shift(std::size_t index, BitOrder order) {
  const int i = static_cast<int>(index % 8);
  return order == BitOrder::kLsbFirst ? i : 7 - i;
}

}  // namespace

void write_spikes(std::ostream& out, const SpikeTensor& s, BitOrder order) {
  for (const auto dim : {s.tokens(), s.timesteps(), s.features()}) {
    if (dim > 0xffffffffLL) throw ConfigError("spike file: dimension exceeds 32 bits");
  }
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, static_cast<std::uint32_t>(s.tokens()));
  put_u32(out, static_cast<std::uint32_t>(s.timesteps()));
  put_u32(out, static_cast<std::uint32_t>(s.features()));
  out.put(static_cast<char>(order));
  const auto bits = s.bits();
  std::vector<unsigned char> payload((bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != 0) payload[i / 8] |= static_cast<unsigned char>(1u << bit_shift(i, order));
  }
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
}

SpikeTensor read_spikes(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw ConfigError("spike file: bad magic (expected SPK1)");
  const std::int64_t n = get_u32(in);
  const std::int64_t t = get_u32(in);
  const std::int64_t d = get_u32(in);
  const int order_byte = in.get();
  if (order_byte != 0 && order_byte != 1) {
    throw ConfigError(fmt::format("spike file: unknown bit order {}", order_byte));
  }
  const auto order = static_cast<BitOrder>(order_byte);
  const auto count = static_cast<std::size_t>(n * t * d);
  std::vector<unsigned char> payload((count + 7) / 8);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (static_cast<std::size_t>(in.gcount()) != payload.size()) {
    throw ConfigError(fmt::format("spike file: payload truncated ({} of {} bytes)", in.gcount(),
                                  payload.size()));
  }
  std::vector<std::uint8_t> bits(count);
  for (std::size_t i = 0; i < count; ++i) bits[i] = (payload[i / 8] >> bit_shift(i, order)) & 1u;
  return SpikeTensor(n, t, d, std::move(bits));
}

void save_spikes(const std::filesystem::path& path, const SpikeTensor& s, BitOrder order) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(fmt::format("cannot write '{}'", path.string()));
  write_spikes(out, s, order);
}

SpikeTensor load_spikes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot open spike file '{}'", path.string()));
  try {
    return read_spikes(in);
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace spikesim::cli
