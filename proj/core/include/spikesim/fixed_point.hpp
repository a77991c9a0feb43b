#pragma once

#include <algorithm>
#include <cstdint>
#include <string_view>

#include "spikesim/errors.hpp"

namespace spikesim {

enum class OverflowMode { kStrict, kSaturate };

std::string_view to_string(OverflowMode mode);
OverflowMode parse_overflow_mode(std::string_view text);

// Register widths for one layer.
//
// weight_bits:       signed two's complement synaptic weights.
// integration_bits:  signed synaptic integration X and membrane V.
// attention_bits:    unsigned attention scores A (attention layers only).
struct QuantSpec {
  int weight_bits = 8;
  int integration_bits = 16;
  int attention_bits = 5;
  OverflowMode overflow = OverflowMode::kStrict;

  // Throws ConfigError when widths are outside the supported ranges.
  void validate() const;

  friend bool operator==(const QuantSpec&, const QuantSpec&) = default;
};

namespace fixed {

inline constexpr int kMaxBits = 62;

constexpr std::int64_t signed_min(int bits) {
  return bits <= 0 ? 0 : -(std::int64_t{1} << (bits - 1));
}
constexpr std::int64_t signed_max(int bits) {
  return bits <= 0 ? -1 : (std::int64_t{1} << (bits - 1)) - 1;
}
constexpr std::int64_t unsigned_max(int bits) {
  return bits <= 0 ? 0 : (std::int64_t{1} << bits) - 1;
}

constexpr bool fits_signed(std::int64_t v, int bits) {
  return v >= signed_min(bits) && v <= signed_max(bits);
}
constexpr bool fits_unsigned(std::int64_t v, int bits) {
  return v >= 0 && v <= unsigned_max(bits);
}

// Range-checks `v` against a signed register. In strict mode an
// out-of-range value throws BitwidthError built from `where()`; in
// saturate mode it clamps. `where` is only invoked on overflow.
template <typename WhereFn>
std::int64_t constrain_signed(std::int64_t v, int bits, OverflowMode mode,
                              std::string_view quantity, WhereFn&& where) {
  if (fits_signed(v, bits)) return v;
  if (mode == OverflowMode::kSaturate) {
    return std::clamp(v, signed_min(bits), signed_max(bits));
  }
  throw BitwidthError(std::string(quantity), v, bits, true, where());
}

template <typename WhereFn>
std::int64_t constrain_unsigned(std::int64_t v, int bits, OverflowMode mode,
                                std::string_view quantity, WhereFn&& where) {
  if (fits_unsigned(v, bits)) return v;
  if (mode == OverflowMode::kSaturate) {
    return std::clamp<std::int64_t>(v, 0, unsigned_max(bits));
  }
  throw BitwidthError(std::string(quantity), v, bits, false, where());
}

// ceil(log2(v)) for v >= 1.
constexpr int ceil_log2(std::int64_t v) {
  int bits = 0;
  while ((std::int64_t{1} << bits) < v) ++bits;
  return bits;
}

constexpr bool is_power_of_two(std::int64_t v) {
  return v > 0 && (v & (v - 1)) == 0;
}

constexpr std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
  return (a + b - 1) / b;
}

}  // namespace fixed
}  // namespace spikesim
