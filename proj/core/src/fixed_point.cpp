#include "spikesim/fixed_point.hpp"

#include <fmt/format.h>

namespace spikesim {

BitwidthError::BitwidthError(std::string quantity, std::int64_t value,
                             int bits, bool is_signed, Coordinates where)
    : Error([&] {
        std::string msg =
            fmt::format("bitwidth violation: {} = {} does not fit in {} {} bits",
                        quantity, value, bits, is_signed ? "signed" : "unsigned");
        if (!where.empty()) {
          msg += " at";
          for (const auto& [name, index] : where) {
            msg += fmt::format(" {}={}", name, index);
          }
        }
        return msg;
      }()),
      quantity_(std::move(quantity)),
      value_(value),
      bits_(bits),
      signed_(is_signed),
      where_(std::move(where)) {}

std::int64_t BitwidthError::coordinate(const std::string& name) const {
  for (const auto& [key, index] : where_) {
    if (key == name) return index;
  }
  return -1;
}

std::string_view to_string(OverflowMode mode) {
  return mode == OverflowMode::kStrict ? "strict" : "saturate";
}

OverflowMode parse_overflow_mode(std::string_view text) {
  if (text == "strict") return OverflowMode::kStrict;
  if (text == "saturate") return OverflowMode::kSaturate;
  throw ConfigError(fmt::format("unknown overflow mode '{}' (expected strict|saturate)", text));
}

void QuantSpec::validate() const {
  if (weight_bits < 2 || weight_bits > 16) {
    throw ConfigError(fmt::format("weight_bits must be in [2, 16], got {}", weight_bits));
  }
  if (attention_bits < 1 || attention_bits > fixed::kMaxBits) {
    throw ConfigError(fmt::format("attention_bits must be >= 1, got {}", attention_bits));
  }
  if (integration_bits < attention_bits || integration_bits > fixed::kMaxBits) {
    throw ConfigError(fmt::format(
        "integration_bits must be in [attention_bits={}, {}], got {}",
        attention_bits, fixed::kMaxBits, integration_bits));
  }
}

}  // namespace spikesim
