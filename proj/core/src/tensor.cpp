#include "spikesim/tensor.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "spikesim/errors.hpp"
#include "spikesim/fixed_point.hpp"

namespace spikesim {

BitMatrix::BitMatrix(std::int64_t rows, std::int64_t cols)
    : rows_(rows), cols_(cols), bits_(static_cast<std::size_t>(rows * cols), 0) {
  if (rows < 0 || cols < 0) throw ConfigError("BitMatrix dimensions must be non-negative");
}

BitMatrix BitMatrix::from_rows(const std::vector<std::vector<int>>& rows) {
  const auto cols = rows.empty() ? 0 : static_cast<std::int64_t>(rows.front().size());
  BitMatrix m(static_cast<std::int64_t>(rows.size()), cols);
  for (std::int64_t r = 0; r < m.rows(); ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    if (static_cast<std::int64_t>(row.size()) != cols) throw ConfigError("ragged BitMatrix rows");
    for (std::int64_t c = 0; c < cols; ++c) {
      const int bit = row[static_cast<std::size_t>(c)];
      if (bit != 0 && bit != 1) throw ConfigError("BitMatrix element must be 0 or 1");
      m.set(r, c, bit == 1);
    }
  }
  return m;
}

IntMatrix::IntMatrix(std::int64_t rows, std::int64_t cols, std::int64_t fill)
    : rows_(rows), cols_(cols), values_(static_cast<std::size_t>(rows * cols), fill) {
  if (rows < 0 || cols < 0) throw ConfigError("IntMatrix dimensions must be non-negative");
}

IntMatrix IntMatrix::from_rows(const std::vector<std::vector<std::int64_t>>& rows) {
  const auto cols = rows.empty() ? 0 : static_cast<std::int64_t>(rows.front().size());
  IntMatrix m(static_cast<std::int64_t>(rows.size()), cols);
  for (std::int64_t r = 0; r < m.rows(); ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    if (static_cast<std::int64_t>(row.size()) != cols) throw ConfigError("ragged IntMatrix rows");
    std::copy(row.begin(), row.end(), &m.at(r, 0));
  }
  return m;
}

SpikeTensor::SpikeTensor(std::int64_t tokens, std::int64_t timesteps, std::int64_t features)
    : tokens_(tokens), timesteps_(timesteps), features_(features) {
  if (tokens < 1 || timesteps < 1 || features < 1) {
    throw ConfigError(fmt::format("SpikeTensor dims must be >= 1, got ({}, {}, {})",
                                  tokens, timesteps, features));
  }
  bits_.assign(static_cast<std::size_t>(size()), 0);
}

SpikeTensor::SpikeTensor(std::int64_t tokens, std::int64_t timesteps, std::int64_t features,
                         std::vector<std::uint8_t> bits)
    : SpikeTensor(tokens, timesteps, features) {
  if (static_cast<std::int64_t>(bits.size()) != size()) {
    throw ConfigError(fmt::format("SpikeTensor payload has {} elements, expected {}",
                                  bits.size(), size()));
  }
  if (std::any_of(bits.begin(), bits.end(), [](std::uint8_t b) { return b > 1; })) {
    throw ConfigError("SpikeTensor elements must be 0 or 1");
  }
  bits_ = std::move(bits);
}

BitMatrix SpikeTensor::slice(std::int64_t t, std::int64_t offset, std::int64_t width) const {
  if (t < 0 || t >= timesteps_ || offset < 0 || width < 0 || offset + width > features_) {
    throw ConfigError("SpikeTensor slice out of range");
  }
  BitMatrix m(tokens_, width);
  for (std::int64_t n = 0; n < tokens_; ++n) {
    for (std::int64_t f = 0; f < width; ++f) m.set(n, f, at(n, t, offset + f) != 0);
  }
  return m;
}

std::int64_t SpikeTensor::count_ones() const {
  return std::count(bits_.begin(), bits_.end(), std::uint8_t{1});
}

std::optional<SpikeCoord> first_mismatch(const SpikeTensor& a, const SpikeTensor& b) {
  if (a.tokens() != b.tokens() || a.timesteps() != b.timesteps() ||
      a.features() != b.features()) {
    throw ConfigError("first_mismatch: tensor shapes differ");
  }
  for (std::int64_t n = 0; n < a.tokens(); ++n) {
    for (std::int64_t t = 0; t < a.timesteps(); ++t) {
      for (std::int64_t f = 0; f < a.features(); ++f) {
        if (a.at(n, t, f) != b.at(n, t, f)) return SpikeCoord{n, t, f};
      }
    }
  }
  return std::nullopt;
}

WeightMatrix::WeightMatrix(std::int64_t in_features, std::int64_t out_features, int bits)
    : in_(in_features), out_(out_features), bits_(bits) {
  if (in_features < 1 || out_features < 1) {
    throw ConfigError(fmt::format("WeightMatrix dims must be >= 1, got ({}, {})",
                                  in_features, out_features));
  }
  if (bits < 2 || bits > 16) {
    throw ConfigError(fmt::format("weight bitwidth must be in [2, 16], got {}", bits));
  }
  values_.assign(static_cast<std::size_t>(in_ * out_), 0);
}

WeightMatrix::WeightMatrix(std::int64_t in_features, std::int64_t out_features, int bits,
                           std::vector<std::int32_t> values)
    : WeightMatrix(in_features, out_features, bits) {
  if (static_cast<std::int64_t>(values.size()) != in_ * out_) {
    throw ConfigError(fmt::format("WeightMatrix payload has {} values, expected {}",
                                  values.size(), in_ * out_));
  }
  for (const auto w : values) {
    if (!fixed::fits_signed(w, bits_)) {
      throw ConfigError(fmt::format("weight {} outside {}-bit two's complement range", w, bits_));
    }
  }
  values_ = std::move(values);
}

void WeightMatrix::set(std::int64_t j, std::int64_t i, std::int32_t w) {
  if (!fixed::fits_signed(w, bits_)) {
    throw ConfigError(fmt::format("weight {} outside {}-bit two's complement range", w, bits_));
  }
  values_[index(j, i)] = w;
}

}  // namespace spikesim
