#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace spikesim {

// Dense row-major binary matrix. Used for per-head, per-timestep Q/K/V
// slices and for spike tiles.
class BitMatrix {
 public:
  BitMatrix() = default;
  BitMatrix(std::int64_t rows, std::int64_t cols);

  std::int64_t rows() const { return rows_; }
  std::int64_t cols() const { return cols_; }

  std::uint8_t at(std::int64_t r, std::int64_t c) const { return bits_[index(r, c)]; }
  void set(std::int64_t r, std::int64_t c, bool bit) { bits_[index(r, c)] = bit ? 1 : 0; }

  static BitMatrix from_rows(const std::vector<std::vector<int>>& rows);

  friend bool operator==(const BitMatrix&, const BitMatrix&) = default;

 private:
  std::size_t index(std::int64_t r, std::int64_t c) const {
    return static_cast<std::size_t>(r * cols_ + c);
  }

  std::int64_t rows_ = 0;
  std::int64_t cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Dense row-major integer matrix (attention scores, synaptic integration).
class IntMatrix {
 public:
  IntMatrix() = default;
  IntMatrix(std::int64_t rows, std::int64_t cols, std::int64_t fill = 0);

  std::int64_t rows() const { return rows_; }
  std::int64_t cols() const { return cols_; }

  std::int64_t& at(std::int64_t r, std::int64_t c) { return values_[index(r, c)]; }
  std::int64_t at(std::int64_t r, std::int64_t c) const { return values_[index(r, c)]; }

  static IntMatrix from_rows(const std::vector<std::vector<std::int64_t>>& rows);

  friend bool operator==(const IntMatrix&, const IntMatrix&) = default;

 private:
  std::size_t index(std::int64_t r, std::int64_t c) const {
    return static_cast<std::size_t>(r * cols_ + c);
  }

  std::int64_t rows_ = 0;
  std::int64_t cols_ = 0;
  std::vector<std::int64_t> values_;
};

struct SpikeCoord {
  std::int64_t token;
  std::int64_t timestep;
  std::int64_t feature;
  friend bool operator==(const SpikeCoord&, const SpikeCoord&) = default;
};

// Binary activation tensor indexed (token, timestep, feature), stored in
// (n, t, f) order.
class SpikeTensor {
 public:
  SpikeTensor() = default;
  // All-zero tensor. Throws ConfigError unless every dimension is >= 1.
  SpikeTensor(std::int64_t tokens, std::int64_t timesteps, std::int64_t features);
  // Throws ConfigError if any element is not 0 or 1.
  SpikeTensor(std::int64_t tokens, std::int64_t timesteps, std::int64_t features,
              std::vector<std::uint8_t> bits);

  std::int64_t tokens() const { return tokens_; }
  std::int64_t timesteps() const { return timesteps_; }
  std::int64_t features() const { return features_; }
  std::int64_t size() const { return tokens_ * timesteps_ * features_; }

  std::uint8_t at(std::int64_t n, std::int64_t t, std::int64_t f) const {
    return bits_[index(n, t, f)];
  }
  void set(std::int64_t n, std::int64_t t, std::int64_t f, bool bit) {
    bits_[index(n, t, f)] = bit ? 1 : 0;
  }

  std::span<const std::uint8_t> bits() const { return bits_; }

  // [N, width] matrix of features [offset, offset + width) at timestep t.
  BitMatrix slice(std::int64_t t, std::int64_t offset, std::int64_t width) const;

  std::int64_t count_ones() const;

  friend bool operator==(const SpikeTensor&, const SpikeTensor&) = default;

 private:
  std::size_t index(std::int64_t n, std::int64_t t, std::int64_t f) const {
    return static_cast<std::size_t>((n * timesteps_ + t) * features_ + f);
  }

  std::int64_t tokens_ = 0;
  std::int64_t timesteps_ = 0;
  std::int64_t features_ = 0;
  std::vector<std::uint8_t> bits_;
};

// First (n, t, f) in iteration order where the tensors differ, or nullopt
// when equal. Shapes must match.
std::optional<SpikeCoord> first_mismatch(const SpikeTensor& a, const SpikeTensor& b);

// Signed weight matrix W[D_in][D_out]; at(j, i) is w_ji, the weight from
// input feature j to output neuron i.
class WeightMatrix {
 public:
  WeightMatrix() = default;
  // Zero matrix. Throws ConfigError on non-positive dims or bits outside [2, 16].
  WeightMatrix(std::int64_t in_features, std::int64_t out_features, int bits);
  // Throws ConfigError if any value is outside the two's complement range.
  WeightMatrix(std::int64_t in_features, std::int64_t out_features, int bits,
               std::vector<std::int32_t> values);

  std::int64_t in_features() const { return in_; }
  std::int64_t out_features() const { return out_; }
  int bits() const { return bits_; }

  std::int32_t at(std::int64_t j, std::int64_t i) const { return values_[index(j, i)]; }
  // Throws ConfigError when `w` does not fit in bits().
  void set(std::int64_t j, std::int64_t i, std::int32_t w);

  std::span<const std::int32_t> values() const { return values_; }

  friend bool operator==(const WeightMatrix&, const WeightMatrix&) = default;

 private:
  std::size_t index(std::int64_t j, std::int64_t i) const {
    return static_cast<std::size_t>(j * out_ + i);
  }

  std::int64_t in_ = 0;
  std::int64_t out_ = 0;
  int bits_ = 8;
  std::vector<std::int32_t> values_;
};

}  // namespace spikesim
