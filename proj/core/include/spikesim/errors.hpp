#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace spikesim {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters, malformed files, unknown keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A simulator invariant did not hold. Always a bug, never an input problem.
class InternalError : public Error {
 public:
  using Error::Error;
};

// Named coordinates of the value that left its register range, e.g.
// {{"n", 1}, {"t", 0}, {"neuron", 3}}.
using Coordinates = std::vector<std::pair<std::string, std::int64_t>>;

// A value did not fit in its declared register width under strict overflow.
class BitwidthError : public Error {
 public:
  BitwidthError(std::string quantity, std::int64_t value, int bits,
                bool is_signed, Coordinates where);

  const std::string& quantity() const { return quantity_; }
  std::int64_t value() const { return value_; }
  int bits() const { return bits_; }
  bool is_signed() const { return signed_; }
  const Coordinates& where() const { return where_; }

  // Value of a named coordinate, or -1 when absent.
  std::int64_t coordinate(const std::string& name) const;

 private:
  std::string quantity_;
  std::int64_t value_;
  int bits_;
  bool signed_;
  Coordinates where_;
};

}  // namespace spikesim
