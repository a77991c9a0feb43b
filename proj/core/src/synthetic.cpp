#include "spikesim/synthetic.hpp"

#include <fmt/format.h>

#include "spikesim/errors.hpp"
#include "spikesim/fixed_point.hpp"

namespace spikesim::synthetic {

double unit(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::int64_t uniform(Rng& rng, std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw ConfigError(fmt::format("empty range [{}, {}]", lo, hi));
  const auto range = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<std::int64_t>(rng() % range);
}

SpikeTensor random_spikes(Rng& rng, std::int64_t tokens, std::int64_t timesteps,
                          std::int64_t features, double rate) {
  if (!(rate >= 0.0 && rate <= 1.0)) {
    throw ConfigError(fmt::format("spike rate must lie in [0, 1], got {}", rate));
  }
  SpikeTensor s(tokens, timesteps, features);
  for (std::int64_t n = 0; n < tokens; ++n) {
    for (std::int64_t t = 0; t < timesteps; ++t) {
      for (std::int64_t f = 0; f < features; ++f) s.set(n, t, f, unit(rng) < rate);
    }
  }
  return s;
}

WeightMatrix random_weights(Rng& rng, std::int64_t in_features, std::int64_t out_features,
                            int bits) {
  WeightMatrix w(in_features, out_features, bits);
  const auto lo = fixed::signed_min(bits);
  const auto hi = fixed::signed_max(bits);
  for (std::int64_t j = 0; j < in_features; ++j) {
    for (std::int64_t i = 0; i < out_features; ++i) {
      w.set(j, i, static_cast<std::int32_t>(uniform(rng, lo, hi)));
    }
  }
  return w;
}

}  // namespace spikesim::synthetic
