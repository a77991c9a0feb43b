#pragma once

// Seeded synthetic inputs. Draws use the raw mt19937_64 output only, so a
// seed gives the same tensors on every platform and standard library.

#include <cstdint>
#include <random>

#include "spikesim/tensor.hpp"

namespace spikesim::synthetic {

using Rng = std::mt19937_64;

// Uniform double in [0, 1) from the top 53 bits of one draw.
double unit(Rng& rng);

// Bernoulli spikes with probability `rate`, filled in (n, t, f) order.
SpikeTensor random_spikes(Rng& rng, std::int64_t tokens, std::int64_t timesteps,
                          std::int64_t features, double rate = 0.5);

// Uniform signed weights over the full `bits` range, filled in (j, i) order.
WeightMatrix random_weights(Rng& rng, std::int64_t in_features, std::int64_t out_features,
                            int bits);

// Uniform integer in [lo, hi].
std::int64_t uniform(Rng& rng, std::int64_t lo, std::int64_t hi);

}  // namespace spikesim::synthetic
