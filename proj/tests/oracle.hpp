#pragma once

// Brute-force reference evaluators, written without the library's
// accumulation helpers: plain dense products in int64 followed by a scalar
// LIF loop. Callers pick widths wide enough that nothing overflows.

#include <cstdint>
#include <vector>

#include "spikesim/tensor.hpp"

namespace oracle {

using spikesim::BitMatrix;
using spikesim::IntMatrix;
using spikesim::SpikeTensor;
using spikesim::WeightMatrix;

struct Lif {
  std::int64_t v_th;
  std::int64_t v_leak;
};

inline bool step(std::int64_t& v, std::int64_t x, Lif p) {
  v = v + x - p.v_leak;
  if (v > p.v_th) {
    v = 0;
    return true;
  }
  return false;
}

inline SpikeTensor mlp(const SpikeTensor& s, const WeightMatrix& w, Lif p) {
  const auto N = s.tokens(), T = s.timesteps(), I = w.in_features(), O = w.out_features();
  SpikeTensor out(N, T, O);
  for (std::int64_t n = 0; n < N; ++n) {
    std::vector<std::int64_t> v(static_cast<std::size_t>(O), 0);
    for (std::int64_t t = 0; t < T; ++t) {
      for (std::int64_t o = 0; o < O; ++o) {
        std::int64_t x = 0;
        for (std::int64_t i = 0; i < I; ++i) x += std::int64_t{s.at(n, t, i)} * w.at(i, o);
        out.set(n, t, o, step(v[static_cast<std::size_t>(o)], x, p));
      }
    }
  }
  return out;
}

inline IntMatrix scores(const BitMatrix& q, const BitMatrix& k) {
  IntMatrix a(q.rows(), k.rows());
  for (std::int64_t i = 0; i < q.rows(); ++i)
    for (std::int64_t j = 0; j < k.rows(); ++j)
      for (std::int64_t f = 0; f < q.cols(); ++f) a.at(i, j) += q.at(i, f) * k.at(j, f);
  return a;
}

inline IntMatrix weighted(const IntMatrix& a, const BitMatrix& v) {
  IntMatrix x(a.rows(), v.cols());
  for (std::int64_t i = 0; i < a.rows(); ++i)
    for (std::int64_t f = 0; f < v.cols(); ++f)
      for (std::int64_t j = 0; j < a.cols(); ++j) x.at(i, f) += a.at(i, j) * v.at(j, f);
  return x;
}

// Unfused: the whole attention map per (head, timestep), then A V.
inline SpikeTensor attention(const SpikeTensor& q, const SpikeTensor& k, const SpikeTensor& v,
                             std::int64_t heads, std::int64_t d, Lif p) {
  const auto N = q.tokens(), T = q.timesteps();
  SpikeTensor out(N, T, heads * d);
  for (std::int64_t h = 0; h < heads; ++h) {
    std::vector<std::int64_t> mem(static_cast<std::size_t>(N * d), 0);
    for (std::int64_t t = 0; t < T; ++t) {
      const auto x = weighted(scores(q.slice(t, h * d, d), k.slice(t, h * d, d)),
                              v.slice(t, h * d, d));
      for (std::int64_t n = 0; n < N; ++n)
        for (std::int64_t f = 0; f < d; ++f)
          out.set(n, t, h * d + f, step(mem[static_cast<std::size_t>(n * d + f)], x.at(n, f), p));
    }
  }
  return out;
}

}  // namespace oracle
