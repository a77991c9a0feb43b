#include "spikesim/attn_array.hpp"

#include <algorithm>
#include <array>
#include <utility>

#include <fmt/format.h>

#include "emitter.hpp"

namespace spikesim::attn {

using mem::Endpoint;
using fixed::ceil_div;

std::string_view to_string(AttnMode m) {
  return m == AttnMode::kMode1QK ? "mode1-qk" : "mode2-av";
}

ReconfigurableArray::ReconfigurableArray(int rows, int cols)
    : rows_(rows), cols_(cols), pes_(static_cast<std::size_t>(rows * cols)) {
  if (rows < 1 || cols < 1) throw ConfigError("R-PE array must be at least 1x1");
}

void ReconfigurableArray::reset() {
  std::fill(pes_.begin(), pes_.end(), RpeState{});
  mode_ = AttnMode::kMode1QK;
  resident_q_ = 0;
  resident_k_ = 0;
}

std::int64_t ReconfigurableArray::switch_mode(AttnMode to) {
  if (to == mode_) return 0;
  mode_ = to;
  return 1;
}

namespace {

Coordinates with(Coordinates base, std::initializer_list<std::pair<std::string, std::int64_t>> more) {
  base.insert(base.end(), more.begin(), more.end());
  return base;
}

}  // namespace

std::int64_t ReconfigurableArray::mode1(const BitMatrix& q, const BitMatrix& k,
                                        const QuantSpec& quant, const Coordinates& where) {
  if (mode_ != AttnMode::kMode1QK) throw InternalError("mode1 pass issued in Mode 2");
  const auto nq = q.rows();
  const auto nk = k.rows();
  const auto d = q.cols();
  if (nq > rows_ || nk > cols_ || k.cols() != d || nq < 1 || nk < 1) {
    throw InternalError(fmt::format("mode1 tile {}x{} (d={}) does not fit a {}x{} array", nq, nk,
                                    d, rows_, cols_));
  }
  for (auto& pe : pes_) {
    pe.a_reg = 0;
    pe.q_valid = pe.kv_valid = false;
  }
  resident_q_ = nq;
  resident_k_ = nk;

  std::int64_t last_active = -1;
  for (std::int64_t cycle = 0;; ++cycle) {
    for (int r = 0; r < rows_; ++r) {
      for (int c = cols_ - 1; c > 0; --c) {
        auto& dst = pes_[index(r, c)];
        const auto& src = pes_[index(r, c - 1)];
        dst.q_reg = src.q_reg;
        dst.q_valid = src.q_valid;
        dst.q_tag = src.q_tag;
      }
      auto& edge = pes_[index(r, 0)];
      const auto f = cycle - r;
      edge.q_valid = r < nq && f >= 0 && f < d;
      edge.q_tag = edge.q_valid ? f : -1;
      edge.q_reg = edge.q_valid ? q.at(r, f) : 0;
    }
    for (int c = 0; c < cols_; ++c) {
      for (int r = rows_ - 1; r > 0; --r) {
        auto& dst = pes_[index(r, c)];
        const auto& src = pes_[index(r - 1, c)];
        dst.kv_reg = src.kv_reg;
        dst.kv_valid = src.kv_valid;
        dst.kv_tag = src.kv_tag;
      }
      auto& edge = pes_[index(0, c)];
      const auto f = cycle - c;
      edge.kv_valid = c < nk && f >= 0 && f < d;
      edge.kv_tag = edge.kv_valid ? f : -1;
      edge.kv_reg = edge.kv_valid ? k.at(c, f) : 0;
    }

    bool in_flight = false;
    for (int r = 0; r < rows_; ++r) {
      for (int c = 0; c < cols_; ++c) {
        auto& pe = pes_[index(r, c)];
        in_flight |= pe.q_valid || pe.kv_valid;
        if (!pe.q_valid || !pe.kv_valid) continue;
        if (pe.q_tag != pe.kv_tag) {
          throw InternalError(fmt::format("R-PE ({}, {}) saw query bit {} with key bit {}", r, c,
                                          pe.q_tag, pe.kv_tag));
        }
        last_active = cycle;
        pe.a_reg = fixed::constrain_unsigned(pe.a_reg + (pe.q_reg & pe.kv_reg),
                                             quant.attention_bits, quant.overflow,
                                             "attention score", [&] {
                                               return with(where, {{"query", r}, {"key", c}});
                                             });
      }
    }
    if (!in_flight && cycle >= d + rows_ + cols_) break;
  }
  return last_active + 1;
}

std::int64_t ReconfigurableArray::mode2(const BitMatrix& v, IntMatrix& x, const QuantSpec& quant,
                                        const Coordinates& where) {
  if (mode_ != AttnMode::kMode2AV) throw InternalError("mode2 pass issued in Mode 1");
  const auto nq = x.rows();
  const auto nk = v.rows();
  const auto d = v.cols();
  if (nq != resident_q_ || nk != resident_k_ || x.cols() != d) {
    throw InternalError(fmt::format(
        "mode2 tile {}x{} (d={}) does not match the resident {}x{} attention tile", nq, nk, d,
        resident_q_, resident_k_));
  }
  for (auto& pe : pes_) pe.kv_valid = pe.x_valid = false;

  std::int64_t last_active = -1;
  std::int64_t collected = 0;
  for (std::int64_t cycle = 0;; ++cycle) {
    // X partials move right; each row's partial for feature f enters at f + r.
    for (int r = 0; r < rows_; ++r) {
      for (int c = cols_ - 1; c > 0; --c) {
        auto& dst = pes_[index(r, c)];
        const auto& src = pes_[index(r, c - 1)];
        dst.x_reg = src.x_reg;
        dst.x_valid = src.x_valid;
        dst.x_tag = src.x_tag;
      }
      auto& edge = pes_[index(r, 0)];
      const auto f = cycle - r;
      edge.x_valid = r < nq && f >= 0 && f < d;
      edge.x_tag = edge.x_valid ? f : -1;
      edge.x_reg = edge.x_valid ? x.at(r, f) : 0;
    }
    for (int c = 0; c < cols_; ++c) {
      for (int r = rows_ - 1; r > 0; --r) {
        auto& dst = pes_[index(r, c)];
        const auto& src = pes_[index(r - 1, c)];
        dst.kv_reg = src.kv_reg;
        dst.kv_valid = src.kv_valid;
        dst.kv_tag = src.kv_tag;
      }
      auto& edge = pes_[index(0, c)];
      const auto f = cycle - c;
      edge.kv_valid = c < nk && f >= 0 && f < d;
      edge.kv_tag = edge.kv_valid ? f : -1;
      edge.kv_reg = edge.kv_valid ? v.at(c, f) : 0;
    }

    bool in_flight = false;
    for (int r = 0; r < rows_; ++r) {
      for (int c = 0; c < cols_; ++c) {
        auto& pe = pes_[index(r, c)];
        in_flight |= pe.kv_valid || (pe.x_valid && c < nk);
        if (!pe.x_valid || !pe.kv_valid) continue;
        if (pe.x_tag != pe.kv_tag) {
          throw InternalError(fmt::format("R-PE ({}, {}) saw partial {} with value bit {}", r, c,
                                          pe.x_tag, pe.kv_tag));
        }
        last_active = cycle;
        if (pe.kv_reg != 0) {
          pe.x_reg = fixed::constrain_signed(
              pe.x_reg + pe.a_reg, quant.integration_bits, quant.overflow,
              "synaptic integration",
              [&] { return with(where, {{"query", r}, {"key", c}, {"feature", pe.x_tag}}); });
        }
      }
    }
    // Partials leave the footprint's right boundary.
    for (int r = 0; r < nq; ++r) {
      const auto& pe = pes_[index(r, static_cast<int>(nk - 1))];
      if (!pe.x_valid) continue;
      x.at(r, pe.x_tag) = pe.x_reg;
      ++collected;
    }
    if (!in_flight && cycle >= d + rows_ + cols_) break;
  }
  if (collected != nq * d) throw InternalError("mode2 lost partials in flight");
  return last_active + 1;
}

IntMatrix ReconfigurableArray::attention() const {
  IntMatrix a(resident_q_, resident_k_);
  for (std::int64_t r = 0; r < resident_q_; ++r) {
    for (std::int64_t c = 0; c < resident_k_; ++c) {
      a.at(r, c) = pes_[index(static_cast<int>(r), static_cast<int>(c))].a_reg;
    }
  }
  return a;
}

TileResultMode1 mode1_compute(const BitMatrix& q_tile, const BitMatrix& k_tile,
                              ReconfigurableArray& grid, const QuantSpec& quant) {
  grid.reset();
  const auto cycles = grid.mode1(q_tile, k_tile, quant);
  return {grid.attention(), cycles};
}

TileResultMode2 mode2_compute(const BitMatrix& v_tile, const IntMatrix& x_partial,
                              ReconfigurableArray& grid, const QuantSpec& quant) {
  grid.switch_mode(AttnMode::kMode2AV);
  IntMatrix x = x_partial;
  const auto cycles = grid.mode2(v_tile, x, quant);
  return {std::move(x), cycles};
}

std::int64_t TileScheduleAttn::count(Action a) const {
  return std::count_if(steps.begin(), steps.end(), [a](const AttnStep& s) { return s.action == a; });
}

TileScheduleAttn schedule_attention(const HeadShape& shape, const ArrayConfig& array,
                                    std::int64_t nq_tile, std::int64_t nk_tile, bool resident_x) {
  shape.validate();
  array.validate();
  if (nq_tile < 1 || nk_tile < 1) {
    throw ConfigError(fmt::format("attention tiles must be >= 1, got q={} k={}", nq_tile, nk_tile));
  }
  if (nq_tile > array.rows || nk_tile > array.cols) {
    throw ConfigError(fmt::format("attention tile {}x{} exceeds the {}x{} array", nq_tile, nk_tile,
                                  array.rows, array.cols));
  }
  TileScheduleAttn s;
  s.shape = shape;
  s.array = array;
  s.q_tile = std::min(nq_tile, shape.tokens);
  s.k_tile = std::min(nk_tile, shape.tokens);
  s.tiles_q = ceil_div(shape.tokens, s.q_tile);
  s.tiles_k = ceil_div(shape.tokens, s.k_tile);
  s.resident_x = resident_x;

  for (std::int64_t h = 0; h < shape.heads; ++h) {
    for (std::int64_t t = 0; t < shape.timesteps; ++t) {
      s.steps.push_back({Action::kInitX, h, t, -1, -1});
      for (std::int64_t i = 0; i < s.tiles_k; ++i) {
        s.steps.push_back({Action::kLoadKV, h, t, i, -1});
        for (std::int64_t j = 0; j < s.tiles_q; ++j) {
          s.steps.push_back({Action::kLoadQ, h, t, i, j});
          s.steps.push_back({Action::kMode1, h, t, i, j});
          if (!resident_x) s.steps.push_back({Action::kLoadX, h, t, i, j});
          s.steps.push_back({Action::kModeSwitch, h, t, i, j});
          s.steps.push_back({Action::kMode2, h, t, i, j});
          if (!resident_x) s.steps.push_back({Action::kExtractX, h, t, i, j});
          s.steps.push_back({Action::kModeSwitch, h, t, i, j});
        }
      }
      s.steps.push_back({Action::kReadX, h, t, -1, -1});
      s.steps.push_back({Action::kGenerate, h, t, -1, -1});
      s.steps.push_back({Action::kWriteThrough, h, t, -1, -1});
    }
  }
  return s;
}

namespace {

BitMatrix rows_of(const BitMatrix& full, std::int64_t first, std::int64_t count) {
  BitMatrix out(count, full.cols());
  for (std::int64_t r = 0; r < count; ++r) {
    for (std::int64_t f = 0; f < full.cols(); ++f) out.set(r, f, full.at(first + r, f) != 0);
  }
  return out;
}

}  // namespace

AttnRunResult run_attention_layer(const SpikeTensor& q, const SpikeTensor& k,
                                  const SpikeTensor& v, const HeadShape& shape,
                                  const NeuronParams& params, const QuantSpec& quant,
                                  const ArrayConfig& array, const AttnRunOptions& options,
                                  mem::MemoryHierarchy& mem) {
  shape.validate();
  params.validate();
  quant.validate();
  for (const SpikeTensor* s : {&q, &k, &v}) {
    if (s->tokens() != shape.tokens || s->timesteps() != shape.timesteps ||
        s->features() != shape.model_dim()) {
      throw ConfigError(fmt::format(
          "attention input shape ({}, {}, {}) does not match N={} T={} D={}", s->tokens(),
          s->timesteps(), s->features(), shape.tokens, shape.timesteps, shape.model_dim()));
    }
  }
  const auto& tiles = options.tiles;
  const auto schedule =
      schedule_attention(shape, array, tiles.q_tile, tiles.k_tile, tiles.resident_x);

  mem.reset();
  Trace trace(TraceHeader{Workload::kAttention, array.rows, array.cols});
  detail::Emitter emit(trace, mem, options.prefetch);

  const auto N = shape.tokens;
  const auto d = shape.head_dim;
  const auto bx = quant.integration_bits;
  const std::array<std::int64_t, 4> none{-1, -1, -1, -1};
  for (int n = 0; n < 3; ++n) {
    emit.transfer(Action::kPreload, none, Endpoint::kHost, Endpoint::kActGlb0,
                  N * shape.timesteps * shape.model_dim(), mem::Placement::kAllocate, false);
  }

  SpikeTensor out(N, shape.timesteps, shape.model_dim());
  ReconfigurableArray grid(array.rows, array.cols);
  IntMatrix membrane;
  // Full X of the current (h, t); the words live in the X GLB or, with
  // resident_x, in the X buffer.
  IntMatrix x_full;
  IntMatrix x_tile;
  BitMatrix q_full, k_full, v_full, k_tile, v_tile, q_tile;
  std::int64_t x_words = 0, kv_words = 0, q_words = 0, x_buf_words = 0;
  std::int64_t nq = 0, nk = 0;
  std::int64_t mode1_cycles = 0;
  const Endpoint x_home = tiles.resident_x ? Endpoint::kXBuf : Endpoint::kXGlb;

  for (const auto& step : schedule.steps) {
    const std::array<std::int64_t, 4> tile{step.h, step.t, step.i, step.j};
    const auto q0 = step.j * schedule.q_tile;
    const auto k0 = step.i * schedule.k_tile;
    switch (step.action) {
      case Action::kInitX: {
        if (step.t == 0) membrane = IntMatrix(N, d);
        q_full = q.slice(step.t, step.h * d, d);
        k_full = k.slice(step.t, step.h * d, d);
        v_full = v.slice(step.t, step.h * d, d);
        x_full = IntMatrix(N, d);
        x_words = emit.transfer(Action::kInitX, tile, Endpoint::kZeroFill, x_home, N * d * bx)
                      .dst_words;
        break;
      }
      case Action::kLoadKV: {
        nk = std::min(schedule.k_tile, N - k0);
        k_tile = rows_of(k_full, k0, nk);
        v_tile = rows_of(v_full, k0, nk);
        kv_words = emit.transfer(Action::kLoadKV, tile, Endpoint::kActGlb0, Endpoint::kKvBuf,
                                 2 * nk * d)
                       .dst_words;
        break;
      }
      case Action::kLoadQ: {
        nq = std::min(schedule.q_tile, N - q0);
        q_tile = rows_of(q_full, q0, nq);
        q_words = emit.transfer(Action::kLoadQ, tile, Endpoint::kActGlb0, Endpoint::kQBuf, nq * d)
                      .dst_words;
        break;
      }
      case Action::kMode1: {
        emit.transfer(Action::kFeed, tile, Endpoint::kQBuf, Endpoint::kPeArray, nq * d,
                      mem::Placement::kAllocate, false);
        emit.transfer(Action::kFeed, tile, Endpoint::kKvBuf, Endpoint::kPeArray, nk * d,
                      mem::Placement::kAllocate, false);
        mode1_cycles = grid.mode1(q_tile, k_tile, quant,
                                  {{"head", step.h}, {"t", step.t}, {"query_base", q0},
                                   {"key_base", k0}});
        emit.step(Action::kMode1, tile, mode1_cycles, Endpoint::kNone, Endpoint::kNone,
                  nq * nk * d, std::int64_t{array.rows} * array.cols * d, grid.resident());
        mem.release(Endpoint::kQBuf, q_words);
        break;
      }
      case Action::kLoadX:
        x_buf_words = emit.transfer(Action::kLoadX, tile, Endpoint::kXGlb, Endpoint::kXBuf,
                                    nq * d * bx)
                          .dst_words;
        break;
      case Action::kModeSwitch: {
        const auto to = grid.mode() == AttnMode::kMode1QK ? AttnMode::kMode2AV : AttnMode::kMode1QK;
        emit.step(Action::kModeSwitch, tile, grid.switch_mode(to));
        break;
      }
      case Action::kMode2: {
        x_tile = IntMatrix(nq, d);
        for (std::int64_t r = 0; r < nq; ++r) {
          for (std::int64_t f = 0; f < d; ++f) x_tile.at(r, f) = x_full.at(q0 + r, f);
        }
        const auto x_local = Endpoint::kXBuf;
        emit.transfer(Action::kFeed, tile, Endpoint::kKvBuf, Endpoint::kPeArray, nk * d,
                      mem::Placement::kAllocate, false);
        emit.transfer(Action::kFeed, tile, x_local, Endpoint::kPeArray, nq * d * bx,
                      mem::Placement::kAllocate, false);
        const auto cycles = grid.mode2(v_tile, x_tile, quant,
                                       {{"head", step.h}, {"t", step.t}, {"query_base", q0},
                                        {"key_base", k0}});
        emit.step(Action::kMode2, tile, cycles, Endpoint::kNone, Endpoint::kNone, nq * nk * d,
                  std::int64_t{array.rows} * array.cols * d);
        emit.transfer(Action::kCollect, tile, Endpoint::kPeArray, x_local, nq * d * bx,
                      mem::Placement::kOverwrite, false);
        for (std::int64_t r = 0; r < nq; ++r) {
          for (std::int64_t f = 0; f < d; ++f) x_full.at(q0 + r, f) = x_tile.at(r, f);
        }
        emit.set_prefetch_budget(mode1_cycles + cycles);
        if (step.j == schedule.tiles_q - 1) mem.release(Endpoint::kKvBuf, kv_words);
        break;
      }
      case Action::kExtractX:
        emit.transfer(Action::kExtractX, tile, Endpoint::kXBuf, Endpoint::kXGlb, nq * d * bx,
                      mem::Placement::kOverwrite);
        mem.release(Endpoint::kXBuf, x_buf_words);
        break;
      case Action::kReadX:
        emit.transfer(Action::kReadX, tile, x_home, Endpoint::kSpikeGen, N * d * bx);
        mem.release(x_home, x_words);
        break;
      case Action::kGenerate: {
        for (std::int64_t n = 0; n < N; ++n) {
          for (std::int64_t f = 0; f < d; ++f) {
            const auto neuron = step.h * d + f;
            const auto r = lif_update(membrane.at(n, f), x_full.at(n, f), params, quant,
                                      {n, step.t, neuron});
            membrane.at(n, f) = r.v_new;
            out.set(n, step.t, neuron, r.spike);
          }
        }
        emit.step(Action::kGenerate, tile, ceil_div(N * d, std::int64_t{array.rows} * array.cols));
        break;
      }
      case Action::kWriteThrough:
        emit.transfer(Action::kWriteThrough, tile, Endpoint::kSpikeGen, Endpoint::kActGlb1, N * d);
        break;
      default:
        throw InternalError(
            fmt::format("unexpected attention schedule action {}", to_string(step.action)));
    }
  }

  auto stats = report::RunStats::from_trace(trace);
  if (!(stats.counters == mem.counters())) {
    throw InternalError("trace-derived access counters disagree with the memory hierarchy");
  }
  return {std::move(out), std::move(trace), std::move(stats)};
}

}  // namespace spikesim::attn
