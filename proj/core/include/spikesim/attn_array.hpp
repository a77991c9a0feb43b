#pragma once

// Cycle-level model of the reconfigurable spiking self-attention array and
// the fused h -> t -> i (key tile) -> j (query tile) schedule.
//
// Grid mapping: row r holds query token (j * q_tile + r), column c holds key
// token (i * k_tile + c). Mode 1 streams Q rows left to right and K columns
// top to bottom, leaving A stationary in the a registers. Mode 2 streams V
// top to bottom while X partials enter the left edge and leave on the right.

#include <cstdint>
#include <string_view>
#include <vector>

#include "spikesim/memory.hpp"
#include "spikesim/mlp_array.hpp"
#include "spikesim/run_stats.hpp"
#include "spikesim/snn_core.hpp"
#include "spikesim/tensor.hpp"
#include "spikesim/trace.hpp"

namespace spikesim::attn {

using mlp::ArrayConfig;

enum class AttnMode { kMode1QK, kMode2AV };

std::string_view to_string(AttnMode m);

struct RpeState {
  std::uint8_t q_reg = 0;
  bool q_valid = false;
  std::int64_t q_tag = -1;
  std::uint8_t kv_reg = 0;
  bool kv_valid = false;
  std::int64_t kv_tag = -1;
  std::int64_t a_reg = 0;
  // Mode 2 partial in flight through this R-PE.
  std::int64_t x_reg = 0;
  bool x_valid = false;
  std::int64_t x_tag = -1;
};

class ReconfigurableArray {
 public:
  ReconfigurableArray(int rows, int cols);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  AttnMode mode() const { return mode_; }

  // Clears every register and returns to Mode 1.
  void reset();
  // Returns the cycles spent (1).
  std::int64_t switch_mode(AttnMode to);

  // Zeroes a registers, then streams q (nq x d) and k (nk x d). Leaves
  // a[r][c] = popcount(q[r] AND k[c]). Returns cycles from first injection
  // to last accumulation. Requires Mode 1.
  std::int64_t mode1(const BitMatrix& q, const BitMatrix& k, const QuantSpec& quant,
                     const Coordinates& where = {});

  // x (nq x d) is updated in place: x[r][f] += sum_c a[r][c] * v[c][f],
  // accumulated in ascending c. Requires Mode 2 and a completed Mode 1 pass
  // with the same nq x nk footprint.
  std::int64_t mode2(const BitMatrix& v, IntMatrix& x, const QuantSpec& quant,
                     const Coordinates& where = {});

  // a registers of the last Mode 1 footprint.
  IntMatrix attention() const;
  // Attention values currently held in the array.
  std::int64_t resident() const { return resident_q_ * resident_k_; }

  const RpeState& pe(int r, int c) const { return pes_[index(r, c)]; }

 private:
  std::size_t index(int r, int c) const { return static_cast<std::size_t>(r * cols_ + c); }

  int rows_;
  int cols_;
  AttnMode mode_ = AttnMode::kMode1QK;
  std::int64_t resident_q_ = 0;
  std::int64_t resident_k_ = 0;
  std::vector<RpeState> pes_;
};

constexpr std::int64_t attn_pass_cycles(std::int64_t d, std::int64_t nq, std::int64_t nk) {
  return d + nq + nk - 2;
}

struct TileResultMode1 {
  IntMatrix a;
  std::int64_t cycles;
};

struct TileResultMode2 {
  IntMatrix x;
  std::int64_t cycles;
};

// Resets the grid and runs one Mode 1 pass; the attention tile stays
// resident for mode2_compute.
TileResultMode1 mode1_compute(const BitMatrix& q_tile, const BitMatrix& k_tile,
                              ReconfigurableArray& grid, const QuantSpec& quant);
// Switches to Mode 2 if needed and applies the resident tile to v_tile.
TileResultMode2 mode2_compute(const BitMatrix& v_tile, const IntMatrix& x_partial,
                              ReconfigurableArray& grid, const QuantSpec& quant);

struct AttnTiles {
  std::int64_t q_tile = 16;
  std::int64_t k_tile = 16;
  // Keep X partials in the X buffer instead of round-tripping through the
  // X GLB on every key tile.
  bool resident_x = false;

  friend bool operator==(const AttnTiles&, const AttnTiles&) = default;
};

struct AttnStep {
  Action action;
  std::int64_t h;
  std::int64_t t;
  std::int64_t i;  // key tile; -1 for per-(h, t) steps
  std::int64_t j;  // query tile; -1 for per-(h, t, i) steps
};

struct TileScheduleAttn {
  HeadShape shape;
  ArrayConfig array;
  std::int64_t q_tile = 0;
  std::int64_t k_tile = 0;
  std::int64_t tiles_q = 0;
  std::int64_t tiles_k = 0;
  bool resident_x = false;
  std::vector<AttnStep> steps;

  std::int64_t count(Action a) const;
};

// Materializes the fused loop nest. Per (h, t): init-X; per key tile i:
// load-KV; per query tile j: load-Q, mode1, load-X, mode-switch, mode2,
// extract-X, mode-switch. Each (h, t) ends with read-X, generate and
// write-through. With resident_x the X GLB steps are dropped.
TileScheduleAttn schedule_attention(const HeadShape& shape, const ArrayConfig& array,
                                    std::int64_t nq_tile, std::int64_t nk_tile,
                                    bool resident_x = false);

struct AttnRunOptions {
  AttnTiles tiles;
  bool prefetch = false;
};

struct AttnRunResult {
  SpikeTensor spikes;
  Trace trace;
  report::RunStats stats;
};

// Q, K and V are preloaded into Act GLB0; output spikes are written through
// to Act GLB1. Output is bit-identical to golden_attention_layer.
AttnRunResult run_attention_layer(const SpikeTensor& q, const SpikeTensor& k,
                                  const SpikeTensor& v, const HeadShape& shape,
                                  const NeuronParams& params, const QuantSpec& quant,
                                  const ArrayConfig& array, const AttnRunOptions& options,
                                  mem::MemoryHierarchy& mem);

}  // namespace spikesim::attn
