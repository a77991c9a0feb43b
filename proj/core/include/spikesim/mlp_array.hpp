#pragma once

// Cycle-level model of the spiking MLP accelerator: a bottom-tier systolic
// PE array computing synaptic integration and a top-tier bank of spike
// generators, driven by the fused of -> n -> t -> if tile loop.
//
// Array mapping: row r carries output feature (of * rows + r); column c
// carries one (token, timestep) pair. Pairs are packed t-major within a
// token, so a tile spans n_tile tokens x t_tile timesteps and column
// c = slot * t_tile + dt. Ragged edges are padded with inert lanes.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "spikesim/memory.hpp"
#include "spikesim/run_stats.hpp"
#include "spikesim/snn_core.hpp"
#include "spikesim/tensor.hpp"
#include "spikesim/trace.hpp"

namespace spikesim::mlp {

enum class ExtractionMode {
  kParallel3D,  // vertical readout ports: one cycle per batch
  kSerial2D,    // register shift chain: one column per cycle
};

std::string_view to_string(ExtractionMode m);
ExtractionMode parse_extraction_mode(std::string_view text);

struct ArrayConfig {
  int rows = 16;   // output-feature lanes (H)
  int cols = 128;  // token x timestep lanes (W)
  ExtractionMode extraction = ExtractionMode::kParallel3D;

  std::int64_t extraction_cycles_per_batch() const {
    return extraction == ExtractionMode::kParallel3D ? 1 : cols;
  }
  void validate() const;

  friend bool operator==(const ArrayConfig&, const ArrayConfig&) = default;
};

struct MlpDims {
  std::int64_t tokens = 1;
  std::int64_t timesteps = 1;
  std::int64_t in_features = 1;
  std::int64_t out_features = 1;

  void validate() const;
  friend bool operator==(const MlpDims&, const MlpDims&) = default;
};

struct TileGeometry {
  std::int64_t of_tile = 0;  // == rows
  std::int64_t n_tile = 0;
  std::int64_t t_tile = 0;
  std::int64_t if_tile = 0;
  std::int64_t tiles_of = 0;
  std::int64_t tiles_n = 0;
  std::int64_t tiles_t = 0;
  std::int64_t tiles_if = 0;

  friend bool operator==(const TileGeometry&, const TileGeometry&) = default;
};

// t_tile = min(T, cols); n_tile = min(N, cols / t_tile).
TileGeometry tile_geometry(const MlpDims& dims, const ArrayConfig& array, std::int64_t if_tile);

struct MlpStep {
  Action action;
  std::int64_t of;
  std::int64_t n;
  std::int64_t t;
  std::int64_t in;  // if index; -1 for per-tile steps
  // load-W only: the (of, if) chunk evicted to make room, else -1.
  std::int64_t evicted_of = -1;
  std::int64_t evicted_in = -1;
};

struct ScheduleOptions {
  std::int64_t if_tile = 16;
  // W buffer capacity in chunks; 0 holds the whole of-row (tiles_if chunks).
  std::int64_t w_buffer_chunks = 0;
};

struct TileScheduleMlp {
  MlpDims dims;
  ArrayConfig array;
  TileGeometry geometry;
  std::int64_t w_buffer_chunks = 0;  // resolved capacity
  std::vector<MlpStep> steps;

  std::int64_t count(Action a) const;
};

// Materializes the loop nest in of -> n -> t -> if order. A load-W step is
// emitted only when the chunk is not resident (LRU replacement); every
// (of, n, t) tile ends with drain, extract, generate and write-through.
TileScheduleMlp schedule_mlp(const MlpDims& dims, const ArrayConfig& array,
                             const ScheduleOptions& options);

// Closed-form latency of one (of, n, t) tile under skewed fill/drain.
constexpr std::int64_t mlp_tile_cycles(std::int64_t if_total, std::int64_t rows,
                                       std::int64_t cols) {
  return if_total + rows + cols - 2;
}

struct PeState {
  std::uint8_t spike_reg = 0;
  bool spike_valid = false;
  std::int64_t spike_tag = -1;
  std::int64_t weight_reg = 0;
  bool weight_valid = false;
  std::int64_t weight_tag = -1;
  std::int64_t x_reg = 0;
};

// Event-driven register model of the synaptic-integration-stationary array.
// Weights move left to right along rows, spikes top to bottom along
// columns; feature k meets PE (r, c) at cycle k + r + c.
class SystolicPeArray {
 public:
  SystolicPeArray(int rows, int cols);

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  // Zeroes every x register and empties the pipelines.
  void reset();

  // Streams `weights` (rows x IF) and `spikes` (cols x IF) through the
  // array, accumulating into x registers. Returns the cycles from first
  // injection to last accumulation.
  std::int64_t stream(const IntMatrix& weights, const BitMatrix& spikes, const QuantSpec& quant);

  const PeState& pe(int r, int c) const { return pes_[index(r, c)]; }
  // x registers as a rows x cols matrix.
  IntMatrix results() const;

 private:
  std::size_t index(int r, int c) const { return static_cast<std::size_t>(r * cols_ + c); }

  int rows_;
  int cols_;
  std::vector<PeState> pes_;
};

struct TileResult {
  IntMatrix x;
  std::int64_t cycles;
};

// Resets the grid, streams one (of, n, t) tile over its full IF extent and
// returns the x registers. x[r][c] = sum_k w[r][k] * s[c][k].
TileResult stream_mlp_tile(const IntMatrix& w_tile, const BitMatrix& s_tile, SystolicPeArray& grid,
                           const QuantSpec& quant);

// Membrane potentials of the active (of, n) window: one row per output lane,
// one slot per token in the window. Carried across t tiles.
class SpikeGeneratorBank {
 public:
  SpikeGeneratorBank(std::int64_t rows, std::int64_t token_slots, NeuronParams params,
                     QuantSpec quant);

  void reset();
  std::int64_t membrane(std::int64_t row, std::int64_t slot) const { return v_[index(row, slot)]; }
  void set_membrane(std::int64_t row, std::int64_t slot, std::int64_t v) { v_[index(row, slot)] = v; }

  std::int64_t rows() const { return rows_; }
  std::int64_t slots() const { return slots_; }
  const NeuronParams& params() const { return params_; }
  const QuantSpec& quant() const { return quant_; }

 private:
  std::size_t index(std::int64_t row, std::int64_t slot) const {
    return static_cast<std::size_t>(row * slots_ + slot);
  }

  std::int64_t rows_;
  std::int64_t slots_;
  NeuronParams params_;
  QuantSpec quant_;
  std::vector<std::int64_t> v_;
};

// What a column of the current tile holds.
struct ColumnLane {
  bool valid = false;
  std::int64_t slot = 0;      // token slot in the generator bank
  std::int64_t token = 0;     // absolute token index
  std::int64_t timestep = 0;  // absolute timestep
};

struct LaneRows {
  std::int64_t valid_rows;   // rows mapped to real output features
  std::int64_t neuron_base;  // output feature of row 0
};

struct ExtractResult {
  BitMatrix spikes;  // rows x cols; padding lanes are 0
  std::int64_t extract_cycles;
  std::int64_t generate_cycles;
};

// Reads every x register into the generators and applies lif_update lane by
// lane, visiting columns in ascending order so each token's timesteps are
// processed in time order.
ExtractResult extract_and_generate(const IntMatrix& x, SpikeGeneratorBank& bank,
                                   std::span<const ColumnLane> lanes, LaneRows rows,
                                   const ArrayConfig& array);

struct MlpRunOptions {
  std::int64_t if_tile = 16;
  std::int64_t w_buffer_chunks = 0;
  // Hide load cycles behind the previous tile's compute.
  bool prefetch = false;
};

struct MlpRunResult {
  SpikeTensor spikes;
  Trace trace;
  report::RunStats stats;
};

// Runs one layer with inputs preloaded in Act GLB0 and outputs written
// through to Act GLB1. Output is bit-identical to golden_mlp_layer.
MlpRunResult run_mlp_layer(const SpikeTensor& s_in, const WeightMatrix& w,
                           const NeuronParams& params, const QuantSpec& quant,
                           const ArrayConfig& array, const MlpRunOptions& options,
                           mem::MemoryHierarchy& mem);

// Runs layers back to back; the two activation GLBs swap roles after each
// layer.
MlpRunResult run_mlp_chain(const SpikeTensor& s_in, std::span<const WeightMatrix> layers,
                           const NeuronParams& params, const QuantSpec& quant,
                           const ArrayConfig& array, const MlpRunOptions& options,
                           mem::MemoryHierarchy& mem);

}  // namespace spikesim::mlp
