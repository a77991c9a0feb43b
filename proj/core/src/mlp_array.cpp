#include "spikesim/mlp_array.hpp"

#include <algorithm>
#include <array>
#include <list>
#include <map>
#include <utility>

#include <fmt/format.h>

#include "emitter.hpp"

namespace spikesim::mlp {

using mem::Endpoint;
using fixed::ceil_div;

std::string_view to_string(ExtractionMode m) {
  return m == ExtractionMode::kParallel3D ? "parallel-3d" : "serial-2d";
}

ExtractionMode parse_extraction_mode(std::string_view text) {
  if (text == "parallel-3d") return ExtractionMode::kParallel3D;
  if (text == "serial-2d") return ExtractionMode::kSerial2D;
  throw ConfigError(
      fmt::format("unknown extraction mode '{}' (expected parallel-3d|serial-2d)", text));
}

void ArrayConfig::validate() const {
  if (rows < 1 || cols < 1) {
    throw ConfigError(fmt::format("array must be at least 1x1, got {}x{}", rows, cols));
  }
}

void MlpDims::validate() const {
  if (tokens < 1 || timesteps < 1 || in_features < 1 || out_features < 1) {
    throw ConfigError(fmt::format("MLP dims must be >= 1, got N={} T={} D_in={} D_out={}",
                                  tokens, timesteps, in_features, out_features));
  }
}

TileGeometry tile_geometry(const MlpDims& dims, const ArrayConfig& array, std::int64_t if_tile) {
  dims.validate();
  array.validate();
  if (if_tile < 1) throw ConfigError(fmt::format("if_tile must be >= 1, got {}", if_tile));
  TileGeometry g;
  g.of_tile = array.rows;
  g.t_tile = std::min<std::int64_t>(dims.timesteps, array.cols);
  g.n_tile = std::min<std::int64_t>(dims.tokens, array.cols / g.t_tile);
  g.if_tile = std::min(if_tile, dims.in_features);
  g.tiles_of = ceil_div(dims.out_features, g.of_tile);
  g.tiles_n = ceil_div(dims.tokens, g.n_tile);
  g.tiles_t = ceil_div(dims.timesteps, g.t_tile);
  g.tiles_if = ceil_div(dims.in_features, g.if_tile);
  return g;
}

std::int64_t TileScheduleMlp::count(Action a) const {
  return std::count_if(steps.begin(), steps.end(), [a](const MlpStep& s) { return s.action == a; });
}

TileScheduleMlp schedule_mlp(const MlpDims& dims, const ArrayConfig& array,
                             const ScheduleOptions& options) {
  if (options.w_buffer_chunks < 0) throw ConfigError("w_buffer_chunks must be >= 0");
  TileScheduleMlp s;
  s.dims = dims;
  s.array = array;
  s.geometry = tile_geometry(dims, array, options.if_tile);
  const auto& g = s.geometry;
  s.w_buffer_chunks = options.w_buffer_chunks == 0 ? g.tiles_if : options.w_buffer_chunks;

  // Most recently used chunk at the front.
  std::list<std::pair<std::int64_t, std::int64_t>> resident;

  for (std::int64_t of = 0; of < g.tiles_of; ++of) {
    for (std::int64_t n = 0; n < g.tiles_n; ++n) {
      for (std::int64_t t = 0; t < g.tiles_t; ++t) {
        for (std::int64_t in = 0; in < g.tiles_if; ++in) {
          const auto key = std::make_pair(of, in);
          const auto hit = std::find(resident.begin(), resident.end(), key);
          if (hit != resident.end()) {
            resident.splice(resident.begin(), resident, hit);
          } else {
            MlpStep load{Action::kLoadW, of, n, t, in};
            if (static_cast<std::int64_t>(resident.size()) == s.w_buffer_chunks) {
              load.evicted_of = resident.back().first;
              load.evicted_in = resident.back().second;
              resident.pop_back();
            }
            resident.push_front(key);
            s.steps.push_back(load);
          }
          s.steps.push_back({Action::kLoadS, of, n, t, in});
          s.steps.push_back({Action::kCompute, of, n, t, in});
        }
        for (const auto a : {Action::kDrain, Action::kExtract, Action::kGenerate,
                             Action::kWriteThrough}) {
          s.steps.push_back({a, of, n, t, -1});
        }
      }
    }
  }
  return s;
}

SystolicPeArray::SystolicPeArray(int rows, int cols)
    : rows_(rows), cols_(cols), pes_(static_cast<std::size_t>(rows * cols)) {
  if (rows < 1 || cols < 1) throw ConfigError("PE array must be at least 1x1");
}

void SystolicPeArray::reset() { std::fill(pes_.begin(), pes_.end(), PeState{}); }

std::int64_t SystolicPeArray::stream(const IntMatrix& weights, const BitMatrix& spikes,
                                     const QuantSpec& quant) {
  if (weights.rows() != rows_ || spikes.rows() != cols_ || weights.cols() != spikes.cols()) {
    throw InternalError("stream: tile shape does not match the PE array");
  }
  const std::int64_t features = weights.cols();
  for (auto& pe : pes_) {
    pe.weight_valid = false;
    pe.spike_valid = false;
  }

  const std::int64_t last_injection = features - 1 + std::max(rows_, cols_) - 1;
  std::int64_t last_active = -1;
  for (std::int64_t cycle = 0;; ++cycle) {
    // Weights advance one column to the right; new ones enter at column 0.
    for (int r = 0; r < rows_; ++r) {
      for (int c = cols_ - 1; c > 0; --c) {
        auto& dst = pes_[index(r, c)];
        const auto& src = pes_[index(r, c - 1)];
        dst.weight_reg = src.weight_reg;
        dst.weight_valid = src.weight_valid;
        dst.weight_tag = src.weight_tag;
      }
      auto& edge = pes_[index(r, 0)];
      const std::int64_t k = cycle - r;
      edge.weight_valid = k >= 0 && k < features;
      edge.weight_tag = edge.weight_valid ? k : -1;
      edge.weight_reg = edge.weight_valid ? weights.at(r, k) : 0;
    }
    // Spikes advance one row down; new ones enter at row 0.
    for (int c = 0; c < cols_; ++c) {
      for (int r = rows_ - 1; r > 0; --r) {
        auto& dst = pes_[index(r, c)];
        const auto& src = pes_[index(r - 1, c)];
        dst.spike_reg = src.spike_reg;
        dst.spike_valid = src.spike_valid;
        dst.spike_tag = src.spike_tag;
      }
      auto& edge = pes_[index(0, c)];
      const std::int64_t k = cycle - c;
      edge.spike_valid = k >= 0 && k < features;
      edge.spike_tag = edge.spike_valid ? k : -1;
      edge.spike_reg = edge.spike_valid ? spikes.at(c, k) : 0;
    }

    bool any_valid = false;
    for (int r = 0; r < rows_; ++r) {
      for (int c = 0; c < cols_; ++c) {
        auto& pe = pes_[index(r, c)];
        any_valid |= pe.weight_valid || pe.spike_valid;
        if (!pe.weight_valid || !pe.spike_valid) continue;
        if (pe.weight_tag != pe.spike_tag) {
          throw InternalError(fmt::format("PE ({}, {}) saw weight {} with spike {}", r, c,
                                          pe.weight_tag, pe.spike_tag));
        }
        last_active = cycle;
        if (pe.spike_reg == 0) continue;
        pe.x_reg = fixed::constrain_signed(
            pe.x_reg + pe.weight_reg, quant.integration_bits, quant.overflow,
            "PE synaptic integration", [&] {
              return Coordinates{{"pe_row", r}, {"pe_col", c}, {"feature", pe.weight_tag}};
            });
      }
    }
    if (!any_valid && cycle > last_injection) break;
  }
  return last_active + 1;
}

IntMatrix SystolicPeArray::results() const {
  IntMatrix x(rows_, cols_);
  for (int r = 0; r < rows_; ++r) {
    for (int c = 0; c < cols_; ++c) x.at(r, c) = pes_[index(r, c)].x_reg;
  }
  return x;
}

TileResult stream_mlp_tile(const IntMatrix& w_tile, const BitMatrix& s_tile, SystolicPeArray& grid,
                           const QuantSpec& quant) {
  grid.reset();
  const auto cycles = grid.stream(w_tile, s_tile, quant);
  return {grid.results(), cycles};
}

SpikeGeneratorBank::SpikeGeneratorBank(std::int64_t rows, std::int64_t token_slots,
                                       NeuronParams params, QuantSpec quant)
    : rows_(rows),
      slots_(token_slots),
      params_(params),
      quant_(quant),
      v_(static_cast<std::size_t>(rows * token_slots), 0) {}

void SpikeGeneratorBank::reset() { std::fill(v_.begin(), v_.end(), 0); }

ExtractResult extract_and_generate(const IntMatrix& x, SpikeGeneratorBank& bank,
                                   std::span<const ColumnLane> lanes, LaneRows rows,
                                   const ArrayConfig& array) {
  if (static_cast<std::int64_t>(lanes.size()) != x.cols() || x.rows() != bank.rows()) {
    throw InternalError("extract_and_generate: lane map does not match the tile");
  }
  ExtractResult out{BitMatrix(x.rows(), x.cols()), array.extraction_cycles_per_batch(), 1};
  for (std::int64_t c = 0; c < x.cols(); ++c) {
    const auto& lane = lanes[static_cast<std::size_t>(c)];
    if (!lane.valid) continue;
    for (std::int64_t r = 0; r < rows.valid_rows; ++r) {
      const auto res = lif_update(bank.membrane(r, lane.slot), x.at(r, c), bank.params(),
                                  bank.quant(), {lane.token, lane.timestep, rows.neuron_base + r});
      bank.set_membrane(r, lane.slot, res.v_new);
      out.spikes.set(r, c, res.spike);
    }
  }
  return out;
}

namespace {

struct LayerEndpoints {
  Endpoint input;
  Endpoint output;
};

// Runs one layer, appending to `emit`'s trace. Returns the output spikes and
// the Act GLB words they occupy.
std::pair<SpikeTensor, std::int64_t> run_layer(const SpikeTensor& s_in, const WeightMatrix& w,
                                               const NeuronParams& params, const QuantSpec& quant,
                                               const ArrayConfig& array,
                                               const MlpRunOptions& options, LayerEndpoints glb,
                                               detail::Emitter& emit) {
  params.validate();
  quant.validate();
  array.validate();
  if (s_in.features() != w.in_features()) {
    throw ConfigError(fmt::format("input has {} features but weights expect {}",
                                  s_in.features(), w.in_features()));
  }
  if (w.bits() > quant.weight_bits) {
    throw ConfigError(fmt::format("weights are {}-bit but quant allows {}", w.bits(),
                                  quant.weight_bits));
  }
  const MlpDims dims{s_in.tokens(), s_in.timesteps(), w.in_features(), w.out_features()};
  const auto schedule =
      schedule_mlp(dims, array, {options.if_tile, options.w_buffer_chunks});
  const auto& g = schedule.geometry;
  auto& mem = emit.mem();

  // Weights for this layer arrive from the host.
  const auto w_words =
      emit.transfer(Action::kPreload, {-1, -1, -1, -1}, Endpoint::kHost, Endpoint::kWGlb,
                    dims.in_features * dims.out_features * quant.weight_bits,
                    mem::Placement::kAllocate, false)
          .dst_words;

  SpikeTensor out(dims.tokens, dims.timesteps, dims.out_features);
  std::int64_t out_words = 0;
  SystolicPeArray grid(array.rows, array.cols);
  SpikeGeneratorBank bank(g.of_tile, g.n_tile, params, quant);
  std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t> w_resident;  // chunk -> words
  std::int64_t act_buf_words = 0;

  IntMatrix w_tile;
  BitMatrix s_tile;
  std::vector<ColumnLane> lanes;
  LaneRows lane_rows{};
  std::int64_t real_cols = 0;
  std::int64_t streamed = 0;
  std::int64_t prev_of = -1;
  std::int64_t prev_n = -1;
  IntMatrix x;

  auto if_range = [&](std::int64_t in) {
    const auto lo = in * g.if_tile;
    return std::make_pair(lo, std::min(dims.in_features, lo + g.if_tile));
  };

  for (const auto& step : schedule.steps) {
    const std::array<std::int64_t, 4> tile{step.of, step.n, step.t, step.in};

    switch (step.action) {
      case Action::kLoadW: {
        if (step.evicted_of >= 0) {
          const auto key = std::make_pair(step.evicted_of, step.evicted_in);
          mem.release(Endpoint::kWBuf, w_resident.at(key));
          w_resident.erase(key);
        }
        const auto [lo, hi] = if_range(step.in);
        const auto rows_real =
            std::min<std::int64_t>(g.of_tile, dims.out_features - step.of * g.of_tile);
        const auto words = emit.transfer(Action::kLoadW, tile, Endpoint::kWGlb, Endpoint::kWBuf,
                                         rows_real * (hi - lo) * quant.weight_bits);
        w_resident[{step.of, step.in}] = words.dst_words;
        break;
      }
      case Action::kLoadS: {
        if (step.in == 0) {
          // New (of, n, t) tile: map lanes and gather operands over the full IF extent.
          if (step.of != prev_of || step.n != prev_n) {
            bank.reset();
            prev_of = step.of;
            prev_n = step.n;
          }
          const auto n0 = step.n * g.n_tile;
          const auto t0 = step.t * g.t_tile;
          const auto neuron_base = step.of * g.of_tile;
          lane_rows = {std::min<std::int64_t>(g.of_tile, dims.out_features - neuron_base),
                       neuron_base};
          lanes.assign(static_cast<std::size_t>(array.cols), ColumnLane{});
          real_cols = 0;
          for (std::int64_t slot = 0; slot < g.n_tile; ++slot) {
            for (std::int64_t dt = 0; dt < g.t_tile; ++dt) {
              const auto c = slot * g.t_tile + dt;
              const auto n = n0 + slot;
              const auto t = t0 + dt;
              if (n >= dims.tokens || t >= dims.timesteps) continue;
              lanes[static_cast<std::size_t>(c)] = {true, slot, n, t};
              ++real_cols;
            }
          }
          w_tile = IntMatrix(array.rows, dims.in_features);
          for (std::int64_t r = 0; r < lane_rows.valid_rows; ++r) {
            for (std::int64_t j = 0; j < dims.in_features; ++j) {
              w_tile.at(r, j) = w.at(j, neuron_base + r);
            }
          }
          s_tile = BitMatrix(array.cols, dims.in_features);
          for (std::int64_t c = 0; c < array.cols; ++c) {
            const auto& lane = lanes[static_cast<std::size_t>(c)];
            if (!lane.valid) continue;
            for (std::int64_t j = 0; j < dims.in_features; ++j) {
              s_tile.set(c, j, s_in.at(lane.token, lane.timestep, j) != 0);
            }
          }
          streamed = 0;
        }
        if (act_buf_words > 0) mem.release(Endpoint::kActBuf, act_buf_words);
        const auto [lo, hi] = if_range(step.in);
        act_buf_words = emit.transfer(Action::kLoadS, tile, glb.input, Endpoint::kActBuf,
                                      real_cols * (hi - lo))
                            .dst_words;
        break;
      }
      case Action::kCompute: {
        const auto [lo, hi] = if_range(step.in);
        const auto len = hi - lo;
        emit.transfer(Action::kFeed, tile, Endpoint::kWBuf, Endpoint::kPeArray,
                      lane_rows.valid_rows * len * quant.weight_bits, mem::Placement::kAllocate,
                      false);
        emit.transfer(Action::kFeed, tile, Endpoint::kActBuf, Endpoint::kPeArray,
                      real_cols * len, mem::Placement::kAllocate, false);
        emit.step(Action::kCompute, tile, len, Endpoint::kNone, Endpoint::kNone,
                  lane_rows.valid_rows * real_cols * len,
                  std::int64_t{array.rows} * array.cols * len);
        streamed += len;
        break;
      }
      case Action::kDrain: {
        if (streamed != dims.in_features) throw InternalError("tile streamed a partial IF range");
        auto result = stream_mlp_tile(w_tile, s_tile, grid, quant);
        x = std::move(result.x);
        const auto drain = result.cycles - streamed;
        if (drain < 0) throw InternalError("PE simulation finished before the last feature");
        emit.step(Action::kDrain, tile, drain);
        emit.set_prefetch_budget(result.cycles);
        break;
      }
      case Action::kExtract: {
        auto res = extract_and_generate(x, bank, lanes, lane_rows, array);
        emit.step(Action::kExtract, tile, res.extract_cycles, Endpoint::kPeArray,
                  Endpoint::kSpikeGen);
        emit.step(Action::kGenerate, tile, res.generate_cycles);
        for (std::int64_t c = 0; c < array.cols; ++c) {
          const auto& lane = lanes[static_cast<std::size_t>(c)];
          if (!lane.valid) continue;
          for (std::int64_t r = 0; r < lane_rows.valid_rows; ++r) {
            out.set(lane.token, lane.timestep, lane_rows.neuron_base + r, res.spikes.at(r, c) != 0);
          }
        }
        break;
      }
      case Action::kGenerate:
        break;  // emitted together with extract
      case Action::kWriteThrough:
        out_words += emit.transfer(Action::kWriteThrough, tile, Endpoint::kSpikeGen, glb.output,
                                   lane_rows.valid_rows * real_cols)
                         .dst_words;
        break;
      default:
        throw InternalError(fmt::format("unexpected MLP schedule action {}", to_string(step.action)));
    }
  }

  if (act_buf_words > 0) mem.release(Endpoint::kActBuf, act_buf_words);
  for (const auto& [key, words] : w_resident) mem.release(Endpoint::kWBuf, words);
  mem.release(Endpoint::kWGlb, w_words);
  return {std::move(out), out_words};
}

MlpRunResult finish(SpikeTensor spikes, Trace trace, const mem::MemoryHierarchy& mem) {
  auto stats = report::RunStats::from_trace(trace);
  if (!(stats.counters == mem.counters())) {
    throw InternalError("trace-derived access counters disagree with the memory hierarchy");
  }
  return {std::move(spikes), std::move(trace), std::move(stats)};
}

}  // namespace

MlpRunResult run_mlp_chain(const SpikeTensor& s_in, std::span<const WeightMatrix> layers,
                           const NeuronParams& params, const QuantSpec& quant,
                           const ArrayConfig& array, const MlpRunOptions& options,
                           mem::MemoryHierarchy& mem) {
  if (layers.empty()) throw ConfigError("layer chain needs at least one layer");
  array.validate();
  mem.reset();
  Trace trace(TraceHeader{Workload::kMlp, array.rows, array.cols});
  detail::Emitter emit(trace, mem, options.prefetch);

  LayerEndpoints glb{Endpoint::kActGlb0, Endpoint::kActGlb1};
  std::int64_t in_words =
      emit.transfer(Action::kPreload, {-1, -1, -1, -1}, Endpoint::kHost, glb.input,
                    s_in.size(), mem::Placement::kAllocate, false)
          .dst_words;
  SpikeTensor current = s_in;
  for (const auto& w : layers) {
    auto [out, out_words] = run_layer(current, w, params, quant, array, options, glb, emit);
    mem.release(glb.input, in_words);
    in_words = out_words;
    current = std::move(out);
    std::swap(glb.input, glb.output);
  }
  return finish(std::move(current), std::move(trace), mem);
}

MlpRunResult run_mlp_layer(const SpikeTensor& s_in, const WeightMatrix& w,
                           const NeuronParams& params, const QuantSpec& quant,
                           const ArrayConfig& array, const MlpRunOptions& options,
                           mem::MemoryHierarchy& mem) {
  return run_mlp_chain(s_in, std::span<const WeightMatrix>(&w, 1), params, quant, array, options,
                       mem);
}

}  // namespace spikesim::mlp
