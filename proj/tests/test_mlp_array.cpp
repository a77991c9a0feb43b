#include <gtest/gtest.h>

#include <set>
#include <tuple>

#include "oracle.hpp"
#include "spikesim/mlp_array.hpp"
#include "spikesim/synthetic.hpp"

using namespace spikesim;
using namespace spikesim::mlp;

namespace {

ArrayConfig array(int rows, int cols, ExtractionMode e = ExtractionMode::kParallel3D) {
  return {rows, cols, e};
}

QuantSpec quant(int bw = 8, int bx = 16) {
  QuantSpec q;
  q.weight_bits = bw;
  q.integration_bits = bx;
  return q;
}

MlpRunResult run(const SpikeTensor& s, const WeightMatrix& w, NeuronParams p, QuantSpec q,
                 ArrayConfig a, MlpRunOptions o = {}) {
  mem::MemoryHierarchy m;
  return run_mlp_layer(s, w, p, q, a, o, m);
}

}  // namespace

TEST(MlpSchedule, Geometry) {
  const auto g = tile_geometry({2, 2, 8, 8}, array(4, 4), 4);
  EXPECT_EQ(g.t_tile, 2);
  EXPECT_EQ(g.n_tile, 2);
  EXPECT_EQ(g.tiles_of, 2);
  EXPECT_EQ(g.tiles_n * g.tiles_t, 1);
  EXPECT_EQ(g.tiles_if, 2);
  const auto wide = tile_geometry({32, 4, 64, 32}, array(16, 128), 16);
  EXPECT_EQ(wide.n_tile, 32);
  EXPECT_EQ(wide.tiles_if, 4);
  const auto long_t = tile_geometry({3, 200, 4, 4}, array(4, 128), 4);
  EXPECT_EQ(long_t.t_tile, 128);
  EXPECT_EQ(long_t.n_tile, 1);
  EXPECT_EQ(long_t.tiles_t, 2);
  EXPECT_THROW(tile_geometry({1, 1, 4, 4}, array(4, 4), 0), ConfigError);
}

TEST(MlpSchedule, SingleTile) {
  const auto s = schedule_mlp({1, 1, 4, 4}, array(4, 4), {4, 0});
  EXPECT_EQ(s.count(Action::kCompute), 1);
  EXPECT_EQ(s.count(Action::kLoadW), 1);
  EXPECT_EQ(s.count(Action::kLoadS), 1);
  EXPECT_EQ(s.count(Action::kExtract), 1);
  EXPECT_EQ(s.count(Action::kGenerate), 1);
  EXPECT_EQ(s.count(Action::kWriteThrough), 1);
}

TEST(MlpSchedule, WeightReuse) {
  const auto full = schedule_mlp({2, 2, 8, 8}, array(4, 4), {4, 0});
  EXPECT_EQ(full.count(Action::kLoadW), 2 * 2);
  // A single NT tile means even a one-chunk buffer loads each chunk once per (of, if).
  const auto one = schedule_mlp({2, 2, 8, 8}, array(4, 4), {4, 1});
  EXPECT_EQ(one.count(Action::kLoadW), 2 * 1 * 1 * 2);
  // Two NT tiles: a one-chunk buffer reloads every chunk per NT tile.
  const auto two_full = schedule_mlp({4, 2, 8, 8}, array(4, 4), {4, 0});
  EXPECT_EQ(two_full.count(Action::kLoadW), 4);
  const auto two_one = schedule_mlp({4, 2, 8, 8}, array(4, 4), {4, 1});
  EXPECT_EQ(two_one.count(Action::kLoadW), 8);
}

TEST(MlpSchedule, LoopOrderAndCoverage) {
  const auto s = schedule_mlp({5, 3, 10, 9}, array(4, 4), {3, 2});
  const auto& g = s.geometry;
  std::tuple<std::int64_t, std::int64_t, std::int64_t, std::int64_t> prev{-1, -1, -1, -1};
  std::set<std::tuple<std::int64_t, std::int64_t, std::int64_t, std::int64_t>> computed;
  std::set<std::tuple<std::int64_t, std::int64_t, std::int64_t>> extracted;
  for (const auto& st : s.steps) {
    if (st.action == Action::kCompute) {
      const auto key = std::make_tuple(st.of, st.n, st.t, st.in);
      EXPECT_LT(prev, key);
      prev = key;
      EXPECT_TRUE(computed.insert(key).second);
    }
    if (st.action == Action::kExtract) {
      EXPECT_TRUE(extracted.insert({st.of, st.n, st.t}).second);
    }
  }
  EXPECT_EQ(static_cast<std::int64_t>(computed.size()),
            g.tiles_of * g.tiles_n * g.tiles_t * g.tiles_if);
  EXPECT_EQ(static_cast<std::int64_t>(extracted.size()), g.tiles_of * g.tiles_n * g.tiles_t);
}

TEST(MlpSchedule, LoadOnlyOnMiss) {
  const auto s = schedule_mlp({4, 2, 8, 8}, array(4, 4), {4, 1});
  std::int64_t resident_of = -1, resident_in = -1;
  for (const auto& st : s.steps) {
    if (st.action == Action::kLoadW) {
      EXPECT_FALSE(st.of == resident_of && st.in == resident_in);
      if (resident_of >= 0) {
        EXPECT_EQ(st.evicted_of, resident_of);
        EXPECT_EQ(st.evicted_in, resident_in);
      }
      resident_of = st.of;
      resident_in = st.in;
    }
    if (st.action == Action::kCompute) {
      EXPECT_EQ(st.of, resident_of);
      EXPECT_EQ(st.in, resident_in);
    }
  }
}

TEST(PeArray, ClosedFormCycles) {
  SystolicPeArray grid(2, 2);
  IntMatrix w(2, 4, 1);
  BitMatrix s(2, 4);
  EXPECT_EQ(stream_mlp_tile(w, s, grid, quant()).cycles, 6);
  EXPECT_EQ(mlp_tile_cycles(4, 2, 2), 6);
}

TEST(PeArray, ZeroSpikesGiveZeroResults) {
  SystolicPeArray grid(3, 5);
  IntMatrix w(3, 7, 9);
  const auto r = stream_mlp_tile(w, BitMatrix(5, 7), grid, quant());
  EXPECT_EQ(r.x, IntMatrix(3, 5));
}

TEST(PeArray, MatchesDenseProduct) {
  synthetic::Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int H = static_cast<int>(synthetic::uniform(rng, 1, 6));
    const int W = static_cast<int>(synthetic::uniform(rng, 1, 6));
    const auto IF = synthetic::uniform(rng, 1, 12);
    IntMatrix w(H, IF);
    BitMatrix s(W, IF);
    for (int r = 0; r < H; ++r)
      for (std::int64_t k = 0; k < IF; ++k) w.at(r, k) = synthetic::uniform(rng, -128, 127);
    for (int c = 0; c < W; ++c)
      for (std::int64_t k = 0; k < IF; ++k) s.set(c, k, synthetic::uniform(rng, 0, 1) == 1);
    SystolicPeArray grid(H, W);
    const auto r = stream_mlp_tile(w, s, grid, quant());
    EXPECT_EQ(r.cycles, mlp_tile_cycles(IF, H, W));
    for (int i = 0; i < H; ++i)
      for (int c = 0; c < W; ++c) {
        std::int64_t x = 0;
        for (std::int64_t k = 0; k < IF; ++k) x += w.at(i, k) * s.at(c, k);
        EXPECT_EQ(r.x.at(i, c), x);
      }
  }
}

TEST(PeArray, OverflowReportsPe) {
  SystolicPeArray grid(1, 1);
  IntMatrix w(1, 3, 100);
  BitMatrix s(1, 3);
  for (int k = 0; k < 3; ++k) s.set(0, k, true);
  try {
    grid.stream(w, s, quant(8, 8));
    FAIL();
  } catch (const BitwidthError& e) {
    EXPECT_EQ(e.coordinate("feature"), 1);
  }
}

TEST(SpikeGenerators, ExtractionCycles) {
  IntMatrix x(2, 128);
  SpikeGeneratorBank bank(2, 128, {1, 0}, quant());
  std::vector<ColumnLane> lanes(128);
  for (int c = 0; c < 128; ++c) lanes[c] = {true, c, c, 0};
  EXPECT_EQ(extract_and_generate(x, bank, lanes, {2, 0}, array(2, 128)).extract_cycles, 1);
  EXPECT_EQ(extract_and_generate(x, bank, lanes, {2, 0},
                                 array(2, 128, ExtractionMode::kSerial2D))
                .extract_cycles,
            128);
}

TEST(SpikeGenerators, OneSupraThresholdLane) {
  IntMatrix x(2, 3);
  x.at(1, 2) = 9;
  x.at(0, 0) = 3;
  SpikeGeneratorBank bank(2, 3, {4, 0}, quant());
  std::vector<ColumnLane> lanes{{true, 0, 0, 0}, {true, 1, 1, 0}, {true, 2, 2, 0}};
  const auto r = extract_and_generate(x, bank, lanes, {2, 0}, array(2, 3));
  EXPECT_EQ(r.spikes.at(1, 2), 1);
  EXPECT_EQ(r.spikes.at(0, 0), 0);
  EXPECT_EQ(bank.membrane(1, 2), 0);
  EXPECT_EQ(bank.membrane(0, 0), 3);
}

TEST(MlpRun, MatchesGoldenAndOracle) {
  synthetic::Rng rng(11);
  for (int trial = 0; trial < 150; ++trial) {
    const auto N = synthetic::uniform(rng, 1, 8), T = synthetic::uniform(rng, 1, 8);
    const auto I = synthetic::uniform(rng, 1, 8), O = synthetic::uniform(rng, 1, 8);
    const auto a = array(static_cast<int>(synthetic::uniform(rng, 1, 5)),
                         static_cast<int>(synthetic::uniform(rng, 1, 9)));
    const NeuronParams p{synthetic::uniform(rng, 1, 80), synthetic::uniform(rng, 0, 3)};
    const MlpRunOptions o{synthetic::uniform(rng, 1, I), synthetic::uniform(rng, 0, 3),
                          synthetic::uniform(rng, 0, 1) == 1};
    const auto s = synthetic::random_spikes(rng, N, T, I);
    const auto w = synthetic::random_weights(rng, I, O, 8);
    const auto r = run(s, w, p, quant(), a, o);
    ASSERT_EQ(r.spikes, golden_mlp_layer(s, w, p, quant()).spikes) << "trial " << trial;
    ASSERT_EQ(r.spikes, oracle::mlp(s, w, {p.v_th, p.v_leak})) << "trial " << trial;
    EXPECT_EQ(r.stats.total_cycles, r.stats.phases.total());
  }
}

TEST(MlpRun, SaturateMatchesGoldenBitForBit) {
  synthetic::Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    auto q = quant(8, 9);
    q.overflow = OverflowMode::kSaturate;
    const auto s = synthetic::random_spikes(rng, 3, 3, 12, 0.8);
    const auto w = synthetic::random_weights(rng, 12, 5, 8);
    const NeuronParams p{100, 1};
    EXPECT_EQ(run(s, w, p, q, array(2, 4), {4, 0, false}).spikes,
              golden_mlp_layer(s, w, p, q).spikes);
  }
}

TEST(MlpRun, StrictOverflowThrows) {
  WeightMatrix w(4, 1, 8, {127, 127, 127, 127});
  SpikeTensor s(1, 1, 4, {1, 1, 1, 1});
  EXPECT_THROW(run(s, w, {1000, 0}, quant(8, 9), array(2, 2)), BitwidthError);
  EXPECT_THROW(golden_mlp_layer(s, w, {1000, 0}, quant(8, 9)), BitwidthError);
}

TEST(MlpRun, DoublingTKeepsWeightLoads) {
  synthetic::Rng rng(17);
  const auto w = synthetic::random_weights(rng, 32, 16, 8);
  const auto a = array(8, 8);
  const auto r1 = run(synthetic::random_spikes(rng, 4, 4, 32), w, {20, 1}, quant(), a, {8, 0});
  const auto r2 = run(synthetic::random_spikes(rng, 4, 8, 32), w, {20, 1}, quant(), a, {8, 0});
  EXPECT_EQ(r1.stats.count(Action::kLoadW), 2 * 4);
  EXPECT_EQ(r2.stats.count(Action::kLoadW), r1.stats.count(Action::kLoadW));
}

TEST(MlpRun, ZeroWeightsTakeTheSameCycles) {
  synthetic::Rng rng(19);
  const auto s = synthetic::random_spikes(rng, 3, 3, 10);
  const auto w = synthetic::random_weights(rng, 10, 6, 8);
  const WeightMatrix zero(10, 6, 8);
  const auto a = run(s, w, {5, 0}, quant(), array(4, 4), {4, 0});
  const auto b = run(s, zero, {5, 0}, quant(), array(4, 4), {4, 0});
  EXPECT_EQ(b.spikes.count_ones(), 0);
  EXPECT_EQ(a.stats.total_cycles, b.stats.total_cycles);
  EXPECT_EQ(a.stats.phases, b.stats.phases);
}

TEST(MlpRun, TileCyclesMatchClosedForm) {
  synthetic::Rng rng(23);
  const auto s = synthetic::random_spikes(rng, 4, 2, 20);
  const auto w = synthetic::random_weights(rng, 20, 8, 8);
  const auto r = run(s, w, {5, 0}, quant(), array(4, 8), {6, 0});
  std::int64_t compute = 0;
  std::int64_t tiles = 0;
  for (const auto& rec : r.trace.records()) {
    if (rec.action == Action::kCompute || rec.action == Action::kDrain) compute += rec.cycles;
    if (rec.action == Action::kDrain) ++tiles;
  }
  EXPECT_EQ(compute, tiles * mlp_tile_cycles(20, 4, 8));
}

TEST(MlpRun, SerialExtractionCostsColumns) {
  synthetic::Rng rng(29);
  const auto s = synthetic::random_spikes(rng, 4, 4, 8);
  const auto w = synthetic::random_weights(rng, 8, 4, 8);
  const auto p = run(s, w, {5, 0}, quant(), array(4, 16));
  const auto q = run(s, w, {5, 0}, quant(), array(4, 16, ExtractionMode::kSerial2D));
  EXPECT_EQ(p.spikes, q.spikes);
  EXPECT_EQ(p.stats.phases.extract, 1);
  EXPECT_EQ(q.stats.phases.extract, 16);
}

TEST(MlpRun, PrefetchHidesLoadsOnly) {
  synthetic::Rng rng(31);
  const auto s = synthetic::random_spikes(rng, 8, 4, 32);
  const auto w = synthetic::random_weights(rng, 32, 16, 8);
  const auto base = run(s, w, {5, 0}, quant(), array(4, 8), {8, 0, false});
  const auto pre = run(s, w, {5, 0}, quant(), array(4, 8), {8, 0, true});
  EXPECT_EQ(base.spikes, pre.spikes);
  EXPECT_LT(pre.stats.phases.load, base.stats.phases.load);
  EXPECT_EQ(pre.stats.phases.compute, base.stats.phases.compute);
  EXPECT_EQ(pre.stats.counters, base.stats.counters);
}

TEST(MlpRun, TraceCountersAgreeWithHierarchy) {
  synthetic::Rng rng(37);
  const auto s = synthetic::random_spikes(rng, 4, 4, 16);
  const auto w = synthetic::random_weights(rng, 16, 8, 8);
  mem::MemoryHierarchy m;
  const auto r = run_mlp_layer(s, w, {5, 0}, quant(), array(4, 8), {8, 0}, m);
  EXPECT_EQ(r.stats.counters, m.counters());
  EXPECT_EQ(report::RunStats::from_trace(r.trace), r.stats);
  EXPECT_GT(r.stats.counters[mem::Endpoint::kActGlb1].write_words, 0);
  EXPECT_EQ(m.occupancy(mem::Endpoint::kWBuf), 0);
}

TEST(MlpRun, Deterministic) {
  synthetic::Rng rng(41);
  const auto s = synthetic::random_spikes(rng, 4, 4, 16);
  const auto w = synthetic::random_weights(rng, 16, 8, 8);
  const auto a = run(s, w, {5, 0}, quant(), array(4, 8), {8, 1});
  const auto b = run(s, w, {5, 0}, quant(), array(4, 8), {8, 1});
  EXPECT_EQ(a.trace.to_csv(), b.trace.to_csv());
  EXPECT_EQ(a.stats, b.stats);
}

TEST(MlpRun, CapacityViolation) {
  const WeightMatrix w(64, 64, 8);
  const SpikeTensor s(1, 1, 64);
  mem::BufferConfig small = mem::BufferConfig::defaults();
  small[mem::Endpoint::kWBuf].depth = 4;
  mem::MemoryHierarchy m(small);
  EXPECT_THROW(run_mlp_layer(s, w, {5, 0}, quant(), array(16, 16), {16, 0}, m),
               mem::CapacityError);
}

TEST(MlpChain, MatchesGoldenChain) {
  synthetic::Rng rng(43);
  const auto s = synthetic::random_spikes(rng, 3, 4, 12);
  std::vector<WeightMatrix> layers{synthetic::random_weights(rng, 12, 9, 8),
                                   synthetic::random_weights(rng, 9, 7, 8),
                                   synthetic::random_weights(rng, 7, 5, 8)};
  mem::MemoryHierarchy m;
  const auto r = run_mlp_chain(s, layers, {10, 1}, quant(), array(4, 8), {4, 0}, m);
  SpikeTensor ref = s;
  for (const auto& w : layers) ref = golden_mlp_layer(ref, w, {10, 1}, quant()).spikes;
  EXPECT_EQ(r.spikes, ref);
  // The middle layer reads from Act GLB1 and writes to Act GLB0.
  EXPECT_GT(r.stats.counters[mem::Endpoint::kActGlb1].read_words, 0);
  EXPECT_EQ(m.occupancy(mem::Endpoint::kWGlb), 0);
}
