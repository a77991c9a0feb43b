#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "spikesim/memory.hpp"
#include "spikesim/presets.hpp"
#include "spikesim/trace.hpp"

using namespace spikesim;
using namespace spikesim::mem;

TEST(Buffers, Defaults) {
  const auto c = BufferConfig::defaults();
  EXPECT_EQ(c[Endpoint::kActGlb0].depth, 3072);
  EXPECT_EQ(c[Endpoint::kWGlb].word_bits, 128);
  EXPECT_EQ(c[Endpoint::kXGlb].capacity_bits(), 3072 * 128);
  EXPECT_EQ(c[Endpoint::kActBuf].depth, 96);
  EXPECT_EQ(c[Endpoint::kXBuf].word_bits, 256);
  EXPECT_EQ(c[Endpoint::kQBuf].tier, Tier::kBottom);
  EXPECT_EQ(c[Endpoint::kXGlb].tier, Tier::kTop);
}

TEST(Buffers, WordGranularity) {
  MemoryHierarchy m;
  auto w = m.transfer(Endpoint::kActGlb0, Endpoint::kActBuf, 128);
  EXPECT_EQ(w.src_words, 1);
  EXPECT_EQ(w.dst_words, 1);
  w = m.transfer(Endpoint::kWGlb, Endpoint::kWBuf, 16 * 8);
  EXPECT_EQ(w.dst_words, 1);
  w = m.transfer(Endpoint::kWGlb, Endpoint::kWBuf, 129);
  EXPECT_EQ(w.dst_words, 2);
  // 256-bit X buffer words halve the count on that side.
  w = m.transfer(Endpoint::kXGlb, Endpoint::kXBuf, 512);
  EXPECT_EQ(w.src_words, 4);
  EXPECT_EQ(w.dst_words, 2);
}

TEST(Buffers, CountsReadsWritesAndEvents) {
  MemoryHierarchy m;
  m.transfer(Endpoint::kHost, Endpoint::kActGlb0, 1024);
  m.transfer(Endpoint::kActGlb0, Endpoint::kActBuf, 256);
  m.transfer(Endpoint::kActBuf, Endpoint::kPeArray, 256);
  const auto& c = m.counters();
  EXPECT_EQ(c[Endpoint::kActGlb0].write_words, 8);
  EXPECT_EQ(c[Endpoint::kActGlb0].read_words, 2);
  EXPECT_EQ(c[Endpoint::kActGlb0].events(), 2);
  EXPECT_EQ(c[Endpoint::kActBuf].write_words, 2);
  EXPECT_EQ(c[Endpoint::kActBuf].read_words, 2);
  EXPECT_EQ(c.total_events(), 4);
  m.reset();
  EXPECT_EQ(m.counters().total_events(), 0);
  EXPECT_EQ(m.occupancy(Endpoint::kActGlb0), 0);
}

TEST(Buffers, CapacityError) {
  MemoryHierarchy m;
  m.transfer(Endpoint::kWGlb, Endpoint::kWBuf, 90 * 128);
  try {
    m.transfer(Endpoint::kWGlb, Endpoint::kWBuf, 7 * 128);
    FAIL();
  } catch (const CapacityError& e) {
    EXPECT_EQ(e.buffer(), Endpoint::kWBuf);
    EXPECT_EQ(e.requested_words(), 7);
    EXPECT_EQ(e.free_words(), 6);
    EXPECT_NE(std::string(e.what()).find("w_buf"), std::string::npos);
  }
  EXPECT_THROW(m.transfer(Endpoint::kWGlb, Endpoint::kActBuf, 97 * 128), CapacityError);
  m.release(Endpoint::kWBuf, 90);
  EXPECT_NO_THROW(m.transfer(Endpoint::kWGlb, Endpoint::kWBuf, 96 * 128));
  EXPECT_EQ(m.peak_occupancy(Endpoint::kWBuf), 96);
  EXPECT_THROW(m.release(Endpoint::kWBuf, 97), InternalError);
}

TEST(Buffers, OverwriteDoesNotAllocate) {
  MemoryHierarchy m;
  m.transfer(Endpoint::kZeroFill, Endpoint::kXGlb, 3072 * 128);
  EXPECT_EQ(m.free_words(Endpoint::kXGlb), 0);
  EXPECT_NO_THROW(
      m.transfer(Endpoint::kXBuf, Endpoint::kXGlb, 1024, Placement::kOverwrite));
  EXPECT_EQ(m.counters()[Endpoint::kXGlb].write_words, 3072 + 8);
}

TEST(Buffers, EndpointNames) {
  for (std::size_t i = 0; i < kNumEndpoints; ++i) {
    const auto e = static_cast<Endpoint>(i);
    EXPECT_EQ(parse_endpoint(name(e)), e);
  }
  EXPECT_THROW(parse_endpoint("l2"), ConfigError);
}

TEST(Presets, TableValues) {
  const auto& t = PresetTable::embedded();
  const auto& mlp3 = t.lookup({Design::k3D, Workload::kMlp, 16, 128, PresetBitwidths{8, 16}});
  EXPECT_DOUBLE_EQ(mlp3.effective_freq_ghz, 1.68);
  EXPECT_DOUBLE_EQ(mlp3.total_power_mw, 476.1);
  EXPECT_DOUBLE_EQ(mlp3.mem_access_latency_ps, 26);
  EXPECT_DOUBLE_EQ(mlp3.mem_access_power_mw, 1.27);

  const auto& att2 = t.lookup({Design::k2D, Workload::kAttention, 16, 16, std::nullopt});
  EXPECT_DOUBLE_EQ(att2.effective_freq_ghz, 1.58);
  EXPECT_DOUBLE_EQ(att2.mem_access_latency_ps, 388);
  EXPECT_DOUBLE_EQ(att2.mem_access_power_mw, 3.22);
  EXPECT_FALSE(att2.w_glb.has_value());

  const auto& low = t.lookup({Design::k3D, Workload::kMlp, 64, 16, PresetBitwidths{4, 12}});
  ASSERT_TRUE(low.w_glb && low.act_buf);
  EXPECT_DOUBLE_EQ(low.w_glb->latency_ps, 42);
  EXPECT_DOUBLE_EQ(low.act_buf->power_mw, 0.24);
  EXPECT_EQ(low.key(), "3d/mlp/64x16/4b-12b");
}

TEST(Presets, LookupErrors) {
  const auto& t = PresetTable::embedded();
  EXPECT_THROW(t.lookup({Design::k3D, Workload::kMlp, 32, 32, std::nullopt}), PresetNotFound);
  // Two bitwidth variants exist at 64x16.
  EXPECT_THROW(t.lookup({Design::k3D, Workload::kMlp, 64, 16, std::nullopt}), PresetNotFound);
  EXPECT_THROW(t.lookup({Design::k3D, Workload::kMlp, 16, 128, PresetBitwidths{4, 12}}),
               PresetNotFound);
}

TEST(Presets, DataFileMatchesEmbeddedTable) {
  const auto file = PresetTable::load(SPIKESIM_SOURCE_DIR "/core/data/presets.tsv");
  EXPECT_EQ(file, PresetTable::embedded());
  EXPECT_EQ(file.checksum(), PresetTable::embedded().checksum());
  EXPECT_EQ(file.rows().size(), 10u);
}

TEST(Presets, SerializeRoundTrip) {
  const auto& t = PresetTable::embedded();
  std::istringstream in(t.serialize());
  EXPECT_EQ(PresetTable::parse(in), t);
}

TEST(Presets, ParseErrorsCarryLineNumbers) {
  std::istringstream in("# header\n2d mlp 16x128 8b/16b 1.57\n");
  try {
    PresetTable::parse(in);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
  }
}

TEST(Presets, EnvironmentOverride) {
  const std::string path = ::testing::TempDir() + "/presets_override.tsv";
  {
    std::ofstream out(path);
    out << "3d attention 16x16 - 2.00 1 1 1 3 50 1.0 - - - - - - - -\n";
  }
  ::setenv(kPresetPathEnv, path.c_str(), 1);
  const auto t = PresetTable::from_environment();
  ::unsetenv(kPresetPathEnv);
  ASSERT_EQ(t.rows().size(), 1u);
  EXPECT_DOUBLE_EQ(t.rows()[0].effective_freq_ghz, 2.0);
  EXPECT_EQ(PresetTable::from_environment(), PresetTable::embedded());
}

TEST(Trace, CsvRoundTrip) {
  Trace t(TraceHeader{Workload::kAttention, 16, 8});
  TraceRecord r;
  r.action = Action::kLoadKV;
  r.tile = {1, 0, 2, -1};
  r.cycles = 4;
  r.src = Endpoint::kActGlb0;
  r.dst = Endpoint::kKvBuf;
  r.src_words = 4;
  r.dst_words = 4;
  t.append(r);
  r = TraceRecord{};
  r.action = Action::kMode1;
  r.cycles = 46;
  r.active_pe_cycles = 100;
  r.mapped_pe_cycles = 128;
  r.resident = 128;
  t.append(r);
  EXPECT_EQ(t.records()[1].step, 1);
  std::istringstream in(t.to_csv());
  EXPECT_EQ(Trace::read_csv(in), t);
  EXPECT_EQ(t.count(Action::kMode1), 1);
}

TEST(Trace, MalformedCsvIsRejected) {
  std::istringstream bad_action(
      "# spikesim-trace v1\n# workload=mlp\n# array=4x4\n"
      "step,action,i0,i1,i2,i3,cycles,src,dst,src_words,dst_words,active_pe_cycles,"
      "mapped_pe_cycles,resident\n"
      "0,teleport,0,0,0,0,1,-,-,0,0,0,0,0\n");
  EXPECT_THROW(Trace::read_csv(bad_action), ConfigError);
  std::istringstream short_row(
      "# spikesim-trace v1\n# workload=mlp\n# array=4x4\n"
      "step,action,i0,i1,i2,i3,cycles,src,dst,src_words,dst_words,active_pe_cycles,"
      "mapped_pe_cycles,resident\n"
      "0,compute,0,0\n");
  EXPECT_THROW(Trace::read_csv(short_row), ConfigError);
}

TEST(Trace, PhaseMapping) {
  EXPECT_EQ(phase_of(Action::kLoadW), Phase::kLoad);
  EXPECT_EQ(phase_of(Action::kInitX), Phase::kLoad);
  EXPECT_EQ(phase_of(Action::kDrain), Phase::kCompute);
  EXPECT_EQ(phase_of(Action::kModeSwitch), Phase::kCompute);
  EXPECT_EQ(phase_of(Action::kExtractX), Phase::kExtract);
  EXPECT_EQ(phase_of(Action::kWriteThrough), Phase::kGenerate);
  for (std::size_t i = 0; i < kNumActions; ++i) {
    const auto a = static_cast<Action>(i);
    EXPECT_EQ(parse_action(to_string(a)), a);
  }
}
