// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "cli/commands.hpp"
#include "cli/config.hpp"
#include "oracle.hpp"
#include "spikesim/attn_array.hpp"
#include "spikesim/cost_report.hpp"
#include "spikesim/mlp_array.hpp"
#include "spikesim/snn_core.hpp"
#include "spikesim/synthetic.hpp"

using namespace spikesim;
using synthetic::uniform;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(std::string why) {
    if (pass) detail = std::move(why);
    pass = false;
  }
};

struct Criterion {
  int id;
  std::string name;
  std::optional<double> limit_s;
  std::function<Outcome()> check;
};

// 1: systolic MLP == golden == brute force.
Outcome mlp_equivalence() {
  Outcome o;
  synthetic::Rng rng(1001);
  for (int trial = 0; trial < 1000 && o.pass; ++trial) {
    const mlp::MlpDims dims{uniform(rng, 1, 4), uniform(rng, 1, 4), uniform(rng, 1, 16),
                            uniform(rng, 1, 16)};
    const int bw = uniform(rng, 0, 1) == 0 ? 4 : 8;
    mlp::ArrayConfig array{static_cast<int>(uniform(rng, 1, 8)),
                           static_cast<int>(uniform(rng, 1, 16))};
    array.extraction =
        uniform(rng, 0, 1) == 0 ? mlp::ExtractionMode::kParallel3D : mlp::ExtractionMode::kSerial2D;
    const mlp::MlpRunOptions run{uniform(rng, 1, dims.in_features), uniform(rng, 0, 2),
                                 uniform(rng, 0, 1) == 1};
    QuantSpec quant;
    quant.weight_bits = bw;
    quant.integration_bits = 24;
    const NeuronParams p{uniform(rng, 1, std::int64_t{1} << bw), uniform(rng, 0, 3)};
    const auto s = synthetic::random_spikes(rng, dims.tokens, dims.timesteps, dims.in_features,
                                            synthetic::unit(rng));
    const auto w = synthetic::random_weights(rng, dims.in_features, dims.out_features, bw);

    mem::MemoryHierarchy m;
    const auto sim = mlp::run_mlp_layer(s, w, p, quant, array, run, m).spikes;
    if (sim != golden_mlp_layer(s, w, p, quant).spikes) {
      o.fail(fmt::format("trial {}: systolic differs from golden", trial));
    } else if (sim != oracle::mlp(s, w, {p.v_th, p.v_leak})) {
      o.fail(fmt::format("trial {}: systolic differs from brute force", trial));
    }
  }
  if (o.pass) o.detail = "1000/1000 bit-identical";
  return o;
}

// 2: fused attention == unfused oracle == golden.
Outcome attention_equivalence() {
  Outcome o;
  synthetic::Rng rng(2002);
  for (int trial = 0; trial < 1000 && o.pass; ++trial) {
    const HeadShape shape{uniform(rng, 1, 2), uniform(rng, 1, 8), uniform(rng, 1, 2),
                          uniform(rng, 1, 8)};
    const mlp::ArrayConfig array{static_cast<int>(uniform(rng, 1, 8)),
                                 static_cast<int>(uniform(rng, 1, 8))};
    const attn::AttnTiles tiles{uniform(rng, 1, array.rows), uniform(rng, 1, array.cols),
                                uniform(rng, 0, 1) == 1};
    QuantSpec quant;
    quant.attention_bits = bitwidth_requirements(shape).attention_bits;
    quant.integration_bits = 24;
    const NeuronParams p{uniform(rng, 1, 2 * shape.tokens * shape.head_dim), uniform(rng, 0, 2)};
    const auto D = shape.model_dim();
    const double rate = synthetic::unit(rng);
    const auto q = synthetic::random_spikes(rng, shape.tokens, shape.timesteps, D, rate);
    const auto k = synthetic::random_spikes(rng, shape.tokens, shape.timesteps, D, rate);
    const auto v = synthetic::random_spikes(rng, shape.tokens, shape.timesteps, D, rate);

    mem::MemoryHierarchy m;
    const auto fused =
        attn::run_attention_layer(q, k, v, shape, p, quant, array, {tiles, uniform(rng, 0, 1) == 1}, m)
            .spikes;
    if (fused != oracle::attention(q, k, v, shape.heads, shape.head_dim, {p.v_th, p.v_leak})) {
      o.fail(fmt::format("trial {}: fused differs from unfused oracle", trial));
    } else if (fused != golden_attention_layer(q, k, v, shape, p, quant).spikes) {
      o.fail(fmt::format("trial {}: fused differs from golden", trial));
    }
  }
  if (o.pass) o.detail = "1000/1000 bit-identical";
  return o;
}

// 3: derived widths hold the all-ones worst case; one bit less does not.
Outcome bitwidth_sufficiency() {
  Outcome o;
  int shapes = 0;
  const mlp::ArrayConfig array{16, 16};
  const attn::AttnTiles tiles{16, 16, false};
  for (std::int64_t d = 1; d <= 64 && o.pass; d *= 2) {
    for (std::int64_t N = 1; N <= 128 && o.pass; N *= 2) {
      ++shapes;
      const HeadShape shape{1, N, 1, d};
      const SpikeTensor ones(N, 1, d, std::vector<std::uint8_t>(static_cast<std::size_t>(N * d), 1));
      const auto need = bitwidth_requirements(shape);
      const NeuronParams p{N * d, 0};
      QuantSpec quant;
      quant.attention_bits = need.attention_bits;
      quant.integration_bits = need.integration_bits;
      const auto fused = [&](const QuantSpec& qs) {
        mem::MemoryHierarchy m;
        attn::run_attention_layer(ones, ones, ones, shape, p, qs, array, {tiles, false}, m);
      };
      const auto overflows = [](const std::function<void()>& f) {
        try {
          f();
        } catch (const BitwidthError&) {
          return true;
        }
        return false;
      };
      const auto where = fmt::format("d={} N={}", d, N);
      if (overflows([&] { golden_attention_layer(ones, ones, ones, shape, p, quant); }) ||
          overflows([&] { fused(quant); })) {
        o.fail(where + ": overflow at the derived widths");
        break;
      }
      auto narrow_x = quant;
      narrow_x.integration_bits -= 1;
      if (!overflows([&] { fused(narrow_x); }) ||
          !overflows([&] { golden_attention_layer(ones, ones, ones, shape, p, narrow_x); })) {
        o.fail(where + ": b_x - 1 did not overflow");
        break;
      }
      auto narrow_a = quant;
      narrow_a.attention_bits -= 1;
      bool a_overflow = false;
      if (narrow_a.attention_bits >= 1) {
        a_overflow = overflows([&] { fused(narrow_a); });
      } else {
        // A zero-bit score register cannot be configured; drive the array
        // directly.
        attn::ReconfigurableArray grid(array.rows, array.cols);
        const auto q = ones.slice(0, 0, d);
        const auto tile = std::min<std::int64_t>(N, 16);
        BitMatrix qt(tile, d);
        for (std::int64_t r = 0; r < tile; ++r)
          for (std::int64_t f = 0; f < d; ++f) qt.set(r, f, q.at(r, f) != 0);
        a_overflow = overflows([&] { grid.mode1(qt, qt, narrow_a); });
      }
      if (!a_overflow) {
        o.fail(where + ": b_a - 1 did not overflow");
        break;
      }
    }
  }
  if (o.pass) o.detail = fmt::format("{} (d, N) shapes", shapes);
  return o;
}

// 4: preset-derived reductions.
Outcome preset_ratios() {
  Outcome o;
  const auto& table = mem::PresetTable::embedded();
  const auto cmp = [&](Workload w, int rows, int cols) {
    report::RunStats s;
    s.workload = w;
    s.rows = rows;
    s.cols = cols;
    s.total_cycles = 1000;
    s.phases.compute = 1000;
    return report::compare(report::aggregate(s, table.lookup({Design::k2D, w, rows, cols, {}})),
                           report::aggregate(s, table.lookup({Design::k3D, w, rows, cols, {}})));
  };
  const auto mlp = cmp(Workload::kMlp, 16, 128);
  const auto att = cmp(Workload::kAttention, 16, 16);
  const struct {
    const char* what;
    double got;
    double want;
  } checks[] = {
      {"MLP memory latency reduction", mlp.mem_latency_reduction_pct, 68.3},
      {"MLP memory power reduction", mlp.mem_power_reduction_pct, 69.5},
      {"attention memory latency reduction", att.mem_latency_reduction_pct, 74.2},
      {"attention memory power reduction", att.mem_power_reduction_pct, 49.3},
      {"MLP frequency gain", mlp.freq_gain_pct, 7.0},
      {"attention frequency gain", att.freq_gain_pct, 6.3},
  };
  std::string got;
  for (const auto& c : checks) {
    got += fmt::format("{}{:.2f}", got.empty() ? "" : " / ", c.got);
    if (std::abs(c.got - c.want) > 0.1 + 1e-9) {
      o.fail(fmt::format("{}: {:.3f} vs {:.1f}", c.what, c.got, c.want));
    }
  }
  if (o.pass) o.detail = got;
  return o;
}

// 5: W GLB chunk loads depend only on D with full-row residency.
Outcome weight_reuse() {
  Outcome o;
  synthetic::Rng rng(5005);
  const mlp::ArrayConfig array{4, 8};
  const std::int64_t in = 32, out = 8, if_tile = 8;
  const auto w = synthetic::random_weights(rng, in, out, 8);
  QuantSpec quant;
  quant.integration_bits = 24;
  const auto loads = [&](std::int64_t N, std::int64_t T, std::int64_t chunks) {
    const auto s = synthetic::random_spikes(rng, N, T, in);
    mem::MemoryHierarchy m;
    const auto r = mlp::run_mlp_layer(s, w, {20, 1}, quant, array, {if_tile, chunks, false}, m);
    const auto g = mlp::tile_geometry({N, T, in, out}, array, if_tile);
    return std::make_pair(r.stats.count(Action::kLoadW), g);
  };
  int cases = 0;
  for (const auto& [N, T] : std::vector<std::pair<std::int64_t, std::int64_t>>{
           {1, 1}, {2, 2}, {4, 2}, {3, 4}, {8, 1}, {5, 3}}) {
    const auto [base, g] = loads(N, T, 0);
    const auto expect = g.tiles_of * g.tiles_if;
    const auto [dn, gn] = loads(2 * N, T, 0);
    const auto [dt, gt] = loads(N, 2 * T, 0);
    const auto where = fmt::format("N={} T={}", N, T);
    if (base != expect || dn != expect || dt != expect) {
      o.fail(fmt::format("{}: full-row loads {} / {} / {} vs {}", where, base, dn, dt, expect));
      break;
    }
    for (const auto& [NN, TT, geo] : {std::tuple{N, T, g}, std::tuple{2 * N, T, gn},
                                      std::tuple{N, 2 * T, gt}}) {
      const auto one = loads(NN, TT, 1).first;
      if (one != expect * geo.tiles_n * geo.tiles_t) {
        o.fail(fmt::format("N={} T={}: one-chunk loads {} vs {}", NN, TT, one,
                           expect * geo.tiles_n * geo.tiles_t));
        break;
      }
      ++cases;
    }
    if (!o.pass) break;
  }
  if (o.pass) o.detail = fmt::format("{} shapes, loads fixed at tiles_of x tiles_if", cases);
  return o;
}

// 6: peak attention residency is one tile.
Outcome residency_bound() {
  Outcome o;
  synthetic::Rng rng(6006);
  int runs = 0;
  for (const auto [nq, nk] : {std::pair<std::int64_t, std::int64_t>{16, 16}, {8, 16}, {16, 4}}) {
    for (std::int64_t N = 8; N <= 128; N *= 2) {
      const HeadShape shape{1, N, 1, 8};
      const auto q = synthetic::random_spikes(rng, N, 1, 8);
      const auto k = synthetic::random_spikes(rng, N, 1, 8);
      const auto v = synthetic::random_spikes(rng, N, 1, 8);
      QuantSpec quant;
      quant.attention_bits = 4;
      quant.integration_bits = 16;
      mem::MemoryHierarchy m;
      const auto r = attn::run_attention_layer(q, k, v, shape, {4, 0}, quant, {16, 16},
                                               {{nq, nk, false}, false}, m);
      const auto expect = std::min(nq, N) * std::min(nk, N);
      ++runs;
      if (r.stats.peak_attention_residency != expect) {
        o.fail(fmt::format("N={} tile {}x{}: peak {} vs {}", N, nq, nk,
                           r.stats.peak_attention_residency, expect));
        break;
      }
    }
    if (!o.pass) break;
  }
  if (o.pass) o.detail = fmt::format("{} runs, N up to 128", runs);
  return o;
}

// 7: identical config and seed give identical bytes.
Outcome determinism() {
  Outcome o;
  int configs = 0;
  const auto dir = std::filesystem::path(SPIKESIM_SOURCE_DIR) / "configs";
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    const auto once = [&] {
      const auto c = cli::load_config(path);
      const auto sim = cli::simulate(c, cli::make_inputs(c));
      const auto presets = cli::load_presets(c);
      const auto rep =
          report::aggregate(sim.stats, presets.lookup(cli::preset_key(c, c.design)), c.energy);
      return std::make_pair(sim.trace.to_csv(), report::to_text(rep));
    };
    const auto a = once();
    const auto b = once();
    ++configs;
    if (a.first != b.first) o.fail(path.filename().string() + ": traces differ");
    if (a.second != b.second) o.fail(path.filename().string() + ": reports differ");
  }
  if (o.pass) o.detail = fmt::format("{} configs, traces and reports byte-identical", configs);
  return o;
}

// 8: event-driven cycle counts match the closed forms.
Outcome cycle_model() {
  Outcome o;
  synthetic::Rng rng(8008);
  QuantSpec quant;
  quant.attention_bits = 8;
  quant.integration_bits = 24;
  for (int shape = 0; shape < 50 && o.pass; ++shape) {
    const int H = static_cast<int>(uniform(rng, 1, 16));
    const int W = static_cast<int>(uniform(rng, 1, 32));
    const auto IF = uniform(rng, 1, 32);
    IntMatrix w(H, IF);
    for (std::int64_t r = 0; r < H; ++r)
      for (std::int64_t k = 0; k < IF; ++k) w.at(r, k) = uniform(rng, -8, 7);
    BitMatrix s(W, IF);
    for (std::int64_t c = 0; c < W; ++c)
      for (std::int64_t k = 0; k < IF; ++k) s.set(c, k, uniform(rng, 0, 1) == 1);
    mlp::SystolicPeArray pe(H, W);
    const auto mlp_cycles = mlp::stream_mlp_tile(w, s, pe, quant).cycles;
    if (mlp_cycles != mlp::mlp_tile_cycles(IF, H, W)) {
      o.fail(fmt::format("MLP {}x{} IF={}: {} vs {}", H, W, IF, mlp_cycles,
                         mlp::mlp_tile_cycles(IF, H, W)));
      break;
    }

    const auto rows = static_cast<int>(uniform(rng, 1, 16));
    const auto cols = static_cast<int>(uniform(rng, 1, 16));
    const auto nq = uniform(rng, 1, rows), nk = uniform(rng, 1, cols), d = uniform(rng, 1, 16);
    BitMatrix q(nq, d), k(nk, d), v(nk, d);
    for (std::int64_t f = 0; f < d; ++f) {
      for (std::int64_t r = 0; r < nq; ++r) q.set(r, f, uniform(rng, 0, 1) == 1);
      for (std::int64_t c = 0; c < nk; ++c) {
        k.set(c, f, uniform(rng, 0, 1) == 1);
        v.set(c, f, uniform(rng, 0, 1) == 1);
      }
    }
    attn::ReconfigurableArray grid(rows, cols);
    const auto c1 = attn::mode1_compute(q, k, grid, quant).cycles;
    const auto c2 = attn::mode2_compute(v, IntMatrix(nq, d), grid, quant).cycles;
    const auto expect = attn::attn_pass_cycles(d, nq, nk);
    if (c1 != expect || c2 != expect) {
      o.fail(fmt::format("attention {}x{} d={}: mode1 {} mode2 {} vs {}", nq, nk, d, c1, c2,
                         expect));
    }
  }
  if (o.pass) o.detail = "50 MLP tiles and 50 attention tiles";
  return o;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "MLP golden-oracle equivalence", 60.0, mlp_equivalence},
      {2, "fused attention equivalence", 60.0, attention_equivalence},
      {3, "bitwidth sufficiency", 10.0, bitwidth_sufficiency},
      {4, "preset ratio reproduction", 1.0, preset_ratios},
      {5, "weight-reuse invariant", 10.0, weight_reuse},
      {6, "kernel-fusion storage bound", 10.0, residency_bound},
      {7, "determinism", std::nullopt, determinism},
      {8, "cycle-model self-consistency", 10.0, cycle_model},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o.fail(fmt::format("exception: {}", e.what()));
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_s && secs > *c.limit_s) {
      o.fail(fmt::format("took {:.2f} s, limit {:.0f} s", secs, *c.limit_s));
    }
    if (!o.pass) ++failed;
    fmt::print("{} criterion {}: {} ({:.2f} s) {}\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs,
               o.detail);
    std::fflush(stdout);
  }
  fmt::print("{}/{} criteria passed\n", criteria.size() - static_cast<std::size_t>(failed),
             criteria.size());
  return failed == 0 ? 0 : 1;
}
