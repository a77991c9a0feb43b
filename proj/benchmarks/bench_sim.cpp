#include <benchmark/benchmark.h>

#include "spikesim/attn_array.hpp"
#include "spikesim/mlp_array.hpp"
#include "spikesim/snn_core.hpp"
#include "spikesim/synthetic.hpp"

using namespace spikesim;

namespace {

struct MlpCase {
  SpikeTensor s;
  WeightMatrix w;
  QuantSpec quant;
};

MlpCase mlp_case(std::int64_t tokens) {
  synthetic::Rng rng(1);
  MlpCase c{synthetic::random_spikes(rng, tokens, 4, 64), synthetic::random_weights(rng, 64, 32, 8),
            {}};
  c.quant.integration_bits = 20;
  return c;
}

void BM_GoldenMlp(benchmark::State& state) {
  const auto c = mlp_case(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(golden_mlp_layer(c.s, c.w, {64, 2}, c.quant));
  }
}
BENCHMARK(BM_GoldenMlp)->Arg(8)->Arg(32);

void BM_SystolicMlp(benchmark::State& state) {
  const auto c = mlp_case(state.range(0));
  for (auto _ : state) {
    mem::MemoryHierarchy m;
    benchmark::DoNotOptimize(
        mlp::run_mlp_layer(c.s, c.w, {64, 2}, c.quant, {16, 128}, {16, 0, false}, m));
  }
}
BENCHMARK(BM_SystolicMlp)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

struct AttnCase {
  HeadShape shape;
  SpikeTensor q, k, v;
  QuantSpec quant;
};

AttnCase attn_case(std::int64_t tokens) {
  synthetic::Rng rng(2);
  const HeadShape shape{1, tokens, 2, 16};
  AttnCase c{shape, synthetic::random_spikes(rng, tokens, 1, 32),
             synthetic::random_spikes(rng, tokens, 1, 32), synthetic::random_spikes(rng, tokens, 1, 32),
             {}};
  const auto need = bitwidth_requirements(shape);
  c.quant.attention_bits = need.attention_bits;
  c.quant.integration_bits = need.integration_bits;
  return c;
}

void BM_GoldenAttention(benchmark::State& state) {
  const auto c = attn_case(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(golden_attention_layer(c.q, c.k, c.v, c.shape, {64, 0}, c.quant));
  }
}
BENCHMARK(BM_GoldenAttention)->Arg(32)->Arg(128);

void BM_FusedAttention(benchmark::State& state) {
  const auto c = attn_case(state.range(0));
  for (auto _ : state) {
    mem::MemoryHierarchy m;
    benchmark::DoNotOptimize(attn::run_attention_layer(c.q, c.k, c.v, c.shape, {64, 0}, c.quant,
                                                       {16, 16}, {{16, 16, false}, false}, m));
  }
}
BENCHMARK(BM_FusedAttention)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
