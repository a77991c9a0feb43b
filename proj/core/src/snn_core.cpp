#include "spikesim/snn_core.hpp"

#include <fmt/format.h>

namespace spikesim {

void NeuronParams::validate() const {
  if (v_th <= 0) throw ConfigError(fmt::format("v_th must be > 0, got {}", v_th));
}

void HeadShape::validate() const {
  if (timesteps < 1 || tokens < 1 || heads < 1 || head_dim < 1) {
    throw ConfigError(fmt::format("head shape fields must be >= 1, got T={} N={} H={} d={}",
                                  timesteps, tokens, heads, head_dim));
  }
}

LifResult lif_update(std::int64_t v_prev, std::int64_t syn_input, const NeuronParams& params,
                     const QuantSpec& quant, NeuronSite site) {
  const std::int64_t candidate = fixed::constrain_signed(
      v_prev + syn_input - params.v_leak, quant.integration_bits, quant.overflow, "membrane",
      [&] {
        return Coordinates{{"n", site.token}, {"t", site.timestep}, {"neuron", site.neuron}};
      });
  if (candidate > params.v_th) return {0, true};
  return {candidate, false};
}

MembraneTrace::MembraneTrace(std::int64_t tokens, std::int64_t timesteps, std::int64_t neurons)
    : tokens_(tokens),
      timesteps_(timesteps),
      neurons_(neurons),
      values_(static_cast<std::size_t>(tokens * timesteps * neurons), 0) {}

LayerResult golden_mlp_layer(const SpikeTensor& s_in, const WeightMatrix& w,
                             const NeuronParams& params, const QuantSpec& quant) {
  params.validate();
  if (s_in.features() != w.in_features()) {
    throw ConfigError(fmt::format("input has {} features but weights expect {}",
                                  s_in.features(), w.in_features()));
  }
  if (w.bits() > quant.weight_bits) {
    throw ConfigError(fmt::format("weights are {}-bit but quant allows {}", w.bits(),
                                  quant.weight_bits));
  }
  const auto N = s_in.tokens();
  const auto T = s_in.timesteps();
  const auto d_in = w.in_features();
  const auto d_out = w.out_features();

  LayerResult out{SpikeTensor(N, T, d_out), MembraneTrace(N, T, d_out)};
  std::vector<std::int64_t> membrane(static_cast<std::size_t>(d_out));

  for (std::int64_t n = 0; n < N; ++n) {
    std::fill(membrane.begin(), membrane.end(), 0);
    for (std::int64_t t = 0; t < T; ++t) {
      for (std::int64_t i = 0; i < d_out; ++i) {
        std::int64_t x = 0;
        for (std::int64_t j = 0; j < d_in; ++j) {
          if (s_in.at(n, t, j) == 0) continue;
          x = fixed::constrain_signed(x + w.at(j, i), quant.integration_bits, quant.overflow,
                                      "synaptic integration", [&] {
                                        return Coordinates{{"n", n}, {"t", t}, {"neuron", i}};
                                      });
        }
        auto& v = membrane[static_cast<std::size_t>(i)];
        const auto r = lif_update(v, x, params, quant, {n, t, i});
        v = r.v_new;
        out.spikes.set(n, t, i, r.spike);
        out.membranes.at(n, t, i) = r.v_new;
      }
    }
  }
  return out;
}

IntMatrix golden_attention_scores(const BitMatrix& q, const BitMatrix& k) {
  if (q.cols() != k.cols()) {
    throw ConfigError(fmt::format("query width {} != key width {}", q.cols(), k.cols()));
  }
  IntMatrix a(q.rows(), k.rows());
  for (std::int64_t i = 0; i < q.rows(); ++i) {
    for (std::int64_t j = 0; j < k.rows(); ++j) {
      std::int64_t acc = 0;
      for (std::int64_t f = 0; f < q.cols(); ++f) acc += q.at(i, f) & k.at(j, f);
      a.at(i, j) = acc;
    }
  }
  return a;
}

void check_attention_scores(IntMatrix& a, const QuantSpec& quant) {
  for (std::int64_t i = 0; i < a.rows(); ++i) {
    for (std::int64_t j = 0; j < a.cols(); ++j) {
      a.at(i, j) = fixed::constrain_unsigned(a.at(i, j), quant.attention_bits, quant.overflow,
                                             "attention score", [&] {
                                               return Coordinates{{"query", i}, {"key", j}};
                                             });
    }
  }
}

IntMatrix golden_attention_weighted(const IntMatrix& a, const BitMatrix& v,
                                    const QuantSpec& quant) {
  if (a.cols() != v.rows()) {
    throw ConfigError(fmt::format("attention has {} keys but value has {} tokens", a.cols(),
                                  v.rows()));
  }
  IntMatrix x(a.rows(), v.cols());
  for (std::int64_t i = 0; i < a.rows(); ++i) {
    for (std::int64_t f = 0; f < v.cols(); ++f) {
      std::int64_t acc = 0;
      for (std::int64_t j = 0; j < a.cols(); ++j) {
        if (v.at(j, f) == 0) continue;
        acc = fixed::constrain_signed(acc + a.at(i, j), quant.integration_bits, quant.overflow,
                                      "synaptic integration", [&] {
                                        return Coordinates{{"query", i}, {"feature", f}};
                                      });
      }
      x.at(i, f) = acc;
    }
  }
  return x;
}

LayerResult golden_attention_layer(const SpikeTensor& q, const SpikeTensor& k,
                                   const SpikeTensor& v, const HeadShape& shape,
                                   const NeuronParams& params, const QuantSpec& quant) {
  shape.validate();
  params.validate();
  for (const SpikeTensor* s : {&q, &k, &v}) {
    if (s->tokens() != shape.tokens || s->timesteps() != shape.timesteps ||
        s->features() != shape.model_dim()) {
      throw ConfigError(fmt::format(
          "attention input shape ({}, {}, {}) does not match N={} T={} D={}", s->tokens(),
          s->timesteps(), s->features(), shape.tokens, shape.timesteps, shape.model_dim()));
    }
  }
  const auto N = shape.tokens;
  const auto T = shape.timesteps;
  const auto d = shape.head_dim;
  LayerResult out{SpikeTensor(N, T, shape.model_dim()), MembraneTrace(N, T, shape.model_dim())};
  IntMatrix membrane(N, d);

  for (std::int64_t h = 0; h < shape.heads; ++h) {
    membrane = IntMatrix(N, d);
    for (std::int64_t t = 0; t < T; ++t) {
      IntMatrix a = golden_attention_scores(q.slice(t, h * d, d), k.slice(t, h * d, d));
      check_attention_scores(a, quant);
      const IntMatrix x = golden_attention_weighted(a, v.slice(t, h * d, d), quant);
      for (std::int64_t n = 0; n < N; ++n) {
        for (std::int64_t f = 0; f < d; ++f) {
          const auto neuron = h * d + f;
          const auto r = lif_update(membrane.at(n, f), x.at(n, f), params, quant, {n, t, neuron});
          membrane.at(n, f) = r.v_new;
          out.spikes.set(n, t, neuron, r.spike);
          out.membranes.at(n, t, neuron) = r.v_new;
        }
      }
    }
  }
  return out;
}

BitwidthRequirement bitwidth_requirements(std::int64_t head_dim, std::int64_t tokens) {
  if (head_dim < 1 || tokens < 1) {
    throw ConfigError("bitwidth_requirements needs d >= 1 and N >= 1");
  }
  const int log_d = fixed::ceil_log2(head_dim);
  const int log_n = fixed::ceil_log2(tokens);
  return {log_d + 1, log_d + log_n + 2,
          !fixed::is_power_of_two(head_dim) || !fixed::is_power_of_two(tokens)};
}

BitwidthRequirement bitwidth_requirements(const HeadShape& shape) {
  return bitwidth_requirements(shape.head_dim, shape.tokens);
}

}  // namespace spikesim
