#pragma once

// Golden functional model of spiking MLP and spiking self-attention layers.
//
// Every op here is a pure function of its inputs and uses exact integer
// arithmetic. The systolic simulators in mlp_array.hpp and attn_array.hpp
// must reproduce these results bit for bit.

#include <cstdint>
#include <vector>

#include "spikesim/fixed_point.hpp"
#include "spikesim/tensor.hpp"

namespace spikesim {

// Threshold and leak share the synaptic-integration scale. Reset is always
// to zero; v_leak == 0 gives the integrate-and-fire model.
struct NeuronParams {
  std::int64_t v_th = 1;
  std::int64_t v_leak = 0;

  // Throws ConfigError unless v_th > 0.
  void validate() const;

  friend bool operator==(const NeuronParams&, const NeuronParams&) = default;
};

struct LifResult {
  std::int64_t v_new;
  bool spike;
  friend bool operator==(const LifResult&, const LifResult&) = default;
};

// Location attached to a membrane overflow. -1 marks an unknown index.
struct NeuronSite {
  std::int64_t token = -1;
  std::int64_t timestep = -1;
  std::int64_t neuron = -1;
};

// One membrane step: candidate = v_prev + syn_input - v_leak; the neuron
// fires iff candidate > v_th, after which the membrane is exactly 0.
// The candidate must fit in quant.integration_bits (signed).
LifResult lif_update(std::int64_t v_prev, std::int64_t syn_input, const NeuronParams& params,
                     const QuantSpec& quant, NeuronSite site = {});

// Membrane potential after each (n, t, neuron) update, post-reset.
class MembraneTrace {
 public:
  MembraneTrace() = default;
  MembraneTrace(std::int64_t tokens, std::int64_t timesteps, std::int64_t neurons);

  std::int64_t tokens() const { return tokens_; }
  std::int64_t timesteps() const { return timesteps_; }
  std::int64_t neurons() const { return neurons_; }

  std::int64_t at(std::int64_t n, std::int64_t t, std::int64_t i) const {
    return values_[index(n, t, i)];
  }
  std::int64_t& at(std::int64_t n, std::int64_t t, std::int64_t i) {
    return values_[index(n, t, i)];
  }

  friend bool operator==(const MembraneTrace&, const MembraneTrace&) = default;

 private:
  std::size_t index(std::int64_t n, std::int64_t t, std::int64_t i) const {
    return static_cast<std::size_t>((n * timesteps_ + t) * neurons_ + i);
  }

  std::int64_t tokens_ = 0;
  std::int64_t timesteps_ = 0;
  std::int64_t neurons_ = 0;
  std::vector<std::int64_t> values_;
};

struct LayerResult {
  SpikeTensor spikes;
  MembraneTrace membranes;
};

// X_{n,i}[t] = sum_j w_ji * s_in[n,t,j], accumulated in ascending j with
// every partial sum range-checked against integration_bits; then lif_update
// chains the membrane of (n, i) across t. Membranes start at zero.
LayerResult golden_mlp_layer(const SpikeTensor& s_in, const WeightMatrix& w,
                             const NeuronParams& params, const QuantSpec& quant);

// a[i][j] = popcount(q[i] AND k[j]). Entries lie in [0, d]; the caller
// checks them against attention_bits (see check_attention_scores).
IntMatrix golden_attention_scores(const BitMatrix& q, const BitMatrix& k);

// Range-checks every score against unsigned attention_bits. Strict mode
// throws BitwidthError; saturate mode clamps in place.
void check_attention_scores(IntMatrix& a, const QuantSpec& quant);

// x[i][f] = sum_j a[i][j] * v[j][f], accumulated in ascending j with each
// partial sum checked against signed integration_bits.
IntMatrix golden_attention_weighted(const IntMatrix& a, const BitMatrix& v,
                                    const QuantSpec& quant);

struct HeadShape {
  std::int64_t timesteps = 1;
  std::int64_t tokens = 1;
  std::int64_t heads = 1;
  std::int64_t head_dim = 1;

  std::int64_t model_dim() const { return heads * head_dim; }
  // Throws ConfigError unless every field is >= 1.
  void validate() const;

  friend bool operator==(const HeadShape&, const HeadShape&) = default;
};

// Per head h and timestep t: A = scores(Q_ht, K_ht), X = A V_ht. Each
// (token, feature) neuron then accumulates X across t with lif_update.
// Head h owns features [h*d, (h+1)*d) of the D = heads*d model dimension.
LayerResult golden_attention_layer(const SpikeTensor& q, const SpikeTensor& k,
                                   const SpikeTensor& v, const HeadShape& shape,
                                   const NeuronParams& params, const QuantSpec& quant);

struct BitwidthRequirement {
  int attention_bits;
  int integration_bits;
  // Set when d or N is not a power of two and the logarithms were rounded up.
  bool conservative;
  friend bool operator==(const BitwidthRequirement&, const BitwidthRequirement&) = default;
};

// attention_bits = log2(d) + 1, integration_bits = log2(d) + log2(N) + 2.
BitwidthRequirement bitwidth_requirements(std::int64_t head_dim, std::int64_t tokens);
BitwidthRequirement bitwidth_requirements(const HeadShape& shape);

}  // namespace spikesim
