#pragma once

// Workload config files: INI sections of key = value lines, '#' or ';'
// comment lines.
//
//   [workload]  kind (mlp | attention | layer-chain), seed, spike_rate,
//               input (MLP spike file), input_q / input_k / input_v
//   [mlp]       tokens, timesteps, in_features, out_features, if_tile,
//               w_buffer_chunks, layers (comma-separated widths, layer-chain)
//   [attention] tokens, timesteps, heads, head_dim, q_tile, k_tile, resident_x
//   [quant]     weight_bits, integration_bits, attention_bits,
//               overflow (strict | saturate)
//   [neuron]    v_th, v_leak
//   [array]     rows, cols, extraction (parallel-3d | serial-2d), prefetch
//   [cost]      design (2d | 3d), presets (data file path)
//   [buffers]   <buffer> = DEPTHxWIDTH, e.g. w_buf = 96x128
//   [energy]    <buffer> = pJ per access event

#include <boost/property_tree/ptree.hpp>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "spikesim/attn_array.hpp"
#include "spikesim/cost_report.hpp"
#include "spikesim/fixed_point.hpp"
#include "spikesim/memory.hpp"
#include "spikesim/mlp_array.hpp"
#include "spikesim/snn_core.hpp"
#include "spikesim/workload.hpp"

namespace spikesim::cli {

enum class Kind { kMlp, kAttention, kLayerChain };

std::string_view to_string(Kind k);
Kind parse_kind(std::string_view text);

struct WorkloadConfig {
  Kind kind = Kind::kMlp;
  std::uint64_t seed = 1;
  double spike_rate = 0.5;
  std::string input;
  std::string input_q;
  std::string input_k;
  std::string input_v;

  mlp::MlpDims mlp;
  std::int64_t if_tile = 16;
  std::int64_t w_buffer_chunks = 0;
  // Output widths of every layer after the first (layer-chain only).
  std::vector<std::int64_t> layers;

  HeadShape attention;
  attn::AttnTiles tiles;

  QuantSpec quant;
  NeuronParams neuron;
  mlp::ArrayConfig array;
  // False when the extraction mode follows the design.
  bool extraction_set = false;
  bool prefetch = false;

  Design design = Design::k3D;
  std::string presets;

  mem::BufferConfig buffers = mem::BufferConfig::defaults();
  report::EnergyTable energy;

  Workload workload() const {
    return kind == Kind::kAttention ? Workload::kAttention : Workload::kMlp;
  }
  // Extraction mode after applying the design default.
  mlp::ExtractionMode extraction() const;
  mlp::ArrayConfig effective_array() const;
  // Weight matrices' shapes for MLP and layer-chain runs.
  std::vector<std::pair<std::int64_t, std::int64_t>> layer_shapes() const;

  // Throws ConfigError.
  void validate() const;

  friend bool operator==(const WorkloadConfig&, const WorkloadConfig&) = default;
};

using Tree = boost::property_tree::ptree;

// Raw INI tree; syntax errors carry the line number.
Tree read_tree(std::istream& in, const std::string& source);
Tree read_tree(const std::filesystem::path& path);

// Field errors name the section, key and (when known) line.
WorkloadConfig from_tree(const Tree& tree, const std::string& source = "<config>",
                         const std::string& text = {});
WorkloadConfig parse_config(std::istream& in, const std::string& source = "<config>");
WorkloadConfig load_config(const std::filesystem::path& path);

// Canonical form; parse_config(serialize(c)) == c.
std::string serialize(const WorkloadConfig& config);

// Sets "section.key" to `value` in the tree.
void apply_override(Tree& tree, const std::string& dotted_key, const std::string& value);

}  // namespace spikesim::cli
