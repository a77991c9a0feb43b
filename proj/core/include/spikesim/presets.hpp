#pragma once

// Per-design cost presets measured on the 2D and 3D (F2F-bonded) layouts of
// the MLP and attention accelerators. Values are read-only reference data;
// the committed data file core/data/presets.tsv mirrors the embedded table.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "spikesim/errors.hpp"
#include "spikesim/workload.hpp"

namespace spikesim::mem {

struct PresetBitwidths {
  int weight_bits;
  int integration_bits;
  friend bool operator==(const PresetBitwidths&, const PresetBitwidths&) = default;
};

struct BufferCost {
  double latency_ps;
  double power_mw;
  friend bool operator==(const BufferCost&, const BufferCost&) = default;
};

struct CostPreset {
  Design design = Design::k3D;
  Workload workload = Workload::kMlp;
  int rows = 0;
  int cols = 0;
  std::optional<PresetBitwidths> bits;

  double effective_freq_ghz = 0;
  double internal_power_mw = 0;
  double switching_power_mw = 0;
  double leakage_power_mw = 0;
  double total_power_mw = 0;
  double mem_access_latency_ps = 0;
  double mem_access_power_mw = 0;

  // Hierarchical breakdown; only the MLP designs report it.
  std::optional<BufferCost> act_glb;
  std::optional<BufferCost> w_glb;
  std::optional<BufferCost> act_buf;
  std::optional<BufferCost> w_buf;

  // e.g. "3d/mlp/16x128/8b-16b" or "2d/attention/16x16".
  std::string key() const;

  friend bool operator==(const CostPreset&, const CostPreset&) = default;
};

struct PresetKey {
  Design design;
  Workload workload;
  int rows;
  int cols;
  std::optional<PresetBitwidths> bits;
};

class PresetNotFound : public ConfigError {
 public:
  PresetNotFound(const std::string& requested, const std::vector<std::string>& available);
};

class PresetTable {
 public:
  PresetTable() = default;
  explicit PresetTable(std::vector<CostPreset> rows) : rows_(std::move(rows)) {}

  // Compiled-in copy of core/data/presets.tsv.
  static const PresetTable& embedded();

  // Whitespace-separated rows; '#' starts a comment line; '-' marks an
  // absent value. Throws ConfigError with the offending line number.
  static PresetTable parse(std::istream& in);
  static PresetTable load(const std::filesystem::path& path);

  // SPIKESIM_PRESETS names a data file that replaces the embedded table.
  static PresetTable from_environment();

  // Matches design, workload and array size. Bitwidths narrow the match
  // when both the key and the preset carry them; a key without bitwidths
  // must match exactly one preset. Throws PresetNotFound otherwise.
  const CostPreset& lookup(const PresetKey& key) const;

  const std::vector<CostPreset>& rows() const { return rows_; }

  // Canonical text form (same grammar as the data file, no comments).
  std::string serialize() const;
  // FNV-1a 64 of serialize().
  std::uint64_t checksum() const;

  friend bool operator==(const PresetTable&, const PresetTable&) = default;

 private:
  std::vector<CostPreset> rows_;
};

inline constexpr const char* kPresetPathEnv = "SPIKESIM_PRESETS";

}  // namespace spikesim::mem
