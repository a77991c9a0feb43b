#include "spikesim/presets.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <sstream>

#include <fmt/format.h>

namespace spikesim {

std::string_view to_string(Workload w) { return w == Workload::kMlp ? "mlp" : "attention"; }
std::string_view to_string(Design d) { return d == Design::k2D ? "2d" : "3d"; }

Workload parse_workload(std::string_view text) {
  if (text == "mlp") return Workload::kMlp;
  if (text == "attention") return Workload::kAttention;
  throw ConfigError(fmt::format("unknown workload '{}' (expected mlp|attention)", text));
}

Design parse_design(std::string_view text) {
  if (text == "2d" || text == "2D") return Design::k2D;
  if (text == "3d" || text == "3D") return Design::k3D;
  throw ConfigError(fmt::format("unknown design '{}' (expected 2d|3d)", text));
}

namespace mem {
namespace {

constexpr BufferCost bc(double ps, double mw) { return {ps, mw}; }

CostPreset mlp_row(Design d, int rows, int cols, PresetBitwidths bits, double freq,
                   double internal, double switching, double leakage, double total,
                   double lat, double pow, BufferCost act_glb, BufferCost w_glb,
                   BufferCost act_buf, BufferCost w_buf) {
  CostPreset p;
  p.design = d;
  p.workload = Workload::kMlp;
  p.rows = rows;
  p.cols = cols;
  p.bits = bits;
  p.effective_freq_ghz = freq;
  p.internal_power_mw = internal;
  p.switching_power_mw = switching;
  p.leakage_power_mw = leakage;
  p.total_power_mw = total;
  p.mem_access_latency_ps = lat;
  p.mem_access_power_mw = pow;
  p.act_glb = act_glb;
  p.w_glb = w_glb;
  p.act_buf = act_buf;
  p.w_buf = w_buf;
  return p;
}

CostPreset attn_row(Design d, int rows, int cols, double freq, double internal,
                    double switching, double leakage, double total, double lat, double pow) {
  CostPreset p;
  p.design = d;
  p.workload = Workload::kAttention;
  p.rows = rows;
  p.cols = cols;
  p.effective_freq_ghz = freq;
  p.internal_power_mw = internal;
  p.switching_power_mw = switching;
  p.leakage_power_mw = leakage;
  p.total_power_mw = total;
  p.mem_access_latency_ps = lat;
  p.mem_access_power_mw = pow;
  return p;
}

std::vector<CostPreset> embedded_rows() {
  constexpr auto k2 = Design::k2D;
  constexpr auto k3 = Design::k3D;
  constexpr PresetBitwidths b8_16{8, 16};
  constexpr PresetBitwidths b4_12{4, 12};
  return {
      mlp_row(k2, 16, 128, b8_16, 1.57, 334, 152, 30.0, 516, 82, 4.17, bc(24, 1.13),
              bc(82, 0.46), bc(40, 1.92), bc(28, 1.01)),
      mlp_row(k3, 16, 128, b8_16, 1.68, 310, 137, 29.1, 476.1, 26, 1.27, bc(16, 0.76),
              bc(26, 0.1), bc(16, 0.52), bc(26, 0.17)),
      mlp_row(k2, 64, 16, b8_16, 1.68, 221.2, 118.1, 22.8, 362.1, 77, 4.6, bc(68, 1.1),
              bc(77, 0.47), bc(40, 1.66), bc(77, 1.50)),
      mlp_row(k3, 64, 16, b8_16, 1.79, 215.8, 107.0, 21.0, 343.8, 19, 1.3, bc(19, 0.77),
              bc(18, 0.09), bc(19, 0.27), bc(18, 0.39)),
      mlp_row(k2, 64, 16, b4_12, 1.76, 201.2, 101.2, 19.1, 321.5, 80, 4.4, bc(53, 1.26),
              bc(80, 0.45), bc(47, 1.64), bc(80, 1.14)),
      mlp_row(k3, 64, 16, b4_12, 1.85, 186.2, 86.0, 14.4, 286.6, 58, 0.99, bc(58, 0.62),
              bc(42, 0.11), bc(58, 0.24), bc(42, 0.29)),
      attn_row(k2, 16, 16, 1.58, 146, 52, 4.0, 203, 388, 3.22),
      attn_row(k3, 16, 16, 1.68, 146, 51, 3.0, 200, 100, 1.63),
      attn_row(k2, 16, 8, 1.68, 97.8, 30.6, 2.6, 130.9, 388, 3.86),
      attn_row(k3, 16, 8, 1.93, 95.8, 26.3, 1.9, 124.0, 72, 1.36),
  };
}

std::string array_text(int rows, int cols) { return fmt::format("{}x{}", rows, cols); }

std::string bits_text(const std::optional<PresetBitwidths>& bits) {
  return bits ? fmt::format("{}b/{}b", bits->weight_bits, bits->integration_bits) : "-";
}

std::string key_text(const PresetKey& k) {
  std::string s = fmt::format("{}/{}/{}", to_string(k.design), to_string(k.workload),
                              array_text(k.rows, k.cols));
  if (k.bits) s += fmt::format("/{}b-{}b", k.bits->weight_bits, k.bits->integration_bits);
  return s;
}

double parse_number(const std::string& tok, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("presets line {}: '{}' is not a number", line, tok));
  }
}

std::optional<BufferCost> parse_cost(const std::string& ps, const std::string& mw, int line) {
  if (ps == "-" && mw == "-") return std::nullopt;
  if (ps == "-" || mw == "-") {
    throw ConfigError(fmt::format("presets line {}: buffer latency and power must both be set",
                                  line));
  }
  return BufferCost{parse_number(ps, line), parse_number(mw, line)};
}

std::string cost_text(const std::optional<BufferCost>& c) {
  return c ? fmt::format("{} {}", c->latency_ps, c->power_mw) : "- -";
}

}  // namespace

std::string CostPreset::key() const {
  return key_text(PresetKey{design, workload, rows, cols, bits});
}

PresetNotFound::PresetNotFound(const std::string& requested,
                               const std::vector<std::string>& available)
    : ConfigError(fmt::format("no cost preset for {}; available: {}", requested,
                              fmt::join(available, ", "))) {}

const PresetTable& PresetTable::embedded() {
  static const PresetTable table(embedded_rows());
  return table;
}

PresetTable PresetTable::parse(std::istream& in) {
  std::vector<CostPreset> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    if (tok.size() != 19) {
      throw ConfigError(fmt::format("presets line {}: expected 19 fields, got {}", lineno,
                                    tok.size()));
    }
    CostPreset p;
    try {
      p.design = parse_design(tok[0]);
      p.workload = parse_workload(tok[1]);
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("presets line {}: {}", lineno, e.what()));
    }
    if (std::sscanf(tok[2].c_str(), "%dx%d", &p.rows, &p.cols) != 2 || p.rows < 1 ||
        p.cols < 1) {
      throw ConfigError(fmt::format("presets line {}: bad array size '{}'", lineno, tok[2]));
    }
    if (tok[3] != "-") {
      PresetBitwidths b{};
      if (std::sscanf(tok[3].c_str(), "%db/%db", &b.weight_bits, &b.integration_bits) != 2) {
        throw ConfigError(fmt::format("presets line {}: bad bitwidths '{}'", lineno, tok[3]));
      }
      p.bits = b;
    }
    p.effective_freq_ghz = parse_number(tok[4], lineno);
    p.internal_power_mw = parse_number(tok[5], lineno);
    p.switching_power_mw = parse_number(tok[6], lineno);
    p.leakage_power_mw = parse_number(tok[7], lineno);
    p.total_power_mw = parse_number(tok[8], lineno);
    p.mem_access_latency_ps = parse_number(tok[9], lineno);
    p.mem_access_power_mw = parse_number(tok[10], lineno);
    p.act_glb = parse_cost(tok[11], tok[12], lineno);
    p.w_glb = parse_cost(tok[13], tok[14], lineno);
    p.act_buf = parse_cost(tok[15], tok[16], lineno);
    p.w_buf = parse_cost(tok[17], tok[18], lineno);
    if (p.effective_freq_ghz <= 0) {
      throw ConfigError(fmt::format("presets line {}: frequency must be positive", lineno));
    }
    rows.push_back(std::move(p));
  }
  return PresetTable(std::move(rows));
}

PresetTable PresetTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open preset file '{}'", path.string()));
  return parse(in);
}

PresetTable PresetTable::from_environment() {
  if (const char* path = std::getenv(kPresetPathEnv); path != nullptr && *path != '\0') {
    return load(path);
  }
  return embedded();
}

const CostPreset& PresetTable::lookup(const PresetKey& key) const {
  std::vector<const CostPreset*> matches;
  for (const auto& p : rows_) {
    if (p.design != key.design || p.workload != key.workload || p.rows != key.rows ||
        p.cols != key.cols) {
      continue;
    }
    if (key.bits && p.bits && *key.bits != *p.bits) continue;
    matches.push_back(&p);
  }
  if (matches.size() != 1) {
    std::vector<std::string> available;
    for (const auto& p : rows_) available.push_back(p.key());
    std::string requested = key_text(key);
    if (matches.size() > 1) requested += " (ambiguous: specify bitwidths)";
    throw PresetNotFound(requested, available);
  }
  return *matches.front();
}

std::string PresetTable::serialize() const {
  std::string out;
  for (const auto& p : rows_) {
    out += fmt::format("{} {} {} {} {} {} {} {} {} {} {} {} {} {} {}\n", to_string(p.design),
                       to_string(p.workload), array_text(p.rows, p.cols), bits_text(p.bits),
                       p.effective_freq_ghz, p.internal_power_mw, p.switching_power_mw,
                       p.leakage_power_mw, p.total_power_mw, p.mem_access_latency_ps,
                       p.mem_access_power_mw, cost_text(p.act_glb), cost_text(p.w_glb),
                       cost_text(p.act_buf), cost_text(p.w_buf));
  }
  return out;
}

std::uint64_t PresetTable::checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : serialize()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace mem
}  // namespace spikesim
