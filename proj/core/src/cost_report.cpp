#include "spikesim/cost_report.hpp"

#include <cmath>

#include <fmt/format.h>

namespace spikesim::report {

using mem::Endpoint;

bool EnergyTable::empty() const {
  for (const auto& e : pj_per_access) {
    if (e) return false;
  }
  return true;
}

double buffer_access_latency_ps(const mem::CostPreset& preset, Endpoint buffer) {
  std::optional<mem::BufferCost> cost;
  switch (buffer) {
    case Endpoint::kActGlb0:
    case Endpoint::kActGlb1: cost = preset.act_glb; break;
    case Endpoint::kWGlb: cost = preset.w_glb; break;
    case Endpoint::kActBuf: cost = preset.act_buf; break;
    case Endpoint::kWBuf: cost = preset.w_buf; break;
    default: break;
  }
  return cost ? cost->latency_ps : preset.mem_access_latency_ps;
}

Report aggregate(const RunStats& stats, const mem::CostPreset& preset, const EnergyTable& energy) {
  if (preset.workload != stats.workload) {
    throw ConfigError(fmt::format("preset {} is for {} but the run is {}", preset.key(),
                                  to_string(preset.workload), to_string(stats.workload)));
  }
  if (preset.rows != stats.rows || preset.cols != stats.cols) {
    throw ConfigError(fmt::format("preset {} is for a {}x{} array but the run used {}x{}",
                                  preset.key(), preset.rows, preset.cols, stats.rows, stats.cols));
  }
  if (preset.effective_freq_ghz <= 0) {
    throw ConfigError(fmt::format("preset {} has no effective frequency", preset.key()));
  }
  Report r;
  r.stats = stats;
  r.design = preset.design;
  r.preset_key = preset.key();
  r.effective_freq_ghz = preset.effective_freq_ghz;
  r.wall_time_ns = static_cast<double>(stats.total_cycles) / preset.effective_freq_ghz;
  r.mem_access_latency_ps = preset.mem_access_latency_ps;
  r.mem_access_power_mw = preset.mem_access_power_mw;
  r.internal_power_mw = preset.internal_power_mw;
  r.switching_power_mw = preset.switching_power_mw;
  r.leakage_power_mw = preset.leakage_power_mw;
  r.total_power_mw = preset.total_power_mw;

  double energy_sum = 0;
  for (std::size_t i = 0; i < mem::kNumBuffers; ++i) {
    const auto b = mem::buffer_at(i);
    BufferLine line;
    line.buffer = b;
    line.counters = stats.counters[b];
    line.access_latency_ps = buffer_access_latency_ps(preset, b);
    line.latency_total_ps = static_cast<double>(line.counters.events()) * line.access_latency_ps;
    if (const auto& pj = energy.pj_per_access[i]) {
      line.energy_pj = static_cast<double>(line.counters.events()) * *pj;
      energy_sum += *line.energy_pj;
    }
    r.mem_latency_total_ps += line.latency_total_ps;
    r.buffers.push_back(line);
  }
  if (!energy.empty()) r.buffer_energy_pj = energy_sum;

  const double pes = static_cast<double>(stats.rows) * stats.cols;
  if (stats.total_cycles > 0 && pes > 0) {
    r.utilization = static_cast<double>(stats.active_pe_cycles) /
                    (static_cast<double>(stats.total_cycles) * pes);
  }
  if (stats.mapped_pe_cycles > 0) {
    r.compute_utilization =
        static_cast<double>(stats.active_pe_cycles) / static_cast<double>(stats.mapped_pe_cycles);
  }
  r.power_energy_pj = r.total_power_mw * r.wall_time_ns;
  return r;
}

namespace {

std::string num(double v) { return fmt::format("{:.6f}", v); }

}  // namespace

std::vector<std::pair<std::string, std::string>> to_records(const Report& r) {
  const auto& s = r.stats;
  std::vector<std::pair<std::string, std::string>> out;
  auto put = [&](std::string key, std::string value) {
    out.emplace_back(std::move(key), std::move(value));
  };
  put("workload", std::string(to_string(s.workload)));
  put("design", std::string(to_string(r.design)));
  put("preset", r.preset_key);
  put("array", fmt::format("{}x{}", s.rows, s.cols));
  put("total_cycles", std::to_string(s.total_cycles));
  for (const auto p : {Phase::kLoad, Phase::kCompute, Phase::kExtract, Phase::kGenerate}) {
    put(fmt::format("cycles.{}", to_string(p)), std::to_string(s.phases[p]));
  }
  put("effective_freq_ghz", num(r.effective_freq_ghz));
  put("wall_time_ns", num(r.wall_time_ns));
  put("transfer_events", std::to_string(s.transfer_events));
  for (const auto& b : r.buffers) {
    const auto n = mem::name(b.buffer);
    put(fmt::format("{}.reads", n), std::to_string(b.counters.read_words));
    put(fmt::format("{}.writes", n), std::to_string(b.counters.write_words));
    put(fmt::format("{}.events", n), std::to_string(b.counters.events()));
    put(fmt::format("{}.access_latency_ps", n), num(b.access_latency_ps));
    put(fmt::format("{}.latency_total_ps", n), num(b.latency_total_ps));
    if (b.energy_pj) put(fmt::format("{}.energy_pj", n), num(*b.energy_pj));
  }
  put("mem_latency_total_ps", num(r.mem_latency_total_ps));
  put("mem_access_latency_ps", num(r.mem_access_latency_ps));
  put("mem_access_power_mw", num(r.mem_access_power_mw));
  put("internal_power_mw", num(r.internal_power_mw));
  put("switching_power_mw", num(r.switching_power_mw));
  put("leakage_power_mw", num(r.leakage_power_mw));
  put("total_power_mw", num(r.total_power_mw));
  put("power_energy_pj", num(r.power_energy_pj));
  if (r.buffer_energy_pj) put("buffer_energy_pj", num(*r.buffer_energy_pj));
  put("active_pe_cycles", std::to_string(s.active_pe_cycles));
  put("mapped_pe_cycles", std::to_string(s.mapped_pe_cycles));
  put("utilization", num(r.utilization));
  put("compute_utilization", num(r.compute_utilization));
  put("peak_attention_residency", std::to_string(s.peak_attention_residency));
  put("w_glb_chunk_loads", std::to_string(s.count(Action::kLoadW)));
  return out;
}

std::string to_text(const Report& report) {
  std::string text;
  for (const auto& [k, v] : to_records(report)) text += fmt::format("{}={}\n", k, v);
  return text;
}

std::string phase_table_csv(const Report& report) {
  const auto& s = report.stats;
  std::string text = "phase,cycles,share\n";
  for (const auto p : {Phase::kLoad, Phase::kCompute, Phase::kExtract, Phase::kGenerate}) {
    const double share = s.total_cycles > 0
                             ? static_cast<double>(s.phases[p]) / static_cast<double>(s.total_cycles)
                             : 0.0;
    text += fmt::format("{},{},{:.6f}\n", to_string(p), s.phases[p], share);
  }
  text += fmt::format("total,{},{:.6f}\n", s.total_cycles, s.total_cycles > 0 ? 1.0 : 0.0);
  return text;
}

double round_half_even(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::nearbyint(value * scale) / scale;
}

namespace {

double ratio(double v3, double v2, const char* what) {
  if (v2 == 0) throw Error(fmt::format("cannot compare {}: the 2D value is zero", what));
  return v3 / v2;
}

}  // namespace

Comparison compare(const Report& report_2d, const Report& report_3d) {
  const auto& a = report_2d.stats;
  const auto& b = report_3d.stats;
  if (a.workload != b.workload) {
    throw ConfigError(fmt::format("cannot compare a {} report with a {} report",
                                  to_string(a.workload), to_string(b.workload)));
  }
  if (a.rows != b.rows || a.cols != b.cols) {
    throw ConfigError(fmt::format("cannot compare a {}x{} array with a {}x{} array", a.rows,
                                  a.cols, b.rows, b.cols));
  }
  Comparison c;
  c.workload = a.workload;
  c.rows = a.rows;
  c.cols = a.cols;
  c.mem_latency_ratio =
      ratio(report_3d.mem_access_latency_ps, report_2d.mem_access_latency_ps, "memory latency");
  c.mem_power_ratio =
      ratio(report_3d.mem_access_power_mw, report_2d.mem_access_power_mw, "memory power");
  c.freq_ratio = ratio(report_3d.effective_freq_ghz, report_2d.effective_freq_ghz, "frequency");
  c.total_power_ratio = ratio(report_3d.total_power_mw, report_2d.total_power_mw, "total power");
  c.mem_latency_reduction_pct = (1.0 - c.mem_latency_ratio) * 100.0;
  c.mem_power_reduction_pct = (1.0 - c.mem_power_ratio) * 100.0;
  c.freq_gain_pct = (c.freq_ratio - 1.0) * 100.0;
  c.total_power_reduction_pct = (1.0 - c.total_power_ratio) * 100.0;
  if (report_2d.wall_time_ns > 0 && report_3d.wall_time_ns > 0) {
    c.wall_time_reduction_pct = (1.0 - report_3d.wall_time_ns / report_2d.wall_time_ns) * 100.0;
  }
  return c;
}

std::vector<std::pair<std::string, std::string>> to_records(const Comparison& c) {
  std::vector<std::pair<std::string, std::string>> out;
  auto pct = [](double v) { return fmt::format("{:.1f}", round_half_even(v)); };
  out.emplace_back("workload", std::string(to_string(c.workload)));
  out.emplace_back("array", fmt::format("{}x{}", c.rows, c.cols));
  out.emplace_back("mem_latency_reduction_pct", pct(c.mem_latency_reduction_pct));
  out.emplace_back("mem_power_reduction_pct", pct(c.mem_power_reduction_pct));
  out.emplace_back("freq_gain_pct", pct(c.freq_gain_pct));
  out.emplace_back("total_power_reduction_pct", pct(c.total_power_reduction_pct));
  if (c.wall_time_reduction_pct) {
    out.emplace_back("wall_time_reduction_pct", pct(*c.wall_time_reduction_pct));
  }
  out.emplace_back("mem_latency_ratio", fmt::format("{:.6f}", c.mem_latency_ratio));
  out.emplace_back("mem_power_ratio", fmt::format("{:.6f}", c.mem_power_ratio));
  out.emplace_back("freq_ratio", fmt::format("{:.6f}", c.freq_ratio));
  out.emplace_back("total_power_ratio", fmt::format("{:.6f}", c.total_power_ratio));
  return out;
}

std::string to_text(const Comparison& c) {
  std::string text;
  for (const auto& [k, v] : to_records(c)) text += fmt::format("{}={}\n", k, v);
  return text;
}

}  // namespace spikesim::report
