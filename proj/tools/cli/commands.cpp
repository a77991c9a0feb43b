#include "commands.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <ostream>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "spike_io.hpp"
#include "spikesim/attn_array.hpp"
#include "spikesim/cost_report.hpp"
#include "spikesim/mlp_array.hpp"
#include "spikesim/synthetic.hpp"

namespace spikesim::cli {

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const InternalError*>(&e) != nullptr) return kExitInternal;
  if (dynamic_cast<const Error*>(&e) != nullptr) return kExitConfig;
  return kExitInternal;
}

void Overrides::apply(WorkloadConfig& c) const {
  if (design) c.design = *design;
  if (seed) c.seed = *seed;
  if (overflow) c.quant.overflow = *overflow;
  if (prefetch) c.prefetch = true;
  c.validate();
}

Inputs make_inputs(const WorkloadConfig& c) {
  synthetic::Rng rng(c.seed);
  Inputs in;
  if (c.kind == Kind::kAttention) {
    const auto& s = c.attention;
    auto one = [&](const std::string& path, const char* what) {
      if (path.empty()) return synthetic::random_spikes(rng, s.tokens, s.timesteps, s.model_dim(),
                                                        c.spike_rate);
      auto t = load_spikes(path);
      if (t.tokens() != s.tokens || t.timesteps() != s.timesteps ||
          t.features() != s.model_dim()) {
        throw ConfigError(fmt::format("{} file '{}' is {}x{}x{}, expected {}x{}x{}", what, path,
                                      t.tokens(), t.timesteps(), t.features(), s.tokens,
                                      s.timesteps, s.model_dim()));
      }
      return t;
    };
    in.q = one(c.input_q, "query");
    in.k = one(c.input_k, "key");
    in.v = one(c.input_v, "value");
    return in;
  }
  const auto& d = c.mlp;
  if (c.input.empty()) {
    in.s_in = synthetic::random_spikes(rng, d.tokens, d.timesteps, d.in_features, c.spike_rate);
  } else {
    in.s_in = load_spikes(c.input);
    if (in.s_in.tokens() != d.tokens || in.s_in.timesteps() != d.timesteps ||
        in.s_in.features() != d.in_features) {
      throw ConfigError(fmt::format("input file '{}' is {}x{}x{}, expected {}x{}x{}", c.input,
                                    in.s_in.tokens(), in.s_in.timesteps(), in.s_in.features(),
                                    d.tokens, d.timesteps, d.in_features));
    }
  }
  for (const auto& [rows, cols] : c.layer_shapes()) {
    in.weights.push_back(synthetic::random_weights(rng, rows, cols, c.quant.weight_bits));
  }
  return in;
}

SimResult simulate(const WorkloadConfig& c, const Inputs& in) {
  mem::MemoryHierarchy hierarchy(c.buffers);
  const auto array = c.effective_array();
  if (c.kind == Kind::kAttention) {
    auto r = attn::run_attention_layer(in.q, in.k, in.v, c.attention, c.neuron, c.quant, array,
                                       {c.tiles, c.prefetch}, hierarchy);
    return {std::move(r.spikes), std::move(r.trace), std::move(r.stats)};
  }
  auto r = mlp::run_mlp_chain(in.s_in, in.weights, c.neuron, c.quant, array,
                              {c.if_tile, c.w_buffer_chunks, c.prefetch}, hierarchy);
  return {std::move(r.spikes), std::move(r.trace), std::move(r.stats)};
}

SpikeTensor golden(const WorkloadConfig& c, const Inputs& in) {
  if (c.kind == Kind::kAttention) {
    return golden_attention_layer(in.q, in.k, in.v, c.attention, c.neuron, c.quant).spikes;
  }
  SpikeTensor s = in.s_in;
  for (const auto& w : in.weights) s = golden_mlp_layer(s, w, c.neuron, c.quant).spikes;
  return s;
}

mem::PresetTable load_presets(const WorkloadConfig& c) {
  if (!c.presets.empty()) return mem::PresetTable::load(c.presets);
  return mem::PresetTable::from_environment();
}

mem::PresetKey preset_key(const WorkloadConfig& c, Design design) {
  mem::PresetKey key{design, c.workload(), c.array.rows, c.array.cols, std::nullopt};
  if (c.kind != Kind::kAttention) {
    key.bits = mem::PresetBitwidths{c.quant.weight_bits, c.quant.integration_bits};
  }
  return key;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out) throw ConfigError(fmt::format("failed writing '{}'", path.string()));
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError(fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
}

WorkloadConfig load(const std::filesystem::path& path, const Overrides& o) {
  auto c = load_config(path);
  o.apply(c);
  return c;
}

std::string describe(const SpikeCoord& at, const SpikeTensor& sim, const SpikeTensor& ref) {
  return fmt::format("(n={}, t={}, f={}): systolic={} golden={}", at.token, at.timestep, at.feature,
                     sim.at(at.token, at.timestep, at.feature), ref.at(at.token, at.timestep, at.feature));
}

}  // namespace

int cmd_run(const RunOptions& o, std::ostream& out) {
  const auto c = load(o.config, o.overrides);
  const auto presets = load_presets(c);
  const auto& preset = presets.lookup(preset_key(c, c.design));
  const auto inputs = make_inputs(c);
  const auto sim = simulate(c, inputs);
  const auto report = report::aggregate(sim.stats, preset, c.energy);
  const auto text = report::to_text(report);

  ensure_dir(o.output_dir);
  write_file(o.output_dir / "report.txt", text);
  write_file(o.output_dir / "phases.csv", report::phase_table_csv(report));
  if (o.trace) write_file(o.output_dir / "trace.csv", sim.trace.to_csv());
  out << text;

  if (o.verify) {
    const auto ref = golden(c, inputs);
    if (const auto at = first_mismatch(sim.spikes, ref)) {
      fmt::print(out, "MISMATCH at {}\n", describe(*at, sim.spikes, ref));
      return kExitVerifyFailed;
    }
    fmt::print(out, "VERIFIED: systolic == golden\n");
  }
  return kExitOk;
}

namespace {

struct Trial {
  std::string label;
  SpikeTensor sim;
  SpikeTensor ref;
  std::string sim_error;
  std::string ref_error;
};

// Runs one side; a strict-mode overflow is a legitimate outcome that both
// sides must agree on.
template <typename F>
void run_side(F&& f, SpikeTensor& out, std::string& error) {
  try {
    out = f();
  } catch (const BitwidthError& e) {
    error = fmt::format("overflow: {} ({}-bit)", e.quantity(), e.bits());
  }
}

Trial mlp_trial(const WorkloadConfig& base, synthetic::Rng& rng) {
  using synthetic::uniform;
  const mlp::MlpDims dims{uniform(rng, 1, 4), uniform(rng, 1, 4), uniform(rng, 1, 16),
                          uniform(rng, 1, 16)};
  const auto if_tile = uniform(rng, 1, dims.in_features);
  const auto chunks = uniform(rng, 0, 3);
  const auto s = synthetic::random_spikes(rng, dims.tokens, dims.timesteps, dims.in_features,
                                          base.spike_rate);
  const auto w = synthetic::random_weights(rng, dims.in_features, dims.out_features,
                                           base.quant.weight_bits);
  Trial t;
  t.label = fmt::format("mlp N={} T={} D_in={} D_out={} if_tile={} w_chunks={}", dims.tokens,
                        dims.timesteps, dims.in_features, dims.out_features, if_tile, chunks);
  run_side(
      [&] {
        mem::MemoryHierarchy h(base.buffers);
        return mlp::run_mlp_layer(s, w, base.neuron, base.quant, base.effective_array(),
                                  {if_tile, chunks, base.prefetch}, h)
            .spikes;
      },
      t.sim, t.sim_error);
  run_side([&] { return golden_mlp_layer(s, w, base.neuron, base.quant).spikes; }, t.ref,
           t.ref_error);
  return t;
}

Trial attention_trial(const WorkloadConfig& base, synthetic::Rng& rng) {
  using synthetic::uniform;
  const HeadShape shape{uniform(rng, 1, 2), uniform(rng, 1, 8), uniform(rng, 1, 2),
                        uniform(rng, 1, 8)};
  const attn::AttnTiles tiles{uniform(rng, 1, std::min<std::int64_t>(base.array.rows, shape.tokens)),
                              uniform(rng, 1, std::min<std::int64_t>(base.array.cols, shape.tokens)),
                              uniform(rng, 0, 1) == 1};
  auto quant = base.quant;
  const auto need = bitwidth_requirements(shape);
  quant.attention_bits = std::max(quant.attention_bits, need.attention_bits);
  quant.integration_bits = std::max(quant.integration_bits, need.integration_bits);
  const auto D = shape.model_dim();
  const auto q = synthetic::random_spikes(rng, shape.tokens, shape.timesteps, D, base.spike_rate);
  const auto k = synthetic::random_spikes(rng, shape.tokens, shape.timesteps, D, base.spike_rate);
  const auto v = synthetic::random_spikes(rng, shape.tokens, shape.timesteps, D, base.spike_rate);
  Trial t;
  t.label = fmt::format("attention N={} T={} heads={} d={} tiles={}x{}{}", shape.tokens,
                        shape.timesteps, shape.heads, shape.head_dim, tiles.q_tile, tiles.k_tile,
                        tiles.resident_x ? " resident-x" : "");
  run_side(
      [&] {
        mem::MemoryHierarchy h(base.buffers);
        return attn::run_attention_layer(q, k, v, shape, base.neuron, quant, base.array,
                                         {tiles, base.prefetch}, h)
            .spikes;
      },
      t.sim, t.sim_error);
  run_side([&] { return golden_attention_layer(q, k, v, shape, base.neuron, quant).spikes; },
           t.ref, t.ref_error);
  return t;
}

}  // namespace

int cmd_verify(const VerifyOptions& o, std::ostream& out) {
  if (o.trials < 1) throw ConfigError(fmt::format("--trials must be >= 1, got {}", o.trials));
  const auto c = load(o.config, o.overrides);
  synthetic::Rng rng(o.seed);
  std::int64_t passed = 0;
  for (std::int64_t i = 0; i < o.trials; ++i) {
    auto t = c.kind == Kind::kAttention ? attention_trial(c, rng) : mlp_trial(c, rng);
    if (o.inject_bitflip && i == 0 && t.sim_error.empty()) {
      const auto n = t.sim.tokens() / 2;
      const auto ts = t.sim.timesteps() / 2;
      const auto f = t.sim.features() / 2;
      t.sim.set(n, ts, f, t.sim.at(n, ts, f) == 0);
    }
    std::string verdict;
    if (!t.sim_error.empty() || !t.ref_error.empty()) {
      if (t.sim_error == t.ref_error) {
        verdict = fmt::format("PASS (both raised {})", t.sim_error);
      } else {
        verdict = fmt::format("FAIL systolic: {} golden: {}",
                              t.sim_error.empty() ? "ok" : t.sim_error,
                              t.ref_error.empty() ? "ok" : t.ref_error);
      }
    } else if (const auto at = first_mismatch(t.sim, t.ref)) {
      verdict = fmt::format("FAIL first divergence at {}", describe(*at, t.sim, t.ref));
    } else {
      verdict = "PASS";
    }
    if (verdict.rfind("PASS", 0) == 0) ++passed;
    fmt::print(out, "trial {}/{} {}: {}\n", i + 1, o.trials, t.label, verdict);
  }
  fmt::print(out, "verify: {}/{} passed\n", passed, o.trials);
  return passed == o.trials ? kExitOk : kExitVerifyFailed;
}

int cmd_compare(const CompareOptions& o, std::ostream& out) {
  auto c = load(o.config, o.overrides);
  const auto presets = load_presets(c);
  const auto inputs = make_inputs(c);
  std::optional<report::Report> reports[2];
  for (const auto design : {Design::k2D, Design::k3D}) {
    c.design = design;
    const auto& preset = presets.lookup(preset_key(c, design));
    const auto sim = simulate(c, inputs);
    reports[design == Design::k2D ? 0 : 1] = report::aggregate(sim.stats, preset, c.energy);
  }
  const auto cmp = report::compare(*reports[0], *reports[1]);
  std::string text = fmt::format("preset_2d={}\npreset_3d={}\n", reports[0]->preset_key,
                                 reports[1]->preset_key);
  text += report::to_text(cmp);
  if (o.output_dir) {
    ensure_dir(*o.output_dir);
    write_file(*o.output_dir / "compare.txt", text);
  }
  out << text;
  return kExitOk;
}

namespace {

struct Axis {
  std::string key;
  std::vector<std::string> values;
};

Axis parse_axis(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
    throw ConfigError(fmt::format("--vary expects section.key=v1,v2,..., got '{}'", spec));
  }
  Axis a{spec.substr(0, eq), {}};
  std::stringstream in(spec.substr(eq + 1));
  std::string v;
  while (std::getline(in, v, ',')) {
    if (v.empty()) throw ConfigError(fmt::format("--vary '{}' has an empty value", spec));
    a.values.push_back(v);
  }
  return a;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (const char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + '"';
}

struct SweepRow {
  std::vector<std::string> point;
  std::string cells;
  int code = kExitOk;
};

SweepRow sweep_point(const Tree& base, const std::string& source,
                     const std::vector<Axis>& axes, const std::vector<std::string>& point,
                     const Overrides& overrides) {
  SweepRow row{point, {}, kExitOk};
  try {
    Tree tree = base;
    for (std::size_t i = 0; i < axes.size(); ++i) apply_override(tree, axes[i].key, point[i]);
    auto c = from_tree(tree, source);
    overrides.apply(c);
    const auto sim = simulate(c, make_inputs(c));
    const auto& s = sim.stats;
    std::string cost = ",,";
    try {
      const auto presets = load_presets(c);
      const auto r = report::aggregate(s, presets.lookup(preset_key(c, c.design)), c.energy);
      cost = fmt::format("{},{:.6f},{:.6f}", r.preset_key, r.wall_time_ns,
                         r.mem_latency_total_ps);
    } catch (const mem::PresetNotFound&) {
    }
    row.cells = fmt::format("{},{},{},{},{},{},{},{},{},{},{},ok", to_string(c.kind),
                            to_string(c.design), s.total_cycles, s.phases.load, s.phases.compute,
                            s.phases.extract, s.phases.generate, s.transfer_events,
                            s.peak_attention_residency, s.count(Action::kLoadW), cost);
  } catch (const std::exception& e) {
    row.code = exit_code_for(e);
    row.cells = fmt::format(",,,,,,,,,,,,,{}", csv_field(fmt::format("error: {}", e.what())));
  }
  return row;
}

}  // namespace

int cmd_sweep(const SweepOptions& o, std::ostream& out) {
  std::vector<Axis> axes;
  for (const auto& v : o.vary) axes.push_back(parse_axis(v));
  const auto base = read_tree(o.config);
  // Validate the unmodified config up front.
  {
    std::ifstream in(o.config);
    parse_config(in, o.config.string());
  }

  std::vector<std::vector<std::string>> points{{}};
  for (const auto& axis : axes) {
    std::vector<std::vector<std::string>> next;
    for (const auto& p : points) {
      for (const auto& v : axis.values) {
        auto q = p;
        q.push_back(v);
        next.push_back(std::move(q));
      }
    }
    points = std::move(next);
  }

  const unsigned jobs = o.jobs > 0 ? o.jobs : std::max(1u, std::thread::hardware_concurrency());
  std::vector<SweepRow> rows(points.size());
  for (std::size_t first = 0; first < points.size(); first += jobs) {
    std::vector<std::future<SweepRow>> batch;
    const auto last = std::min(points.size(), first + jobs);
    for (std::size_t i = first; i < last; ++i) {
      batch.push_back(std::async(std::launch::async, sweep_point, std::cref(base),
                                 o.config.string(), std::cref(axes), std::cref(points[i]),
                                 std::cref(o.overrides)));
    }
    for (std::size_t i = first; i < last; ++i) rows[i] = batch[i - first].get();
  }

  std::string csv;
  for (const auto& axis : axes) csv += csv_field(axis.key) + ",";
  csv += "kind,design,total_cycles,load,compute,extract,generate,transfer_events,"
         "peak_attention_residency,w_glb_chunk_loads,preset,wall_time_ns,mem_latency_total_ps,"
         "status\n";
  int code = kExitOk;
  for (const auto& row : rows) {
    for (const auto& v : row.point) csv += csv_field(v) + ",";
    csv += row.cells + "\n";
    code = std::max(code, row.code);
  }
  if (o.output) {
    write_file(*o.output, csv);
  } else {
    out << csv;
  }
  return code;
}

int cmd_trace_replay(const ReplayOptions& o, std::ostream& out) {
  const auto c = load(o.config, o.overrides);
  std::ifstream in(o.trace);
  if (!in) throw ConfigError(fmt::format("cannot open trace '{}'", o.trace.string()));
  const auto trace = Trace::read_csv(in);
  const auto stats = report::RunStats::from_trace(trace);
  auto key = preset_key(c, c.design);
  key.workload = stats.workload;
  key.rows = stats.rows;
  key.cols = stats.cols;
  if (stats.workload == Workload::kAttention) key.bits.reset();
  const auto presets = load_presets(c);
  const auto report = report::aggregate(stats, presets.lookup(key), c.energy);
  const auto text = report::to_text(report);
  if (o.output_dir) {
    ensure_dir(*o.output_dir);
    write_file(*o.output_dir / "report.txt", text);
    write_file(*o.output_dir / "phases.csv", report::phase_table_csv(report));
  }
  out << text;
  return kExitOk;
}

}  // namespace spikesim::cli
