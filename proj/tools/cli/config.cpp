#include "config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <charconv>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace spikesim::cli {

namespace pt = boost::property_tree;

std::string_view to_string(Kind k) {
  switch (k) {
    case Kind::kMlp: return "mlp";
    case Kind::kAttention: return "attention";
    case Kind::kLayerChain: return "layer-chain";
  }
  return "mlp";
}

Kind parse_kind(std::string_view text) {
  if (text == "mlp") return Kind::kMlp;
  if (text == "attention") return Kind::kAttention;
  if (text == "layer-chain") return Kind::kLayerChain;
  throw ConfigError(fmt::format("unknown workload kind '{}' (expected mlp|attention|layer-chain)",
                                text));
}

mlp::ExtractionMode WorkloadConfig::extraction() const {
  if (extraction_set) return array.extraction;
  return design == Design::k3D ? mlp::ExtractionMode::kParallel3D : mlp::ExtractionMode::kSerial2D;
}

mlp::ArrayConfig WorkloadConfig::effective_array() const {
  auto a = array;
  a.extraction = extraction();
  return a;
}

std::vector<std::pair<std::int64_t, std::int64_t>> WorkloadConfig::layer_shapes() const {
  std::vector<std::pair<std::int64_t, std::int64_t>> shapes{{mlp.in_features, mlp.out_features}};
  for (const auto width : layers) shapes.emplace_back(shapes.back().second, width);
  return shapes;
}

void WorkloadConfig::validate() const {
  if (!(spike_rate >= 0.0 && spike_rate <= 1.0)) {
    throw ConfigError(fmt::format("workload.spike_rate must lie in [0, 1], got {}", spike_rate));
  }
  quant.validate();
  neuron.validate();
  array.validate();
  if (kind == Kind::kAttention) {
    attention.validate();
    if (tiles.q_tile < 1 || tiles.k_tile < 1) {
      throw ConfigError("attention.q_tile and attention.k_tile must be >= 1");
    }
    if (tiles.q_tile > array.rows || tiles.k_tile > array.cols) {
      throw ConfigError(fmt::format("attention tile {}x{} exceeds the {}x{} array", tiles.q_tile,
                                    tiles.k_tile, array.rows, array.cols));
    }
  } else {
    mlp.validate();
    if (if_tile < 1) throw ConfigError("mlp.if_tile must be >= 1");
    if (w_buffer_chunks < 0) throw ConfigError("mlp.w_buffer_chunks must be >= 0");
    if (kind == Kind::kMlp && !layers.empty()) {
      throw ConfigError("mlp.layers is only valid with workload.kind = layer-chain");
    }
    for (const auto w : layers) {
      if (w < 1) throw ConfigError(fmt::format("mlp.layers widths must be >= 1, got {}", w));
    }
  }
}

Tree read_tree(std::istream& in, const std::string& source) {
  const std::string text(std::istreambuf_iterator<char>(in), {});
  Tree tree;
  try {
    std::istringstream body(text);
    pt::ini_parser::read_ini(body, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("{}:{}: {}", source, e.line(), e.message()));
  }
  // The INI reader drops sections without keys; keep them so unknown ones
  // are still reported.
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    const auto e = line.find_last_not_of(" \t\r");
    if (b == std::string::npos || line[b] != '[' || line[e] != ']') continue;
    const auto name = line.substr(b + 1, e - b - 1);
    const pt::ptree::path_type path(name, '\0');
    if (!tree.get_child_optional(path)) tree.put_child(path, Tree{});
  }
  return tree;
}

Tree read_tree(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
  return read_tree(in, path.string());
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Line of `section.key` in the original text, or 0.
int find_line(const std::string& text, const std::string& section, const std::string& key) {
  std::istringstream in(text);
  std::string line;
  std::string current;
  for (int no = 1; std::getline(in, line); ++no) {
    const auto t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[' && t.back() == ']') {
      current = trim(std::string_view(t).substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq != std::string::npos && current == section && trim(t.substr(0, eq)) == key) return no;
  }
  return 0;
}

class Reader {
 public:
  Reader(const Tree& tree, std::string source, std::string text)
      : tree_(tree), source_(std::move(source)), text_(std::move(text)) {}

  [[noreturn]] void fail(const std::string& section, const std::string& key,
                         const std::string& message) const {
    const int line = find_line(text_, section, key);
    if (line > 0) {
      throw ConfigError(fmt::format("{}:{}: {}.{}: {}", source_, line, section, key, message));
    }
    throw ConfigError(fmt::format("{}: {}.{}: {}", source_, section, key, message));
  }

  std::optional<std::string> raw(const std::string& section, const std::string& key) {
    seen_[section].insert(key);
    const auto s = tree_.get_child_optional(pt::ptree::path_type(section, '\0'));
    if (!s) return std::nullopt;
    const auto v = s->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return trim(*v);
  }

  template <typename T>
  void integer(const std::string& section, const std::string& key, T& out) {
    const auto v = raw(section, key);
    if (!v) return;
    T parsed{};
    const auto* end = v->data() + v->size();
    const auto res = std::from_chars(v->data(), end, parsed);
    if (v->empty() || res.ec != std::errc() || res.ptr != end) {
      fail(section, key, fmt::format("expected an integer, got '{}'", *v));
    }
    out = parsed;
  }

  void real(const std::string& section, const std::string& key, double& out) {
    const auto v = raw(section, key);
    if (!v) return;
    double parsed = 0;
    const auto* end = v->data() + v->size();
    const auto res = std::from_chars(v->data(), end, parsed);
    if (v->empty() || res.ec != std::errc() || res.ptr != end) {
      fail(section, key, fmt::format("expected a number, got '{}'", *v));
    }
    out = parsed;
  }

  void boolean(const std::string& section, const std::string& key, bool& out) {
    const auto v = raw(section, key);
    if (!v) return;
    if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") {
      out = true;
    } else if (*v == "false" || *v == "0" || *v == "no" || *v == "off") {
      out = false;
    } else {
      fail(section, key, fmt::format("expected true or false, got '{}'", *v));
    }
  }

  void string(const std::string& section, const std::string& key, std::string& out) {
    if (const auto v = raw(section, key)) out = *v;
  }

  template <typename F>
  void parsed(const std::string& section, const std::string& key, F&& apply) {
    const auto v = raw(section, key);
    if (!v) return;
    try {
      apply(*v);
    } catch (const ConfigError& e) {
      fail(section, key, e.what());
    }
  }

  void accept_section(const std::string& section) { open_[section] = true; }

  // Rejects sections and keys nobody asked for.
  void check_unknown() const {
    for (const auto& [section, body] : tree_) {
      if (!body.data().empty() && body.empty()) {
        fail("", section, "key outside any section");
      }
      const auto it = seen_.find(section);
      const bool open = open_.count(section) != 0;
      if (it == seen_.end() && !open) {
        throw ConfigError(fmt::format("{}: unknown section [{}]", source_, section));
      }
      if (open) continue;
      for (const auto& [key, value] : body) {
        if (it->second.count(key) == 0) fail(section, key, "unknown key");
      }
    }
  }

 private:
  const Tree& tree_;
  std::string source_;
  std::string text_;
  std::map<std::string, std::set<std::string>> seen_;
  std::map<std::string, bool> open_;
};

std::vector<std::int64_t> parse_list(const std::string& text) {
  std::vector<std::int64_t> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    std::int64_t v = 0;
    const auto* end = item.data() + item.size();
    const auto res = std::from_chars(item.data(), end, v);
    if (item.empty() || res.ec != std::errc() || res.ptr != end) {
      throw ConfigError(fmt::format("expected a comma-separated integer list, got '{}'", text));
    }
    out.push_back(v);
  }
  return out;
}

mem::BufferSpec parse_buffer(const std::string& text, mem::BufferSpec base) {
  const auto x = text.find('x');
  std::int64_t depth = 0;
  int width = 0;
  const auto d = text.substr(0, x == std::string::npos ? text.size() : x);
  auto r1 = std::from_chars(d.data(), d.data() + d.size(), depth);
  bool ok = x != std::string::npos && r1.ec == std::errc() && r1.ptr == d.data() + d.size();
  if (ok) {
    const auto w = text.substr(x + 1);
    auto r2 = std::from_chars(w.data(), w.data() + w.size(), width);
    ok = r2.ec == std::errc() && r2.ptr == w.data() + w.size();
  }
  if (!ok || depth < 1 || width < 1) {
    throw ConfigError(fmt::format("expected DEPTHxWIDTH with both >= 1, got '{}'", text));
  }
  base.depth = depth;
  base.word_bits = width;
  return base;
}

}  // namespace

WorkloadConfig from_tree(const Tree& tree, const std::string& source, const std::string& text) {
  WorkloadConfig c;
  Reader r(tree, source, text);

  r.parsed("workload", "kind", [&](const std::string& v) { c.kind = parse_kind(v); });
  r.integer("workload", "seed", c.seed);
  r.real("workload", "spike_rate", c.spike_rate);
  r.string("workload", "input", c.input);
  r.string("workload", "input_q", c.input_q);
  r.string("workload", "input_k", c.input_k);
  r.string("workload", "input_v", c.input_v);

  r.integer("mlp", "tokens", c.mlp.tokens);
  r.integer("mlp", "timesteps", c.mlp.timesteps);
  r.integer("mlp", "in_features", c.mlp.in_features);
  r.integer("mlp", "out_features", c.mlp.out_features);
  r.integer("mlp", "if_tile", c.if_tile);
  r.integer("mlp", "w_buffer_chunks", c.w_buffer_chunks);
  r.parsed("mlp", "layers", [&](const std::string& v) { c.layers = parse_list(v); });

  r.integer("attention", "tokens", c.attention.tokens);
  r.integer("attention", "timesteps", c.attention.timesteps);
  r.integer("attention", "heads", c.attention.heads);
  r.integer("attention", "head_dim", c.attention.head_dim);
  r.integer("attention", "q_tile", c.tiles.q_tile);
  r.integer("attention", "k_tile", c.tiles.k_tile);
  r.boolean("attention", "resident_x", c.tiles.resident_x);

  r.integer("quant", "weight_bits", c.quant.weight_bits);
  r.integer("quant", "integration_bits", c.quant.integration_bits);
  r.integer("quant", "attention_bits", c.quant.attention_bits);
  r.parsed("quant", "overflow",
           [&](const std::string& v) { c.quant.overflow = parse_overflow_mode(v); });

  r.integer("neuron", "v_th", c.neuron.v_th);
  r.integer("neuron", "v_leak", c.neuron.v_leak);

  r.integer("array", "rows", c.array.rows);
  r.integer("array", "cols", c.array.cols);
  r.parsed("array", "extraction", [&](const std::string& v) {
    c.array.extraction = mlp::parse_extraction_mode(v);
    c.extraction_set = true;
  });
  r.boolean("array", "prefetch", c.prefetch);

  r.parsed("cost", "design", [&](const std::string& v) { c.design = parse_design(v); });
  r.string("cost", "presets", c.presets);

  for (std::size_t i = 0; i < mem::kNumBuffers; ++i) {
    const auto b = mem::buffer_at(i);
    const std::string n(mem::name(b));
    r.parsed("buffers", n,
             [&](const std::string& v) { c.buffers[b] = parse_buffer(v, c.buffers[b]); });
    r.parsed("energy", n, [&](const std::string& v) {
      double pj = 0;
      const auto res = std::from_chars(v.data(), v.data() + v.size(), pj);
      if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size() || pj < 0) {
        throw ConfigError(fmt::format("expected a non-negative number, got '{}'", v));
      }
      c.energy.pj_per_access[i] = pj;
    });
  }
  r.check_unknown();

  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", source, e.what()));
  }
  return c;
}

WorkloadConfig parse_config(std::istream& in, const std::string& source) {
  std::stringstream buffer;
  buffer << in.rdbuf();
  const auto text = buffer.str();
  std::istringstream again(text);
  return from_tree(read_tree(again, source), source, text);
}

WorkloadConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
  return parse_config(in, path.string());
}

std::string serialize(const WorkloadConfig& c) {
  std::string out;
  auto line = [&](std::string_view key, const auto& value) {
    out += fmt::format("{} = {}\n", key, value);
  };
  out += "[workload]\n";
  line("kind", to_string(c.kind));
  line("seed", c.seed);
  line("spike_rate", c.spike_rate);
  if (!c.input.empty()) line("input", c.input);
  if (!c.input_q.empty()) line("input_q", c.input_q);
  if (!c.input_k.empty()) line("input_k", c.input_k);
  if (!c.input_v.empty()) line("input_v", c.input_v);

  out += "\n[mlp]\n";
  line("tokens", c.mlp.tokens);
  line("timesteps", c.mlp.timesteps);
  line("in_features", c.mlp.in_features);
  line("out_features", c.mlp.out_features);
  line("if_tile", c.if_tile);
  line("w_buffer_chunks", c.w_buffer_chunks);
  if (!c.layers.empty()) line("layers", fmt::format("{}", fmt::join(c.layers, ",")));

  out += "\n[attention]\n";
  line("tokens", c.attention.tokens);
  line("timesteps", c.attention.timesteps);
  line("heads", c.attention.heads);
  line("head_dim", c.attention.head_dim);
  line("q_tile", c.tiles.q_tile);
  line("k_tile", c.tiles.k_tile);
  line("resident_x", c.tiles.resident_x ? "true" : "false");

  out += "\n[quant]\n";
  line("weight_bits", c.quant.weight_bits);
  line("integration_bits", c.quant.integration_bits);
  line("attention_bits", c.quant.attention_bits);
  line("overflow", to_string(c.quant.overflow));

  out += "\n[neuron]\n";
  line("v_th", c.neuron.v_th);
  line("v_leak", c.neuron.v_leak);

  out += "\n[array]\n";
  line("rows", c.array.rows);
  line("cols", c.array.cols);
  if (c.extraction_set) line("extraction", mlp::to_string(c.array.extraction));
  line("prefetch", c.prefetch ? "true" : "false");

  out += "\n[cost]\n";
  line("design", to_string(c.design));
  if (!c.presets.empty()) line("presets", c.presets);

  out += "\n[buffers]\n";
  for (std::size_t i = 0; i < mem::kNumBuffers; ++i) {
    const auto b = mem::buffer_at(i);
    out += fmt::format("{} = {}x{}\n", mem::name(b), c.buffers[b].depth, c.buffers[b].word_bits);
  }
  if (!c.energy.empty()) {
    out += "\n[energy]\n";
    for (std::size_t i = 0; i < mem::kNumBuffers; ++i) {
      if (const auto& pj = c.energy.pj_per_access[i]) line(mem::name(mem::buffer_at(i)), *pj);
    }
  }
  return out;
}

void apply_override(Tree& tree, const std::string& dotted_key, const std::string& value) {
  const auto dot = dotted_key.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == dotted_key.size()) {
    throw ConfigError(fmt::format("override key '{}' must look like section.key", dotted_key));
  }
  const auto section = dotted_key.substr(0, dot);
  const auto key = dotted_key.substr(dot + 1);
  const pt::ptree::path_type path(section, '\0');
  if (!tree.get_child_optional(path)) tree.put_child(path, Tree{});
  tree.get_child(path).put(pt::ptree::path_type(key, '\0'), value);
}

}  // namespace spikesim::cli
