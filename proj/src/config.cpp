#include "clignet/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "clignet/errors.hpp"
#include "clignet/text.hpp"

namespace clignet {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc{} || r.ptr != v.data() + v.size()) {
    throw InputError("config key " + std::string(key) + ": expected a number, got '" + std::string(v) + "'");
  }
  return out;
}

std::uint64_t to_uint(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc{} || r.ptr != v.data() + v.size()) {
    throw InputError("config key " + std::string(key) + ": expected a non-negative integer, got '" +
                     std::string(v) + "'");
  }
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw InputError("config key " + std::string(key) + ": expected true or false, got '" + std::string(v) + "'");
}

struct Field {
  std::string_view key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Field num_field(std::string_view key, T RunConfig::*member) {
  if constexpr (std::is_same_v<T, double>) {
    return {key, [key, member](RunConfig& c, std::string_view v) { c.*member = to_double(key, v); },
            [member](const RunConfig& c) { return fmt_double(c.*member); }};
  } else if constexpr (std::is_same_v<T, bool>) {
    return {key, [key, member](RunConfig& c, std::string_view v) { c.*member = to_bool(key, v); },
            [member](const RunConfig& c) { return std::string(c.*member ? "true" : "false"); }};
  } else if constexpr (std::is_same_v<T, std::string>) {
    return {key, [member](RunConfig& c, std::string_view v) { c.*member = std::string(v); },
            [member](const RunConfig& c) { return c.*member; }};
  } else {
    return {key, [key, member](RunConfig& c, std::string_view v) { c.*member = static_cast<T>(to_uint(key, v)); },
            [member](const RunConfig& c) { return std::to_string(c.*member); }};
  }
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(num_field("run.seed", &RunConfig::seed));
    f.push_back({"run.mode", [](RunConfig& c, std::string_view v) { c.mode = parse_mode(v); },
                 [](const RunConfig& c) { return std::string(to_string(c.mode)); }});
    f.push_back(num_field("data.csv", &RunConfig::csv));
    for (std::size_t i = 0; i < 3; ++i) {
      static constexpr std::string_view names[] = {"split.train", "split.val", "split.test"};
      f.push_back({names[i], [i](RunConfig& c, std::string_view v) { c.split[i] = to_double(names[i], v); },
                   [i](const RunConfig& c) { return fmt_double(c.split[i]); }});
    }
    f.push_back(num_field("encoder.kind", &RunConfig::encoder_kind));
    f.push_back(num_field("encoder.embeddings", &RunConfig::embeddings));
    f.push_back(num_field("encoder.window", &RunConfig::window));
    f.push_back(num_field("encoder.stride", &RunConfig::stride));
    f.push_back(num_field("encoder.stride_is_overlap", &RunConfig::stride_is_overlap));
    f.push_back(num_field("encoder.max_chunks", &RunConfig::max_chunks));
    f.push_back(num_field("encoder.hash_buckets", &RunConfig::hash_buckets));
    f.push_back(num_field("encoder.dim", &RunConfig::dim));
    f.push_back(num_field("graph.tau", &RunConfig::graph_tau));
    f.push_back(num_field("graph.bonus", &RunConfig::graph_bonus));
    f.push_back(num_field("graph.per_label_cap", &RunConfig::per_label_cap));
    f.push_back(num_field("graph.chapters", &RunConfig::chapters));
    f.push_back(num_field("model.d1", &RunConfig::d1));
    f.push_back(num_field("model.d2", &RunConfig::d2));
    f.push_back(num_field("model.dropout", &RunConfig::dropout));
    f.push_back(num_field("loss.gamma", &RunConfig::gamma));
    f.push_back(num_field("loss.weight_min", &RunConfig::weight_min));
    f.push_back(num_field("loss.weight_max", &RunConfig::weight_max));
    f.push_back(num_field("train.lr_encoder", &RunConfig::lr_encoder));
    f.push_back(num_field("train.lr_head", &RunConfig::lr_head));
    f.push_back(num_field("train.weight_decay", &RunConfig::weight_decay));
    f.push_back(num_field("train.warmup_fraction", &RunConfig::warmup_fraction));
    f.push_back(num_field("train.clip_norm", &RunConfig::clip_norm));
    f.push_back(num_field("train.batch_size", &RunConfig::batch_size));
    f.push_back(num_field("train.accumulation_steps", &RunConfig::accumulation_steps));
    f.push_back(num_field("train.max_epochs", &RunConfig::max_epochs));
    f.push_back(num_field("train.patience", &RunConfig::patience));
    f.push_back(num_field("train.record_time", &RunConfig::record_time));
    f.push_back(num_field("metrics.ece_bins", &RunConfig::ece_bins));
    f.push_back(num_field("metrics.family_alpha", &RunConfig::family_alpha));
    f.push_back(num_field("attribution.steps", &RunConfig::ig_steps));
    f.push_back(num_field("attribution.documents", &RunConfig::ig_documents));
    f.push_back(num_field("attribution.top_tokens", &RunConfig::ig_top_tokens));
    f.push_back(num_field("baseline.max_features", &RunConfig::max_features));
    f.push_back(num_field("baseline.l2", &RunConfig::baseline_l2));
    f.push_back(num_field("baseline.max_iter", &RunConfig::baseline_max_iter));
    f.push_back(num_field("baseline.tol", &RunConfig::baseline_tol));
    f.push_back(num_field("ablation.no_gcn", &RunConfig::no_gcn));
    f.push_back(num_field("ablation.plain_bce", &RunConfig::plain_bce));
    f.push_back(num_field("ablation.no_sliding_window", &RunConfig::no_sliding_window));
    f.push_back(num_field("ablation.fixed_threshold", &RunConfig::fixed_threshold));
    f.push_back(num_field("ablation.a4_embeddings", &RunConfig::a4_embeddings));
    return f;
  }();
  return table;
}

}  // namespace

std::string_view to_string(Mode mode) noexcept {
  switch (mode) {
    case Mode::B1: return "B1";
    case Mode::B6: return "B6";
    case Mode::B8: return "B8";
    case Mode::A1: return "A1";
    case Mode::A2: return "A2";
    case Mode::A4: return "A4";
    case Mode::A5: return "A5";
  }
  return "B6";
}

Mode parse_mode(std::string_view text) {
  for (const Mode m : {Mode::B1, Mode::B6, Mode::B8, Mode::A1, Mode::A2, Mode::A4, Mode::A5}) {
    if (to_string(m) == text) return m;
  }
  throw InputError("unknown mode '" + std::string(text) + "' (expected B1, B6, B8, A1, A2, A4 or A5)");
}

ChunkParams RunConfig::chunk_params() const {
  ChunkParams p;
  p.window = window;
  p.stride = stride_is_overlap ? window - stride : stride;
  p.max_chunks = no_sliding_window ? 1 : max_chunks;
  return p;
}

RunConfig RunConfig::for_mode(Mode m) const {
  RunConfig c = *this;
  c.mode = m;
  switch (m) {
    case Mode::A1: c.no_gcn = true; break;
    case Mode::A2: c.plain_bce = true; break;
    case Mode::A4: c.no_sliding_window = true; break;
    case Mode::A5: c.fixed_threshold = true; break;
    default: break;
  }
  return c;
}

std::string RunConfig::serialize() const {
  std::string out;
  for (const auto& f : fields()) {
    out += f.key;
    out += '=';
    out += f.get(*this);
    out += '\n';
  }
  return out;
}

void RunConfig::validate() const {
  const auto fail = [](const std::string& msg) { throw InputError("config: " + msg); };
  double sum = 0.0;
  for (const double f : split) {
    if (f < 0.0) fail("split fractions must be non-negative");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) fail("split fractions must sum to 1");
  if (encoder_kind != "reference" && encoder_kind != "precomputed") {
    fail("encoder.kind must be reference or precomputed");
  }
  if (window == 0 || max_chunks == 0) fail("encoder.window and encoder.max_chunks must be positive");
  if (stride_is_overlap ? stride >= window : stride == 0) fail("encoder.stride leaves no forward step");
  if (!precomputed() && (hash_buckets == 0 || hash_buckets > (1ull << 32))) fail("encoder.hash_buckets out of range");
  if (dim == 0 || d1 == 0 || d2 == 0) fail("dimensions must be positive");
  if (dropout < 0.0 || dropout >= 1.0) fail("model.dropout must lie in [0, 1)");
  if (gamma < 0.0) fail("loss.gamma must be non-negative");
  if (!(weight_min > 0.0 && weight_min <= weight_max)) fail("loss weight bounds are inconsistent");
  if (lr_encoder < 0.0 || lr_head < 0.0 || weight_decay < 0.0) fail("learning rates and decay must be non-negative");
  if (warmup_fraction < 0.0 || warmup_fraction >= 1.0) fail("train.warmup_fraction must lie in [0, 1)");
  if (!(clip_norm > 0.0)) fail("train.clip_norm must be positive");
  if (batch_size == 0 || accumulation_steps == 0 || max_epochs == 0) fail("batch sizes and epochs must be positive");
  if (ece_bins < 2) fail("metrics.ece_bins must be at least 2");
  if (!(family_alpha > 0.0 && family_alpha < 1.0)) fail("metrics.family_alpha must lie in (0, 1)");
  if (ig_steps < 2) fail("attribution.steps must be at least 2");
  if (max_features == 0) fail("baseline.max_features must be positive");
}

void set_config_value(RunConfig& config, std::string_view key, std::string_view value) {
  for (const auto& f : fields()) {
    if (f.key == key) {
      f.set(config, value);
      return;
    }
  }
  throw InputError("unknown config key '" + std::string(key) + "'");
}

RunConfig parse_config(std::string_view text, RunConfig base) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::string section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#' || t.front() == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw InputError("config line " + std::to_string(lineno) + ": unterminated section");
      section = trim(std::string_view(t).substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw InputError("config line " + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (!section.empty() && key.find('.') == std::string::npos) key = section + "." + key;
    set_config_value(base, key, value);
  }
  return base;
}

RunConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace clignet
