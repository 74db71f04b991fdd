#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "clignet/corpus.hpp"
#include "clignet/encoder.hpp"

namespace clignet {

enum class Mode { B1, B6, B8, A1, A2, A4, A5 };

std::string_view to_string(Mode mode) noexcept;
Mode parse_mode(std::string_view text);

/// Every tunable of a run. Keys are `section.name`.
struct RunConfig {
  std::uint64_t seed = 42;
  Mode mode = Mode::B6;
  std::string csv;

  SplitFractions split{0.70, 0.15, 0.15};

  std::string encoder_kind = "reference";  // reference | precomputed
  std::string embeddings;
  std::size_t window = 512;
  std::size_t stride = 128;
  bool stride_is_overlap = false;
  std::size_t max_chunks = 4;
  std::size_t hash_buckets = 262144;
  std::size_t dim = 768;

  double graph_tau = 0.30;
  double graph_bonus = 0.20;
  std::size_t per_label_cap = 30;
  std::string chapters;

  std::size_t d1 = 512;
  std::size_t d2 = 256;
  double dropout = 0.3;

  double gamma = 2.0;
  double weight_min = 0.1;
  double weight_max = 10.0;

  double lr_encoder = 2e-5;
  double lr_head = 1e-3;
  double weight_decay = 0.01;
  double warmup_fraction = 0.10;
  double clip_norm = 1.0;
  std::size_t batch_size = 16;
  std::size_t accumulation_steps = 2;
  std::size_t max_epochs = 30;
  std::size_t patience = 5;
  bool record_time = false;

  std::size_t ece_bins = 10;
  double family_alpha = 0.05;

  std::size_t ig_steps = 50;
  std::size_t ig_documents = 5;
  std::size_t ig_top_tokens = 10;

  std::size_t max_features = 50000;
  double baseline_l2 = 1e-4;
  std::size_t baseline_max_iter = 500;
  double baseline_tol = 1e-6;

  bool no_gcn = false;
  bool plain_bce = false;
  bool no_sliding_window = false;
  bool fixed_threshold = false;
  std::string a4_embeddings;

  bool precomputed() const { return encoder_kind == "precomputed"; }

  /// Window parameters after the stride interpretation and the A4 switch.
  ChunkParams chunk_params() const;

  /// The config with the switches implied by `mode` turned on.
  RunConfig for_mode(Mode m) const;

  /// Canonical `key=value` text, one line per key in a fixed order.
  std::string serialize() const;

  /// Range checks; throws InputError.
  void validate() const;
};

/// Sets one key; throws InputError for unknown keys or malformed values.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);

/// Parses `key=value` lines. `[section]` headers prefix following bare keys.
/// `#` starts a comment line.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig read_config(const std::filesystem::path& path);

}  // namespace clignet
