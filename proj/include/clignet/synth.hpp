#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace clignet {

/// Planted corpus: every class owns a private vocabulary, classes are grouped
/// in pairs that share a second vocabulary (so their label-graph nodes are
/// close), and all documents draw filler words from a common pool.
struct SynthOptions {
  std::size_t classes = 8;
  std::size_t documents = 400;
  std::uint64_t seed = 7;
  std::size_t min_words = 40;
  std::size_t max_words = 700;
  double class_share = 0.25;  // fraction of words from the class vocabulary
  double pair_share = 0.25;   // fraction from the pair vocabulary
  std::size_t class_vocab = 40;
  std::size_t pair_vocab = 40;
  std::size_t common_vocab = 400;
  std::size_t empty_transcriptions = 0;  // extra rows with blank text
  /// Documents per class; when empty, sizes are drawn with a mild skew.
  std::vector<std::size_t> class_sizes;
};

/// Specialty names used for the first classes (pairs share an ICD chapter).
const std::vector<std::string>& synth_class_names();

/// MTSamples-shaped CSV text with a leading unnamed index column.
std::string synth_csv(const SynthOptions& options);

}  // namespace clignet
