#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace clignet {

/// One data row of the transcription CSV, before cleaning.
struct RawRecord {
  std::size_t row = 0;  // 1-based data row in the source file
  std::string description;
  std::string medical_specialty;
  std::string sample_name;
  std::string transcription;
  std::string keywords;
};

struct Record {
  std::size_t id = 0;  // dense, 0..N-1 after cleaning
  std::string description;
  int label = 0;
  std::string sample_name;
  std::string transcription;
  std::string keywords;
};

/// Specialty names in first-appearance order; counts are filled per split.
struct LabelVocabulary {
  std::vector<std::string> names;
  std::vector<std::size_t> counts;

  std::size_t size() const noexcept { return names.size(); }
  std::optional<int> find(std::string_view name) const;
};

struct Corpus {
  std::vector<Record> records;
  LabelVocabulary labels;

  std::size_t size() const noexcept { return records.size(); }
  std::size_t num_labels() const noexcept { return labels.size(); }
};

enum class Split : std::uint8_t { train = 0, val = 1, test = 2 };

std::string_view to_string(Split split) noexcept;
Split parse_split(std::string_view text);

using SplitFractions = std::array<double, 3>;

struct SplitAssignment {
  std::vector<Split> split;  // indexed by record id
  SplitFractions fractions{0.70, 0.15, 0.15};
  std::uint64_t seed = 42;

  std::vector<std::size_t> ids(Split which) const;
  std::array<std::size_t, 3> totals() const;
};

std::vector<RawRecord> load_csv(const std::filesystem::path& path);
std::vector<RawRecord> parse_records(std::string_view csv_text);

/// Drops empty/whitespace-only transcriptions, trims specialty names, assigns
/// dense ids and label ids in first-appearance order.
Corpus clean(const std::vector<RawRecord>& raw);

/// Per-class seeded shuffle then largest-remainder allocation, reconciled so
/// the global totals equal largest-remainder rounding of N x fractions.
SplitAssignment stratified_split(const Corpus& corpus, const SplitFractions& fractions,
                                 std::uint64_t seed);

/// Largest-remainder rounding of n x fractions; ties go train, val, test.
std::array<std::size_t, 3> largest_remainder(std::size_t n, const SplitFractions& fractions);

struct CorpusStats {
  std::size_t num_records = 0;
  std::size_t num_labels = 0;
  std::array<std::size_t, 3> split_totals{};
  std::vector<std::size_t> class_counts;  // whole corpus
  std::vector<std::size_t> train_counts;
  std::size_t largest_label = 0;
  std::size_t smallest_label = 0;
  double imbalance_ratio = 0.0;
  std::size_t classes_below_20_train = 0;
  double median_word_count = 0.0;
  double fraction_over_window = 0.0;
  std::size_t window_tokens = 512;
};

CorpusStats corpus_stats(const Corpus& corpus, const SplitAssignment& split,
                         std::size_t window_tokens = 512);

/// Writes the statistics report as `key: value` lines.
std::string format_stats(const Corpus& corpus, const CorpusStats& stats);

/// Training-split label counts (n_k).
std::vector<std::size_t> train_label_counts(const Corpus& corpus, const SplitAssignment& split);

// Persistence of ingest outputs.
void write_corpus_store(const Corpus& corpus, const std::filesystem::path& path);
Corpus read_corpus_store(const std::filesystem::path& path);
void write_split_manifest(const SplitAssignment& split, const std::filesystem::path& path);
SplitAssignment read_split_manifest(const std::filesystem::path& path, std::size_t num_records);

}  // namespace clignet
