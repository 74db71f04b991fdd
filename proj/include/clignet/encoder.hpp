#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace clignet {

struct TokenSequence {
  std::vector<std::string> tokens;
  std::size_t length() const noexcept { return tokens.size(); }
};

TokenSequence to_sequence(std::string_view text);

struct ChunkWindow {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive
  std::size_t width() const noexcept { return end - start; }
};

struct ChunkSet {
  std::vector<ChunkWindow> windows;
  std::size_t count() const noexcept { return windows.size(); }
};

struct ChunkParams {
  std::size_t window = 512;
  std::size_t stride = 128;  // step between window starts
  std::size_t max_chunks = 4;
};

/// Windows start at 0, S, 2S, ... and span min(W, remaining) tokens. Stops
/// once a window reaches the end of the sequence or max_chunks windows exist,
/// so the document prefix is kept. An empty sequence yields one empty window.
ChunkSet make_chunks(std::size_t length, const ChunkParams& params);

/// min(C_max, 1 + ceil(max(0, L - W) / S)).
std::size_t chunk_count(std::size_t length, const ChunkParams& params);

/// Sparse vector with strictly increasing indices.
struct SparseVector {
  std::vector<std::uint32_t> index;
  std::vector<double> value;

  std::size_t nnz() const noexcept { return index.size(); }
  double norm() const;
  double dot(std::span<const double> dense) const;
};

/// One hashed n-gram occurrence: which bucket it lands in, its sign, and the
/// window-local token positions it covers (second = first for unigrams).
struct HashedNgram {
  std::uint32_t bucket = 0;
  double sign = 1.0;
  std::uint32_t first = 0;
  std::uint32_t second = 0;
};

/// Signed feature hashing of word unigrams and bigrams.
class FeatureHasher {
 public:
  explicit FeatureHasher(std::uint32_t buckets = 1u << 18);

  std::uint32_t buckets() const noexcept { return buckets_; }

  std::vector<HashedNgram> ngrams(std::span<const std::string> window) const;

  /// Raw signed bucket counts of a window, before normalization.
  SparseVector hash_counts(std::span<const std::string> window) const;

  /// hash_counts scaled to unit L2 norm (zero vector stays zero).
  SparseVector hash_normalized(std::span<const std::string> window) const;

 private:
  std::uint32_t buckets_;
};

/// Document-level input for the reference encoder: the mean over chunks of
/// the normalized bucket vectors. Because the projection is linear, projecting
/// this mean equals mean-pooling the projected chunk vectors.
struct DocFeatures {
  SparseVector pooled;
  std::size_t chunks = 0;
};

DocFeatures document_features(const TokenSequence& seq, const ChunkParams& params, const FeatureHasher& hasher);

/// Per-token share of each pooled bucket value, used to push bucket-level
/// attributions back onto tokens. Bigram contributions are split evenly
/// between their two tokens.
struct TokenContribution {
  std::string token;
  std::uint32_t bucket = 0;
  double amount = 0.0;
};

std::vector<TokenContribution> token_contributions(const TokenSequence& seq, const ChunkParams& params,
                                                   const FeatureHasher& hasher);

/// Arithmetic mean of chunk vectors. Throws InputError on an empty list.
Eigen::VectorXd pool_chunks(std::span<const Eigen::VectorXd> chunks);

/// projection (d_enc x buckets) times the normalized hashed window.
Eigen::VectorXd encode_chunk_reference(std::span<const std::string> window, const FeatureHasher& hasher,
                                       const Eigen::MatrixXd& projection);

/// projection * x for sparse x.
Eigen::VectorXd project(const Eigen::MatrixXd& projection, const SparseVector& x);

}  // namespace clignet
