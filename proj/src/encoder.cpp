#include "clignet/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "clignet/errors.hpp"
#include "clignet/hashing.hpp"
#include "clignet/text.hpp"

namespace clignet {

TokenSequence to_sequence(std::string_view text) { return TokenSequence{tokenize(text)}; }

std::size_t chunk_count(std::size_t length, const ChunkParams& p) {
  const std::size_t over = length > p.window ? length - p.window : 0;
  const std::size_t uncapped = 1 + (over + p.stride - 1) / p.stride;
  return std::min(p.max_chunks, uncapped);
}

ChunkSet make_chunks(std::size_t length, const ChunkParams& p) {
  if (p.window == 0 || p.stride == 0 || p.stride > p.window) {
    throw InputError("chunking requires window > 0 and 0 < stride <= window");
  }
  if (p.max_chunks == 0) throw InputError("chunking requires max_chunks >= 1");
  ChunkSet set;
  for (std::size_t start = 0; set.windows.size() < p.max_chunks; start += p.stride) {
    const std::size_t end = std::min(length, start + p.window);
    set.windows.push_back({start, end});
    if (end == length) break;
  }
  return set;
}

double SparseVector::norm() const {
  double s = 0.0;
  for (const double v : value) s += v * v;
  return std::sqrt(s);
}

double SparseVector::dot(std::span<const double> dense) const {
  double s = 0.0;
  for (std::size_t i = 0; i < index.size(); ++i) s += value[i] * dense[index[i]];
  return s;
}

FeatureHasher::FeatureHasher(std::uint32_t buckets) : buckets_(buckets) {
  if (buckets == 0) throw InputError("hash bucket count must be positive");
}

std::vector<HashedNgram> FeatureHasher::ngrams(std::span<const std::string> window) const {
  std::vector<HashedNgram> out;
  out.reserve(window.size() * 2);
  const auto add = [&](const std::string& key, std::uint32_t a, std::uint32_t b) {
    const std::uint64_t h = stable_hash64(key);
    out.push_back({static_cast<std::uint32_t>((h & 0xFFFFFFFFULL) % buckets_), (h >> 63) ? -1.0 : 1.0, a, b});
  };
  std::string bigram;
  for (std::uint32_t i = 0; i < window.size(); ++i) {
    add(window[i], i, i);
    if (i + 1 < window.size()) {
      bigram.assign(window[i]);
      bigram.push_back(' ');
      bigram.append(window[i + 1]);
      add(bigram, i, i + 1);
    }
  }
  return out;
}

SparseVector FeatureHasher::hash_counts(std::span<const std::string> window) const {
  std::map<std::uint32_t, double> acc;
  for (const auto& g : ngrams(window)) acc[g.bucket] += g.sign;
  SparseVector v;
  for (const auto& [b, x] : acc) {
    if (x != 0.0) {
      v.index.push_back(b);
      v.value.push_back(x);
    }
  }
  return v;
}

SparseVector FeatureHasher::hash_normalized(std::span<const std::string> window) const {
  SparseVector v = hash_counts(window);
  const double n = v.norm();
  if (n > 0.0) {
    for (double& x : v.value) x /= n;
  }
  return v;
}

DocFeatures document_features(const TokenSequence& seq, const ChunkParams& params, const FeatureHasher& hasher) {
  const ChunkSet chunks = make_chunks(seq.length(), params);
  std::map<std::uint32_t, double> acc;
  const double inv_c = 1.0 / static_cast<double>(chunks.count());
  for (const auto& w : chunks.windows) {
    const auto part = hasher.hash_normalized(std::span(seq.tokens).subspan(w.start, w.width()));
    for (std::size_t i = 0; i < part.nnz(); ++i) acc[part.index[i]] += part.value[i] * inv_c;
  }
  DocFeatures out;
  out.chunks = chunks.count();
  for (const auto& [b, x] : acc) {
    if (x != 0.0) {
      out.pooled.index.push_back(b);
      out.pooled.value.push_back(x);
    }
  }
  return out;
}

std::vector<TokenContribution> token_contributions(const TokenSequence& seq, const ChunkParams& params,
                                                   const FeatureHasher& hasher) {
  const ChunkSet chunks = make_chunks(seq.length(), params);
  const double inv_c = 1.0 / static_cast<double>(chunks.count());
  std::map<std::pair<std::string, std::uint32_t>, double> acc;
  for (const auto& w : chunks.windows) {
    const auto window = std::span(seq.tokens).subspan(w.start, w.width());
    const double n = hasher.hash_counts(window).norm();
    if (n == 0.0) continue;
    for (const auto& g : hasher.ngrams(window)) {
      const double amount = g.sign * inv_c / n;
      if (g.first == g.second) {
        acc[{window[g.first], g.bucket}] += amount;
      } else {
        acc[{window[g.first], g.bucket}] += 0.5 * amount;
        acc[{window[g.second], g.bucket}] += 0.5 * amount;
      }
    }
  }
  std::vector<TokenContribution> out;
  out.reserve(acc.size());
  for (const auto& [key, amount] : acc) out.push_back({key.first, key.second, amount});
  return out;
}

Eigen::VectorXd pool_chunks(std::span<const Eigen::VectorXd> chunks) {
  if (chunks.empty()) throw InputError("cannot pool an empty chunk list");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(chunks.front().size());
  for (const auto& c : chunks) {
    if (c.size() != sum.size()) throw InputError("chunk vectors differ in dimension");
    sum += c;
  }
  return sum / static_cast<double>(chunks.size());
}

Eigen::VectorXd project(const Eigen::MatrixXd& projection, const SparseVector& x) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(projection.rows());
  for (std::size_t i = 0; i < x.nnz(); ++i) out.noalias() += x.value[i] * projection.col(x.index[i]);
  return out;
}

Eigen::VectorXd encode_chunk_reference(std::span<const std::string> window, const FeatureHasher& hasher,
                                       const Eigen::MatrixXd& projection) {
  if (static_cast<std::uint32_t>(projection.cols()) != hasher.buckets()) {
    throw InputError("projection width does not match the hash bucket count");
  }
  return project(projection, hasher.hash_normalized(window));
}

}  // namespace clignet
