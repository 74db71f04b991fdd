#pragma once

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

#include "clignet/encoder.hpp"
#include "clignet/network.hpp"

namespace clignet {

struct AttributionResult {
  int label = 0;
  bool token_level = false;  // false: scores are per embedding dimension
  std::vector<std::pair<std::string, double>> token_scores;
  double logit = 0.0;           // F(x)
  double baseline_logit = 0.0;  // F(x0)
  double total = 0.0;           // sum of attributions
  double completeness_gap = 0.0;
};

/// Raw feature-level Integrated Gradients: one value per input coordinate.
/// For hashed documents the coordinates are the nonzero buckets of the pooled
/// feature vector (same order as `doc.features.index`), otherwise the
/// embedding dimensions. Midpoint rule, zero baseline unless `baseline` is
/// given (embedding mode only).
struct FeatureAttribution {
  Eigen::VectorXd values;     // (x - x0) * unit_grad
  Eigen::VectorXd unit_grad;  // path-averaged dF/dx per coordinate
  double logit = 0.0;
  double baseline_logit = 0.0;
};
FeatureAttribution integrated_gradients_features(const Network& net, const DocInput& doc, int label,
                                                 std::size_t steps, const Eigen::VectorXd* baseline = nullptr);

/// Feature attributions aggregated to tokens (hashed documents, with the
/// token sequence) or reported per embedding dimension (`dim_<j>`).
AttributionResult integrated_gradients(const Network& net, const DocInput& doc, int label, std::size_t steps,
                                       const TokenSequence* tokens = nullptr, const ChunkParams* chunks = nullptr,
                                       const FeatureHasher* hasher = nullptr);

/// Tokens sorted by signed score descending, ties by token text.
std::vector<std::pair<std::string, double>> top_tokens(const AttributionResult& result, std::size_t n);

}  // namespace clignet
