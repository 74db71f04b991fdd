#include <gtest/gtest.h>

#include <cmath>

#include "clignet/attribution.hpp"
#include "clignet/errors.hpp"
#include "test_util.hpp"

using namespace clignet;
using namespace clignet::testing;

namespace {

Network model(std::uint64_t seed, bool use_gcn, std::size_t buckets, std::size_t k = 4) {
  Rng rng(seed);
  NetworkConfig cfg{6, 5, 4, k, 0.3, use_gcn};
  const auto kk = static_cast<Eigen::Index>(k);
  Network net(cfg, random_a_hat(rng, kk), random_matrix(rng, kk, 6));
  net.initialize(rng, buckets);
  randomize(net.params(), rng);
  net.mark_trained();
  return net;
}

DocInput embedding_doc(Rng& rng, Eigen::Index d) {
  DocInput doc;
  doc.embedding = random_matrix(rng, d, 1).col(0);
  return doc;
}

TokenSequence random_tokens(Rng& rng, std::size_t n) {
  TokenSequence seq;
  for (std::size_t i = 0; i < n; ++i) seq.tokens.push_back("w" + std::to_string(rng.below(25)));
  return seq;
}

}  // namespace

TEST(IntegratedGradients, LinearModelIsExactAtAnyStepCount) {
  Network net = model(1, false, 0);
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const DocInput doc = embedding_doc(rng, 6);
    const Eigen::VectorXd x0 = random_matrix(rng, 6, 1).col(0);
    const int label = static_cast<int>(rng.below(4));
    // logit = w_k . (Wp^T h) + b_k, so dF/dh = Wp w_k everywhere.
    const Eigen::VectorXd w = net.params().fusion.wp * net.params().fusion.head_w.row(label).transpose();
    for (std::size_t steps : {2u, 7u, 50u}) {
      const auto fa = integrated_gradients_features(net, doc, label, steps, &x0);
      for (Eigen::Index i = 0; i < 6; ++i) {
        EXPECT_NEAR(fa.values[i], w[i] * (doc.embedding[i] - x0[i]), 1e-10);
      }
    }
  }
}

TEST(IntegratedGradients, InputEqualToBaselineGivesZero) {
  Network net = model(3, true, 0);
  Rng rng(4);
  const DocInput doc = embedding_doc(rng, 6);
  const auto fa = integrated_gradients_features(net, doc, 1, 20, &doc.embedding);
  EXPECT_TRUE(fa.values.isZero(0.0));
}

TEST(IntegratedGradients, CompletenessOnEmbeddingInputs) {
  Rng rng(5);
  for (int trial = 0; trial < 25; ++trial) {
    Network net = model(100 + static_cast<std::uint64_t>(trial), true, 0);
    const DocInput doc = embedding_doc(rng, 6);
    const int label = static_cast<int>(rng.below(4));
    const auto coarse = integrated_gradients(net, doc, label, 10);
    const auto fine = integrated_gradients(net, doc, label, 200);
    EXPECT_FALSE(fine.token_level);
    EXPECT_EQ(fine.token_scores.size(), 6u);
    EXPECT_LE(fine.completeness_gap, 1e-3 * std::abs(fine.logit - fine.baseline_logit) + 1e-6);
    EXPECT_LE(fine.completeness_gap, coarse.completeness_gap + 1e-15);
  }
}

TEST(IntegratedGradients, CompletenessOnHashedTokens) {
  Rng rng(6);
  const FeatureHasher hasher(64);
  const ChunkParams chunks{12, 6, 3};
  for (int trial = 0; trial < 25; ++trial) {
    Network net = model(200 + static_cast<std::uint64_t>(trial), true, 64);
    const TokenSequence seq = random_tokens(rng, 5 + rng.below(40));
    DocInput doc;
    doc.features = document_features(seq, chunks, hasher).pooled;
    const int label = static_cast<int>(rng.below(4));
    const auto fa = integrated_gradients_features(net, doc, label, 200);
    const auto r = integrated_gradients(net, doc, label, 200, &seq, &chunks, &hasher);
    EXPECT_TRUE(r.token_level);
    // Token scores redistribute the bucket attributions without loss.
    EXPECT_NEAR(r.total, fa.values.sum(), 1e-10);
    EXPECT_LE(r.completeness_gap, 1e-3 * std::abs(r.logit - r.baseline_logit) + 1e-6);
    const auto coarse = integrated_gradients(net, doc, label, 10, &seq, &chunks, &hasher);
    EXPECT_LE(r.completeness_gap, coarse.completeness_gap + 1e-15);
  }
}

TEST(IntegratedGradients, Preconditions) {
  Network net = model(7, true, 0);
  Rng rng(8);
  const DocInput doc = embedding_doc(rng, 6);
  EXPECT_THROW(integrated_gradients(net, doc, 0, 1), InputError);
  EXPECT_THROW(integrated_gradients(net, doc, 4, 10), InputError);
  net.mark_trained(false);
  EXPECT_THROW(integrated_gradients(net, doc, 0, 10), InputError);
}

TEST(TopTokens, Ordering) {
  AttributionResult r;
  r.token_scores = {{"a", 0.3}, {"b", -0.1}, {"c", 0.2}};
  const auto top = top_tokens(r, 2);
  ASSERT_EQ(top.size(), 2u);
  EXPECT_EQ(top[0].first, "a");
  EXPECT_EQ(top[1].first, "c");
  EXPECT_EQ(top_tokens(r, 10).size(), 3u);
  r.token_scores = {{"zeta", 0.0}, {"alpha", 0.0}, {"mid", 0.0}};
  const auto ties = top_tokens(r, 3);
  EXPECT_EQ(ties[0].first, "alpha");
  EXPECT_EQ(ties[1].first, "mid");
  EXPECT_EQ(ties[2].first, "zeta");
}
