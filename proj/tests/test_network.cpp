#include <gtest/gtest.h>

#include "clignet/network.hpp"
#include "gradcheck.hpp"
#include "test_util.hpp"

using namespace clignet;
using namespace clignet::testing;

namespace {

Eigen::MatrixXd naive_product(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      for (Eigen::Index t = 0; t < a.cols(); ++t) out(i, j) += a(i, t) * b(t, j);
    }
  }
  return out;
}

Eigen::MatrixXd relu(Eigen::MatrixXd m) { return m.cwiseMax(0.0); }

}  // namespace

TEST(Gcn, IdentityGraphPassesNonnegativeFeatures) {
  Rng rng(1);
  const Eigen::MatrixXd h0 = random_matrix(rng, 4, 5).cwiseAbs();
  GcnParams p{Eigen::MatrixXd::Identity(5, 5), Eigen::MatrixXd::Identity(5, 5), 0.3};
  const auto t = gcn_forward(Eigen::MatrixXd::Identity(4, 4), h0, p, Pass::inference, nullptr);
  EXPECT_EQ(t.h1, h0);
}

TEST(Gcn, ZeroFirstLayerGivesZeroOutput) {
  Rng rng(2);
  GcnParams p{Eigen::MatrixXd::Zero(3, 4), random_matrix(rng, 4, 2), 0.3};
  const auto t = gcn_forward(random_a_hat(rng, 5), random_matrix(rng, 5, 3), p, Pass::inference, nullptr);
  EXPECT_TRUE(t.h2.isZero(0.0));
}

TEST(Gcn, MatchesTripleLoopOracle) {
  Rng rng(3);
  const Eigen::MatrixXd a = random_a_hat(rng, 4);
  const Eigen::MatrixXd h0 = random_matrix(rng, 4, 6);
  GcnParams p{random_matrix(rng, 6, 5), random_matrix(rng, 5, 3), 0.3};
  const auto t = gcn_forward(a, h0, p, Pass::inference, nullptr);
  const Eigen::MatrixXd h1 = relu(naive_product(naive_product(a, h0), p.w0));
  const Eigen::MatrixXd h2 = relu(naive_product(naive_product(a, h1), p.w1));
  EXPECT_LE((t.h2 - h2).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Gcn, InvertedDropoutPreservesExpectation) {
  Rng rng(4);
  const Eigen::MatrixXd a = random_a_hat(rng, 3);
  const Eigen::MatrixXd h0 = random_matrix(rng, 3, 4).cwiseAbs();
  GcnParams p{random_matrix(rng, 4, 4).cwiseAbs(), random_matrix(rng, 4, 2).cwiseAbs(), 0.3};
  const auto eval = gcn_forward(a, h0, p, Pass::inference, nullptr);
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(3, 4);
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) {
    const auto t = gcn_forward(a, h0, p, Pass::train, &rng);
    mean += t.h1;
    for (Eigen::Index j = 0; j < t.mask1.size(); ++j) {
      const double m = t.mask1.data()[j];
      ASSERT_TRUE(m == 0.0 || std::abs(m - 1.0 / 0.7) < 1e-15);
    }
  }
  mean /= draws;
  for (Eigen::Index j = 0; j < mean.size(); ++j) {
    EXPECT_NEAR(mean.data()[j], eval.h1.data()[j], 0.02 * std::abs(eval.h1.data()[j]) + 1e-12);
  }
}

TEST(Gate, ZeroGateAveragesBranches) {
  Rng rng(5);
  FusionParams f{random_matrix(rng, 4, 3), Eigen::MatrixXd::Zero(2, 6), random_matrix(rng, 2, 3),
                 Eigen::VectorXd::Zero(2)};
  const Eigen::VectorXd h = random_matrix(rng, 4, 1).col(0);
  const Eigen::MatrixXd h2 = random_matrix(rng, 2, 3);
  const auto g = gate_fuse(h, h2, f);
  const Eigen::VectorXd hp = f.wp.transpose() * h;
  for (Eigen::Index k = 0; k < 2; ++k) {
    EXPECT_DOUBLE_EQ(g.alpha[k], 0.5);
    EXPECT_LE((g.z.row(k).transpose() - 0.5 * (hp + h2.row(k).transpose())).norm(), 1e-15);
  }
}

TEST(Gate, SaturatedGateSelectsDocumentBranch) {
  FusionParams f{Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Zero(1, 4), Eigen::MatrixXd::Zero(1, 2),
                 Eigen::VectorXd::Zero(1)};
  f.gates(0, 0) = 30.0;  // pre-activation 30 with h_proj = (1, 0)
  const auto g = gate_fuse(Eigen::Vector2d(1.0, 0.0), Eigen::RowVector2d(-4.0, 7.0), f);
  EXPECT_NEAR(g.gate_pre[0], 30.0, 1e-12);
  EXPECT_NEAR(g.z(0, 0), 1.0, 1e-11);
  EXPECT_NEAR(g.z(0, 1), 0.0, 1e-11);
}

TEST(Gate, ConvexCombinationOracleAndRange) {
  Rng rng(6);
  FusionParams f{random_matrix(rng, 5, 3), random_matrix(rng, 4, 6), random_matrix(rng, 4, 3),
                 random_matrix(rng, 4, 1).col(0)};
  const Eigen::VectorXd h = random_matrix(rng, 5, 1).col(0);
  const Eigen::MatrixXd h2 = random_matrix(rng, 4, 3);
  const auto g = gate_fuse(h, h2, f);
  const Eigen::VectorXd hp = f.wp.transpose() * h;
  for (Eigen::Index k = 0; k < 4; ++k) {
    double pre = 0.0;
    for (Eigen::Index j = 0; j < 3; ++j) pre += f.gates(k, j) * hp[j] + f.gates(k, 3 + j) * h2(k, j);
    const double a = 1.0 / (1.0 + std::exp(-pre));
    ASSERT_GT(g.alpha[k], 0.0);
    ASSERT_LT(g.alpha[k], 1.0);
    for (Eigen::Index j = 0; j < 3; ++j) {
      const double expect = a * hp[j] + (1.0 - a) * h2(k, j);
      EXPECT_NEAR(g.z(k, j), expect, 1e-12);
      EXPECT_GE(g.z(k, j), std::min(hp[j], h2(k, j)) - 1e-12);
      EXPECT_LE(g.z(k, j), std::max(hp[j], h2(k, j)) + 1e-12);
    }
  }
}

TEST(Head, ZeroHeadGivesHalfProbability) {
  FusionParams f{Eigen::MatrixXd(), Eigen::MatrixXd(), Eigen::MatrixXd::Zero(3, 2), Eigen::VectorXd::Zero(3)};
  const auto logits = head_logits(Eigen::MatrixXd::Ones(3, 2), f);
  for (Eigen::Index k = 0; k < 3; ++k) EXPECT_DOUBLE_EQ(sigmoid(logits[k]), 0.5);
}

TEST(Head, HandDotProduct) {
  FusionParams f{Eigen::MatrixXd(), Eigen::MatrixXd(), Eigen::MatrixXd::Zero(1, 3), Eigen::VectorXd::Ones(1)};
  f.head_w(0, 0) = 1.0;
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(1, 3);
  z(0, 0) = 1.0;
  EXPECT_DOUBLE_EQ(head_logits(z, f)[0], 2.0);
}

TEST(Network, BatchRowsMatchPerDocumentRecomputation) {
  Rng rng(7);
  NetworkConfig cfg{4, 5, 3, 6, 0.3, true};
  Network net(cfg, random_a_hat(rng, 6), random_matrix(rng, 6, 4));
  net.initialize(rng, 0);
  randomize(net.params(), rng);
  std::vector<DocInput> docs(3);
  for (auto& d : docs) d.embedding = random_matrix(rng, 4, 1).col(0);
  const auto batch = net.forward(docs, Pass::inference);
  ASSERT_EQ(batch.logits.rows(), 3);
  ASSERT_EQ(batch.logits.cols(), 6);
  EXPECT_FALSE(batch.trace.has_value());
  const auto t = gcn_forward(net.a_hat(), net.node_features(), net.params().gcn, Pass::inference, nullptr);
  for (std::size_t n = 0; n < 3; ++n) {
    const auto g = gate_fuse(docs[n].embedding, t.h2, net.params().fusion);
    const Eigen::VectorXd expect = head_logits(g.z, net.params().fusion);
    EXPECT_LE((batch.logits.row(static_cast<Eigen::Index>(n)).transpose() - expect).norm(), 1e-12);
  }
  const auto again = net.forward(docs, Pass::inference);
  EXPECT_EQ(again.logits, batch.logits);
}

TEST(Network, ZeroUpstreamGivesZeroGradients) {
  Rng rng(8);
  NetworkConfig cfg{4, 5, 3, 3, 0.3, true};
  Network net(cfg, random_a_hat(rng, 3), random_matrix(rng, 3, 4));
  net.initialize(rng, 16);
  randomize(net.params(), rng);
  std::vector<DocInput> docs(2);
  docs[0].features = SparseVector{{1, 5}, {0.5, -0.3}};
  docs[1].features = SparseVector{{2}, {1.0}};
  const auto fwd = net.forward(docs, Pass::differentiate);
  const auto back = net.backward(docs, fwd, Eigen::MatrixXd::Zero(2, 3));
  EXPECT_EQ(back.grads.squared_norm(), 0.0);
}

TEST(Network, BackwardWithoutTraceFails) {
  Rng rng(9);
  NetworkConfig cfg{2, 2, 2, 2, 0.3, true};
  Network net(cfg, Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Ones(2, 2));
  net.initialize(rng, 0);
  std::vector<DocInput> docs(1);
  docs[0].embedding = Eigen::VectorXd::Ones(2);
  const auto fwd = net.forward(docs, Pass::inference);
  EXPECT_THROW(net.backward(docs, fwd, Eigen::MatrixXd::Zero(1, 2)), std::logic_error);
}

TEST(Network, TwoNodeSingleLabelGradientCheck) {
  GradCase c;
  c.k = 2;
  c.d_enc = c.d1 = c.d2 = 2;
  c.batch = 1;
  c.hashed = false;
  const auto r = run_gradcheck(c, 11);
  for (const auto& [name, err] : r.block_error) EXPECT_LE(err, 1e-4) << name;
}

TEST(Network, GradientSuiteAcrossConfigurations) {
  const auto cases = gradcheck_cases();
  ASSERT_GE(cases.size(), 20u);
  std::uint64_t seed = 100;
  for (const auto& c : cases) {
    const auto r = run_gradcheck(c, seed++);
    for (const auto& [name, err] : r.block_error) {
      EXPECT_LE(err, 1e-4) << name << " K=" << c.k << " d=" << c.d_enc << " gcn=" << c.use_gcn;
    }
  }
}

TEST(Network, InitializationShapes) {
  Rng rng(12);
  NetworkConfig cfg{6, 5, 4, 3, 0.3, true};
  Network net(cfg, Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd::Zero(3, 6));
  net.initialize(rng, 32);
  net.validate();
  EXPECT_TRUE(net.params().fusion.gates.isZero(0.0));
  EXPECT_TRUE(net.params().fusion.head_w.isZero(0.0));
  EXPECT_EQ(net.params().projection.cols(), 32);
  EXPECT_LE(net.params().gcn.w0.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 6.0));
  // Head bias is the only block exempt from decay.
  for (auto& b : net.params().blocks()) EXPECT_EQ(b.decay, b.name != "fusion.head_b") << b.name;
}
